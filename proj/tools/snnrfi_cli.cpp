// snnrfi: generate data, encode, train, evaluate, search and report.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "snnrfi/errors.hpp"
#include "snnrfi/generator.hpp"
#include "snnrfi/hpo.hpp"
#include "snnrfi/pipeline.hpp"

namespace fs = std::filesystem;
using namespace snnrfi;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Resolved configuration (defaults included) in the same format --config
/// accepts, so a run can be replayed from it.
void write_run_manifest(const CLI::App& sub, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write run manifest " + path.string());
    out << "# snnrfi run manifest\n";
    out << "# tool_version = " << kVersion << "\n";
    out << "[" << sub.get_name() << "]\n";
    out << sub.config_to_str(true, false);
    if (!out) throw DataError("write failed for " + path.string());
}

fs::path manifest_path_for(const fs::path& data) {
    return fs::is_directory(data) ? data / "manifest.txt" : data;
}

std::string fmt(const std::optional<double>& v) {
    if (!v) return "NA";
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
}

void print_record(std::ostream& out, const EvalRecord& r) {
    out << "accuracy " << fmt(r.accuracy) << "  auroc " << fmt(r.auroc) << "  auprc " << fmt(r.auprc) << "  f1 "
        << fmt(r.f1) << "  pixels " << r.n_pixels << "\n";
}

void append_metric_row(const fs::path& path, const std::string& method, std::uint64_t seed, const EvalRecord& r) {
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot append to " + path.string());
    if (fresh) out << metric_csv_header() << "\n";
    out << metric_csv_row(method, seed, r) << "\n";
}

/// Searched attributes shared by train and repeat.
struct ParamFlags {
    std::string method = "latency";
    int batch_size = 36;
    int epochs = 44;
    double beta = 0.727;
    int exposure = 6;

    void add(CLI::App* cmd) {
        cmd->add_option("--method", method, "latency|rate|delta|sf-first|sf-direct|sf-latency|ann")
            ->capture_default_str();
        cmd->add_option("--batch-size", batch_size)->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--epochs", epochs)->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--beta", beta)->capture_default_str();
        cmd->add_option("--exposure", exposure)->capture_default_str()->check(CLI::PositiveNumber);
    }
    ExperimentParams params() const {
        ExperimentParams p;
        try {
            p = ExperimentParams::for_method(method);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        p.batch_size = batch_size;
        p.epochs = epochs;
        p.beta = beta;
        p.exposure = exposure;
        return p;
    }
};

struct OptionFlags {
    RunOptions o;
    void add(CLI::App* cmd) {
        cmd->add_option("--lr", o.initial_lr, "initial learning rate")->capture_default_str();
        cmd->add_option("--lr-patience", o.lr_patience)->capture_default_str();
        cmd->add_option("--stop-patience", o.stop_patience)->capture_default_str();
        cmd->add_option("--val-fraction", o.validation_fraction)->capture_default_str();
        cmd->add_option("--epoch-cap", o.epoch_cap, "0 = no cap")->capture_default_str();
        cmd->add_option("--max-train-patches", o.max_train_patches, "0 = all")->capture_default_str();
    }
};

int run(int argc, char** argv) {
    CLI::App app{"Spiking-network RFI flagging toolkit"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "optional config file; command-line flags take precedence");
    app.require_subcommand(1);
    fs::path run_manifest;
    app.add_option("--run-manifest", run_manifest, "where to record the resolved run configuration");

    // generate
    GeneratorConfig gen;
    fs::path gen_out;
    double bg_lo = gen.background_gradient_range.first, bg_hi = gen.background_gradient_range.second;
    auto* generate = app.add_subcommand("generate", "write a synthetic labelled dataset");
    generate->add_option("--out", gen_out, "output directory")->required();
    generate->add_option("--seed", gen.seed)->capture_default_str();
    generate->add_option("--n-train", gen.n_train)->capture_default_str();
    generate->add_option("--n-test", gen.n_test)->capture_default_str();
    generate->add_option("--freq-channels", gen.freq_channels)->capture_default_str();
    generate->add_option("--time-steps", gen.time_steps)->capture_default_str();
    generate->add_option("--target-contamination", gen.target_contamination)->capture_default_str();
    generate->add_option("--tolerance", gen.contamination_tolerance)->capture_default_str();
    generate->add_option("--noise-sigma", gen.noise_sigma)->capture_default_str();
    generate->add_option("--background-min", bg_lo)->capture_default_str();
    generate->add_option("--background-max", bg_hi)->capture_default_str();
    generate->add_option("--amplitude-median", gen.amplitude_median)->capture_default_str();
    generate->add_option("--amplitude-log-sigma", gen.amplitude_log_sigma)->capture_default_str();
    generate->add_option("--rate-persistent", gen.rfi_rates.narrowband_persistent)->capture_default_str();
    generate->add_option("--rate-broadband", gen.rfi_rates.broadband_transient)->capture_default_str();
    generate->add_option("--rate-transient", gen.rfi_rates.narrowband_transient)->capture_default_str();
    generate->add_option("--rate-blip", gen.rfi_rates.blip)->capture_default_str();
    generate->add_option("--max-retries", gen.max_retries)->capture_default_str();

    // encode
    auto* encode = app.add_subcommand("encode", "encode one patch into spikes and/or a raster image");
    fs::path enc_data, enc_spec, enc_raster, enc_out;
    std::string enc_split = "train", enc_method = "latency";
    std::size_t enc_item = 0, enc_patch = 0, enc_patch_size = 32;
    int enc_exposure = 6;
    std::uint64_t enc_seed = 0;
    auto* enc_data_opt = encode->add_option("--data", enc_data, "dataset directory or manifest");
    encode->add_option("--spectrogram", enc_spec, "spectrogram header (instead of --data)")->excludes(enc_data_opt);
    encode->add_option("--split", enc_split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
    encode->add_option("--item", enc_item)->capture_default_str();
    encode->add_option("--patch", enc_patch, "patch index in tiling order")->capture_default_str();
    encode->add_option("--patch-size", enc_patch_size)->capture_default_str();
    encode->add_option("--method", enc_method)->capture_default_str();
    encode->add_option("--exposure", enc_exposure)->capture_default_str();
    encode->add_option("--seed", enc_seed, "rate-coding seed")->capture_default_str();
    encode->add_option("--raster", enc_raster, "write a PGM raster (rows = channels, columns = T*E)");
    encode->add_option("--out", enc_out, "write the spike train as a u8 tensor stem");

    // train
    auto* train_cmd = app.add_subcommand("train", "train on the training split");
    fs::path tr_data, tr_ckpt, tr_history;
    std::uint64_t tr_seed = 0;
    ParamFlags tr_params;
    OptionFlags tr_opts;
    train_cmd->add_option("--data", tr_data, "dataset directory or manifest")->required();
    train_cmd->add_option("--checkpoint", tr_ckpt)->required();
    train_cmd->add_option("--history", tr_history, "per-epoch CSV");
    train_cmd->add_option("--seed", tr_seed)->capture_default_str();
    tr_params.add(train_cmd);
    tr_opts.add(train_cmd);

    // eval
    auto* eval = app.add_subcommand("eval", "score a checkpoint (or the silent predictor) on a split");
    fs::path ev_data, ev_ckpt, ev_csv;
    std::string ev_split = "test", ev_label;
    bool ev_silent = false;
    std::size_t ev_patch_size = 32;
    std::uint64_t ev_seed = 0;
    eval->add_option("--data", ev_data)->required();
    auto* ckpt_opt = eval->add_option("--checkpoint", ev_ckpt);
    eval->add_flag("--silent", ev_silent, "score an all-false predictor")->excludes(ckpt_opt);
    eval->add_option("--split", ev_split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
    eval->add_option("--metrics-csv", ev_csv, "append a metric row here");
    eval->add_option("--label", ev_label, "method column (default from checkpoint)");
    eval->add_option("--seed", ev_seed, "rate-coding seed / seed column")->capture_default_str();
    eval->add_option("--patch-size", ev_patch_size)->capture_default_str();

    // search
    auto* search = app.add_subcommand("search", "random hyperparameter search");
    fs::path se_data;
    SearchConfig se;
    se.record_path = "trials.jsonl";
    search->add_option("--data", se_data)->required();
    search->add_option("--method", se.method)->capture_default_str();
    search->add_option("--trials", se.n_trials)->capture_default_str();
    search->add_option("--seed", se.master_seed)->capture_default_str();
    search->add_option("--records", se.record_path, "JSON-lines trial store (resumed if present)")
        ->capture_default_str();
    search->add_option("--workers", se.workers, "0 = SNNRFI_WORKERS or 1")->capture_default_str();
    search->add_option("--exposure-min", se.ranges.exposure_min)->capture_default_str();
    search->add_option("--exposure-max", se.ranges.exposure_max)->capture_default_str();
    search->add_option("--epochs-min", se.ranges.epochs_min)->capture_default_str();
    search->add_option("--epochs-max", se.ranges.epochs_max)->capture_default_str();
    search->add_option("--batch-min", se.ranges.batch_min)->capture_default_str();
    search->add_option("--batch-max", se.ranges.batch_max)->capture_default_str();
    OptionFlags se_opts;
    se_opts.add(search);

    // repeat
    auto* repeat = app.add_subcommand("repeat", "repeated train+eval runs of fixed parameters");
    fs::path rp_data, rp_csv, rp_records;
    std::string rp_champion = "f1";
    std::size_t rp_n = 5;
    std::uint64_t rp_seed = 0;
    unsigned rp_workers = 0;
    ParamFlags rp_params;
    OptionFlags rp_opts;
    repeat->add_option("--data", rp_data)->required();
    repeat->add_option("-n,--repeats", rp_n)->capture_default_str()->check(CLI::PositiveNumber);
    repeat->add_option("--seed", rp_seed, "first seed; run i uses seed + i")->capture_default_str();
    repeat->add_option("--workers", rp_workers)->capture_default_str();
    repeat->add_option("--metrics-csv", rp_csv, "append one row per run");
    repeat->add_option("--from-records", rp_records, "take parameters from a search champion");
    repeat->add_option("--champion", rp_champion)
        ->check(CLI::IsMember({"accuracy", "auroc", "auprc", "f1"}))
        ->capture_default_str();
    rp_params.add(repeat);
    rp_opts.add(repeat);

    // report
    auto* report = app.add_subcommand("report", "mean and std per method from metric CSV files");
    std::vector<fs::path> rep_inputs;
    fs::path rep_out;
    report->add_option("inputs", rep_inputs, "metric CSV files")->required()->check(CLI::ExistingFile);
    report->add_option("--out", rep_out, "also write the table here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    auto record_manifest = [&](const CLI::App* sub, const fs::path& fallback) {
        write_run_manifest(*sub, run_manifest.empty() ? fallback : run_manifest);
    };

    if (generate->parsed()) {
        gen.background_gradient_range = {bg_lo, bg_hi};
        gen.validate();
        record_manifest(generate, gen_out / "run_manifest.txt");
        const DatasetManifest m = generate_synthetic(gen, gen_out);
        std::cout << "wrote " << m.train_items.size() << " train / " << m.test_items.size() << " test spectrograms to "
                  << gen_out.string() << "\n";
        std::cout << "contamination " << std::fixed << std::setprecision(5) << m.contamination_fraction << " (target "
                  << gen.target_contamination << " +/- " << gen.contamination_tolerance << ")\n";
        return 0;
    }

    if (encode->parsed()) {
        EncodingConfig cfg;
        try {
            cfg.method = parse_encoding_method(enc_method);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        cfg.exposure = enc_exposure;
        cfg.rng_seed = enc_seed;
        cfg.validate();
        if (enc_raster.empty() && enc_out.empty()) throw UsageError("encode: give --raster and/or --out");
        if (enc_data.empty() && enc_spec.empty()) throw UsageError("encode: give --data or --spectrogram");
        record_manifest(encode, fs::path(enc_raster.empty() ? enc_out : enc_raster).string() + ".run_manifest.txt");

        Spectrogram spec;
        RFIMask mask;
        if (!enc_spec.empty()) {
            spec = load_spectrogram(enc_spec);
            mask.flags = Grid<std::uint8_t>(spec.values.rows(), spec.values.cols(), 0);
        } else {
            const Dataset ds = load_dataset(manifest_path_for(enc_data));
            const auto& items = enc_split == "train" ? ds.train : ds.test;
            if (enc_item >= items.size()) throw UsageError("encode: --item out of range");
            spec = items[enc_item].spectrogram;
            mask = items[enc_item].mask;
        }
        const auto patches = make_patches(normalize(spec), mask, enc_patch_size);
        if (enc_patch >= patches.size()) throw UsageError("encode: --patch out of range");
        const SpikeTrain spikes = encode_input(patches[enc_patch].values, cfg);
        if (!enc_raster.empty()) write_raster_pgm(enc_raster, spikes);
        if (!enc_out.empty()) {
            TensorMetadata meta;
            meta["method"] = std::string(to_string(cfg.method));
            meta["exposure"] = std::to_string(spikes.exposure());
            meta["layout"] = "channel x (time*exposure)";
            write_tensor(enc_out, raster_image(spikes), meta);
        }
        std::cout << "encoded " << spikes.channels() << " channels x " << spikes.time_steps() << " steps x "
                  << spikes.exposure() << " exposure, " << spikes.count() << " spikes\n";
        return 0;
    }

    if (train_cmd->parsed()) {
        const ExperimentParams p = tr_params.params();
        record_manifest(train_cmd, tr_ckpt.string() + ".run_manifest.txt");
        const Dataset ds = load_dataset(manifest_path_for(tr_data));
        const TrainedModel m = train_model(ds.train, p, tr_seed, tr_opts.o);
        CheckpointInfo info;
        info.model = p.model == ModelKind::ann ? "ann" : "snn";
        info.encoding = to_string(p.encoding);
        info.exposure = p.exposure;
        info.seed = tr_seed;
        info.epoch = m.history.best_epoch;
        info.train_seconds = m.history.seconds;
        if (tr_ckpt.has_parent_path()) fs::create_directories(tr_ckpt.parent_path());
        save_checkpoint(tr_ckpt, m.network, info);
        if (!tr_history.empty()) write_history_csv(tr_history, m.history);
        const auto& last = m.history.epochs.back();
        std::cout << "trained " << p.method_name() << " for " << m.history.epochs.size() << " epochs (best "
                  << m.history.best_epoch << ", last train loss " << last.train_loss << ", val loss "
                  << last.val_loss << ")\n";
        return 0;
    }

    if (eval->parsed()) {
        if (!ev_silent && ev_ckpt.empty()) throw UsageError("eval: give --checkpoint or --silent");
        record_manifest(eval, ev_csv.empty() ? fs::path("eval.run_manifest.txt")
                                             : fs::path(ev_csv.string() + ".run_manifest.txt"));
        const Dataset ds = load_dataset(manifest_path_for(ev_data));
        const auto& items = ev_split == "train" ? ds.train : ds.test;
        EvalRecord r;
        std::string label = ev_label;
        if (ev_silent) {
            r = evaluate_predictions(predict_silent(items), items);
            if (label.empty()) label = "silent";
        } else {
            CheckpointInfo info;
            const Network net = load_checkpoint(ev_ckpt, &info);
            ExperimentParams p = ExperimentParams::for_method(info.model == "ann" ? "ann" : info.encoding);
            p.exposure = info.exposure;
            p.beta = net.config().beta;
            r = evaluate_model(net, p, ev_seed, items, ev_patch_size);
            if (label.empty()) label = p.method_name();
        }
        print_record(std::cout, r);
        if (!ev_csv.empty()) append_metric_row(ev_csv, label, ev_seed, r);
        return 0;
    }

    if (search->parsed()) {
        se.options = se_opts.o;
        se.validate();
        record_manifest(search, se.record_path.string() + ".run_manifest.txt");
        const Dataset ds = load_dataset(manifest_path_for(se_data));
        const auto trials = run_search(ds, se);
        std::size_t failed = 0;
        for (const auto& t : trials) failed += !t.ok();
        std::cout << trials.size() << " trials (" << failed << " failed) in " << se.record_path.string() << "\n";
        const Selection sel = select_best(trials);
        for (Metric m : kAllMetrics) {
            const auto& t = trials[sel.champions[static_cast<std::size_t>(m)]];
            std::cout << "best " << to_string(m) << ": trial " << t.index << " batch " << t.params.batch_size
                      << " epochs " << t.params.epochs << " beta " << t.params.beta << " exposure "
                      << t.params.exposure << "  ";
            print_record(std::cout, *t.metrics);
        }
        std::cout << "pareto front:";
        for (std::size_t i : sel.pareto_front) std::cout << ' ' << trials[i].index;
        std::cout << "\n";
        return 0;
    }

    if (repeat->parsed()) {
        ExperimentParams p = rp_params.params();
        if (!rp_records.empty()) {
            const auto trials = read_trial_records(rp_records);
            const Selection sel = select_best(trials);
            std::size_t which = 0;
            for (Metric m : kAllMetrics)
                if (to_string(m) == rp_champion) which = sel.champions[static_cast<std::size_t>(m)];
            p = trials[which].params;
        }
        record_manifest(repeat, rp_csv.empty() ? fs::path("repeat.run_manifest.txt")
                                               : fs::path(rp_csv.string() + ".run_manifest.txt"));
        const Dataset ds = load_dataset(manifest_path_for(rp_data));
        const RepeatSummary s = repeat_eval(ds, p, rp_n, rp_seed, rp_opts.o, rp_workers);
        if (!rp_csv.empty()) {
            for (std::size_t i = 0; i < s.runs.size(); ++i) append_metric_row(rp_csv, s.method, s.seeds[i], s.runs[i]);
        }
        std::cout << s.method << ": " << s.runs.size() << " runs, " << s.failed << " failed\n";
        for (Metric m : kAllMetrics) {
            const MetricStats& st = s.stats[static_cast<std::size_t>(m)];
            std::cout << "  " << std::left << std::setw(9) << to_string(m) << fmt(st.mean) << " +/- " << fmt(st.std)
                      << "\n";
        }
        return 0;
    }

    if (report->parsed()) {
        std::vector<MetricRow> rows;
        for (const auto& in : rep_inputs) {
            auto r = read_metric_csv(in);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        const std::string table = report_csv(rows);
        std::cout << table;
        if (!rep_out.empty()) {
            record_manifest(report, rep_out.string() + ".run_manifest.txt");
            std::ofstream out(rep_out);
            out << table;
            if (!out) throw DataError("write failed for " + rep_out.string());
        }
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
