#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "snnrfi/errors.hpp"
#include "snnrfi/generator.hpp"
#include "snnrfi/hpo.hpp"
#include "snnrfi/lif.hpp"
#include "snnrfi/metrics.hpp"
#include "snnrfi/pipeline.hpp"

namespace py = pybind11;
using namespace snnrfi;

namespace {

template <typename T>
py::array_t<T> to_numpy(const Grid<T>& g) {
    py::array_t<T> out({g.rows(), g.cols()});
    std::memcpy(out.mutable_data(), g.data().data(), g.size() * sizeof(T));
    return out;
}

template <typename T>
Grid<T> from_numpy(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
    Grid<T> g(a.shape(0), a.shape(1));
    std::memcpy(g.data().data(), a.data(), g.size() * sizeof(T));
    return g;
}

// Spikes as [T*E, channels], one row per simulation step.
py::array_t<std::uint8_t> spikes_to_numpy(const SpikeTrain& s) {
    py::array_t<std::uint8_t> out({s.steps(), s.channels()});
    std::memcpy(out.mutable_data(), s.data().data(), s.data().size());
    return out;
}

SpikeTrain spikes_from_numpy(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a,
                             std::size_t exposure) {
    if (a.ndim() != 2 || exposure == 0 || a.shape(0) % exposure != 0) {
        throw ShapeError("spikes must be [T*E, channels] with T*E divisible by E");
    }
    SpikeTrain s(a.shape(1), a.shape(0) / exposure, exposure);
    const auto* p = a.data();
    for (std::size_t n = 0; n < s.steps(); ++n) {
        auto step = s.step(n);
        for (std::size_t c = 0; c < step.size(); ++c) step[c] = p[n * step.size() + c] ? 1 : 0;
    }
    return s;
}

py::dict record_dict(const EvalRecord& r) {
    py::dict d;
    d["accuracy"] = r.accuracy;
    d["auroc"] = r.auroc ? py::cast(*r.auroc) : py::none();
    d["auprc"] = r.auprc ? py::cast(*r.auprc) : py::none();
    d["f1"] = r.f1;
    d["n_pixels"] = r.n_pixels;
    return d;
}

py::list split_list(const std::vector<LabelledSpectrogram>& items) {
    py::list out;
    for (const auto& it : items) out.append(py::make_tuple(to_numpy(it.spectrogram.values), to_numpy(it.mask.flags)));
    return out;
}

EncodingConfig make_encoding(const std::string& method, int exposure, std::uint64_t seed) {
    EncodingConfig cfg;
    cfg.method = parse_encoding_method(method);
    cfg.exposure = exposure;
    cfg.rng_seed = seed;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spiking-network RFI flagging: encoders, LIF network, training and metrics";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<UndefinedMetric>(m, "UndefinedMetric", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);

    py::class_<GeneratorConfig>(m, "GeneratorConfig")
        .def(py::init<>())
        .def_readwrite("n_train", &GeneratorConfig::n_train)
        .def_readwrite("n_test", &GeneratorConfig::n_test)
        .def_readwrite("freq_channels", &GeneratorConfig::freq_channels)
        .def_readwrite("time_steps", &GeneratorConfig::time_steps)
        .def_readwrite("background_gradient_range", &GeneratorConfig::background_gradient_range)
        .def_readwrite("noise_sigma", &GeneratorConfig::noise_sigma)
        .def_readwrite("amplitude_median", &GeneratorConfig::amplitude_median)
        .def_readwrite("amplitude_log_sigma", &GeneratorConfig::amplitude_log_sigma)
        .def_readwrite("target_contamination", &GeneratorConfig::target_contamination)
        .def_readwrite("contamination_tolerance", &GeneratorConfig::contamination_tolerance)
        .def_readwrite("seed", &GeneratorConfig::seed);

    m.def(
        "generate",
        [](const GeneratorConfig& cfg) {
            const Dataset ds = generate_dataset(cfg);
            py::dict d;
            d["train"] = split_list(ds.train);
            d["test"] = split_list(ds.test);
            d["contamination"] = ds.manifest.contamination_fraction;
            return d;
        },
        py::arg("config") = GeneratorConfig{},
        "Synthetic dataset as {'train': [(values, mask)], 'test': [...], 'contamination': float}.");

    m.def(
        "normalize",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& values) {
            Spectrogram s;
            s.values = from_numpy<float>(values);
            return to_numpy(normalize(s).values);
        },
        py::arg("values"));

    m.def("encoding_methods", [] {
        std::vector<std::string> out;
        for (auto e : all_encoding_methods()) out.emplace_back(to_string(e));
        return out;
    });

    m.def(
        "encode",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& values, const std::string& method,
           int exposure, std::uint64_t seed) {
            return spikes_to_numpy(encode_input(from_numpy<float>(values), make_encoding(method, exposure, seed)));
        },
        py::arg("values"), py::arg("method") = "latency", py::arg("exposure") = 6, py::arg("seed") = 0,
        "Encodes normalised [channels, T] values; returns spikes as [T*E, input channels].");

    m.def(
        "encode_target",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask, const std::string& method,
           int exposure) {
            const auto cfg = make_encoding(method, exposure, 0);
            return spikes_to_numpy(encode_target(from_numpy<std::uint8_t>(mask), cfg).spikes);
        },
        py::arg("mask"), py::arg("method") = "latency", py::arg("exposure") = 6);

    m.def(
        "decode",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& spikes,
           const std::string& method, int exposure) {
            const auto cfg = make_encoding(method, exposure, 0);
            const auto s = spikes_from_numpy(spikes, static_cast<std::size_t>(cfg.effective_exposure()));
            const Decoded d = decode_output(s, cfg);
            return py::make_tuple(to_numpy(d.flags), to_numpy(d.scores));
        },
        py::arg("spikes"), py::arg("method") = "latency", py::arg("exposure") = 6,
        "Returns (flags, scores), each [pixel channels, T].");

    m.def(
        "lif_step",
        [](double u, double current, double beta, double threshold) {
            const auto o = lif_step(u, current, beta, threshold);
            return py::make_tuple(o.spike, o.membrane);
        },
        py::arg("u"), py::arg("current"), py::arg("beta"), py::arg("threshold") = 1.0);

    py::class_<Network>(m, "Network")
        .def(py::init([](const std::string& method, double beta, std::uint64_t seed) {
                 return Network::initialized(NetworkConfig::for_method(parse_encoding_method(method), beta, 32), seed);
             }),
             py::arg("method") = "latency", py::arg("beta") = 0.727, py::arg("seed") = 0)
        .def_property_readonly("input_width", [](const Network& n) { return n.config().input_width; })
        .def_property_readonly("hidden_width", [](const Network& n) { return n.config().hidden_width; })
        .def_property_readonly("output_width", [](const Network& n) { return n.config().output_width; })
        .def_property_readonly("parameter_count", &Network::parameter_count)
        .def(
            "forward",
            [](const Network& n, const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& spikes,
               std::size_t exposure) { return spikes_to_numpy(forward(n, spikes_from_numpy(spikes, exposure))); },
            py::arg("spikes"), py::arg("exposure"))
        .def("save", [](const Network& n, const std::string& path) { save_checkpoint(path, n, CheckpointInfo{}); })
        .def_static("load", [](const std::string& path) { return load_checkpoint(path); });

    m.def(
        "run_experiment",
        [](const GeneratorConfig& gen, const std::string& method, int batch_size, int epochs, double beta,
           int exposure, std::uint64_t seed, double lr) {
            const Dataset ds = generate_dataset(gen);
            ExperimentParams p = ExperimentParams::for_method(method);
            p.batch_size = batch_size;
            p.epochs = epochs;
            p.beta = beta;
            p.exposure = exposure;
            RunOptions o;
            o.initial_lr = lr;
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(ds, p, seed, o);
            }
            py::dict d = record_dict(r.metrics);
            d["epochs_trained"] = r.history.epochs.size();
            d["best_epoch"] = r.history.best_epoch;
            return py::make_tuple(std::move(r.network), d);
        },
        py::arg("generator"), py::arg("method") = "latency", py::arg("batch_size") = 36, py::arg("epochs") = 44,
        py::arg("beta") = 0.727, py::arg("exposure") = 6, py::arg("seed") = 0, py::arg("lr") = RunOptions{}.initial_lr,
        "Generates the dataset, trains and evaluates. Returns (network, metrics dict).");

    m.def(
        "evaluate",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& pred,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& scores,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& truth) {
            if (pred.size() != scores.size() || pred.size() != truth.size()) throw ShapeError("length mismatch");
            const auto n = static_cast<std::size_t>(pred.size());
            return record_dict(evaluate_pixels({pred.data(), n}, {scores.data(), n}, {truth.data(), n}));
        },
        py::arg("pred"), py::arg("scores"), py::arg("truth"));

    m.def(
        "auroc",
        [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) { return auroc(scores, labels); },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "auprc",
        [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) { return auprc(scores, labels); },
        py::arg("scores"), py::arg("labels"));

    m.def(
        "sample_trial",
        [](std::uint64_t master_seed, std::size_t index, const std::string& method) {
            const ExperimentParams p = sample_trial(master_seed, index, method);
            py::dict d;
            d["batch_size"] = p.batch_size;
            d["epochs"] = p.epochs;
            d["beta"] = p.beta;
            d["exposure"] = p.model == ModelKind::snn && p.encoding != EncodingMethod::delta ? py::cast(p.exposure)
                                                                                              : py::none();
            return d;
        },
        py::arg("master_seed"), py::arg("index"), py::arg("method") = "latency");

    m.def(
        "pareto_front",
        [](const std::vector<std::array<double, 4>>& metrics) {
            std::vector<TrialRecord> trials;
            for (std::size_t i = 0; i < metrics.size(); ++i) {
                TrialRecord t;
                t.index = i;
                t.metrics = EvalRecord{metrics[i][0], metrics[i][1], metrics[i][2], metrics[i][3], 0};
                trials.push_back(t);
            }
            const Selection s = select_best(trials);
            return py::make_tuple(std::vector<std::size_t>(s.champions.begin(), s.champions.end()), s.pareto_front);
        },
        py::arg("metrics"),
        "Rows of (accuracy, auroc, auprc, f1). Returns (champion per metric, front indices).");

    m.def(
        "describe",
        [](const std::vector<double>& values) {
            const MetricStats s = describe(values);
            return py::make_tuple(s.mean, s.std);
        },
        py::arg("values"), "(mean, sample std)");
}
