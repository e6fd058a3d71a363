#include "snnrfi/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kv_text.hpp"
#include "snnrfi/errors.hpp"

namespace fs = std::filesystem;

namespace snnrfi {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

const char* kTensorMagic = "# snnrfi tensor v1";
const char* kManifestMagic = "# snnrfi dataset manifest v1";

void put_le32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_header(const fs::path& stem, std::size_t rows, std::size_t cols, const char* dtype,
                  const TensorMetadata& meta) {
    std::ostringstream h;
    h << kTensorMagic << '\n'
      << "shape = " << rows << ' ' << cols << '\n'
      << "dtype = " << dtype << '\n'
      << "endianness = little\n"
      << "blob = " << stem.filename().string() << ".bin\n";
    for (const auto& [k, v] : meta) h << "meta." << k << " = " << v << '\n';
    write_file(fs::path(stem.string() + ".hdr"), h.str());
}

struct Header {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string dtype;
    fs::path blob;
    TensorMetadata meta;
};

Header read_header(const fs::path& header) {
    const std::string where = header.string();
    std::istringstream in(read_file(header));
    std::string first;
    std::getline(in, first);
    if (detail::trim(first) != kTensorMagic) throw FormatError(where + ": not a tensor header");
    const auto kv = detail::read_kv(in, where);

    Header h;
    std::istringstream shape(detail::require_kv(kv, "shape", where));
    if (!(shape >> h.rows >> h.cols) || h.rows == 0 || h.cols == 0) {
        throw FormatError(where + ": malformed shape");
    }
    h.dtype = detail::require_kv(kv, "dtype", where);
    if (detail::require_kv(kv, "endianness", where) != "little") {
        throw FormatError(where + ": only little-endian blobs are supported");
    }
    h.blob = header.parent_path() / detail::require_kv(kv, "blob", where);
    for (const auto& [k, v] : kv) {
        if (k.rfind("meta.", 0) == 0) h.meta[k.substr(5)] = v;
    }
    return h;
}

std::string read_blob(const Header& h, std::size_t elem_size, const fs::path& header) {
    std::string bytes;
    try {
        bytes = read_file(h.blob);
    } catch (const DataError&) {
        throw FormatError(header.string() + ": missing blob '" + h.blob.string() + "'");
    }
    const std::size_t expected = h.rows * h.cols * elem_size;
    if (bytes.size() != expected) {
        throw FormatError(h.blob.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(bytes.size()) + (bytes.size() < expected ? " (truncated)" : ""));
    }
    return bytes;
}

TensorMetadata spectrogram_meta(const Spectrogram& spec) {
    return {{"freq_start_mhz", detail::format_double(spec.freq_start_mhz)},
            {"freq_end_mhz", detail::format_double(spec.freq_end_mhz)},
            {"integration_seconds", detail::format_double(spec.integration_seconds)},
            {"baseline_id", std::to_string(spec.baseline_id)}};
}

fs::path resolve(const fs::path& base, const std::string& rel) {
    const fs::path p(rel);
    return p.is_absolute() ? p : base / p;
}

}  // namespace

void write_tensor(const fs::path& stem, const Grid<float>& grid, const TensorMetadata& meta) {
    std::string bytes;
    bytes.reserve(grid.size() * 4);
    for (float v : grid.data()) put_le32(bytes, std::bit_cast<std::uint32_t>(v));
    write_file(fs::path(stem.string() + ".bin"), bytes);
    write_header(stem, grid.rows(), grid.cols(), "f32", meta);
}

void write_tensor(const fs::path& stem, const Grid<std::uint8_t>& grid, const TensorMetadata& meta) {
    write_file(fs::path(stem.string() + ".bin"), std::string(grid.data().begin(), grid.data().end()));
    write_header(stem, grid.rows(), grid.cols(), "u8", meta);
}

Grid<float> read_tensor_f32(const fs::path& header, TensorMetadata* meta) {
    const Header h = read_header(header);
    if (h.dtype != "f32") throw FormatError(header.string() + ": expected dtype f32, found " + h.dtype);
    const std::string bytes = read_blob(h, 4, header);
    std::vector<float> values(h.rows * h.cols);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::bit_cast<float>(get_le32(p + 4 * i));
    if (meta) *meta = h.meta;
    return Grid<float>(h.rows, h.cols, std::move(values));
}

Grid<std::uint8_t> read_tensor_u8(const fs::path& header, TensorMetadata* meta) {
    const Header h = read_header(header);
    if (h.dtype != "u8") throw FormatError(header.string() + ": expected dtype u8, found " + h.dtype);
    const std::string bytes = read_blob(h, 1, header);
    if (meta) *meta = h.meta;
    return Grid<std::uint8_t>(h.rows, h.cols, std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
}

void save_spectrogram(const fs::path& stem, const Spectrogram& spec) {
    spec.validate();
    write_tensor(stem, spec.values, spectrogram_meta(spec));
}

Spectrogram load_spectrogram(const fs::path& header) {
    TensorMetadata meta;
    Spectrogram spec;
    spec.values = read_tensor_f32(header, &meta);
    const std::string where = header.string();
    auto get = [&](const char* key, double fallback) {
        const auto it = meta.find(key);
        return it == meta.end() ? fallback : detail::parse_double(it->second, where);
    };
    spec.freq_start_mhz = get("freq_start_mhz", spec.freq_start_mhz);
    spec.freq_end_mhz = get("freq_end_mhz", spec.freq_end_mhz);
    spec.integration_seconds = get("integration_seconds", spec.integration_seconds);
    if (const auto it = meta.find("baseline_id"); it != meta.end()) {
        spec.baseline_id = detail::parse_int(it->second, where);
    }
    try {
        spec.validate();
    } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
    }
    return spec;
}

void save_mask(const fs::path& stem, const RFIMask& mask) { write_tensor(stem, mask.flags); }

RFIMask load_mask(const fs::path& header) {
    RFIMask mask{read_tensor_u8(header)};
    for (auto& f : mask.flags.data()) {
        if (f > 1) throw FormatError(header.string() + ": mask entries must be 0 or 1");
    }
    return mask;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
    std::ostringstream out;
    out << kManifestMagic << '\n';
    if (m.generator_seed) out << "generator_seed = " << *m.generator_seed << '\n';
    out << "contamination_fraction = " << detail::format_double(m.contamination_fraction) << '\n';
    for (const auto& [k, v] : m.generator_config) out << "generator." << k << " = " << v << '\n';
    for (const auto& item : m.train_items) out << "train = " << item.spectrogram << ' ' << item.mask << '\n';
    for (const auto& item : m.test_items) out << "test = " << item.spectrogram << ' ' << item.mask << '\n';
    write_file(path, out.str());
}

DatasetManifest read_manifest(const fs::path& path) {
    const std::string where = path.string();
    std::istringstream in(read_file(path));
    std::string first;
    std::getline(in, first);
    if (detail::trim(first) != kManifestMagic) throw FormatError(where + ": not a dataset manifest");

    DatasetManifest m;
    for (const auto& [k, v] : detail::read_kv(in, where)) {
        if (k == "generator_seed") {
            m.generator_seed = static_cast<std::uint64_t>(detail::parse_int(v, where));
        } else if (k == "contamination_fraction") {
            m.contamination_fraction = detail::parse_double(v, where);
        } else if (k.rfind("generator.", 0) == 0) {
            m.generator_config[k.substr(10)] = v;
        } else if (k == "train" || k == "test") {
            std::istringstream parts(v);
            ManifestItem item;
            parts >> item.spectrogram >> item.mask;
            if (item.spectrogram.empty()) throw DataError(where + ": " + k + " entry without paths");
            if (item.mask.empty()) {
                throw DataError(where + ": " + k + " entry '" + item.spectrogram + "' has no mask path");
            }
            (k == "train" ? m.train_items : m.test_items).push_back(std::move(item));
        } else {
            throw FormatError(where + ": unknown key '" + k + "'");
        }
    }
    return m;
}

fs::path save_dataset(const fs::path& dir, Dataset& dataset) {
    auto write_split = [&](const char* split, const std::vector<LabelledSpectrogram>& items) {
        std::vector<ManifestItem> listed;
        fs::create_directories(dir / split);
        for (std::size_t i = 0; i < items.size(); ++i) {
            char idx[16];
            std::snprintf(idx, sizeof(idx), "%04zu", i);
            const std::string spec_stem = std::string(split) + "/spec_" + idx;
            const std::string mask_stem = std::string(split) + "/mask_" + idx;
            if (!items[i].mask.flags.same_shape(items[i].spectrogram.values)) {
                throw DataError(spec_stem + ": mask shape does not match spectrogram shape");
            }
            save_spectrogram(dir / spec_stem, items[i].spectrogram);
            save_mask(dir / mask_stem, items[i].mask);
            listed.push_back({spec_stem + ".hdr", mask_stem + ".hdr"});
        }
        return listed;
    };
    fs::create_directories(dir);
    dataset.manifest.train_items = write_split("train", dataset.train);
    dataset.manifest.test_items = write_split("test", dataset.test);
    if (!dataset.train.empty() || !dataset.test.empty()) {
        dataset.manifest.contamination_fraction = contamination_stats(dataset);
    }
    const fs::path manifest_path = dir / "manifest.txt";
    write_manifest(manifest_path, dataset.manifest);
    return manifest_path;
}

Dataset load_dataset(const fs::path& manifest_path) {
    Dataset ds;
    ds.manifest = read_manifest(manifest_path);
    const fs::path base = manifest_path.parent_path();
    auto load_split = [&](const std::vector<ManifestItem>& items, std::vector<LabelledSpectrogram>& out) {
        for (const auto& item : items) {
            const fs::path spec_path = resolve(base, item.spectrogram);
            const fs::path mask_path = resolve(base, item.mask);
            if (!fs::exists(spec_path)) throw DataError("missing spectrogram file '" + spec_path.string() + "'");
            if (!fs::exists(mask_path)) throw DataError("missing mask file '" + mask_path.string() + "'");
            LabelledSpectrogram ls{load_spectrogram(spec_path), load_mask(mask_path)};
            if (!ls.mask.flags.same_shape(ls.spectrogram.values)) {
                throw DataError("shape mismatch between '" + spec_path.string() + "' and '" +
                                mask_path.string() + "'");
            }
            out.push_back(std::move(ls));
        }
    };
    load_split(ds.manifest.train_items, ds.train);
    load_split(ds.manifest.test_items, ds.test);
    return ds;
}

double contamination_stats(const Dataset& dataset) {
    std::vector<RFIMask> masks;
    masks.reserve(dataset.train.size() + dataset.test.size());
    for (const auto& item : dataset.train) masks.push_back(item.mask);
    for (const auto& item : dataset.test) masks.push_back(item.mask);
    return contamination_stats(masks);
}

}  // namespace snnrfi
