#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "snnrfi/data.hpp"

namespace snnrfi {

/// Free-form metadata stored alongside a tensor.
using TensorMetadata = std::map<std::string, std::string>;

/// Writes `<stem>.hdr` (text header) and `<stem>.bin` (raw little-endian
/// blob). The header's `blob` key names the blob relative to the header.
void write_tensor(const std::filesystem::path& stem, const Grid<float>& grid, const TensorMetadata& meta = {});
void write_tensor(const std::filesystem::path& stem, const Grid<std::uint8_t>& grid,
                  const TensorMetadata& meta = {});

/// Read a tensor given its header path. Throws FormatError naming the file
/// on malformed headers, dtype mismatches or truncated blobs.
Grid<float> read_tensor_f32(const std::filesystem::path& header, TensorMetadata* meta = nullptr);
Grid<std::uint8_t> read_tensor_u8(const std::filesystem::path& header, TensorMetadata* meta = nullptr);

void save_spectrogram(const std::filesystem::path& stem, const Spectrogram& spec);
Spectrogram load_spectrogram(const std::filesystem::path& header);
void save_mask(const std::filesystem::path& stem, const RFIMask& mask);
RFIMask load_mask(const std::filesystem::path& header);

struct ManifestItem {
    std::string spectrogram;  // header paths, relative to the manifest directory
    std::string mask;
};

struct DatasetManifest {
    std::vector<ManifestItem> train_items;
    std::vector<ManifestItem> test_items;
    std::optional<std::uint64_t> generator_seed;
    double contamination_fraction = 0.0;
    /// Generator configuration echoed into the manifest (key -> value).
    std::map<std::string, std::string> generator_config;
};

struct LabelledSpectrogram {
    Spectrogram spectrogram;
    RFIMask mask;
};

struct Dataset {
    std::vector<LabelledSpectrogram> train;
    std::vector<LabelledSpectrogram> test;
    DatasetManifest manifest;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes every item under `dir` (train/, test/) plus `dir/manifest.txt`,
/// refreshing the manifest's item lists and contamination fraction.
/// Returns the manifest path.
std::filesystem::path save_dataset(const std::filesystem::path& dir, Dataset& dataset);

/// Loads and validates every referenced file. Throws DataError on missing
/// files or spectrogram/mask shape mismatches.
Dataset load_dataset(const std::filesystem::path& manifest_path);

double contamination_stats(const Dataset& dataset);

}  // namespace snnrfi
