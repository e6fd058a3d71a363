#pragma once

#include <stdexcept>
#include <string>

namespace snnrfi {

/// Input data failed validation (non-finite values, shape mismatches, bad manifests).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A file on disk does not follow the tensor/manifest/checkpoint format.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid encoder, network or search configuration.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Patches handed to stitch() overlap or leave holes.
class ConsistencyError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A threshold metric is not defined for the given labels (e.g. a single class).
class UndefinedMetric : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

}  // namespace snnrfi
