#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "xaibench/attribution.hpp"
#include "xaibench/error.hpp"
#include "xaibench/saliency_map.hpp"
#include "xaibench/scene.hpp"

namespace xaibench {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kManifestFileName = "manifest.json";

class DatasetError : public IoError {
 public:
  using IoError::IoError;
};
class MissingFileError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class ChecksumError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class SchemaError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

struct SizeRange {
  int min = 8;
  int max = 16;
  friend bool operator==(const SizeRange&, const SizeRange&) = default;
};

struct GenConfig {
  DatasetKind dataset_kind = DatasetKind::Shape;
  int n_train = 0;
  int n_val = 10;
  int width = 128;
  int height = 128;
  SizeRange circle_size{8, 16};
  SizeRange square_size{8, 16};
  SizeRange cross_size{10, 18};
  /// One intensity for Shape datasets, three classes for Color datasets.
  std::vector<int> intensity_catalog{255};
  int max_place_attempts = 200;
  int max_scene_resamples = 1000;
  std::uint64_t master_seed = 0;

  static GenConfig defaults(DatasetKind kind);
  SizeRange size_range(ShapeKind shape) const;
  std::vector<PatternDescriptor> pattern_catalog() const;
  /// Throws InvalidArgument when the configuration cannot produce scenes.
  void validate() const;
  friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

/// Seed of sample `index` under `master_seed`.
std::uint64_t sample_seed(std::uint64_t master_seed, std::uint64_t index);

/// Draws one scene: per-pattern counts uniform on {0,1,2} (all-zero redrawn),
/// uniform sizes and positions, rejection placement against `overlaps`.
Scene sample_scene(DatasetKind kind, const GenConfig& config, std::uint64_t seed);

struct SampleRecord {
  int id = 0;
  std::string split;  // "train" or "val"
  std::string image;  // relative to the dataset root
  std::string image_sha256;
  Scene scene;
  std::array<double, 3> labels{};       // indexed by FunctionKind
  std::array<std::string, 3> gt_maps;   // relative paths, indexed by FunctionKind
  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  GenConfig config;
  std::vector<SampleRecord> samples;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const GenConfig& config);
GenConfig config_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);

/// Writes images/, gt/ and manifest.json under `out_dir`. On failure every
/// file written by this call is removed before the error propagates.
DatasetManifest generate_dataset(const GenConfig& config, const std::filesystem::path& out_dir);

struct LoadedSample {
  int id = 0;
  std::string split;
  Image image;
  Scene scene;
  std::array<double, 3> labels{};
  std::array<SaliencyMap, 3> gt_maps;
};

/// Read access to a generated dataset. Every load verifies the image checksum.
class Dataset {
 public:
  /// `path` is the dataset directory or its manifest file.
  static Dataset open(const std::filesystem::path& path);

  const DatasetManifest& manifest() const { return manifest_; }
  const std::filesystem::path& root() const { return root_; }
  std::size_t size() const { return manifest_.samples.size(); }
  LoadedSample load(std::size_t index) const;

  class iterator {
   public:
    using value_type = LoadedSample;
    using difference_type = std::ptrdiff_t;
    iterator(const Dataset* ds, std::size_t pos) : ds_(ds), pos_(pos) {}
    LoadedSample operator*() const { return ds_->load(pos_); }
    iterator& operator++() {
      ++pos_;
      return *this;
    }
    bool operator==(const iterator& other) const { return pos_ == other.pos_; }

   private:
    const Dataset* ds_;
    std::size_t pos_;
  };
  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, size()}; }

 private:
  DatasetManifest manifest_;
  std::filesystem::path root_;
};

}  // namespace xaibench
