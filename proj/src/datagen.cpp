#include "xaibench/datagen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "xaibench/image_io.hpp"
#include "xaibench/rng.hpp"

namespace xaibench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSceneStream = 0x5C3E;

std::string sample_stem(const std::string& split, int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%06d", split.c_str(), id);
  return buf;
}

}  // namespace

GenConfig GenConfig::defaults(DatasetKind kind) {
  GenConfig config;
  config.dataset_kind = kind;
  config.intensity_catalog =
      kind == DatasetKind::Shape ? std::vector<int>{255} : std::vector<int>{85, 170, 255};
  return config;
}

SizeRange GenConfig::size_range(ShapeKind shape) const {
  switch (shape) {
    case ShapeKind::Circle: return circle_size;
    case ShapeKind::Square: return square_size;
    case ShapeKind::Cross: return cross_size;
  }
  return circle_size;
}

std::vector<PatternDescriptor> GenConfig::pattern_catalog() const {
  if (dataset_kind == DatasetKind::Shape) {
    const int intensity = intensity_catalog.empty() ? 255 : intensity_catalog.front();
    return {{ShapeKind::Circle, intensity}, {ShapeKind::Square, intensity}, {ShapeKind::Cross, intensity}};
  }
  std::vector<PatternDescriptor> out;
  for (int v : intensity_catalog) out.push_back({ShapeKind::Circle, v});
  return out;
}

void GenConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("invalid generator config: " + what); };
  if (width <= 0 || height <= 0) fail("non-positive image size");
  if (n_train < 0 || n_val < 0) fail("negative sample count");
  if (max_place_attempts < 1 || max_scene_resamples < 1) fail("attempt limits must be positive");
  const std::size_t expected = dataset_kind == DatasetKind::Shape ? 1 : 3;
  if (intensity_catalog.size() != expected) {
    fail("expected " + std::to_string(expected) + " catalog intensities");
  }
  std::set<int> seen;
  for (int v : intensity_catalog) {
    if (v < 1 || v > 255) fail("intensity " + std::to_string(v) + " outside [1, 255]");
    if (!seen.insert(v).second) fail("duplicate catalog intensity");
  }
  const std::vector<ShapeKind> shapes = dataset_kind == DatasetKind::Shape
                                            ? std::vector{ShapeKind::Circle, ShapeKind::Square, ShapeKind::Cross}
                                            : std::vector{ShapeKind::Circle};
  for (ShapeKind s : shapes) {
    const SizeRange r = size_range(s);
    if (r.min < 0 || r.min > r.max) fail(std::string(to_string(s)) + " size range is empty");
    if (2 * r.max + 1 > std::min(width, height)) {
      fail(std::string(to_string(s)) + " of size " + std::to_string(r.max) + " does not fit the image");
    }
  }
}

std::uint64_t sample_seed(std::uint64_t master_seed, std::uint64_t index) {
  return derive_seed(master_seed, kSceneStream, index);
}

Scene sample_scene(DatasetKind kind, const GenConfig& config, std::uint64_t seed) {
  GenConfig cfg = config;
  cfg.dataset_kind = kind;
  cfg.validate();
  const auto catalog = cfg.pattern_catalog();
  Rng rng(seed);

  for (int attempt = 0; attempt < cfg.max_scene_resamples; ++attempt) {
    std::vector<int> counts(catalog.size(), 0);
    do {
      for (auto& c : counts) c = rng.uniform_int(0, kMaxPatternCount);
    } while (std::all_of(counts.begin(), counts.end(), [](int c) { return c == 0; }));

    Scene scene;
    scene.width = cfg.width;
    scene.height = cfg.height;
    scene.dataset_kind = kind;
    scene.pattern_catalog = catalog;
    scene.rng_seed = seed;

    bool placed_all = true;
    for (std::size_t p = 0; p < catalog.size() && placed_all; ++p) {
      for (int k = 0; k < counts[p] && placed_all; ++k) {
        const SizeRange range = cfg.size_range(catalog[p].shape);
        bool placed = false;
        for (int tries = 0; tries < cfg.max_place_attempts && !placed; ++tries) {
          SceneObject obj;
          obj.id = static_cast<int>(scene.objects.size());
          obj.shape = catalog[p].shape;
          obj.size = rng.uniform_int(range.min, range.max);
          obj.center.row = rng.uniform_int(obj.size, cfg.height - 1 - obj.size);
          obj.center.col = rng.uniform_int(obj.size, cfg.width - 1 - obj.size);
          obj.intensity = catalog[p].intensity;
          obj.pattern_index = static_cast<int>(p);
          placed = std::none_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& other) {
            return overlaps(obj, other, cfg.width, cfg.height);
          });
          if (placed) scene.objects.push_back(obj);
        }
        placed_all = placed;
      }
    }
    if (placed_all) return scene;
  }
  throw Error("scene placement infeasible: no valid layout after " +
              std::to_string(cfg.max_scene_resamples) + " scene resamples");
}

json scene_to_json(const Scene& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"id", o.id},
                       {"shape", to_string(o.shape)},
                       {"center", {o.center.row, o.center.col}},
                       {"size", o.size},
                       {"intensity", o.intensity},
                       {"pattern_index", o.pattern_index}});
  }
  json patterns = json::array();
  for (const auto& p : scene.pattern_catalog) {
    patterns.push_back({{"shape", to_string(p.shape)}, {"intensity", p.intensity}});
  }
  return {{"width", scene.width},
          {"height", scene.height},
          {"dataset_kind", to_string(scene.dataset_kind)},
          {"rng_seed", scene.rng_seed},
          {"pattern_catalog", patterns},
          {"objects", objects}};
}

Scene scene_from_json(const json& j) {
  Scene scene;
  scene.width = j.at("width").get<int>();
  scene.height = j.at("height").get<int>();
  scene.dataset_kind = parse_dataset_kind(j.at("dataset_kind").get<std::string>());
  scene.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& p : j.at("pattern_catalog")) {
    scene.pattern_catalog.push_back(
        {parse_shape_kind(p.at("shape").get<std::string>()), p.at("intensity").get<int>()});
  }
  for (const auto& o : j.at("objects")) {
    SceneObject obj;
    obj.id = o.at("id").get<int>();
    obj.shape = parse_shape_kind(o.at("shape").get<std::string>());
    obj.center = {o.at("center").at(0).get<int>(), o.at("center").at(1).get<int>()};
    obj.size = o.at("size").get<int>();
    obj.intensity = o.at("intensity").get<int>();
    obj.pattern_index = o.at("pattern_index").get<int>();
    scene.objects.push_back(obj);
  }
  return scene;
}

json config_to_json(const GenConfig& c) {
  auto range = [](const SizeRange& r) { return json::array({r.min, r.max}); };
  return {{"dataset_kind", to_string(c.dataset_kind)},
          {"n_train", c.n_train},
          {"n_val", c.n_val},
          {"width", c.width},
          {"height", c.height},
          {"size_range", {{"circle", range(c.circle_size)},
                          {"square", range(c.square_size)},
                          {"cross", range(c.cross_size)}}},
          {"intensity_catalog", c.intensity_catalog},
          {"max_place_attempts", c.max_place_attempts},
          {"max_scene_resamples", c.max_scene_resamples},
          {"master_seed", c.master_seed}};
}

GenConfig config_from_json(const json& j) {
  auto range = [](const json& r) { return SizeRange{r.at(0).get<int>(), r.at(1).get<int>()}; };
  GenConfig c;
  c.dataset_kind = parse_dataset_kind(j.at("dataset_kind").get<std::string>());
  c.n_train = j.at("n_train").get<int>();
  c.n_val = j.at("n_val").get<int>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.circle_size = range(j.at("size_range").at("circle"));
  c.square_size = range(j.at("size_range").at("square"));
  c.cross_size = range(j.at("size_range").at("cross"));
  c.intensity_catalog = j.at("intensity_catalog").get<std::vector<int>>();
  c.max_place_attempts = j.at("max_place_attempts").get<int>();
  c.max_scene_resamples = j.at("max_scene_resamples").get<int>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  return c;
}

json manifest_to_json(const DatasetManifest& m) {
  json samples = json::array();
  for (const auto& s : m.samples) {
    json labels = json::object();
    json gt = json::object();
    for (FunctionKind f : kAllFunctions) {
      const auto k = static_cast<std::size_t>(f);
      labels[std::string(to_string(f))] = s.labels[k];
      gt[std::string(to_string(f))] = s.gt_maps[k];
    }
    samples.push_back({{"id", s.id},
                       {"split", s.split},
                       {"image", s.image},
                       {"image_sha256", s.image_sha256},
                       {"scene", scene_to_json(s.scene)},
                       {"labels", labels},
                       {"gt_maps", gt}});
  }
  return {{"schema_version", m.schema_version}, {"config", config_to_json(m.config)}, {"samples", samples}};
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer()) {
    throw SchemaError("manifest has no schema_version");
  }
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != kManifestSchemaVersion) {
    throw SchemaError("manifest schema version " + std::to_string(m.schema_version) +
                      " is not supported (expected " + std::to_string(kManifestSchemaVersion) + ")");
  }
  try {
    m.config = config_from_json(j.at("config"));
    for (const auto& s : j.at("samples")) {
      SampleRecord r;
      r.id = s.at("id").get<int>();
      r.split = s.at("split").get<std::string>();
      r.image = s.at("image").get<std::string>();
      r.image_sha256 = s.at("image_sha256").get<std::string>();
      r.scene = scene_from_json(s.at("scene"));
      for (FunctionKind f : kAllFunctions) {
        const auto k = static_cast<std::size_t>(f);
        r.labels[k] = s.at("labels").at(std::string(to_string(f))).get<double>();
        r.gt_maps[k] = s.at("gt_maps").at(std::string(to_string(f))).get<std::string>();
      }
      m.samples.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

DatasetManifest generate_dataset(const GenConfig& config, const fs::path& out_dir) {
  config.validate();
  DatasetManifest manifest;
  manifest.config = config;

  std::vector<fs::path> written;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
  };

  try {
    fs::create_directories(out_dir / "images");
    fs::create_directories(out_dir / "gt");
    const int total = config.n_train + config.n_val;
    for (int id = 0; id < total; ++id) {
      SampleRecord rec;
      rec.id = id;
      rec.split = id < config.n_train ? "train" : "val";
      rec.scene = sample_scene(config.dataset_kind, config, sample_seed(config.master_seed, id));
      const std::string stem = sample_stem(rec.split, id);

      rec.image = "images/" + stem + ".png";
      written.push_back(out_dir / rec.image);
      write_png(out_dir / rec.image, render_scene(rec.scene));
      rec.image_sha256 = file_sha256(out_dir / rec.image);

      for (FunctionKind f : kAllFunctions) {
        const auto k = static_cast<std::size_t>(f);
        const auto fn = AttributionFunction::make(f);
        rec.labels[k] = scene_label(rec.scene, fn);
        rec.gt_maps[k] = "gt/" + stem + "_" + std::string(to_string(f)) + ".gtmap";
        written.push_back(out_dir / rec.gt_maps[k]);
        write_gt_map(out_dir / rec.gt_maps[k], ground_truth_map(rec.scene, fn));
      }
      manifest.samples.push_back(std::move(rec));
    }

    const fs::path tmp = out_dir / (std::string(kManifestFileName) + ".tmp");
    written.push_back(tmp);
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write " + tmp.string());
      out << manifest_to_json(manifest).dump(2) << '\n';
      if (!out.flush()) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, out_dir / kManifestFileName);
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw IoError(std::string("dataset generation failed: ") + e.what());
  } catch (...) {
    cleanup();
    throw;
  }
  return manifest;
}

Dataset Dataset::open(const fs::path& path) {
  Dataset ds;
  const fs::path manifest_path = fs::is_directory(path) ? path / kManifestFileName : path;
  ds.root_ = manifest_path.parent_path();
  if (!fs::exists(manifest_path)) throw MissingFileError("missing manifest " + manifest_path.string());
  std::ifstream in(manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(manifest_path.string() + ": " + e.what());
  }
  ds.manifest_ = manifest_from_json(j);
  return ds;
}

LoadedSample Dataset::load(std::size_t index) const {
  const SampleRecord& rec = manifest_.samples.at(index);
  const fs::path image_path = root_ / rec.image;
  if (!fs::exists(image_path)) throw MissingFileError("missing image file " + image_path.string());
  const auto bytes = read_file_bytes(image_path);
  if (sha256_hex(bytes) != rec.image_sha256) {
    throw ChecksumError("checksum mismatch for image file " + image_path.string());
  }
  LoadedSample out;
  out.id = rec.id;
  out.split = rec.split;
  out.image = read_png(image_path);
  out.scene = rec.scene;
  out.labels = rec.labels;
  for (std::size_t k = 0; k < out.gt_maps.size(); ++k) {
    const fs::path gt_path = root_ / rec.gt_maps[k];
    if (!fs::exists(gt_path)) throw MissingFileError("missing ground-truth file " + gt_path.string());
    out.gt_maps[k] = read_gt_map(gt_path);
  }
  return out;
}

}  // namespace xaibench
