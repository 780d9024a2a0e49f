#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "xaibench/datagen.hpp"
#include "xaibench/image_io.hpp"

using namespace xaibench;

namespace {

std::size_t files_under(const std::filesystem::path& dir) {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

}  // namespace

TEST_CASE("same seed, same scene") {
  const auto cfg = GenConfig::defaults(DatasetKind::Shape);
  CHECK(sample_scene(DatasetKind::Shape, cfg, 123) == sample_scene(DatasetKind::Shape, cfg, 123));
  CHECK_FALSE(sample_scene(DatasetKind::Shape, cfg, 123) == sample_scene(DatasetKind::Shape, cfg, 124));
}

TEST_CASE("10000 shape scenes respect the scene constraints") {
  const auto cfg = GenConfig::defaults(DatasetKind::Shape);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const Scene s = sample_scene(DatasetKind::Shape, cfg, sample_seed(1, i));
    REQUIRE(s.objects.size() >= 1);
    REQUIRE(s.objects.size() <= 6);
    for (int p = 0; p < 3; ++p) REQUIRE(pattern_count(s, p) <= 2);
    REQUIRE_NOTHROW(validate_scene(s));
  }
}

TEST_CASE("10000 color scenes are disjoint circles from the catalog") {
  const auto cfg = GenConfig::defaults(DatasetKind::Color);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const Scene s = sample_scene(DatasetKind::Color, cfg, sample_seed(2, i));
    for (std::size_t a = 0; a < s.objects.size(); ++a) {
      const auto& o = s.objects[a];
      REQUIRE(o.shape == ShapeKind::Circle);
      REQUIRE((o.intensity == 85 || o.intensity == 170 || o.intensity == 255));
      for (std::size_t b = a + 1; b < s.objects.size(); ++b) {
        REQUIRE_FALSE(object_mask(o, s.width, s.height).intersects(object_mask(s.objects[b], s.width, s.height)));
      }
    }
  }
}

TEST_CASE("per-pattern counts are close to uniform on {0,1,2}") {
  const auto cfg = GenConfig::defaults(DatasetKind::Shape);
  const int n = 6000;
  int hist[3][3] = {};
  for (int i = 0; i < n; ++i) {
    const Scene s = sample_scene(DatasetKind::Shape, cfg, sample_seed(3, static_cast<std::uint64_t>(i)));
    for (int p = 0; p < 3; ++p) ++hist[p][pattern_count(s, p)];
  }
  for (int p = 0; p < 3; ++p) {
    for (int c = 0; c < 3; ++c) {
      CAPTURE(p);
      CAPTURE(c);
      CHECK(std::abs(hist[p][c] / static_cast<double>(n) - 1.0 / 3.0) <= 0.05);
    }
  }
}

TEST_CASE("config validation") {
  auto cfg = GenConfig::defaults(DatasetKind::Color);
  CHECK(cfg.intensity_catalog == std::vector<int>{85, 170, 255});
  cfg.intensity_catalog = {85, 85, 255};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = GenConfig::defaults(DatasetKind::Shape);
  cfg.circle_size = {10, 80};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = GenConfig::defaults(DatasetKind::Shape);
  cfg.n_val = -1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("one validation record") {
  testing::TempDir dir("gen1");
  auto cfg = GenConfig::defaults(DatasetKind::Shape);
  cfg.n_train = 0;
  cfg.n_val = 1;
  const auto m = generate_dataset(cfg, dir.path());
  REQUIRE(m.samples.size() == 1);
  CHECK(m.samples[0].split == "val");
  CHECK(std::filesystem::exists(dir / kManifestFileName));
}

TEST_CASE("regeneration is byte-identical") {
  testing::TempDir a("gen_a");
  testing::TempDir b("gen_b");
  auto cfg = GenConfig::defaults(DatasetKind::Color);
  cfg.n_train = 2;
  cfg.n_val = 3;
  cfg.master_seed = 77;
  generate_dataset(cfg, a.path());
  generate_dataset(cfg, b.path());
  CHECK(testing::read_text(a / kManifestFileName) == testing::read_text(b / kManifestFileName));
  CHECK(file_sha256(a / "images/val_000002.png") == file_sha256(b / "images/val_000002.png"));
}

TEST_CASE("stored labels and maps match recomputation") {
  testing::TempDir dir("gen_labels");
  auto cfg = GenConfig::defaults(DatasetKind::Shape);
  cfg.n_val = 6;
  cfg.master_seed = 5;
  generate_dataset(cfg, dir.path());
  const Dataset ds = Dataset::open(dir.path());
  for (const auto& sample : ds) {
    CHECK(render_scene(sample.scene) == sample.image);
    for (auto f : kAllFunctions) {
      const auto fn = AttributionFunction::make(f);
      const auto k = static_cast<std::size_t>(f);
      CHECK(sample.labels[k] == scene_label(sample.scene, fn));
      CHECK(sample.gt_maps[k] == ground_truth_map(sample.scene, fn));
    }
    const auto counts = pattern_counts(sample.scene);
    CHECK(sample.labels[static_cast<std::size_t>(FunctionKind::Ssin)] == eval_ssin(counts));
  }
}

TEST_CASE("load round-trips scenes and iterates reproducibly") {
  testing::TempDir dir("gen_load");
  auto cfg = GenConfig::defaults(DatasetKind::Color);
  cfg.n_train = 1;
  cfg.n_val = 2;
  cfg.master_seed = 9;
  const auto m = generate_dataset(cfg, dir.path());
  const Dataset ds = Dataset::open(dir / kManifestFileName);
  CHECK(ds.manifest() == m);
  REQUIRE(ds.size() == 3);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.load(i).scene == sample_scene(DatasetKind::Color, cfg, sample_seed(9, i)));
    CHECK(ds.load(i).image == ds.load(i).image);
  }
  std::vector<Scene> first;
  std::vector<Scene> second;
  for (const auto& s : ds) first.push_back(s.scene);
  for (const auto& s : ds) second.push_back(s.scene);
  CHECK(first == second);
  CHECK(ds.load(0).split == "train");
}

TEST_CASE("corrupted image names the file") {
  testing::TempDir dir("gen_corrupt");
  auto cfg = GenConfig::defaults(DatasetKind::Shape);
  cfg.n_val = 2;
  generate_dataset(cfg, dir.path());
  const auto victim = dir / "images/val_000001.png";
  {
    std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(60);
    f.put('\x5a');
  }
  const Dataset ds = Dataset::open(dir.path());
  CHECK_NOTHROW(ds.load(0));
  try {
    ds.load(1);
    FAIL("expected a checksum error");
  } catch (const ChecksumError& e) {
    CHECK(std::string(e.what()).find("val_000001.png") != std::string::npos);
  }
}

TEST_CASE("missing files and schema mismatch") {
  testing::TempDir dir("gen_missing");
  CHECK_THROWS_AS(Dataset::open(dir.path()), MissingFileError);

  auto cfg = GenConfig::defaults(DatasetKind::Shape);
  cfg.n_val = 1;
  generate_dataset(cfg, dir.path());
  std::filesystem::remove(dir / "gt/val_000000_suum.gtmap");
  CHECK_THROWS_AS(Dataset::open(dir.path()).load(0), MissingFileError);

  auto j = manifest_to_json(Dataset::open(dir.path()).manifest());
  j["schema_version"] = 99;
  std::ofstream(dir / kManifestFileName) << j.dump();
  CHECK_THROWS_AS(Dataset::open(dir.path()), SchemaError);
  std::ofstream(dir / kManifestFileName) << "{ not json";
  CHECK_THROWS_AS(Dataset::open(dir.path()), SchemaError);
}

TEST_CASE("infeasible placement fails and leaves no files behind") {
  auto cfg = GenConfig::defaults(DatasetKind::Shape);
  cfg.width = 33;
  cfg.height = 33;
  cfg.circle_size = {16, 16};
  cfg.square_size = {16, 16};
  cfg.cross_size = {16, 16};
  cfg.max_place_attempts = 3;
  cfg.max_scene_resamples = 2;
  cfg.n_val = 8;
  testing::TempDir dir("gen_fail");
  CHECK_THROWS_AS(generate_dataset(cfg, dir.path()), Error);
  CHECK(files_under(dir.path()) == 0);
}

TEST_CASE("json converters round-trip") {
  const auto cfg = GenConfig::defaults(DatasetKind::Color);
  CHECK(config_from_json(config_to_json(cfg)) == cfg);
  const Scene s = sample_scene(DatasetKind::Color, cfg, 31);
  CHECK(scene_from_json(scene_to_json(s)) == s);
}
