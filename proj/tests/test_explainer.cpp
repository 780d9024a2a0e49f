#include <doctest.h>

#include <set>

#include "xaibench/datagen.hpp"
#include "xaibench/error.hpp"
#include "xaibench/explainer.hpp"
#include "xaibench/metrics.hpp"
#include "xaibench/predictor.hpp"

using namespace xaibench;

namespace {

PerturbationPlan plan_of(std::vector<PresenceVector> vectors) {
  PerturbationPlan p;
  p.n_objects = static_cast<int>(vectors.front().size());
  p.sample_size = static_cast<int>(vectors.size());
  p.vectors = std::move(vectors);
  return p;
}

Scene scene_with(DatasetKind kind, int objects, std::uint64_t start = 0) {
  const auto cfg = GenConfig::defaults(kind);
  for (std::uint64_t seed = start;; ++seed) {
    Scene s = sample_scene(kind, cfg, seed);
    if (static_cast<int>(s.objects.size()) == objects) return s;
  }
}

}  // namespace

TEST_CASE("plan sizes") {
  CHECK(min_sample_size(1) == 2);
  CHECK(min_sample_size(3) == 5);
  CHECK(max_sample_size(6) == 64);
  CHECK(effective_sample_size(3, kFullPlan) == 8);
  CHECK(effective_sample_size(3, 128) == 8);
  CHECK(effective_sample_size(3, 1) == 5);
  CHECK_THROWS_AS(max_sample_size(7), InvalidArgument);
  CHECK_THROWS_AS(max_sample_size(0), InvalidArgument);
}

TEST_CASE("single-object full plan") {
  const auto p = enumerate_perturbations(1, 2, 0);
  REQUIRE(p.vectors.size() == 2);
  CHECK(p.vectors[0] == PresenceVector{1});
  CHECK(p.vectors[1] == PresenceVector{0});
}

TEST_CASE("six objects enumerate all 64 subsets once") {
  const auto p = enumerate_perturbations(6, 64, 99);
  std::set<PresenceVector> seen(p.vectors.begin(), p.vectors.end());
  CHECK(seen.size() == 64);
  CHECK(p.vectors.front() == PresenceVector(6, 1));
}

TEST_CASE("plans are nested and seeded") {
  for (int n = 3; n <= 6; ++n) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto full = enumerate_perturbations(n, max_sample_size(n) - 1, seed);
      for (int size = min_sample_size(n); size < max_sample_size(n) - 1; ++size) {
        const auto p = enumerate_perturbations(n, size, seed);
        REQUIRE(p.vectors.front() == PresenceVector(static_cast<std::size_t>(n), 1));
        REQUIRE(std::equal(p.vectors.begin(), p.vectors.end(), full.vectors.begin()));
        REQUIRE(std::set<PresenceVector>(p.vectors.begin(), p.vectors.end()).size() == p.vectors.size());
      }
      CHECK(enumerate_perturbations(n, min_sample_size(n), seed).vectors ==
            enumerate_perturbations(n, min_sample_size(n), seed).vectors);
    }
  }
  CHECK(enumerate_perturbations(5, 9, 1).vectors != enumerate_perturbations(5, 9, 2).vectors);
  CHECK_THROWS_AS(enumerate_perturbations(3, 4, 0), InvalidArgument);
  CHECK_THROWS_AS(enumerate_perturbations(3, 9, 0), InvalidArgument);
}

TEST_CASE("perturbation occludes footprints") {
  const Scene s = scene_with(DatasetKind::Shape, 3);
  const Image image = render_scene(s);
  CHECK(apply_perturbation(image, s, PresenceVector(3, 1)) == image);
  CHECK(apply_perturbation(image, s, PresenceVector(3, 0)).nonzero_count() == 0);
  const auto dropped = apply_perturbation(image, s, PresenceVector{0, 1, 1});
  CHECK(image.nonzero_count() - dropped.nonzero_count() == object_mask(s.objects[0], s.width, s.height).count());
  CHECK_THROWS_AS(apply_perturbation(image, s, PresenceVector{1, 1}), InvalidArgument);
}

TEST_CASE("exact linear target") {
  const auto plan = plan_of({{1, 1}, {1, 0}, {0, 1}, {0, 0}});
  const std::vector<double> y{0.7, 0.5, 0.2, 0.0};
  const auto fit = fit_linear_surrogate(plan, y);
  CHECK(fit.coefficients[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.coefficients[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::abs(fit.intercept) <= 1e-12);
  CHECK(fit.residual_norm <= 1e-12);
  CHECK_FALSE(fit.ridge_applied);
}

TEST_CASE("constant outputs give zero coefficients") {
  const auto plan = enumerate_perturbations(3, 8, 0);
  const std::vector<double> y(8, 1.0);
  const auto fit = fit_linear_surrogate(plan, y);
  for (double c : fit.coefficients) CHECK(c == 0.0);
  CHECK(fit.intercept == 1.0);
}

TEST_CASE("rank deficient designs fall back to ridge or fail") {
  // Object 2 is always present: its column is constant.
  const auto plan = plan_of({{1, 1, 1}, {0, 1, 1}, {1, 0, 1}, {0, 0, 1}, {1, 1, 1}});
  const std::vector<double> y{0.7, 0.2, 0.5, 0.0, 0.7};
  const auto fit = fit_linear_surrogate(plan, y);
  CHECK(fit.ridge_applied);
  CHECK(fit.coefficients[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::abs(fit.coefficients[2]) <= 1e-9);

  CHECK_THROWS_AS(fit_linear_surrogate(plan, std::vector<double>{1.0}), InvalidArgument);
  const auto bad = plan_of({{1, 1}, {1, 0}, {0, 1}, {0, 0}});
  CHECK_THROWS_AS(fit_linear_surrogate(bad, std::vector<double>{1.0, NAN, 0.0, 0.0}), InvalidArgument);
}

TEST_CASE("suum full plan recovers half weights") {
  const auto fn = AttributionFunction::make(FunctionKind::Suum);
  for (int n = 1; n <= 6; ++n) {
    const Scene s = scene_with(DatasetKind::Color, n);
    OraclePredictor oracle(s, fn);
    const auto ex = explain(render_scene(s), s, oracle);
    REQUIRE(ex.plan.sample_size == max_sample_size(n));
    for (std::size_t k = 0; k < s.objects.size(); ++k) {
      CHECK(ex.fit.coefficients[k] == doctest::Approx(fn.pattern_weight(s.objects[k].pattern_index) / 2).epsilon(1e-12));
    }
    const auto gt = normalize(ground_truth_map(s, fn));
    CHECK(emd(to_signature(gt), to_signature(normalize(ex.map))) <= 0.05);
  }
}

TEST_CASE("single object takes all the mass") {
  for (auto f : {FunctionKind::Ssin, FunctionKind::Suum}) {
    const Scene s = scene_with(DatasetKind::Shape, 1);
    OraclePredictor oracle(s, AttributionFunction::make(f));
    const auto ex = explain(render_scene(s), s, oracle);
    const auto mask = object_mask(s.objects[0], s.width, s.height);
    double inside = 0.0;
    for (auto i : mask.indices()) inside += ex.map[i];
    CHECK(inside == doctest::Approx(ex.map.total()));
    CHECK(inside > 0.0);
  }
}

TEST_CASE("class scene with no sensitive object falls back to uniform") {
  // One circle and no squares: class is 1 under every occlusion.
  Scene s = scene_with(DatasetKind::Shape, 1);
  REQUIRE(s.objects.size() == 1);
  s.objects[0].shape = ShapeKind::Circle;
  s.objects[0].pattern_index = 0;
  OraclePredictor oracle(s, AttributionFunction::make(FunctionKind::Class));
  const auto ex = explain(render_scene(s), s, oracle);
  for (double y : ex.outputs) CHECK(y == 1.0);
  CHECK(ex.fit.coefficients[0] == 0.0);
  CHECK(is_all_zero(ex.map));
  const auto q = normalize(ex.map);
  CHECK(q[0] == 1.0 / static_cast<double>(q.size()));
}

TEST_CASE("negative coefficients are clipped unless absolute rendering is asked for") {
  const Scene s = scene_with(DatasetKind::Shape, 2);
  const std::vector<double> coef{-0.3, 0.2};
  const auto clipped = render_coefficients(s, coef);
  const auto absolute = render_coefficients(s, coef, CoefficientRendering::Absolute);
  const auto c0 = s.objects[0].center;
  CHECK(clipped.at(c0.row, c0.col) == 0.0);
  CHECK(absolute.at(c0.row, c0.col) == 0.3);
  CHECK_THROWS_AS(render_coefficients(s, std::vector<double>{0.1}), InvalidArgument);
}

TEST_CASE("full plan is seed independent and rendering independent") {
  const Scene s = scene_with(DatasetKind::Shape, 4);
  OraclePredictor oracle(s, AttributionFunction::make(FunctionKind::Ssin));
  ExplainOptions a;
  a.plan_seed = 1;
  ExplainOptions b;
  b.plan_seed = 2;
  const auto ea = explain(render_scene(s), s, oracle, a);
  const auto eb = explain(render_scene(s), s, oracle, b);
  CHECK(ea.map == eb.map);
  CHECK(explain(render_scene(s), s, oracle, a).map == ea.map);
}
