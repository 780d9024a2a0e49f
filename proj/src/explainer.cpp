#include "xaibench/explainer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "xaibench/rng.hpp"

namespace xaibench {

namespace {

void check_object_count(int n_objects) {
  if (n_objects < 1 || n_objects > kMaxPlanObjects) {
    throw InvalidArgument("perturbation plans need 1 to 6 objects, got " + std::to_string(n_objects));
  }
}

PresenceVector presence_bits(unsigned code, int n) {
  PresenceVector z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((code >> (n - 1 - i)) & 1u);
  return z;
}

}  // namespace

int max_sample_size(int n_objects) {
  check_object_count(n_objects);
  return 1 << n_objects;
}

int min_sample_size(int n_objects) { return std::min(n_objects + 2, max_sample_size(n_objects)); }

int effective_sample_size(int n_objects, int requested) {
  if (requested < 0) throw InvalidArgument("sample size must be nonnegative");
  if (requested == kFullPlan) return max_sample_size(n_objects);
  return std::clamp(requested, min_sample_size(n_objects), max_sample_size(n_objects));
}

PerturbationPlan enumerate_perturbations(int n_objects, int sample_size, std::uint64_t plan_seed) {
  const int lo = min_sample_size(n_objects);
  const int hi = max_sample_size(n_objects);
  if (sample_size < lo || sample_size > hi) {
    throw InvalidArgument("sample size " + std::to_string(sample_size) + " outside [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "] for " + std::to_string(n_objects) + " objects");
  }
  PerturbationPlan plan;
  plan.n_objects = n_objects;
  plan.sample_size = sample_size;
  const unsigned all_ones = static_cast<unsigned>(hi - 1);
  if (sample_size == hi) {
    for (int code = hi - 1; code >= 0; --code) plan.vectors.push_back(presence_bits(static_cast<unsigned>(code), n_objects));
    return plan;
  }
  // Fisher-Yates over the codes below all-ones.
  std::vector<unsigned> rest(all_ones);
  for (unsigned c = 0; c < all_ones; ++c) rest[c] = c;
  Rng rng(plan_seed);
  for (int i = static_cast<int>(rest.size()) - 1; i > 0; --i) {
    std::swap(rest[static_cast<std::size_t>(i)], rest[static_cast<std::size_t>(rng.uniform_int(0, i))]);
  }
  plan.vectors.push_back(presence_bits(all_ones, n_objects));
  for (int k = 0; k + 1 < sample_size; ++k) plan.vectors.push_back(presence_bits(rest[static_cast<std::size_t>(k)], n_objects));
  return plan;
}

namespace {

Image occlude(const Image& image, const std::vector<std::vector<std::size_t>>& footprints,
              std::span<const std::uint8_t> z) {
  Image out = image;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (z[k]) continue;
    for (std::size_t idx : footprints[k]) out.pixels[idx] = 0;
  }
  return out;
}

void check_perturbation_args(const Image& image, const Scene& scene, std::size_t z_size) {
  if (z_size != scene.objects.size()) {
    throw InvalidArgument("presence vector has " + std::to_string(z_size) + " entries for " +
                          std::to_string(scene.objects.size()) + " objects");
  }
  if (image.width != scene.width || image.height != scene.height) {
    throw InvalidArgument("image and scene dimensions differ");
  }
}

}  // namespace

Image apply_perturbation(const Image& image, const Scene& scene, std::span<const std::uint8_t> z) {
  check_perturbation_args(image, scene, z.size());
  return occlude(image, object_footprints(scene), z);
}

SurrogateFit fit_linear_surrogate(const PerturbationPlan& plan, std::span<const double> outputs) {
  const auto rows = static_cast<Eigen::Index>(plan.vectors.size());
  const Eigen::Index n = plan.n_objects;
  if (outputs.size() != plan.vectors.size()) {
    throw InvalidArgument("surrogate fit: " + std::to_string(outputs.size()) + " outputs for " +
                          std::to_string(plan.vectors.size()) + " perturbations");
  }
  if (n < 1 || rows < std::min<Eigen::Index>(n + 2, Eigen::Index{1} << n)) {
    throw InvalidArgument("surrogate fit: too few perturbations for " + std::to_string(n) + " objects");
  }
  Eigen::MatrixXd z(rows, n);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& v = plan.vectors[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(v.size()) != n) throw InvalidArgument("surrogate fit: ragged presence vectors");
    for (Eigen::Index c = 0; c < n; ++c) z(r, c) = v[static_cast<std::size_t>(c)];
    y(r) = outputs[static_cast<std::size_t>(r)];
    if (!std::isfinite(y(r))) throw InvalidArgument("surrogate fit: non-finite predictor output");
  }

  // Centering removes the intercept column; constant outputs give exact zeros.
  const Eigen::RowVectorXd z_mean = z.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd zc = z.rowwise() - z_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::MatrixXd gram = zc.transpose() * zc;
  const Eigen::VectorXd rhs = zc.transpose() * yc;

  auto condition = [](const Eigen::MatrixXd& g) {
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly).eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.maxCoeff();
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  };

  SurrogateFit fit;
  if (condition(gram) > kConditionLimit) {
    gram.diagonal().array() += kRidgeLambda;
    fit.ridge_applied = true;
    if (condition(gram) > kConditionLimit) {
      const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues();
      const auto defect = (ev.array() <= ev.maxCoeff() / kConditionLimit).count();
      throw SurrogateFitError("surrogate design is rank deficient by " + std::to_string(defect) +
                              " even after ridge regularization");
    }
  }
  const Eigen::VectorXd beta = gram.ldlt().solve(rhs);
  fit.coefficients.assign(beta.data(), beta.data() + beta.size());
  fit.intercept = y_mean - z_mean.dot(beta);
  fit.residual_norm = (y - (z * beta).array().matrix() - Eigen::VectorXd::Constant(rows, fit.intercept)).norm();
  return fit;
}

SaliencyMap render_coefficients(const Scene& scene, std::span<const double> coefficients,
                                CoefficientRendering rendering) {
  if (coefficients.size() != scene.objects.size()) {
    throw InvalidArgument("one coefficient per scene object required");
  }
  SaliencyMap map(scene.width, scene.height);
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    const double c = rendering == CoefficientRendering::Absolute ? std::abs(coefficients[k])
                                                                 : std::max(coefficients[k], 0.0);
    if (c == 0.0) continue;
    for (std::size_t idx : object_mask(scene.objects[k], scene.width, scene.height).indices()) map[idx] = c;
  }
  return map;
}

Explanation explain(const Image& image, const Scene& scene, Predictor& predictor, const ExplainOptions& options) {
  const int n = static_cast<int>(scene.objects.size());
  Explanation out;
  out.plan = enumerate_perturbations(n, effective_sample_size(n, options.sample_size), options.plan_seed);
  check_perturbation_args(image, scene, scene.objects.size());
  const auto footprints = object_footprints(scene);
  std::vector<Image> perturbed;
  perturbed.reserve(out.plan.vectors.size());
  for (const auto& z : out.plan.vectors) perturbed.push_back(occlude(image, footprints, z));
  out.outputs = predictor.predict_batch(perturbed);
  out.fit = fit_linear_surrogate(out.plan, out.outputs);
  out.map = render_coefficients(scene, out.fit.coefficients, options.rendering);
  return out;
}

}  // namespace xaibench
