#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xaibench/attribution.hpp"
#include "xaibench/explainer.hpp"
#include "xaibench/metrics.hpp"
#include "xaibench/scene.hpp"

namespace xaibench {

/// Experiment failure with sample context. `bridge_failure` marks errors
/// raised by the external model process.
class ExperimentError : public Error {
 public:
  ExperimentError(const std::string& what, bool bridge_failure)
      : Error(what), bridge_failure_(bridge_failure) {}
  bool bridge_failure() const { return bridge_failure_; }

 private:
  bool bridge_failure_;
};

/// A requested perturbation-plan size: the per-scene minimum, the full
/// enumeration, or a fixed count (clamped per scene).
struct SampleSizeSpec {
  enum class Kind { Min, Full, Count };
  Kind kind = Kind::Full;
  int count = 0;

  static SampleSizeSpec parse(std::string_view text);
  std::string label() const;
  int resolve(int n_objects) const;
  friend bool operator==(const SampleSizeSpec&, const SampleSizeSpec&) = default;
};

struct ExperimentConfig {
  int experiment = 2;
  std::vector<DatasetKind> datasets{DatasetKind::Shape, DatasetKind::Color};
  std::vector<FunctionKind> functions{kAllFunctions.begin(), kAllFunctions.end()};
  int n_samples = 200;
  /// Experiment 1 curve points; experiments 2 and 3 always use the full plan.
  std::vector<SampleSizeSpec> sample_sizes;
  int bins = kDefaultBinGrid;
  double kl_eps = kDefaultKlEpsilon;
  /// Shell command of the external model. `{function}` and `{dataset}` are
  /// replaced per sub-experiment, so each gets its own process.
  std::optional<std::string> bridge_cmd;
  std::chrono::milliseconds bridge_timeout{60000};
  std::uint64_t master_seed = 0;
  /// Generated dataset to evaluate (validation split); scenes are sampled in
  /// memory from master_seed when absent.
  std::optional<std::filesystem::path> data_dir;
  /// Where reports and the checkpoint go; nothing is written when empty.
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> baseline_file;
  CoefficientRendering rendering = CoefficientRendering::ClipNegative;
  unsigned threads = 1;
  bool resume = false;

  /// Throws InvalidArgument on an unusable configuration.
  void validate() const;
  /// Sizes actually evaluated (experiment 1 list, or {full}).
  std::vector<SampleSizeSpec> effective_sample_sizes() const;
};

std::vector<SampleSizeSpec> default_curve_sizes();

struct ReportRow {
  int sample_id = 0;
  FunctionKind function = FunctionKind::Suum;
  DatasetKind dataset = DatasetKind::Shape;
  std::string sample_size;
  int plan_size = 0;
  double emd = 0.0;
  double kl = 0.0;
  bool gt_fallback = false;
  bool explanation_fallback = false;
  /// Model output on the unperturbed image and the stored label.
  double prediction = 0.0;
  double label = 0.0;
};

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
};

SummaryStats summarize(std::vector<double> values);

struct Aggregate {
  FunctionKind function = FunctionKind::Suum;
  DatasetKind dataset = DatasetKind::Shape;
  std::string sample_size;
  int count = 0;
  SummaryStats emd;
  SummaryStats kl;
  int gt_fallbacks = 0;
  int explanation_fallbacks = 0;
};

/// Model agreement with labels on the unperturbed evaluation images.
struct Agreement {
  FunctionKind function = FunctionKind::Suum;
  DatasetKind dataset = DatasetKind::Shape;
  int count = 0;
  double accuracy = 0.0;
  double mean_abs_error = 0.0;
};

struct MetricReport {
  int experiment = 0;
  nlohmann::json config;
  std::vector<std::string> sample_sizes;
  std::vector<ReportRow> rows;
  std::vector<Aggregate> aggregates;
  std::vector<Agreement> agreement;
  nlohmann::json baseline;
};

/// Evaluation scene of sample `id` when no dataset directory is given.
Scene evaluation_scene(DatasetKind dataset, std::uint64_t master_seed, int id);

/// Seed of the perturbation plan used for sample `id`.
std::uint64_t plan_seed(std::uint64_t master_seed, int id);

MetricReport run_experiment1(const ExperimentConfig& config);
MetricReport run_experiment2(const ExperimentConfig& config);
MetricReport run_experiment3(const ExperimentConfig& config);
MetricReport run_experiment(const ExperimentConfig& config);

/// `sample_id,function,dataset,sample_size,emd,kl` rows in stable order.
std::string report_csv(const MetricReport& report);
/// Mean EMD and KL per (function, dataset), one column per sample size.
std::string curve_csv(const MetricReport& report);
nlohmann::json report_summary(const MetricReport& report);
/// Aggregates at the first (smallest) sample size, for later experiments.
nlohmann::json baseline_json(const MetricReport& report);

/// Writes report.csv and summary.json (plus curve.csv and baseline.json for
/// experiment 1) into `out_dir`.
void write_report(const MetricReport& report, const std::filesystem::path& out_dir);

inline constexpr const char* kCheckpointFileName = "checkpoint.jsonl";

}  // namespace xaibench
