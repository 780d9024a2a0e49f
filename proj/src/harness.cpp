#include "xaibench/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>

#include "xaibench/bridge.hpp"
#include "xaibench/datagen.hpp"
#include "xaibench/image_io.hpp"
#include "xaibench/parallel.hpp"
#include "xaibench/predictor.hpp"
#include "xaibench/rng.hpp"

namespace xaibench {

using nlohmann::json;

namespace {

constexpr std::uint64_t kPlanStream = 0x91A7;
// Regression outputs within this distance of the label count as agreeing.
constexpr double kRegressionTolerance = 0.05;

int parse_positive(std::string_view text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value <= 0) {
    throw InvalidArgument("invalid sample size '" + std::string(text) + "'");
  }
  return value;
}

std::string_view rendering_name(CoefficientRendering r) {
  return r == CoefficientRendering::Absolute ? "absolute" : "clip";
}

}  // namespace

SampleSizeSpec SampleSizeSpec::parse(std::string_view text) {
  if (text == "min") return {Kind::Min, 0};
  if (text == "full") return {Kind::Full, 0};
  return {Kind::Count, parse_positive(text)};
}

std::string SampleSizeSpec::label() const {
  switch (kind) {
    case Kind::Min: return "min";
    case Kind::Full: return "full";
    case Kind::Count: break;
  }
  return std::to_string(count);
}

int SampleSizeSpec::resolve(int n_objects) const {
  switch (kind) {
    case Kind::Min: return min_sample_size(n_objects);
    case Kind::Full: return max_sample_size(n_objects);
    case Kind::Count: break;
  }
  return effective_sample_size(n_objects, count);
}

std::vector<SampleSizeSpec> default_curve_sizes() {
  return {SampleSizeSpec::parse("min"), SampleSizeSpec::parse("8"), SampleSizeSpec::parse("16"),
          SampleSizeSpec::parse("32"), SampleSizeSpec::parse("full")};
}

void ExperimentConfig::validate() const {
  if (experiment < 1 || experiment > 3) {
    throw InvalidArgument("experiment must be 1, 2 or 3, got " + std::to_string(experiment));
  }
  if (datasets.empty()) throw InvalidArgument("no dataset selected");
  if (functions.empty()) throw InvalidArgument("no function selected");
  if (n_samples < 1) throw InvalidArgument("n_samples must be positive");
  if (bins < 1) throw InvalidArgument("bins must be positive");
  if (!(kl_eps > 0.0)) throw InvalidArgument("kl eps must be positive");
  if (bridge_timeout.count() <= 0) throw InvalidArgument("bridge timeout must be positive");
  if (experiment == 1) {
    std::set<std::string> labels;
    for (const auto& s : effective_sample_sizes()) labels.insert(s.label());
    if (labels.size() < 2) {
      throw InvalidArgument("experiment 1 needs at least two distinct sample sizes to trace a curve");
    }
  }
  if (experiment == 3 && (!bridge_cmd || bridge_cmd->empty())) {
    throw InvalidArgument("experiment 3 requires a bridge command");
  }
  if (experiment != 3 && bridge_cmd) {
    throw InvalidArgument("experiments 1 and 2 use the oracle predictor; a bridge command applies to experiment 3");
  }
  if (resume && out_dir.empty()) throw InvalidArgument("resuming needs an output directory");
}

std::vector<SampleSizeSpec> ExperimentConfig::effective_sample_sizes() const {
  if (experiment != 1) return {SampleSizeSpec{}};
  return sample_sizes.empty() ? default_curve_sizes() : sample_sizes;
}

SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / n);
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

Scene evaluation_scene(DatasetKind dataset, std::uint64_t master_seed, int id) {
  return sample_scene(dataset, GenConfig::defaults(dataset), sample_seed(master_seed, static_cast<std::uint64_t>(id)));
}

std::uint64_t plan_seed(std::uint64_t master_seed, int id) {
  return derive_seed(master_seed, kPlanStream, static_cast<std::uint64_t>(id));
}

namespace {

// One evaluation image. Dataset samples are loaded lazily by index.
struct SampleRef {
  int id = 0;
  Scene scene;
  std::optional<std::size_t> dataset_index;
};

struct SampleSource {
  std::optional<Dataset> dataset;
  std::vector<SampleRef> samples;
};

struct SampleData {
  Image image;
  SaliencyMap gt;
  double label = 0.0;
};

SampleSource collect_samples(const ExperimentConfig& config, DatasetKind kind) {
  SampleSource source;
  if (!config.data_dir) {
    for (int id = 0; id < config.n_samples; ++id) {
      source.samples.push_back({id, evaluation_scene(kind, config.master_seed, id), std::nullopt});
    }
    return source;
  }
  source.dataset = Dataset::open(*config.data_dir);
  const auto& manifest = source.dataset->manifest();
  if (manifest.config.dataset_kind != kind) {
    throw InvalidArgument("dataset at " + config.data_dir->string() + " is " +
                          std::string(to_string(manifest.config.dataset_kind)) + ", not " +
                          std::string(to_string(kind)));
  }
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    if (static_cast<int>(source.samples.size()) == config.n_samples) break;
    const auto& rec = manifest.samples[i];
    if (rec.split == "val") source.samples.push_back({rec.id, rec.scene, i});
  }
  if (static_cast<int>(source.samples.size()) < config.n_samples) {
    throw InvalidArgument("dataset holds " + std::to_string(source.samples.size()) +
                          " validation samples, " + std::to_string(config.n_samples) + " requested");
  }
  return source;
}

SampleData load_sample(const SampleSource& source, const SampleRef& ref, const AttributionFunction& fn) {
  SampleData data;
  if (ref.dataset_index) {
    LoadedSample loaded = source.dataset->load(*ref.dataset_index);
    data.image = std::move(loaded.image);
    data.gt = std::move(loaded.gt_maps[static_cast<std::size_t>(fn.kind)]);
    data.label = loaded.labels[static_cast<std::size_t>(fn.kind)];
  } else {
    data.image = render_scene(ref.scene);
    data.gt = ground_truth_map(ref.scene, fn);
    data.label = scene_label(ref.scene, fn);
  }
  return data;
}

std::string substitute(std::string text, std::string_view key, std::string_view value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

json row_to_json(const ReportRow& r) {
  return {{"sample_id", r.sample_id},
          {"function", to_string(r.function)},
          {"dataset", to_string(r.dataset)},
          {"sample_size", r.sample_size},
          {"plan_size", r.plan_size},
          {"emd", r.emd},
          {"kl", r.kl},
          {"gt_fallback", r.gt_fallback},
          {"explanation_fallback", r.explanation_fallback},
          {"prediction", r.prediction},
          {"label", r.label}};
}

ReportRow row_from_json(const json& j) {
  ReportRow r;
  r.sample_id = j.at("sample_id").get<int>();
  r.function = parse_function_kind(j.at("function").get<std::string>());
  r.dataset = parse_dataset_kind(j.at("dataset").get<std::string>());
  r.sample_size = j.at("sample_size").get<std::string>();
  r.plan_size = j.at("plan_size").get<int>();
  r.emd = j.at("emd").get<double>();
  r.kl = j.at("kl").get<double>();
  r.gt_fallback = j.at("gt_fallback").get<bool>();
  r.explanation_fallback = j.at("explanation_fallback").get<bool>();
  r.prediction = j.at("prediction").get<double>();
  r.label = j.at("label").get<double>();
  return r;
}

json config_fingerprint(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["datasets"] = json::array();
  for (auto d : c.datasets) j["datasets"].push_back(to_string(d));
  j["functions"] = json::array();
  for (auto f : c.functions) j["functions"].push_back(to_string(f));
  j["n_samples"] = c.n_samples;
  j["sample_sizes"] = json::array();
  for (const auto& s : c.effective_sample_sizes()) j["sample_sizes"].push_back(s.label());
  j["bins"] = c.bins;
  j["kl_eps"] = c.kl_eps;
  j["bridge_cmd"] = c.bridge_cmd ? json(*c.bridge_cmd) : json(nullptr);
  j["master_seed"] = c.master_seed;
  j["data_dir"] = c.data_dir ? json(c.data_dir->string()) : json(nullptr);
  j["rendering"] = rendering_name(c.rendering);
  return j;
}

std::string unit_key(FunctionKind fn, DatasetKind ds, int id) {
  return std::string(to_string(fn)) + "/" + std::string(to_string(ds)) + "/" + std::to_string(id);
}

// Append-only log of finished samples, so an aborted run can pick up where it
// stopped. The first line holds the configuration it belongs to.
class Checkpoint {
 public:
  Checkpoint(const ExperimentConfig& config, const json& fingerprint) {
    if (config.out_dir.empty()) return;
    std::filesystem::create_directories(config.out_dir);
    path_ = config.out_dir / kCheckpointFileName;
    if (config.resume && std::filesystem::exists(path_)) {
      load(fingerprint);
      out_.open(path_, std::ios::app);
    } else {
      out_.open(path_, std::ios::trunc);
      out_ << json{{"config", fingerprint}}.dump() << '\n' << std::flush;
    }
    if (!out_) throw IoError("cannot write checkpoint " + path_.string());
  }

  const std::filesystem::path& path() const { return path_; }

  const std::vector<ReportRow>* find(const std::string& key) const {
    const auto it = done_.find(key);
    return it == done_.end() ? nullptr : &it->second;
  }

  void record(const std::string& key, const std::vector<ReportRow>& rows) {
    if (path_.empty()) return;
    json list = json::array();
    for (const auto& r : rows) list.push_back(row_to_json(r));
    std::lock_guard lock(mutex_);
    out_ << json{{"key", key}, {"rows", list}}.dump() << '\n' << std::flush;
  }

  void finish() {
    if (path_.empty()) return;
    out_.close();
    std::filesystem::remove(path_);
  }

 private:
  void load(const json& fingerprint) {
    std::ifstream in(path_);
    std::string line;
    if (!std::getline(in, line)) throw IoError("checkpoint " + path_.string() + " is empty");
    const json head = json::parse(line, nullptr, false);
    if (!head.is_object() || !head.contains("config") || head.at("config") != fingerprint) {
      throw InvalidArgument("checkpoint " + path_.string() + " belongs to a different configuration");
    }
    while (std::getline(in, line)) {
      // A line cut short by an abort is dropped and recomputed.
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("key")) continue;
      std::vector<ReportRow> rows;
      for (const auto& r : j.at("rows")) rows.push_back(row_from_json(r));
      done_[j.at("key").get<std::string>()] = std::move(rows);
    }
  }

  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
  std::map<std::string, std::vector<ReportRow>> done_;
};

struct SubExperiment {
  FunctionKind function;
  DatasetKind dataset;
};

std::vector<ReportRow> evaluate_sample(const ExperimentConfig& config, const std::vector<SampleSizeSpec>& sizes,
                                       const SampleSource& source, const SampleRef& ref,
                                       const AttributionFunction& fn, DatasetKind dataset, Predictor& predictor) {
  const SampleData data = load_sample(source, ref, fn);
  const bool gt_zero = is_all_zero(data.gt);
  const SaliencyMap gt = normalize(data.gt);
  const Signature gt_sig = to_signature(gt, config.bins);
  const int n = static_cast<int>(ref.scene.objects.size());
  const std::uint64_t seed = plan_seed(config.master_seed, ref.id);

  std::vector<ReportRow> rows;
  for (const auto& spec : sizes) {
    ExplainOptions opts;
    opts.sample_size = spec.resolve(n);
    opts.plan_seed = seed;
    opts.rendering = config.rendering;
    const Explanation ex = explain(data.image, ref.scene, predictor, opts);
    const bool ex_zero = is_all_zero(ex.map);
    const SaliencyMap q = normalize(ex.map);

    ReportRow row;
    row.sample_id = ref.id;
    row.function = fn.kind;
    row.dataset = dataset;
    row.sample_size = spec.label();
    row.plan_size = ex.plan.sample_size;
    row.emd = emd(gt_sig, to_signature(q, config.bins));
    row.kl = kl_div(gt, q, config.kl_eps);
    row.gt_fallback = gt_zero;
    row.explanation_fallback = ex_zero;
    // The all-ones vector leads every plan, so outputs[0] is f(image).
    row.prediction = ex.outputs.front();
    row.label = data.label;
    rows.push_back(std::move(row));
  }
  return rows;
}

bool agrees(const PredictorInfo& info, double prediction, double label) {
  if (info.is_classifier) {
    const double cls = prediction >= (info.raw_logit ? 0.0 : 0.5) ? 1.0 : 0.0;
    return cls == label;
  }
  return std::abs(prediction - label) <= kRegressionTolerance;
}

std::vector<Aggregate> aggregate_rows(const std::vector<ReportRow>& rows, const ExperimentConfig& config,
                                      const std::vector<SampleSizeSpec>& sizes) {
  std::vector<Aggregate> out;
  for (auto fn : config.functions) {
    for (auto ds : config.datasets) {
      for (const auto& spec : sizes) {
        Aggregate agg;
        agg.function = fn;
        agg.dataset = ds;
        agg.sample_size = spec.label();
        std::vector<double> e, k;
        for (const auto& r : rows) {
          if (r.function != fn || r.dataset != ds || r.sample_size != agg.sample_size) continue;
          e.push_back(r.emd);
          k.push_back(r.kl);
          agg.gt_fallbacks += r.gt_fallback;
          agg.explanation_fallbacks += r.explanation_fallback;
        }
        agg.count = static_cast<int>(e.size());
        agg.emd = summarize(std::move(e));
        agg.kl = summarize(std::move(k));
        out.push_back(std::move(agg));
      }
    }
  }
  return out;
}

MetricReport run(const ExperimentConfig& config) {
  config.validate();
  const auto sizes = config.effective_sample_sizes();
  const json fingerprint = config_fingerprint(config);
  Checkpoint checkpoint(config, fingerprint);

  MetricReport report;
  report.experiment = config.experiment;
  report.config = fingerprint;
  for (const auto& s : sizes) report.sample_sizes.push_back(s.label());

  for (auto ds : config.datasets) {
    const SampleSource source = collect_samples(config, ds);
    for (auto fn_kind : config.functions) {
      const AttributionFunction fn = AttributionFunction::make(fn_kind);
      std::vector<std::vector<ReportRow>> per_sample(source.samples.size());
      std::vector<std::size_t> pending;
      for (std::size_t i = 0; i < source.samples.size(); ++i) {
        if (const auto* rows = checkpoint.find(unit_key(fn_kind, ds, source.samples[i].id))) {
          per_sample[i] = *rows;
        } else {
          pending.push_back(i);
        }
      }

      std::unique_ptr<BridgePredictor> bridge;
      PredictorInfo info = OraclePredictor(source.samples.front().scene, fn).info();
      auto fail = [&](const std::string& where, const std::exception& e) -> ExperimentError {
        const bool is_bridge = dynamic_cast<const BridgeError*>(&e) != nullptr;
        std::string msg = where + " (" + std::string(to_string(fn_kind)) + "/" + std::string(to_string(ds)) +
                          "): " + e.what();
        if (!checkpoint.path().empty()) {
          msg += "; finished samples are kept in " + checkpoint.path().string() + ", rerun with --resume";
        }
        return ExperimentError(msg, is_bridge);
      };
      if (config.bridge_cmd && !pending.empty()) {
        BridgeOptions opts;
        opts.command = substitute(substitute(*config.bridge_cmd, "{function}", to_string(fn_kind)), "{dataset}",
                                  to_string(ds));
        opts.timeout = config.bridge_timeout;
        try {
          bridge = std::make_unique<BridgePredictor>(opts);
        } catch (const std::exception& e) {
          throw fail("starting bridge", e);
        }
        info = bridge->info();
      }

      parallel_for(pending.size(), config.threads, [&](std::size_t p) {
        const SampleRef& ref = source.samples[pending[p]];
        try {
          std::vector<ReportRow> rows;
          if (bridge) {
            rows = evaluate_sample(config, sizes, source, ref, fn, ds, *bridge);
          } else {
            OraclePredictor oracle(ref.scene, fn);
            rows = evaluate_sample(config, sizes, source, ref, fn, ds, oracle);
          }
          checkpoint.record(unit_key(fn_kind, ds, ref.id), rows);
          per_sample[pending[p]] = std::move(rows);
        } catch (const std::exception& e) {
          throw fail("sample " + std::to_string(ref.id), e);
        }
      });

      Agreement agreement;
      agreement.function = fn_kind;
      agreement.dataset = ds;
      double abs_err = 0.0;
      int hits = 0;
      for (const auto& rows : per_sample) {
        const ReportRow& r = rows.front();
        ++agreement.count;
        hits += agrees(info, r.prediction, r.label);
        abs_err += std::abs(r.prediction - r.label);
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
      }
      agreement.accuracy = static_cast<double>(hits) / agreement.count;
      agreement.mean_abs_error = abs_err / agreement.count;
      report.agreement.push_back(agreement);
    }
  }

  // Rows leave grouped by (dataset, function); present them by function first.
  std::map<std::string, int> size_order;
  for (std::size_t i = 0; i < sizes.size(); ++i) size_order[sizes[i].label()] = static_cast<int>(i);
  auto position = [&](auto list, auto value) {
    return std::find(list.begin(), list.end(), value) - list.begin();
  };
  std::stable_sort(report.rows.begin(), report.rows.end(), [&](const ReportRow& a, const ReportRow& b) {
    const auto ka = std::make_tuple(position(config.functions, a.function), position(config.datasets, a.dataset),
                                    a.sample_id, size_order[a.sample_size]);
    const auto kb = std::make_tuple(position(config.functions, b.function), position(config.datasets, b.dataset),
                                    b.sample_id, size_order[b.sample_size]);
    return ka < kb;
  });
  std::stable_sort(report.agreement.begin(), report.agreement.end(), [&](const Agreement& a, const Agreement& b) {
    return std::make_pair(position(config.functions, a.function), position(config.datasets, a.dataset)) <
           std::make_pair(position(config.functions, b.function), position(config.datasets, b.dataset));
  });
  report.aggregates = aggregate_rows(report.rows, config, sizes);

  if (config.baseline_file) {
    std::ifstream in(*config.baseline_file);
    if (!in) throw IoError("cannot read baseline " + config.baseline_file->string());
    try {
      report.baseline = json::parse(in);
    } catch (const json::exception& e) {
      throw SchemaError("malformed baseline " + config.baseline_file->string() + ": " + e.what());
    }
  }
  checkpoint.finish();
  return report;
}

json stats_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"median", s.median}, {"std", s.std}};
}

json aggregate_json(const Aggregate& a) {
  return {{"function", to_string(a.function)},
          {"dataset", to_string(a.dataset)},
          {"sample_size", a.sample_size},
          {"count", a.count},
          {"emd", stats_json(a.emd)},
          {"kl", stats_json(a.kl)},
          {"gt_fallbacks", a.gt_fallbacks},
          {"explanation_fallbacks", a.explanation_fallbacks}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

MetricReport run_experiment1(const ExperimentConfig& config) {
  if (config.experiment != 1) throw InvalidArgument("configuration is not for experiment 1");
  return run(config);
}

MetricReport run_experiment2(const ExperimentConfig& config) {
  if (config.experiment != 2) throw InvalidArgument("configuration is not for experiment 2");
  return run(config);
}

MetricReport run_experiment3(const ExperimentConfig& config) {
  if (config.experiment != 3) throw InvalidArgument("configuration is not for experiment 3");
  return run(config);
}

MetricReport run_experiment(const ExperimentConfig& config) { return run(config); }

std::string report_csv(const MetricReport& report) {
  std::string out = "sample_id,function,dataset,sample_size,emd,kl\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.sample_id) + ',' + std::string(to_string(r.function)) + ',' +
           std::string(to_string(r.dataset)) + ',' + r.sample_size + ',' + format_double(r.emd) + ',' +
           format_double(r.kl) + '\n';
  }
  return out;
}

std::string curve_csv(const MetricReport& report) {
  std::string out = "function,dataset,metric";
  for (const auto& s : report.sample_sizes) out += ',' + s;
  out += '\n';
  std::vector<std::pair<FunctionKind, DatasetKind>> groups;
  for (const auto& a : report.aggregates) {
    const auto key = std::make_pair(a.function, a.dataset);
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  for (const auto& [fn, ds] : groups) {
    for (const char* metric : {"emd", "kl"}) {
      out += std::string(to_string(fn)) + ',' + std::string(to_string(ds)) + ',' + metric;
      for (const auto& s : report.sample_sizes) {
        for (const auto& a : report.aggregates) {
          if (a.function == fn && a.dataset == ds && a.sample_size == s) {
            out += ',' + format_double(std::string_view(metric) == "emd" ? a.emd.mean : a.kl.mean);
          }
        }
      }
      out += '\n';
    }
  }
  return out;
}

json report_summary(const MetricReport& report) {
  json j;
  j["experiment"] = report.experiment;
  j["config"] = report.config;
  j["sample_sizes"] = report.sample_sizes;
  j["aggregates"] = json::array();
  for (const auto& a : report.aggregates) j["aggregates"].push_back(aggregate_json(a));
  j["agreement"] = json::array();
  for (const auto& a : report.agreement) {
    j["agreement"].push_back({{"function", to_string(a.function)},
                              {"dataset", to_string(a.dataset)},
                              {"count", a.count},
                              {"accuracy", a.accuracy},
                              {"mean_abs_error", a.mean_abs_error}});
  }
  j["baseline"] = report.baseline;
  return j;
}

json baseline_json(const MetricReport& report) {
  json j;
  j["experiment"] = report.experiment;
  j["sample_size"] = report.sample_sizes.empty() ? "" : report.sample_sizes.front();
  j["aggregates"] = json::array();
  for (const auto& a : report.aggregates) {
    if (!report.sample_sizes.empty() && a.sample_size == report.sample_sizes.front()) {
      j["aggregates"].push_back(aggregate_json(a));
    }
  }
  return j;
}

void write_report(const MetricReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "report.csv", report_csv(report));
  write_text(out_dir / "summary.json", report_summary(report).dump(2) + "\n");
  if (report.experiment == 1) {
    write_text(out_dir / "curve.csv", curve_csv(report));
    write_text(out_dir / "baseline.json", baseline_json(report).dump(2) + "\n");
  }
}

}  // namespace xaibench
