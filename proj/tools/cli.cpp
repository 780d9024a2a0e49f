#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "xaibench/bridge.hpp"
#include "xaibench/datagen.hpp"
#include "xaibench/explainer.hpp"
#include "xaibench/harness.hpp"
#include "xaibench/image_io.hpp"
#include "xaibench/metrics.hpp"
#include "xaibench/parallel.hpp"
#include "xaibench/predictor.hpp"

namespace xaibench {

using nlohmann::json;

namespace {

// Config files ending in .json: nested objects become sections, arrays
// become multiple inputs.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("malformed JSON config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("JSON config must be an object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  }

  static void flatten(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

class UsageError : public Error {
 public:
  using Error::Error;
};

template <typename T, typename Parse>
std::vector<T> parse_list(const std::vector<std::string>& names, const std::vector<T>& all, Parse parse) {
  std::vector<T> out;
  for (const auto& name : names) {
    if (name == "all") {
      out = all;
      continue;
    }
    try {
      const T value = parse(name);
      if (std::find(out.begin(), out.end(), value) == out.end()) out.push_back(value);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

std::vector<DatasetKind> parse_datasets(const std::vector<std::string>& names) {
  return parse_list<DatasetKind>(names, {DatasetKind::Shape, DatasetKind::Color},
                                 [](const std::string& s) { return parse_dataset_kind(s); });
}

std::vector<FunctionKind> parse_functions(const std::vector<std::string>& names) {
  return parse_list<FunctionKind>(names, {kAllFunctions.begin(), kAllFunctions.end()},
                                  [](const std::string& s) { return parse_function_kind(s); });
}

SampleSizeSpec parse_size(const std::string& text) {
  try {
    return SampleSizeSpec::parse(text);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

struct GenerateArgs {
  std::string dataset = "shape";
  int n = 10;
  int n_train = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const auto kinds = parse_datasets({a.dataset});
  if (kinds.size() != 1) throw UsageError("generate takes a single dataset");
  GenConfig config = GenConfig::defaults(kinds.front());
  config.n_val = a.n;
  config.n_train = a.n_train;
  config.master_seed = a.seed;
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const DatasetManifest manifest = generate_dataset(config, a.out);
  out << "wrote " << manifest.samples.size() << " samples to " << a.out << '\n';
  return 0;
}

struct ExplainArgs {
  std::string dataset = "shape";
  std::string function = "suum";
  std::uint64_t seed = 0;
  int id = 0;
  std::string data;
  std::string sample_size = "full";
  bool absolute = false;
  std::string out;
};

int cmd_explain(const ExplainArgs& a, std::ostream& out) {
  const auto fns = parse_functions({a.function});
  if (fns.size() != 1) throw UsageError("explain takes a single function");
  const AttributionFunction fn = AttributionFunction::make(fns.front());
  const SampleSizeSpec size = parse_size(a.sample_size);

  Scene scene;
  Image image;
  if (!a.data.empty()) {
    const Dataset ds = Dataset::open(a.data);
    const auto& samples = ds.manifest().samples;
    const auto it = std::find_if(samples.begin(), samples.end(), [&](const SampleRecord& r) { return r.id == a.id; });
    if (it == samples.end()) throw UsageError("dataset has no sample " + std::to_string(a.id));
    LoadedSample loaded = ds.load(static_cast<std::size_t>(it - samples.begin()));
    scene = std::move(loaded.scene);
    image = std::move(loaded.image);
  } else {
    const auto kinds = parse_datasets({a.dataset});
    if (kinds.size() != 1) throw UsageError("explain takes a single dataset");
    scene = evaluation_scene(kinds.front(), a.seed, a.id);
    image = render_scene(scene);
  }

  OraclePredictor oracle(scene, fn);
  ExplainOptions opts;
  opts.sample_size = size.resolve(static_cast<int>(scene.objects.size()));
  opts.plan_seed = plan_seed(a.seed, a.id);
  opts.rendering = a.absolute ? CoefficientRendering::Absolute : CoefficientRendering::ClipNegative;
  const Explanation ex = explain(image, scene, oracle, opts);

  const SaliencyMap gt = normalize(ground_truth_map(scene, fn));
  const SaliencyMap q = normalize(ex.map);
  json j;
  j["sample_id"] = a.id;
  j["function"] = to_string(fn.kind);
  j["plan_size"] = ex.plan.sample_size;
  j["coefficients"] = ex.fit.coefficients;
  j["intercept"] = ex.fit.intercept;
  j["ridge_applied"] = ex.fit.ridge_applied;
  j["emd"] = emd(to_signature(gt), to_signature(q));
  j["kl"] = kl_div(gt, q);
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    write_gt_map(std::filesystem::path(a.out) / "explanation.gtmap", ex.map);
    write_gt_map(std::filesystem::path(a.out) / "ground_truth.gtmap", ground_truth_map(scene, fn));
    write_png(std::filesystem::path(a.out) / "image.png", image);
  }
  out << j.dump(2) << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string gt;
  std::string map;
  int bins = kDefaultBinGrid;
  double eps = kDefaultKlEpsilon;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const SaliencyMap gt = read_gt_map(a.gt);
  const SaliencyMap map = read_gt_map(a.map);
  if (gt.width() != map.width() || gt.height() != map.height()) {
    throw UsageError("maps differ in size");
  }
  const SaliencyMap p = normalize(gt);
  const SaliencyMap q = normalize(map);
  json j;
  j["emd"] = emd(to_signature(p, a.bins), to_signature(q, a.bins));
  j["kl"] = kl_div(p, q, a.eps);
  j["gt_fallback"] = is_all_zero(gt);
  j["explanation_fallback"] = is_all_zero(map);
  out << j.dump(2) << '\n';
  return 0;
}

struct ExperimentArgs {
  int experiment = 0;
  std::vector<std::string> datasets{"all"};
  std::vector<std::string> functions{"all"};
  int n = 200;
  std::vector<std::string> sample_sizes;
  int bins = kDefaultBinGrid;
  double eps = kDefaultKlEpsilon;
  std::string bridge_cmd;
  int bridge_timeout_ms = 60000;
  std::uint64_t seed = 0;
  std::string data;
  std::string out;
  std::string baseline;
  bool absolute = false;
  unsigned threads = 0;
  bool resume = false;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  ExperimentConfig config;
  config.experiment = a.experiment;
  config.datasets = parse_datasets(a.datasets);
  config.functions = parse_functions(a.functions);
  config.n_samples = a.n;
  for (const auto& s : a.sample_sizes) config.sample_sizes.push_back(parse_size(s));
  if (a.experiment != 1 && !config.sample_sizes.empty()) {
    throw UsageError("--sample-sizes applies to experiment 1; experiments 2 and 3 use the full plan");
  }
  config.bins = a.bins;
  config.kl_eps = a.eps;
  if (!a.bridge_cmd.empty()) config.bridge_cmd = a.bridge_cmd;
  config.bridge_timeout = std::chrono::milliseconds(a.bridge_timeout_ms);
  config.master_seed = a.seed;
  if (!a.data.empty()) config.data_dir = a.data;
  config.out_dir = a.out;
  if (!a.baseline.empty()) config.baseline_file = a.baseline;
  config.rendering = a.absolute ? CoefficientRendering::Absolute : CoefficientRendering::ClipNegative;
  config.threads = a.threads == 0 ? default_thread_count() : a.threads;
  config.resume = a.resume;
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  const MetricReport report = run_experiment(config);
  write_report(report, config.out_dir);
  char line[160];
  for (const auto& agg : report.aggregates) {
    std::snprintf(line, sizeof(line), "%-6s %-6s %-5s n=%-4d emd=%.4f kl=%.4f\n",
                  std::string(to_string(agg.function)).c_str(), std::string(to_string(agg.dataset)).c_str(),
                  agg.sample_size.c_str(), agg.count, agg.emd.mean, agg.kl.mean);
    out << line;
  }
  out << "reports written to " << a.out << '\n';
  return 0;
}

struct ServeArgs {
  std::string dataset = "shape";
  std::string function = "suum";
  std::uint64_t seed = 0;
  int n = 200;
  std::string data;
};

int cmd_serve_oracle(const ServeArgs& a, std::istream& in, std::ostream& out) {
  const auto fns = parse_functions({a.function});
  const auto kinds = parse_datasets({a.dataset});
  if (fns.size() != 1 || kinds.size() != 1) throw UsageError("serve-oracle takes one function and one dataset");
  std::vector<Scene> scenes;
  if (!a.data.empty()) {
    for (const auto& rec : Dataset::open(a.data).manifest().samples) scenes.push_back(rec.scene);
  } else {
    for (int id = 0; id < a.n; ++id) scenes.push_back(evaluation_scene(kinds.front(), a.seed, id));
  }
  if (scenes.empty()) throw UsageError("serve-oracle needs at least one scene");
  ScenePoolOracle oracle(std::move(scenes), AttributionFunction::make(fns.front()));
  serve_bridge(in, out, oracle.info(), [&](const Image& image) { return oracle.predict(image); });
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic ground-truth benchmark for explanation methods", "xaibench"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or JSON file with option values");
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    const std::string& v = args[i + 1];
    if (args[i] == "--config" && v.size() > 5 && v.ends_with(".json")) {
      app.config_formatter(std::make_shared<JsonConfig>());
    }
  }

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a dataset of rendered scenes with ground-truth maps");
  generate->add_option("--dataset", gen.dataset, "shape or color")->capture_default_str();
  generate->add_option("--n", gen.n, "validation samples")->capture_default_str()->check(CLI::NonNegativeNumber);
  generate->add_option("--n-train", gen.n_train, "training samples")->capture_default_str()->check(CLI::NonNegativeNumber);
  generate->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  generate->add_option("--out", gen.out, "output directory")->required();

  ExplainArgs ex;
  auto* explain_cmd = app.add_subcommand("explain", "Explain the oracle on one scene");
  explain_cmd->add_option("--dataset", ex.dataset, "shape or color")->capture_default_str();
  explain_cmd->add_option("--function", ex.function, "ssin, suum or class")->capture_default_str();
  explain_cmd->add_option("--seed", ex.seed, "master seed")->capture_default_str();
  explain_cmd->add_option("--id", ex.id, "sample id")->capture_default_str()->check(CLI::NonNegativeNumber);
  explain_cmd->add_option("--data", ex.data, "generated dataset to read the sample from");
  explain_cmd->add_option("--sample-size", ex.sample_size, "min, full or a count")->capture_default_str();
  explain_cmd->add_flag("--abs", ex.absolute, "render coefficient magnitudes instead of clipping negatives");
  explain_cmd->add_option("--out", ex.out, "directory for the maps and image");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a saliency map against a ground-truth map");
  evaluate->add_option("--gt", ev.gt, "ground-truth map (.gtmap)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--map", ev.map, "explanation map (.gtmap)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--bins", ev.bins, "EMD bin grid")->capture_default_str()->check(CLI::PositiveNumber);
  evaluate->add_option("--eps", ev.eps, "KL epsilon")->capture_default_str()->check(CLI::PositiveNumber);

  ExperimentArgs xa;
  auto* experiment = app.add_subcommand("experiment", "Run experiment 1, 2 or 3");
  experiment->add_option("id", xa.experiment, "experiment number")->required()->check(CLI::Range(1, 3));
  experiment->add_option("--dataset", xa.datasets, "shape, color or all")->delimiter(',')->capture_default_str();
  experiment->add_option("--function", xa.functions, "ssin, suum, class or all")->delimiter(',')->capture_default_str();
  experiment->add_option("--n", xa.n, "scenes per sub-experiment")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--sample-sizes", xa.sample_sizes, "experiment 1 curve, e.g. min,8,16,32,full")
      ->delimiter(',');
  experiment->add_option("--bins", xa.bins, "EMD bin grid")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--eps", xa.eps, "KL epsilon")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--bridge-cmd", xa.bridge_cmd,
                         "model process for experiment 3; {function} and {dataset} are substituted");
  experiment->add_option("--bridge-timeout", xa.bridge_timeout_ms, "bridge reply timeout in ms")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  experiment->add_option("--seed", xa.seed, "master seed")->capture_default_str();
  experiment->add_option("--data", xa.data, "generated dataset to evaluate (validation split)");
  experiment->add_option("--out", xa.out, "report directory")->required();
  experiment->add_option("--baseline", xa.baseline, "baseline.json from experiment 1 to attach");
  experiment->add_flag("--abs", xa.absolute, "render coefficient magnitudes instead of clipping negatives");
  experiment->add_option("--threads", xa.threads, "worker threads (0: all cores)")->capture_default_str();
  experiment->add_flag("--resume", xa.resume, "continue from the checkpoint in --out");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve-oracle", "Serve the oracle over the bridge protocol on stdin/stdout");
  serve->add_option("--dataset", sv.dataset, "shape or color")->capture_default_str();
  serve->add_option("--function", sv.function, "ssin, suum or class")->capture_default_str();
  serve->add_option("--seed", sv.seed, "master seed of the evaluation scenes")->capture_default_str();
  serve->add_option("--n", sv.n, "number of evaluation scenes")->capture_default_str()->check(CLI::PositiveNumber);
  serve->add_option("--data", sv.data, "generated dataset whose scenes are served");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) return cmd_generate(gen, out);
    if (*explain_cmd) return cmd_explain(ex, out);
    if (*evaluate) return cmd_evaluate(ev, out);
    if (*experiment) return cmd_experiment(xa, out);
    return cmd_serve_oracle(sv, in, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace xaibench
