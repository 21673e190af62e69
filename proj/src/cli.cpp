#include "tabscm/cli.hpp"

#include <chrono>
#include <ctime>
#include <iostream>
#include <set>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "tabscm/graph.hpp"
#include "tabscm/rules.hpp"
#include "tabscm/schema_json.hpp"

namespace tabscm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

json default_config() {
  const DiffusionConfig diff;
  GbdtConfig utility_gbdt;
  utility_gbdt.subsample = 0.8;
  return {
      {"data",
       {{"train", nullptr},
        {"test", nullptr},
        {"schema", nullptr},
        {"split", {{"train", 0.8}, {"val", 0.1}, {"test", 0.1}}},
        {"missing_tokens", CsvOptions{}.missing_tokens}}},
      {"discovery", discovery_config_to_json(DiscoveryConfig{})},
      {"mechanisms",
       {{"epochs", diff.epochs},
        {"steps", diff.steps},
        {"batch_size", diff.batch_size},
        {"learning_rate", diff.learning_rate},
        {"hidden", diff.hidden},
        {"hidden_layers", diff.hidden_layers},
        {"time_dim", diff.time_dim},
        {"gbdt", gbdt_config_to_json(GbdtConfig{})}}},
      {"sampling", {{"n", 5000}, {"seed", 0}}},
      {"upsample", {{"label", nullptr}, {"counts", json::object()}, {"mode", "auto"}}},
      {"evaluation",
       {{"rules", nullptr},
        {"bins", 5},
        {"c2st", true},
        {"c2st_splits", 5},
        {"alpha_beta", true},
        {"grid", 20},
        {"repeats", 5},
        {"seed", 0},
        {"target", nullptr},
        {"task", nullptr},
        {"positive", nullptr},
        {"gbdt", gbdt_config_to_json(utility_gbdt)}}},
      {"output_dir", "out"},
      {"seed", 0},
  };
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

std::string config_hash(const json& config) { return hex64(fnv1a64(config.dump())); }

namespace {

void merge(json& base, const json& user) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      merge(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

void unknown_keys(const json& user, const json& reference, const std::string& prefix, std::vector<std::string>& errors) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!reference.contains(it.key())) {
      errors.push_back("unknown key '" + path + "'");
      continue;
    }
    if (path == "upsample.counts") continue;
    if (it.value().is_object() && reference[it.key()].is_object()) unknown_keys(it.value(), reference[it.key()], path, errors);
  }
}

template <class Fn>
void check(std::vector<std::string>& errors, const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const json::exception& e) {
    errors.push_back(where + ": " + e.what());
  } catch (const std::exception& e) {
    errors.push_back(where + ": " + e.what());
  }
}

fs::path optional_path(const json& v, const fs::path& base) {
  if (v.is_null()) return {};
  const fs::path p = v.get<std::string>();
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

RunConfig resolve_config(const json& user, const fs::path& base_dir) {
  if (!user.is_object()) throw ConfigError("configuration must be a JSON object");
  std::vector<std::string> errors;
  const json defaults = default_config();
  unknown_keys(user, defaults, "", errors);
  json c = defaults;
  merge(c, user);

  RunConfig rc;
  rc.canonical = c;
  rc.base_dir = base_dir;
  const auto& data = c["data"];
  check(errors, "data", [&] {
    rc.train = optional_path(data.at("train"), base_dir);
    rc.test = optional_path(data.at("test"), base_dir);
    rc.schema = optional_path(data.at("schema"), base_dir);
    rc.csv.missing_tokens = data.at("missing_tokens").get<std::vector<std::string>>();
  });
  check(errors, "data.split", [&] {
    const auto& s = data.at("split");
    rc.split_fractions = {s.at("train").get<double>(), s.at("val").get<double>(), s.at("test").get<double>()};
    const auto& f = rc.split_fractions;
    if (!(f.train > 0 && f.val > 0 && f.test > 0) || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
      throw ConfigError("fractions must be positive and sum to 1");
    }
  });
  check(errors, "discovery", [&] {
    rc.discovery = discovery_config_from_json(c["discovery"]);
    const auto& d = rc.discovery;
    if (!(d.pc.alpha > 0 && d.pc.alpha < 1)) throw ConfigError("pc.alpha must lie in (0, 1)");
    if (d.pc.bins < 2) throw ConfigError("pc.bins must be at least 2");
    if (d.notears.lambda1 < 0) throw ConfigError("notears.lambda1 must be nonnegative");
    if (d.notears.w_min < 0) throw ConfigError("notears.w_min must be nonnegative");
    if (d.ges.penalty <= 0) throw ConfigError("ges.penalty must be positive");
  });
  check(errors, "mechanisms", [&] {
    const auto& m = c["mechanisms"];
    auto& d = rc.fit.diffusion;
    d.epochs = m.at("epochs").get<std::size_t>();
    d.steps = m.at("steps").get<std::size_t>();
    d.batch_size = m.at("batch_size").get<std::size_t>();
    d.learning_rate = m.at("learning_rate").get<double>();
    d.hidden = m.at("hidden").get<std::size_t>();
    d.hidden_layers = m.at("hidden_layers").get<std::size_t>();
    d.time_dim = m.at("time_dim").get<std::size_t>();
    rc.fit.gbdt = gbdt_config_from_json(m.at("gbdt"));
    std::vector<std::string> bad;
    if (d.epochs == 0) bad.push_back("epochs must be positive");
    if (d.steps == 0) bad.push_back("steps must be positive");
    if (d.batch_size == 0) bad.push_back("batch_size must be positive");
    if (!(d.learning_rate > 0)) bad.push_back("learning_rate must be positive");
    if (d.hidden == 0 || d.hidden_layers == 0) bad.push_back("hidden and hidden_layers must be positive");
    if (d.time_dim < 2 || d.time_dim % 2) bad.push_back("time_dim must be an even number >= 2");
    if (rc.fit.gbdt.n_trees == 0 || rc.fit.gbdt.depth == 0) bad.push_back("gbdt.n_trees and gbdt.depth must be positive");
    if (!bad.empty()) {
      std::string msg = bad[0];
      for (std::size_t i = 1; i < bad.size(); ++i) msg += "; " + bad[i];
      throw ConfigError(msg);
    }
  });
  check(errors, "sampling", [&] {
    rc.sample_n = c["sampling"].at("n").get<std::size_t>();
    rc.sample_seed = c["sampling"].at("seed").get<std::uint64_t>();
  });
  check(errors, "upsample", [&] {
    const auto& u = c["upsample"];
    if (!u.at("label").is_null()) rc.upsample_label = u.at("label").get<std::string>();
    rc.upsample_counts = u.at("counts").get<std::map<std::string, std::size_t>>();
    rc.upsample_mode = parse_upsample_mode(u.at("mode").get<std::string>());
  });
  check(errors, "evaluation", [&] {
    const auto& e = c["evaluation"];
    rc.evaluation = evaluation_config_from_json(e);
    rc.evaluation.utility.gbdt = gbdt_config_from_json(e.at("gbdt"));
    rc.rules = optional_path(e.at("rules"), base_dir);
    if (rc.evaluation.bins < 2) throw ConfigError("bins must be at least 2");
    if (rc.evaluation.grid == 0) throw ConfigError("grid must be positive");
  });
  check(errors, "seed", [&] { rc.seed = c.at("seed").get<std::uint64_t>(); });
  check(errors, "output_dir", [&] { rc.output_dir = optional_path(c.at("output_dir"), base_dir); });
  rc.fit.seed = rc.seed;

  for (const auto& [label, path] : {std::pair<const char*, const fs::path&>{"data.train", rc.train},
                                    {"data.test", rc.test},
                                    {"data.schema", rc.schema},
                                    {"evaluation.rules", rc.rules}}) {
    if (!path.empty() && !fs::exists(path)) errors.push_back(std::string(label) + ": file '" + path.string() + "' does not exist");
  }
  if (!errors.empty()) {
    std::string msg = std::to_string(errors.size()) + " configuration problem(s):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  rc.hash = config_hash(c);
  return rc;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Datasets {
  Table train;
  Table test;
};

fs::path require(const fs::path& p, const std::string& what) {
  if (p.empty()) throw ConfigError(what + " is not set");
  return p;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, j.dump(2) + "\n");
  spdlog::info("wrote {}", path.string());
}

void write_table(const fs::path& path, const Table& table, const RunConfig& rc, json meta) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_csv(table, path);
  meta["config_hash"] = rc.hash;
  meta["rows"] = table.n_rows();
  write_text_file(fs::path(path.string() + ".meta.json"), meta.dump(2) + "\n");
  spdlog::info("wrote {} ({} rows)", path.string(), table.n_rows());
}

Table load_raw_training(const RunConfig& rc) {
  std::optional<TableSchema> schema;
  if (!rc.schema.empty()) schema = load_schema(rc.schema);
  return load_csv(require(rc.train, "data.train"), schema, rc.csv);
}

/// Loads `path` with `schema` and imputes it, requiring the result to keep the schema.
Table load_conforming(const fs::path& path, const TableSchema& schema, const CsvOptions& csv) {
  Table t = impute_missing(load_csv(path, schema, csv));
  if (!(t.schema() == schema)) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (!(t.schema()[c] == schema[c])) {
        throw SchemaError("'" + path.string() + "' has missing values in column '" + schema[c].name +
                          "', which had none in the training data");
      }
    }
  }
  return t;
}

Datasets load_datasets(const RunConfig& rc) {
  Table train = impute_missing(load_raw_training(rc));
  Datasets ds;
  if (!rc.test.empty()) {
    ds.train = std::move(train);
    ds.test = load_conforming(rc.test, ds.train.schema(), rc.csv);
  } else {
    auto parts = split(train, rc.split_fractions, rc.seed);
    ds.train = std::move(parts.train);
    ds.test = std::move(parts.test);
  }
  spdlog::info("training rows {}, test rows {}", ds.train.n_rows(), ds.test.n_rows());
  return ds;
}

json graph_document(const DiscoveryResult& result, const RunConfig& rc) {
  json j{{"config_hash", rc.hash},
         {"algo", to_string(rc.discovery.algorithm)},
         {"cpdag", graph_to_json(result.cpdag)},
         {"dag", graph_to_json(result.dag)},
         {"used_fallback_orientation", result.used_fallback_orientation}};
  if (result.weights) {
    const auto& w = result.weights->matrix();
    json rows = json::array();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < w.cols(); ++k) row.push_back(w(i, k));
      rows.push_back(row);
    }
    j["weights"] = rows;
  }
  return j;
}

DiscoveryResult run_discovery(const Table& train, const RunConfig& rc) {
  spdlog::info("running {} discovery on {} columns", to_string(rc.discovery.algorithm), train.n_cols());
  auto result = discover(train, rc.discovery);
  spdlog::info("discovered {} directed edges", result.dag.edge_count());
  return result;
}

Dag read_graph(const fs::path& path) {
  const json j = json::parse(read_text_file(path));
  return dag_from_json(j.contains("dag") ? j["dag"] : j);
}

ScmModel run_fit(const Table& train, const Dag& dag, const RunConfig& rc) {
  spdlog::info("fitting mechanisms (epochs {}, steps {})", rc.fit.diffusion.epochs, rc.fit.diffusion.steps);
  ScmModel model = ScmModel::fit(train, dag, rc.fit);
  model.set_provenance({{"config_hash", rc.hash}});
  return model;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json run_evaluation(const Table& real, const Table& syn, const RunConfig& rc) {
  EvaluationConfig ec = rc.evaluation;
  if (!rc.rules.empty()) ec.rules = load_rules(rc.rules);
  const auto report = evaluate(real, syn, ec);
  json j = report.to_json();
  j["provenance"] = {{"config_hash", rc.hash},
                     {"seed", rc.seed},
                     {"sampling_seed", rc.sample_seed},
                     {"evaluation_seed", rc.evaluation.c2st.seed},
                     {"real_rows", real.n_rows()},
                     {"synthetic_rows", syn.n_rows()},
                     {"timestamp", timestamp()}};
  return j;
}

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  unsigned threads = 0;
  bool quiet = false;
};

/// Builds the effective configuration: config file, then flag-derived
/// settings, then explicit overrides.
RunConfig build_config(const Common& common, const std::vector<std::pair<std::string, json>>& flags) {
  json user = json::object();
  fs::path base;
  if (!common.config_path.empty()) {
    const fs::path cp = common.config_path;
    try {
      user = json::parse(read_text_file(cp));
    } catch (const json::exception& e) {
      throw ConfigError("config '" + cp.string() + "' is not valid JSON: " + e.what());
    }
    base = cp.parent_path();
  }
  static const std::set<std::string> path_keys{"data.train", "data.test", "data.schema", "evaluation.rules"};
  for (const auto& [key, value] : flags) {
    // Paths given on the command line are relative to the working directory.
    if (path_keys.count(key)) {
      apply_override(user, key + "=" + json(fs::absolute(value.get<std::string>()).lexically_normal().string()).dump());
    } else {
      apply_override(user, key + "=" + value.dump());
    }
  }
  for (const auto& o : common.overrides) apply_override(user, o);
  return resolve_config(user, base);
}

std::map<std::string, std::size_t> parse_counts(const std::vector<std::string>& items) {
  std::map<std::string, std::size_t> counts;
  for (const auto& item : items) {
    const auto eq = item.rfind('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("count '" + item + "' is not of the form category=N");
    const std::string n = item.substr(eq + 1);
    std::size_t value = 0;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(n, &used);
      if (used != n.size() || v < 0) throw std::invalid_argument("");
      value = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ConfigError("count '" + item + "' needs a nonnegative integer");
    }
    counts[item.substr(0, eq)] = value;
  }
  return counts;
}

std::string error_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const GraphError*>(&e)) return "graph";
  if (dynamic_cast<const FitError*>(&e)) return "fit";
  if (dynamic_cast<const FormatError*>(&e)) return "format";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const Error*>(&e)) return "runtime";
  if (dynamic_cast<const json::exception*>(&e)) return "parse";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "io";
  return "internal";
}

int exit_code(const std::string& code) {
  static const std::map<std::string, int> codes{{"usage", 2},  {"config", 2}, {"parse", 3}, {"schema", 4},
                                                {"graph", 5},  {"fit", 6},    {"format", 7}, {"io", 8},
                                                {"runtime", 1}, {"internal", 1}};
  return codes.at(code);
}

/// Newlines would break the one-line error contract.
std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n') ch = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::get("tabscm");
  if (!logger) logger = spdlog::stderr_color_mt("tabscm");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Structural causal models for synthetic tabular data"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool set_is_override) {
    sub->add_option("--config", common.config_path, "JSON run configuration");
    sub->add_option("--override", common.overrides, "Configuration override key=value (repeatable)");
    if (set_is_override) sub->add_option("--set", common.overrides, "Alias of --override");
    sub->add_option("--threads", common.threads, "Worker threads (default: all cores)");
    sub->add_flag("--quiet", common.quiet, "Only log warnings and errors");
  };

  std::vector<std::pair<std::string, json>> flags;
  auto flag_string = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, help);
  };
  auto flag_number = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<double>(
        name, [&flags, key](double v) { flags.emplace_back(key, v); }, help);
  };
  auto flag_count = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<std::uint64_t>(
        name, [&flags, key](std::uint64_t v) { flags.emplace_back(key, v); }, help);
  };

  std::string out, graph_path, model_path, syn_path, label, mode;
  std::vector<std::string> interventions, counts;

  auto* infer = app.add_subcommand("infer", "Infer a schema from a CSV file");
  add_common(infer, true);
  flag_string(infer, "--data", "data.train", "CSV file");
  infer->add_option("--out", out, "Schema JSON output (default: <output_dir>/schema.json)");

  auto* disc = app.add_subcommand("discover", "Learn a causal graph");
  add_common(disc, true);
  flag_string(disc, "--data", "data.train", "Training CSV");
  flag_string(disc, "--schema", "data.schema", "Schema JSON");
  flag_string(disc, "--algo", "discovery.algo", "pc | ges | notears");
  flag_number(disc, "--alpha", "discovery.pc.alpha", "PC significance level");
  flag_string(disc, "--ci-test", "discovery.pc.ci_test", "fisherz | chisq");
  flag_count(disc, "--max-cond", "discovery.pc.max_condition_set", "PC maximum conditioning set size");
  flag_number(disc, "--penalty", "discovery.ges.penalty", "GES BIC penalty multiplier");
  flag_number(disc, "--lambda1", "discovery.notears.lambda1", "NOTEARS L1 weight");
  flag_number(disc, "--w-min", "discovery.notears.w_min", "NOTEARS edge threshold");
  flag_count(disc, "--seed", "seed", "Seed for the train/test split");
  disc->add_option("--out", out, "Graph JSON output (default: <output_dir>/graph.json)");

  auto* fit = app.add_subcommand("fit", "Fit the per-node mechanisms");
  add_common(fit, true);
  flag_string(fit, "--data", "data.train", "Training CSV");
  flag_string(fit, "--schema", "data.schema", "Schema JSON");
  fit->add_option("--graph", graph_path, "Graph JSON from `discover` (default: run discovery)");
  flag_count(fit, "--epochs", "mechanisms.epochs", "Diffusion training epochs");
  flag_count(fit, "--steps", "mechanisms.steps", "Diffusion steps T");
  flag_count(fit, "--seed", "seed", "Fit seed");
  fit->add_option("--out", out, "Model output (default: <output_dir>/model.json)");

  auto* sample = app.add_subcommand("sample", "Sample synthetic rows");
  add_common(sample, true);
  sample->add_option("--model", model_path, "Model file (default: <output_dir>/model.json)");
  flag_count(sample, "--n", "sampling.n", "Rows to generate");
  flag_count(sample, "--seed", "sampling.seed", "Sampling seed");
  sample->add_option("--out", out, "CSV output (default: <output_dir>/synthetic.csv)");

  auto* intervene = app.add_subcommand("intervene", "Sample under do-interventions");
  add_common(intervene, false);
  intervene->add_option("--model", model_path, "Model file (default: <output_dir>/model.json)");
  intervene->add_option("--set", interventions, "Intervention column=value (repeatable)")->required();
  flag_count(intervene, "--n", "sampling.n", "Rows to generate");
  flag_count(intervene, "--seed", "sampling.seed", "Sampling seed");
  intervene->add_option("--out", out, "CSV output (default: <output_dir>/interventional.csv)");

  auto* upsample = app.add_subcommand("upsample", "Generate extra rows for under-represented classes");
  add_common(upsample, true);
  upsample->add_option("--model", model_path, "Model file (default: <output_dir>/model.json)");
  flag_string(upsample, "--label", "upsample.label", "Categorical label column");
  upsample->add_option("--count", counts, "Desired total category=N (repeatable)");
  flag_string(upsample, "--mode", "upsample.mode", "auto | intervention | rejection");
  flag_count(upsample, "--seed", "sampling.seed", "Sampling seed");
  upsample->add_option("--out", out, "CSV output (default: <output_dir>/upsampled.csv)");

  auto* eval = app.add_subcommand("evaluate", "Score synthetic data against real data");
  add_common(eval, true);
  flag_string(eval, "--real", "data.test", "Held-out real CSV");
  flag_string(eval, "--train", "data.train", "Training CSV (schema source; split source when --real is absent)");
  flag_string(eval, "--schema", "data.schema", "Schema JSON");
  eval->add_option("--syn", syn_path, "Synthetic CSV (default: <output_dir>/synthetic.csv)");
  eval->add_option("--model", model_path, "Model file whose schema is used to read both tables");
  flag_string(eval, "--rules", "evaluation.rules", "Rules JSON");
  flag_string(eval, "--target", "evaluation.target", "Target column for utility and FNR/FPR");
  flag_string(eval, "--task", "evaluation.task", "classification | regression");
  bool no_c2st = false;
  eval->add_flag("--no-c2st", no_c2st, "Skip the classifier two-sample test");
  eval->add_option("--out", out, "Report output (default: <output_dir>/report.json)");

  auto* run = app.add_subcommand("run", "discover, fit, sample and evaluate from one config");
  add_common(run, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return exit_code("usage");
  }

  spdlog::set_level(common.quiet ? spdlog::level::warn : spdlog::level::info);
  if (common.threads > 0) set_thread_count(common.threads);

  try {
    if (no_c2st) flags.emplace_back("evaluation.c2st", false);
    if (!counts.empty()) flags.emplace_back("upsample.counts", parse_counts(counts));
    if (*run && common.config_path.empty()) throw ConfigError("run needs --config");
    const RunConfig rc = build_config(common, flags);
    auto pick = [&](const std::string& given, const std::string& fallback) {
      return given.empty() ? rc.output(fallback) : fs::path(given);
    };

    if (*infer) {
      const Table raw = load_raw_training(rc);
      json j = schema_to_json(raw.schema());
      j["config_hash"] = rc.hash;
      write_json(pick(out, "schema.json"), j);
    } else if (*disc) {
      const auto ds = load_datasets(rc);
      write_json(pick(out, "graph.json"), graph_document(run_discovery(ds.train, rc), rc));
    } else if (*fit) {
      const auto ds = load_datasets(rc);
      const Dag dag = graph_path.empty() ? run_discovery(ds.train, rc).dag : read_graph(graph_path);
      const ScmModel model = run_fit(ds.train, dag, rc);
      const fs::path path = pick(out, "model.json");
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      model.save(path);
      spdlog::info("wrote {}", path.string());
    } else if (*sample) {
      const auto model = ScmModel::load(pick(model_path, "model.json"));
      write_table(pick(out, "synthetic.csv"), model.sample(rc.sample_n, rc.sample_seed), rc,
                  {{"seed", rc.sample_seed}});
    } else if (*intervene) {
      const auto model = ScmModel::load(pick(model_path, "model.json"));
      const auto spec = InterventionSpec::parse(interventions, model.schema());
      write_table(pick(out, "interventional.csv"), model.intervene(spec, rc.sample_n, rc.sample_seed), rc,
                  {{"seed", rc.sample_seed}, {"interventions", interventions}});
    } else if (*upsample) {
      const auto model = ScmModel::load(pick(model_path, "model.json"));
      if (!rc.upsample_label) throw ConfigError("upsample needs --label (or upsample.label)");
      if (rc.upsample_counts.empty()) throw ConfigError("upsample needs at least one --count category=N");
      const auto result = model.upsample(*rc.upsample_label, rc.upsample_counts, rc.sample_seed, rc.upsample_mode);
      spdlog::info("upsampled via {}", result.method);
      write_table(pick(out, "upsampled.csv"), result.rows, rc,
                  {{"seed", rc.sample_seed},
                   {"method", result.method},
                   {"generated", result.generated},
                   {"acceptance_rate", result.acceptance_rate}});
    } else if (*eval) {
      Table real;
      TableSchema schema;
      if (!model_path.empty()) {
        schema = ScmModel::load(model_path).schema();
        real = load_conforming(require(rc.test, "data.test (--real)"), schema, rc.csv);
      } else if (!rc.train.empty()) {
        const auto ds = load_datasets(rc);
        real = ds.test;
        schema = ds.test.schema();
      } else {
        std::optional<TableSchema> given;
        if (!rc.schema.empty()) given = load_schema(rc.schema);
        real = impute_missing(load_csv(require(rc.test, "data.test (--real)"), given, rc.csv));
        schema = real.schema();
      }
      const Table syn = load_conforming(pick(syn_path, "synthetic.csv"), schema, rc.csv);
      write_json(pick(out, "report.json"), run_evaluation(real, syn, rc));
    } else if (*run) {
      const auto ds = load_datasets(rc);
      const auto discovered = run_discovery(ds.train, rc);
      write_json(rc.output("graph.json"), graph_document(discovered, rc));
      const Dag dag = read_graph(rc.output("graph.json"));
      const ScmModel model = run_fit(ds.train, dag, rc);
      model.save(rc.output("model.json"));
      spdlog::info("wrote {}", rc.output("model.json").string());
      write_table(rc.output("synthetic.csv"), model.sample(rc.sample_n, rc.sample_seed), rc, {{"seed", rc.sample_seed}});
      if (rc.upsample_label && !rc.upsample_counts.empty()) {
        const auto result = model.upsample(*rc.upsample_label, rc.upsample_counts, rc.sample_seed, rc.upsample_mode);
        write_table(rc.output("upsampled.csv"), result.rows, rc,
                    {{"seed", rc.sample_seed},
                     {"method", result.method},
                     {"generated", result.generated},
                     {"acceptance_rate", result.acceptance_rate}});
      }
      const Table syn = load_conforming(rc.output("synthetic.csv"), ds.test.schema(), rc.csv);
      write_json(rc.output("report.json"), run_evaluation(ds.test, syn, rc));
    }
  } catch (const std::exception& e) {
    const std::string code = error_code(e);
    std::cerr << "error: " << code << ": " << one_line(e.what()) << "\n";
    return exit_code(code);
  }
  return 0;
}

}  // namespace tabscm::cli
