#include "tabscm/scm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <spdlog/spdlog.h>

#include "tabscm/common.hpp"

namespace tabscm {

std::string_view to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::Kde:
      return "kde";
    case MechanismKind::CategoricalMarginal:
      return "cat_marginal";
    case MechanismKind::Diffusion:
      return "diffusion";
    case MechanismKind::TreeEnsemble:
      return "gbdt";
  }
  return "?";
}

MechanismKind mechanism_kind_for(bool is_root, ColumnKind kind) {
  if (is_root) return kind == ColumnKind::Numerical ? MechanismKind::Kde : MechanismKind::CategoricalMarginal;
  return kind == ColumnKind::Numerical ? MechanismKind::Diffusion : MechanismKind::TreeEnsemble;
}

std::string_view to_string(UpsampleMode mode) {
  switch (mode) {
    case UpsampleMode::Auto:
      return "auto";
    case UpsampleMode::Intervention:
      return "intervention";
    case UpsampleMode::Rejection:
      return "rejection";
  }
  return "?";
}

UpsampleMode parse_upsample_mode(std::string_view text) {
  if (text == "auto") return UpsampleMode::Auto;
  if (text == "intervention" || text == "do") return UpsampleMode::Intervention;
  if (text == "rejection") return UpsampleMode::Rejection;
  throw ParseError("unknown upsampling mode '" + std::string(text) + "' (expected auto, intervention or rejection)");
}

// ---------------------------------------------------------------------------
// Interventions

namespace {

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

InterventionSpec InterventionSpec::parse(const std::vector<std::string>& items, const TableSchema& schema) {
  std::map<std::string, Value> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("intervention '" + item + "' is not of the form column=value");
    const std::string name = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    const auto col = schema.index_of(name);
    if (schema[col].is_numerical()) {
      auto v = parse_number(value);
      if (!v) throw SchemaError("intervention value '" + value + "' for numerical column '" + name + "' is not a number");
      out[name] = *v;
    } else {
      if (!schema[col].code_of(value)) {
        throw SchemaError("intervention value '" + value + "' is not a category of column '" + name + "'");
      }
      out[name] = value;
    }
  }
  return InterventionSpec(std::move(out));
}

std::vector<std::optional<double>> InterventionSpec::resolve(const TableSchema& schema) const {
  std::vector<std::optional<double>> fixed(schema.size());
  for (const auto& [name, value] : assignments_) {
    const auto col = schema.find(name);
    if (!col) throw SchemaError("intervention on unknown node '" + name + "'");
    const auto& cs = schema[*col];
    if (cs.is_numerical()) {
      if (const auto* d = std::get_if<double>(&value)) {
        if (!std::isfinite(*d)) throw SchemaError("intervention value for '" + name + "' is not finite");
        fixed[*col] = *d;
      } else {
        auto v = parse_number(std::get<std::string>(value));
        if (!v) throw SchemaError("intervention value for numerical column '" + name + "' is not a number");
        fixed[*col] = *v;
      }
    } else {
      const auto* s = std::get_if<std::string>(&value);
      if (!s) throw SchemaError("intervention value for categorical column '" + name + "' must be a category name");
      auto code = cs.code_of(*s);
      if (!code) throw SchemaError("intervention value '" + *s + "' is not a category of column '" + name + "'");
      fixed[*col] = static_cast<double>(*code);
    }
  }
  return fixed;
}

nlohmann::json NoiseTrace::to_json() const {
  nlohmann::json nodes_json = nlohmann::json::array();
  for (const auto& n : nodes) nodes_json.push_back({{"index", n.index}, {"values", n.values}});
  return {{"fingerprint", hex64(fingerprint)}, {"nodes", nodes_json}};
}

NoiseTrace NoiseTrace::from_json(const nlohmann::json& j) {
  NoiseTrace t;
  try {
    t.fingerprint = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);
    for (const auto& n : j.at("nodes")) {
      t.nodes.push_back({n.at("index").get<std::int64_t>(), n.at("values").get<std::vector<double>>()});
    }
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid noise trace: ") + e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Fitting

ScmModel ScmModel::fit(const Table& train, const Dag& dag, const ScmFitConfig& config) {
  const auto& schema = train.schema();
  if (dag.nodes() != schema.names()) throw SchemaError("DAG nodes do not match the table columns");
  if (train.has_missing()) throw SchemaError("training table contains missing cells; impute first");
  if (train.n_rows() == 0) throw FitError("training table is empty");

  ScmModel m;
  m.dag_ = dag;
  m.schema_ = schema;
  m.standardizer_ = Standardizer::fit(train);
  const std::size_t d = schema.size();
  m.category_counts_.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    if (!schema[c].is_categorical()) continue;
    m.category_counts_[c].assign(schema[c].categories.size(), 0);
    for (auto code : train.codes(c)) ++m.category_counts_[c][static_cast<std::size_t>(code)];
  }
  m.finish_setup();

  m.mechanisms_.resize(d);
  std::vector<nlohmann::json> diag(d);
  const auto& order = dag.order();
  parallel_for(0, d, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t v = order[k];
      const auto& cs = schema[v];
      const auto kind = mechanism_kind_for(dag.is_root(v), cs.kind);
      const std::uint64_t node_seed = derive_seed(config.seed, v, 0xf17);
      nlohmann::json info{{"kind", to_string(kind)}, {"parents", nlohmann::json::array()}};
      for (auto p : dag.parents(v)) info["parents"].push_back(schema[p].name);
      try {
        switch (kind) {
          case MechanismKind::Kde: {
            auto kde = KdeMechanism::fit(train.numeric(v), m.standardizer_.scale(v));
            info["bandwidth"] = kde.bandwidth();
            m.mechanisms_[v] = std::move(kde);
            break;
          }
          case MechanismKind::CategoricalMarginal:
            m.mechanisms_[v] = CategoricalMarginal::fit(train.codes(v), cs.categories.size());
            break;
          case MechanismKind::Diffusion: {
            const auto parents = m.encoders_[v].encode_table(train);
            auto diff = DiffusionMechanism::train(train.numeric(v), parents, m.standardizer_.scale(v), config.diffusion,
                                                  node_seed);
            info["initial_loss"] = diff.epoch_losses().empty() ? 0.0 : diff.epoch_losses().front();
            info["final_loss"] = diff.final_loss();
            m.mechanisms_[v] = std::move(diff);
            break;
          }
          case MechanismKind::TreeEnsemble: {
            const auto parents = m.encoders_[v].encode_table(train);
            GbdtConfig gc = config.gbdt;
            gc.seed = node_seed;
            auto gb = GbdtClassifier::fit(parents, train.codes(v), cs.categories.size(), gc);
            info["train_log_loss"] = gb.train_log_loss();
            m.mechanisms_[v] = std::move(gb);
            break;
          }
        }
      } catch (const Error& e) {
        throw FitError("node '" + cs.name + "': " + e.what());
      }
      spdlog::info("fitted {} mechanism for '{}'", to_string(kind), cs.name);
      diag[v] = std::move(info);
    }
  });
  for (std::size_t v = 0; v < d; ++v) m.diagnostics_[schema[v].name] = std::move(diag[v]);

  nlohmann::json mech = nlohmann::json::object();
  for (std::size_t v = 0; v < d; ++v) {
    mech[schema[v].name] = std::visit([](const auto& x) { return x.to_json(); }, m.mechanisms_[v]);
  }
  m.fingerprint_ = fnv1a64(mech.dump());
  return m;
}

void ScmModel::finish_setup() {
  encoders_.clear();
  for (std::size_t v = 0; v < schema_.size(); ++v) encoders_.emplace_back(schema_, standardizer_, dag_.parents(v));
}

MechanismKind ScmModel::kind(std::size_t node) const {
  return static_cast<MechanismKind>(mechanisms_.at(node).index());
}

// ---------------------------------------------------------------------------
// Generation

void ScmModel::draw_node_noise(std::size_t node, Stream& rng, NodeNoise& out) const {
  const auto& mech = mechanisms_[node];
  switch (kind(node)) {
    case MechanismKind::Kde: {
      auto d = std::get<KdeMechanism>(mech).draw_noise(rng);
      out.index = static_cast<std::int64_t>(d.index);
      out.values.assign(1, d.gaussian);
      break;
    }
    case MechanismKind::CategoricalMarginal:
    case MechanismKind::TreeEnsemble:
      out.index = -1;
      out.values.assign(1, rng.uniform());
      break;
    case MechanismKind::Diffusion: {
      const auto& diff = std::get<DiffusionMechanism>(mech);
      out.index = -1;
      out.values.resize(diff.noise_size());
      diff.draw_noise(rng, out.values.data());
      break;
    }
  }
}

void ScmModel::realize_node(std::size_t node, const double* parents, const NodeNoise* const* noise, std::size_t rows,
                            double* out) const {
  const auto& mech = mechanisms_[node];
  const std::size_t w = encoders_[node].width();
  switch (kind(node)) {
    case MechanismKind::Kde: {
      const auto& kde = std::get<KdeMechanism>(mech);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto idx = noise[r]->index;
        if (idx < 0 || static_cast<std::size_t>(idx) >= kde.support().size() || noise[r]->values.size() != 1) {
          throw Error("noise does not fit the KDE mechanism");
        }
        out[r] = kde.realize({static_cast<std::size_t>(idx), noise[r]->values[0]});
      }
      break;
    }
    case MechanismKind::CategoricalMarginal: {
      const auto& cat = std::get<CategoricalMarginal>(mech);
      for (std::size_t r = 0; r < rows; ++r) out[r] = static_cast<double>(cat.realize(noise[r]->values.at(0)));
      break;
    }
    case MechanismKind::TreeEnsemble: {
      const auto& gb = std::get<GbdtClassifier>(mech);
      std::vector<double> probs(gb.n_classes());
      for (std::size_t r = 0; r < rows; ++r) {
        gb.predict_proba(parents + r * w, probs.data());
        out[r] = static_cast<double>(inverse_cdf(probs, noise[r]->values.at(0)));
      }
      break;
    }
    case MechanismKind::Diffusion: {
      const auto& diff = std::get<DiffusionMechanism>(mech);
      const std::size_t t = diff.noise_size();
      std::vector<double> flat(rows * t);
      for (std::size_t r = 0; r < rows; ++r) {
        if (noise[r]->values.size() != t) throw Error("noise does not fit the diffusion mechanism");
        std::copy(noise[r]->values.begin(), noise[r]->values.end(), flat.begin() + static_cast<std::ptrdiff_t>(r * t));
      }
      diff.realize(parents, flat.data(), rows, out);
      break;
    }
  }
}

std::vector<double> ScmModel::generate(std::size_t n, std::uint64_t seed,
                                       const std::vector<std::optional<double>>& fixed,
                                       std::vector<NoiseTrace>* traces) const {
  const std::size_t d = schema_.size();
  std::vector<double> buffer(n * d, 0.0);
  if (traces) {
    traces->assign(n, NoiseTrace{fingerprint_, std::vector<NodeNoise>(d)});
  }
  constexpr std::size_t kChunk = 512;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  parallel_for(0, n_chunks, [&](std::size_t c_lo, std::size_t c_hi) {
    std::vector<NodeNoise> noise(kChunk);
    std::vector<const NodeNoise*> ptrs(kChunk);
    std::vector<double> parents, out(kChunk);
    for (std::size_t c = c_lo; c < c_hi; ++c) {
      const std::size_t lo = c * kChunk;
      const std::size_t m = std::min(kChunk, n - lo);
      for (auto v : dag_.order()) {
        const bool record = traces != nullptr;
        if (fixed[v] && !record) {
          for (std::size_t r = 0; r < m; ++r) buffer[(lo + r) * d + v] = *fixed[v];
          continue;
        }
        for (std::size_t r = 0; r < m; ++r) {
          Stream rng(seed, lo + r, v);
          draw_node_noise(v, rng, noise[r]);
          ptrs[r] = &noise[r];
        }
        if (fixed[v]) {
          for (std::size_t r = 0; r < m; ++r) buffer[(lo + r) * d + v] = *fixed[v];
        } else {
          const std::size_t w = encoders_[v].width();
          parents.resize(m * w);
          for (std::size_t r = 0; r < m; ++r) encoders_[v].encode_row(&buffer[(lo + r) * d], parents.data() + r * w);
          realize_node(v, parents.data(), ptrs.data(), m, out.data());
          for (std::size_t r = 0; r < m; ++r) buffer[(lo + r) * d + v] = out[r];
        }
        if (record) {
          for (std::size_t r = 0; r < m; ++r) (*traces)[lo + r].nodes[v] = noise[r];
        }
      }
    }
  });
  return buffer;
}

Table ScmModel::to_table(const std::vector<double>& buffer, std::size_t n) const {
  const std::size_t d = schema_.size();
  std::vector<Column> cols(d);
  for (std::size_t c = 0; c < d; ++c) {
    if (schema_[c].is_numerical()) {
      cols[c].values.resize(n);
      for (std::size_t r = 0; r < n; ++r) cols[c].values[r] = buffer[r * d + c];
    } else {
      cols[c].codes.resize(n);
      for (std::size_t r = 0; r < n; ++r) cols[c].codes[r] = static_cast<std::int32_t>(buffer[r * d + c]);
    }
  }
  return Table(schema_, std::move(cols));
}

Table ScmModel::sample(std::size_t n, std::uint64_t seed) const {
  std::vector<std::optional<double>> none(schema_.size());
  return to_table(generate(n, seed, none, nullptr), n);
}

Table ScmModel::intervene(const InterventionSpec& spec, std::size_t n, std::uint64_t seed) const {
  return to_table(generate(n, seed, spec.resolve(schema_), nullptr), n);
}

std::pair<Table, std::vector<NoiseTrace>> ScmModel::sample_with_trace(std::size_t n, std::uint64_t seed) const {
  std::vector<std::optional<double>> none(schema_.size());
  std::vector<NoiseTrace> traces;
  auto buffer = generate(n, seed, none, &traces);
  return {to_table(buffer, n), std::move(traces)};
}

Table ScmModel::counterfactual(const NoiseTrace& trace, const InterventionSpec& spec) const {
  if (trace.fingerprint != fingerprint_) {
    throw Error("noise trace fingerprint " + hex64(trace.fingerprint) + " does not match model fingerprint " +
                hex64(fingerprint_));
  }
  const std::size_t d = schema_.size();
  if (trace.nodes.size() != d) throw Error("noise trace has the wrong number of nodes");
  const auto fixed = spec.resolve(schema_);
  std::vector<double> row(d, 0.0);
  std::vector<double> parents;
  for (auto v : dag_.order()) {
    if (fixed[v]) {
      row[v] = *fixed[v];
      continue;
    }
    parents.resize(encoders_[v].width());
    encoders_[v].encode_row(row.data(), parents.data());
    const NodeNoise* ptr = &trace.nodes[v];
    realize_node(v, parents.data(), &ptr, 1, &row[v]);
  }
  return to_table(row, 1);
}

// ---------------------------------------------------------------------------
// Upsampling

UpsampleResult ScmModel::upsample(const std::string& label, const std::map<std::string, std::size_t>& target_counts,
                                  std::uint64_t seed, UpsampleMode mode) const {
  const auto col = schema_.index_of(label);
  const auto& cs = schema_[col];
  if (!cs.is_categorical()) throw SchemaError("upsampling label '" + label + "' must be categorical");

  std::vector<std::size_t> need(cs.categories.size(), 0);
  std::size_t total_need = 0;
  for (const auto& [category, target] : target_counts) {
    auto code = cs.code_of(category);
    if (!code) throw SchemaError("unknown category '" + category + "' of column '" + label + "'");
    const std::size_t have = category_counts_[col][static_cast<std::size_t>(*code)];
    need[static_cast<std::size_t>(*code)] = target > have ? target - have : 0;
    total_need += need[static_cast<std::size_t>(*code)];
  }

  UpsampleResult result;
  if (mode == UpsampleMode::Auto) mode = dag_.is_root(col) ? UpsampleMode::Intervention : UpsampleMode::Rejection;
  result.method = mode == UpsampleMode::Intervention ? "intervention" : "rejection";
  for (std::size_t c = 0; c < need.size(); ++c) {
    if (target_counts.count(cs.categories[c])) result.generated[cs.categories[c]] = need[c];
  }
  if (total_need == 0) {
    result.rows = Table::empty(schema_);
    return result;
  }

  if (mode == UpsampleMode::Intervention) {
    Table out = Table::empty(schema_);
    for (std::size_t c = 0; c < need.size(); ++c) {
      if (need[c] == 0) continue;
      InterventionSpec spec(std::map<std::string, InterventionSpec::Value>{{label, cs.categories[c]}});
      out = out.concat(intervene(spec, need[c], derive_seed(seed, c, 0xd0)));
    }
    result.rows = std::move(out);
    return result;
  }

  const std::size_t budget = 200 * total_need;
  std::vector<std::vector<std::size_t>> kept(need.size());
  std::size_t drawn = 0;
  std::size_t accepted = 0;
  std::vector<Table> batches;
  for (std::uint64_t round = 0; accepted < total_need; ++round) {
    if (drawn >= budget) {
      const double rate = drawn ? static_cast<double>(accepted) / static_cast<double>(drawn) : 0.0;
      throw Error("rejection budget exhausted after " + std::to_string(drawn) + " draws (acceptance rate " +
                  std::to_string(rate) + ")");
    }
    const std::size_t batch = std::min(budget - drawn, std::max<std::size_t>(1024, 2 * total_need));
    Table t = sample(batch, derive_seed(seed, round, 0xbe));
    drawn += batch;
    std::vector<std::size_t> take;
    auto codes = t.codes(col);
    for (std::size_t r = 0; r < batch; ++r) {
      const auto c = static_cast<std::size_t>(codes[r]);
      if (kept[c].size() < need[c]) {
        kept[c].push_back(r);
        take.push_back(r);
        ++accepted;
      }
    }
    batches.push_back(t.select_rows(take));
  }
  Table out = Table::empty(schema_);
  for (const auto& b : batches) out = out.concat(b);
  // Group by category in code order for a stable layout.
  std::vector<std::size_t> order(out.n_rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto codes = out.codes(col);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return codes[a] < codes[b]; });
  result.rows = out.select_rows(order);
  result.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(drawn);
  return result;
}

}  // namespace tabscm
