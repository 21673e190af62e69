// Acceptance run: one PASS/FAIL/SKIP line per criterion.
//
//   tabscm_acceptance            all criteria
//   tabscm_acceptance 1 4 7      a subset
//
// Criterion 9 reads the UCI Magic file from $TABSCM_MAGIC_CSV and is skipped
// when the variable is unset or the file is absent.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "tabscm/common.hpp"
#include "tabscm/csv.hpp"
#include "tabscm/diffusion.hpp"
#include "tabscm/discovery.hpp"
#include "tabscm/gbdt.hpp"
#include "tabscm/metrics.hpp"
#include "tabscm/mlp.hpp"
#include "tabscm/preprocess.hpp"
#include "tabscm/scm.hpp"
#include "toy.hpp"

using namespace tabscm;
namespace toy = tabscm::testing;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr std::uint64_t kSeeds[] = {0, 1, 2, 3, 4};
constexpr std::size_t kRequiredSeeds = 4;

constexpr std::size_t kStructureRows = 5000;
constexpr double kPcAlpha = 0.05;
constexpr double kNotearsLambda1 = 0.01;
constexpr double kNotearsWMin = 0.3;
constexpr std::size_t kNotearsMaxShd = 1;
constexpr double kStructureSeconds = 60.0;

constexpr std::size_t kFidelityRows = 5000;
constexpr std::size_t kEpochs = 500;
constexpr std::size_t kSteps = 500;
constexpr double kMaxDensityError = 0.05;
constexpr double kMaxCorrError = 0.08;
constexpr double kFidelitySecondsPerSeed = 600.0;

constexpr std::size_t kInterventionRows = 10000;
constexpr double kDoMeanLow = 1.7;
constexpr double kDoMeanHigh = 2.3;
constexpr double kNonDescendantKs = 0.03;

constexpr std::size_t kTraceRows = 1000;

constexpr int kOracleInstances = 100;
constexpr double kCorrTolerance = 1e-12;

constexpr int kGradientInstances = 20;
constexpr double kAcyclicityGradTolerance = 1e-5;
constexpr double kNetworkGradRelTolerance = 1e-4;

constexpr double kAlphaBarTolerance = 1e-12;
constexpr double kTableRoundTripRel = 1e-9;

constexpr std::size_t kImbalancedTrain = 2000;
constexpr std::size_t kImbalancedTest = 4000;
constexpr double kMaxFprIncrease = 0.05;

constexpr double kMagicMaxDensityError = 0.06;
constexpr double kMagicMinAuc = 0.88;
constexpr double kMagicFitSeconds = 1800.0;

constexpr double kC2stSameMin = 0.9;
constexpr double kC2stPermutedMax = 0.6;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> r(hi - lo);
  std::iota(r.begin(), r.end(), lo);
  return r;
}

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

/// Undirected adjacency difference.
std::size_t skeleton_shd(const Cpdag& a, const Dag& b) {
  std::size_t diff = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = i + 1; j < b.size(); ++j) {
      const bool ea = a.adjacent(i, j);
      const bool eb = b.has_edge(i, j) || b.has_edge(j, i);
      diff += ea != eb;
    }
  }
  return diff;
}

DiscoveryConfig notears_config(double w_min) {
  DiscoveryConfig c;
  c.algorithm = DiscoveryAlgorithm::Notears;
  c.notears.lambda1 = kNotearsLambda1;
  c.notears.w_min = w_min;
  return c;
}

ScmFitConfig fit_config(std::size_t epochs, std::size_t steps, std::uint64_t seed) {
  ScmFitConfig c;
  c.diffusion.epochs = epochs;
  c.diffusion.steps = steps;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------
// Shared fitted toy model (criterion 2, seed 0), reused by 3 and 4.

std::optional<ScmModel> g_toy_model;

const ScmModel& toy_model() {
  if (!g_toy_model) {
    const Table train = toy::four_node_toy(2 * kFidelityRows, kSeeds[0]).select_rows(range(0, kFidelityRows));
    const Dag dag = discover(train, notears_config(kNotearsWMin)).dag;
    g_toy_model = ScmModel::fit(train, dag, fit_config(kEpochs, kSteps, kSeeds[0]));
  }
  return *g_toy_model;
}

// ---------------------------------------------------------------------------

Outcome structure_recovery() {
  const auto start = std::chrono::steady_clock::now();
  const Dag truth = toy::four_node_dag();
  std::size_t pc_ok = 0, notears_ok = 0, worst = 0;
  for (auto seed : kSeeds) {
    const Table data = toy::four_node_toy(kStructureRows, seed);
    PcConfig pc;
    pc.alpha = kPcAlpha;
    pc.ci_test = CiTestKind::FisherZ;
    if (skeleton_shd(pc_discover(data, pc), truth) == 0) ++pc_ok;
    const auto shd_value = shd(discover(data, notears_config(kNotearsWMin)).dag, truth);
    worst = std::max(worst, shd_value);
    if (shd_value <= kNotearsMaxShd) ++notears_ok;
  }
  const double secs = seconds_since(start);
  return pass_if(pc_ok >= kRequiredSeeds && notears_ok == std::size(kSeeds) && secs < kStructureSeconds,
                 fmt::format("PC exact skeleton {}/5 (need {}), NOTEARS SHD <= {} in {}/5 (worst {}), {:.1f} s", pc_ok,
                             kRequiredSeeds, kNotearsMaxShd, notears_ok, worst, secs));
}

Outcome end_to_end_fidelity() {
  std::size_t ok = 0;
  std::string per_seed;
  double slowest = 0.0;
  for (auto seed : kSeeds) {
    const auto start = std::chrono::steady_clock::now();
    const Table all = toy::four_node_toy(2 * kFidelityRows, seed);
    const Table train = all.select_rows(range(0, kFidelityRows));
    const Table held_out = all.select_rows(range(kFidelityRows, 2 * kFidelityRows));
    const Dag dag = discover(train, notears_config(kNotearsWMin)).dag;
    ScmModel model = ScmModel::fit(train, dag, fit_config(kEpochs, kSteps, seed));
    const Table syn = model.sample(kFidelityRows, seed + 100);
    const double secs = seconds_since(start);
    slowest = std::max(slowest, secs);
    const double e_den = density_error(held_out, syn).e_den;
    const double e_corr = corr_error(held_out, syn).e_corr;
    const bool good = e_den <= kMaxDensityError && e_corr <= kMaxCorrError && secs < kFidelitySecondsPerSeed;
    ok += good;
    per_seed += fmt::format(" s{}:{:.4f}/{:.4f}{}", seed, e_den, e_corr, good ? "" : "!");
    if (seed == kSeeds[0]) g_toy_model = std::move(model);
  }
  return pass_if(ok >= kRequiredSeeds,
                 fmt::format("{}/5 seeds with e_den <= {} and e_corr <= {} (e_den/e_corr:{}), slowest seed {:.0f} s", ok,
                             kMaxDensityError, kMaxCorrError, per_seed, slowest));
}

Outcome interventional_correctness() {
  // do(X = 1) on the additive pair Y = 2X + N(0, 0.25).
  const Table pair = toy::additive_pair(kFidelityRows, kSeeds[0]);
  const ScmModel pm = ScmModel::fit(pair, toy::additive_pair_dag(), fit_config(kEpochs, kSteps, kSeeds[0]));
  const Table done = pm.intervene(InterventionSpec({{"X", 1.0}}), kInterventionRows, 11);
  double mean_y = 0.0;
  for (double y : done.numeric(1)) mean_y += y / static_cast<double>(done.n_rows());
  const bool mean_ok = mean_y >= kDoMeanLow && mean_y <= kDoMeanHigh;

  // Non-descendants of every single-node intervention against an independent
  // observational sample.
  const ScmModel& model = toy_model();
  const Table obs = model.sample(kInterventionRows, 21);
  double worst = 0.0;
  std::size_t compared = 0;
  bool identical = true;
  const auto& schema = model.schema();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto desc = model.dag().descendants(j);
    const Table iv = model.intervene(InterventionSpec({{schema[j].name, 1.0}}), kInterventionRows, 22);
    const Table same_seed_obs = model.sample(kInterventionRows, 22);
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c == j || std::find(desc.begin(), desc.end(), c) != desc.end()) continue;
      worst = std::max(worst, ks_statistic(iv.numeric(c), obs.numeric(c)));
      identical &= std::equal(iv.numeric(c).begin(), iv.numeric(c).end(), same_seed_obs.numeric(c).begin());
      ++compared;
    }
  }
  return pass_if(mean_ok && worst <= kNonDescendantKs && identical,
                 fmt::format("E[Y | do(X=1)] = {:.4f} in [{}, {}]; non-descendant KS max {:.4f} over {} columns "
                             "(<= {}), same-seed columns identical: {}",
                             mean_y, kDoMeanLow, kDoMeanHigh, worst, compared, kNonDescendantKs,
                             identical ? "yes" : "no"));
}

Outcome counterfactual_replay() {
  const ScmModel& model = toy_model();
  const auto [rows, traces] = model.sample_with_trace(kTraceRows, 31);
  const auto& schema = model.schema();
  std::size_t sink = schema.size();
  for (std::size_t v = 0; v < schema.size(); ++v) {
    if (model.dag().children(v).empty()) sink = v;
  }
  std::size_t exact = 0, sink_only = 0;
  for (std::size_t r = 0; r < kTraceRows; ++r) {
    const Table replay = model.counterfactual(traces[r], InterventionSpec{});
    bool same = true;
    for (std::size_t c = 0; c < schema.size(); ++c) same &= replay.numeric(c)[0] == rows.numeric(c)[r];
    exact += same;
    const double value = rows.numeric(sink)[r] + 3.0;
    const Table cf = model.counterfactual(traces[r], InterventionSpec({{schema[sink].name, value}}));
    bool only = cf.numeric(sink)[0] == value;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c != sink) only &= cf.numeric(c)[0] == rows.numeric(c)[r];
    }
    sink_only += only;
  }
  return pass_if(exact == kTraceRows && sink_only == kTraceRows,
                 fmt::format("empty-intervention replay bit-exact {}/{}; do({}) changed only that cell {}/{}", exact,
                             kTraceRows, schema[sink].name, sink_only, kTraceRows));
}

Outcome metric_oracles() {
  Stream rng(41);
  int ks_ok = 0, tv_ok = 0, dcr_ok = 0, auc_ok = 0, corr_ok = 0;
  double corr_worst = 0.0;
  for (int i = 0; i < kOracleInstances; ++i) {
    std::vector<double> a(1 + rng.index(60)), b(1 + rng.index(60));
    for (auto& v : a) v = static_cast<double>(rng.index(10));
    for (auto& v : b) v = rng.uniform() < 0.5 ? static_cast<double>(rng.index(10)) : rng.normal() * 4.0;
    ks_ok += ks_statistic(a, b) == toy::ks_oracle(a, b);

    auto draw = [&](std::size_t k) {
      std::vector<double> p(k, 0.0);
      for (int t = 0; t < 128; ++t) p[rng.index(k)] += 1.0 / 128;
      return p;
    };
    const auto p = draw(1 + rng.index(8)), q = draw(1 + rng.index(8));
    tv_ok += tv_distance(p, q) == toy::tv_oracle(p, q);

    const std::size_t n = 2 + rng.index(80);
    std::vector<double> scores(n);
    std::vector<std::int32_t> labels(n);
    for (std::size_t k = 0; k < n; ++k) {
      scores[k] = rng.uniform() < 0.5 ? static_cast<double>(rng.index(5)) : rng.normal();
      labels[k] = static_cast<std::int32_t>(rng.index(2));
    }
    labels[0] = 0;
    labels[1] = 1;
    auc_ok += auc(scores, labels) == toy::auc_oracle(scores, labels);

    const std::size_t numeric = 1 + rng.index(3), categorical = rng.index(3) + (numeric == 1 ? 1 : 0);
    const Table all = toy::random_mixed_table(200, numeric, categorical, 1000 + static_cast<std::uint64_t>(i));
    const Table real = all.select_rows(range(0, 120));
    const Table syn = toy::shuffle_columns(all.select_rows(range(120, 200)), static_cast<std::uint64_t>(i));
    dcr_ok += dcr(real, syn).distances == toy::dcr_oracle(real, syn);
    const double err = std::abs(corr_error(real, syn).e_corr - toy::corr_error_oracle(real, syn));
    corr_worst = std::max(corr_worst, err);
    corr_ok += err <= kCorrTolerance;
  }
  const int n = kOracleInstances;
  return pass_if(ks_ok == n && tv_ok == n && dcr_ok == n && auc_ok == n && corr_ok == n,
                 fmt::format("exact: KS {}/{}, TV {}/{}, DCR {}/{}, AUC {}/{}; corr_error within {} {}/{} (max diff {:.1e})",
                             ks_ok, n, tv_ok, n, dcr_ok, n, auc_ok, n, kCorrTolerance, corr_ok, n, corr_worst));
}

Outcome gradient_checks() {
  Stream rng(51);
  double h_worst = 0.0;
  for (int i = 0; i < kGradientInstances; ++i) {
    const auto d = static_cast<Eigen::Index>(2 + rng.index(5));
    Eigen::MatrixXd w(d, d);
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = 2.0 * rng.uniform() - 1.0;
    const auto h = acyclicity_h(w);
    const double eps = 1e-6;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      Eigen::MatrixXd up = w, down = w;
      up(k) += eps;
      down(k) -= eps;
      const double fd = (acyclicity_h(up).value - acyclicity_h(down).value) / (2 * eps);
      h_worst = std::max(h_worst, std::abs(fd - h.gradient(k)));
    }
  }

  // Noise predictor shaped like a conditional diffusion net: input is
  // [x_t, parents, time embedding].
  double net_worst = 0.0;
  for (int i = 0; i < kGradientInstances; ++i) {
    const std::size_t parents = rng.index(4), time_dim = 8, batch = 6;
    const std::size_t in = 1 + parents + time_dim;
    Mlp<double> net({in, 16, 16, 1}, rng);
    Eigen::MatrixXd x(in, batch), y(1, batch);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < 1 + parents; ++k) x(k, b) = rng.normal();
      const auto emb = timestep_embedding(1 + rng.index(500), time_dim);
      for (std::size_t k = 0; k < time_dim; ++k) x(1 + parents + k, b) = emb[k];
      y(0, b) = rng.normal();
    }
    auto loss = [&](const Mlp<double>& m) { return 0.5 * (m.forward(x) - y).squaredNorm(); };
    Mlp<double>::Cache cache;
    const Eigen::MatrixXd out = net.forward(x, &cache);
    const auto analytic = Mlp<double>::flatten(net.backward(cache, out - y));
    const auto params = net.parameters();
    const double step = 1e-5;
    for (std::size_t k = 0; k < params.size(); ++k) {
      Mlp<double> probe = net;
      auto p = params;
      p[k] += step;
      probe.set_parameters(p);
      const double up = loss(probe);
      p[k] -= 2 * step;
      probe.set_parameters(p);
      const double down = loss(probe);
      const double fd = (up - down) / (2 * step);
      const double scale = std::max({std::abs(fd), std::abs(analytic[k]), 1e-6});
      net_worst = std::max(net_worst, std::abs(fd - analytic[k]) / scale);
    }
  }
  return pass_if(h_worst <= kAcyclicityGradTolerance && net_worst <= kNetworkGradRelTolerance,
                 fmt::format("acyclicity max abs error {:.1e} (<= {}); noise predictor max rel error {:.1e} (<= {}), {} "
                             "instances each",
                             h_worst, kAcyclicityGradTolerance, net_worst, kNetworkGradRelTolerance, kGradientInstances));
}

Outcome schedule_and_round_trips() {
  double ab_worst = 0.0;
  for (std::size_t steps : {500u, 1000u, 1500u, 2000u}) {
    const auto s = NoiseSchedule::build(steps);
    double prod = 1.0;
    for (std::size_t t = 1; t <= steps; ++t) {
      prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * static_cast<double>(t - 1) / static_cast<double>(steps - 1));
      ab_worst = std::max(ab_worst, std::abs(s.alpha_bar[t] - prod));
    }
  }

  bool codec = true, csv = true, table = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Table t = toy::random_mixed_table(200, 3, 3, seed);
    const LabelCodec lc(t.schema());
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
      for (const auto& cat : t.schema()[c].categories) codec &= lc.decode(c, lc.encode(c, cat)) == cat;
    }
    csv &= parse_csv(to_csv(t), t.schema()) == t;
    const auto st = Standardizer::fit(t);
    const Table back = st.decode(st.encode(t), t.schema());
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
      for (std::size_t r = 0; r < t.n_rows(); ++r) {
        const double a = t.value(r, c), b = back.value(r, c);
        table &= t.schema()[c].is_categorical() ? a == b : std::abs(a - b) <= kTableRoundTripRel * std::max(1.0, std::abs(a));
      }
    }
  }

  const ScmModel& model = toy_model();
  const std::string text = model.serialize();
  const ScmModel back = ScmModel::deserialize(text);
  const bool bytes = back.serialize() == text;
  const bool samples = back.sample(2000, 61) == model.sample(2000, 61);
  const auto path = fs::temp_directory_path() / "tabscm_acceptance_model.json";
  model.save(path);
  const bool file = ScmModel::load(path).serialize() == text;
  fs::remove(path);

  return pass_if(ab_worst <= kAlphaBarTolerance && codec && csv && table && bytes && samples && file,
                 fmt::format("alpha_bar max diff {:.1e} (<= {}); category codec exact: {}; CSV round trip exact: {}; "
                             "table encode/decode within {}: {}; model re-serialized identical: {}, file: {}, samples "
                             "identical: {}",
                             ab_worst, kAlphaBarTolerance, codec, csv, kTableRoundTripRel, table, bytes, file, samples));
}

Outcome imbalanced_learning() {
  std::size_t ok = 0;
  std::string per_seed;
  for (auto seed : kSeeds) {
    const Table train = toy::imbalanced_binary(kImbalancedTrain, seed);
    const Table test = toy::imbalanced_binary(kImbalancedTest, seed + 1000);
    const std::size_t label = train.schema().index_of("label");
    const std::int32_t pos = *train.schema()[label].code_of("pos");

    auto rates = [&](const Table& fit_on) {
      GbdtConfig gc;
      gc.seed = seed;
      const auto model = GbdtClassifier::fit(encode_features(fit_on, fit_on, {label}), fit_on.codes(label), 2, gc);
      const Eigen::MatrixXd proba = model.predict_proba(encode_features(test, fit_on, {label}));
      std::vector<std::int32_t> pred(test.n_rows());
      for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = proba(static_cast<Eigen::Index>(i), pos) > 0.5 ? pos : 1 - pos;
      return fnr_fpr(pred, test.codes(label), pos);
    };
    const auto base = rates(train);

    DiscoveryConfig dc;
    dc.algorithm = DiscoveryAlgorithm::Pc;
    const Dag dag = discover(train, dc).dag;
    const ScmModel model = ScmModel::fit(train, dag, fit_config(200, kSteps, seed));
    const auto counts = category_frequencies(train.codes(label), 2);
    const auto majority = static_cast<std::size_t>(std::llround(counts[1 - pos] * static_cast<double>(train.n_rows())));
    const auto up = model.upsample("label", {{"pos", majority}}, seed + 7);
    const auto balanced = rates(train.concat(up.rows));

    const bool good = *balanced.fnr < *base.fnr && *balanced.fpr <= *base.fpr + kMaxFprIncrease;
    ok += good;
    per_seed += fmt::format(" s{}:{:.3f}->{:.3f}/{:.3f}->{:.3f}({}){}", seed, *base.fnr, *balanced.fnr, *base.fpr,
                            *balanced.fpr, up.method, good ? "" : "!");
  }
  return pass_if(ok >= kRequiredSeeds,
                 fmt::format("{}/5 seeds with lower FNR and FPR increase <= {} (FNR/FPR before->after:{})", ok,
                             kMaxFprIncrease, per_seed));
}

Outcome magic_dataset() {
  const char* env = std::getenv("TABSCM_MAGIC_CSV");
  if (!env || !fs::exists(env)) return {Status::Skip, "set TABSCM_MAGIC_CSV to the UCI Magic file (see tools/fetch_magic.sh)"};
  std::string text = read_text_file(env);
  if (!text.empty() && (std::isdigit(static_cast<unsigned char>(text[0])) || text[0] == '-')) {
    text = "fLength,fWidth,fSize,fConc,fConc1,fAsym,fM3Long,fM3Trans,fAlpha,fDist,class\n" + text;
  }
  const Table data = impute_missing(parse_csv(text));
  const auto parts = split(data, SplitFractions{}, 0);
  const auto start = std::chrono::steady_clock::now();
  const Dag dag = discover(parts.train, notears_config(0.01)).dag;
  const ScmModel model = ScmModel::fit(parts.train, dag, fit_config(200, 2000, 0));
  const double secs = seconds_since(start);
  const Table syn = model.sample(parts.train.n_rows(), 1);
  const double e_den = density_error(parts.test, syn).e_den;
  const auto util = utility_eval(syn, parts.test, "class", TaskKind::Classification);
  return pass_if(e_den <= kMagicMaxDensityError && util.mean >= kMagicMinAuc && secs <= kMagicFitSeconds,
                 fmt::format("e_den {:.4f} (<= {}), AUC {:.4f} (>= {}), fit {:.0f} s (<= {:.0f})", e_den,
                             kMagicMaxDensityError, util.mean, kMagicMinAuc, secs, kMagicFitSeconds));
}

Outcome c2st_sanity() {
  const Table all = toy::four_node_toy(2 * kFidelityRows, 71);
  const Table real = all.select_rows(range(0, kFidelityRows));
  const double same = c2st(real, all.select_rows(range(kFidelityRows, 2 * kFidelityRows))).score;
  const double permuted = c2st(real, toy::shuffle_columns(real, 72)).score;
  return pass_if(same >= kC2stSameMin && permuted <= kC2stPermutedMax,
                 fmt::format("held-out half {:.4f} (>= {}), column-permuted {:.4f} (<= {})", same, kC2stSameMin, permuted,
                             kC2stPermutedMax));
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"structure recovery", structure_recovery},
      {"end-to-end fidelity", end_to_end_fidelity},
      {"interventional correctness", interventional_correctness},
      {"counterfactual replay", counterfactual_replay},
      {"metric oracle equivalence", metric_oracles},
      {"gradient checks", gradient_checks},
      {"schedule and round trips", schedule_and_round_trips},
      {"imbalanced learning", imbalanced_learning},
      {"UCI Magic", magic_dataset},
      {"C2ST sanity", c2st_sanity},
  };
  std::set<std::size_t> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(static_cast<std::size_t>(std::stoul(argv[i])));

  bool failed = false;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!wanted.empty() && !wanted.count(k + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("error: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    failed |= o.status == Status::Fail;
    std::cout << fmt::format("{} {:>2} {}: {} [{:.1f} s]", tag, k + 1, criteria[k].first, o.detail, seconds_since(start))
              << std::endl;
  }
  return failed ? 1 : 0;
}
