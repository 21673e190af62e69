#include "tabscm/discovery.hpp"

#include "tabscm/common.hpp"

namespace tabscm {

std::string_view to_string(DiscoveryAlgorithm algo) {
  switch (algo) {
    case DiscoveryAlgorithm::Pc:
      return "pc";
    case DiscoveryAlgorithm::Ges:
      return "ges";
    case DiscoveryAlgorithm::Notears:
      return "notears";
  }
  return "?";
}

DiscoveryAlgorithm parse_discovery_algorithm(std::string_view text) {
  if (text == "pc") return DiscoveryAlgorithm::Pc;
  if (text == "ges") return DiscoveryAlgorithm::Ges;
  if (text == "notears") return DiscoveryAlgorithm::Notears;
  throw ParseError("unknown discovery algorithm '" + std::string(text) + "' (expected pc, ges or notears)");
}

DiscoveryResult discover(const Table& data, const DiscoveryConfig& config) {
  DiscoveryResult out;
  switch (config.algorithm) {
    case DiscoveryAlgorithm::Pc:
      out.cpdag = pc_discover(data, config.pc);
      out.dag = orient_to_dag(out.cpdag, &out.used_fallback_orientation);
      break;
    case DiscoveryAlgorithm::Ges:
      out.cpdag = ges_discover(data, config.ges);
      out.dag = orient_to_dag(out.cpdag, &out.used_fallback_orientation);
      break;
    case DiscoveryAlgorithm::Notears: {
      auto res = notears_discover(data, config.notears);
      out.dag = res.dag;
      out.cpdag = res.dag.as_cpdag();
      out.weights = std::move(res.weights);
      break;
    }
  }
  return out;
}

nlohmann::json discovery_config_to_json(const DiscoveryConfig& c) {
  return {
      {"algo", to_string(c.algorithm)},
      {"pc",
       {{"alpha", c.pc.alpha},
        {"ci_test", to_string(c.pc.ci_test)},
        {"max_condition_set", c.pc.max_condition_set},
        {"bins", c.pc.bins}}},
      {"ges", {{"penalty", c.ges.penalty}, {"max_parents", c.ges.max_parents}}},
      {"notears",
       {{"lambda1", c.notears.lambda1},
        {"w_min", c.notears.w_min},
        {"max_outer_iterations", c.notears.max_outer_iterations},
        {"inner_iterations", c.notears.inner_iterations},
        {"rho_init", c.notears.rho_init},
        {"rho_max", c.notears.rho_max},
        {"h_tolerance", c.notears.h_tolerance},
        {"learning_rate", c.notears.learning_rate},
        {"standardize", c.notears.standardize}}},
  };
}

DiscoveryConfig discovery_config_from_json(const nlohmann::json& j) {
  DiscoveryConfig c;
  try {
    if (j.contains("algo")) c.algorithm = parse_discovery_algorithm(j.at("algo").get<std::string>());
    if (j.contains("pc")) {
      const auto& p = j.at("pc");
      c.pc.alpha = p.value("alpha", c.pc.alpha);
      if (p.contains("ci_test")) c.pc.ci_test = parse_ci_test(p.at("ci_test").get<std::string>());
      c.pc.max_condition_set = p.value("max_condition_set", c.pc.max_condition_set);
      c.pc.bins = p.value("bins", c.pc.bins);
    }
    if (j.contains("ges")) {
      const auto& g = j.at("ges");
      c.ges.penalty = g.value("penalty", c.ges.penalty);
      c.ges.max_parents = g.value("max_parents", c.ges.max_parents);
    }
    if (j.contains("notears")) {
      const auto& n = j.at("notears");
      c.notears.lambda1 = n.value("lambda1", c.notears.lambda1);
      c.notears.w_min = n.value("w_min", c.notears.w_min);
      c.notears.max_outer_iterations = n.value("max_outer_iterations", c.notears.max_outer_iterations);
      c.notears.inner_iterations = n.value("inner_iterations", c.notears.inner_iterations);
      c.notears.rho_init = n.value("rho_init", c.notears.rho_init);
      c.notears.rho_max = n.value("rho_max", c.notears.rho_max);
      c.notears.h_tolerance = n.value("h_tolerance", c.notears.h_tolerance);
      c.notears.learning_rate = n.value("learning_rate", c.notears.learning_rate);
      c.notears.standardize = n.value("standardize", c.notears.standardize);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid discovery config: ") + e.what());
  }
  return c;
}

}  // namespace tabscm
