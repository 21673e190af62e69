#include <string>

#include "tabscm/common.hpp"
#include "tabscm/csv.hpp"
#include "tabscm/scm.hpp"
#include "tabscm/schema_json.hpp"

namespace tabscm {

namespace {

nlohmann::json mechanism_to_json(const Mechanism& m) {
  return std::visit([](const auto& x) { return x.to_json(); }, m);
}

Mechanism mechanism_from_json(const nlohmann::json& j, const std::string& node) {
  const auto kind = j.value("kind", std::string());
  if (kind == "kde") return KdeMechanism::from_json(j);
  if (kind == "cat_marginal") return CategoricalMarginal::from_json(j);
  if (kind == "diffusion") return DiffusionMechanism::from_json(j);
  if (kind == "gbdt") return GbdtClassifier::from_json(j);
  throw FormatError("unknown mechanism kind '" + kind + "' for node '" + node + "'");
}

std::uint64_t payload_checksum(nlohmann::json payload) {
  payload.erase("checksum");
  return fnv1a64(payload.dump());
}

}  // namespace

nlohmann::json ScmModel::to_json() const {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["dag"] = graph_to_json(dag_);
  j["schema"] = schema_to_json(schema_);
  nlohmann::json scales = nlohmann::json::array();
  for (const auto& s : standardizer_.scales()) scales.push_back({s.mean, s.scale});
  j["standardizer"] = scales;
  j["order"] = dag_.order();
  j["category_counts"] = category_counts_;
  nlohmann::json mech = nlohmann::json::object();
  for (std::size_t v = 0; v < schema_.size(); ++v) mech[schema_[v].name] = mechanism_to_json(mechanisms_[v]);
  j["mechanisms"] = std::move(mech);
  j["diagnostics"] = diagnostics_;
  j["provenance"] = provenance_;
  j["checksum"] = hex64(payload_checksum(j));
  return j;
}

ScmModel ScmModel::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("model file is not a JSON object");
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw FormatError("model file has no format_version");
  }
  const int version = j["format_version"].get<int>();
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version) + " (expected " +
                      std::to_string(kModelFormatVersion) + ")");
  }
  if (!j.contains("checksum") || !j["checksum"].is_string() ||
      j["checksum"].get<std::string>() != hex64(payload_checksum(j))) {
    throw FormatError("checksum failure: model file is corrupted or was modified");
  }

  ScmModel m;
  try {
    m.dag_ = dag_from_json(j.at("dag"));
    m.schema_ = schema_from_json(j.at("schema"));
    std::vector<Scale> scales;
    for (const auto& s : j.at("standardizer")) scales.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    m.standardizer_ = Standardizer(std::move(scales));
    m.category_counts_ = j.at("category_counts").get<std::vector<std::vector<std::size_t>>>();
    m.diagnostics_ = j.value("diagnostics", nlohmann::json::object());
    m.provenance_ = j.value("provenance", nlohmann::json::object());
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
  const std::size_t d = m.schema_.size();
  if (m.dag_.nodes() != m.schema_.names()) throw FormatError("model DAG nodes do not match its schema");
  if (m.standardizer_.scales().size() != d || m.category_counts_.size() != d) {
    throw FormatError("model standardizer or category counts do not match its schema");
  }
  if (j.at("order").get<std::vector<std::size_t>>() != m.dag_.order()) {
    throw FormatError("stored topological order does not match the DAG");
  }
  m.finish_setup();

  const auto& mech = j.at("mechanisms");
  for (std::size_t v = 0; v < d; ++v) {
    const auto& name = m.schema_[v].name;
    if (!mech.contains(name)) throw FormatError("model has no mechanism for node '" + name + "'");
    Mechanism mc;
    try {
      mc = mechanism_from_json(mech[name], name);
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError("malformed mechanism for node '" + name + "': " + e.what());
    }
    const auto expected = mechanism_kind_for(m.dag_.is_root(v), m.schema_[v].kind);
    if (static_cast<MechanismKind>(mc.index()) != expected) {
      throw FormatError("mechanism for node '" + name + "' has kind '" +
                        std::string(to_string(static_cast<MechanismKind>(mc.index()))) + "', expected '" +
                        std::string(to_string(expected)) + "'");
    }
    const std::size_t width = m.encoders_[v].width();
    if (const auto* diff = std::get_if<DiffusionMechanism>(&mc); diff && diff->parent_width() != width) {
      throw FormatError("diffusion mechanism for node '" + name + "' expects " + std::to_string(diff->parent_width()) +
                        " parent features, encoder has " + std::to_string(width));
    }
    if (const auto* gb = std::get_if<GbdtClassifier>(&mc);
        gb && (gb->n_features() != width || gb->n_classes() != m.schema_[v].categories.size())) {
      throw FormatError("tree mechanism for node '" + name + "' does not match its parents or categories");
    }
    if (const auto* cat = std::get_if<CategoricalMarginal>(&mc);
        cat && cat->probabilities().size() != m.schema_[v].categories.size()) {
      throw FormatError("categorical marginal for node '" + name + "' does not match its categories");
    }
    m.mechanisms_.push_back(std::move(mc));
  }
  nlohmann::json fp = nlohmann::json::object();
  for (std::size_t v = 0; v < d; ++v) fp[m.schema_[v].name] = mech[m.schema_[v].name];
  m.fingerprint_ = fnv1a64(fp.dump());
  return m;
}

std::string ScmModel::serialize() const { return to_json().dump(); }

ScmModel ScmModel::deserialize(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw FormatError("checksum failure: model file is truncated or not valid JSON");
  }
  return from_json(j);
}

void ScmModel::save(const std::filesystem::path& path) const { write_text_file(path, serialize()); }

ScmModel ScmModel::load(const std::filesystem::path& path) { return deserialize(read_text_file(path)); }

}  // namespace tabscm
