#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tabscm/cli.hpp"
#include "tabscm/common.hpp"
#include "tabscm/csv.hpp"
#include "tabscm/discovery.hpp"
#include "tabscm/gbdt.hpp"
#include "tabscm/graph.hpp"
#include "tabscm/metrics.hpp"
#include "tabscm/preprocess.hpp"
#include "tabscm/rules.hpp"
#include "tabscm/scm.hpp"
#include "tabscm/schema_json.hpp"

namespace py = pybind11;
using namespace tabscm;

namespace {

/// JSON crosses the boundary as text; the Python side parses it.
py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object column_values(const Table& t, const std::string& name) {
  const auto c = t.schema().index_of(name);
  if (t.schema()[c].is_numerical()) {
    const auto v = t.numeric(c);
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
  }
  py::list out;
  for (std::size_t r = 0; r < t.n_rows(); ++r) out.append(t.cell_string(r, c));
  return out;
}

Dag dag_from_edges(const Table& t, const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<Edge> e;
  for (const auto& [from, to] : edges) e.push_back({t.schema().index_of(from), t.schema().index_of(to)});
  return Dag(t.schema().names(), e);
}

std::vector<std::pair<std::string, std::string>> named_edges(const Dag& d) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto [u, v] : d.edges()) out.emplace_back(d.nodes()[u], d.nodes()[v]);
  return out;
}

InterventionSpec to_spec(const std::map<std::string, std::variant<double, std::string>>& values) {
  std::map<std::string, InterventionSpec::Value> m;
  for (const auto& [k, v] : values) m.emplace(k, v);
  return InterventionSpec(std::move(m));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structural causal models for synthetic tabular data";

  py::register_exception<Error>(m, "TabscmError", PyExc_RuntimeError);

  py::class_<Table>(m, "Table")
      .def_static(
          "from_csv",
          [](const std::filesystem::path& path, const std::optional<std::filesystem::path>& schema) {
            std::optional<TableSchema> s;
            if (schema) s = load_schema(*schema);
            return load_csv(path, s);
          },
          py::arg("path"), py::arg("schema") = py::none())
      .def_static("parse", [](const std::string& text) { return parse_csv(text); }, py::arg("text"))
      .def("to_csv", [](const Table& t, const std::filesystem::path& path) { write_csv(t, path); }, py::arg("path"))
      .def("to_csv_text", [](const Table& t) { return to_csv(t); })
      .def("impute", [](const Table& t) { return impute_missing(t); })
      .def_property_readonly("n_rows", &Table::n_rows)
      .def_property_readonly("columns", [](const Table& t) { return t.schema().names(); })
      .def_property_readonly("schema", [](const Table& t) { return to_python(schema_to_json(t.schema())); })
      .def("column", &column_values, py::arg("name"))
      .def("head", [](const Table& t, std::size_t n) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < std::min(n, t.n_rows()); ++r) rows.push_back(r);
        return t.select_rows(rows);
      }, py::arg("n") = 5)
      .def("__len__", &Table::n_rows)
      .def("__eq__", [](const Table& a, const Table& b) { return a == b; });

  m.def(
      "discover",
      [](const Table& t, const py::dict& config) {
        const auto result = discover(t, discovery_config_from_json(from_python(config)));
        py::dict out;
        out["edges"] = named_edges(result.dag);
        out["used_fallback_orientation"] = result.used_fallback_orientation;
        out["cpdag"] = to_python(graph_to_json(result.cpdag));
        return out;
      },
      py::arg("table"), py::arg("config") = py::dict(),
      "Learn a DAG. config uses the JSON layout of the run configuration's `discovery` block.");

  py::class_<ScmModel>(m, "ScmModel")
      .def_static(
          "fit",
          [](const Table& t, const std::vector<std::pair<std::string, std::string>>& edges, std::size_t epochs,
             std::size_t steps, std::size_t hidden, std::size_t batch_size, double learning_rate,
             const py::dict& gbdt, std::uint64_t seed) {
            ScmFitConfig c;
            c.diffusion.epochs = epochs;
            c.diffusion.steps = steps;
            c.diffusion.hidden = hidden;
            c.diffusion.batch_size = batch_size;
            c.diffusion.learning_rate = learning_rate;
            c.gbdt = gbdt_config_from_json(from_python(gbdt));
            c.seed = seed;
            py::gil_scoped_release release;
            return ScmModel::fit(t, dag_from_edges(t, edges), c);
          },
          py::arg("table"), py::arg("edges"), py::arg("epochs") = 500, py::arg("steps") = 500,
          py::arg("hidden") = 128, py::arg("batch_size") = 256, py::arg("learning_rate") = 1e-3,
          py::arg("gbdt") = py::dict(), py::arg("seed") = 0)
      .def_static("load", &ScmModel::load, py::arg("path"))
      .def("save", &ScmModel::save, py::arg("path"))
      .def_property_readonly("edges", [](const ScmModel& s) { return named_edges(s.dag()); })
      .def_property_readonly("columns", [](const ScmModel& s) { return s.schema().names(); })
      .def("sample", &ScmModel::sample, py::arg("n"), py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>())
      .def(
          "intervene",
          [](const ScmModel& s, const std::map<std::string, std::variant<double, std::string>>& values, std::size_t n,
             std::uint64_t seed) { return s.intervene(to_spec(values), n, seed); },
          py::arg("values"), py::arg("n"), py::arg("seed") = 0)
      .def(
          "upsample",
          [](const ScmModel& s, const std::string& label, const std::map<std::string, std::size_t>& counts,
             std::uint64_t seed, const std::string& mode) {
            auto r = s.upsample(label, counts, seed, parse_upsample_mode(mode));
            return py::make_tuple(r.rows, r.method);
          },
          py::arg("label"), py::arg("counts"), py::arg("seed") = 0, py::arg("mode") = "auto");

  m.def(
      "evaluate",
      [](const Table& real, const Table& syn, const py::dict& config) {
        const auto report = evaluate(real, syn, evaluation_config_from_json(from_python(config)));
        return to_python(report.to_json());
      },
      py::arg("real"), py::arg("syn"), py::arg("config") = py::dict(),
      "Metrics report as a dict. config uses the layout of the run configuration's `evaluation` block.");

  m.def("ks_statistic", [](const std::vector<double>& a, const std::vector<double>& b) { return ks_statistic(a, b); });
  m.def("tv_distance", [](const std::vector<double>& p, const std::vector<double>& q) { return tv_distance(p, q); });

  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "tabscm");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return cli::main(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line tool in-process and returns its exit code.");
}
