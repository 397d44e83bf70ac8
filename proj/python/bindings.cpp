#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cfverse/bsp.hpp"
#include "cfverse/commands.hpp"
#include "cfverse/error.hpp"
#include "cfverse/graph_multiverse.hpp"
#include "cfverse/vector_multiverse.hpp"

namespace py = pybind11;
using namespace cfverse;

namespace {

using Points = std::vector<Vector>;
using Arcs = std::vector<std::tuple<graph::Vertex, graph::Vertex, double>>;

vec::NormalizedPath normalized(const Points& points, std::size_t o) {
    return vec::normalize_path(vec::Path::from_points(points), o);
}

graph::MultiverseGraph make_graph(std::size_t n, const Arcs& arcs) {
    std::vector<graph::ArcRecord> records;
    for (const auto& [from, to, w] : arcs) records.push_back({from, to, w});
    return graph::MultiverseGraph(n, records);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "C++ core of cfverse";
    py::register_exception<Error>(m, "CfverseError", PyExc_ValueError);

    m.def(
        "path_length", [](const Points& points) { return vec::path_length(vec::Path::from_points(points)); },
        py::arg("points"));

    m.def(
        "normalize_path",
        [](const Points& points, std::size_t o) {
            const auto q = normalized(points, o);
            Points out;
            for (std::size_t j = 0; j < q.o(); ++j) out.push_back(q.absolute(j));
            return out;
        },
        py::arg("points"), py::arg("o") = vec::kDefaultSections,
        "Absolute positions of the o equal arc-length points after the origin.");

    m.def(
        "branching_point",
        [](const Points& a, const Points& b, double epsilon, std::size_t o) {
            return vec::find_branching_point(normalized(a, o), normalized(b, o), epsilon);
        },
        py::arg("a"), py::arg("b"), py::arg("epsilon"), py::arg("o") = vec::kDefaultSections,
        "1-based index of the first point of a farther than epsilon from b, or None.");

    m.def(
        "direction_difference",
        [](const Points& a, const Points& b, std::size_t o) {
            return vec::direction_difference(normalized(a, o), normalized(b, o));
        },
        py::arg("a"), py::arg("b"), py::arg("o") = vec::kDefaultSections);

    m.def(
        "vector_opportunity",
        [](const Vector& f, const Vector& ref, const Vector& cmp) { return vec::vector_opportunity_potential(f, ref, cmp); },
        py::arg("factual"), py::arg("ref"), py::arg("cmp"));

    m.def(
        "opportunity_matrix",
        [](const Vector& f, const Points& cfs) {
            auto om = vec::opportunity_matrix(f, cfs);
            return py::make_tuple(om.values, om.means);
        },
        py::arg("factual"), py::arg("counterfactuals"), "Returns (values[ref][cmp], per-reference means).");

    m.def(
        "weighted_distance", [](const Vector& a, const Vector& b, double lam) { return graph::weighted_distance(a, b, lam); },
        py::arg("a"), py::arg("b"), py::arg("lam") = 1.0);

    m.def(
        "shortest_path",
        [](std::size_t n, const Arcs& arcs, graph::Vertex from, graph::Vertex to) -> py::object {
            const auto p = graph::shortest_path(make_graph(n, arcs), from, to);
            if (!p) return py::none();
            return py::make_tuple(p->vertices, p->total_length);
        },
        py::arg("n"), py::arg("arcs"), py::arg("source"), py::arg("target"),
        "(vertices, length) over arcs given as (from, to, weight), or None.");

    m.def(
        "graph_opportunity",
        [](std::size_t n, const Arcs& arcs, graph::Vertex f, graph::Vertex ref, graph::Vertex cmp) {
            return graph::graph_opportunity_potential(make_graph(n, arcs), f, ref, cmp).value;
        },
        py::arg("n"), py::arg("arcs"), py::arg("factual"), py::arg("ref"), py::arg("cmp"));

    m.def(
        "bsp_path",
        [](const Vector& f, const Vector& cf, const Points& data, double tau, std::uint64_t seed) {
            return bsp::construct_path_bsp(f, cf, Matrix::from_rows(data), {tau, seed}).rows;
        },
        py::arg("factual"), py::arg("counterfactual"), py::arg("data"), py::arg("tau") = 0.1, py::arg("seed") = 0,
        "Dataset row indices visited between factual and counterfactual.");

    m.def(
        "explain",
        [](const std::filesystem::path& data, double threshold, std::size_t factual, std::size_t top_c, std::size_t k,
           double lam, int target_class, double gamma, std::size_t alt_count, double alt_separation,
           std::size_t k_model, std::optional<std::filesystem::path> predictions,
           std::optional<std::filesystem::path> schema, std::string label_column, std::uint64_t seed) {
            cli::RunConfig cfg;
            cfg.data = data;
            cfg.threshold = threshold;
            cfg.factual = factual;
            cfg.top_c = {top_c};
            cfg.k = k;
            cfg.lambda = lam;
            cfg.target_class = target_class;
            cfg.gamma = gamma;
            cfg.alt_count = alt_count;
            cfg.alt_separation = alt_separation;
            cfg.k_model = k_model;
            cfg.predictions = std::move(predictions);
            cfg.schema = std::move(schema);
            cfg.label_column = std::move(label_column);
            cfg.seed = seed;
            py::gil_scoped_release release;
            return cli::cmd_explain(cfg);
        },
        py::arg("data"), py::arg("threshold"), py::arg("factual"), py::arg("top_c") = 5, py::kw_only(),
        py::arg("k") = 20, py::arg("lam") = 1.0, py::arg("target_class") = 1, py::arg("gamma") = 1.0,
        py::arg("alt_count") = 5, py::arg("alt_separation") = 1.0, py::arg("k_model") = 5,
        py::arg("predictions") = py::none(), py::arg("schema") = py::none(), py::arg("label_column") = "label",
        py::arg("seed") = 0, "Explain document as JSON text.");
}
