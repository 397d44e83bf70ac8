#include "cfverse/serialization.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cfverse/error.hpp"

namespace cfverse::io {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json matrix_rows(const Matrix& m) {
    Json rows = Json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(m.row_copy(r));
    return rows;
}

template <typename T>
T field(const Json& j, const char* name) {
    if (!j.contains(name)) throw ValidationError(std::string("missing field '") + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("invalid field '") + name + "': " + e.what());
    }
}

}  // namespace

Json to_json(const vec::Path& p) { return Json{{"origin", p.origin}, {"steps", p.steps}}; }

vec::Path path_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("path document must be an object");
    vec::Path p;
    p.origin = field<Vector>(j, "origin");
    if (j.contains("steps")) {
        p.steps = field<std::vector<Vector>>(j, "steps");
    } else if (j.contains("points")) {
        // Absolute points after the origin.
        auto pts = field<std::vector<Vector>>(j, "points");
        pts.insert(pts.begin(), p.origin);
        return vec::Path::from_points(pts);
    } else {
        throw ValidationError("missing field 'steps'");
    }
    p.validate();
    return p;
}

Json to_json(const vec::NormalizedPath& p) {
    return Json{{"origin", p.origin}, {"o", p.o()}, {"points", p.points}};
}

Json to_json(const graph::GraphPath& p) {
    return Json{{"vertices", p.vertices}, {"edge_weights", p.edge_weights}, {"total_length", p.total_length}};
}

graph::GraphPath graph_path_from_json(const Json& j) {
    graph::GraphPath p;
    p.vertices = field<std::vector<graph::Vertex>>(j, "vertices");
    p.edge_weights = field<std::vector<double>>(j, "edge_weights");
    if (p.edge_weights.size() + 1 != p.vertices.size() && !p.vertices.empty())
        throw ValidationError("a graph path with n vertices needs n-1 edge weights");
    for (double w : p.edge_weights) p.total_length += w;
    return p;
}

Json to_json(const graph::CounterfactualReport& r) {
    Json j{{"target", r.target},
           {"reachable", r.reachable},
           {"distance", r.reachable ? Json(r.distance) : Json(nullptr)},
           {"branching_factor", optional_number(r.branching_factor)},
           {"opportunity", optional_number(r.opportunity)}};
    j["path"] = r.path ? to_json(*r.path) : Json(nullptr);
    return j;
}

Json to_json(const std::vector<graph::CounterfactualReport>& reports) {
    Json arr = Json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    return arr;
}

Json to_json(const graph::MultiverseGraph& g) {
    Json arcs = Json::array();
    for (const auto& a : g.arcs()) arcs.push_back(Json{{"from", a.from}, {"to", a.to}, {"weight", a.weight}});
    std::vector<graph::Vertex> vertices(g.vertex_count());
    for (std::size_t v = 0; v < vertices.size(); ++v) vertices[v] = v;
    Json j{{"schema_version", kSchemaVersion},
           {"vertices", vertices},
           {"arcs", std::move(arcs)},
           {"k", g.k},
           {"lambda", g.lambda},
           {"t", g.threshold},
           {"target_class", g.target_class},
           {"candidates", g.candidates}};
    if (g.instances.rows() == g.vertex_count() && !g.instances.empty()) j["instances"] = matrix_rows(g.instances);
    if (g.vertex_class.size() == g.vertex_count()) j["vertex_class"] = g.vertex_class;
    return j;
}

graph::MultiverseGraph graph_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("graph document must be an object");
    const auto vertices = field<std::vector<graph::Vertex>>(j, "vertices");
    for (std::size_t i = 0; i < vertices.size(); ++i)
        if (vertices[i] != i) throw ValidationError("graph vertices must be the row indices 0..n-1 in order");
    std::vector<graph::ArcRecord> arcs;
    for (const auto& a : field<Json>(j, "arcs")) {
        arcs.push_back({field<graph::Vertex>(a, "from"), field<graph::Vertex>(a, "to"), field<double>(a, "weight")});
    }
    graph::MultiverseGraph g(vertices.size(), arcs);
    g.k = j.value("k", std::size_t{0});
    g.lambda = j.value("lambda", 1.0);
    g.threshold = j.value("t", 0.5);
    g.target_class = j.value("target_class", 1);
    g.candidates = j.value("candidates", std::vector<graph::Vertex>{});
    std::sort(g.candidates.begin(), g.candidates.end());
    for (auto c : g.candidates)
        if (c >= g.vertex_count()) throw ValidationError("candidate " + std::to_string(c) + " is not a vertex");
    if (j.contains("instances")) {
        const auto rows = field<std::vector<Vector>>(j, "instances");
        if (rows.size() != g.vertex_count()) throw ValidationError("instances must have one row per vertex");
        for (const auto& r : rows)
            if (r.size() != rows.front().size()) throw ValidationError("instances must have equal dimension");
        g.instances = Matrix::from_rows(rows);
    }
    if (j.contains("vertex_class")) {
        g.vertex_class = field<std::vector<int>>(j, "vertex_class");
        if (g.vertex_class.size() != g.vertex_count()) throw ValidationError("vertex_class must have one entry per vertex");
    }
    return g;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const std::filesystem::path& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace cfverse::io
