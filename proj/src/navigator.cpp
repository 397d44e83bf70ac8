#include "cfverse/navigator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "cfverse/error.hpp"
#include "cfverse/serialization.hpp"

namespace cfverse::nav {

using Json = nlohmann::json;

double NavigationSession::total_length() const {
    double total = 0.0;
    for (const auto& h : history) total += h.weight;
    return total;
}

struct Navigator::GraphEntry {
    std::string id;
    graph::MultiverseGraph graph;
    Matrix projection;

    mutable std::mutex cache_mutex;
    mutable std::map<std::set<int>, graph::BranchingTable> branching;
    mutable std::unique_ptr<graph::DistanceCache> distances;

    const graph::BranchingTable* branching_for(Vertex factual) const {
        if (graph.vertex_class.size() != graph.vertex_count()) return nullptr;
        const auto exclude = graph::branching_exclusions(graph, factual);
        auto it = branching.find(exclude);
        if (it == branching.end()) it = branching.emplace(exclude, graph::node_branching_factors(graph, exclude)).first;
        return &it->second;
    }
};

struct Navigator::SessionSlot {
    std::mutex mutex;
    NavigationSession session;
};

namespace {

std::string iso_time(Clock::time_point t) {
    const auto secs = Clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::int64_t epoch_ms(Clock::time_point t) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

Clock::time_point from_epoch_ms(std::int64_t ms) { return Clock::time_point(std::chrono::milliseconds(ms)); }

std::vector<Vertex> reachable_candidates(const graph::MultiverseGraph& g, Vertex from) {
    const auto seen = graph::reachable_from(g, from);
    std::vector<Vertex> out;
    for (auto c : g.candidates)
        if (seen[c]) out.push_back(c);
    return out;
}

graph::GraphPath realized_path(const NavigationSession& s) {
    graph::GraphPath p;
    for (std::size_t i = 0; i < s.history.size(); ++i) {
        p.vertices.push_back(s.history[i].vertex);
        if (i > 0) {
            p.edge_weights.push_back(s.history[i].weight);
            p.total_length += s.history[i].weight;
        }
    }
    return p;
}

Json store_document(const NavigationSession& s) {
    Json history = Json::array();
    for (const auto& h : s.history) history.push_back(Json{{"vertex", h.vertex}, {"weight", h.weight}});
    Json j{{"id", s.id},
           {"graph_id", s.graph_id},
           {"factual", s.factual},
           {"history", history},
           {"complete", s.complete},
           {"targets", s.targets},
           {"alternatives", s.alternatives},
           {"version", s.version},
           {"created_ms", epoch_ms(s.created)},
           {"updated_ms", epoch_ms(s.updated)}};
    if (s.realized_opportunity) j["realized_opportunity"] = *s.realized_opportunity;
    if (s.optimum)
        j["optimum"] = Json{{"target", s.optimum->target},
                            {"distance", s.optimum->distance},
                            {"opportunity", s.optimum->opportunity},
                            {"path", io::to_json(s.optimum->path)}};
    return j;
}

NavigationSession session_from_store(const Json& j) {
    NavigationSession s;
    s.id = j.at("id").get<std::string>();
    s.graph_id = j.at("graph_id").get<std::string>();
    s.factual = j.at("factual").get<Vertex>();
    for (const auto& h : j.at("history")) s.history.push_back({h.at("vertex").get<Vertex>(), h.at("weight").get<double>()});
    if (s.history.empty()) throw ValidationError("stored session has no history");
    s.complete = j.at("complete").get<bool>();
    if (s.complete) s.realized = realized_path(s);
    s.targets = j.at("targets").get<std::vector<Vertex>>();
    s.alternatives = j.at("alternatives").get<std::vector<Vertex>>();
    s.version = j.at("version").get<std::uint64_t>();
    s.created = from_epoch_ms(j.at("created_ms").get<std::int64_t>());
    s.updated = from_epoch_ms(j.at("updated_ms").get<std::int64_t>());
    if (j.contains("realized_opportunity")) s.realized_opportunity = j["realized_opportunity"].get<double>();
    if (j.contains("optimum")) {
        const auto& o = j["optimum"];
        s.optimum = Optimum{o.at("target").get<Vertex>(), o.at("distance").get<double>(), o.at("opportunity").get<double>(),
                            io::graph_path_from_json(o.at("path"))};
    }
    return s;
}

std::vector<graph::CounterfactualReport> as_reports(const std::vector<Vertex>& targets) {
    std::vector<graph::CounterfactualReport> out;
    for (auto t : targets) {
        graph::CounterfactualReport r;
        r.target = t;
        r.reachable = true;
        out.push_back(r);
    }
    return out;
}

}  // namespace

Matrix projection_2d(const Matrix& instances) {
    const auto n = instances.rows();
    const auto m = instances.cols();
    Matrix out(n, 2, 0.0);
    if (n == 0) return out;
    if (m <= 2) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < m; ++c) out(r, c) = instances(r, c);
        return out;
    }
    Eigen::MatrixXd x(n, m);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = instances(r, c);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / std::max<double>(1.0, static_cast<double>(n) - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // Eigenvalues ascend; the two leading directions are the last columns.
    Eigen::MatrixXd dirs(m, 2);
    dirs.col(0) = solver.eigenvectors().col(static_cast<Eigen::Index>(m - 1));
    dirs.col(1) = solver.eigenvectors().col(static_cast<Eigen::Index>(m - 2));
    // Fix the sign so the largest loading is positive (stable output).
    for (Eigen::Index c = 0; c < 2; ++c) {
        Eigen::Index arg = 0;
        dirs.col(c).cwiseAbs().maxCoeff(&arg);
        if (dirs(arg, c) < 0) dirs.col(c) *= -1.0;
    }
    const Eigen::MatrixXd proj = x * dirs;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < 2; ++c) out(r, c) = proj(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    return out;
}

Json to_json(const StepPreview& p) {
    Json opportunity = Json::object();
    for (const auto& [t, l] : p.opportunity) opportunity[std::to_string(t)] = l;
    Json distance = Json::object();
    for (const auto& [c, d] : p.candidate_distance) distance[std::to_string(c)] = d;
    return Json{{"neighbor", p.neighbor},
                {"edge_weight", p.edge_weight},
                {"reachable_candidates", p.reachable_candidates},
                {"reachable_count", p.reachable_candidates.size()},
                {"candidate_distance", distance},
                {"delta_reachable", p.delta_reachable},
                {"branching_factor", p.branching_factor ? Json(*p.branching_factor) : Json(nullptr)},
                {"opportunity_to_each_target", opportunity}};
}

Json to_json(const std::vector<StepPreview>& previews) {
    Json arr = Json::array();
    for (const auto& p : previews) arr.push_back(to_json(p));
    return arr;
}

Navigator::Navigator(NavigatorOptions options) : options_(std::move(options)) {
    std::random_device rd;
    id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    if (options_.persist_dir) load_persisted();
}

Navigator::~Navigator() = default;

std::string Navigator::new_id(const char* prefix) {
    std::uint64_t x = id_salt_ + 0x9E3779B97F4A7C15ULL * ++id_counter_;
    x ^= x >> 31;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 29;
    std::ostringstream out;
    out << prefix << std::hex << std::setw(16) << std::setfill('0') << x;
    return out.str();
}

std::string Navigator::add_graph(graph::MultiverseGraph g) {
    auto entry = std::make_shared<GraphEntry>();
    if (g.instances.rows() == g.vertex_count() && !g.instances.empty()) entry->projection = projection_2d(g.instances);
    entry->graph = std::move(g);
    entry->distances = std::make_unique<graph::DistanceCache>(entry->graph);
    std::lock_guard lock(mutex_);
    entry->id = new_id("g-");
    graphs_[entry->id] = entry;
    if (options_.persist_dir) {
        std::filesystem::create_directories(*options_.persist_dir / "graphs");
        io::write_atomic(*options_.persist_dir / "graphs" / (entry->id + ".json"), io::to_json(entry->graph).dump());
    }
    return entry->id;
}

std::shared_ptr<Navigator::GraphEntry> Navigator::graph_entry(const std::string& graph_id) const {
    std::lock_guard lock(mutex_);
    const auto it = graphs_.find(graph_id);
    if (it == graphs_.end()) throw NotFoundError("unknown graph '" + graph_id + "'");
    return it->second;
}

Json Navigator::graph_summary(const std::string& graph_id) const {
    const auto entry = graph_entry(graph_id);
    const auto& g = entry->graph;
    std::vector<graph::Vertex> vertices(g.vertex_count());
    for (std::size_t v = 0; v < vertices.size(); ++v) vertices[v] = v;
    Json coords = Json::array();
    for (std::size_t r = 0; r < entry->projection.rows(); ++r) coords.push_back(entry->projection.row_copy(r));
    Json j{{"schema_version", io::kSchemaVersion},
           {"graph_id", graph_id},
           {"vertices", vertices},
           {"arc_count", g.arc_count()},
           {"candidates", g.candidates},
           {"coordinates", entry->projection.empty() ? Json(nullptr) : coords},
           {"projection", g.instances.cols() == 2 ? "raw" : "pca"},
           {"k", g.k},
           {"lambda", g.lambda},
           {"t", g.threshold}};
    if (g.vertex_class.size() == g.vertex_count()) j["vertex_class"] = g.vertex_class;
    return j;
}

void Navigator::expire_idle() {
    const auto now = options_.clock();
    std::lock_guard lock(mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        std::unique_lock slot_lock(it->second->mutex, std::try_to_lock);
        if (slot_lock.owns_lock() && now - it->second->session.updated > options_.idle_timeout) {
            if (options_.persist_dir) {
                std::error_code ec;
                std::filesystem::remove(*options_.persist_dir / "sessions" / (it->first + ".json"), ec);
            }
            slot_lock.unlock();
            it = sessions_.erase(it);
        } else {
            ++it;
        }
    }
}

std::shared_ptr<Navigator::SessionSlot> Navigator::slot(const std::string& session_id) {
    expire_idle();
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
    return it->second;
}

std::size_t Navigator::session_count() {
    expire_idle();
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

void Navigator::persist(const NavigationSession& s) const {
    if (!options_.persist_dir) return;
    std::filesystem::create_directories(*options_.persist_dir / "sessions");
    io::write_atomic(*options_.persist_dir / "sessions" / (s.id + ".json"), store_document(s).dump());
}

void Navigator::load_persisted() {
    const auto& dir = *options_.persist_dir;
    if (std::filesystem::exists(dir / "graphs")) {
        for (const auto& f : std::filesystem::directory_iterator(dir / "graphs")) {
            if (f.path().extension() != ".json") continue;
            auto entry = std::make_shared<GraphEntry>();
            entry->graph = io::graph_from_json(io::read_json(f.path()));
            if (entry->graph.instances.rows() == entry->graph.vertex_count() && !entry->graph.instances.empty())
                entry->projection = projection_2d(entry->graph.instances);
            entry->distances = std::make_unique<graph::DistanceCache>(entry->graph);
            entry->id = f.path().stem().string();
            graphs_[entry->id] = entry;
        }
    }
    if (std::filesystem::exists(dir / "sessions")) {
        for (const auto& f : std::filesystem::directory_iterator(dir / "sessions")) {
            if (f.path().extension() != ".json") continue;
            auto s = session_from_store(io::read_json(f.path()));
            if (!graphs_.contains(s.graph_id)) continue;
            auto slot = std::make_shared<SessionSlot>();
            slot->session = std::move(s);
            sessions_[slot->session.id] = slot;
        }
    }
}

NavigationSession Navigator::create_session(const std::string& graph_id, Vertex factual) {
    expire_idle();
    const auto entry = graph_entry(graph_id);
    const auto& g = entry->graph;
    if (!g.contains(factual)) throw NotFoundError("vertex " + std::to_string(factual) + " is not in graph " + graph_id);
    if (g.is_candidate(factual))
        throw NothingToExplainError("vertex " + std::to_string(factual) + " is already a counterfactual candidate");

    NavigationSession s;
    s.graph_id = graph_id;
    s.factual = factual;
    s.history.push_back({factual, 0.0});
    s.created = s.updated = options_.clock();

    {
        std::lock_guard cache_lock(entry->cache_mutex);
        const auto* branching = entry->branching_for(factual);
        graph::ExplainOptions opts;
        opts.gamma = options_.gamma;
        opts.with_paths = false;
        auto mv = graph::explain_from(g, factual, opts, branching);
        if (mv.status == graph::ExplainStatus::ok && !mv.reports.empty() && mv.reports.front().reachable) {
            const double separation = g.instances.rows() == g.vertex_count() ? options_.alt_separation : 0.0;
            const auto alternatives = graph::diverse_alternatives(g, mv.reports, options_.alt_count, separation);
            std::vector<graph::CounterfactualReport> pool;
            for (const auto& r : mv.reports) {
                if (!r.reachable || pool.size() >= options_.top_c) break;
                pool.push_back(r);
                graph::attach_path(g, factual, pool.back(), options_.gamma, branching);
            }
            const auto sel = graph::select_optimal(g, pool, options_.top_c, alternatives, entry->distances.get());
            s.optimum = Optimum{sel.selected.target, sel.selected.distance, sel.selected.opportunity.value_or(0.0),
                                *sel.selected.path};
            std::set<Vertex> targets;
            for (const auto& r : sel.pool) targets.insert(r.target);
            for (const auto& r : alternatives) {
                targets.insert(r.target);
                s.alternatives.push_back(r.target);
            }
            s.targets.assign(targets.begin(), targets.end());
        }
    }

    auto slot = std::make_shared<SessionSlot>();
    {
        std::lock_guard lock(mutex_);
        s.id = new_id("s-");
        slot->session = s;
        sessions_[s.id] = slot;
    }
    persist(s);
    return s;
}

std::vector<StepPreview> Navigator::compute_previews(const GraphEntry& entry, const NavigationSession& s) const {
    const auto& g = entry.graph;
    const Vertex current = s.current();
    const auto now_reachable = reachable_candidates(g, current);

    std::lock_guard cache_lock(entry.cache_mutex);
    const auto* branching = entry.branching_for(s.factual);
    std::vector<StepPreview> out;
    for (const auto& arc : g.out_arcs(current)) {
        StepPreview p;
        p.neighbor = arc.to;
        p.edge_weight = arc.weight;
        const auto from_neighbor = graph::distances_from(g, arc.to);
        for (auto c : g.candidates) {
            if (!std::isfinite(from_neighbor[c])) continue;
            p.reachable_candidates.push_back(c);
            p.candidate_distance[c] = arc.weight + from_neighbor[c];
        }
        p.delta_reachable = static_cast<long>(p.reachable_candidates.size()) - static_cast<long>(now_reachable.size());
        if (branching) p.branching_factor = branching->r[arc.to];
        for (auto t : s.targets) {
            const auto& dist = entry.distances->to(t);
            const double before = dist[current];
            const double after = dist[arc.to];
            double l = 0.0;
            if (std::isfinite(before) && std::isfinite(after) && after < before)
                l = arc.weight > 0.0 ? std::clamp((before - after) / arc.weight, 0.0, 1.0) : 1.0;
            p.opportunity[t] = l;
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<StepPreview> Navigator::preview_steps(const std::string& session_id) {
    const auto s = slot(session_id);
    NavigationSession snapshot;
    {
        std::lock_guard lock(s->mutex);
        snapshot = s->session;
    }
    return compute_previews(*graph_entry(snapshot.graph_id), snapshot);
}

NavigationSession Navigator::take_step(const std::string& session_id, Vertex neighbor,
                                       std::optional<std::uint64_t> expected_version) {
    const auto s = slot(session_id);
    std::unique_lock lock(s->mutex, std::try_to_lock);
    if (!lock.owns_lock()) throw ConflictError("session '" + session_id + "' is being modified by another request");
    auto& session = s->session;
    if (expected_version && *expected_version != session.version)
        throw ConflictError("session '" + session_id + "' is at version " + std::to_string(session.version) +
                            ", request expected " + std::to_string(*expected_version));
    if (session.complete) throw ConflictError("session '" + session_id + "' is already complete");

    const auto entry = graph_entry(session.graph_id);
    const auto& g = entry->graph;
    if (!g.contains(neighbor)) throw NotFoundError("vertex " + std::to_string(neighbor) + " is not in the graph");
    const auto w = g.arc_weight(session.current(), neighbor);
    if (!w)
        throw ValidationError("vertex " + std::to_string(neighbor) + " is not an out-neighbour of " +
                              std::to_string(session.current()));

    session.history.push_back({neighbor, *w});
    ++session.version;
    session.updated = options_.clock();
    if (g.is_candidate(neighbor)) {
        session.complete = true;
        session.realized = realized_path(session);
        std::lock_guard cache_lock(entry->cache_mutex);
        session.realized_opportunity =
            graph::mean_opportunity(*session.realized, neighbor, as_reports(session.alternatives), *entry->distances);
    }
    persist(session);
    return session;
}

NavigationSession Navigator::session(const std::string& session_id) {
    const auto s = slot(session_id);
    std::lock_guard lock(s->mutex);
    return s->session;
}

Json Navigator::session_document(const GraphEntry& entry, const NavigationSession& s) const {
    Json history = Json::array();
    for (const auto& h : s.history) history.push_back(Json{{"vertex", h.vertex}, {"weight", h.weight}});
    Json j{{"schema_version", io::kSchemaVersion},
           {"id", s.id},
           {"graph_id", s.graph_id},
           {"factual", s.factual},
           {"current", s.current()},
           {"history", history},
           {"total_length", s.total_length()},
           {"complete", s.complete},
           {"version", s.version},
           {"created", iso_time(s.created)},
           {"updated", iso_time(s.updated)},
           {"targets", s.targets},
           {"alternatives", s.alternatives},
           {"previews", s.complete ? Json::array() : to_json(compute_previews(entry, s))}};
    j["realized_path"] = s.realized ? io::to_json(*s.realized) : Json(nullptr);
    j["realized_opportunity"] = s.realized_opportunity ? Json(*s.realized_opportunity) : Json(nullptr);
    if (s.optimum) {
        j["optimum"] = Json{{"target", s.optimum->target},
                            {"distance", s.optimum->distance},
                            {"opportunity", s.optimum->opportunity},
                            {"path", io::to_json(s.optimum->path)}};
    } else {
        j["optimum"] = nullptr;
    }
    if (s.realized && s.optimum) {
        j["relative_to_optimum"] = Json{
            {"length_ratio", s.optimum->distance > 0.0 ? s.realized->total_length / s.optimum->distance : 1.0},
            {"opportunity_difference", s.realized_opportunity.value_or(0.0) - s.optimum->opportunity}};
    } else {
        j["relative_to_optimum"] = nullptr;
    }
    return j;
}

Json Navigator::session_state(const std::string& session_id) {
    const auto snapshot = session(session_id);
    return session_document(*graph_entry(snapshot.graph_id), snapshot);
}

}  // namespace cfverse::nav
