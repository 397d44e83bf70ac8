#include "cfverse/graph_multiverse.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <thread>

#include "cfverse/error.hpp"
#include "cfverse/vector_multiverse.hpp"

namespace cfverse::graph {

std::vector<ColumnConstraint> column_constraints(const Dataset& data) {
    std::vector<ColumnConstraint> out(data.dims());
    for (std::size_t c = 0; c < data.dims(); ++c) out[c] = {data.column_monotonicity(c), data.column_mutable(c)};
    return out;
}

double weighted_distance(ConstRow a, ConstRow b, double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        const double phi = diff < 0.0 ? -lambda : 1.0;
        s += (phi * diff) * (phi * diff);
    }
    return std::sqrt(s);
}

double monotonicity_distance(ConstRow a, ConstRow b, std::span<const ColumnConstraint> columns, double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double change = b[i] - a[i];
        if (change == 0.0) continue;
        const auto& col = columns[i];
        if (!col.is_mutable) return kInfinity;
        const bool against = (col.monotonicity == Monotonicity::non_decreasing && change < 0.0) ||
                             (col.monotonicity == Monotonicity::non_increasing && change > 0.0);
        const double term = against ? lambda * change : change;
        s += term * term;
    }
    return std::sqrt(s);
}

MultiverseGraph::MultiverseGraph(std::size_t vertex_count, const std::vector<ArcRecord>& arcs)
    : out_(vertex_count), in_(vertex_count) {
    for (const auto& a : arcs) {
        if (a.from >= vertex_count || a.to >= vertex_count)
            throw ValidationError("arc " + std::to_string(a.from) + "->" + std::to_string(a.to) + " references a missing vertex");
        if (!(a.weight >= 0.0) || std::isinf(a.weight))
            throw ValidationError("arc weights must be finite and non-negative");
        if (a.from == a.to) continue;
        auto& list = out_[a.from];
        auto it = std::find_if(list.begin(), list.end(), [&](const Arc& x) { return x.to == a.to; });
        if (it == list.end())
            list.push_back({a.to, a.weight});
        else
            it->weight = std::min(it->weight, a.weight);
    }
    for (Vertex v = 0; v < vertex_count; ++v) {
        std::sort(out_[v].begin(), out_[v].end(), [](const Arc& x, const Arc& y) { return x.to < y.to; });
        for (const auto& arc : out_[v]) in_[arc.to].push_back({v, arc.weight});
    }
}

std::optional<double> MultiverseGraph::arc_weight(Vertex from, Vertex to) const {
    const auto& list = out_.at(from);
    const auto it = std::lower_bound(list.begin(), list.end(), to, [](const Arc& a, Vertex t) { return a.to < t; });
    if (it == list.end() || it->to != to) return std::nullopt;
    return it->weight;
}

std::size_t MultiverseGraph::arc_count() const {
    std::size_t n = 0;
    for (const auto& l : out_) n += l.size();
    return n;
}

std::vector<ArcRecord> MultiverseGraph::arcs() const {
    std::vector<ArcRecord> out;
    out.reserve(arc_count());
    for (Vertex v = 0; v < out_.size(); ++v)
        for (const auto& a : out_[v]) out.push_back({v, a.to, a.weight});
    return out;
}

bool MultiverseGraph::is_candidate(Vertex v) const {
    return std::binary_search(candidates.begin(), candidates.end(), v);
}

namespace {

using QueueEntry = std::pair<double, Vertex>;

template <typename NeighborFn>
std::vector<double> dijkstra(std::size_t n, std::span<const Vertex> sources, NeighborFn&& neighbors) {
    std::vector<double> dist(n, kInfinity);
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue;
    for (Vertex s : sources) {
        if (s >= n) throw NotFoundError("vertex " + std::to_string(s) + " is not in the graph");
        dist[s] = 0.0;
        queue.emplace(0.0, s);
    }
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        for (const Arc& arc : neighbors(u)) {
            const double nd = d + arc.weight;
            if (nd < dist[arc.to]) {
                dist[arc.to] = nd;
                queue.emplace(nd, arc.to);
            }
        }
    }
    return dist;
}

// Plain Dijkstra tree reconstruction; used when the lexicographic walk is
// blocked by zero-weight cycles through already visited vertices.
GraphPath predecessor_path(const MultiverseGraph& g, Vertex from, Vertex to) {
    const auto n = g.vertex_count();
    std::vector<double> dist(n, kInfinity);
    std::vector<Vertex> pred(n, n);
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue;
    dist[from] = 0.0;
    queue.emplace(0.0, from);
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        for (const Arc& arc : g.out_arcs(u)) {
            const double nd = d + arc.weight;
            if (nd < dist[arc.to]) {
                dist[arc.to] = nd;
                pred[arc.to] = u;
                queue.emplace(nd, arc.to);
            }
        }
    }
    std::vector<Vertex> rev{to};
    while (rev.back() != from) rev.push_back(pred[rev.back()]);
    GraphPath path;
    path.vertices.assign(rev.rbegin(), rev.rend());
    for (std::size_t i = 1; i < path.vertices.size(); ++i) {
        const double w = *g.arc_weight(path.vertices[i - 1], path.vertices[i]);
        path.edge_weights.push_back(w);
        path.total_length += w;
    }
    return path;
}

void check_vertex(const MultiverseGraph& g, Vertex v) {
    if (!g.contains(v)) throw NotFoundError("vertex " + std::to_string(v) + " is not in the graph");
}

}  // namespace

std::vector<double> distances_from(const MultiverseGraph& g, Vertex source) {
    const Vertex sources[] = {source};
    return dijkstra(g.vertex_count(), sources, [&](Vertex u) { return g.out_arcs(u); });
}

std::vector<double> distances_to(const MultiverseGraph& g, std::span<const Vertex> targets) {
    return dijkstra(g.vertex_count(), targets, [&](Vertex u) { return g.in_arcs(u); });
}

std::vector<double> distances_to(const MultiverseGraph& g, Vertex target) {
    const Vertex targets[] = {target};
    return distances_to(g, targets);
}

std::vector<bool> reachable_from(const MultiverseGraph& g, Vertex source) {
    check_vertex(g, source);
    std::vector<bool> seen(g.vertex_count(), false);
    std::vector<Vertex> stack{source};
    seen[source] = true;
    while (!stack.empty()) {
        const Vertex u = stack.back();
        stack.pop_back();
        for (const auto& arc : g.out_arcs(u))
            if (!seen[arc.to]) {
                seen[arc.to] = true;
                stack.push_back(arc.to);
            }
    }
    return seen;
}

std::optional<GraphPath> shortest_path(const MultiverseGraph& g, Vertex from, Vertex to,
                                       std::span<const double> dist_to_target) {
    check_vertex(g, from);
    check_vertex(g, to);
    if (std::isinf(dist_to_target[from])) return std::nullopt;

    GraphPath path;
    path.vertices.push_back(from);
    std::vector<bool> visited(g.vertex_count(), false);
    visited[from] = true;
    Vertex u = from;
    while (u != to) {
        const double remaining = dist_to_target[u];
        const double tol = 1e-12 * std::max(1.0, remaining);
        std::optional<Arc> next;
        // out_arcs are sorted by target, so the first arc on a shortest route
        // yields the lexicographically smallest continuation.
        for (const auto& arc : g.out_arcs(u)) {
            if (visited[arc.to] || std::isinf(dist_to_target[arc.to])) continue;
            if (arc.weight + dist_to_target[arc.to] <= remaining + tol) {
                next = arc;
                break;
            }
        }
        if (!next) return predecessor_path(g, from, to);  // zero-weight cycles only
        visited[next->to] = true;
        path.vertices.push_back(next->to);
        path.edge_weights.push_back(next->weight);
        path.total_length += next->weight;
        u = next->to;
    }
    return path;
}

std::optional<GraphPath> shortest_path(const MultiverseGraph& g, Vertex from, Vertex to) {
    check_vertex(g, from);
    check_vertex(g, to);
    const auto dist = distances_to(g, to);
    return shortest_path(g, from, to, dist);
}

MultiverseGraph build_graph(const Dataset& data, const Classifier& clf, const GraphConfig& cfg) {
    const std::size_t n = data.rows();
    if (n == 0) throw ValidationError("cannot build a graph over an empty dataset");
    if (cfg.k == 0 || cfg.k >= n)
        throw ValidationError("k must be in [1, " + std::to_string(n - 1) + "] for " + std::to_string(n) + " rows");
    if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) throw ValidationError("threshold t must lie in (0, 1]");
    if (!(cfg.lambda >= 0.0) || std::isinf(cfg.lambda)) throw ValidationError("lambda must be finite and >= 0");

    const auto constraints = column_constraints(data);
    std::vector<std::vector<Arc>> kept(n);
    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<Arc> row;
        row.reserve(n);
        for (std::size_t i = begin; i < end; ++i) {
            row.clear();
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double w = monotonicity_distance(data.instances.row(i), data.instances.row(j), constraints, cfg.lambda);
                if (std::isfinite(w)) row.push_back({j, w});
            }
            const auto keep = std::min(cfg.k, row.size());
            auto cmp = [](const Arc& a, const Arc& b) { return a.weight < b.weight || (a.weight == b.weight && a.to < b.to); };
            std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(keep), row.end(), cmp);
            kept[i].assign(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(keep));
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    if (workers == 1 || n < 256) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t b = 0; b < n; b += chunk) pool.emplace_back(work, b, std::min(n, b + chunk));
    }

    std::vector<ArcRecord> arcs;
    for (Vertex i = 0; i < n; ++i)
        for (const auto& a : kept[i]) arcs.push_back({i, a.to, a.weight});

    MultiverseGraph g(n, arcs);
    g.k = cfg.k;
    g.lambda = cfg.lambda;
    g.threshold = cfg.threshold;
    g.target_class = cfg.target_class;
    g.instances = data.instances;
    g.vertex_class.resize(n);
    for (Vertex v = 0; v < n; ++v) {
        const auto row = data.instances.row(v);
        g.vertex_class[v] = clf.predict(row);
        if (clf.predict_proba(row, cfg.target_class) >= cfg.threshold) g.candidates.push_back(v);
    }
    return g;
}

BranchingTable node_branching_factors(const MultiverseGraph& g, const std::set<int>& exclude) {
    if (g.vertex_class.size() != g.vertex_count())
        throw ValidationError("branching factors need a predicted class for every vertex");
    std::map<int, std::vector<Vertex>> by_class;
    for (Vertex v = 0; v < g.vertex_count(); ++v)
        if (!exclude.contains(g.vertex_class[v])) by_class[g.vertex_class[v]].push_back(v);

    const auto n = g.vertex_count();
    std::vector<double> sum(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    for (const auto& [cls, members] : by_class) {
        const auto dist = distances_to(g, members);
        for (Vertex v = 0; v < n; ++v)
            if (std::isfinite(dist[v])) {
                sum[v] += dist[v];
                ++count[v];
            }
    }

    BranchingTable table;
    table.excluded = exclude;
    table.mean_distance.assign(n, std::nullopt);
    table.r.assign(n, std::nullopt);
    for (Vertex v = 0; v < n; ++v)
        if (count[v] > 0) {
            const double c = sum[v] / static_cast<double>(count[v]);
            table.mean_distance[v] = c;
            table.max_mean_distance = std::max(table.max_mean_distance, c);
        }
    // A vertex sitting on every alternative class has c = 0; its score is
    // floored rather than infinite so path averages stay finite.
    constexpr double kMinRelative = 1e-12;
    for (Vertex v = 0; v < n; ++v) {
        if (!table.mean_distance[v]) continue;
        const double rel = table.max_mean_distance > 0.0 ? *table.mean_distance[v] / table.max_mean_distance : 1.0;
        table.r[v] = -std::log(std::max(rel, kMinRelative));
    }
    return table;
}

std::optional<double> node_branching_factor(const MultiverseGraph& g, Vertex v, const std::set<int>& exclude) {
    check_vertex(g, v);
    return node_branching_factors(g, exclude).r[v];
}

std::optional<double> path_branching_factor(const GraphPath& p, double gamma,
                                            std::span<const std::optional<double>> per_node) {
    if (p.size() < 3) throw ValidationError("path branching factor needs at least one interior vertex");
    if (!(gamma > 0.0)) throw ValidationError("discount gamma must be positive");
    double total = 0.0;
    double discount = 1.0;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        const auto v = p.vertices[i];
        if (v >= per_node.size() || !per_node[v]) return std::nullopt;
        total += discount * *per_node[v];
        discount *= gamma;
    }
    return total / static_cast<double>(p.size() - 2);
}

Opportunity opportunity_along_path(const GraphPath& reference, std::span<const double> dist_to_cmp) {
    if (reference.size() < 2 || !(reference.total_length > 0.0))
        throw ValidationError("opportunity needs a reference path of positive length");
    bool any_finite = false;
    for (auto v : reference.vertices) any_finite = any_finite || std::isfinite(dist_to_cmp[v]);
    if (!any_finite) return {0.0, true};

    double shared = 0.0;
    double previous = dist_to_cmp[reference.vertices.front()];
    for (std::size_t i = 1; i < reference.size(); ++i) {
        const double current = dist_to_cmp[reference.vertices[i]];
        if (current >= previous) break;
        shared += reference.edge_weights[i - 1];
        previous = current;
    }
    return {std::clamp(shared / reference.total_length, 0.0, 1.0), false};
}

Opportunity graph_opportunity_potential(const MultiverseGraph& g, Vertex factual, Vertex ref_cf, Vertex cmp_cf) {
    check_vertex(g, factual);
    check_vertex(g, ref_cf);
    check_vertex(g, cmp_cf);
    if (ref_cf == factual) throw ValidationError("reference counterfactual coincides with the factual vertex");
    const auto path = shortest_path(g, factual, ref_cf);
    if (!path) throw ValidationError("reference counterfactual is not reachable from the factual vertex");
    const auto dist = distances_to(g, cmp_cf);
    return opportunity_along_path(*path, dist);
}

std::set<int> branching_exclusions(const MultiverseGraph& g, Vertex factual) {
    check_vertex(g, factual);
    if (g.vertex_class.size() != g.vertex_count()) return {};
    std::set<int> classes(g.vertex_class.begin(), g.vertex_class.end());
    std::set<int> exclude{g.vertex_class[factual]};
    if (classes.size() > 2) exclude.insert(g.target_class);
    return exclude;
}

void attach_path(const MultiverseGraph& g, Vertex factual, CounterfactualReport& report, double gamma,
                 const BranchingTable* branching) {
    if (!report.reachable || report.path) return;
    report.path = shortest_path(g, factual, report.target);
    if (!report.path) return;
    report.distance = report.path->total_length;
    if (branching && report.path->size() >= 3)
        report.branching_factor = path_branching_factor(*report.path, gamma, branching->r);
}

Multiverse explain_from(const MultiverseGraph& g, Vertex factual, const ExplainOptions& opts,
                        const BranchingTable* branching) {
    check_vertex(g, factual);
    if (g.is_candidate(factual))
        throw NothingToExplainError("vertex " + std::to_string(factual) + " already satisfies the counterfactual threshold");
    if (!(opts.gamma > 0.0)) throw ValidationError("discount gamma must be positive");

    Multiverse mv;
    mv.factual = factual;
    if (g.candidates.empty()) {
        mv.status = ExplainStatus::no_candidates;
        return mv;
    }

    std::optional<BranchingTable> own_table;
    if (opts.with_paths && !branching && g.vertex_class.size() == g.vertex_count()) {
        own_table = node_branching_factors(g, branching_exclusions(g, factual));
        branching = &*own_table;
    }

    const auto dist = distances_from(g, factual);
    std::vector<CounterfactualReport> reachable;
    std::vector<CounterfactualReport> unreachable;
    for (Vertex c : g.candidates) {
        CounterfactualReport r;
        r.target = c;
        r.reachable = std::isfinite(dist[c]);
        if (r.reachable) {
            r.distance = dist[c];
            reachable.push_back(std::move(r));
        } else {
            unreachable.push_back(std::move(r));
        }
    }
    if (opts.with_paths)
        for (auto& r : reachable) attach_path(g, factual, r, opts.gamma, branching);
    std::stable_sort(reachable.begin(), reachable.end(), [](const auto& a, const auto& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.target < b.target);
    });
    mv.reports = std::move(reachable);
    mv.reports.insert(mv.reports.end(), std::make_move_iterator(unreachable.begin()),
                      std::make_move_iterator(unreachable.end()));
    return mv;
}

BuildResult build_multiverse(const Dataset& data, const Classifier& clf, Vertex factual, const GraphConfig& cfg,
                             const ExplainOptions& opts) {
    if (factual >= data.rows()) throw NotFoundError("factual row " + std::to_string(factual) + " is not in the dataset");
    if (clf.predict_proba(data.instances.row(factual), cfg.target_class) >= cfg.threshold)
        throw NothingToExplainError("factual row " + std::to_string(factual) + " already satisfies the threshold");
    BuildResult out;
    out.graph = build_graph(data, clf, cfg);
    out.multiverse = explain_from(out.graph, factual, opts);
    return out;
}

std::vector<CounterfactualReport> diverse_alternatives(const MultiverseGraph& g,
                                                       const std::vector<CounterfactualReport>& reports,
                                                       std::size_t count, double separation) {
    if (!(separation >= 0.0)) throw ValidationError("separation must be non-negative");
    std::vector<CounterfactualReport> kept;
    for (const auto& r : reports) {
        if (kept.size() >= count) break;
        if (!r.reachable) continue;
        bool far_enough = true;
        if (separation > 0.0) {
            if (g.instances.rows() != g.vertex_count())
                throw ValidationError("diverse alternatives need instance coordinates in the graph");
            for (const auto& k : kept)
                if (vec::l2_distance(g.instances.row(r.target), g.instances.row(k.target)) < separation) {
                    far_enough = false;
                    break;
                }
        }
        if (far_enough) kept.push_back(r);
    }
    return kept;
}

const std::vector<double>& DistanceCache::to(Vertex target) {
    auto it = cache_.find(target);
    if (it == cache_.end()) it = cache_.emplace(target, distances_to(*g_, target)).first;
    return it->second;
}

double mean_opportunity(const GraphPath& reference, Vertex self, const std::vector<CounterfactualReport>& alternatives,
                        DistanceCache& cache) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& alt : alternatives) {
        if (alt.target == self) continue;
        total += opportunity_along_path(reference, cache.to(alt.target)).value;
        ++n;
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

Selection select_optimal(const MultiverseGraph& g, const std::vector<CounterfactualReport>& reports, std::size_t c,
                         const std::vector<CounterfactualReport>& alternatives, DistanceCache* cache) {
    if (c == 0) throw ValidationError("top-c must be positive");
    std::vector<CounterfactualReport> pool;
    for (const auto& r : reports)
        if (r.reachable) pool.push_back(r);
    if (pool.empty()) throw ValidationError("no reachable counterfactual to select from");
    std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.target < b.target);
    });
    if (pool.size() > c) pool.resize(c);

    std::optional<DistanceCache> own_cache;
    if (!cache) cache = &own_cache.emplace(g);

    const CounterfactualReport* best = nullptr;
    for (auto& r : pool) {
        if (!r.path) throw ValidationError("report for vertex " + std::to_string(r.target) + " carries no path");
        r.opportunity = mean_opportunity(*r.path, r.target, alternatives, *cache);
        if (!best || *r.opportunity > *best->opportunity ||
            (*r.opportunity == *best->opportunity &&
             (r.distance < best->distance || (r.distance == best->distance && r.target < best->target))))
            best = &r;
    }
    Selection sel;
    sel.selected = *best;
    sel.pool = std::move(pool);
    return sel;
}

}  // namespace cfverse::graph
