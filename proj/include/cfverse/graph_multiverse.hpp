#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "cfverse/dataio.hpp"
#include "cfverse/matrix.hpp"
#include "cfverse/model.hpp"

// Directed k-NN graph realisation of the explanatory multiverse. Vertices are
// dataset rows; counterfactual journeys are shortest paths through them.
namespace cfverse::graph {

using Vertex = std::size_t;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Arc {
    Vertex to = 0;
    double weight = 0.0;
};

struct ArcRecord {
    Vertex from = 0;
    Vertex to = 0;
    double weight = 0.0;
};

struct ColumnConstraint {
    Monotonicity monotonicity = Monotonicity::free;
    bool is_mutable = true;
};

std::vector<ColumnConstraint> column_constraints(const Dataset& data);

// d_lambda: coordinates that increase along a->b cost lambda times more.
double weighted_distance(ConstRow a, ConstRow b, double lambda);

// Like weighted_distance, but lambda only applies to changes that go against
// a column's monotonicity; any change of an immutable column is infinite.
double monotonicity_distance(ConstRow a, ConstRow b, std::span<const ColumnConstraint> columns, double lambda);

class MultiverseGraph {
public:
    MultiverseGraph() = default;
    // Arcs need not be sorted; duplicates keep the smallest weight.
    MultiverseGraph(std::size_t vertex_count, const std::vector<ArcRecord>& arcs);

    std::size_t vertex_count() const noexcept { return out_.size(); }
    std::span<const Arc> out_arcs(Vertex v) const { return out_.at(v); }
    std::span<const Arc> in_arcs(Vertex v) const { return in_.at(v); }
    std::optional<double> arc_weight(Vertex from, Vertex to) const;
    std::size_t arc_count() const;
    std::vector<ArcRecord> arcs() const;
    bool contains(Vertex v) const noexcept { return v < out_.size(); }

    // Construction parameters, kept for export.
    std::size_t k = 0;
    double lambda = 1.0;
    double threshold = 0.5;
    int target_class = 1;

    // Sorted vertex ids whose probability of target_class reaches threshold.
    std::vector<Vertex> candidates;
    // Optional per-vertex metadata: coordinates and predicted classes.
    Matrix instances;
    std::vector<int> vertex_class;

    bool is_candidate(Vertex v) const;

private:
    std::vector<std::vector<Arc>> out_;
    std::vector<std::vector<Arc>> in_;
};

struct GraphPath {
    std::vector<Vertex> vertices;
    std::vector<double> edge_weights;
    double total_length = 0.0;

    std::size_t size() const noexcept { return vertices.size(); }
};

// Single-source distances along arcs (forward) or towards a target set (reverse).
std::vector<double> distances_from(const MultiverseGraph& g, Vertex source);
std::vector<double> distances_to(const MultiverseGraph& g, std::span<const Vertex> targets);
std::vector<double> distances_to(const MultiverseGraph& g, Vertex target);
// Vertices reachable from `source` (including itself).
std::vector<bool> reachable_from(const MultiverseGraph& g, Vertex source);

// Minimal total weight; among equal-weight paths the lexicographically
// smallest vertex sequence. nullopt when `to` cannot be reached.
std::optional<GraphPath> shortest_path(const MultiverseGraph& g, Vertex from, Vertex to);
// Same, reusing distances_to(g, to).
std::optional<GraphPath> shortest_path(const MultiverseGraph& g, Vertex from, Vertex to,
                                       std::span<const double> dist_to_target);

struct GraphConfig {
    std::size_t k = 20;
    double lambda = 1.0;
    double threshold = 0.5;
    int target_class = 1;
};

// Pairwise distances, k smallest outgoing arcs per vertex (ties by target
// index), candidate marking. Independent of the instance being explained.
MultiverseGraph build_graph(const Dataset& data, const Classifier& clf, const GraphConfig& cfg);

// Per-vertex branching factor r = -log(c / c_max), where c is the mean over
// non-excluded classes of the shortest distance to that class and c_max the
// largest finite c in the graph. nullopt marks vertices that reach no class.
struct BranchingTable {
    std::vector<std::optional<double>> r;
    std::vector<std::optional<double>> mean_distance;  // c before rescaling
    double max_mean_distance = 0.0;
    std::set<int> excluded;
};

BranchingTable node_branching_factors(const MultiverseGraph& g, const std::set<int>& exclude);
std::optional<double> node_branching_factor(const MultiverseGraph& g, Vertex v, const std::set<int>& exclude);

// Discounted mean of r over interior vertices v_2..v_{n-1}; the first
// interior vertex gets gamma^0. Throws for paths without interior vertices.
// nullopt if an interior vertex has no branching factor.
std::optional<double> path_branching_factor(const GraphPath& p, double gamma,
                                            std::span<const std::optional<double>> per_node);

struct Opportunity {
    double value = 0.0;
    bool unreachable = false;  // cmp reachable from no vertex of the reference path
};

// Walks the reference path, accumulating edge weight while the distance to the
// comparison target strictly decreases; divides by the path length.
Opportunity opportunity_along_path(const GraphPath& reference, std::span<const double> dist_to_cmp);
Opportunity graph_opportunity_potential(const MultiverseGraph& g, Vertex factual, Vertex ref_cf, Vertex cmp_cf);

struct CounterfactualReport {
    Vertex target = 0;
    bool reachable = false;
    std::optional<GraphPath> path;
    double distance = kInfinity;
    std::optional<double> branching_factor;
    std::optional<double> opportunity;
};

enum class ExplainStatus { ok, no_candidates };

struct ExplainOptions {
    double gamma = 1.0;
    // Compute paths and branching factors for every candidate (false: distances only).
    bool with_paths = true;
};

struct Multiverse {
    ExplainStatus status = ExplainStatus::ok;
    Vertex factual = 0;
    // Reachable reports by ascending distance (ties by target), then unreachable ones by target.
    std::vector<CounterfactualReport> reports;
};

// Classes excluded from branching: the factual's class, plus the target class
// when there are more than two classes.
std::set<int> branching_exclusions(const MultiverseGraph& g, Vertex factual);

Multiverse explain_from(const MultiverseGraph& g, Vertex factual, const ExplainOptions& opts = {},
                        const BranchingTable* branching = nullptr);

struct BuildResult {
    MultiverseGraph graph;
    Multiverse multiverse;
};

BuildResult build_multiverse(const Dataset& data, const Classifier& clf, Vertex factual, const GraphConfig& cfg,
                             const ExplainOptions& opts = {});

// Fills in the path (and branching factor) for a distance-only report.
void attach_path(const MultiverseGraph& g, Vertex factual, CounterfactualReport& report, double gamma,
                 const BranchingTable* branching);

// Greedy scan by distance keeping reports at least `separation` (L2) from every kept one.
std::vector<CounterfactualReport> diverse_alternatives(const MultiverseGraph& g,
                                                       const std::vector<CounterfactualReport>& reports,
                                                       std::size_t count, double separation);

struct Selection {
    CounterfactualReport selected;
    // The top-c pool with opportunity filled in, by ascending distance.
    std::vector<CounterfactualReport> pool;
};

// Caches reverse distances per comparison target.
class DistanceCache {
public:
    explicit DistanceCache(const MultiverseGraph& g) : g_(&g) {}
    const std::vector<double>& to(Vertex target);

private:
    const MultiverseGraph* g_;
    std::map<Vertex, std::vector<double>> cache_;
};

// Among the c closest reachable reports, the one whose mean opportunity
// against the alternatives (itself excluded) is largest; ties go to smaller
// distance, then smaller target index.
Selection select_optimal(const MultiverseGraph& g, const std::vector<CounterfactualReport>& reports, std::size_t c,
                         const std::vector<CounterfactualReport>& alternatives, DistanceCache* cache = nullptr);

// Mean opportunity of a reference path against alternatives, skipping `self`.
double mean_opportunity(const GraphPath& reference, Vertex self, const std::vector<CounterfactualReport>& alternatives,
                        DistanceCache& cache);

}  // namespace cfverse::graph
