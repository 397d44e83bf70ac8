#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfverse/graph_multiverse.hpp"

// Interactive traversal of a multiverse graph: a session tracks where the
// explainee stands, and previews tell what each outgoing step would cost and
// which counterfactuals would remain reachable afterwards.
namespace cfverse::nav {

using graph::Vertex;
using Clock = std::chrono::system_clock;

struct StepPreview {
    Vertex neighbor = 0;
    double edge_weight = 0.0;
    std::vector<Vertex> reachable_candidates;
    // candidate -> length of the shortest route from the current vertex through this neighbour
    std::map<Vertex, double> candidate_distance;
    long delta_reachable = 0;
    std::optional<double> branching_factor;
    // target -> share of this step that moves towards the target along a shortest route
    std::map<Vertex, double> opportunity;
};

struct HistoryEntry {
    Vertex vertex = 0;
    double weight = 0.0;  // weight of the arc that led here; 0 for the factual
};

struct Optimum {
    Vertex target = 0;
    double distance = 0.0;
    double opportunity = 0.0;
    graph::GraphPath path;
};

struct NavigationSession {
    std::string id;
    std::string graph_id;
    Vertex factual = 0;
    std::vector<HistoryEntry> history;
    bool complete = false;
    std::optional<graph::GraphPath> realized;
    std::optional<double> realized_opportunity;
    std::optional<Optimum> optimum;
    // Targets scored in previews: the top-c pool and the alternatives.
    std::vector<Vertex> targets;
    std::vector<Vertex> alternatives;
    std::uint64_t version = 0;
    Clock::time_point created;
    Clock::time_point updated;

    Vertex current() const { return history.back().vertex; }
    double total_length() const;
};

struct NavigatorOptions {
    std::chrono::seconds idle_timeout{3600};
    std::size_t top_c = 10;
    std::size_t alt_count = 5;
    double alt_separation = 0.0;
    double gamma = 1.0;
    std::optional<std::filesystem::path> persist_dir;
    std::function<Clock::time_point()> clock = [] { return Clock::now(); };
};

class Navigator {
public:
    explicit Navigator(NavigatorOptions options = {});
    ~Navigator();
    Navigator(const Navigator&) = delete;
    Navigator& operator=(const Navigator&) = delete;

    std::string add_graph(graph::MultiverseGraph g);
    // vertices, candidates and 2-D display coordinates
    nlohmann::json graph_summary(const std::string& graph_id) const;

    NavigationSession create_session(const std::string& graph_id, Vertex factual);
    std::vector<StepPreview> preview_steps(const std::string& session_id);
    // expected_version, when given, must match the session's current version.
    NavigationSession take_step(const std::string& session_id, Vertex neighbor,
                                std::optional<std::uint64_t> expected_version = std::nullopt);
    nlohmann::json session_state(const std::string& session_id);
    NavigationSession session(const std::string& session_id);

    std::size_t session_count();
    const NavigatorOptions& options() const noexcept { return options_; }

private:
    struct GraphEntry;
    struct SessionSlot;

    std::shared_ptr<GraphEntry> graph_entry(const std::string& graph_id) const;
    std::shared_ptr<SessionSlot> slot(const std::string& session_id);
    void expire_idle();
    void persist(const NavigationSession& s) const;
    void load_persisted();
    std::vector<StepPreview> compute_previews(const GraphEntry& entry, const NavigationSession& s) const;
    nlohmann::json session_document(const GraphEntry& entry, const NavigationSession& s) const;
    std::string new_id(const char* prefix);

    NavigatorOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<GraphEntry>> graphs_;
    std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
    std::uint64_t id_counter_ = 0;
    std::uint64_t id_salt_ = 0;
};

nlohmann::json to_json(const StepPreview& p);
nlohmann::json to_json(const std::vector<StepPreview>& previews);

// Display coordinates: the raw features when m = 2, otherwise the projection
// on the two leading principal directions.
Matrix projection_2d(const Matrix& instances);

}  // namespace cfverse::nav
