#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include "cfverse/error.hpp"
#include "cfverse/navigator.hpp"
#include "oracles.hpp"

using namespace cfverse;
using namespace cfverse::nav;

namespace {

// 0 -> 1 -> 3 -> 5 (candidate), 0 -> 2 -> 3, 2 -> 4 (dead end).
oracle::SimpleGraph fixture_arcs() {
    return {6, {{0, 1, 1.0}, {0, 2, 2.0}, {1, 3, 1.0}, {2, 3, 0.5}, {2, 4, 1.0}, {3, 5, 1.0}}};
}

graph::MultiverseGraph fixture_graph() {
    const auto sg = fixture_arcs();
    graph::MultiverseGraph g(sg.n, sg.arcs);
    g.candidates = {5};
    g.threshold = 0.5;
    g.instances = Matrix::from_rows({{0, 0}, {1, 0}, {1, 1}, {2, 0.5}, {1, 2}, {3, 0.5}});
    g.vertex_class = {0, 0, 0, 0, 0, 1};
    return g;
}

struct FakeClock {
    Clock::time_point now = Clock::time_point{} + std::chrono::hours(24 * 365 * 50);
};

}  // namespace

TEST(Navigator, CreateSession) {
    Navigator nav;
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 0);
    EXPECT_EQ(s.history.size(), 1u);
    EXPECT_FALSE(s.complete);
    ASSERT_TRUE(s.optimum);
    EXPECT_EQ(s.optimum->target, 5u);
    EXPECT_DOUBLE_EQ(s.optimum->distance, 3.0);
    EXPECT_THROW(nav.create_session(gid, 42), NotFoundError);
    EXPECT_THROW(nav.create_session("g-missing", 0), NotFoundError);
    EXPECT_THROW(nav.create_session(gid, 5), NothingToExplainError);
}

TEST(Navigator, IsolatedFactualHasNoPreviews) {
    Navigator nav;
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 4);
    EXPECT_TRUE(nav.preview_steps(s.id).empty());
    EXPECT_FALSE(s.optimum);
}

TEST(Navigator, PreviewOfAdjacentCandidate) {
    Navigator nav;
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 3);
    const auto previews = nav.preview_steps(s.id);
    ASSERT_EQ(previews.size(), 1u);
    EXPECT_EQ(previews[0].neighbor, 5u);
    EXPECT_EQ(previews[0].reachable_candidates, (std::vector<graph::Vertex>{5}));
    EXPECT_DOUBLE_EQ(previews[0].candidate_distance.at(5), 1.0);
    EXPECT_EQ(previews[0].delta_reachable, 0);
    EXPECT_DOUBLE_EQ(previews[0].opportunity.at(5), 1.0);
}

TEST(Navigator, DeadEndNeighbour) {
    Navigator nav;
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 2);
    for (const auto& p : nav.preview_steps(s.id)) {
        if (p.neighbor == 4) {
            EXPECT_TRUE(p.reachable_candidates.empty());
            EXPECT_EQ(p.delta_reachable, -1);
            EXPECT_EQ(p.opportunity.at(5), 0.0);
        }
    }
}

TEST(Navigator, PreviewsMatchFloodFill) {
    Navigator nav;
    const auto sg = fixture_arcs();
    const auto gid = nav.add_graph(fixture_graph());
    for (graph::Vertex start : {0u, 1u, 2u, 3u}) {
        const auto s = nav.create_session(gid, start);
        for (const auto& p : nav.preview_steps(s.id)) {
            const auto reach = oracle::flood_reachable(sg, p.neighbor);
            std::vector<graph::Vertex> expected;
            if (reach.count(5)) expected.push_back(5);
            EXPECT_EQ(p.reachable_candidates, expected) << start << "->" << p.neighbor;
            if (!expected.empty())
                EXPECT_DOUBLE_EQ(p.candidate_distance.at(5), p.edge_weight + oracle::brute_force_shortest(sg, p.neighbor, 5));
        }
    }
}

TEST(Navigator, StepToCandidateCompletes) {
    Navigator nav;
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 3);
    const auto after = nav.take_step(s.id, 5);
    EXPECT_TRUE(after.complete);
    ASSERT_TRUE(after.realized);
    EXPECT_DOUBLE_EQ(after.realized->total_length, 1.0);
    EXPECT_THROW(nav.take_step(s.id, 5), ConflictError);
}

TEST(Navigator, StepToNonNeighbour) {
    Navigator nav;
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 0);
    EXPECT_THROW(nav.take_step(s.id, 5), ValidationError);
    EXPECT_THROW(nav.take_step(s.id, 99), NotFoundError);
    EXPECT_EQ(nav.session(s.id).history.size(), 1u);
}

TEST(Navigator, ThreeStepsAccumulate) {
    Navigator nav;
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 0);
    nav.take_step(s.id, 2);
    nav.take_step(s.id, 3);
    const auto last = nav.take_step(s.id, 5);
    EXPECT_EQ(last.history.size(), 4u);
    EXPECT_DOUBLE_EQ(last.total_length(), 3.5);
    EXPECT_EQ(last.version, 3u);
}

TEST(Navigator, SessionDocument) {
    Navigator nav;
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 0);
    const auto fresh = nav.session_state(s.id);
    EXPECT_EQ(fresh["history"].size(), 1u);
    EXPECT_FALSE(fresh["complete"].get<bool>());
    EXPECT_TRUE(fresh["realized_path"].is_null());
    EXPECT_EQ(fresh, nav.session_state(s.id));
    EXPECT_EQ(fresh["previews"].size(), 2u);

    nav.take_step(s.id, 1);
    nav.take_step(s.id, 3);
    nav.take_step(s.id, 5);
    const auto done = nav.session_state(s.id);
    EXPECT_TRUE(done["complete"].get<bool>());
    EXPECT_EQ(done["realized_path"]["vertices"], (std::vector<graph::Vertex>{0, 1, 3, 5}));
    EXPECT_DOUBLE_EQ(done["relative_to_optimum"]["length_ratio"].get<double>(), 1.0);
}

TEST(Navigator, VersionConflict) {
    Navigator nav;
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 0);
    nav.take_step(s.id, 1, 0);
    EXPECT_THROW(nav.take_step(s.id, 3, 0), ConflictError);
    EXPECT_NO_THROW(nav.take_step(s.id, 3, 1));
}

TEST(Navigator, ConcurrentStepsAreSerialized) {
    for (int round = 0; round < 20; ++round) {
        Navigator nav;
        const auto gid = nav.add_graph(fixture_graph());
        const auto s = nav.create_session(gid, 0);
        std::atomic<int> ok{0}, conflicts{0};
        {
            std::vector<std::jthread> threads;
            for (int t = 0; t < 8; ++t) {
                threads.emplace_back([&, t] {
                    try {
                        nav.take_step(s.id, t % 2 ? 1 : 2, 0);
                        ++ok;
                    } catch (const ConflictError&) {
                        ++conflicts;
                    }
                });
            }
        }
        EXPECT_EQ(ok.load(), 1);
        EXPECT_EQ(conflicts.load(), 7);
        EXPECT_EQ(nav.session(s.id).history.size(), 2u);
    }
}

TEST(Navigator, IdleSessionsExpire) {
    auto clock = std::make_shared<FakeClock>();
    NavigatorOptions opts;
    opts.idle_timeout = std::chrono::seconds(60);
    opts.clock = [clock] { return clock->now; };
    Navigator nav(opts);
    const auto gid = nav.add_graph(fixture_graph());
    const auto s = nav.create_session(gid, 0);
    clock->now += std::chrono::seconds(50);
    nav.take_step(s.id, 1);
    clock->now += std::chrono::seconds(50);
    EXPECT_EQ(nav.session_count(), 1u);
    clock->now += std::chrono::seconds(11);
    EXPECT_EQ(nav.session_count(), 0u);
    EXPECT_THROW(nav.session(s.id), NotFoundError);
}

TEST(Navigator, PersistenceSurvivesRestart) {
    const auto dir = std::filesystem::temp_directory_path() / "cfverse_nav_persist";
    std::filesystem::remove_all(dir);
    NavigatorOptions opts;
    opts.persist_dir = dir;
    std::string gid, sid;
    nlohmann::json before;
    {
        Navigator nav(opts);
        gid = nav.add_graph(fixture_graph());
        sid = nav.create_session(gid, 0).id;
        nav.take_step(sid, 2);
        before = nav.session_state(sid);
    }
    Navigator restored(opts);
    const auto after = restored.session_state(sid);
    EXPECT_EQ(after["history"], before["history"]);
    EXPECT_EQ(after["version"], before["version"]);
    EXPECT_EQ(after["optimum"], before["optimum"]);
    EXPECT_EQ(after["previews"], before["previews"]);
    restored.take_step(sid, 3);
    EXPECT_EQ(restored.graph_summary(gid)["candidates"], (std::vector<graph::Vertex>{5}));
    std::filesystem::remove_all(dir);
}

TEST(Navigator, GraphSummaryUsesRawCoordinatesInTwoDimensions) {
    Navigator nav;
    const auto g = fixture_graph();
    const auto gid = nav.add_graph(g);
    const auto sum = nav.graph_summary(gid);
    EXPECT_EQ(sum["projection"], "raw");
    EXPECT_EQ(sum["coordinates"][3], g.instances.row_copy(3));
}

TEST(Projection, LeadingComponentsOfHigherDimensionalData) {
    // Points on a line in 3-D project onto a single axis.
    const auto m = Matrix::from_rows({{0, 0, 0}, {1, 2, 2}, {2, 4, 4}, {3, 6, 6}});
    const auto p = projection_2d(m);
    ASSERT_EQ(p.cols(), 2u);
    for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(p(r, 1), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(p(3, 0) - p(0, 0)), 9.0, 1e-9);
}
