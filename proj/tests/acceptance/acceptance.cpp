// Acceptance checks. One PASS/FAIL line per criterion; nonzero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cfverse/bsp.hpp"
#include "cfverse/graph_multiverse.hpp"
#include "cfverse/serialization.hpp"
#include "cfverse/synthetic.hpp"
#include "cfverse/vector_multiverse.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace cfverse;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and budgets.
constexpr double kProjectionTol = 1e-4;
constexpr double kProjectionBudget = 10.0;
constexpr double kConsistencyTol = 1e-9;
constexpr double kSpacingTol = 1e-9;
constexpr double kDistanceTol = 1e-12;
constexpr double kShortestTol = 1e-12;
constexpr double kShortestBudget = 30.0;
constexpr double kFixtureTol = 1e-2;
constexpr double kTrendBudget = 60.0;
constexpr double kRowTol = 1e-12;

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

Vector random_vector(std::mt19937_64& rng, std::size_t dims, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(dims);
    for (auto& x : v) x = u(rng);
    return v;
}

void check_projection() {
    const auto start = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> dims(2, 10);
    struct Triple {
        Vector f, a, b;
    };
    std::vector<Triple> triples;
    for (int i = 0; i < 1000; ++i) {
        const auto m = dims(rng);
        triples.push_back({random_vector(rng, m), random_vector(rng, m), random_vector(rng, m)});
    }
    std::vector<double> error(triples.size(), 0.0);
    std::vector<bool> in_range(triples.size(), true);
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < triples.size(); i += workers) {
                    const auto& t = triples[i];
                    const double got = vec::vector_opportunity_potential(t.f, t.a, t.b);
                    in_range[i] = got >= 0.0 && got <= 1.0;
                    error[i] = std::abs(got - oracle::sampled_opportunity(t.f, t.a, t.b));
                }
            });
    }
    const double worst = *std::max_element(error.begin(), error.end());
    const bool ranged = std::all_of(in_range.begin(), in_range.end(), [](bool b) { return b; });
    const double elapsed = seconds_since(start);
    report("projection_oracle", worst <= kProjectionTol && ranged && elapsed < kProjectionBudget,
           "1000 triples, max |l - sampled| = " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

void check_consistency() {
    std::mt19937_64 rng(102);
    bool ok = true;
    std::string detail;
    for (int i = 0; i < 200 && ok; ++i) {
        const auto f = random_vector(rng, 4);
        const auto a = random_vector(rng, 4);
        Vector za(4), anti(4);
        for (std::size_t k = 0; k < 4; ++k) {
            za[k] = a[k] - f[k];
            anti[k] = f[k] - za[k];
        }
        // An orthogonal direction: Gram-Schmidt against za.
        auto r = random_vector(rng, 4);
        const double proj = vec::dot(r, za) / vec::dot(za, za);
        Vector ortho(4);
        for (std::size_t k = 0; k < 4; ++k) ortho[k] = f[k] + r[k] - proj * za[k];

        if (vec::vector_opportunity_potential(f, a, a) != 1.0) ok = false, detail = "l(a,a) != 1";
        if (std::abs(vec::vector_opportunity_potential(f, a, ortho)) > kConsistencyTol)
            ok = false, detail = "orthogonal not 0";
        if (vec::vector_opportunity_potential(f, a, anti) != 0.0) ok = false, detail = "anti-parallel not 0";

        const auto b = random_vector(rng, 4);
        std::uniform_real_distribution<double> scale(0.1, 10.0);
        const double s = scale(rng);
        Vector as(4), bs(4);
        for (std::size_t k = 0; k < 4; ++k) {
            as[k] = f[k] + s * (a[k] - f[k]);
            bs[k] = f[k] + s * (b[k] - f[k]);
        }
        if (std::abs(vec::vector_opportunity_potential(f, a, b) - vec::vector_opportunity_potential(f, as, bs)) >
            kConsistencyTol)
            ok = false, detail = "rescaling changed l";
    }
    report("projection_consistency", ok, ok ? "200 cases: self 1, orthogonal 0, anti-parallel 0, rescale invariant" : detail);
}

// Arc-length coordinate of a point lying on the polyline.
double arc_coordinate(const std::vector<Vector>& pts, const Vector& p) {
    double best = std::numeric_limits<double>::infinity(), coord = 0.0, walked = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double seg = oracle::dist(pts[i - 1], pts[i]);
        const double off = oracle::dist(pts[i - 1], p);
        const double gap = off + oracle::dist(p, pts[i]) - seg;  // 0 on the segment
        if (gap < best) best = gap, coord = walked + off;
        walked += seg;
    }
    return coord;
}

void check_normalization() {
    std::mt19937_64 rng(103);
    std::uniform_int_distribution<std::size_t> dims(2, 6), steps(1, 8);
    double worst = 0.0;
    bool endpoints = true;
    for (int i = 0; i < 500; ++i) {
        const auto pts = oracle::random_polyline(rng, dims(rng), steps(rng));
        const auto path = vec::Path::from_points(pts);
        const double total = vec::path_length(path);
        for (std::size_t o : {2, 5, 10, 25}) {
            const auto q = vec::normalize_path(path, o);
            double previous = 0.0;
            for (std::size_t j = 0; j < o; ++j) {
                const double c = arc_coordinate(pts, q.absolute(j));
                worst = std::max(worst, std::abs(c - previous - total / static_cast<double>(o)));
                previous = c;
            }
            if (q.absolute(o - 1) != path.endpoint()) endpoints = false;
        }
    }
    report("normalization", worst <= kSpacingTol && endpoints,
           "500 polylines x o in {2,5,10,25}, max spacing error " + fmt(worst) +
               (endpoints ? ", endpoints exact" : ", endpoint mismatch"));
}

std::vector<double> epsilon_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 20; ++i) g.push_back(0.05 * i);
    return g;
}

bool non_decreasing(const vec::NormalizedPath& a, const vec::NormalizedPath& b) {
    double last = 0.0;
    for (double eps : epsilon_grid()) {
        const auto o = vec::find_branching_point(a, b, eps);
        const double v = o ? static_cast<double>(*o) : std::numeric_limits<double>::infinity();
        if (v < last) return false;
        last = v;
    }
    return true;
}

void check_branching() {
    std::mt19937_64 rng(104);
    bool monotone = true;
    for (int i = 0; i < 500; ++i) {
        const auto origin = random_vector(rng, 2, 0.0, 0.1);
        auto pa = oracle::random_polyline(rng, 2, 4);
        auto pb = oracle::random_polyline(rng, 2, 4);
        pa[0] = origin;
        pb[0] = origin;
        const auto a = vec::normalize_path(vec::Path::from_points(pa), 10);
        const auto b = vec::normalize_path(vec::Path::from_points(pb), 10);
        monotone = monotone && non_decreasing(a, b);
    }

    // A yellow path drifting away from a straight red one.
    const auto red = vec::normalize_path(vec::Path::from_points({{0, 0}, {1, 0}}), 10);
    const auto yellow = vec::normalize_path(vec::Path::from_points({{0, 0}, {0.3, 0}, {0.6, 0.2}, {1.0, 0.35}}), 10);
    double separation = 0.0;
    for (std::size_t j = 0; j < yellow.o(); ++j)
        separation = std::max(separation, vec::point_to_path_distance(yellow.absolute(j), red));
    const auto narrow = vec::find_branching_point(yellow, red, 0.1);
    const auto wide = vec::find_branching_point(yellow, red, 0.25);
    bool never = true;
    for (double eps : epsilon_grid())
        if (eps > separation && vec::find_branching_point(yellow, red, eps)) never = false;
    const bool pattern = narrow && wide && *narrow < *wide && never && non_decreasing(yellow, red);
    report("branching_monotonicity", monotone && pattern,
           std::string("500 random pairs ") + (monotone ? "monotone" : "NOT monotone") + "; fixture o*(0.1)=" +
               (narrow ? std::to_string(*narrow) : "none") + " o*(0.25)=" + (wide ? std::to_string(*wide) : "none") +
               ", none above separation " + fmt(separation) + (never ? "" : " VIOLATED"));
}

void check_weighted_distance() {
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> lam(0.5, 3.0);
    double worst = 0.0, worst_unit = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto a = random_vector(rng, 6), b = random_vector(rng, 6);
        const double l = lam(rng);
        double s = 0.0;
        for (std::size_t k = 0; k < 6; ++k) {
            const double up = std::max(b[k] - a[k], 0.0), down = std::max(a[k] - b[k], 0.0);
            s += l * l * up * up + down * down;
        }
        worst = std::max(worst, std::abs(graph::weighted_distance(a, b, l) - std::sqrt(s)));
        worst_unit = std::max(worst_unit, std::abs(graph::weighted_distance(a, b, 1.0) - oracle::dist(a, b)));
    }
    const Vector lo{0.0, 0.0}, hi{1.0, 0.0};
    const bool hand = std::abs(graph::weighted_distance(lo, hi, 1.1) - 1.1) <= kDistanceTol &&
                      std::abs(graph::weighted_distance(hi, lo, 1.1) - 1.0) <= kDistanceTol;
    report("weighted_distance", worst <= kDistanceTol && worst_unit <= kDistanceTol && hand,
           "10000 pairs, max error " + fmt(std::max(worst, worst_unit)) + (hand ? ", increase 1.1 / decrease 1.0" : ", hand case wrong"));
}

void check_shortest_paths() {
    const auto start = Clock::now();
    std::mt19937_64 rng(106);
    std::uniform_int_distribution<std::size_t> size(2, 9);
    std::uniform_real_distribution<double> density(0.15, 0.6);
    double worst = 0.0;
    bool agree = true;
    std::size_t pairs = 0;
    for (int i = 0; i < 200; ++i) {
        const auto sg = oracle::random_graph(rng, size(rng), density(rng));
        const graph::MultiverseGraph g(sg.n, sg.arcs);
        for (graph::Vertex s = 0; s < sg.n; ++s) {
            const auto expected = oracle::brute_force_shortest_all(sg, s);
            for (graph::Vertex t = 0; t < sg.n; ++t, ++pairs) {
                const auto p = graph::shortest_path(g, s, t);
                if (std::isinf(expected[t])) {
                    if (p) agree = false;
                    continue;
                }
                if (!p || p->vertices.front() != s || p->vertices.back() != t) {
                    agree = false;
                    continue;
                }
                double walked = 0.0;
                for (std::size_t e = 0; e + 1 < p->vertices.size(); ++e) {
                    const auto w = g.arc_weight(p->vertices[e], p->vertices[e + 1]);
                    if (!w) agree = false;
                    walked += w.value_or(0.0);
                }
                worst = std::max({worst, std::abs(p->total_length - expected[t]), std::abs(walked - expected[t])});
            }
        }
    }
    const double elapsed = seconds_since(start);
    report("shortest_path", agree && worst <= kShortestTol && elapsed < kShortestBudget,
           "200 graphs, " + std::to_string(pairs) + " pairs, max error " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

void check_graph_opportunity() {
    oracle::OpportunityFixture f;
    const auto g = f.build();
    const std::vector<graph::Vertex> cfs{f.cf1, f.cf2, f.cf3};
    bool bounded = true, diagonal = true;
    std::vector<double> means;
    for (auto ref : cfs) {
        double sum = 0.0;
        for (auto cmp : cfs) {
            const double l = graph::graph_opportunity_potential(g, f.factual, ref, cmp).value;
            bounded = bounded && l >= 0.0 && l <= 1.0;
            if (ref == cmp) diagonal = diagonal && l == 1.0;
            sum += l;
        }
        means.push_back(sum / 3.0);
    }
    const double l32 = graph::graph_opportunity_potential(g, f.factual, f.cf3, f.cf2).value;
    const double l23 = graph::graph_opportunity_potential(g, f.factual, f.cf2, f.cf3).value;
    const bool oracle_agrees =
        std::abs(l32 - oracle::brute_force_graph_opportunity(f.graph, f.route3, f.weights3, f.cf2)) <= kFixtureTol &&
        std::abs(l23 - oracle::brute_force_graph_opportunity(f.graph, f.route2, f.weights2, f.cf3)) <= kFixtureTol;
    const bool fractions = std::abs(l32 - 7.0 / 8.0) <= kFixtureTol && std::abs(l23 - 4.0 / 7.0) <= kFixtureTol;
    const bool mean_values = std::abs(means[0] - 0.33) <= kFixtureTol && std::abs(means[1] - 0.52) <= kFixtureTol &&
                             std::abs(means[2] - 0.63) <= kFixtureTol;
    const bool third_best = means[2] > means[0] && means[2] > means[1];

    // Random graphs against the enumeration oracle.
    std::mt19937_64 rng(107);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto sg = oracle::random_graph(rng, 8, 0.3);
        const graph::MultiverseGraph rg(sg.n, sg.arcs);
        for (graph::Vertex ref = 1; ref < 4; ++ref)
            for (graph::Vertex cmp = 1; cmp < 4; ++cmp) {
                const auto route = graph::shortest_path(rg, 0, ref);
                if (!route) continue;
                const double l = graph::graph_opportunity_potential(rg, 0, ref, cmp).value;
                bounded = bounded && l >= 0.0 && l <= 1.0;
                worst = std::max(worst, std::abs(l - oracle::brute_force_graph_opportunity(sg, route->vertices,
                                                                                             route->edge_weights, cmp)));
            }
    }
    report("graph_opportunity",
           bounded && diagonal && oracle_agrees && fractions && mean_values && third_best && worst <= kFixtureTol,
           "l(3->2)=" + fmt(l32) + " l(2->3)=" + fmt(l23) + " means " + fmt(means[0]) + "/" + fmt(means[1]) + "/" +
               fmt(means[2]) + ", random-graph max error " + fmt(worst));
}

void check_bsp() {
    std::mt19937_64 rng(108);
    std::uniform_int_distribution<std::size_t> dims(2, 5);
    bool strict = true, rows = true;
    std::size_t interior = 0;
    for (int i = 0; i < 100; ++i) {
        const auto m = dims(rng);
        std::vector<Vector> pts(150);
        for (auto& p : pts) p = random_vector(rng, m, 0.0, 1.0);
        const auto data = Matrix::from_rows(pts);
        const auto f = random_vector(rng, m, 0.0, 1.0), c = random_vector(rng, m, 0.0, 1.0);
        const auto p = bsp::construct_path_bsp(f, c, data, {0.05, static_cast<std::uint64_t>(i)});
        std::vector<Vector> visited{f};
        for (auto r : p.rows) {
            if (r >= data.rows()) {
                rows = false;
                continue;
            }
            visited.push_back(data.row_copy(r));
        }
        visited.push_back(c);
        for (std::size_t j = 1; j < visited.size(); ++j)
            strict = strict && oracle::dist(visited[j], c) < oracle::dist(visited[j - 1], c);
        const auto vs = p.path.vertices();
        if (vs.size() != p.rows.size() + 2) rows = false;
        for (std::size_t j = 0; j < p.rows.size() && vs.size() == p.rows.size() + 2; ++j)
            rows = rows && p.rows[j] < data.rows() && oracle::dist(vs[j + 1], data.row_copy(p.rows[j])) < kRowTol;
        interior += p.rows.size();
    }
    report("bsp_paths", strict && rows,
           "100 triples, " + std::to_string(interior) + " interior points" + (strict ? ", strict approach" : ", approach VIOLATED") +
               (rows ? ", all dataset rows" : ", non-row interior point"));
}

#ifdef CFVERSE_EXE
struct Run {
    int status = -1;
    double seconds = 0.0;
};

Run run_tool(const std::string& args, const fs::path& err) {
    const auto start = Clock::now();
    const std::string cmd = std::string(CFVERSE_EXE) + " " + args + " 2>" + err.string() + " >/dev/null";
    const int rc = std::system(cmd.c_str());
    return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, seconds_since(start)};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(io::read_file(p));
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        out.push_back(cells);
    }
    return out;
}

void check_cli(const fs::path& dir) {
    {
        std::ofstream out(dir / "moons.csv");
        out << synthetic::to_csv(synthetic::make_two_moons(400, 0.1, 7));
    }
    const std::string common = "--data " + (dir / "moons.csv").string() + " --threshold 0.6 --k 20 --alt-separation 0.1 --seed 7 ";

    // Trend over the pool size.
    const auto run = run_tool("evaluate " + common + "--top-c 1 2 5 10 --output " + (dir / "eval1.csv").string(), dir / "err.txt");
    if (run.status != 0) {
        report("facelift_trend", false, "evaluate exited " + std::to_string(run.status));
    } else {
        const auto csv = read_csv(dir / "eval1.csv");
        std::vector<double> opp, len;
        for (std::size_t r = 1; r < csv.size(); ++r)
            if (csv[r].at(0) == "facelift") {
                len.push_back(std::stod(csv[r].at(4)));
                opp.push_back(std::stod(csv[r].at(8)));
            }
        bool ok = opp.size() == 4, strict = false;
        for (std::size_t i = 1; i < opp.size(); ++i) {
            ok = ok && opp[i] >= opp[i - 1] && len[i] >= len[i - 1];
            strict = strict || opp[i] > opp[i - 1];
        }
        std::string detail = "c=1,2,5,10 opportunity";
        for (double v : opp) detail += " " + fmt(v);
        detail += ", path length";
        for (double v : len) detail += " " + fmt(v);
        detail += ", " + fmt(run.seconds) + " s";
        report("facelift_trend", ok && strict && run.seconds < kTrendBudget, detail);
    }

    // Byte-identical outputs across runs.
    const auto again = run_tool("evaluate " + common + "--top-c 1 2 5 10 --output " + (dir / "eval2.csv").string(), dir / "err.txt");
    const std::string explain = "explain " + common + "--top-c 5 --factual 0 --output ";
    const auto e1 = run_tool(explain + (dir / "ex1.json").string(), dir / "err.txt");
    const auto e2 = run_tool(explain + (dir / "ex2.json").string(), dir / "err.txt");
    const bool ran = run.status == 0 && again.status == 0 && e1.status == 0 && e2.status == 0;
    const bool same = ran && io::read_file(dir / "eval1.csv") == io::read_file(dir / "eval2.csv") &&
                      io::read_file(dir / "ex1.json") == io::read_file(dir / "ex2.json");
    report("cli_determinism", same, ran ? (same ? "explain and evaluate byte-identical" : "outputs differ") : "a run failed");
}
#endif

}  // namespace

int main() {
    check_projection();
    check_consistency();
    check_normalization();
    check_branching();
    check_weighted_distance();
    check_shortest_paths();
    check_graph_opportunity();
    check_bsp();
#ifdef CFVERSE_EXE
    const auto dir = fs::temp_directory_path() / "cfverse_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    check_cli(dir);
    fs::remove_all(dir);
#else
    report("facelift_trend", false, "built without the command-line tool");
    report("cli_determinism", false, "built without the command-line tool");
#endif
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures == 0 ? 0 : 1;
}
