#include "cfverse/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "cfverse/bsp.hpp"
#include "cfverse/error.hpp"
#include "cfverse/graph_multiverse.hpp"
#include "cfverse/serialization.hpp"
#include "cfverse/vector_multiverse.hpp"
#include "csv.hpp"

namespace cfverse::cli {

using io::Json;

namespace {

class NoCandidatesError : public Error {
public:
    using Error::Error;
};

FeatureSchema infer_schema(const std::filesystem::path& data, const std::string& label) {
    const auto text = io::read_file(data);
    const auto header_end = text.find('\n');
    const auto records = detail::split_csv(text.substr(0, header_end));
    if (records.empty()) throw SchemaError(label, "missing header row");
    std::vector<std::string> names;
    for (const auto& h : records.front()) {
        const auto name = detail::trim(h);
        if (name != label) names.push_back(name);
    }
    return FeatureSchema::all_numeric(names);
}

double required(const std::optional<double>& v, const char* flag) {
    if (!v) throw ValidationError(std::string("missing required flag ") + flag);
    return *v;
}

graph::GraphConfig graph_config(const RunConfig& cfg, std::size_t rows) {
    graph::GraphConfig g;
    g.k = cfg.k;
    g.lambda = cfg.lambda;
    g.threshold = required(cfg.threshold, "--threshold");
    g.target_class = cfg.target_class;
    if (g.k == 0 || g.k >= rows)
        throw ValidationError("--k must be in [1, " + std::to_string(rows - 1) + "] for " + std::to_string(rows) + " rows");
    if (!(g.threshold > 0.0 && g.threshold <= 1.0)) throw ValidationError("--threshold must lie in (0, 1]");
    if (!(g.lambda >= 0.0)) throw ValidationError("--lambda must be >= 0");
    if (!(cfg.gamma > 0.0)) throw ValidationError("--gamma must be positive");
    if (!(cfg.alt_separation >= 0.0)) throw ValidationError("--alt-separation must be >= 0");
    if (cfg.alt_count == 0) throw ValidationError("--alt-count must be positive");
    return g;
}

Json parameters(const RunConfig& cfg) {
    Json j{{"k", cfg.k},
           {"lambda", cfg.lambda},
           {"t", cfg.threshold ? Json(*cfg.threshold) : Json(nullptr)},
           {"target_class", cfg.target_class},
           {"gamma", cfg.gamma},
           {"top_c", cfg.top_c},
           {"alt_count", cfg.alt_count},
           {"alt_separation", cfg.alt_separation},
           {"seed", cfg.seed}};
    j["model"] = cfg.predictions ? Json{{"predictions", cfg.predictions->filename().string()}}
                                 : Json{{"knn", cfg.k_model}};
    return j;
}

// Per-factual outcome of the graph-based selection for several pool sizes.
struct FactualOutcome {
    graph::Vertex factual = 0;
    bool has_reachable = false;
    // index 0: nearest; then one entry per requested c
    std::vector<double> path_length;
    std::vector<double> l2_distance;
    std::vector<double> opportunity;
};

FactualOutcome evaluate_factual(const graph::MultiverseGraph& g, graph::Vertex factual, const RunConfig& cfg,
                                std::size_t max_c) {
    FactualOutcome out;
    out.factual = factual;
    graph::ExplainOptions opts;
    opts.gamma = cfg.gamma;
    opts.with_paths = false;
    auto mv = graph::explain_from(g, factual, opts);
    if (mv.status != graph::ExplainStatus::ok || mv.reports.empty() || !mv.reports.front().reachable) return out;
    out.has_reachable = true;

    const auto alternatives = graph::diverse_alternatives(g, mv.reports, cfg.alt_count, cfg.alt_separation);
    std::vector<graph::CounterfactualReport> pool;
    for (const auto& r : mv.reports) {
        if (!r.reachable || pool.size() >= max_c) break;
        pool.push_back(r);
        graph::attach_path(g, factual, pool.back(), cfg.gamma, nullptr);
    }
    graph::DistanceCache cache(g);
    auto record = [&](const graph::CounterfactualReport& r) {
        out.path_length.push_back(r.distance);
        out.l2_distance.push_back(vec::l2_distance(g.instances.row(factual), g.instances.row(r.target)));
        out.opportunity.push_back(r.opportunity.value_or(0.0));
    };
    record(graph::select_optimal(g, pool, 1, alternatives, &cache).selected);
    for (auto c : cfg.top_c) record(graph::select_optimal(g, pool, c, alternatives, &cache).selected);
    return out;
}

std::string format_number(double v) {
    std::ostringstream out;
    out << std::setprecision(10) << v;
    return out.str();
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {std::nan(""), std::nan("")};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

std::vector<vec::Path> read_paths(const RunConfig& cfg, Json& errors) {
    std::vector<Json> docs;
    for (const auto& p : cfg.paths) {
        const auto j = io::read_json(p);
        if (j.is_array()) {
            for (const auto& e : j) docs.push_back(e);
        } else if (j.is_object() && j.contains("paths")) {
            for (const auto& e : j["paths"]) docs.push_back(e);
        } else {
            docs.push_back(j);
        }
    }
    std::vector<vec::Path> paths;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        try {
            paths.push_back(io::path_from_json(docs[i]));
        } catch (const Error& e) {
            paths.push_back({});
            errors[std::to_string(i)] = e.what();
        }
    }
    return paths;
}

}  // namespace

Inputs load_inputs(const RunConfig& cfg) {
    if (cfg.data.empty()) throw ValidationError("missing required flag --data");
    const auto schema = cfg.schema ? load_schema(*cfg.schema) : infer_schema(cfg.data, cfg.label_column);
    Inputs in;
    in.data = encode_and_scale(load_csv(cfg.data, schema, cfg.label_column));
    if (cfg.predictions) {
        in.classifier = load_predictions(*cfg.predictions, in.data);
    } else {
        if (cfg.k_model == 0 || cfg.k_model > in.data.rows())
            throw ValidationError("--k-model must be in [1, " + std::to_string(in.data.rows()) + "]");
        in.classifier = build_knn_classifier(in.data, cfg.k_model);
    }
    return in;
}

std::string cmd_build(const RunConfig& cfg) {
    const auto in = load_inputs(cfg);
    const auto gcfg = graph_config(cfg, in.data.rows());
    if (cfg.factual && *cfg.factual >= in.data.rows())
        throw ValidationError("--factual " + std::to_string(*cfg.factual) + " is not a row of the dataset");

    auto g = graph::build_graph(in.data, *in.classifier, gcfg);
    Json doc = io::to_json(g);
    if (cfg.factual) {
        graph::ExplainOptions opts;
        opts.gamma = cfg.gamma;
        const auto mv = graph::explain_from(g, *cfg.factual, opts);
        doc["factual"] = *cfg.factual;
        doc["status"] = mv.status == graph::ExplainStatus::ok ? "ok" : "no_candidates";
        doc["reports"] = io::to_json(mv.reports);
    }
    return doc.dump(2) + "\n";
}

std::string cmd_explain(const RunConfig& cfg) {
    if (!cfg.factual) throw ValidationError("missing required flag --factual");
    if (cfg.top_c.size() != 1 || cfg.top_c.front() == 0) throw ValidationError("--top-c takes exactly one positive value");
    const auto in = load_inputs(cfg);
    const auto gcfg = graph_config(cfg, in.data.rows());
    if (*cfg.factual >= in.data.rows())
        throw ValidationError("--factual " + std::to_string(*cfg.factual) + " is not a row of the dataset");

    graph::ExplainOptions opts;
    opts.gamma = cfg.gamma;
    opts.with_paths = false;
    const auto built = graph::build_multiverse(in.data, *in.classifier, *cfg.factual, gcfg, opts);
    const auto& g = built.graph;
    const auto& mv = built.multiverse;
    if (mv.status == graph::ExplainStatus::no_candidates)
        throw NoCandidatesError("no instance reaches probability " + format_number(gcfg.threshold) + " for class " +
                                std::to_string(gcfg.target_class));
    if (mv.reports.empty() || !mv.reports.front().reachable)
        throw NoCandidatesError("no counterfactual candidate is reachable from row " + std::to_string(*cfg.factual));

    const auto branching = graph::node_branching_factors(g, graph::branching_exclusions(g, *cfg.factual));
    const std::size_t c = cfg.top_c.front();
    auto alternatives = graph::diverse_alternatives(g, mv.reports, cfg.alt_count, cfg.alt_separation);
    std::vector<graph::CounterfactualReport> pool;
    for (const auto& r : mv.reports) {
        if (!r.reachable || pool.size() >= c) break;
        pool.push_back(r);
        graph::attach_path(g, *cfg.factual, pool.back(), cfg.gamma, &branching);
    }
    for (auto& a : alternatives) graph::attach_path(g, *cfg.factual, a, cfg.gamma, &branching);
    const auto sel = graph::select_optimal(g, pool, c, alternatives);

    std::vector<graph::Vertex> unreachable;
    for (const auto& r : mv.reports)
        if (!r.reachable) unreachable.push_back(r.target);

    Json doc{{"schema_version", io::kSchemaVersion},
             {"factual", *cfg.factual},
             {"status", "ok"},
             {"parameters", parameters(cfg)},
             {"graph", Json{{"vertices", g.vertex_count()}, {"arcs", g.arc_count()}, {"candidates", g.candidates.size()}}},
             {"top_c", io::to_json(sel.pool)},
             {"alternatives", io::to_json(alternatives)},
             {"selected", io::to_json(sel.selected)},
             {"unreachable_candidates", unreachable}};
    return doc.dump(2) + "\n";
}

std::string cmd_pathmetrics(const RunConfig& cfg) {
    const double epsilon = required(cfg.epsilon, "--epsilon");
    if (!(epsilon > 0.0)) throw ValidationError("--epsilon must be positive");
    if (cfg.sections.empty()) throw ValidationError("--o needs at least one value");
    for (auto o : cfg.sections)
        if (o == 0) throw ValidationError("--o values must be positive");

    Json errors = Json::object();
    const auto paths = read_paths(cfg, errors);
    if (paths.size() < 2) throw ValidationError("pathmetrics needs at least two paths");

    std::vector<bool> usable(paths.size(), false);
    Json path_docs = Json::array();
    for (std::size_t i = 0; i < paths.size(); ++i) {
        Json entry{{"index", i}};
        if (errors.contains(std::to_string(i))) {
            entry["error"] = errors[std::to_string(i)];
        } else {
            const double len = vec::path_length(paths[i]);
            entry["length"] = len;
            entry["steps"] = paths[i].steps.size();
            if (len > 0.0)
                usable[i] = true;
            else
                entry["error"] = "cannot normalize a zero-length path";
        }
        path_docs.push_back(entry);
    }

    Json normalizations = Json::array();
    for (auto o : cfg.sections) {
        std::vector<std::optional<vec::NormalizedPath>> norm(paths.size());
        Json norm_docs = Json::array();
        for (std::size_t i = 0; i < paths.size(); ++i) {
            if (usable[i]) norm[i] = vec::normalize_path(paths[i], o);
            norm_docs.push_back(norm[i] ? io::to_json(*norm[i]) : Json(nullptr));
        }
        const auto weights = vec::WeightVector::uniform(o);
        Json de = Json::array();
        Json branching = Json::array();
        for (std::size_t a = 0; a < paths.size(); ++a) {
            Json de_row = Json::array();
            Json br_row = Json::array();
            for (std::size_t b = 0; b < paths.size(); ++b) {
                if (!norm[a] || !norm[b] || norm[a]->origin.size() != norm[b]->origin.size()) {
                    de_row.push_back(nullptr);
                    br_row.push_back(nullptr);
                    continue;
                }
                de_row.push_back(vec::direction_difference(*norm[a], *norm[b], weights));
                const auto ob = vec::find_branching_point(*norm[a], *norm[b], epsilon);
                br_row.push_back(ob ? Json(*ob) : Json(nullptr));
            }
            de.push_back(de_row);
            branching.push_back(br_row);
        }
        normalizations.push_back(Json{{"o", o},
                                      {"paths", norm_docs},
                                      {"direction_difference", de},
                                      {"branching_points", branching}});
    }

    // Opportunity between the endpoints, seen from the shared origin.
    Json opportunity;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < paths.size(); ++i)
        if (usable[i]) members.push_back(i);
    if (members.size() < 2) {
        opportunity = Json{{"error", "needs at least two non-degenerate paths"}};
    } else {
        const auto& origin = paths[members.front()].origin;
        std::vector<Vector> ends;
        bool shared = true;
        for (auto i : members) {
            shared = shared && paths[i].origin == origin;
            ends.push_back(paths[i].endpoint());
        }
        if (!shared) {
            opportunity = Json{{"error", "paths do not share an origin"}};
        } else {
            try {
                const auto m = vec::opportunity_matrix(origin, ends);
                opportunity = Json{{"paths", members}, {"values", m.values}, {"means", m.means},
                                   {"layout", "values[reference][compared]"}};
            } catch (const Error& e) {
                opportunity = Json{{"error", e.what()}};
            }
        }
    }

    Json doc{{"schema_version", io::kSchemaVersion},
             {"epsilon", epsilon},
             {"paths", path_docs},
             {"normalizations", normalizations},
             {"opportunity", opportunity}};
    return doc.dump(2) + "\n";
}

std::string cmd_evaluate(const RunConfig& cfg) {
    if (cfg.top_c.empty()) throw ValidationError("--top-c needs at least one value");
    for (auto c : cfg.top_c)
        if (c == 0) throw ValidationError("--top-c values must be positive");
    const auto in = load_inputs(cfg);
    const auto gcfg = graph_config(cfg, in.data.rows());
    const auto g = graph::build_graph(in.data, *in.classifier, gcfg);

    std::vector<graph::Vertex> factuals;
    for (graph::Vertex v = 0; v < g.vertex_count(); ++v)
        if (!g.is_candidate(v) && g.vertex_class[v] != gcfg.target_class) factuals.push_back(v);
    if (cfg.max_factuals && factuals.size() > *cfg.max_factuals) {
        std::mt19937_64 rng(cfg.seed);
        std::shuffle(factuals.begin(), factuals.end(), rng);
        factuals.resize(*cfg.max_factuals);
        std::sort(factuals.begin(), factuals.end());
    }
    if (factuals.empty()) throw ValidationError("no factual instance of an undesired class to evaluate");

    const std::size_t max_c = *std::max_element(cfg.top_c.begin(), cfg.top_c.end());
    std::vector<FactualOutcome> outcomes(factuals.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) outcomes[i] = evaluate_factual(g, factuals[i], cfg, max_c);
    };
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (factuals.size() + workers - 1) / workers;
        for (std::size_t b = 0; b < factuals.size(); b += chunk)
            pool.emplace_back(work, b, std::min(factuals.size(), b + chunk));
    }

    std::size_t skipped = 0;
    const std::size_t strategies = cfg.top_c.size() + 1;
    std::vector<std::vector<double>> len(strategies), l2(strategies), opp(strategies);
    for (const auto& o : outcomes) {
        if (!o.has_reachable) {
            ++skipped;
            continue;
        }
        for (std::size_t s = 0; s < strategies; ++s) {
            len[s].push_back(o.path_length[s]);
            l2[s].push_back(o.l2_distance[s]);
            opp[s].push_back(o.opportunity[s]);
        }
    }

    std::ostringstream csv;
    csv << "strategy,c,factuals,skipped,path_length_mean,path_length_std,l2_distance_mean,l2_distance_std,"
           "opportunity_mean,opportunity_std\n";
    for (std::size_t s = 0; s < strategies; ++s) {
        const auto c = s == 0 ? std::size_t{1} : cfg.top_c[s - 1];
        const auto [lm, ls] = mean_std(len[s]);
        const auto [dm, ds] = mean_std(l2[s]);
        const auto [om, os] = mean_std(opp[s]);
        csv << (s == 0 ? std::string("nearest") : "facelift") << ',' << c << ',' << len[s].size() << ',' << skipped << ','
            << format_number(lm) << ',' << format_number(ls) << ',' << format_number(dm) << ',' << format_number(ds) << ','
            << format_number(om) << ',' << format_number(os) << '\n';
    }
    return csv.str();
}

std::string cmd_bsp(const RunConfig& cfg) {
    if (!cfg.factual) throw ValidationError("missing required flag --factual");
    if (!cfg.counterfactuals) throw ValidationError("missing required flag --counterfactuals");
    const auto schema = cfg.schema ? load_schema(*cfg.schema) : infer_schema(cfg.data, cfg.label_column);
    const auto data = encode_and_scale(load_csv(cfg.data, schema, cfg.label_column));
    if (*cfg.factual >= data.rows()) throw ValidationError("--factual is not a row of the dataset");
    bsp::BspConfig bcfg{cfg.tau, cfg.seed};
    bcfg.validate();

    const auto doc = io::read_json(*cfg.counterfactuals);
    const auto points = (doc.is_object() && doc.contains("counterfactuals") ? doc["counterfactuals"] : doc)
                            .get<std::vector<Vector>>();
    const auto factual = data.instances.row(*cfg.factual);
    Json out = Json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        Json entry{{"index", i}, {"counterfactual", points[i]}};
        try {
            if (points[i].size() != data.dims())
                throw ValidationError("counterfactual has dimension " + std::to_string(points[i].size()) + ", expected " +
                                      std::to_string(data.dims()));
            // Each counterfactual gets its own stream derived from the seed.
            bsp::BspConfig per = bcfg;
            per.seed = cfg.seed + i;
            const auto res = bsp::construct_path_bsp(factual, points[i], data, per);
            entry["rows"] = res.rows;
            entry["path"] = io::to_json(res.path);
            entry["length"] = vec::path_length(res.path);
        } catch (const ValidationError& e) {
            entry["error"] = e.what();
        }
        out.push_back(entry);
    }
    return Json{{"schema_version", io::kSchemaVersion}, {"factual", *cfg.factual}, {"tau", cfg.tau}, {"paths", out}}.dump(2) +
           "\n";
}

int run(const std::string& subcommand, const RunConfig& cfg) {
    try {
        std::string doc;
        if (subcommand == "build")
            doc = cmd_build(cfg);
        else if (subcommand == "explain")
            doc = cmd_explain(cfg);
        else if (subcommand == "pathmetrics")
            doc = cmd_pathmetrics(cfg);
        else if (subcommand == "evaluate")
            doc = cmd_evaluate(cfg);
        else if (subcommand == "bsp")
            doc = cmd_bsp(cfg);
        else
            throw ValidationError("unknown subcommand '" + subcommand + "'");
        if (cfg.output)
            io::write_atomic(*cfg.output, doc);
        else
            std::cout << doc;
        return kExitOk;
    } catch (const NoCandidatesError& e) {
        std::cerr << "cfverse " << subcommand << ": " << e.what() << '\n';
        return kExitNoCandidates;
    } catch (const NothingToExplainError& e) {
        std::cerr << "cfverse " << subcommand << ": " << e.what() << '\n';
        return kExitNothingToExplain;
    } catch (const ValidationError& e) {
        std::cerr << "cfverse " << subcommand << ": " << e.what() << '\n';
        return kExitInvalid;
    } catch (const SchemaError& e) {
        std::cerr << "cfverse " << subcommand << ": " << e.what() << '\n';
        return kExitInvalid;
    } catch (const ParseError& e) {
        std::cerr << "cfverse " << subcommand << ": " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "cfverse " << subcommand << ": " << e.what() << '\n';
        return kExitError;
    }
}

}  // namespace cfverse::cli
