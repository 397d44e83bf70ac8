#include <algorithm>
#include <cctype>
#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cfverse/commands.hpp"
#include "cfverse/error.hpp"
#include "cfverse/http_service.hpp"
#include "cfverse/serialization.hpp"
#include "cfverse/synthetic.hpp"

namespace {

using cfverse::cli::RunConfig;

std::string env_name(const std::string& flag) {
    std::string name = "CFVERSE_";
    for (char c : flag) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return name;
}

template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& flag, T& target, const std::string& help) {
    return app->add_option("--" + flag, target, help)->envname(env_name(flag));
}

void data_options(CLI::App* app, RunConfig& cfg) {
    opt(app, "data", cfg.data, "dataset CSV")->required();
    opt(app, "schema", cfg.schema, "feature schema JSON (default: every column numeric)");
    opt(app, "label-column", cfg.label_column, "label column name");
}

void model_options(CLI::App* app, RunConfig& cfg) {
    opt(app, "predictions", cfg.predictions, "CSV of class probabilities per row (default: k-NN classifier)");
    opt(app, "k-model", cfg.k_model, "neighbours of the k-NN classifier");
}

void graph_options(CLI::App* app, RunConfig& cfg) {
    opt(app, "k", cfg.k, "out-degree of the k-NN graph");
    opt(app, "lambda", cfg.lambda, "penalty on feature increases");
    opt(app, "threshold", cfg.threshold, "probability a counterfactual must reach")->required();
    opt(app, "target-class", cfg.target_class, "desired class");
    opt(app, "gamma", cfg.gamma, "branching factor discount");
}

void selection_options(CLI::App* app, RunConfig& cfg) {
    opt(app, "top-c", cfg.top_c, "number of closest counterfactuals considered")->required();
    opt(app, "alt-count", cfg.alt_count, "size of the alternatives set");
    opt(app, "alt-separation", cfg.alt_separation, "minimum L2 distance between alternatives");
}

void common_options(CLI::App* app, RunConfig& cfg) {
    opt(app, "output", cfg.output, "output file (default: stdout)");
    opt(app, "seed", cfg.seed, "random seed");
}

cfverse::nav::HttpService* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual multiverse explorer"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* build = app.add_subcommand("build", "build the k-NN graph, optionally with reports for --factual");
    data_options(build, cfg);
    model_options(build, cfg);
    graph_options(build, cfg);
    opt(build, "factual", cfg.factual, "row index of the factual instance");
    common_options(build, cfg);

    auto* explain = app.add_subcommand("explain", "rank counterfactuals for one factual");
    data_options(explain, cfg);
    model_options(explain, cfg);
    graph_options(explain, cfg);
    selection_options(explain, cfg);
    opt(explain, "factual", cfg.factual, "row index of the factual instance")->required();
    common_options(explain, cfg);

    auto* pathmetrics = app.add_subcommand("pathmetrics", "compare paths sharing an origin");
    opt(pathmetrics, "paths", cfg.paths, "path JSON files (one path, an array, or {paths: [...]})")->required();
    opt(pathmetrics, "o", cfg.sections, "number of normalized sections (repeatable)");
    opt(pathmetrics, "epsilon", cfg.epsilon, "branching tolerance")->required();
    common_options(pathmetrics, cfg);

    auto* evaluate = app.add_subcommand("evaluate", "nearest counterfactual versus opportunity-based selection");
    data_options(evaluate, cfg);
    model_options(evaluate, cfg);
    graph_options(evaluate, cfg);
    selection_options(evaluate, cfg);
    opt(evaluate, "max-factuals", cfg.max_factuals, "evaluate a seeded sample of the factual instances");
    common_options(evaluate, cfg);

    auto* bsp = app.add_subcommand("bsp", "post-hoc paths through data points towards given counterfactuals");
    data_options(bsp, cfg);
    opt(bsp, "factual", cfg.factual, "row index of the factual instance")->required();
    opt(bsp, "counterfactuals", cfg.counterfactuals, "JSON array of counterfactual points (encoded space)")->required();
    opt(bsp, "tau", cfg.tau, "partition size threshold");
    common_options(bsp, cfg);

    std::string host = "127.0.0.1";
    int port = 8080;
    long idle_timeout = 3600;
    std::optional<std::filesystem::path> persist_dir;
    cfverse::nav::NavigatorOptions nav_options;
    auto* serve = app.add_subcommand("serve", "run the navigation service");
    opt(serve, "host", host, "bind address");
    opt(serve, "port", port, "TCP port");
    opt(serve, "idle-timeout", idle_timeout, "seconds before an idle session expires");
    opt(serve, "persist-dir", persist_dir, "directory for graphs and sessions");
    opt(serve, "top-c", nav_options.top_c, "closest counterfactuals considered for the optimum");
    opt(serve, "alt-count", nav_options.alt_count, "size of the alternatives set");
    opt(serve, "alt-separation", nav_options.alt_separation, "minimum L2 distance between alternatives");
    opt(serve, "gamma", nav_options.gamma, "branching factor discount");

    std::size_t synth_n = 400;
    double synth_noise = 0.1;
    auto* synth = app.add_subcommand("synth", "write a two-moons dataset as CSV");
    opt(synth, "n", synth_n, "number of rows");
    opt(synth, "noise", synth_noise, "Gaussian noise scale");
    common_options(synth, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cfverse::cli::kExitInvalid;
    }

    if (*synth) {
        try {
            const auto csv = cfverse::synthetic::to_csv(cfverse::synthetic::make_two_moons(synth_n, synth_noise, cfg.seed));
            if (cfg.output)
                cfverse::io::write_atomic(*cfg.output, csv);
            else
                std::cout << csv;
            return cfverse::cli::kExitOk;
        } catch (const std::exception& e) {
            std::cerr << "cfverse synth: " << e.what() << '\n';
            return cfverse::cli::kExitError;
        }
    }

    if (*serve) {
        if (idle_timeout <= 0) {
            std::cerr << "cfverse serve: --idle-timeout must be positive\n";
            return cfverse::cli::kExitInvalid;
        }
        nav_options.idle_timeout = std::chrono::seconds(idle_timeout);
        nav_options.persist_dir = persist_dir;
        try {
            cfverse::nav::Navigator navigator(nav_options);
            cfverse::nav::HttpService service(navigator);
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "cfverse serve: listening on " << host << ':' << port << '\n';
            const bool ok = service.listen(host, port);
            g_service = nullptr;
            if (!ok) {
                std::cerr << "cfverse serve: cannot listen on " << host << ':' << port << '\n';
                return cfverse::cli::kExitError;
            }
            return cfverse::cli::kExitOk;
        } catch (const std::exception& e) {
            std::cerr << "cfverse serve: " << e.what() << '\n';
            return cfverse::cli::kExitError;
        }
    }

    for (const auto* sub : app.get_subcommands()) return cfverse::cli::run(sub->get_name(), cfg);
    return cfverse::cli::kExitInvalid;
}
