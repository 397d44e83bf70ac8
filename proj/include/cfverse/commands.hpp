#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfverse/dataio.hpp"
#include "cfverse/model.hpp"

namespace cfverse::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitError = 1,           // I/O or unexpected failure
    kExitInvalid = 2,         // bad arguments or input documents
    kExitNoCandidates = 3,    // nothing satisfies the counterfactual threshold
    kExitNothingToExplain = 4 // the factual already satisfies it
};

struct RunConfig {
    std::filesystem::path data;
    std::optional<std::filesystem::path> schema;
    std::string label_column = "label";
    std::optional<std::filesystem::path> predictions;  // otherwise a k-NN classifier
    std::size_t k_model = 5;

    std::size_t k = 20;
    double lambda = 1.0;
    std::optional<double> threshold;
    int target_class = 1;
    double gamma = 1.0;
    std::vector<std::size_t> top_c;
    std::size_t alt_count = 5;
    double alt_separation = 1.0;
    std::optional<std::size_t> factual;
    std::optional<std::size_t> max_factuals;

    std::vector<std::filesystem::path> paths;
    std::vector<std::size_t> sections{10};
    std::optional<double> epsilon;

    std::optional<std::filesystem::path> counterfactuals;
    double tau = 0.1;

    std::optional<std::filesystem::path> output;
    std::uint64_t seed = 0;
};

// Loaded and encoded inputs shared by the graph subcommands.
struct Inputs {
    Dataset data;
    std::unique_ptr<Classifier> classifier;
};

Inputs load_inputs(const RunConfig& cfg);

// Each command validates its parameters before computing and returns the
// document it would write; run_* variants also handle the output file.
std::string cmd_build(const RunConfig& cfg);
std::string cmd_explain(const RunConfig& cfg);
std::string cmd_pathmetrics(const RunConfig& cfg);
std::string cmd_evaluate(const RunConfig& cfg);
std::string cmd_bsp(const RunConfig& cfg);

// Writes to cfg.output (atomically) or stdout; maps errors to exit codes and
// prints them on stderr.
int run(const std::string& subcommand, const RunConfig& cfg);

}  // namespace cfverse::cli
