#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pcsc/model.hpp"
#include "pcsc/prob.hpp"
#include "pcsc/region.hpp"

namespace pcsc::cli {

struct SimulationParams {
    std::vector<std::size_t> n_list{4, 6, 8};
    double rate = 0.75;
    double c = 0.5;          // typicality schedule constant
    double tau = 0.2;
    double d_target = 0.1;   // distortion used to pick the test channel
    std::size_t trials = 0;  // Monte-Carlo trials for n past the exact budget
    std::optional<prob::Channel> channel;  // explicit test channel override
};

struct VerifyParams {
    std::size_t convexity_trials = 20;
};

struct ExperimentConfig {
    model::SourceModel source;
    std::vector<std::string> case_labels;
    std::vector<model::EncodedSet> cases;
    std::vector<double> d_grid;
    region::SolverParams solver;
    SimulationParams sim;
    VerifyParams verify;
};

/// Parses and validates the JSON config document; throws UsageError /
/// ValidationError with findings on malformed input.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

/// FNV-1a over the channel dimensions and entry bytes; stable fingerprint
/// for deterministic-output comparisons.
std::uint64_t witness_hash(const prob::Channel& w);

/// value formatted with 9 significant digits.
std::string format_value(double v);

// Subcommand drivers; each writes its full output to `out` and returns the
// process exit code (0 ok, 4 solver non-convergence).
int run_curve(const ExperimentConfig& cfg, const std::string& kind, std::ostream& out,
              unsigned threads);
int run_table(const ExperimentConfig& cfg, std::ostream& out, unsigned threads);
int run_simulate(const ExperimentConfig& cfg, std::ostream& out, unsigned threads);
int run_verify(const ExperimentConfig& cfg, std::ostream& out, unsigned threads);

}  // namespace pcsc::cli
