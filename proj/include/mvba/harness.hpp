// Experiment runner.  A spec names a protocol configuration, an adversary,
// and a trial count; trials run in parallel with per-trial seeds derived
// from the spec seed by index, and aggregation walks outcomes in index
// order, so a report is a pure function of its spec regardless of the
// worker count.
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvba/adversary.hpp"
#include "mvba/protocol.hpp"
#include "mvba/simnet.hpp"

namespace mvba {

struct ExperimentSpec {
    std::string label;
    ProtocolConfig config;  // config.seed is the base seed for trial derivation
    std::string adversary = "honest";
    AdversaryParams adversary_params;
    int trials = 1;
    double beta = -1.0;  // informational; negative when D and k were set directly
};

struct TrialOutcome {
    std::uint64_t seed = 0;
    bool correct = true;  // fault-free agreement, and validity when the source is fault-free
    bool default_terminated = false;
    RunMetrics metrics;
    ComplexityReport complexity;
    std::vector<NodeId> isolated;
    std::vector<std::pair<NodeId, NodeId>> f_edges;

    nlohmann::json to_json() const;
};

struct ExperimentRow {
    std::string label;
    ProtocolConfig config;
    std::string adversary;
    std::set<NodeId> controlled;
    double beta = -1.0;
    int trials = 0;
    int correct_trials = 0;
    double p_correct = 0.0;
    std::string bound_exact;     // security bound as an exact rational
    double bound_value = 0.0;    // the same bound as a double
    RunMetrics totals;           // metrics summed over trials
    std::uint64_t c_measured_total = 0;
    std::uint64_t c_model_total = 0;
    std::uint64_t bound_model_per_trial = 0;
    bool model_within_bound = true;  // every trial's model cost under its bound
    double alpha_measured = 0.0;     // mean measured bits per message bit
    double alpha_model = 0.0;        // mean model bits per message bit
    std::uint64_t ext_steps_max = 0;

    nlohmann::json to_json() const;
};

struct ExperimentResult {
    ExperimentRow row;
    std::vector<TrialOutcome> trials;
};

// max_parallel <= 0 uses the hardware concurrency.
ExperimentResult run_experiment(const ExperimentSpec& spec, int max_parallel = 0);

struct AggregateReport {
    int schema_version = 1;
    std::vector<ExperimentRow> rows;

    nlohmann::json to_json() const;
    // Fixed column order; downstream tooling keys on it.
    static const char* csv_header();
    std::string to_csv() const;
};

}  // namespace mvba
