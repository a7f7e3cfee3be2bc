#include "mvba/harness.hpp"

#include <atomic>
#include <future>
#include <iomanip>
#include <sstream>
#include <thread>

#include "mvba/gf.hpp"
#include "mvba/rng.hpp"

namespace mvba {
namespace {

void accumulate(RunMetrics& into, const RunMetrics& m) {
    into.bits_data += m.bits_data;
    into.bits_hash += m.bits_hash;
    into.bits_notification_measured += m.bits_notification_measured;
    into.bits_extended_measured += m.bits_extended_measured;
    into.bits_notification_model += m.bits_notification_model;
    into.bits_extended_model += m.bits_extended_model;
    into.generations_run += m.generations_run;
    into.blocks_completed += m.blocks_completed;
    into.extended_steps += m.extended_steps;
    into.deception_events += m.deception_events;
    into.disagreement_events += m.disagreement_events;
    into.misbehaving_generations += m.misbehaving_generations;
    into.padded_bits += m.padded_bits;
}

TrialOutcome run_trial(const ExperimentSpec& spec, int index) {
    ProtocolConfig cfg = spec.config;
    cfg.seed =
        derive_seed(spec.config.seed, seed_label::kTrial + static_cast<std::uint64_t>(index));
    auto adversary = make_adversary(spec.adversary, spec.adversary_params, cfg.n, cfg.t);
    SessionResult res = run_session(cfg, *adversary);

    TrialOutcome out;
    out.seed = cfg.seed;
    out.correct = res.all_fault_free_agree(adversary->controlled());
    out.default_terminated = res.default_terminated;
    out.metrics = res.metrics;
    out.complexity =
        complexity_report(res.metrics, cfg.n, cfg.t, cfg.message_bits, cfg.block_bits,
                          cfg.key_bits, cfg.broadcast_cost_factor);
    out.isolated.assign(res.final_graph.isolated_set().begin(),
                        res.final_graph.isolated_set().end());
    out.f_edges.assign(res.final_graph.f_edges().begin(), res.final_graph.f_edges().end());
    return out;
}

nlohmann::json config_to_json(const ProtocolConfig& cfg) {
    return {{"n", cfg.n},
            {"t", cfg.t},
            {"message_bits", cfg.message_bits},
            {"block_bits", cfg.block_bits},
            {"key_bits", cfg.key_bits},
            {"broadcast_cost_factor", cfg.broadcast_cost_factor},
            {"seed", cfg.seed}};
}

}  // namespace

nlohmann::json TrialOutcome::to_json() const {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : f_edges) edges.push_back(nlohmann::json::array({a, b}));
    return {{"seed", seed},
            {"correct", correct},
            {"default_terminated", default_terminated},
            {"metrics", metrics.to_json()},
            {"complexity", complexity.to_json()},
            {"isolated", isolated},
            {"f_edges", edges}};
}

nlohmann::json ExperimentRow::to_json() const {
    return {{"label", label},
            {"config", config_to_json(config)},
            {"adversary", adversary},
            {"controlled", std::vector<NodeId>(controlled.begin(), controlled.end())},
            {"beta", beta},
            {"trials", trials},
            {"correct_trials", correct_trials},
            {"p_correct", p_correct},
            {"bound", {{"exact", bound_exact}, {"value", bound_value}}},
            {"totals", totals.to_json()},
            {"c_measured_total", c_measured_total},
            {"c_model_total", c_model_total},
            {"bound_model_per_trial", bound_model_per_trial},
            {"model_within_bound", model_within_bound},
            {"alpha_measured", alpha_measured},
            {"alpha_model", alpha_model},
            {"ext_steps_max", ext_steps_max}};
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int max_parallel) {
    if (spec.trials < 1) throw ConfigError("experiment needs at least one trial");
    spec.config.validate();
    // Validates the strategy name and controlled set before any work starts.
    auto probe = make_adversary(spec.adversary, spec.adversary_params, spec.config.n,
                                spec.config.t);

    unsigned workers =
        max_parallel > 0 ? static_cast<unsigned>(max_parallel) : std::thread::hardware_concurrency();
    if (workers == 0) workers = 4;

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(spec.trials));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= spec.trials) return;
            outcomes[static_cast<std::size_t>(i)] = run_trial(spec, i);
        }
    };
    std::vector<std::future<void>> futures;
    for (unsigned w = 1; w < workers && static_cast<int>(w) < spec.trials; ++w) {
        futures.push_back(std::async(std::launch::async, worker));
    }
    worker();
    for (auto& f : futures) f.get();

    ExperimentResult result;
    result.trials = std::move(outcomes);
    ExperimentRow& row = result.row;
    row.label = spec.label.empty() ? spec.adversary : spec.label;
    row.config = spec.config;
    row.adversary = spec.adversary;
    row.controlled = probe->controlled();
    row.beta = spec.beta;
    row.trials = spec.trials;

    Rational bound = security_bound(spec.config.block_bits, spec.config.key_bits, spec.config.t);
    {
        std::ostringstream os;
        os << bound;
        row.bound_exact = os.str();
    }
    row.bound_value = bound.convert_to<double>();

    for (const TrialOutcome& trial : result.trials) {
        if (trial.correct) ++row.correct_trials;
        accumulate(row.totals, trial.metrics);
        row.c_measured_total += trial.complexity.c_measured;
        row.c_model_total += trial.complexity.c_model;
        row.bound_model_per_trial = trial.complexity.bound_model;
        if (trial.complexity.c_model > trial.complexity.bound_model) {
            row.model_within_bound = false;
        }
        row.ext_steps_max = std::max(row.ext_steps_max, trial.metrics.extended_steps);
    }
    row.p_correct = static_cast<double>(row.correct_trials) / static_cast<double>(row.trials);
    const double denom =
        static_cast<double>(spec.config.message_bits) * static_cast<double>(row.trials);
    row.alpha_measured = static_cast<double>(row.c_measured_total) / denom;
    row.alpha_model = static_cast<double>(row.c_model_total) / denom;
    return result;
}

nlohmann::json AggregateReport::to_json() const {
    nlohmann::json out{{"schema_version", schema_version}};
    out["rows"] = nlohmann::json::array();
    for (const ExperimentRow& row : rows) out["rows"].push_back(row.to_json());
    return out;
}

const char* AggregateReport::csv_header() {
    return "l,D,k,n,t,beta,adversary,trials,p_correct,bound,alpha_measured,alpha_model,"
           "bits_data,bits_hash,bits_notif_model,bits_ext_model,ext_steps_max";
}

std::string AggregateReport::to_csv() const {
    std::ostringstream os;
    os << csv_header() << '\n';
    os << std::setprecision(10);
    for (const ExperimentRow& row : rows) {
        os << row.config.message_bits << ',' << row.config.block_bits << ','
           << row.config.key_bits << ',' << row.config.n << ',' << row.config.t << ',';
        if (row.beta >= 0.0) os << row.beta;
        os << ',' << row.adversary << ',' << row.trials << ',' << row.p_correct << ','
           << row.bound_value << ',' << row.alpha_measured << ',' << row.alpha_model << ','
           << row.totals.bits_data << ',' << row.totals.bits_hash << ','
           << row.totals.bits_notification_model << ',' << row.totals.bits_extended_model << ','
           << row.ext_steps_max << '\n';
    }
    return os.str();
}

}  // namespace mvba
