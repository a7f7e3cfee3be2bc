// Command-line front end: one experiment per invocation, report to stdout
// or a file as JSON or CSV, optional JSON-lines trace of the first trial.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvba/harness.hpp"
#include "mvba/rng.hpp"

int main(int argc, char** argv) {
    CLI::App app{"randomized multi-valued broadcast under Byzantine faults, simulated"};
    app.set_config("--config", "", "ini file with the long option names; flags override it");

    int n = 4;
    int t = 1;
    std::uint64_t l = 1024;
    int d_bits = 0;
    int k = 0;
    double beta = 0.5;
    double cost_factor = 1.0;
    std::string adversary = "honest";
    std::vector<int> controlled;
    int group = 1;
    int target = -1;
    unsigned fuzz_permille = 300;
    int trials = 1;
    int jobs = 0;
    std::uint64_t seed = 1;
    std::string output = "-";
    std::string format = "json";
    std::string trace_path;
    std::string label;

    app.add_option("--n", n, "node count")->capture_default_str();
    app.add_option("--t", t, "fault budget (requires n > 3t)")->capture_default_str();
    app.add_option("--l", l, "message length in bits")->capture_default_str();
    app.add_option("--d-bits", d_bits, "block width D; 0 derives D and k from --beta")
        ->capture_default_str();
    app.add_option("--k", k, "digest key width; 0 derives D and k from --beta")
        ->capture_default_str();
    app.add_option("--beta", beta, "schedule exponent: D ~ l^(1-beta)")->capture_default_str();
    app.add_option("--c", cost_factor, "single-bit broadcast cost factor in B = round(c*n^2)")
        ->capture_default_str();
    app.add_option("--adversary", adversary, "strategy name; see --list-adversaries")
        ->capture_default_str();
    app.add_option("--controlled", controlled,
                   "controlled node ids (comma separated); empty uses the strategy default")
        ->delimiter(',');
    app.add_option("--group", group, "equivocating_source: recipients given the altered copy")
        ->capture_default_str();
    app.add_option("--target", target, "digest_liar fixed victim id; -1 rotates")
        ->capture_default_str();
    app.add_option("--fuzz-permille", fuzz_permille, "fuzz mutation rate per hook, in 1/1000")
        ->capture_default_str();
    app.add_option("--trials", trials, "independent sessions to run")->capture_default_str();
    app.add_option("--jobs", jobs, "parallel workers; 0 = hardware concurrency")
        ->capture_default_str();
    app.add_option("--seed", seed, "base seed; trial i runs under a seed derived by index")
        ->capture_default_str();
    app.add_option("--output", output, "report path, - for stdout")->capture_default_str();
    app.add_option("--format", format, "report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    app.add_option("--trace", trace_path, "write a JSON-lines trace of trial 0 to this path");
    app.add_option("--label", label, "row label in the report; defaults to the adversary name");
    bool list_adversaries = false;
    app.add_flag("--list-adversaries", list_adversaries, "print strategy names and exit");

    CLI11_PARSE(app, argc, argv);

    if (list_adversaries) {
        for (const std::string& name : mvba::adversary_names()) std::cout << name << '\n';
        return 0;
    }

    try {
        mvba::ExperimentSpec spec;
        spec.label = label;
        spec.config.n = n;
        spec.config.t = t;
        spec.config.message_bits = l;
        spec.config.broadcast_cost_factor = cost_factor;
        spec.config.seed = seed;
        if (d_bits == 0 && k == 0) {
            mvba::ScheduledParams sp = mvba::parameter_schedule(l, beta);
            spec.config.block_bits = sp.block_bits;
            spec.config.key_bits = sp.key_bits;
            spec.beta = beta;
        } else if (d_bits == 0 || k == 0) {
            throw mvba::ConfigError("set both --d-bits and --k, or neither");
        } else {
            spec.config.block_bits = d_bits;
            spec.config.key_bits = k;
            spec.beta = -1.0;
        }
        spec.adversary = adversary;
        for (int id : controlled) spec.adversary_params.controlled.insert(id);
        spec.adversary_params.equivocation_group = group;
        spec.adversary_params.target = target;
        spec.adversary_params.fuzz_permille = fuzz_permille;
        spec.trials = trials;

        if (!trace_path.empty()) {
            std::ofstream trace_file(trace_path);
            if (!trace_file) throw mvba::ConfigError("cannot open trace path: " + trace_path);
            mvba::TraceSink sink(trace_file);
            mvba::ProtocolConfig traced = spec.config;
            traced.seed = mvba::derive_seed(spec.config.seed, mvba::seed_label::kTrial);
            auto adv = mvba::make_adversary(spec.adversary, spec.adversary_params, traced.n,
                                            traced.t);
            mvba::run_session(traced, *adv, &sink);
        }

        mvba::ExperimentResult result = mvba::run_experiment(spec, jobs);
        mvba::AggregateReport report;
        report.rows.push_back(result.row);
        std::string payload =
            format == "csv" ? report.to_csv() : report.to_json().dump(2) + "\n";
        if (output == "-") {
            std::cout << payload;
        } else {
            std::ofstream out(output);
            if (!out) throw mvba::ConfigError("cannot open output path: " + output);
            out << payload;
        }
        return 0;
    } catch (const mvba::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
