#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "distbn/bayes_net.hpp"
#include "distbn/budget.hpp"
#include "distbn/errors.hpp"
#include "distbn/harness.hpp"

namespace {

int exit_code_for(const std::exception& e) {
    return dynamic_cast<const distbn::CapacityError*>(&e) ? 2 : 1;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    f.flush();
    if (!f.good()) throw std::runtime_error("failed writing output file: " + path);
}

int run_command(const std::string& network_path, const std::vector<std::string>& algorithm_names,
                distbn::ExperimentConfig cfg, const std::string& out_path) {
    const distbn::BayesNet net = distbn::BayesNet::from_json_file(network_path);
    cfg.algorithms.clear();
    for (const std::string& name : algorithm_names)
        cfg.algorithms.push_back(distbn::parse_algorithm(name));

    distbn::ExperimentReport report;
    try {
        distbn::run_experiment(net, cfg, report);
    } catch (const std::exception& e) {
        report.failure_message = e.what();
        try {
            distbn::emit_report(report, out_path);
            std::fprintf(stderr, "partial report written to %s\n", out_path.c_str());
        } catch (const std::exception& io) {
            std::fprintf(stderr, "could not write partial report: %s\n", io.what());
        }
        throw;
    }
    distbn::emit_report(report, out_path);
    std::printf("wrote %s (%zu rows)\n", out_path.c_str(), report.rows.size());
    return 0;
}

int gen_net_command(const std::string& variant, const std::string& base_path,
                    std::uint64_t seed, const std::string& out_path) {
    if (variant != "new-alarm")
        throw distbn::ValidationError("unknown generator variant '" + variant +
                                      "'; available: new-alarm");
    const distbn::BayesNet base = distbn::BayesNet::from_json_file(base_path);
    const distbn::BayesNet generated = distbn::make_new_alarm(base, seed);
    write_text_file(out_path, generated.to_json_text());
    std::printf("wrote %s: %s, %d nodes, %llu parameters\n", out_path.c_str(),
                generated.name().c_str(), generated.node_count(),
                static_cast<unsigned long long>(generated.parameter_count()));
    return 0;
}

int validate_command(const std::string& network_path) {
    const distbn::BayesNet net = distbn::BayesNet::from_json_file(network_path);
    std::printf("name: %s\n", net.name().c_str());
    std::printf("nodes: %d\n", net.node_count());
    std::printf("edges: %zu\n", net.edges().size());
    std::printf("parameters: %llu\n", static_cast<unsigned long long>(net.parameter_count()));
    std::printf("max parent set: %d\n", net.max_parent_set_size());
    std::printf("ok\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed tracking of Bayesian-network parameters over event streams"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Stream events into trackers and write a CSV report");
    std::string network_path, out_path;
    std::vector<std::string> algorithm_names = {"exact", "baseline", "uniform", "nonuniform"};
    distbn::ExperimentConfig cfg;
    run->add_option("--network", network_path, "Network JSON file")->required();
    run->add_option("--algorithms", algorithm_names,
                    "Algorithms to run: exact, baseline, uniform, nonuniform, naive")
        ->delimiter(',');
    run->add_option("--epsilon", cfg.epsilon, "Multiplicative accuracy target, in (0, 1)");
    run->add_option("--delta", cfg.delta, "Per-query failure probability, in (0, 1)");
    run->add_option("--sites", cfg.site_count, "Number of simulated sites");
    run->add_option("--events", cfg.events, "Stream length");
    run->add_option("--checkpoints", cfg.checkpoints,
                    "Stream positions to evaluate at (default: the final position)")
        ->delimiter(',');
    run->add_option("--queries", cfg.test_query_count, "Number of test events");
    run->add_option("--min-prob", cfg.min_true_prob,
                    "Minimum ground-truth probability of a test event");
    run->add_option("--classify-trials", cfg.classify_trials,
                    "Classification trials per checkpoint (0 disables)");
    run->add_option("--seeds", cfg.seed_runs, "Independent runs; the median row is reported");
    run->add_option("--seed", cfg.master_seed, "Master seed");
    run->add_option("--out", out_path, "Output CSV path")->required();

    auto* gen = app.add_subcommand("gen-net", "Generate a derived network file");
    std::string variant, base_path, gen_out;
    std::uint64_t gen_seed = 7;
    gen->add_option("variant", variant, "Generator to apply (new-alarm)")->required();
    gen->add_option("--base", base_path, "Base network JSON file")->required();
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--out", gen_out, "Output network JSON path")->required();

    auto* validate = app.add_subcommand("validate", "Load a network file and print its summary");
    std::string validate_path;
    validate->add_option("--network", validate_path, "Network JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run->parsed()) return run_command(network_path, algorithm_names, cfg, out_path);
        if (gen->parsed()) return gen_net_command(variant, base_path, gen_seed, gen_out);
        return validate_command(validate_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    }
}
