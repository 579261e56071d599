#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "distbn/bayes_net.hpp"
#include "distbn/budget.hpp"
#include "distbn/rng.hpp"

namespace distbn {

struct ExperimentConfig {
    std::vector<Algorithm> algorithms;
    double epsilon = 0.1;
    double delta = 0.25;
    std::size_t site_count = 30;
    std::uint64_t events = 500'000;
    std::vector<std::uint64_t> checkpoints; // strictly increasing, last <= events; {events} if empty
    std::size_t test_query_count = 1'000;
    double min_true_prob = 0.01;    // test-query filter, in [0, 1)
    std::size_t classify_trials = 0; // 0 disables the classification column
    int seed_runs = 1;               // independent runs with derived seeds; median row reported
    std::uint64_t master_seed = 42;
    std::uint64_t max_counters = 10'000'000;
};

// One CSV row. `seed_label` is the 0-based run index in decimal, or "median"
// for the per-(algorithm, checkpoint) median across runs.
struct ReportRow {
    std::string algorithm;
    std::uint64_t checkpoint = 0;
    std::string seed_label;
    double err_vs_truth = 0.0;   // mean |estimate/truth - 1| over test events
    double err_vs_mle = 0.0;     // mean |estimate/exact-MLE - 1| over test events
    double band_fraction = 0.0;  // fraction of test events with ratio in [e^-eps, e^eps]
    std::uint64_t update_messages = 0;
    std::uint64_t control_messages = 0;
    double classify_error = 0.0; // NaN (empty cell) when classification is disabled
};

// Per-query ratios backing the row aggregates, for distribution-level checks.
struct CheckpointDiagnostics {
    std::uint64_t checkpoint = 0;
    std::vector<double> ratio_vs_truth; // estimate / ground-truth probability, per test event
    std::vector<double> ratio_vs_mle;   // estimate / exact-MLE estimate, per test event
};

struct RunDiagnostics {
    std::string algorithm;
    int run_index = 0;
    std::vector<CheckpointDiagnostics> checkpoints;
};

struct ExperimentReport {
    std::vector<ReportRow> rows; // per-run rows (algorithm-major), then median rows
    std::vector<RunDiagnostics> diagnostics;
    std::string failure_message; // non-empty marks a partial report
};

// Deterministic stream: forward samples from the ground truth, each routed to
// a site drawn uniformly from [0, site_count).
class EventStream {
public:
    EventStream(const BayesNet& net, std::size_t site_count, std::uint64_t seed);
    std::pair<Event, std::size_t> next();

private:
    const BayesNet* net_;
    std::size_t site_count_;
    SmallRng rng_;
};

// Rejection-samples forward draws until `count` events each have ground-truth
// probability >= min_true_prob. Gives up with CapacityError after 10^7
// rejected draws.
std::vector<Event> generate_test_queries(const BayesNet& net, std::size_t count,
                                         double min_true_prob, std::uint64_t seed);

// One classification trial: predict `target` given every other node's value
// from `truth`, scored against truth.values[target].
struct ClassifyTrial {
    int target = 0;
    Event truth;
};

std::vector<ClassifyTrial> make_classify_trials(const BayesNet& net, std::size_t count,
                                                std::uint64_t seed);

// Runs every configured algorithm over `seed_runs` derived-seed streams,
// scoring the shared test queries at every checkpoint against ground truth
// and against a co-run exact tracker (whose messages stay out of the other
// algorithms' ledgers). Fills `out` as rows complete, so a caller catching a
// thrown module error still holds the partial report; the convenience
// overload returns the finished report.
void run_experiment(const BayesNet& net, const ExperimentConfig& config, ExperimentReport& out);
ExperimentReport run_experiment(const BayesNet& net, const ExperimentConfig& config);

// Writes the report as CSV: fixed header, floats at 9 significant digits,
// rows in stored order, and a trailing `#status,failed,<message>` line when
// the report is partial.
void emit_report(const ExperimentReport& report, const std::string& path);
std::string report_to_csv(const ExperimentReport& report);

// A single Dirichlet(1) draw over `cardinality` outcomes.
std::vector<double> dirichlet_row(SmallRng& rng, int cardinality);

// Heterogeneous variant of a base network: widens 6 distinct, seeded-random
// nodes to cardinality 20 and re-draws every CPT row from Dirichlet(1).
// Structure (names, parents) is unchanged; the result is named
// "new-" + base name.
BayesNet make_new_alarm(const BayesNet& base, std::uint64_t seed);

} // namespace distbn
