#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distbn/bayes_net.hpp"

namespace distbn {

// How per-counter accuracy budgets are assigned across the network's
// conditional probability tables.
enum class Algorithm {
    Exact,       // exact counters, one message per increment
    Baseline,    // every counter at eps / (3n)
    Uniform,     // every counter at eps / (16 sqrt(n))
    NonUniform,  // cube-root weighting by table size, minimizes message volume
    NaiveBayes,  // two-layer star specialization with one shared root counter
};

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name); // case-insensitive

struct TrackerConfig {
    Algorithm algorithm = Algorithm::Exact;
    double epsilon = 0.1;            // multiplicative accuracy target, in (0, 1)
    double delta = 0.25;             // failure probability, in (0, 1)
    std::size_t site_count = 1;      // k
    int replication = 1;             // r: independent instances for the median trick (odd)
    std::uint64_t master_seed = 0;
    std::uint64_t max_counters = 10'000'000; // refuse larger allocations
};

// Per-node accuracy factors. nu[i] applies to node i's joint counters
// A_i(x_i, parent config); mu[i] to its parent-config counters A_i(parent
// config). The naive-Bayes variant has no separate parent counters: children
// share the root's value counters, whose factor is shared_root_factor.
struct BudgetAllocation {
    Algorithm algorithm = Algorithm::Exact;
    std::vector<double> nu;
    std::vector<double> mu;
    double alpha = 0.0;              // normalizer for nu under NonUniform
    double beta = 0.0;               // normalizer for mu under NonUniform
    double shared_root_factor = 0.0; // NaiveBayes only
};

// Computes the accuracy factors for `config.algorithm` on `net`. Validates the
// config (epsilon/delta ranges, odd replication, cardinalities >= 2) and the
// structural requirement of the naive-Bayes variant (two-layer star rooted at
// node 0). Exact gets factor 1 placeholders.
BudgetAllocation allocate_budget(const BayesNet& net, const TrackerConfig& config);

// Scale of the communication volume of the non-uniform allocation:
//   (sum (J_i K_i)^(2/3))^(3/2) + (sum K_i^(2/3))^(3/2).
struct CommBound {
    double gamma = 0.0;
};

CommBound comm_bound(const BayesNet& net);

// Replication needed to push the per-query failure probability from the
// single-instance 1/4 down to delta via the median trick: 1 when delta >= 1/4,
// otherwise the smallest odd integer >= 8 ln(1/delta).
int replication_for_delta(double delta);

} // namespace distbn
