#pragma once

#include <cstdint>
#include <vector>

#include "distbn/bayes_net.hpp"
#include "distbn/budget.hpp"
#include "distbn/counters.hpp"

namespace distbn {

// Frozen copy of every counter estimate, so a batch of queries reads one
// coherent state while the stream keeps moving.
struct TrackerSnapshot {
    std::vector<std::vector<double>> joint;  // [replica][cell]
    std::vector<std::vector<double>> parent; // [replica][cell]
    std::vector<std::vector<double>> shared; // [replica][root value] (naive only)
    std::uint64_t events = 0;
};

// Coordinator-side model tracker. Maintains, per replica, one distributed
// counter for every (node, value, parent-config) cell and every (node,
// parent-config) cell; a query multiplies the per-node count ratios, giving
// the running maximum-likelihood joint estimate, and takes the median across
// replicas. The Exact algorithm uses exact counters (estimates == counts);
// the others use sampled counters with per-node accuracy factors from
// allocate_budget.
class Tracker {
public:
    // `net` must outlive the tracker.
    Tracker(const BayesNet& net, const TrackerConfig& config);

    // Routes one event arriving at `site` into every node's counters:
    // 2n logical increments (n joint + n parent), or n for the naive star.
    void update(const Event& e, std::size_t site);

    // Estimated joint probability of a full assignment: median across
    // replicas of the product of per-node ratios. An unobserved parent
    // configuration contributes the uniform factor 1/J_i.
    double query(const Event& e) const;

    TrackerSnapshot snapshot() const;
    double query(const TrackerSnapshot& snap, const Event& e) const;

    // Message totals summed over every counter in every replica.
    MessageLedger ledger() const;

    const BudgetAllocation& budget() const { return budget_; }
    const TrackerConfig& config() const { return config_; }
    const BayesNet& net() const { return *net_; }
    std::uint64_t events_seen() const { return events_; }

    // Counters per replica and in total (all replicas).
    std::uint64_t counters_per_replica() const;
    std::uint64_t counter_count() const;

    // Single-cell estimates, for tests and diagnostics.
    double joint_estimate(int replica, int node, int value, std::size_t parent_config) const;
    double parent_estimate(int replica, int node, std::size_t parent_config) const;

private:
    bool exact_mode() const { return config_.algorithm == Algorithm::Exact; }
    bool naive_mode() const { return config_.algorithm == Algorithm::NaiveBayes; }
    std::size_t joint_cell(int node, int value, std::size_t parent_config) const;
    std::size_t parent_cell(int node, std::size_t parent_config) const;
    // One replica's product of ratios; reads counter estimates live, or from
    // `snap` when non-null.
    double replica_product(int replica, const Event& e, const TrackerSnapshot* snap) const;
    double median_product(const Event& e, const TrackerSnapshot* snap) const;

    struct Replica {
        std::vector<ExactCounter> exact_joint, exact_parent;
        std::vector<SampledCounter> samp_joint, samp_parent, samp_shared;
    };

    const BayesNet* net_ = nullptr;
    TrackerConfig config_;
    BudgetAllocation budget_;
    std::vector<std::size_t> joint_offset_, parent_offset_;
    std::size_t joint_total_ = 0, parent_total_ = 0;
    std::vector<Replica> replicas_;
    std::uint64_t events_ = 0;
};

} // namespace distbn
