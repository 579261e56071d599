#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "distbn/rng.hpp"

namespace distbn {

// Message accounting, split by purpose: update messages carry counter values
// site -> coordinator; control messages are round-synchronization traffic
// (coordinator broadcast + exact replies). Reported separately everywhere.
struct MessageLedger {
    std::uint64_t update_messages = 0;
    std::uint64_t control_messages = 0;

    std::uint64_t total() const { return update_messages + control_messages; }
    MessageLedger& operator+=(const MessageLedger& o) {
        update_messages += o.update_messages;
        control_messages += o.control_messages;
        return *this;
    }
};

struct CounterConfig {
    double epsilon_prime = 0.1;  // per-counter relative accuracy factor, in (0, 1]
    std::size_t site_count = 1;  // k
    std::uint64_t seed = 0;      // per-counter random stream
};

// Distributed counter that every site feeds and the coordinator estimates.
//
// Protocol: rounds at total-count thresholds 2^j. Within round j every
// increment reports the site's current local count with probability
// p_j = min(1, sqrt(k) / (eps' * 2^j)); the coordinator estimates
//     B_j + sum over reporting sites of (v_i - snapshot_i + (1-p_j)/p_j),
// which is an unbiased estimate of the true total for any fixed p. When the
// running estimate crosses 2^(j+1) the coordinator broadcasts a new round
// (k control messages), sites reply with exact counts (k more), the baseline
// B is re-anchored to the exact total and reporting restarts.
//
// The estimate is unbiased with variance at most (eps' * C)^2 once C is past
// the exact-tracking prefix, at an update-message cost that grows with log C
// instead of C.
class SampledCounter {
public:
    explicit SampledCounter(const CounterConfig& cfg);

    // Estimator-only mode used by tests: fixed reporting probability, no round
    // transitions, baseline pinned at 0. Exactly unbiased for any schedule.
    static SampledCounter fixed_probability(double p, std::size_t site_count,
                                            std::uint64_t seed);

    // One stream element arrived at `site`; flips the reporting coin internally.
    void increment(std::size_t site);

    // Same, but the caller supplies the uniform draw in [0, 1) deciding the
    // report (coin < p reports). Lets tests enumerate all coin outcomes.
    void increment_with_coin(std::size_t site, double coin);

    // Coordinator-side estimate of the true total.
    double estimate() const {
        return static_cast<double>(baseline_) + static_cast<double>(reported_delta_) +
               static_cast<double>(reporting_sites_) * tail_;
    }

    std::uint64_t true_count() const { return total_; }
    const MessageLedger& ledger() const { return ledger_; }
    double report_probability() const { return p_; }
    std::uint64_t round() const { return round_; }
    std::size_t site_count() const { return local_.size(); }
    std::uint64_t local_count(std::size_t site) const { return local_[site]; }
    std::uint64_t last_report(std::size_t site) const { return last_[site]; }

private:
    SampledCounter() = default;
    void apply_report(std::size_t site);
    void advance_rounds();
    double round_probability(std::uint64_t j) const;

    double eps_ = 0.1;
    std::size_t k_ = 1;
    bool rounds_enabled_ = true;

    std::uint64_t total_ = 0;          // true total C (sum of local counts)
    std::vector<std::uint64_t> local_; // c_i per site
    std::vector<std::uint64_t> snap_;  // site counts at the last round boundary
    std::vector<std::uint64_t> last_;  // v_i: last reported count, == snap_ if none
    std::uint64_t baseline_ = 0;       // B_j: exact total at the round boundary
    std::uint64_t round_ = 0;
    double p_ = 1.0;
    double tail_ = 0.0;                // (1 - p_j) / p_j
    double next_threshold_ = 2.0;      // 2^(round_+1)
    std::uint64_t reported_delta_ = 0; // sum of (v_i - snap_i) over reporting sites
    std::uint64_t reporting_sites_ = 0;
    MessageLedger ledger_;
    SmallRng rng_{0};
};

// Exact counterpart: every increment is one update message, the estimate is
// the true count.
class ExactCounter {
public:
    void increment(std::size_t /*site*/) { ++count_; }
    double estimate() const { return static_cast<double>(count_); }
    std::uint64_t true_count() const { return count_; }
    MessageLedger ledger() const { return {count_, 0}; }

private:
    std::uint64_t count_ = 0;
};

// Product of estimates next to the product of true counts, for inspecting how
// per-counter noise composes multiplicatively.
struct ProductEstimate {
    double estimate = 1.0;
    double exact = 1.0;
};

ProductEstimate product_probe(const std::vector<SampledCounter>& counters);

} // namespace distbn
