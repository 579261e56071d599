#include "distbn/counters.hpp"

#include <cmath>

#include "distbn/errors.hpp"

namespace distbn {

SampledCounter::SampledCounter(const CounterConfig& cfg) : rng_(cfg.seed) {
    if (!(cfg.epsilon_prime > 0.0) || cfg.epsilon_prime > 1.0)
        throw ValidationError("counter accuracy factor must lie in (0, 1]");
    if (cfg.site_count < 1) throw ValidationError("counter needs at least one site");
    eps_ = cfg.epsilon_prime;
    k_ = cfg.site_count;
    local_.assign(k_, 0);
    snap_.assign(k_, 0);
    last_.assign(k_, 0);
    p_ = round_probability(0);
    tail_ = (1.0 - p_) / p_;
}

SampledCounter SampledCounter::fixed_probability(double p, std::size_t site_count,
                                                 std::uint64_t seed) {
    if (!(p > 0.0) || p > 1.0) throw ValidationError("reporting probability must lie in (0, 1]");
    if (site_count < 1) throw ValidationError("counter needs at least one site");
    SampledCounter c;
    c.eps_ = 1.0;
    c.k_ = site_count;
    c.rounds_enabled_ = false;
    c.local_.assign(site_count, 0);
    c.snap_.assign(site_count, 0);
    c.last_.assign(site_count, 0);
    c.p_ = p;
    c.tail_ = (1.0 - p) / p;
    c.rng_ = SmallRng(seed);
    return c;
}

double SampledCounter::round_probability(std::uint64_t j) const {
    const double raw = std::sqrt(static_cast<double>(k_)) / (eps_ * std::ldexp(1.0, static_cast<int>(j)));
    return raw < 1.0 ? raw : 1.0;
}

void SampledCounter::increment(std::size_t site) {
    ++local_[site];
    ++total_;
    if (p_ >= 1.0 || rng_.next_unit() < p_) {
        apply_report(site);
        if (rounds_enabled_) advance_rounds();
    }
}

void SampledCounter::increment_with_coin(std::size_t site, double coin) {
    ++local_[site];
    ++total_;
    if (p_ >= 1.0 || coin < p_) {
        apply_report(site);
        if (rounds_enabled_) advance_rounds();
    }
}

void SampledCounter::apply_report(std::size_t site) {
    // Replaces the site's previous in-round report (if any) with its current
    // count; sites that have not reported this round contribute snapshot only.
    if (last_[site] > snap_[site]) {
        reported_delta_ -= last_[site] - snap_[site];
    } else {
        ++reporting_sites_;
    }
    last_[site] = local_[site];
    reported_delta_ += local_[site] - snap_[site];
    ++ledger_.update_messages;
}

void SampledCounter::advance_rounds() {
    while (estimate() >= next_threshold_ && round_ < 62) {
        // Coordinator broadcast + one exact reply per site.
        ledger_.control_messages += 2 * static_cast<std::uint64_t>(k_);
        baseline_ = total_;
        snap_ = local_;
        last_ = local_;
        reported_delta_ = 0;
        reporting_sites_ = 0;
        ++round_;
        p_ = round_probability(round_);
        tail_ = (1.0 - p_) / p_;
        next_threshold_ = std::ldexp(1.0, static_cast<int>(round_) + 1);
    }
}

ProductEstimate product_probe(const std::vector<SampledCounter>& counters) {
    ProductEstimate pe;
    for (const SampledCounter& c : counters) {
        pe.estimate *= c.estimate();
        pe.exact *= static_cast<double>(c.true_count());
    }
    return pe;
}

} // namespace distbn
