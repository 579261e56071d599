#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"

#include "distbn/counters.hpp"
#include "distbn/errors.hpp"
#include "distbn/rng.hpp"

using distbn::CounterConfig;
using distbn::ExactCounter;
using distbn::SampledCounter;
using distbn::SmallRng;
using distbn::ValidationError;

namespace {

SampledCounter make_counter(double eps, std::size_t k, std::uint64_t seed) {
    CounterConfig cfg;
    cfg.epsilon_prime = eps;
    cfg.site_count = k;
    cfg.seed = seed;
    return SampledCounter(cfg);
}

// Exact expectation of the fixed-probability estimator over every coin
// outcome of a schedule. Probabilities of dyadic p are exact in doubles, so
// the expectation is computed without rounding error.
double enumerated_expectation(double p, std::size_t k, const std::vector<std::size_t>& schedule) {
    const std::size_t len = schedule.size();
    REQUIRE(len <= 20);
    double expectation = 0.0;
    for (std::uint64_t mask = 0; mask < (1ull << len); ++mask) {
        double prob = 1.0;
        for (std::size_t s = 0; s < len; ++s) prob *= (mask >> s & 1) ? p : (1.0 - p);
        if (prob == 0.0) continue;
        SampledCounter c = SampledCounter::fixed_probability(p, k, 1);
        for (std::size_t s = 0; s < len; ++s)
            c.increment_with_coin(schedule[s], (mask >> s & 1) ? 0.0 : 1.0);
        expectation += prob * c.estimate();
    }
    return expectation;
}

double enumerated_variance(double p, std::size_t k, const std::vector<std::size_t>& schedule) {
    const std::size_t len = schedule.size();
    const double mean = static_cast<double>(len);
    double var = 0.0;
    for (std::uint64_t mask = 0; mask < (1ull << len); ++mask) {
        double prob = 1.0;
        for (std::size_t s = 0; s < len; ++s) prob *= (mask >> s & 1) ? p : (1.0 - p);
        if (prob == 0.0) continue;
        SampledCounter c = SampledCounter::fixed_probability(p, k, 1);
        for (std::size_t s = 0; s < len; ++s)
            c.increment_with_coin(schedule[s], (mask >> s & 1) ? 0.0 : 1.0);
        const double d = c.estimate() - mean;
        var += prob * d * d;
    }
    return var;
}

std::vector<std::size_t> round_robin(std::size_t len, std::size_t k) {
    std::vector<std::size_t> s(len);
    for (std::size_t i = 0; i < len; ++i) s[i] = i % k;
    return s;
}

} // namespace

TEST_CASE("counter configuration is validated") {
    CHECK_THROWS_AS(make_counter(0.0, 1, 1), ValidationError);
    CHECK_THROWS_AS(make_counter(1.5, 1, 1), ValidationError);
    CHECK_THROWS_AS(make_counter(0.1, 0, 1), ValidationError);
    CHECK_THROWS_AS(SampledCounter::fixed_probability(0.0, 1, 1), ValidationError);
    CHECK_THROWS_AS(SampledCounter::fixed_probability(1.0001, 1, 1), ValidationError);
    CHECK_NOTHROW(make_counter(1.0, 1, 1));
}

TEST_CASE("fixed-probability estimator is exactly unbiased on enumerable schedules") {
    for (const double p : {0.25, 0.5, 1.0}) {
        for (std::size_t len = 1; len <= 10; ++len) {
            const double e1 = enumerated_expectation(p, 1, round_robin(len, 1));
            CHECK_MESSAGE(e1 == static_cast<double>(len), "p=", p, " len=", len);
            const double e2 = enumerated_expectation(p, 2, round_robin(len, 2));
            CHECK_MESSAGE(e2 == static_cast<double>(len), "p=", p, " len=", len);
        }
        // Uneven split: one site takes two increments for the other's one.
        const std::vector<std::size_t> lopsided = {0, 0, 1, 0, 0, 1, 0, 0};
        CHECK(enumerated_expectation(p, 2, lopsided) == 8.0);
    }
}

TEST_CASE("fixed-probability variance stays under k*(1-p)/p^2") {
    for (const double p : {0.25, 0.5}) {
        const double bound_one = (1.0 - p) / (p * p);
        CHECK(enumerated_variance(p, 1, round_robin(8, 1)) <= 1.0 * bound_one + 1e-12);
        CHECK(enumerated_variance(p, 2, round_robin(8, 2)) <= 2.0 * bound_one + 1e-12);
    }
    CHECK(enumerated_variance(1.0, 1, round_robin(8, 1)) == 0.0);
}

TEST_CASE("while the reporting probability is clamped at 1 the estimate is exact") {
    // sqrt(k)/eps = 200, so p stays 1 through round 7 (thresholds to 256).
    SampledCounter c = make_counter(0.01, 4, 42);
    for (std::uint64_t i = 1; i <= 250; ++i) {
        c.increment(i % 4);
        CHECK(c.estimate() == static_cast<double>(i));
        CHECK(c.true_count() == i);
    }
    CHECK(c.report_probability() == 1.0);
    // Every increment reported once.
    CHECK(c.ledger().update_messages == 250);
    // One round transition per doubling of the estimate: rounds 1..7 by 250.
    CHECK(c.round() == 7);
    CHECK(c.ledger().control_messages == 2 * 4 * c.round());
}

TEST_CASE("a round transition re-anchors the baseline to the exact total") {
    SampledCounter c = make_counter(0.3, 2, 7);
    std::uint64_t last_round = 0;
    for (std::uint64_t i = 0; i < 5000; ++i) {
        c.increment(i % 2);
        if (c.round() != last_round) {
            // Just after a transition nothing has been reported in-round, so
            // the estimate is the re-anchored exact total.
            CHECK(c.estimate() == static_cast<double>(c.true_count()));
            last_round = c.round();
        }
    }
    CHECK(last_round >= 8);
    CHECK(c.ledger().control_messages == 2 * 2 * last_round);
}

TEST_CASE("full-protocol estimates are unbiased with bounded variance") {
    const double eps = 0.1;
    const std::size_t k = 4;
    const std::uint64_t total = 20000;
    const int trials = 300;
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < trials; ++t) {
        SampledCounter c = make_counter(eps, k, distbn::derive_seed(555, static_cast<std::uint64_t>(t)));
        SmallRng route(distbn::derive_seed(556, static_cast<std::uint64_t>(t)));
        for (std::uint64_t i = 0; i < total; ++i)
            c.increment(static_cast<std::size_t>(route.next_below(k)));
        const double est = c.estimate();
        sum += est;
        sumsq += est * est;
    }
    const double mean = sum / trials;
    const double var = sumsq / trials - mean * mean;
    const double sigma_bound = eps * static_cast<double>(total);
    // Mean within 4 standard errors of the true count (plus slack for the
    // slightly truncated estimate right at a round boundary).
    CHECK(std::abs(mean - static_cast<double>(total)) <
          4.0 * sigma_bound / std::sqrt(static_cast<double>(trials)) + 0.01 * sigma_bound);
    CHECK(var <= 1.2 * sigma_bound * sigma_bound);
    CHECK(var > 0.0);
}

TEST_CASE("update messages grow logarithmically in the count") {
    // sqrt(k)/eps = 20 messages per round expected; totals over doublings
    // should fit a straight line in log2(count).
    SampledCounter c = make_counter(0.05, 1, 11);
    std::vector<double> xs, ys;
    std::uint64_t count = 0;
    for (int exp2 = 8; exp2 <= 16; ++exp2) {
        const std::uint64_t target = 1ull << exp2;
        while (count < target) {
            c.increment(0);
            ++count;
        }
        xs.push_back(static_cast<double>(exp2));
        ys.push_back(static_cast<double>(c.ledger().update_messages));
    }
    // Far below one message per increment by the end.
    CHECK(ys.back() < static_cast<double>(count) / 50.0);

    const std::size_t m = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += xs[i]; sy += ys[i];
        sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i]; syy += ys[i] * ys[i];
    }
    const double n = static_cast<double>(m);
    const double cov = sxy - sx * sy / n;
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    const double r2 = cov * cov / (vx * vy);
    CHECK(r2 >= 0.9);
}

TEST_CASE("counters are deterministic in their seed") {
    SampledCounter a = make_counter(0.1, 3, 909), b = make_counter(0.1, 3, 909);
    for (std::uint64_t i = 0; i < 4000; ++i) {
        a.increment(i % 3);
        b.increment(i % 3);
        REQUIRE(a.estimate() == b.estimate());
    }
    CHECK(a.ledger().update_messages == b.ledger().update_messages);
    CHECK(a.ledger().control_messages == b.ledger().control_messages);

    // A different seed flips different coins somewhere along the stream.
    SampledCounter d = make_counter(0.1, 3, 910);
    bool diverged = false;
    SampledCounter a2 = make_counter(0.1, 3, 909);
    for (std::uint64_t i = 0; i < 4000 && !diverged; ++i) {
        a2.increment(i % 3);
        d.increment(i % 3);
        diverged = a2.estimate() != d.estimate();
    }
    CHECK(diverged);
}

TEST_CASE("exact counters count and charge one update message per increment") {
    ExactCounter c;
    for (int i = 0; i < 17; ++i) c.increment(static_cast<std::size_t>(i % 5));
    CHECK(c.true_count() == 17);
    CHECK(c.estimate() == 17.0);
    CHECK(c.ledger().update_messages == 17);
    CHECK(c.ledger().control_messages == 0);
}

TEST_CASE("product probe multiplies estimates and true counts") {
    std::vector<SampledCounter> cs;
    cs.push_back(SampledCounter::fixed_probability(0.5, 1, 1));
    cs.back().increment_with_coin(0, 0.9); // miss
    cs.back().increment_with_coin(0, 0.9); // miss
    cs.back().increment_with_coin(0, 0.1); // report v=3, tail 1 -> estimate 4
    cs.push_back(SampledCounter::fixed_probability(0.25, 1, 1));
    cs.back().increment_with_coin(0, 0.0); // report v=1, tail 3 -> estimate 4
    cs.back().increment_with_coin(0, 0.9); // miss; estimate stays 4
    const auto pe = distbn::product_probe(cs);
    CHECK(pe.estimate == 16.0);
    CHECK(pe.exact == 6.0);

    const auto empty = distbn::product_probe({});
    CHECK(empty.estimate == 1.0);
    CHECK(empty.exact == 1.0);
}

TEST_CASE("replaced in-round reports keep the estimate current") {
    // p = 1 edge: every increment reports, the tail is zero, the estimate is
    // always exact no matter the schedule.
    SampledCounter c = SampledCounter::fixed_probability(1.0, 2, 3);
    SmallRng route(17);
    for (std::uint64_t i = 1; i <= 500; ++i) {
        c.increment(static_cast<std::size_t>(route.next_below(2)));
        CHECK(c.estimate() == static_cast<double>(i));
    }
    CHECK(c.ledger().update_messages == 500);
}
