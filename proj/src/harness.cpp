#include "distbn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <utility>

#include "distbn/errors.hpp"
#include "distbn/inference.hpp"
#include "distbn/tracker.hpp"

namespace distbn {

namespace {

constexpr std::uint64_t kStreamTag = 0x7374'7265'616d'0000ull;
constexpr std::uint64_t kTrackerTag = 0x7472'6163'6b65'0000ull;
constexpr std::uint64_t kQueryTag = 0x7175'6572'7900'0000ull;
constexpr std::uint64_t kClassifyTag = 0x636c'6173'7300'0000ull;
constexpr std::uint64_t kMaxRejections = 10'000'000;
constexpr int kWidenedNodeCount = 6;
constexpr int kWidenedCardinality = 20;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Upper-middle order statistic; the exact middle for odd counts.
double median_double(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

std::uint64_t median_u64(std::vector<std::uint64_t> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

} // namespace

EventStream::EventStream(const BayesNet& net, std::size_t site_count, std::uint64_t seed)
    : net_(&net), site_count_(site_count), rng_(seed) {
    if (site_count == 0) throw ValidationError("site count must be >= 1");
}

std::pair<Event, std::size_t> EventStream::next() {
    Event e = net_->forward_sample(rng_);
    const std::size_t site = static_cast<std::size_t>(rng_.next_below(site_count_));
    return {std::move(e), site};
}

std::vector<Event> generate_test_queries(const BayesNet& net, std::size_t count,
                                         double min_true_prob, std::uint64_t seed) {
    if (count < 1) throw ValidationError("test query count must be >= 1");
    if (!(min_true_prob >= 0.0 && min_true_prob < 1.0))
        throw ValidationError("min_true_prob must lie in [0, 1)");
    SmallRng rng(seed);
    std::vector<Event> out;
    out.reserve(count);
    std::uint64_t rejections = 0;
    while (out.size() < count) {
        Event e = net.forward_sample(rng);
        if (net.joint_prob_true(e) >= min_true_prob) {
            out.push_back(std::move(e));
        } else if (++rejections > kMaxRejections) {
            throw CapacityError("rejected " + std::to_string(rejections) +
                                " draws while filtering test queries; lower min_true_prob " +
                                "below " + format_double(min_true_prob));
        }
    }
    return out;
}

std::vector<ClassifyTrial> make_classify_trials(const BayesNet& net, std::size_t count,
                                                std::uint64_t seed) {
    SmallRng rng(seed);
    std::vector<ClassifyTrial> trials;
    trials.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        ClassifyTrial trial;
        trial.target = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(net.node_count())));
        trial.truth = net.forward_sample(rng);
        trials.push_back(std::move(trial));
    }
    return trials;
}

void run_experiment(const BayesNet& net, const ExperimentConfig& config, ExperimentReport& out) {
    out = ExperimentReport{};
    if (config.algorithms.empty()) throw ValidationError("no algorithms configured");
    if (!(config.epsilon > 0.0 && config.epsilon < 1.0))
        throw ValidationError("epsilon must lie in (0, 1)");
    if (!(config.delta > 0.0 && config.delta < 1.0))
        throw ValidationError("delta must lie in (0, 1)");
    if (config.seed_runs < 1) throw ValidationError("seed_runs must be >= 1");
    std::vector<std::uint64_t> ckpts =
        config.checkpoints.empty() ? std::vector<std::uint64_t>{config.events}
                                   : config.checkpoints;
    for (std::size_t i = 1; i < ckpts.size(); ++i)
        if (ckpts[i] <= ckpts[i - 1])
            throw ValidationError("checkpoints must be strictly increasing");
    if (ckpts.back() > config.events)
        throw ValidationError("last checkpoint " + std::to_string(ckpts.back()) +
                              " exceeds the stream length " + std::to_string(config.events));

    const bool classify_enabled = config.classify_trials > 0;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double band_lo = std::exp(-config.epsilon), band_hi = std::exp(config.epsilon);
    const std::size_t runs = static_cast<std::size_t>(config.seed_runs);
    const std::size_t ckpt_count = ckpts.size();

    // Test queries and classification trials derive from the master seed
    // alone, so every algorithm and every run is scored on the same items and
    // per-item medians across runs are meaningful.
    const std::vector<Event> queries = generate_test_queries(
        net, config.test_query_count, config.min_true_prob,
        derive_seed(config.master_seed, kQueryTag));
    std::vector<double> truth(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q)
        truth[q] = net.joint_prob_true(queries[q]);
    const std::vector<ClassifyTrial> trials =
        classify_enabled ? make_classify_trials(net, config.classify_trials,
                                                derive_seed(config.master_seed, kClassifyTag))
                         : std::vector<ClassifyTrial>{};

    const int replication = replication_for_delta(config.delta);

    struct PassResult {
        std::vector<std::vector<double>> est; // [checkpoint][query]
        std::vector<std::vector<int>> pred;   // [checkpoint][trial]
        std::vector<MessageLedger> ledgers;   // [checkpoint]
    };

    auto run_pass = [&](Algorithm alg, std::size_t run) {
        TrackerConfig tc;
        tc.algorithm = alg;
        tc.epsilon = config.epsilon;
        tc.delta = config.delta;
        tc.site_count = config.site_count;
        // Exact counters are deterministic, so extra replicas would only
        // multiply messages; the median trick applies to the sampled modes.
        tc.replication = alg == Algorithm::Exact ? 1 : replication;
        tc.master_seed = derive_seed(config.master_seed, kTrackerTag + run);
        tc.max_counters = config.max_counters;
        Tracker tracker(net, tc);
        EventStream stream(net, config.site_count,
                           derive_seed(config.master_seed, kStreamTag + run));
        PassResult res;
        std::size_t ci = 0;
        for (std::uint64_t t = 0;; ++t) {
            if (ci < ckpt_count && ckpts[ci] == t) {
                const TrackerSnapshot snap = tracker.snapshot();
                std::vector<double> est(queries.size());
                for (std::size_t q = 0; q < queries.size(); ++q)
                    est[q] = tracker.query(snap, queries[q]);
                std::vector<int> pred;
                if (classify_enabled) {
                    const auto joint = [&](const Event& e) { return tracker.query(snap, e); };
                    pred.reserve(trials.size());
                    for (const ClassifyTrial& trial : trials) {
                        std::map<int, int> evidence;
                        for (int i = 0; i < net.node_count(); ++i)
                            if (i != trial.target)
                                evidence.emplace(i, trial.truth.values[static_cast<std::size_t>(i)]);
                        pred.push_back(
                            classify(net, joint, {trial.target}, evidence).assignment[0]);
                    }
                }
                res.est.push_back(std::move(est));
                res.pred.push_back(std::move(pred));
                res.ledgers.push_back(tracker.ledger());
                ++ci;
            }
            if (t == config.events) break;
            const auto [e, site] = stream.next();
            tracker.update(e, site);
        }
        return res;
    };

    // The exact tracker is co-run once per seed to supply the MLE reference;
    // built lazily so a failure flushes as small a partial report as possible.
    std::vector<std::optional<PassResult>> exact_cache(runs);
    auto exact_for = [&](std::size_t run) -> const PassResult& {
        if (!exact_cache[run]) exact_cache[run] = run_pass(Algorithm::Exact, run);
        return *exact_cache[run];
    };

    for (Algorithm alg : config.algorithms) {
        for (std::size_t run = 0; run < runs; ++run) {
            const PassResult& exact = exact_for(run);
            PassResult own;
            if (alg != Algorithm::Exact) own = run_pass(alg, run);
            const PassResult& mine = alg == Algorithm::Exact ? exact : own;

            RunDiagnostics diag;
            diag.algorithm = algorithm_name(alg);
            diag.run_index = static_cast<int>(run);
            for (std::size_t ci = 0; ci < ckpt_count; ++ci) {
                ReportRow row;
                row.algorithm = algorithm_name(alg);
                row.checkpoint = ckpts[ci];
                row.seed_label = std::to_string(run);
                CheckpointDiagnostics cd;
                cd.checkpoint = ckpts[ci];
                double sum_truth = 0.0, sum_mle = 0.0;
                std::size_t inside = 0;
                for (std::size_t q = 0; q < queries.size(); ++q) {
                    const double est = mine.est[ci][q];
                    const double phat = exact.est[ci][q];
                    const double rt = est / truth[q];
                    const double rm =
                        phat > 0.0 ? est / phat
                                   : (est == 0.0 ? 1.0
                                                 : std::numeric_limits<double>::infinity());
                    sum_truth += std::abs(rt - 1.0);
                    sum_mle += std::abs(rm - 1.0);
                    if (rm >= band_lo && rm <= band_hi) ++inside;
                    cd.ratio_vs_truth.push_back(rt);
                    cd.ratio_vs_mle.push_back(rm);
                }
                const double qn = static_cast<double>(queries.size());
                row.err_vs_truth = sum_truth / qn;
                row.err_vs_mle = sum_mle / qn;
                row.band_fraction = static_cast<double>(inside) / qn;
                row.update_messages = mine.ledgers[ci].update_messages;
                row.control_messages = mine.ledgers[ci].control_messages;
                if (classify_enabled) {
                    std::size_t wrong = 0;
                    for (std::size_t t = 0; t < trials.size(); ++t)
                        if (mine.pred[ci][t] !=
                            trials[t].truth.values[static_cast<std::size_t>(trials[t].target)])
                            ++wrong;
                    row.classify_error =
                        static_cast<double>(wrong) / static_cast<double>(trials.size());
                } else {
                    row.classify_error = nan;
                }
                out.rows.push_back(std::move(row));
                diag.checkpoints.push_back(std::move(cd));
            }
            out.diagnostics.push_back(std::move(diag));
        }
    }

    // Median rows: per (algorithm, checkpoint), across runs. Data-row index
    // for (algorithm ai, run, checkpoint ci) is ((ai * runs) + run) * C + ci.
    for (std::size_t ai = 0; ai < config.algorithms.size(); ++ai) {
        for (std::size_t ci = 0; ci < ckpt_count; ++ci) {
            std::vector<double> e_truth, e_mle, band, cerr;
            std::vector<std::uint64_t> upd, ctl;
            for (std::size_t run = 0; run < runs; ++run) {
                const ReportRow& r = out.rows[(ai * runs + run) * ckpt_count + ci];
                e_truth.push_back(r.err_vs_truth);
                e_mle.push_back(r.err_vs_mle);
                band.push_back(r.band_fraction);
                upd.push_back(r.update_messages);
                ctl.push_back(r.control_messages);
                cerr.push_back(r.classify_error);
            }
            ReportRow m;
            m.algorithm = algorithm_name(config.algorithms[ai]);
            m.checkpoint = ckpts[ci];
            m.seed_label = "median";
            m.err_vs_truth = median_double(std::move(e_truth));
            m.err_vs_mle = median_double(std::move(e_mle));
            m.band_fraction = median_double(std::move(band));
            m.update_messages = median_u64(std::move(upd));
            m.control_messages = median_u64(std::move(ctl));
            m.classify_error = classify_enabled ? median_double(std::move(cerr)) : nan;
            out.rows.push_back(std::move(m));
        }
    }
}

ExperimentReport run_experiment(const BayesNet& net, const ExperimentConfig& config) {
    ExperimentReport report;
    run_experiment(net, config, report);
    return report;
}

std::string report_to_csv(const ExperimentReport& report) {
    std::string s = "algorithm,checkpoint,seed,err_vs_truth,err_vs_mle,band_fraction,"
                    "update_messages,control_messages,classify_error\n";
    for (const ReportRow& r : report.rows) {
        s += r.algorithm;
        s += ',';
        s += std::to_string(r.checkpoint);
        s += ',';
        s += r.seed_label;
        s += ',';
        s += format_double(r.err_vs_truth);
        s += ',';
        s += format_double(r.err_vs_mle);
        s += ',';
        s += format_double(r.band_fraction);
        s += ',';
        s += std::to_string(r.update_messages);
        s += ',';
        s += std::to_string(r.control_messages);
        s += ',';
        if (!std::isnan(r.classify_error)) s += format_double(r.classify_error);
        s += '\n';
    }
    if (!report.failure_message.empty()) {
        std::string msg = report.failure_message;
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        s += "#status,failed," + msg + "\n";
    }
    return s;
}

void emit_report(const ExperimentReport& report, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    const std::string csv = report_to_csv(report);
    f.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    f.flush();
    if (!f.good()) throw std::runtime_error("failed writing output file: " + path);
}

std::vector<double> dirichlet_row(SmallRng& rng, int cardinality) {
    if (cardinality < 1) throw ValidationError("cardinality must be >= 1");
    std::vector<double> row(static_cast<std::size_t>(cardinality));
    double sum = 0.0;
    for (double& x : row) {
        x = -std::log1p(-rng.next_unit()); // Exp(1); Dirichlet(1) after normalizing
        sum += x;
    }
    if (sum <= 0.0) {
        std::fill(row.begin(), row.end(), 1.0 / cardinality);
        return row;
    }
    for (double& x : row) x /= sum;
    return row;
}

BayesNet make_new_alarm(const BayesNet& base, std::uint64_t seed) {
    const int n = base.node_count();
    SmallRng rng(seed);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const int widen = std::min(kWidenedNodeCount, n);
    for (int i = 0; i < widen; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) +
            static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(n - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[j]);
    }
    std::vector<bool> widened(static_cast<std::size_t>(n), false);
    for (int i = 0; i < widen; ++i) widened[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

    std::vector<int> new_card(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        new_card[static_cast<std::size_t>(i)] =
            widened[static_cast<std::size_t>(i)] ? kWidenedCardinality : base.node(i).cardinality;

    std::vector<NodeSpec> specs;
    specs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        NodeSpec s;
        s.name = base.node(i).name;
        s.cardinality = new_card[static_cast<std::size_t>(i)];
        s.parents = base.node(i).parents;
        std::size_t rows = 1;
        for (int p : s.parents) rows *= static_cast<std::size_t>(new_card[static_cast<std::size_t>(p)]);
        s.cpt.reserve(rows);
        for (std::size_t r = 0; r < rows; ++r) s.cpt.push_back(dirichlet_row(rng, s.cardinality));
        specs.push_back(std::move(s));
    }
    return BayesNet::from_parts("new-" + base.name(), std::move(specs));
}

} // namespace distbn
