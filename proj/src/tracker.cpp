#include "distbn/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "distbn/errors.hpp"

namespace distbn {

namespace {

constexpr std::uint64_t kReplicaTag = 0x7472'6163'6b65'7201ull;
constexpr std::uint64_t kJointTag = 1, kParentTag = 2, kSharedTag = 3;

// Above this width the per-replica product switches to log space to dodge
// under/overflow; below it the direct product keeps bit-exact parity with the
// brute-force oracle.
constexpr int kLogSpaceNodeCount = 64;

double median_of(std::vector<double>& v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

} // namespace

Tracker::Tracker(const BayesNet& net, const TrackerConfig& config)
    : net_(&net), config_(config), budget_(allocate_budget(net, config)) {
    const int n = net.node_count();
    joint_offset_.assign(static_cast<std::size_t>(n), 0);
    parent_offset_.assign(static_cast<std::size_t>(n), 0);

    const int first_joint_node = naive_mode() ? 1 : 0;
    for (int i = first_joint_node; i < n; ++i) {
        joint_offset_[static_cast<std::size_t>(i)] = joint_total_;
        joint_total_ += static_cast<std::size_t>(net.node(i).cardinality) *
                        net.node(i).parent_config_count;
    }
    if (!naive_mode()) {
        for (int i = 0; i < n; ++i) {
            parent_offset_[static_cast<std::size_t>(i)] = parent_total_;
            parent_total_ += net.node(i).parent_config_count;
        }
    }
    const std::size_t shared_total =
        naive_mode() ? static_cast<std::size_t>(net.node(0).cardinality) : 0;

    const std::uint64_t per_replica = static_cast<std::uint64_t>(joint_total_) +
                                      static_cast<std::uint64_t>(parent_total_) +
                                      static_cast<std::uint64_t>(shared_total);
    const std::uint64_t total = per_replica * static_cast<std::uint64_t>(config_.replication);
    if (total > config_.max_counters)
        throw CapacityError("tracker would allocate " + std::to_string(total) +
                            " counters; cap is " + std::to_string(config_.max_counters));

    replicas_.resize(static_cast<std::size_t>(config_.replication));
    for (int r = 0; r < config_.replication; ++r) {
        Replica& rep = replicas_[static_cast<std::size_t>(r)];
        const std::uint64_t replica_seed =
            derive_seed(config_.master_seed, kReplicaTag + static_cast<std::uint64_t>(r));
        if (exact_mode()) {
            rep.exact_joint.resize(joint_total_);
            rep.exact_parent.resize(parent_total_);
            continue;
        }
        rep.samp_joint.reserve(joint_total_);
        const std::uint64_t joint_base = derive_seed(replica_seed, kJointTag);
        for (int i = first_joint_node; i < n; ++i) {
            const NodeSpec& nd = net.node(i);
            const std::size_t cells =
                static_cast<std::size_t>(nd.cardinality) * nd.parent_config_count;
            for (std::size_t c = 0; c < cells; ++c) {
                CounterConfig cc;
                cc.epsilon_prime = budget_.nu[static_cast<std::size_t>(i)];
                cc.site_count = config_.site_count;
                cc.seed = derive_seed(joint_base, joint_offset_[static_cast<std::size_t>(i)] + c);
                rep.samp_joint.emplace_back(cc);
            }
        }
        if (!naive_mode()) {
            rep.samp_parent.reserve(parent_total_);
            const std::uint64_t parent_base = derive_seed(replica_seed, kParentTag);
            for (int i = 0; i < n; ++i) {
                for (std::size_t c = 0; c < net.node(i).parent_config_count; ++c) {
                    CounterConfig cc;
                    cc.epsilon_prime = budget_.mu[static_cast<std::size_t>(i)];
                    cc.site_count = config_.site_count;
                    cc.seed = derive_seed(parent_base, parent_offset_[static_cast<std::size_t>(i)] + c);
                    rep.samp_parent.emplace_back(cc);
                }
            }
        } else {
            rep.samp_shared.reserve(shared_total);
            const std::uint64_t shared_base = derive_seed(replica_seed, kSharedTag);
            for (std::size_t c = 0; c < shared_total; ++c) {
                CounterConfig cc;
                cc.epsilon_prime = budget_.shared_root_factor;
                cc.site_count = config_.site_count;
                cc.seed = derive_seed(shared_base, c);
                rep.samp_shared.emplace_back(cc);
            }
        }
    }
}

std::size_t Tracker::joint_cell(int node, int value, std::size_t parent_config) const {
    const NodeSpec& nd = net_->node(node);
    return joint_offset_[static_cast<std::size_t>(node)] +
           parent_config * static_cast<std::size_t>(nd.cardinality) +
           static_cast<std::size_t>(value);
}

std::size_t Tracker::parent_cell(int node, std::size_t parent_config) const {
    return parent_offset_[static_cast<std::size_t>(node)] + parent_config;
}

void Tracker::update(const Event& e, std::size_t site) {
    if (site >= config_.site_count)
        throw ValidationError("site index " + std::to_string(site) + " outside [0, " +
                              std::to_string(config_.site_count) + ")");
    net_->validate_event(e);
    const int n = net_->node_count();
    ++events_;
    for (Replica& rep : replicas_) {
        if (naive_mode()) {
            const std::size_t x0 = static_cast<std::size_t>(e.values[0]);
            rep.samp_shared[x0].increment(site);
            for (int i = 1; i < n; ++i) {
                const std::size_t pci = net_->parent_config_index(i, e);
                rep.samp_joint[joint_cell(i, e.values[static_cast<std::size_t>(i)], pci)]
                    .increment(site);
            }
            continue;
        }
        for (int i = 0; i < n; ++i) {
            const std::size_t pci = net_->parent_config_index(i, e);
            const std::size_t jc = joint_cell(i, e.values[static_cast<std::size_t>(i)], pci);
            const std::size_t pc = parent_cell(i, pci);
            if (exact_mode()) {
                rep.exact_joint[jc].increment(site);
                rep.exact_parent[pc].increment(site);
            } else {
                rep.samp_joint[jc].increment(site);
                rep.samp_parent[pc].increment(site);
            }
        }
    }
}

double Tracker::replica_product(int replica, const Event& e, const TrackerSnapshot* snap) const {
    const Replica& rep = replicas_[static_cast<std::size_t>(replica)];
    const int n = net_->node_count();
    const bool logspace = n > kLogSpaceNodeCount;
    double prod = 1.0, logsum = 0.0;

    auto joint_est = [&](std::size_t cell) {
        if (snap) return snap->joint[static_cast<std::size_t>(replica)][cell];
        return exact_mode() ? rep.exact_joint[cell].estimate() : rep.samp_joint[cell].estimate();
    };
    auto parent_est = [&](std::size_t cell) {
        if (snap) return snap->parent[static_cast<std::size_t>(replica)][cell];
        return exact_mode() ? rep.exact_parent[cell].estimate() : rep.samp_parent[cell].estimate();
    };
    auto shared_est = [&](std::size_t cell) {
        if (snap) return snap->shared[static_cast<std::size_t>(replica)][cell];
        return rep.samp_shared[cell].estimate();
    };
    auto fold = [&](double factor) {
        if (logspace) logsum += std::log(factor); else prod *= factor;
    };

    if (naive_mode()) {
        const int j0 = net_->node(0).cardinality;
        const std::size_t x0 = static_cast<std::size_t>(e.values[0]);
        double total = 0.0;
        for (int v = 0; v < j0; ++v) total += shared_est(static_cast<std::size_t>(v));
        const double root = shared_est(x0);
        fold(total > 0.0 ? root / total : 1.0 / j0);
        for (int i = 1; i < n; ++i) {
            const int j = net_->node(i).cardinality;
            if (root <= 0.0) { fold(1.0 / j); continue; }
            const std::size_t pci = net_->parent_config_index(i, e);
            const double num = joint_est(joint_cell(i, e.values[static_cast<std::size_t>(i)], pci));
            if (num == 0.0) return 0.0;
            fold(num / root);
        }
        return logspace ? std::exp(logsum) : prod;
    }

    for (int i = 0; i < n; ++i) {
        const int j = net_->node(i).cardinality;
        const std::size_t pci = net_->parent_config_index(i, e);
        const double den = parent_est(parent_cell(i, pci));
        if (den <= 0.0) { fold(1.0 / j); continue; }
        const double num = joint_est(joint_cell(i, e.values[static_cast<std::size_t>(i)], pci));
        if (exact_mode() && num > den)
            throw ConsistencyError("joint count exceeds parent count at node '" +
                                   net_->node(i).name + "'");
        if (num == 0.0) return 0.0;
        fold(num / den);
    }
    return logspace ? std::exp(logsum) : prod;
}

double Tracker::median_product(const Event& e, const TrackerSnapshot* snap) const {
    net_->validate_event(e);
    if (config_.replication == 1) return replica_product(0, e, snap);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(config_.replication));
    for (int r = 0; r < config_.replication; ++r) vals.push_back(replica_product(r, e, snap));
    return median_of(vals);
}

double Tracker::query(const Event& e) const { return median_product(e, nullptr); }

TrackerSnapshot Tracker::snapshot() const {
    TrackerSnapshot s;
    s.events = events_;
    const std::size_t rcount = replicas_.size();
    s.joint.resize(rcount);
    s.parent.resize(rcount);
    s.shared.resize(rcount);
    for (std::size_t r = 0; r < rcount; ++r) {
        const Replica& rep = replicas_[r];
        s.joint[r].resize(joint_total_);
        for (std::size_t c = 0; c < joint_total_; ++c)
            s.joint[r][c] = exact_mode() ? rep.exact_joint[c].estimate()
                                         : rep.samp_joint[c].estimate();
        s.parent[r].resize(parent_total_);
        for (std::size_t c = 0; c < parent_total_; ++c)
            s.parent[r][c] = exact_mode() ? rep.exact_parent[c].estimate()
                                          : rep.samp_parent[c].estimate();
        s.shared[r].resize(rep.samp_shared.size());
        for (std::size_t c = 0; c < rep.samp_shared.size(); ++c)
            s.shared[r][c] = rep.samp_shared[c].estimate();
    }
    return s;
}

double Tracker::query(const TrackerSnapshot& snap, const Event& e) const {
    return median_product(e, &snap);
}

MessageLedger Tracker::ledger() const {
    MessageLedger total;
    for (const Replica& rep : replicas_) {
        for (const ExactCounter& c : rep.exact_joint) total += c.ledger();
        for (const ExactCounter& c : rep.exact_parent) total += c.ledger();
        for (const SampledCounter& c : rep.samp_joint) total += c.ledger();
        for (const SampledCounter& c : rep.samp_parent) total += c.ledger();
        for (const SampledCounter& c : rep.samp_shared) total += c.ledger();
    }
    return total;
}

std::uint64_t Tracker::counters_per_replica() const {
    std::uint64_t shared = naive_mode() ? static_cast<std::uint64_t>(net_->node(0).cardinality) : 0;
    return static_cast<std::uint64_t>(joint_total_) + static_cast<std::uint64_t>(parent_total_) +
           shared;
}

std::uint64_t Tracker::counter_count() const {
    return counters_per_replica() * static_cast<std::uint64_t>(config_.replication);
}

double Tracker::joint_estimate(int replica, int node, int value, std::size_t parent_config) const {
    const Replica& rep = replicas_[static_cast<std::size_t>(replica)];
    const std::size_t c = joint_cell(node, value, parent_config);
    return exact_mode() ? rep.exact_joint[c].estimate() : rep.samp_joint[c].estimate();
}

double Tracker::parent_estimate(int replica, int node, std::size_t parent_config) const {
    const Replica& rep = replicas_[static_cast<std::size_t>(replica)];
    const std::size_t c = parent_cell(node, parent_config);
    return exact_mode() ? rep.exact_parent[c].estimate() : rep.samp_parent[c].estimate();
}

} // namespace distbn
