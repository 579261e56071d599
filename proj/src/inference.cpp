#include "distbn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "distbn/errors.hpp"

namespace distbn {

namespace {

// Matches the tracker: switch the per-assignment product to log space only on
// very wide networks, so narrow ones stay bit-identical with direct products.
constexpr int kLogSpaceNodeCount = 64;

void check_assignment(const BayesNet& net, int node, int value, const char* what) {
    const int n = net.node_count();
    if (node < 0 || node >= n)
        throw ValidationError(std::string(what) + " node index " + std::to_string(node) +
                              " outside [0, " + std::to_string(n) + ")");
    if (value < 0 || value >= net.node(node).cardinality)
        throw ValidationError(std::string(what) + " value " + std::to_string(value) +
                              " outside [0, " + std::to_string(net.node(node).cardinality) +
                              ") for node '" + net.node(node).name + "'");
}

// Product of cardinalities over `nodes`, saturating just past `cap`.
std::uint64_t domain_size(const BayesNet& net, const std::vector<int>& nodes,
                          std::uint64_t cap) {
    unsigned __int128 prod = 1;
    for (int nd : nodes) {
        prod *= static_cast<unsigned>(net.node(nd).cardinality);
        if (prod > cap) return cap + 1;
    }
    return static_cast<std::uint64_t>(prod);
}

// Sums joint() over all assignments of `free_nodes`, the rest of `base` held
// fixed. Enumeration order: ascending node index, last node fastest.
double sum_over(const BayesNet& net, const JointFn& joint, Event& base,
                const std::vector<int>& free_nodes) {
    for (int nd : free_nodes) base.values[static_cast<std::size_t>(nd)] = 0;
    auto advance = [&]() {
        for (std::size_t i = free_nodes.size(); i-- > 0;) {
            const std::size_t node = static_cast<std::size_t>(free_nodes[i]);
            if (++base.values[node] < net.node(free_nodes[i]).cardinality) return true;
            base.values[node] = 0;
        }
        return false;
    };
    double sum = joint(base);
    while (advance()) sum += joint(base);
    return sum;
}

std::vector<int> hidden_nodes(const BayesNet& net, const std::vector<bool>& assigned) {
    std::vector<int> hidden;
    for (int i = 0; i < net.node_count(); ++i)
        if (!assigned[static_cast<std::size_t>(i)]) hidden.push_back(i);
    return hidden;
}

} // namespace

ConditionalResult conditional_prob(const BayesNet& net, const JointFn& joint,
                                   const std::map<int, int>& targets,
                                   const std::map<int, int>& evidence, std::uint64_t cap) {
    if (targets.empty()) throw ValidationError("conditional query needs at least one target");
    const std::size_t n = static_cast<std::size_t>(net.node_count());
    std::vector<bool> assigned(n, false);
    Event base;
    base.values.assign(n, 0);
    for (const auto& [node, value] : targets) {
        check_assignment(net, node, value, "target");
        assigned[static_cast<std::size_t>(node)] = true;
        base.values[static_cast<std::size_t>(node)] = value;
    }
    for (const auto& [node, value] : evidence) {
        check_assignment(net, node, value, "evidence");
        if (assigned[static_cast<std::size_t>(node)])
            throw ValidationError("node '" + net.node(node).name +
                                  "' appears in both target and evidence");
        assigned[static_cast<std::size_t>(node)] = true;
        base.values[static_cast<std::size_t>(node)] = value;
    }

    const std::vector<int> hidden = hidden_nodes(net, assigned);
    std::vector<int> free_den = hidden;
    for (const auto& [node, value] : targets) free_den.push_back(node);
    std::sort(free_den.begin(), free_den.end());

    const std::uint64_t num_evals = domain_size(net, hidden, cap);
    const std::uint64_t den_evals = domain_size(net, free_den, cap);
    if (num_evals > cap || den_evals > cap)
        throw CapacityError("conditional query would enumerate more than " +
                            std::to_string(cap) + " assignments");

    ConditionalResult r;
    r.numerator = sum_over(net, joint, base, hidden);
    // Re-pin the targets: the denominator frees them alongside the hidden set.
    for (const auto& [node, value] : targets)
        base.values[static_cast<std::size_t>(node)] = value;
    r.denominator = sum_over(net, joint, base, free_den);
    r.raw = r.denominator > 0.0 ? r.numerator / r.denominator : 0.0;
    r.value = std::clamp(r.raw, 0.0, 1.0);
    return r;
}

ConditionalResult conditional_prob(const Tracker& tracker, const std::map<int, int>& targets,
                                   const std::map<int, int>& evidence, std::uint64_t cap) {
    return conditional_prob(tracker.net(), [&tracker](const Event& e) { return tracker.query(e); },
                            targets, evidence, cap);
}

ClassifyResult classify(const BayesNet& net, const JointFn& joint,
                        const std::vector<int>& targets, const std::map<int, int>& evidence,
                        std::uint64_t cap) {
    if (targets.empty()) throw ValidationError("classification needs at least one target node");
    const std::size_t n = static_cast<std::size_t>(net.node_count());
    std::vector<bool> assigned(n, false);
    Event base;
    base.values.assign(n, 0);
    for (int node : targets) {
        check_assignment(net, node, 0, "target");
        if (assigned[static_cast<std::size_t>(node)])
            throw ValidationError("duplicate target node '" + net.node(node).name + "'");
        assigned[static_cast<std::size_t>(node)] = true;
    }
    for (const auto& [node, value] : evidence) {
        check_assignment(net, node, value, "evidence");
        if (assigned[static_cast<std::size_t>(node)])
            throw ValidationError("node '" + net.node(node).name +
                                  "' appears in both target and evidence");
        assigned[static_cast<std::size_t>(node)] = true;
        base.values[static_cast<std::size_t>(node)] = value;
    }

    const std::vector<int> hidden = hidden_nodes(net, assigned);
    std::vector<int> everything = hidden;
    everything.insert(everything.end(), targets.begin(), targets.end());
    if (domain_size(net, everything, cap) > cap)
        throw CapacityError("classification would enumerate more than " + std::to_string(cap) +
                            " assignments");

    ClassifyResult best;
    std::vector<int> current(targets.size(), 0);
    for (int node : targets) base.values[static_cast<std::size_t>(node)] = 0;
    bool first = true;
    while (true) {
        const double score = sum_over(net, joint, base, hidden);
        if (first || score > best.score) {
            best.score = score;
            best.assignment = current;
            first = false;
        }
        // Next target assignment, last target fastest: the first hit at any
        // score is the lexicographically smallest, so strict > keeps it.
        std::size_t i = targets.size();
        for (; i-- > 0;) {
            const std::size_t node = static_cast<std::size_t>(targets[i]);
            if (++current[i] < net.node(targets[i]).cardinality) {
                base.values[node] = current[i];
                break;
            }
            current[i] = 0;
            base.values[node] = 0;
        }
        if (i == static_cast<std::size_t>(-1)) break;
    }
    return best;
}

ClassifyResult classify(const Tracker& tracker, const std::vector<int>& targets,
                        const std::map<int, int>& evidence, std::uint64_t cap) {
    return classify(tracker.net(), [&tracker](const Event& e) { return tracker.query(e); },
                    targets, evidence, cap);
}

std::size_t assignment_index(const BayesNet& net, const Event& e) {
    net.validate_event(e);
    std::size_t idx = 0;
    for (int i = 0; i < net.node_count(); ++i)
        idx = idx * static_cast<std::size_t>(net.node(i).cardinality) +
              static_cast<std::size_t>(e.values[static_cast<std::size_t>(i)]);
    return idx;
}

std::vector<double> brute_force_joint(const std::vector<Event>& events, const BayesNet& net,
                                      std::uint64_t cap) {
    const int n = net.node_count();
    std::vector<int> all_nodes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all_nodes[static_cast<std::size_t>(i)] = i;
    const std::uint64_t table_size = domain_size(net, all_nodes, cap);
    if (table_size > cap)
        throw CapacityError("full joint table would exceed " + std::to_string(cap) + " entries");

    // Count every (node, value, parent config) and (node, parent config).
    std::vector<std::size_t> joint_offset(static_cast<std::size_t>(n), 0);
    std::vector<std::size_t> parent_offset(static_cast<std::size_t>(n), 0);
    std::size_t joint_total = 0, parent_total = 0;
    for (int i = 0; i < n; ++i) {
        joint_offset[static_cast<std::size_t>(i)] = joint_total;
        parent_offset[static_cast<std::size_t>(i)] = parent_total;
        joint_total += static_cast<std::size_t>(net.node(i).cardinality) *
                       net.node(i).parent_config_count;
        parent_total += net.node(i).parent_config_count;
    }
    std::vector<std::uint64_t> joint_counts(joint_total, 0), parent_counts(parent_total, 0);
    for (const Event& e : events) {
        net.validate_event(e);
        for (int i = 0; i < n; ++i) {
            const std::size_t pci = net.parent_config_index(i, e);
            const std::size_t jc =
                joint_offset[static_cast<std::size_t>(i)] +
                pci * static_cast<std::size_t>(net.node(i).cardinality) +
                static_cast<std::size_t>(e.values[static_cast<std::size_t>(i)]);
            ++joint_counts[jc];
            ++parent_counts[parent_offset[static_cast<std::size_t>(i)] + pci];
        }
    }

    const bool logspace = n > kLogSpaceNodeCount;
    std::vector<double> table(static_cast<std::size_t>(table_size), 0.0);
    Event e;
    e.values.assign(static_cast<std::size_t>(n), 0);
    for (std::size_t idx = 0; idx < table.size(); ++idx) {
        double prod = 1.0, logsum = 0.0;
        bool zero = false;
        for (int i = 0; i < n && !zero; ++i) {
            const int j = net.node(i).cardinality;
            const std::size_t pci = net.parent_config_index(i, e);
            const double den =
                static_cast<double>(parent_counts[parent_offset[static_cast<std::size_t>(i)] + pci]);
            double factor;
            if (den <= 0.0) {
                factor = 1.0 / j;
            } else {
                const double num = static_cast<double>(
                    joint_counts[joint_offset[static_cast<std::size_t>(i)] +
                                 pci * static_cast<std::size_t>(j) +
                                 static_cast<std::size_t>(e.values[static_cast<std::size_t>(i)])]);
                if (num == 0.0) { zero = true; break; }
                factor = num / den;
            }
            if (logspace) logsum += std::log(factor); else prod *= factor;
        }
        table[idx] = zero ? 0.0 : (logspace ? std::exp(logsum) : prod);
        for (std::size_t i = static_cast<std::size_t>(n); i-- > 0;) {
            if (++e.values[i] < net.node(static_cast<int>(i)).cardinality) break;
            e.values[i] = 0;
        }
    }
    return table;
}

} // namespace distbn
