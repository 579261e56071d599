#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "distbn/bayes_net.hpp"
#include "distbn/tracker.hpp"

namespace distbn {

// Any full-assignment joint estimate: a tracker query, the ground truth, or
// the brute-force table below.
using JointFn = std::function<double(const Event&)>;

// Cap on joint evaluations when marginalizing hidden variables by enumeration.
inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

struct ConditionalResult {
    double value = 0.0;       // numerator / denominator, clamped to [0, 1]
    double raw = 0.0;         // the unclamped ratio (noise can push it past 1)
    double numerator = 0.0;   // sum over hidden assignments, targets + evidence fixed
    double denominator = 0.0; // sum over hidden + target assignments, evidence fixed
};

// P(targets = their values | evidence), marginalizing the remaining (hidden)
// variables by full enumeration. Targets and evidence map node index -> value,
// must be disjoint, and need not cover all nodes. Enumeration beyond `cap`
// joint evaluations raises CapacityError.
ConditionalResult conditional_prob(const BayesNet& net, const JointFn& joint,
                                   const std::map<int, int>& targets,
                                   const std::map<int, int>& evidence,
                                   std::uint64_t cap = kDefaultEnumerationCap);
ConditionalResult conditional_prob(const Tracker& tracker, const std::map<int, int>& targets,
                                   const std::map<int, int>& evidence,
                                   std::uint64_t cap = kDefaultEnumerationCap);

struct ClassifyResult {
    std::vector<int> assignment; // chosen value per target node, in target order
    double score = 0.0;          // winning unnormalized mass: sum over hidden of joint
};

// argmax over assignments y of the target nodes of the joint mass of
// (y, evidence), hidden variables marginalized. The conditional shares its
// denominator across y, so the joint mass decides the argmax. Ties go to the
// lexicographically smallest assignment (target order, then value order).
ClassifyResult classify(const BayesNet& net, const JointFn& joint,
                        const std::vector<int>& targets, const std::map<int, int>& evidence,
                        std::uint64_t cap = kDefaultEnumerationCap);
ClassifyResult classify(const Tracker& tracker, const std::vector<int>& targets,
                        const std::map<int, int>& evidence,
                        std::uint64_t cap = kDefaultEnumerationCap);

// Row-major index of a full assignment (node 0 most significant).
std::size_t assignment_index(const BayesNet& net, const Event& e);

// Full joint MLE table computed directly from an event list: count every
// (node, value, parent config) and (node, parent config), then tabulate the
// product of count ratios for every full assignment, with the uniform 1/J
// fallback on unobserved parent configs. Independent oracle for the trackers;
// arithmetic mirrors the exact tracker's query step for step. Table size
// beyond `cap` raises CapacityError.
std::vector<double> brute_force_joint(const std::vector<Event>& events, const BayesNet& net,
                                      std::uint64_t cap = kDefaultEnumerationCap);

} // namespace distbn
