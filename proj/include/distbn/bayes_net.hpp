#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distbn/rng.hpp"

namespace distbn {

// One fully observed sample: values[i] is node i's state, 0 <= values[i] < J_i.
struct Event {
    std::vector<int> values;
};

// Static description of one variable in the network.
struct NodeSpec {
    std::string name;
    int cardinality = 0;                    // J_i >= 1
    std::vector<int> parents;               // node indices, order significant
    std::size_t parent_config_count = 1;    // K_i = product of parent cardinalities
    // cpt[c][v] = P(X_i = v | parent config c); rows indexed by
    // parent_config_index, each row has `cardinality` entries summing to 1.
    std::vector<std::vector<double>> cpt;
};

// Discrete Bayesian network over n variables. Node order in the file defines
// node indices; parent lists define the edge set. The structure is validated
// on construction (acyclicity, CPT shape, row normalization).
class BayesNet {
public:
    // Builds from parts, computing parent config counts, edges and the
    // topological order. Throws ValidationError on malformed input.
    static BayesNet from_parts(std::string name, std::vector<NodeSpec> nodes);

    // Parses the JSON document format:
    //   { "name": str, "nodes": [ { "name", "cardinality", "parents", "cpt" } ] }
    // CPT rows ordered by parent_config_index. Rows whose sums deviate from 1
    // by at most 1e-9 are renormalized; larger deviations are rejected.
    static BayesNet from_json_text(const std::string& text);
    static BayesNet from_json_file(const std::string& path);

    // Serializes back to the same JSON document format (stable field order).
    std::string to_json_text() const;

    const std::string& name() const { return name_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    const NodeSpec& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<NodeSpec>& nodes() const { return nodes_; }

    // Directed edges (parent, child) implied by the parent lists.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    // Topological order; ties broken by ascending node index.
    const std::vector<int>& topological_order() const { return topo_; }

    int max_parent_set_size() const { return max_parents_; }

    // Number of free parameters: sum over nodes of K_i * (J_i - 1).
    std::uint64_t parameter_count() const;

    // Mixed-radix index of the parent assignment in `e` for `node`, matching
    // CPT row order: first listed parent is most significant. 0 if no parents.
    std::size_t parent_config_index(int node, const Event& e) const;

    // Ancestral sampling in topological order from the stored CPTs.
    Event forward_sample(SmallRng& rng) const;

    // Ground-truth joint probability of a full assignment (product of CPT
    // entries). Throws ValidationError if `e` is not a valid full assignment.
    double joint_prob_true(const Event& e) const;

    // Throws ValidationError unless `e` has one in-range value per node.
    void validate_event(const Event& e) const;

private:
    BayesNet() = default;

    std::string name_;
    std::vector<NodeSpec> nodes_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<int> topo_;
    int max_parents_ = 0;
};

// Maximum-likelihood estimate of a conditional probability from counts:
// joint/parent, with the convention that an unobserved parent configuration
// (both counts zero) yields the uniform value 1/cardinality. A joint count
// exceeding its parent count signals corrupted bookkeeping.
double mle_from_counts(std::uint64_t count_joint, std::uint64_t count_parent,
                       int cardinality);

} // namespace distbn
