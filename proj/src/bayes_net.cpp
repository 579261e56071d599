#include "distbn/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "distbn/errors.hpp"

namespace distbn {

namespace {

constexpr double kRowSumTolerance = 1e-9;
constexpr std::uint64_t kMaxCptEntries = 10'000'000; // loader-level size guard

std::string line_context(const std::string& text, std::size_t byte_pos) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte_pos && i < text.size(); ++i) {
        if (text[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
    std::ostringstream os;
    os << "line " << line << ", column " << col;
    return os.str();
}

} // namespace

BayesNet BayesNet::from_parts(std::string name, std::vector<NodeSpec> nodes) {
    BayesNet net;
    net.name_ = std::move(name);
    net.nodes_ = std::move(nodes);
    const int n = net.node_count();
    if (n < 1) throw ValidationError("network must contain at least one node");

    std::set<std::string> seen_names;
    for (int i = 0; i < n; ++i) {
        NodeSpec& nd = net.nodes_[static_cast<std::size_t>(i)];
        if (nd.name.empty()) throw ValidationError("node " + std::to_string(i) + " has an empty name");
        if (!seen_names.insert(nd.name).second)
            throw ValidationError("duplicate node name '" + nd.name + "'");
        if (nd.cardinality < 1)
            throw ValidationError("node '" + nd.name + "' has cardinality " +
                                  std::to_string(nd.cardinality) + "; must be >= 1");
        std::set<int> seen_parents;
        for (int p : nd.parents) {
            if (p < 0 || p >= n)
                throw ValidationError("node '" + nd.name + "' references parent index " +
                                      std::to_string(p) + " outside [0, " + std::to_string(n) + ")");
            if (p == i)
                throw ValidationError("node '" + nd.name + "' lists itself as a parent");
            if (!seen_parents.insert(p).second)
                throw ValidationError("node '" + nd.name + "' lists parent index " +
                                      std::to_string(p) + " twice");
        }
    }

    // Parent config counts; forward references are fine because all
    // cardinalities are known by now.
    std::uint64_t total_entries = 0;
    for (int i = 0; i < n; ++i) {
        NodeSpec& nd = net.nodes_[static_cast<std::size_t>(i)];
        std::uint64_t k = 1;
        for (int p : nd.parents) {
            k *= static_cast<std::uint64_t>(net.nodes_[static_cast<std::size_t>(p)].cardinality);
            if (k > kMaxCptEntries)
                throw CapacityError("node '" + nd.name + "' has more than " +
                                    std::to_string(kMaxCptEntries) + " parent configurations");
        }
        nd.parent_config_count = static_cast<std::size_t>(k);
        total_entries += k * static_cast<std::uint64_t>(nd.cardinality);
        if (total_entries > kMaxCptEntries)
            throw CapacityError("network exceeds the supported table size (" +
                                std::to_string(kMaxCptEntries) + " CPT entries)");
        net.max_parents_ = std::max(net.max_parents_, static_cast<int>(nd.parents.size()));
        for (int p : nd.parents) net.edges_.emplace_back(p, i);
    }

    // CPT shape and row normalization.
    for (int i = 0; i < n; ++i) {
        NodeSpec& nd = net.nodes_[static_cast<std::size_t>(i)];
        if (nd.cpt.size() != nd.parent_config_count)
            throw ValidationError("node '" + nd.name + "' has " + std::to_string(nd.cpt.size()) +
                                  " cpt rows; expected " + std::to_string(nd.parent_config_count));
        for (std::size_t r = 0; r < nd.cpt.size(); ++r) {
            std::vector<double>& row = nd.cpt[r];
            if (row.size() != static_cast<std::size_t>(nd.cardinality))
                throw ValidationError("node '" + nd.name + "' cpt row " + std::to_string(r) +
                                      " has " + std::to_string(row.size()) + " entries; expected " +
                                      std::to_string(nd.cardinality));
            double sum = 0.0;
            for (double v : row) {
                if (!(v >= 0.0) || v > 1.0 + 1e-12)
                    throw ValidationError("node '" + nd.name + "' cpt row " + std::to_string(r) +
                                          " contains an entry outside [0, 1]");
                sum += v;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                throw ValidationError("node '" + nd.name + "' cpt row " + std::to_string(r) +
                                      " sums to " + std::to_string(sum) + "; expected 1 within 1e-9");
            for (double& v : row) v /= sum;
        }
    }

    // Kahn's algorithm with ascending-index tie break.
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const NodeSpec& nd = net.nodes_[static_cast<std::size_t>(i)];
        indegree[static_cast<std::size_t>(i)] = static_cast<int>(nd.parents.size());
        for (int p : nd.parents) children[static_cast<std::size_t>(p)].push_back(i);
    }
    std::set<int> ready;
    for (int i = 0; i < n; ++i)
        if (indegree[static_cast<std::size_t>(i)] == 0) ready.insert(i);
    while (!ready.empty()) {
        int i = *ready.begin();
        ready.erase(ready.begin());
        net.topo_.push_back(i);
        for (int c : children[static_cast<std::size_t>(i)])
            if (--indegree[static_cast<std::size_t>(c)] == 0) ready.insert(c);
    }
    if (static_cast<int>(net.topo_.size()) != n) {
        // Walk parent links inside the unresolved set until a node repeats;
        // that node is on a cycle and names the error.
        std::vector<bool> placed(static_cast<std::size_t>(n), false);
        for (int i : net.topo_) placed[static_cast<std::size_t>(i)] = true;
        int cur = -1;
        for (int i = 0; i < n; ++i)
            if (!placed[static_cast<std::size_t>(i)]) { cur = i; break; }
        std::vector<bool> visited(static_cast<std::size_t>(n), false);
        while (!visited[static_cast<std::size_t>(cur)]) {
            visited[static_cast<std::size_t>(cur)] = true;
            for (int p : net.nodes_[static_cast<std::size_t>(cur)].parents)
                if (!placed[static_cast<std::size_t>(p)]) { cur = p; break; }
        }
        throw ValidationError("dependency cycle involving node '" +
                              net.nodes_[static_cast<std::size_t>(cur)].name + "'");
    }
    return net;
}

BayesNet BayesNet::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("network file is not valid JSON (" +
                              line_context(text, e.byte > 0 ? e.byte - 1 : 0) + "): " + e.what());
    }
    try {
        if (!doc.is_object()) throw ValidationError("top-level JSON value must be an object");
        std::string name = doc.value("name", std::string("unnamed"));
        if (!doc.contains("nodes") || !doc["nodes"].is_array())
            throw ValidationError("missing \"nodes\" array");

        // First pass: name -> index for parent resolution.
        std::vector<std::string> names;
        for (const auto& jn : doc["nodes"]) {
            if (!jn.is_object() || !jn.contains("name") || !jn["name"].is_string())
                throw ValidationError("every node must be an object with a string \"name\"");
            names.push_back(jn["name"].get<std::string>());
        }

        std::vector<NodeSpec> nodes;
        std::size_t idx = 0;
        for (const auto& jn : doc["nodes"]) {
            NodeSpec nd;
            nd.name = names[idx++];
            if (!jn.contains("cardinality") || !jn["cardinality"].is_number_integer())
                throw ValidationError("node '" + nd.name + "' needs an integer \"cardinality\"");
            nd.cardinality = jn["cardinality"].get<int>();
            if (jn.contains("parents")) {
                if (!jn["parents"].is_array())
                    throw ValidationError("node '" + nd.name + "' \"parents\" must be an array of names");
                for (const auto& jp : jn["parents"]) {
                    if (!jp.is_string())
                        throw ValidationError("node '" + nd.name + "' has a non-string parent entry");
                    const std::string pname = jp.get<std::string>();
                    auto it = std::find(names.begin(), names.end(), pname);
                    if (it == names.end())
                        throw ValidationError("node '" + nd.name + "' references unknown parent '" +
                                              pname + "'");
                    nd.parents.push_back(static_cast<int>(it - names.begin()));
                }
            }
            if (!jn.contains("cpt") || !jn["cpt"].is_array())
                throw ValidationError("node '" + nd.name + "' needs a \"cpt\" array of rows");
            for (const auto& jrow : jn["cpt"]) {
                if (!jrow.is_array())
                    throw ValidationError("node '" + nd.name + "' cpt rows must be arrays");
                std::vector<double> row;
                for (const auto& jv : jrow) {
                    if (!jv.is_number())
                        throw ValidationError("node '" + nd.name + "' cpt contains a non-number");
                    row.push_back(jv.get<double>());
                }
                nd.cpt.push_back(std::move(row));
            }
            nodes.push_back(std::move(nd));
        }
        return from_parts(std::move(name), std::move(nodes));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed network document: ") + e.what());
    }
}

BayesNet BayesNet::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open network file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string BayesNet::to_json_text() const {
    nlohmann::ordered_json doc;
    doc["name"] = name_;
    doc["nodes"] = nlohmann::ordered_json::array();
    for (const NodeSpec& nd : nodes_) {
        nlohmann::ordered_json jn;
        jn["name"] = nd.name;
        jn["cardinality"] = nd.cardinality;
        auto jparents = nlohmann::ordered_json::array();
        for (int p : nd.parents) jparents.push_back(nodes_[static_cast<std::size_t>(p)].name);
        jn["parents"] = std::move(jparents);
        jn["cpt"] = nd.cpt;
        doc["nodes"].push_back(std::move(jn));
    }
    return doc.dump(2) + "\n";
}

std::uint64_t BayesNet::parameter_count() const {
    std::uint64_t total = 0;
    for (const NodeSpec& nd : nodes_)
        total += static_cast<std::uint64_t>(nd.parent_config_count) *
                 static_cast<std::uint64_t>(nd.cardinality - 1);
    return total;
}

std::size_t BayesNet::parent_config_index(int node, const Event& e) const {
    const NodeSpec& nd = nodes_[static_cast<std::size_t>(node)];
    std::size_t idx = 0;
    for (int p : nd.parents) {
        const NodeSpec& pn = nodes_[static_cast<std::size_t>(p)];
        idx = idx * static_cast<std::size_t>(pn.cardinality) +
              static_cast<std::size_t>(e.values[static_cast<std::size_t>(p)]);
    }
    return idx;
}

Event BayesNet::forward_sample(SmallRng& rng) const {
    Event e;
    e.values.assign(nodes_.size(), 0);
    for (int i : topo_) {
        const NodeSpec& nd = nodes_[static_cast<std::size_t>(i)];
        const std::vector<double>& row = nd.cpt[parent_config_index(i, e)];
        const double u = rng.next_unit();
        double acc = 0.0;
        int v = nd.cardinality - 1; // fallback for rounding at the top end
        for (int x = 0; x < nd.cardinality; ++x) {
            acc += row[static_cast<std::size_t>(x)];
            if (u < acc) { v = x; break; }
        }
        e.values[static_cast<std::size_t>(i)] = v;
    }
    return e;
}

double BayesNet::joint_prob_true(const Event& e) const {
    validate_event(e);
    double p = 1.0;
    for (int i = 0; i < node_count(); ++i) {
        const NodeSpec& nd = nodes_[static_cast<std::size_t>(i)];
        p *= nd.cpt[parent_config_index(i, e)]
                   [static_cast<std::size_t>(e.values[static_cast<std::size_t>(i)])];
    }
    return p;
}

void BayesNet::validate_event(const Event& e) const {
    if (e.values.size() != nodes_.size())
        throw ValidationError("event has " + std::to_string(e.values.size()) +
                              " values; network has " + std::to_string(nodes_.size()) + " nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (e.values[i] < 0 || e.values[i] >= nodes_[i].cardinality)
            throw ValidationError("event value " + std::to_string(e.values[i]) + " for node '" +
                                  nodes_[i].name + "' outside [0, " +
                                  std::to_string(nodes_[i].cardinality) + ")");
    }
}

double mle_from_counts(std::uint64_t count_joint, std::uint64_t count_parent, int cardinality) {
    if (count_joint > count_parent)
        throw ConsistencyError("joint count " + std::to_string(count_joint) +
                               " exceeds parent count " + std::to_string(count_parent));
    if (count_parent == 0) return 1.0 / static_cast<double>(cardinality);
    return static_cast<double>(count_joint) / static_cast<double>(count_parent);
}

} // namespace distbn
