#include "distbn/budget.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "distbn/errors.hpp"

namespace distbn {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Exact: return "exact";
        case Algorithm::Baseline: return "baseline";
        case Algorithm::Uniform: return "uniform";
        case Algorithm::NonUniform: return "nonuniform";
        case Algorithm::NaiveBayes: return "naive";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    std::string s;
    for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "exact") return Algorithm::Exact;
    if (s == "baseline") return Algorithm::Baseline;
    if (s == "uniform") return Algorithm::Uniform;
    if (s == "nonuniform") return Algorithm::NonUniform;
    if (s == "naive" || s == "naivebayes") return Algorithm::NaiveBayes;
    throw ValidationError("unknown algorithm '" + name +
                          "'; expected exact, baseline, uniform, nonuniform or naive");
}

namespace {

void validate_config(const BayesNet& net, const TrackerConfig& cfg) {
    if (!(cfg.epsilon > 0.0) || cfg.epsilon >= 1.0)
        throw ValidationError("epsilon must lie in (0, 1)");
    if (!(cfg.delta > 0.0) || cfg.delta >= 1.0)
        throw ValidationError("delta must lie in (0, 1)");
    if (cfg.site_count < 1) throw ValidationError("site count must be >= 1");
    if (cfg.replication < 1 || cfg.replication % 2 == 0)
        throw ValidationError("replication must be a positive odd integer");
    for (const NodeSpec& nd : net.nodes())
        if (nd.cardinality < 2)
            throw ValidationError("node '" + nd.name +
                                  "' has cardinality 1; trackers need every cardinality >= 2");
}

void require_star(const BayesNet& net) {
    if (net.node_count() < 2)
        throw ValidationError("naive-Bayes tracking needs at least a root and one child");
    if (!net.node(0).parents.empty())
        throw ValidationError("naive-Bayes tracking needs node 0 as the parentless root; '" +
                              net.node(0).name + "' has parents");
    for (int i = 1; i < net.node_count(); ++i) {
        const NodeSpec& nd = net.node(i);
        if (nd.parents.size() != 1 || nd.parents[0] != 0)
            throw ValidationError("naive-Bayes tracking needs every non-root node's sole parent "
                                  "to be node 0; '" + nd.name + "' violates that");
    }
}

} // namespace

BudgetAllocation allocate_budget(const BayesNet& net, const TrackerConfig& config) {
    validate_config(net, config);
    const int n = net.node_count();
    const double eps = config.epsilon;

    BudgetAllocation out;
    out.algorithm = config.algorithm;
    out.nu.assign(static_cast<std::size_t>(n), 1.0);
    out.mu.assign(static_cast<std::size_t>(n), 1.0);

    switch (config.algorithm) {
        case Algorithm::Exact:
            return out; // placeholders; exact counters take no accuracy factor

        case Algorithm::Baseline: {
            const double f = eps / (3.0 * n);
            std::fill(out.nu.begin(), out.nu.end(), f);
            std::fill(out.mu.begin(), out.mu.end(), f);
            return out;
        }

        case Algorithm::Uniform: {
            const double f = eps / (16.0 * std::sqrt(static_cast<double>(n)));
            std::fill(out.nu.begin(), out.nu.end(), f);
            std::fill(out.mu.begin(), out.mu.end(), f);
            return out;
        }

        case Algorithm::NonUniform: {
            // Minimizes sum J_i K_i / nu_i subject to sum nu_i^2 = eps^2/256
            // (and the analogous parent-side program): nu_i grows with the
            // cube root of the table size so big tables get loose factors.
            std::vector<double> jk(static_cast<std::size_t>(n)), kk(static_cast<std::size_t>(n));
            bool jk_homogeneous = true, kk_homogeneous = true;
            for (int i = 0; i < n; ++i) {
                const NodeSpec& nd = net.node(i);
                jk[static_cast<std::size_t>(i)] =
                    static_cast<double>(nd.cardinality) * static_cast<double>(nd.parent_config_count);
                kk[static_cast<std::size_t>(i)] = static_cast<double>(nd.parent_config_count);
                if (jk[static_cast<std::size_t>(i)] != jk[0]) jk_homogeneous = false;
                if (kk[static_cast<std::size_t>(i)] != kk[0]) kk_homogeneous = false;
            }
            double alpha_sq = 0.0, beta_sq = 0.0;
            for (int i = 0; i < n; ++i) {
                alpha_sq += std::cbrt(jk[static_cast<std::size_t>(i)] * jk[static_cast<std::size_t>(i)]);
                beta_sq += std::cbrt(kk[static_cast<std::size_t>(i)] * kk[static_cast<std::size_t>(i)]);
            }
            out.alpha = std::sqrt(alpha_sq);
            out.beta = std::sqrt(beta_sq);
            // A homogeneous family collapses to the uniform closed form; use it
            // directly so the two allocations coincide bit for bit.
            const double uniform_f = eps / (16.0 * std::sqrt(static_cast<double>(n)));
            for (int i = 0; i < n; ++i) {
                out.nu[static_cast<std::size_t>(i)] =
                    jk_homogeneous ? uniform_f
                                   : std::cbrt(jk[static_cast<std::size_t>(i)]) * eps / (16.0 * out.alpha);
                out.mu[static_cast<std::size_t>(i)] =
                    kk_homogeneous ? uniform_f
                                   : std::cbrt(kk[static_cast<std::size_t>(i)]) * eps / (16.0 * out.beta);
            }
            return out;
        }

        case Algorithm::NaiveBayes: {
            require_star(net);
            // Children's joint counters weighted by the cube root of their
            // cardinality; the shared root value counters use the tight
            // eps/(3n) factor because every child's ratio divides by them.
            double w = 0.0;
            for (int i = 1; i < n; ++i)
                w += std::cbrt(static_cast<double>(net.node(i).cardinality) *
                               static_cast<double>(net.node(i).cardinality));
            const double norm = std::sqrt(w);
            out.shared_root_factor = eps / (3.0 * n);
            out.nu[0] = out.shared_root_factor;
            for (int i = 1; i < n; ++i)
                out.nu[static_cast<std::size_t>(i)] =
                    (eps / 16.0) * std::cbrt(static_cast<double>(net.node(i).cardinality)) / norm;
            out.mu.clear(); // no separate parent counters in the star scheme
            return out;
        }
    }
    throw ValidationError("unhandled algorithm");
}

CommBound comm_bound(const BayesNet& net) {
    double joint = 0.0, parent = 0.0;
    for (const NodeSpec& nd : net.nodes()) {
        const double jk = static_cast<double>(nd.cardinality) *
                          static_cast<double>(nd.parent_config_count);
        const double kk = static_cast<double>(nd.parent_config_count);
        joint += std::cbrt(jk * jk);
        parent += std::cbrt(kk * kk);
    }
    CommBound b;
    b.gamma = std::pow(joint, 1.5) + std::pow(parent, 1.5);
    return b;
}

int replication_for_delta(double delta) {
    if (!(delta > 0.0) || delta >= 1.0) throw ValidationError("delta must lie in (0, 1)");
    if (delta >= 0.25) return 1;
    const double need = 8.0 * std::log(1.0 / delta);
    int r = static_cast<int>(std::ceil(need));
    if (r % 2 == 0) ++r;
    return r;
}

} // namespace distbn
