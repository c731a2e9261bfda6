#pragma once
// Per-Gaussian conjugate posterior over labels. Binary is the K=2 case of the
// Dirichlet pseudo-count matrix: column 1 holds a_i (foreground), column 0
// holds b_i. Counts are doubles; pseudo-counts from large images can exceed
// 1e6 where float digamma would lose the entropy tolerance.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "b3seg/errors.hpp"
#include "b3seg/scene.hpp"

namespace b3seg {

// Non-negative evidence for one view: N x K matrix plus its row sums.
// tau is stored as the row sum computed here, so e1 + e0 == tau holds exactly.
struct EvidenceMap {
    std::size_t n = 0;
    std::size_t k = 2;
    std::vector<double> counts;  // row-major N x K
    std::vector<double> tau;     // length N

    static EvidenceMap zeros(std::size_t n, std::size_t k = 2);
    static EvidenceMap binary(std::vector<double> e1, std::vector<double> e0);

    double operator()(std::size_t i, std::size_t c) const { return counts[i * k + c]; }
    double& at(std::size_t i, std::size_t c) { return counts[i * k + c]; }
    double e1(std::size_t i) const { return counts[i * k + 1]; }
    double e0(std::size_t i) const { return counts[i * k]; }

    // Recompute tau rows after direct writes through at().
    void refresh_tau();
};

class PosteriorState {
public:
    // Binary Beta state: column 1 = a, column 0 = b.
    PosteriorState(std::size_t n, double a_init, double b_init);
    // Dirichlet state with a common initial pseudo-count per class.
    static PosteriorState dirichlet(std::size_t n, std::size_t k, double alpha_init);

    std::size_t size() const { return n_; }
    std::size_t num_classes() const { return k_; }
    double a_init() const { return a_init_; }
    double b_init() const { return b_init_; }

    double count(std::size_t i, std::size_t c) const { return counts_[i * k_ + c]; }
    double a(std::size_t i) const { return count(i, 1); }
    double b(std::size_t i) const { return count(i, 0); }
    double kappa(std::size_t i) const;
    double mean(std::size_t i, std::size_t c) const { return count(i, c) / kappa(i); }
    // Binary posterior mean m_i = a_i / (a_i + b_i).
    double mean_fg(std::size_t i) const { return mean(i, 1); }

    std::span<const double> row(std::size_t i) const {
        return {counts_.data() + i * k_, k_};
    }

    // Conjugate update: counts += evidence, column-wise. Throws on negative
    // evidence or shape mismatch.
    void apply(const EvidenceMap& evidence);

    // Direct count injection for tests/harness tooling (still non-negative).
    void add(std::size_t i, std::size_t c, double amount);

    std::vector<double>& raw_counts() { return counts_; }
    const std::vector<double>& raw_counts() const { return counts_; }

private:
    std::size_t n_ = 0;
    std::size_t k_ = 2;
    double a_init_ = 1.0;
    double b_init_ = 1.0;
    std::vector<double> counts_;
};

// Differential entropy of Beta(a,b) in nats:
//   H = ln B(a,b) - (a-1) psi(a) - (b-1) psi(b) + (a+b-2) psi(a+b)
double beta_entropy(double a, double b);

// Differential entropy of Dirichlet(alpha) in nats; K=2 equals beta_entropy.
double dirichlet_entropy(std::span<const double> alpha);

// Sum of per-Gaussian posterior entropies.
double total_entropy(const PosteriorState& state);

// Mean Bernoulli predictive entropy over Gaussians (from posterior means).
double mean_predictive_entropy(const PosteriorState& state);

// MAP labels: binary y_i = 1 iff a_i > b_i (tie -> background); multi-class
// argmax over columns with the lowest class id winning ties.
std::vector<uint32_t> map_labels(const PosteriorState& state);

struct ObjectStats {
    Vec3 center;
    double radius = 0.0;
};

// Mean-weighted center and spread of the foreground set {i : a_i > b_i}.
// Radius is clamped below at r_min so point-like detections stay usable.
// Throws NoForegroundError when the set is empty.
ObjectStats object_stats(const Scene& scene, const PosteriorState& state,
                         double r_min = 1e-3);

// Entropy-based lower bound on per-Gaussian Bayes accuracy:
//   A(q) >= 1 - H_pred(q) / (2 ln 2)
double bayes_accuracy_bound(double q);

// Checkpoint CSV: header "index,a,b" for K=2, "index,c0,..,cK-1" otherwise.
void save_checkpoint(const PosteriorState& state, const std::string& path);
PosteriorState load_checkpoint(const std::string& path);

}  // namespace b3seg
