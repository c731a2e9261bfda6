#include "b3seg/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "b3seg/special.hpp"

namespace b3seg {

EvidenceMap EvidenceMap::zeros(std::size_t n, std::size_t k) {
    EvidenceMap e;
    e.n = n;
    e.k = k;
    e.counts.assign(n * k, 0.0);
    e.tau.assign(n, 0.0);
    return e;
}

EvidenceMap EvidenceMap::binary(std::vector<double> e1, std::vector<double> e0) {
    if (e1.size() != e0.size())
        throw ValidationError("evidence vectors must have equal length");
    EvidenceMap e;
    e.n = e1.size();
    e.k = 2;
    e.counts.resize(e.n * 2);
    e.tau.resize(e.n);
    for (std::size_t i = 0; i < e.n; ++i) {
        e.counts[i * 2] = e0[i];
        e.counts[i * 2 + 1] = e1[i];
        e.tau[i] = e0[i] + e1[i];
    }
    return e;
}

void EvidenceMap::refresh_tau() {
    tau.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) tau[i] += counts[i * k + c];
}

PosteriorState::PosteriorState(std::size_t n, double a_init, double b_init)
    : n_(n), k_(2), a_init_(a_init), b_init_(b_init) {
    if (!(a_init > 0.0) || !(b_init > 0.0))
        throw ValidationError("posterior init pseudo-counts must be > 0");
    counts_.resize(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        counts_[i * 2] = b_init;
        counts_[i * 2 + 1] = a_init;
    }
}

PosteriorState PosteriorState::dirichlet(std::size_t n, std::size_t k, double alpha_init) {
    if (k < 2) throw ValidationError("posterior needs at least 2 classes");
    if (!(alpha_init > 0.0))
        throw ValidationError("posterior init pseudo-counts must be > 0");
    PosteriorState state(n, alpha_init, alpha_init);
    state.k_ = k;
    state.counts_.assign(n * k, alpha_init);
    return state;
}

double PosteriorState::kappa(std::size_t i) const {
    double s = 0.0;
    for (std::size_t c = 0; c < k_; ++c) s += counts_[i * k_ + c];
    return s;
}

void PosteriorState::apply(const EvidenceMap& evidence) {
    if (evidence.n != n_ || evidence.k != k_)
        throw ValidationError("evidence shape does not match posterior state");
    for (double v : evidence.counts)
        if (!(v >= 0.0)) throw ValidationError("evidence must be non-negative");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += evidence.counts[i];
}

void PosteriorState::add(std::size_t i, std::size_t c, double amount) {
    if (!(amount >= 0.0)) throw ValidationError("evidence must be non-negative");
    counts_[i * k_ + c] += amount;
}

double beta_entropy(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ValidationError("beta_entropy: parameters must be > 0");
    return log_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) +
           (a + b - 2.0) * digamma(a + b);
}

double dirichlet_entropy(std::span<const double> alpha) {
    const std::size_t k = alpha.size();
    if (k < 2) throw ValidationError("dirichlet_entropy: need at least 2 classes");
    double alpha0 = 0.0;
    double log_b = 0.0;
    for (double v : alpha) {
        if (!(v > 0.0)) throw ValidationError("dirichlet_entropy: parameters must be > 0");
        alpha0 += v;
        log_b += std::lgamma(v);
    }
    log_b -= std::lgamma(alpha0);
    double h = log_b + (alpha0 - double(k)) * digamma(alpha0);
    for (double v : alpha) h -= (v - 1.0) * digamma(v);
    return h;
}

double total_entropy(const PosteriorState& state) {
    double sum = 0.0;
    if (state.num_classes() == 2) {
        for (std::size_t i = 0; i < state.size(); ++i)
            sum += beta_entropy(state.a(i), state.b(i));
    } else {
        for (std::size_t i = 0; i < state.size(); ++i) sum += dirichlet_entropy(state.row(i));
    }
    return sum;
}

double mean_predictive_entropy(const PosteriorState& state) {
    if (state.size() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double kap = state.kappa(i);
        for (std::size_t c = 0; c < state.num_classes(); ++c) {
            const double m = state.count(i, c) / kap;
            if (m > 0.0) sum -= m * std::log(m);
        }
    }
    return sum / double(state.size());
}

std::vector<uint32_t> map_labels(const PosteriorState& state) {
    std::vector<uint32_t> labels(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < state.num_classes(); ++c)
            if (state.count(i, c) > state.count(i, best)) best = c;
        labels[i] = uint32_t(best);
    }
    return labels;
}

ObjectStats object_stats(const Scene& scene, const PosteriorState& state, double r_min) {
    if (scene.size() != state.size())
        throw ValidationError("scene and posterior state sizes differ");
    Vec3 weighted_sum;
    double weight = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (state.a(i) > state.b(i)) {
            const double m = state.mean_fg(i);
            weighted_sum += scene.gaussians[i].mean_v() * m;
            weight += m;
        }
    }
    if (weight <= 0.0) throw NoForegroundError("no gaussian has a > b");
    ObjectStats stats;
    stats.center = weighted_sum / weight;
    double dev = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i)
        if (state.a(i) > state.b(i))
            dev += state.mean_fg(i) * (scene.gaussians[i].mean_v() - stats.center).norm();
    stats.radius = std::max(dev / weight, r_min);
    return stats;
}

double bayes_accuracy_bound(double q) {
    if (!(q >= 0.0) || !(q <= 1.0))
        throw ValidationError("bayes_accuracy_bound: q must be in [0,1]");
    return 1.0 - bernoulli_entropy(q) / (2.0 * std::log(2.0));
}

void save_checkpoint(const PosteriorState& state, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const std::size_t k = state.num_classes();
    if (k == 2) {
        out << "index,a,b\n";
    } else {
        out << "index";
        for (std::size_t c = 0; c < k; ++c) out << ",c" << c;
        out << "\n";
    }
    char buf[64];
    for (std::size_t i = 0; i < state.size(); ++i) {
        out << i;
        if (k == 2) {
            std::snprintf(buf, sizeof buf, "%.17g", state.a(i));
            out << ',' << buf;
            std::snprintf(buf, sizeof buf, "%.17g", state.b(i));
            out << ',' << buf;
        } else {
            for (std::size_t c = 0; c < k; ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", state.count(i, c));
                out << ',' << buf;
            }
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

PosteriorState load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty checkpoint");
    std::size_t k;
    if (line == "index,a,b") {
        k = 2;
    } else {
        k = 0;
        std::stringstream hs(line);
        std::string col;
        if (!std::getline(hs, col, ',') || col != "index")
            throw ParseError(path + ": bad checkpoint header");
        while (std::getline(hs, col, ',')) {
            if (col != "c" + std::to_string(k))
                throw ParseError(path + ": bad checkpoint header column '" + col + "'");
            ++k;
        }
        if (k < 2) throw ParseError(path + ": bad checkpoint header");
    }

    std::vector<double> counts;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        if (!std::getline(ls, cell, ',') || std::stoull(cell) != row)
            throw ParseError(path + ": non-contiguous index at row " + std::to_string(row));
        std::vector<double> vals;
        while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != k)
            throw ParseError(path + ": row " + std::to_string(row) + " has " +
                             std::to_string(vals.size()) + " counts, expected " +
                             std::to_string(k));
        for (double v : vals)
            if (!(v > 0.0))
                throw ValidationError(path + ": non-positive count at row " +
                                      std::to_string(row));
        if (k == 2) {
            // file order is a,b; storage order is column 0 = b, column 1 = a
            counts.push_back(vals[1]);
            counts.push_back(vals[0]);
        } else {
            counts.insert(counts.end(), vals.begin(), vals.end());
        }
        ++row;
    }
    if (row == 0) throw ParseError(path + ": checkpoint has no rows");

    // Init pseudo-counts are not stored; use the column minima as a
    // conservative record consistent with counts-only-increase.
    double init = counts[0];
    for (double v : counts) init = std::min(init, v);
    PosteriorState state = PosteriorState::dirichlet(row, k, init);
    state.raw_counts() = std::move(counts);
    return state;
}

}  // namespace b3seg
