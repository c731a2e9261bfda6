#include "b3seg/planner.hpp"

#include <algorithm>
#include <cmath>

#include "b3seg/parallel.hpp"
#include "b3seg/rng.hpp"

namespace b3seg {

Camera make_orbit_camera(const Vec3& center, const Vec3& position, double fov, int width,
                         int height) {
    Camera cam;
    cam.position = position;
    cam.look_at = center;
    cam.vertical_fov = fov;
    cam.width = width;
    cam.height = height;
    const Vec3 dir = (center - position).normalized();
    Vec3 up_raw{0.0, 0.0, 1.0};
    if (std::abs(dir.z) > 0.999) up_raw = {1.0, 0.0, 0.0};
    cam.up = (up_raw - dir * dir.dot(up_raw)).normalized();
    return cam;
}

CandidateSet sample_candidates(const ObjectStats& stats, double fov, int n_cand,
                               uint64_t seed, int width, int height) {
    if (n_cand < 1) throw ValidationError("need at least one candidate view");
    if (!(fov > 0.0) || !(fov < M_PI)) throw ValidationError("fov must be in (0, pi)");
    CandidateSet set;
    set.sphere_center = stats.center;
    set.sphere_radius = 1.5 * stats.radius / std::tan(0.5 * fov);
    set.rng_seed = seed;
    Rng rng(seed);
    set.cameras.reserve(n_cand);
    for (int i = 0; i < n_cand; ++i) {
        const Vec3 pos = stats.center + rng.unit_vector() * set.sphere_radius;
        set.cameras.push_back(make_orbit_camera(stats.center, pos, fov, width, height));
    }
    return set;
}

std::pair<double, double> split_by_mean(double tau, double m) {
    if (tau <= 0.0) return {0.0, 0.0};
    double e1 = m * tau;
    double e0 = tau - e1;
    // Whichever part is >= tau/2 determines the other exactly (Sterbenz), so
    // the pair always sums back to tau bit-exactly.
    if (e1 < e0) e1 = tau - e0;
    return {e1, e0};
}

EvidenceMap expected_evidence(std::span<const double> tau, const PosteriorState& state) {
    if (tau.size() != state.size())
        throw ValidationError("responsibility vector does not match posterior size");
    EvidenceMap e = EvidenceMap::zeros(state.size(), state.num_classes());
    const std::size_t k = state.num_classes();
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (tau[i] <= 0.0) continue;
        if (k == 2) {
            const auto [e1, e0] = split_by_mean(tau[i], state.mean_fg(i));
            e.at(i, 1) = e1;
            e.at(i, 0) = e0;
        } else {
            for (std::size_t c = 0; c < k; ++c) e.at(i, c) = state.mean(i, c) * tau[i];
        }
    }
    e.refresh_tau();
    return e;
}

EvidenceMap expected_evidence(const RenderOutput& out, const PosteriorState& state) {
    return expected_evidence(std::span<const double>(out.responsibilities), state);
}

double eig(std::span<const double> tau, const PosteriorState& state,
           std::vector<double>* per_gaussian_drop) {
    if (tau.size() != state.size())
        throw ValidationError("responsibility vector does not match posterior size");
    if (per_gaussian_drop) per_gaussian_drop->assign(state.size(), 0.0);
    const std::size_t k = state.num_classes();
    double total = 0.0;
    std::vector<double> after(k);
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (tau[i] <= 0.0) continue;  // analytically a zero term
        double drop;
        if (k == 2) {
            const double a = state.a(i), b = state.b(i);
            const auto [e1, e0] = split_by_mean(tau[i], state.mean_fg(i));
            drop = beta_entropy(a, b) - beta_entropy(a + e1, b + e0);
        } else {
            for (std::size_t c = 0; c < k; ++c)
                after[c] = state.count(i, c) + state.mean(i, c) * tau[i];
            drop = dirichlet_entropy(state.row(i)) - dirichlet_entropy(after);
        }
        if (per_gaussian_drop) (*per_gaussian_drop)[i] = drop;
        total += drop;
    }
    return total;
}

double eig(const RenderOutput& out, const PosteriorState& state,
           std::vector<double>* per_gaussian_drop) {
    return eig(std::span<const double>(out.responsibilities), state, per_gaussian_drop);
}

double ig_from_evidence(const EvidenceMap& evidence, const PosteriorState& state) {
    if (evidence.n != state.size() || evidence.k != state.num_classes())
        throw ValidationError("evidence shape does not match posterior state");
    const std::size_t k = state.num_classes();
    double total = 0.0;
    std::vector<double> after(k);
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (evidence.tau[i] <= 0.0) continue;
        if (k == 2) {
            total += beta_entropy(state.a(i), state.b(i)) -
                     beta_entropy(state.a(i) + evidence.e1(i), state.b(i) + evidence.e0(i));
        } else {
            for (std::size_t c = 0; c < k; ++c)
                after[c] = state.count(i, c) + evidence(i, c);
            total += dirichlet_entropy(state.row(i)) - dirichlet_entropy(after);
        }
    }
    return total;
}

double exact_ig(const RenderOutput& out, const Mask& mask, uint32_t target_class,
                const PosteriorState& state) {
    return ig_from_evidence(aggregate_evidence(out, mask, target_class), state);
}

std::pair<ViewScore, RenderOutput> select_view(const Scene& scene,
                                               const CandidateSet& candidates,
                                               const PosteriorState& state) {
    const std::size_t n = candidates.cameras.size();
    if (n == 0) throw ValidationError("candidate set is empty");
    // Scoring needs only the responsibilities; the winner is re-materialized
    // in full so the pipeline gets its contribution lists without a second
    // scoring pass.
    std::vector<double> scores(n);
    parallel_for(n, [&](std::size_t i) {
        const std::vector<double> tau =
            render_responsibilities(scene, candidates.cameras[i]);
        scores[i] = eig(std::span<const double>(tau), state);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (scores[i] > scores[best]) best = i;

    RenderOutput winner = render(scene, candidates.cameras[best]);
    ViewScore score;
    score.camera_index = int(best);
    score.eig = eig(winner, state, &score.per_gaussian_drop);
    return {std::move(score), std::move(winner)};
}

double greedy_ratio_check(const Scene& scene, const CandidateSet& candidates, int k,
                          const PosteriorState& state) {
    const int n = int(candidates.cameras.size());
    if (n > 7 || k > 3) throw ValidationError("combinatorial budget exceeded (n <= 7, k <= 3)");
    if (k < 1 || k > n) throw ValidationError("need 1 <= k <= number of candidates");

    // One render per candidate; only responsibilities are needed afterwards.
    std::vector<std::vector<double>> tau(n);
    parallel_for(std::size_t(n), [&](std::size_t i) {
        tau[i] = render_responsibilities(scene, candidates.cameras[i]);
    });

    const auto apply_expected = [&](PosteriorState& s, int view) {
        s.apply(expected_evidence(std::span<const double>(tau[view]), s));
    };

    // Greedy with posterior updates between steps.
    double greedy_total = 0.0;
    {
        PosteriorState s = state;
        std::vector<bool> used(n, false);
        for (int step = 0; step < k; ++step) {
            int best = -1;
            double best_gain = 0.0;
            for (int v = 0; v < n; ++v) {
                if (used[v]) continue;
                const double gain = eig(std::span<const double>(tau[v]), s);
                if (best < 0 || gain > best_gain) {
                    best = v;
                    best_gain = gain;
                }
            }
            greedy_total += best_gain;
            apply_expected(s, best);
            used[best] = true;
        }
    }

    // Brute force over ordered k-tuples of distinct candidates under the same
    // surrogate dynamics.
    double best_total = 0.0;
    std::vector<int> tuple;
    std::vector<bool> used(n, false);
    const auto recurse = [&](auto&& self, const PosteriorState& s, double acc) -> void {
        if (int(tuple.size()) == k) {
            best_total = std::max(best_total, acc);
            return;
        }
        for (int v = 0; v < n; ++v) {
            if (used[v]) continue;
            PosteriorState next = s;
            const double gain = eig(std::span<const double>(tau[v]), next);
            apply_expected(next, v);
            used[v] = true;
            tuple.push_back(v);
            self(self, next, acc + gain);
            tuple.pop_back();
            used[v] = false;
        }
    };
    recurse(recurse, state, 0.0);

    if (best_total <= 0.0) return 1.0;  // nothing to gain anywhere
    return greedy_total / best_total;
}

bool should_stop(const PosteriorState& state, double target_mean_entropy) {
    if (!(target_mean_entropy >= 0.0))
        throw ValidationError("entropy target must be >= 0");
    return mean_predictive_entropy(state) <= target_mean_entropy;
}

}  // namespace b3seg
