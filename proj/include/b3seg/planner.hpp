#pragma once
// Next-view planning: sphere-sampled candidates, analytic expected information
// gain from posterior means alone, the realized-mask information gain, greedy
// selection, a brute-force greedy-ratio harness, and entropy-based stopping.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "b3seg/camera.hpp"
#include "b3seg/posterior.hpp"
#include "b3seg/render.hpp"

namespace b3seg {

struct CandidateSet {
    std::vector<Camera> cameras;
    Vec3 sphere_center;
    double sphere_radius = 0.0;
    uint64_t rng_seed = 0;
};

struct ViewScore {
    int camera_index = -1;
    double eig = 0.0;
    std::vector<double> per_gaussian_drop;  // filled for the selected view
};

// Orbit camera looking at center. Up is global +z projected orthogonal to the
// view direction, falling back to +x when nearly parallel (|cos| > 0.999).
Camera make_orbit_camera(const Vec3& center, const Vec3& position, double fov, int width,
                         int height);

// Area-uniform camera positions on the sphere of radius
//   r_sphere = 1.5 * r_obj / tan(fov / 2)
// about the object center; deterministic per seed.
CandidateSet sample_candidates(const ObjectStats& stats, double fov, int n_cand,
                               uint64_t seed, int width, int height);

// Splits tau into (e1, e0) = (m * tau, (1 - m) * tau) such that
// e1 + e0 == tau holds exactly in floating point.
std::pair<double, double> split_by_mean(double tau, double m);

// Mask-free evidence prediction from posterior means: e_c = m_c * tau.
EvidenceMap expected_evidence(const RenderOutput& out, const PosteriorState& state);
EvidenceMap expected_evidence(std::span<const double> tau, const PosteriorState& state);

// Analytic EIG: sum_i [H(alpha_i) - H(alpha_i + m_i tau_i)]; tau_i = 0 terms
// are exactly zero and skipped. Optional per-Gaussian drops (same order).
double eig(std::span<const double> tau, const PosteriorState& state,
           std::vector<double>* per_gaussian_drop = nullptr);
double eig(const RenderOutput& out, const PosteriorState& state,
           std::vector<double>* per_gaussian_drop = nullptr);

// Realized information gain for an actual mask (the oracle that the analytic
// EIG approximates).
double exact_ig(const RenderOutput& out, const Mask& mask, uint32_t target_class,
                const PosteriorState& state);
double ig_from_evidence(const EvidenceMap& evidence, const PosteriorState& state);

// Renders each candidate once, scores with eig, returns the argmax (ties to
// the lowest camera index) together with the winner's render output.
std::pair<ViewScore, RenderOutput> select_view(const Scene& scene,
                                               const CandidateSet& candidates,
                                               const PosteriorState& state);

// Greedy-vs-optimal ratio under the deterministic expected-evidence surrogate.
// Brute force enumerates ordered k-tuples of distinct candidates; budget is
// capped at |candidates| <= 7, k <= 3.
double greedy_ratio_check(const Scene& scene, const CandidateSet& candidates, int k,
                          const PosteriorState& state);

// True iff the mean Bernoulli predictive entropy is at or below target.
bool should_stop(const PosteriorState& state, double target_mean_entropy);

}  // namespace b3seg
