#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stosym/path.hpp"
#include "stosym/rng.hpp"
#include "stosym/symmetry.hpp"

namespace stosym {

/// Brownian increments on a fixed grid.  Row l-1 of `dw` holds
/// W(t_l) - W(t_{l-1}); `dww`, when present, holds one k x k matrix per
/// step with the iterated integrals in the stored-integral layout
///   [p, q] = integral over the step of (W^q - W^q_left) dW^p
/// (row = outer integrator), the same layout MilsteinProbe uses.  For one
/// driving component the entry is (ΔW² - Δt) / 2 exactly.
struct DiscretizedNoise {
    std::vector<double> times;         // strictly increasing, times[0] == 0
    Eigen::MatrixXd dw;                // steps x k
    std::vector<Eigen::MatrixXd> dww;  // empty, or one k x k block per step

    int steps() const { return static_cast<int>(dw.rows()); }
    int k() const { return static_cast<int>(dw.cols()); }
    bool has_areas() const { return !dww.empty(); }

    /// Throws std::invalid_argument when the representation is inconsistent.
    void validate() const;
};

/// t_l = horizon * l / steps for l = 0..steps.
std::vector<double> uniform_grid(double horizon, int steps);

/// Independent N(0, Δt_l) increments on the given grid, no area block.
DiscretizedNoise sample_brownian_increments(int k,
                                            const std::vector<double>& times,
                                            Rng& rng);

/// Copy with the one-component area block filled in closed form,
/// (ΔW² - Δt) / 2 per step; only defined for k = 1.
DiscretizedNoise with_scalar_areas(const DiscretizedNoise& noise);

/// Merges runs of `factor` consecutive steps.  Increments add; area blocks,
/// when present, combine through the Milstein group product, which keeps
/// them equal to the iterated integrals of the same underlying path read on
/// the coarser grid.
DiscretizedNoise coarsen(const DiscretizedNoise& noise, int factor);

/// One-step Euler recursion of euler_map along the noise grid.  The result
/// is a grid-sampled path on Additive(m) with X(t_0) = x0.
CadlagPath euler_solve(const DiffusionCoefficients& co,
                       const DiscretizedNoise& noise,
                       const Eigen::VectorXd& x0);

/// One-step Milstein recursion of milstein_map; requires the area block.
CadlagPath milstein_solve(const DiffusionCoefficients& co,
                          const DiscretizedNoise& noise,
                          const Eigen::VectorXd& x0);

/// Reads a coarse-grid noise off a finely sampled Brownian path on
/// Additive(k): increments are exact path differences and the area block
/// collects left-point Riemann sums of (W^q - W^q_left) dW^p over the fine
/// sub-steps of each coarse step.  Every coarse time must be a fine time;
/// otherwise the grids are misaligned and the call throws.
DiscretizedNoise levy_area(const CadlagPath& fine_w,
                           const std::vector<double>& coarse_times);

/// Per-step rotation of the increments, ΔW'_l = B_l ΔW_l.  One matrix per
/// step; each must be orthogonal to 1e-12 in the infinity norm.  The area
/// block is dropped (the Milstein variant transforms it).
DiscretizedNoise gauge_rotate_euler(const std::vector<Eigen::MatrixXd>& b_steps,
                                    const DiscretizedNoise& noise);

/// Rotates increments and area blocks together, ΔW'_l = B_l ΔW_l and
/// Δ𝕎'_l = B_l Δ𝕎_l B_l^T, the per-increment form of conjugating the
/// (t, W, 𝕎) path on the Milstein group.  Requires the area block.
DiscretizedNoise gauge_rotate_milstein(
    const std::vector<Eigen::MatrixXd>& b_steps, const DiscretizedNoise& noise);

/// Cumulates the per-step triples (Δt, ΔW, Δ𝕎) through the Milstein group:
/// row l holds Z_l = Δ_l * Z_{l-1} starting from the identity, so per-step
/// jumps recover the triples.  Requires the area block and times[0] == 0.
CadlagPath milstein_group_path(const DiscretizedNoise& noise);

/// CSV layout (step, alpha, beta, value): one (l, -1, -1, t_l) row per grid
/// time, one (l, alpha, -1, ΔW^alpha_l) row per increment entry and, when
/// areas are present, one (l, alpha, beta, Δ𝕎^{alpha beta}_l) row per area
/// entry, steps numbered from 1.
std::string noise_to_csv(const DiscretizedNoise& noise);
DiscretizedNoise noise_from_csv(const std::string& csv);

std::string noise_to_json(const DiscretizedNoise& noise);
DiscretizedNoise noise_from_json(const std::string& text);

}  // namespace stosym
