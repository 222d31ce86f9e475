#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "stosym/drivers.hpp"
#include "stosym/path.hpp"

namespace stosym {

// dX = "psi applied to driver increments": X_l = Psi(X_{l-1}, dZ_l) for jump
// steps, second-order expansion of Psi-bar(x, z', z) = Psi(x, z' z^{-1}) for
// continuous grid steps.
struct Gsde {
    int state_dim = 0;
    GroupDescriptor driver;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const GroupElement&)>
        psi;
    // derivatives of z -> Psi(x, z) at z = identity; when absent, central
    // finite differences with step 1e-5 stand in
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> d_psi;
    std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> d2_psi;
    // an iterated random map need not satisfy Psi(x, 1) = x and may only be
    // advanced jump by jump
    bool discrete_only = false;
    // held fixed for a whole run when present; evaluators may capture it
    std::optional<Eigen::VectorXd> control;
};

// max |Psi(x, identity) - x| over a quasi-random probe box [-half_width, half_width]^m
double identity_defect(const Gsde& sde, int n_probes = 100,
                       double half_width = 2.0);

// central finite differences of z -> Psi(x, z) at the identity, step h
Eigen::MatrixXd fd_d_psi(const Gsde& sde, const Eigen::VectorXd& x,
                         double h = 1e-5);
std::vector<Eigen::MatrixXd> fd_d2_psi(const Gsde& sde,
                                       const Eigen::VectorXd& x,
                                       double h = 1e-5);

// exact recursion X_l = Psi(X_{l-1}, jump(Z_l, Z_{l-1}))
CadlagPath solve_discrete(const Gsde& sde, const CadlagPath& z,
                          const Eigen::VectorXd& x0);

// grid integration: flagged steps get the full map, continuous steps the
// first/second-order expansion against the realized increment
CadlagPath solve_grid(const Gsde& sde, const CadlagPath& z,
                      const Eigen::VectorXd& x0);

// Psi(x, z) = x + sigma(x) z on the additive driver R^n
Gsde from_affine(int m, int n,
                 std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> sigma);

// Monte Carlo estimate of the drift correction
//   integral over {|z| <= 1} of (F(x, z) - dF/dz(x, z) z) nu0(dz),
// sampled once per call with n_mc draws; stderr_out gets the worst
// per-coordinate standard error when non-null.
Eigen::VectorXd levy_drift_correction(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                        const Eigen::VectorXd&)>& jump_map,
    const JumpMeasure& nu0, const Eigen::VectorXd& x, std::uint64_t seed,
    int n_mc = 100000, double* stderr_out = nullptr);

// Psi(x, (s, w, l)) = x + mu~(x) s + sigma(x) w + F(x, l) on R^{1+k+j},
// where mu~ = mu - the correction above (drawn once, cached, deterministic
// in seed).  Throws if F(x, 0) != 0 on a probe grid.
Gsde from_smooth_levy(
    int m, int k, int j,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> mu,
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> sigma,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                  const Eigen::VectorXd&)> jump_map,
    const JumpMeasure& nu0, std::uint64_t seed = 0, int n_mc = 100000);

// wraps (x, dz) -> x' as a discrete-only SDE; solve_grid refuses it
Gsde from_iterated_map(
    int m, const GroupDescriptor& group,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const GroupElement&)>
        map);

}  // namespace stosym
