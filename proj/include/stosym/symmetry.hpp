#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stosym/actions.hpp"
#include "stosym/drivers.hpp"
#include "stosym/gsde.hpp"
#include "stosym/transform.hpp"

namespace stosym {

/// Pointwise residual of a linear identity evaluated over a probe grid.
struct ResidualReport {
    double max_abs = 0.0;
    double mean_abs = 0.0;
    int grid_size = 0;
    // labelled sub-residuals (max over the grid each) when the identity
    // splits into named equations; empty for a single equation
    std::map<std::string, double> per_equation;
};

std::string residual_report_to_json(const ResidualReport& r);

/// One distributional condition; pass iff statistic <= threshold.
/// Composite conditions (several incommensurable sub-checks folded into
/// one) normalize each sub-check by its own threshold and report
/// threshold = 1.
struct LawCondition {
    std::string label;   // "drift", "diffusion" or "measure"
    std::string method;  // "exact" or "monte_carlo"
    double statistic = 0.0;
    double threshold = 0.0;
    double std_error = 0.0;  // Monte Carlo conditions only
    bool pass = false;
};

/// Every check here compares characteristics, not laws directly, so a pass
/// certifies a symmetry only under the standing assumption that the driver
/// law is determined by its characteristics; the flag keeps that caveat
/// attached to the verdict.
struct LawCheckReport {
    std::vector<LawCondition> conditions;
    bool uniqueness_assumed = true;

    bool all_pass() const;
    const LawCondition& condition(const std::string& label) const;
};

std::string law_check_to_json(const LawCheckReport& r);

// ---------------------------------------------------------------------------
// probe grids

/// n quasi-random states in [-half_width, half_width]^m.
std::vector<Eigen::VectorXd> state_grid(int m, int n = 200,
                                        double half_width = 2.0);

/// n quasi-random driver elements with coordinates in the radius ball
/// around the identity (offsets u in [-1,1]^d rescaled by
/// radius / max(1, |u|)).
std::vector<GroupElement> driver_grid(const GroupDescriptor& desc, int n = 200,
                                      double radius = 1.0);

struct EulerProbe {
    Eigen::VectorXd x;
    double dt = 0.0;
    Eigen::VectorXd dw;
};

struct MilsteinProbe {
    Eigen::VectorXd x;
    double dt = 0.0;
    Eigen::VectorXd dw;
    Eigen::MatrixXd dww;  // [p, q] = integral of (W^q - W^q_left) dW^p
};

std::vector<EulerProbe> euler_grid(int m, int k, int n = 200,
                                   double x_half_width = 2.0,
                                   double dw_radius = 1.0);

std::vector<MilsteinProbe> milstein_grid(int m, int k, int n = 200,
                                         double x_half_width = 2.0,
                                         double dw_radius = 1.0);

// ---------------------------------------------------------------------------
// determining equations

struct DeterminingOptions {
    double fd_step = 1e-5;
    // analytic derivatives of Psi in x (m x m) and in the driver
    // coordinates (m x d), both at general (x, z); finite differences of
    // the probe map stand in when absent
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const GroupElement&)>
        psi_dx;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const GroupElement&)>
        psi_dz;
};

/// First-order change of Psi along V at each probe:
///   Y(Psi(x, z)) - dPsi/dx . Y(x) - tau(x) H(z) . dPsi/dz
///                - (gauge generator along C(x))(z) . dPsi/dz
/// using the actions V carries.  x_grid and z_grid are paired pointwise
/// and must have equal length.
ResidualReport determining_residual(const Gsde& sde,
                                    const InfinitesimalTransformation& v,
                                    const std::vector<Eigen::VectorXd>& x_grid,
                                    const std::vector<GroupElement>& z_grid,
                                    const DeterminingOptions& opts = {});

// ---------------------------------------------------------------------------
// classical diffusions and their one-step schemes

/// Coefficients of dX = mu dt + sigma dW on R^m with k driving components.
struct DiffusionCoefficients {
    int m = 0;
    int k = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> mu;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> sigma;  // m x k
    // optional analytic derivatives; (i, j) entry of d_mu is d mu^i / d x^j,
    // d_sigma returns one m x k matrix per state coordinate j holding
    // d sigma / d x^j.  Finite differences stand in when absent.
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> d_mu;
    std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)>
        d_sigma;
};

Eigen::MatrixXd fd_jacobian_of(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-5);

/// Determining equations of the diffusion itself, labelled "drift"
///   Y . d(mu) - L(Y) + tau mu = 0,   L = mu . d + (1/2) sigma sigma^T : d2
/// and "diffusion"
///   Y . d(sigma_a) - sigma . d(Y)_a + (1/2) tau sigma_a + sigma_b C^b_a = 0.
ResidualReport brownian_determining_residual(
    const DiffusionCoefficients& co, const InfinitesimalTransformation& v,
    const std::vector<Eigen::VectorXd>& x_grid, double fd_step = 1e-5);

/// One-step Euler map x + mu dt + sigma dw.
Eigen::VectorXd euler_map(const DiffusionCoefficients& co,
                          const Eigen::VectorXd& x, double dt,
                          const Eigen::VectorXd& dw);

/// One-step Milstein map: Euler plus sigma^j_a d_j sigma^i_b dww[b, a]
/// with dww the stored iterated integrals (row = outer integrator).
Eigen::VectorXd milstein_map(const DiffusionCoefficients& co,
                             const Eigen::VectorXd& x, double dt,
                             const Eigen::VectorXd& dw,
                             const Eigen::MatrixXd& dww);

/// Weak determining equation of the Euler scheme at each probe:
///   Y(x + mu dt + sigma dw) - Y(x) - dY . mu dt - dY . sigma dw
///                           - sigma C dw = 0.
ResidualReport euler_determining_residual(const DiffusionCoefficients& co,
                                          const InfinitesimalTransformation& v,
                                          const std::vector<EulerProbe>& grid,
                                          double fd_step = 1e-5);

/// Weak determining equation of the Milstein scheme: with F the one-step
/// map,
///   dF/dx . Y - dY(F) . F_increment  replaced by the commutator form
///   Y^j d_j F - F^j d_j Y + (C dw) . dF/ddw + (C dww + dww C^T) . dF/ddww
/// evaluated pointwise; the area part uses the stored-integral layout.
ResidualReport milstein_determining_residual(
    const DiffusionCoefficients& co, const InfinitesimalTransformation& v,
    const std::vector<MilsteinProbe>& grid, double fd_step = 1e-5);

// ---------------------------------------------------------------------------
// law conditions on driver characteristics

/// Invariance of the triplet under the gauge elements: drift
///   b0 = Upsilon_g b0 + integral of (h(z') - Upsilon_g h(act(g^{-1}, z')))
/// against nu0, diffusion A0 = Upsilon_g A0 Upsilon_g^T, and measure
/// nu0 = act(g, .)_* nu0.  Statistics are worst-case over the supplied
/// elements.
LawCheckReport check_levy_gauge(const CharacteristicTriplet& triplet,
                                const GaugeAction& action,
                                const std::vector<Eigen::MatrixXd>& g_samples,
                                int mc_samples = 20000, std::uint64_t seed = 0,
                                double level = 0.01);

/// Same conditions for clock scalings r: drift
///   b0 = (1/r) gamma_r b0 + (1/r) integral of
///        (h(z') - gamma_r h(act(1/r, z'))) nu0(dz'),
/// diffusion A0 = (1/r) gamma_r A0 gamma_r^T, measure
/// nu0 = (1/r) act(r, .)_* nu0.  For the stable driver the measure
/// condition compares increment laws across scales instead of sampling the
/// (infinite-mass) measure.
LawCheckReport check_levy_time(const CharacteristicTriplet& triplet,
                               const TimeAction& action,
                               const std::vector<double>& r_samples,
                               int mc_samples = 20000, std::uint64_t seed = 0,
                               double level = 0.01);

/// Invariance of a discrete-time increment law under the gauge elements,
/// tested per group block: two-sample comparisons of coordinates and norms
/// for vector blocks, of conjugation-stable functionals (singular values,
/// symmetric-part eigenvalues, Frobenius norm) for matrix blocks.
LawCheckReport check_discrete_gauge(
    const GroupDescriptor& group,
    const std::function<Eigen::VectorXd(Rng&)>& increment,
    const GaugeAction& action, const std::vector<Eigen::MatrixXd>& g_samples,
    int mc_samples = 20000, std::uint64_t seed = 0, double level = 0.01);

// ---------------------------------------------------------------------------
// pathwise certificate

/// Transports each sampled driver path through T and certifies that the
/// moved pair still satisfies the update recursion, one transition at a
/// time: advancing the moved state over each moved increment must land on
/// the next moved state.  The report collects the per-transition residuals
/// over all paths.  A true symmetry makes this solver round-off, anything
/// else order one.
ResidualReport is_symmetry_pathwise(const Gsde& sde,
                                    const StochasticTransformation& t,
                                    const Eigen::VectorXd& x0,
                                    const DriverSpec& driver, int n_paths);

}  // namespace stosym
