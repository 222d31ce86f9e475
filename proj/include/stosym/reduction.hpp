#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "stosym/groups.hpp"
#include "stosym/gsde.hpp"
#include "stosym/path.hpp"
#include "stosym/transform.hpp"

namespace stosym {

struct CanonicalFormReport {
    bool canonical = false;
    double deviation = 0.0;  // worst offence against the block pattern
};

/// Reads the fields as columns (Y_1 | ... | Y_r) and checks the canonical
/// frame pattern on every grid point: unit diagonal and zeros below it in
/// the first r coordinates, zeros in the remaining coordinates.  Entries
/// above the diagonal are free.
CanonicalFormReport canonical_form_check(
    const std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>>&
        fields,
    const std::vector<Eigen::VectorXd>& grid, double tol = 1e-9);

struct OrbitOptions {
    double march_step = 1e-2;      // coarse parameter step while hunting
    double max_parameter = 20.0;   // give up beyond this orbit length
    double margin = 0.5;           // box inflation allowed before "escaped"
    double min_speed = 1e-6;       // smallest usable |Y|
    int transport_steps_per_unit = 1000;
};

/// Gauge and clock profiles produced by solve_gauge_eta.  B is empty when
/// the field carries no gauge part; eta is identically one when it carries
/// no clock part.  orbit_parameter reports the signed flow time from the
/// section to the query point.
struct GaugeEtaSolution {
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> B;
    std::function<double(const Eigen::VectorXd&)> eta;
    std::function<double(const Eigen::VectorXd&)> orbit_parameter;
};

/// Integrates B' = -B C and eta' = -tau eta along the orbits of Y, starting
/// from the identity on the section through x0 orthogonal to Y(x0).  Each
/// query point is traced back to its closest section crossing; orbits that
/// leave the inflated box or run past max_parameter in both directions
/// raise std::runtime_error.
GaugeEtaSolution solve_gauge_eta(const InfinitesimalTransformation& v,
                                 const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& box_lo,
                                 const Eigen::VectorXd& box_hi,
                                 const OrbitOptions& options = {});

struct TriangularReport {
    int r = 0;
    // (i, j): largest variation of psi^i (minus x^i in the first r rows)
    // as x^j alone moves; only columns j < min(i + 1, r) are probed
    Eigen::MatrixXd residuals;
    double max_residual = 0.0;
    bool triangular = false;
};

/// Probes the map for the triangular shape: the increment of each of the
/// first r coordinates may not depend on that coordinate or the ones before
/// it, and the remaining coordinates may not depend on the first r at all.
TriangularReport triangular_check(const Gsde& sde, int r,
                                  const std::vector<Eigen::VectorXd>& x_grid,
                                  const std::vector<GroupElement>& z_grid,
                                  double tol = 1e-9);

/// Refills the first m - reduced.dim() coordinates step by step, taking the
/// trailing coordinates from the reduced path and advancing the leading
/// ones with the same stepping rule the solvers use.
CadlagPath reconstruct(const CadlagPath& reduced, const Gsde& sde,
                       const CadlagPath& z, const Eigen::VectorXd& x0);

/// Every coordinate rebuilt by the recursion (nothing is taken as given);
/// reproduces the plain solvers exactly.
CadlagPath reconstruct(const Gsde& sde, const CadlagPath& z,
                       const Eigen::VectorXd& x0);

}  // namespace stosym
