#pragma once

#include <memory>
#include <utility>

#include "stosym/actions.hpp"
#include "stosym/gsde.hpp"
#include "stosym/path.hpp"

namespace stosym {

struct Diffeo {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forward;
    // both optional: inversion falls back to Newton, the Jacobian to
    // central finite differences
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> inverse;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

Eigen::VectorXd diffeo_invert(const Diffeo& phi, const Eigen::VectorXd& y);
Eigen::MatrixXd diffeo_jacobian(const Diffeo& phi, const Eigen::VectorXd& x);
Diffeo identity_diffeo();
Diffeo linear_diffeo(const Eigen::MatrixXd& a);

// T = (phi, B, eta).  Empty B means the identity gauge value, empty eta
// means 1; the action pointers say how those values move driver increments.
struct StochasticTransformation {
    int state_dim = 0;
    Diffeo phi;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> gauge_value;
    std::function<double(const Eigen::VectorXd&)> eta;
    std::shared_ptr<const GaugeAction> gauge;
    std::shared_ptr<const TimeAction> time;
};

// V = (Y, C, tau) with C matrix-valued in the gauge Lie algebra.
struct InfinitesimalTransformation {
    int state_dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> Y;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> Y_jacobian;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> C;
    std::function<double(const Eigen::VectorXd&)> tau;
    std::shared_ptr<const GaugeAction> gauge;
    std::shared_ptr<const TimeAction> time;
};

StochasticTransformation identity_transformation(int m);

Eigen::MatrixXd transform_gauge_value(const StochasticTransformation& t,
                                      const Eigen::VectorXd& x);
double transform_eta(const StochasticTransformation& t,
                     const Eigen::VectorXd& x);

Eigen::VectorXd inf_y(const InfinitesimalTransformation& v,
                      const Eigen::VectorXd& x);
Eigen::MatrixXd inf_y_jacobian(const InfinitesimalTransformation& v,
                               const Eigen::VectorXd& x);
Eigen::MatrixXd inf_c(const InfinitesimalTransformation& v,
                      const Eigen::VectorXd& x);
double inf_tau(const InfinitesimalTransformation& v, const Eigen::VectorXd& x);

// per-step gauge values g_l (one per step, applied to the step's increment);
// increments are transformed and recomposed
CadlagPath apply_gauge(const GaugeAction& action,
                       const std::vector<Eigen::MatrixXd>& gauge_values,
                       const CadlagPath& z);

// reclocks the path: new time of point i is the cumulative sum of
// eta_steps[l] * dt_l; values are untouched, so the output is the input
// sampled at the inverse of the built clock
CadlagPath time_change(const CadlagPath& x, const Eigen::VectorXd& eta_steps,
                       double eta_floor = 1e-8);

StochasticTransformation compose(const StochasticTransformation& t2,
                                 const StochasticTransformation& t1);
StochasticTransformation invert(const StochasticTransformation& t);

InfinitesimalTransformation bracket(const InfinitesimalTransformation& v1,
                                    const InfinitesimalTransformation& v2);

InfinitesimalTransformation push_forward(const StochasticTransformation& t,
                                         const InfinitesimalTransformation& v);

// integrates d/da (phi, B, eta) = (Y(phi), C(phi) B, tau(phi) eta) with a
// fixed-step classical 4th-order scheme
StochasticTransformation flow(const InfinitesimalTransformation& v, double a,
                              int steps_per_unit = 1000);
// max |phi_a(x)| difference between the configured step and half the step
double flow_self_check(const InfinitesimalTransformation& v, double a,
                       const Eigen::VectorXd& x, int steps_per_unit = 1000);

Gsde apply_e(const StochasticTransformation& t, const Gsde& sde);

std::pair<CadlagPath, CadlagPath> apply_p(const StochasticTransformation& t,
                                          const CadlagPath& x,
                                          const CadlagPath& z,
                                          double eta_floor = 1e-8);

}  // namespace stosym
