#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "stosym/groups.hpp"

namespace stosym {

// A gauge group (matrices g of size gauge_dim) acting on the driver group N.
struct GaugeAction {
    int gauge_dim = 1;
    GroupDescriptor group;
    // basis of the gauge Lie algebra in the same matrix representation
    std::vector<Eigen::MatrixXd> algebra;
    std::function<GroupElement(const Eigen::MatrixXd&, const GroupElement&)>
        act;
    // linearization of z -> act(g, z) at the identity of N; finite
    // differences stand in when absent
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> upsilon;
    // analytic generator fields K_l(z) = d/da act(exp(a A_l), z)|_0, optional
    std::vector<std::function<Eigen::VectorXd(const GroupElement&)>> generators;
    // act(g, .) is linear in the coordinates of z
    bool linear = false;
};

// Scalings indexed by r > 0 acting on the driver group.
struct TimeAction {
    GroupDescriptor group;
    std::function<GroupElement(double, const GroupElement&)> act;
    std::function<Eigen::MatrixXd(double)> gamma;              // optional
    std::function<Eigen::VectorXd(const GroupElement&)> generator;  // optional
};

Eigen::MatrixXd gauge_upsilon(const GaugeAction& action,
                              const Eigen::MatrixXd& g);
Eigen::VectorXd gauge_generator(const GaugeAction& action, int l,
                                const GroupElement& z);
// sum of coeffs[l] * algebra basis matrix l
Eigen::MatrixXd algebra_matrix(const GaugeAction& action,
                               const Eigen::VectorXd& coeffs);

Eigen::MatrixXd time_gamma(const TimeAction& action, double r);
Eigen::VectorXd time_generator(const TimeAction& action,
                               const GroupElement& z);

// max commutation defect |act_g(act_r(z)) - act_r(act_g(z))| over probes
double commutation_defect(const GaugeAction& gauge, const TimeAction& time,
                          int n_probes = 50);

// skew-symmetric basis E_pq - E_qp, (p, q) lexicographic with p < q
std::vector<Eigen::MatrixXd> skew_basis(int k);

// SO(k) (or O(k)) rotating the noise block of R^{(clock?1:0)+k}
GaugeAction rotation_gauge(int k, bool include_clock = true);

// rotations of the level-2 group: (t, a, b) -> (t, B a, B b B^T)
GaugeAction milstein_gauge(int k);

// conjugation on GL(2) x R^2: (z1, z2) -> (g z1 g^T, g z2)
GaugeAction conjugation_gauge();

// (t, w) -> (r t, sqrt(r) w)
TimeAction brownian_time(int k);

// (t, z) -> (r t, r^{1/alpha} z)
TimeAction stable_time(double alpha, int n);

// (t, a, b) -> (r t, sqrt(r) a, r b)
TimeAction milstein_time(int k);

}  // namespace stosym
