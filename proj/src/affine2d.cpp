#include "stosym/affine2d.hpp"

#include <cmath>

namespace stosym {

namespace {

const Eigen::Matrix2d kRot90 = (Eigen::Matrix2d() << 0, -1, 1, 0).finished();

Eigen::Matrix2d rot(double a) {
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

}  // namespace

std::shared_ptr<const GaugeAction> conjugation_gauge_ptr() {
    static const auto ptr =
        std::make_shared<const GaugeAction>(conjugation_gauge());
    return ptr;
}

GroupDescriptor affine2d_group() {
    return GroupDescriptor::product(
        {GroupDescriptor::general_linear(2), GroupDescriptor::additive(2)});
}

double arg2(double a, double b) { return std::atan2(b, a); }

Gsde affine2d_sde() {
    Gsde sde;
    sde.state_dim = 2;
    sde.driver = affine2d_group();
    sde.psi = [](const Eigen::VectorXd& x, const GroupElement& z) {
        Eigen::Matrix2d m;
        m << z.coords(0), z.coords(1), z.coords(2), z.coords(3);
        return Eigen::VectorXd(m * x + z.coords.segment(4, 2));
    };
    // linear in the driver coordinates, so both derivatives are exact
    sde.d_psi = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 6);
        d(0, 0) = x(0);
        d(0, 1) = x(1);
        d(1, 2) = x(0);
        d(1, 3) = x(1);
        d(0, 4) = 1.0;
        d(1, 5) = 1.0;
        return d;
    };
    sde.d2_psi = [](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Zero(6, 6));
    };
    return sde;
}

InfinitesimalTransformation affine2d_rotation_v() {
    InfinitesimalTransformation v;
    v.state_dim = 2;
    v.Y = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(kRot90 * x); };
    v.Y_jacobian = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd(kRot90);
    };
    v.C = [](const Eigen::VectorXd&) { return Eigen::MatrixXd(kRot90); };
    v.gauge = conjugation_gauge_ptr();
    return v;
}

StochasticTransformation affine2d_rotation_t(double a) {
    StochasticTransformation t;
    t.state_dim = 2;
    t.phi = linear_diffeo(rot(a));
    Eigen::MatrixXd g = rot(a);
    t.gauge_value = [g](const Eigen::VectorXd&) { return g; };
    t.gauge = conjugation_gauge_ptr();
    return t;
}

StochasticTransformation affine2d_polar_t() {
    StochasticTransformation t;
    t.state_dim = 2;
    t.phi = identity_diffeo();
    t.gauge_value = [](const Eigen::VectorXd& x) {
        const double r = std::hypot(x(0), x(1));
        Eigen::MatrixXd b(2, 2);
        b << x(0) / r, x(1) / r, -x(1) / r, x(0) / r;
        return b;
    };
    t.gauge = conjugation_gauge_ptr();
    return t;
}

Gsde affine2d_transformed_printed() {
    Gsde sde;
    sde.state_dim = 2;
    sde.driver = affine2d_group();
    sde.psi = [](const Eigen::VectorXd& x, const GroupElement& z) {
        const double r = std::hypot(x(0), x(1));
        Eigen::Matrix2d m;
        m << x(0), -x(1), x(1), x(0);
        Eigen::Matrix2d rot_theta;
        rot_theta << x(0) / r, -x(1) / r, x(1) / r, x(0) / r;
        Eigen::Vector2d col1(z.coords(0), z.coords(2));
        return Eigen::VectorXd(m * col1 + rot_theta * z.coords.segment(4, 2));
    };
    sde.d_psi = [](const Eigen::VectorXd& x) {
        const double r = std::hypot(x(0), x(1));
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 6);
        d(0, 0) = x(0);
        d(1, 0) = x(1);
        d(0, 2) = -x(1);
        d(1, 2) = x(0);
        d(0, 4) = x(0) / r;
        d(1, 4) = x(1) / r;
        d(0, 5) = -x(1) / r;
        d(1, 5) = x(0) / r;
        return d;
    };
    sde.d2_psi = [](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Zero(6, 6));
    };
    return sde;
}

Gsde affine2d_pseudo_polar() {
    Gsde sde;
    sde.state_dim = 2;
    sde.driver = affine2d_group();
    // state is (theta, rho); the rho equation is self-contained
    sde.psi = [](const Eigen::VectorXd& x, const GroupElement& z) {
        const double root = std::sqrt(x(1));
        const double u = root * z.coords(0) + z.coords(4);
        const double v = root * z.coords(2) + z.coords(5);
        Eigen::VectorXd out(2);
        out(0) = x(0) + arg2(u, v);
        out(1) = u * u + v * v;
        return out;
    };
    return sde;
}

}  // namespace stosym
