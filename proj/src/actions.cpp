#include "stosym/actions.hpp"

#include <cmath>
#include <stdexcept>

#include "stosym/rng.hpp"

namespace stosym {

namespace {

// series exponential; ample for the small arguments used in generator
// differencing and exact for nilpotent arguments
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a)
{
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd sum = term;
    for (int n = 1; n < 40; ++n) {
        term = (term * a) / n;
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    return sum;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

}  // namespace

Eigen::MatrixXd gauge_upsilon(const GaugeAction& action,
                              const Eigen::MatrixXd& g)
{
    if (action.upsilon) return action.upsilon(g);
    const int q = action.group.coordinate_dim();
    const double h = 1e-6;
    Eigen::MatrixXd out(q, q);
    for (int b = 0; b < q; ++b) {
        GroupElement up = identity(action.group);
        up.coords[b] += h;
        GroupElement dn = identity(action.group);
        dn.coords[b] -= h;
        out.col(b) =
            (action.act(g, up).coords - action.act(g, dn).coords) / (2.0 * h);
    }
    return out;
}

Eigen::VectorXd gauge_generator(const GaugeAction& action, int l,
                                const GroupElement& z)
{
    if (l < 0 || l >= static_cast<int>(action.algebra.size()))
        throw std::invalid_argument("generator index out of range");
    if (!action.generators.empty()) return action.generators[l](z);
    const double h = 1e-6;
    const Eigen::MatrixXd up = matrix_exp(h * action.algebra[l]);
    const Eigen::MatrixXd dn = matrix_exp(-h * action.algebra[l]);
    return (action.act(up, z).coords - action.act(dn, z).coords) / (2.0 * h);
}

Eigen::MatrixXd algebra_matrix(const GaugeAction& action,
                               const Eigen::VectorXd& coeffs)
{
    if (coeffs.size() != static_cast<Eigen::Index>(action.algebra.size()))
        throw std::invalid_argument("coefficient count mismatch");
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Zero(action.gauge_dim, action.gauge_dim);
    for (Eigen::Index l = 0; l < coeffs.size(); ++l)
        out += coeffs[l] * action.algebra[l];
    return out;
}

Eigen::MatrixXd time_gamma(const TimeAction& action, double r)
{
    if (action.gamma) return action.gamma(r);
    const int q = action.group.coordinate_dim();
    const double h = 1e-6;
    Eigen::MatrixXd out(q, q);
    for (int b = 0; b < q; ++b) {
        GroupElement up = identity(action.group);
        up.coords[b] += h;
        GroupElement dn = identity(action.group);
        dn.coords[b] -= h;
        out.col(b) =
            (action.act(r, up).coords - action.act(r, dn).coords) / (2.0 * h);
    }
    return out;
}

Eigen::VectorXd time_generator(const TimeAction& action, const GroupElement& z)
{
    if (action.generator) return action.generator(z);
    const double h = 1e-6;
    return (action.act(1.0 + h, z).coords - action.act(1.0 - h, z).coords) /
           (2.0 * h);
}

double commutation_defect(const GaugeAction& gauge, const TimeAction& time,
                          int n_probes)
{
    if (!(gauge.group == time.group))
        throw std::invalid_argument("actions live on different groups");
    Rng rng(1234);
    const int q = gauge.group.coordinate_dim();
    double worst = 0.0;
    for (int i = 0; i < n_probes; ++i) {
        GroupElement z = identity(gauge.group);
        for (int a = 0; a < q; ++a) z.coords[a] += 0.4 * rng.normal();
        Eigen::VectorXd coeffs(gauge.algebra.size());
        for (Eigen::Index l = 0; l < coeffs.size(); ++l)
            coeffs[l] = rng.normal();
        const Eigen::MatrixXd g = matrix_exp(algebra_matrix(gauge, coeffs));
        const double r = std::exp(rng.uniform(-1.0, 1.0));
        const Eigen::VectorXd ab =
            gauge.act(g, time.act(r, z)).coords;
        const Eigen::VectorXd ba =
            time.act(r, gauge.act(g, z)).coords;
        worst = std::max(worst, (ab - ba).cwiseAbs().maxCoeff());
    }
    return worst;
}

std::vector<Eigen::MatrixXd> skew_basis(int k)
{
    std::vector<Eigen::MatrixXd> basis;
    for (int p = 0; p < k; ++p)
        for (int q = p + 1; q < k; ++q) {
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
            a(p, q) = -1.0;
            a(q, p) = 1.0;
            basis.push_back(a);
        }
    return basis;
}

GaugeAction rotation_gauge(int k, bool include_clock)
{
    const int offset = include_clock ? 1 : 0;
    GaugeAction action;
    action.gauge_dim = k;
    action.group = GroupDescriptor::additive(offset + k);
    action.algebra = skew_basis(k);
    action.act = [k](const Eigen::MatrixXd& g, const GroupElement& z) {
        GroupElement out = z;
        out.coords.tail(k) = g * z.coords.tail(k);
        return out;
    };
    action.upsilon = [k, offset](const Eigen::MatrixXd& g) {
        Eigen::MatrixXd u = Eigen::MatrixXd::Identity(offset + k, offset + k);
        u.bottomRightCorner(k, k) = g;
        return u;
    };
    action.linear = true;
    return action;
}

GaugeAction milstein_gauge(int k)
{
    GaugeAction action;
    action.gauge_dim = k;
    action.group = GroupDescriptor::milstein(k);
    action.algebra = skew_basis(k);
    action.act = [k](const Eigen::MatrixXd& g, const GroupElement& z) {
        GroupElement out = z;
        out.coords.segment(1, k) = g * z.coords.segment(1, k);
        Eigen::MatrixXd b(k, k);
        for (int p = 0; p < k; ++p)
            for (int q = 0; q < k; ++q) b(p, q) = z.coords[1 + k + p * k + q];
        const Eigen::MatrixXd rotated = g * b * g.transpose();
        for (int p = 0; p < k; ++p)
            for (int q = 0; q < k; ++q)
                out.coords[1 + k + p * k + q] = rotated(p, q);
        return out;
    };
    action.upsilon = [k](const Eigen::MatrixXd& g) {
        Eigen::MatrixXd u =
            Eigen::MatrixXd::Zero(1 + k + k * k, 1 + k + k * k);
        u(0, 0) = 1.0;
        u.block(1, 1, k, k) = g;
        u.block(1 + k, 1 + k, k * k, k * k) = kron(g, g);
        return u;
    };
    action.linear = true;
    return action;
}

GaugeAction conjugation_gauge()
{
    GaugeAction action;
    action.gauge_dim = 2;
    action.group = GroupDescriptor::product(
        {GroupDescriptor::general_linear(2), GroupDescriptor::additive(2)});
    Eigen::MatrixXd r(2, 2);
    r << 0.0, -1.0, 1.0, 0.0;
    action.algebra = {r};
    action.act = [](const Eigen::MatrixXd& g, const GroupElement& z) {
        const auto gl = GroupDescriptor::general_linear(2);
        const Eigen::MatrixXd z1 = gl_matrix(gl, z.coords.head(4));
        GroupElement out = z;
        out.coords.head(4) = gl_coords(g * z1 * g.transpose());
        out.coords.tail(2) = g * z.coords.tail(2);
        return out;
    };
    action.upsilon = [](const Eigen::MatrixXd& g) {
        Eigen::MatrixXd u = Eigen::MatrixXd::Zero(6, 6);
        u.topLeftCorner(4, 4) = kron(g, g);
        u.bottomRightCorner(2, 2) = g;
        return u;
    };
    action.linear = true;
    return action;
}

TimeAction brownian_time(int k)
{
    TimeAction action;
    action.group = GroupDescriptor::additive(1 + k);
    action.act = [k](double r, const GroupElement& z) {
        GroupElement out = z;
        out.coords[0] *= r;
        out.coords.tail(k) *= std::sqrt(r);
        return out;
    };
    action.gamma = [k](double r) {
        Eigen::VectorXd d(1 + k);
        d[0] = r;
        d.tail(k).setConstant(std::sqrt(r));
        return Eigen::MatrixXd(d.asDiagonal());
    };
    action.generator = [k](const GroupElement& z) {
        Eigen::VectorXd out(1 + k);
        out[0] = z.coords[0];
        out.tail(k) = 0.5 * z.coords.tail(k);
        return out;
    };
    return action;
}

TimeAction stable_time(double alpha, int n)
{
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw std::invalid_argument("stability index out of range");
    TimeAction action;
    action.group = GroupDescriptor::additive(1 + n);
    action.act = [alpha, n](double r, const GroupElement& z) {
        GroupElement out = z;
        out.coords[0] *= r;
        out.coords.tail(n) *= std::pow(r, 1.0 / alpha);
        return out;
    };
    action.gamma = [alpha, n](double r) {
        Eigen::VectorXd d(1 + n);
        d[0] = r;
        d.tail(n).setConstant(std::pow(r, 1.0 / alpha));
        return Eigen::MatrixXd(d.asDiagonal());
    };
    return action;
}

TimeAction milstein_time(int k)
{
    TimeAction action;
    action.group = GroupDescriptor::milstein(k);
    action.act = [k](double r, const GroupElement& z) {
        GroupElement out = z;
        out.coords[0] *= r;
        out.coords.segment(1, k) *= std::sqrt(r);
        out.coords.tail(k * k) *= r;
        return out;
    };
    action.gamma = [k](double r) {
        Eigen::VectorXd d(1 + k + k * k);
        d[0] = r;
        d.segment(1, k).setConstant(std::sqrt(r));
        d.tail(k * k).setConstant(r);
        return Eigen::MatrixXd(d.asDiagonal());
    };
    return action;
}

}  // namespace stosym
