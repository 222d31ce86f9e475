#include "stosym/transform.hpp"

#include <cmath>
#include <stdexcept>

namespace stosym {

namespace {

// Central differences here may be nested (a pushed gauge closure is itself
// differentiated when brackets of pushed fields are formed).  The step must
// then balance truncation h^2 against doubled roundoff eps / (4 h^2); 1e-4
// keeps both below 1e-8, while 1e-6 would leave a 2.5e-5 noise floor.
constexpr double kDirectionalStep = 1e-4;

Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x)
{
    const double h = kDirectionalStep;
    const int m = static_cast<int>(x.size());
    Eigen::VectorXd probe = x;
    probe[0] += h;
    const int rows = static_cast<int>(f(probe).size());
    Eigen::MatrixXd out(rows, m);
    for (int j = 0; j < m; ++j) {
        probe = x;
        probe[j] += h;
        const Eigen::VectorXd up = f(probe);
        probe[j] -= 2.0 * h;
        const Eigen::VectorXd dn = f(probe);
        out.col(j) = (up - dn) / (2.0 * h);
    }
    return out;
}

int gauge_dim_of(const std::shared_ptr<const GaugeAction>& gauge)
{
    return gauge ? gauge->gauge_dim : 1;
}

}  // namespace

Eigen::VectorXd diffeo_invert(const Diffeo& phi, const Eigen::VectorXd& y)
{
    if (phi.inverse) return phi.inverse(y);
    // Newton from y; the maps in play are mild perturbations of the identity
    Eigen::VectorXd x = y;
    for (int it = 0; it < 60; ++it) {
        const Eigen::VectorXd r = phi.forward(x) - y;
        if (r.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + y.cwiseAbs().maxCoeff()))
            return x;
        const Eigen::MatrixXd j = diffeo_jacobian(phi, x);
        x -= j.partialPivLu().solve(r);
    }
    const Eigen::VectorXd r = phi.forward(x) - y;
    if (r.cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + y.cwiseAbs().maxCoeff()))
        return x;
    throw std::runtime_error("map inversion did not converge");
}

Eigen::MatrixXd diffeo_jacobian(const Diffeo& phi, const Eigen::VectorXd& x)
{
    if (phi.jacobian) return phi.jacobian(x);
    return fd_jacobian(phi.forward, x);
}

Diffeo identity_diffeo()
{
    Diffeo d;
    d.forward = [](const Eigen::VectorXd& x) { return x; };
    d.inverse = [](const Eigen::VectorXd& x) { return x; };
    d.jacobian = [](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(
            Eigen::MatrixXd::Identity(x.size(), x.size()));
    };
    return d;
}

Diffeo linear_diffeo(const Eigen::MatrixXd& a)
{
    Diffeo d;
    const Eigen::MatrixXd inv_a = a.inverse();
    d.forward = [a](const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); };
    d.inverse = [inv_a](const Eigen::VectorXd& y) {
        return Eigen::VectorXd(inv_a * y);
    };
    d.jacobian = [a](const Eigen::VectorXd&) { return a; };
    return d;
}

StochasticTransformation identity_transformation(int m)
{
    StochasticTransformation t;
    t.state_dim = m;
    t.phi = identity_diffeo();
    return t;
}

Eigen::MatrixXd transform_gauge_value(const StochasticTransformation& t,
                                      const Eigen::VectorXd& x)
{
    if (t.gauge_value) return t.gauge_value(x);
    const int d = gauge_dim_of(t.gauge);
    return Eigen::MatrixXd::Identity(d, d);
}

double transform_eta(const StochasticTransformation& t,
                     const Eigen::VectorXd& x)
{
    return t.eta ? t.eta(x) : 1.0;
}

Eigen::VectorXd inf_y(const InfinitesimalTransformation& v,
                      const Eigen::VectorXd& x)
{
    if (v.Y) return v.Y(x);
    return Eigen::VectorXd::Zero(v.state_dim);
}

Eigen::MatrixXd inf_y_jacobian(const InfinitesimalTransformation& v,
                               const Eigen::VectorXd& x)
{
    if (v.Y_jacobian) return v.Y_jacobian(x);
    if (!v.Y) return Eigen::MatrixXd::Zero(v.state_dim, v.state_dim);
    return fd_jacobian(v.Y, x);
}

Eigen::MatrixXd inf_c(const InfinitesimalTransformation& v,
                      const Eigen::VectorXd& x)
{
    if (v.C) return v.C(x);
    const int d = gauge_dim_of(v.gauge);
    return Eigen::MatrixXd::Zero(d, d);
}

double inf_tau(const InfinitesimalTransformation& v, const Eigen::VectorXd& x)
{
    return v.tau ? v.tau(x) : 0.0;
}

CadlagPath apply_gauge(const GaugeAction& action,
                       const std::vector<Eigen::MatrixXd>& gauge_values,
                       const CadlagPath& z)
{
    if (!(z.desc == action.group))
        throw std::invalid_argument("path group does not match the action");
    if (static_cast<int>(gauge_values.size()) != z.steps())
        throw std::invalid_argument("need one gauge value per step");
    if (!action.linear && z.style == PathStyle::GridSampled)
        for (int i = 1; i < z.points(); ++i)
            if (!z.is_jump[i])
                throw std::invalid_argument(
                    "nonlinear gauge action on a continuous grid step is "
                    "unsupported");

    Eigen::MatrixXd values(z.points(), z.values.cols());
    values.row(0) = z.values.row(0);
    GroupElement acc{z.desc, z.values.row(0).transpose()};
    for (int i = 1; i < z.points(); ++i) {
        const GroupElement before{z.desc, z.values.row(i - 1).transpose()};
        const GroupElement now{z.desc, z.values.row(i).transpose()};
        const GroupElement moved =
            action.act(gauge_values[i - 1], jump(now, before));
        acc = mul(moved, acc);
        values.row(i) = acc.coords.transpose();
    }
    return make_path(z.desc, z.style, z.times, values, z.is_jump);
}

CadlagPath time_change(const CadlagPath& x, const Eigen::VectorXd& eta_steps,
                       double eta_floor)
{
    if (eta_steps.size() != x.steps())
        throw std::invalid_argument("need one clock rate per step");
    std::vector<double> times(x.points());
    times[0] = x.times[0];
    for (int i = 1; i < x.points(); ++i) {
        const double eta = eta_steps[i - 1];
        if (!(eta >= eta_floor))
            throw std::invalid_argument("clock rate below floor");
        times[i] = times[i - 1] + eta * (x.times[i] - x.times[i - 1]);
    }
    return make_path(x.desc, x.style, times, x.values, x.is_jump);
}

StochasticTransformation compose(const StochasticTransformation& t2,
                                 const StochasticTransformation& t1)
{
    if (t1.state_dim != t2.state_dim)
        throw std::invalid_argument("state dimensions differ");
    StochasticTransformation out;
    out.state_dim = t1.state_dim;
    const Diffeo p1 = t1.phi;
    const Diffeo p2 = t2.phi;
    out.phi.forward = [p1, p2](const Eigen::VectorXd& x) {
        return p2.forward(p1.forward(x));
    };
    out.phi.inverse = [p1, p2](const Eigen::VectorXd& y) {
        return diffeo_invert(p1, diffeo_invert(p2, y));
    };
    out.phi.jacobian = [p1, p2](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(diffeo_jacobian(p2, p1.forward(x)) *
                               diffeo_jacobian(p1, x));
    };
    if (t1.gauge_value || t2.gauge_value) {
        out.gauge_value = [t1, t2](const Eigen::VectorXd& x) {
            return Eigen::MatrixXd(
                transform_gauge_value(t2, t1.phi.forward(x)) *
                transform_gauge_value(t1, x));
        };
    }
    if (t1.eta || t2.eta) {
        out.eta = [t1, t2](const Eigen::VectorXd& x) {
            return transform_eta(t2, t1.phi.forward(x)) *
                   transform_eta(t1, x);
        };
    }
    out.gauge = t2.gauge ? t2.gauge : t1.gauge;
    out.time = t2.time ? t2.time : t1.time;
    return out;
}

StochasticTransformation invert(const StochasticTransformation& t)
{
    StochasticTransformation out;
    out.state_dim = t.state_dim;
    const Diffeo phi = t.phi;
    out.phi.forward = [phi](const Eigen::VectorXd& y) {
        return diffeo_invert(phi, y);
    };
    out.phi.inverse = phi.forward;
    out.phi.jacobian = [phi](const Eigen::VectorXd& y) {
        const Eigen::VectorXd x = diffeo_invert(phi, y);
        return Eigen::MatrixXd(diffeo_jacobian(phi, x).inverse());
    };
    if (t.gauge_value) {
        out.gauge_value = [t, phi](const Eigen::VectorXd& y) {
            return Eigen::MatrixXd(
                t.gauge_value(diffeo_invert(phi, y)).inverse());
        };
    }
    if (t.eta) {
        out.eta = [t, phi](const Eigen::VectorXd& y) {
            return 1.0 / t.eta(diffeo_invert(phi, y));
        };
    }
    out.gauge = t.gauge;
    out.time = t.time;
    return out;
}

InfinitesimalTransformation bracket(const InfinitesimalTransformation& v1,
                                    const InfinitesimalTransformation& v2)
{
    if (v1.state_dim != v2.state_dim)
        throw std::invalid_argument("state dimensions differ");
    InfinitesimalTransformation out;
    out.state_dim = v1.state_dim;
    out.gauge = v1.gauge ? v1.gauge : v2.gauge;
    out.time = v1.time ? v1.time : v2.time;

    out.Y = [v1, v2](const Eigen::VectorXd& x) {
        return Eigen::VectorXd(inf_y_jacobian(v2, x) * inf_y(v1, x) -
                               inf_y_jacobian(v1, x) * inf_y(v2, x));
    };
    // a missing gauge part acts as a zero of the other field's shape, and
    // when both are missing the bracket has none either
    if (v1.C || v2.C)
        out.C = [v1, v2](const Eigen::VectorXd& x) {
            const double h = kDirectionalStep;
            const Eigen::VectorXd y1 = inf_y(v1, x);
            const Eigen::VectorXd y2 = inf_y(v2, x);
            Eigen::MatrixXd c1 = v1.C ? v1.C(x) : Eigen::MatrixXd();
            Eigen::MatrixXd c2 = v2.C ? v2.C(x) : Eigen::MatrixXd();
            if (!v1.C) c1 = Eigen::MatrixXd::Zero(c2.rows(), c2.cols());
            if (!v2.C) c2 = Eigen::MatrixXd::Zero(c1.rows(), c1.cols());
            const Eigen::MatrixXd dc2 =
                v2.C ? Eigen::MatrixXd((v2.C(x + h * y1) -
                                        v2.C(x - h * y1)) /
                                       (2.0 * h))
                     : Eigen::MatrixXd(
                           Eigen::MatrixXd::Zero(c1.rows(), c1.cols()));
            const Eigen::MatrixXd dc1 =
                v1.C ? Eigen::MatrixXd((v1.C(x + h * y2) -
                                        v1.C(x - h * y2)) /
                                       (2.0 * h))
                     : Eigen::MatrixXd(
                           Eigen::MatrixXd::Zero(c2.rows(), c2.cols()));
            return Eigen::MatrixXd(dc2 - dc1 - (c1 * c2 - c2 * c1));
        };
    if (v1.tau || v2.tau)
        out.tau = [v1, v2](const Eigen::VectorXd& x) {
            const double h = kDirectionalStep;
            const Eigen::VectorXd y1 = inf_y(v1, x);
            const Eigen::VectorXd y2 = inf_y(v2, x);
            const double dt2 = (inf_tau(v2, x + h * y1) -
                                inf_tau(v2, x - h * y1)) /
                               (2.0 * h);
            const double dt1 = (inf_tau(v1, x + h * y2) -
                                inf_tau(v1, x - h * y2)) /
                               (2.0 * h);
            return dt2 - dt1;
        };
    return out;
}

InfinitesimalTransformation push_forward(const StochasticTransformation& t,
                                         const InfinitesimalTransformation& v)
{
    if (t.state_dim != v.state_dim)
        throw std::invalid_argument("state dimensions differ");
    InfinitesimalTransformation out;
    out.state_dim = v.state_dim;
    out.gauge = v.gauge ? v.gauge : t.gauge;
    out.time = v.time ? v.time : t.time;

    const Diffeo phi = t.phi;
    out.Y = [phi, v](const Eigen::VectorXd& xp) {
        const Eigen::VectorXd x = diffeo_invert(phi, xp);
        return Eigen::VectorXd(diffeo_jacobian(phi, x) * inf_y(v, x));
    };
    // a field with no gauge or clock part keeps none unless t adds one
    if (v.C || t.gauge_value)
        out.C = [t, v, phi](const Eigen::VectorXd& xp) {
            const Eigen::VectorXd x = diffeo_invert(phi, xp);
            const Eigen::MatrixXd b = t.gauge_value
                                          ? t.gauge_value(x)
                                          : Eigen::MatrixXd();
            const Eigen::MatrixXd c =
                v.C ? v.C(x)
                    : Eigen::MatrixXd(
                          Eigen::MatrixXd::Zero(b.rows(), b.cols()));
            if (!t.gauge_value) return c;
            const Eigen::MatrixXd b_inv = b.inverse();
            Eigen::MatrixXd result = b * c * b_inv;
            const double h = kDirectionalStep;
            const Eigen::VectorXd y = inf_y(v, x);
            const Eigen::MatrixXd db =
                (t.gauge_value(x + h * y) - t.gauge_value(x - h * y)) /
                (2.0 * h);
            result += db * b_inv;
            return result;
        };
    if (v.tau || t.eta)
        out.tau = [t, v, phi](const Eigen::VectorXd& xp) {
            const Eigen::VectorXd x = diffeo_invert(phi, xp);
            double result = inf_tau(v, x);
            if (t.eta) {
                const double h = kDirectionalStep;
                const Eigen::VectorXd y = inf_y(v, x);
                const double de =
                    (t.eta(x + h * y) - t.eta(x - h * y)) / (2.0 * h);
                result += de / t.eta(x);
            }
            return result;
        };
    return out;
}

namespace {

struct FlowState {
    Eigen::VectorXd x;
    Eigen::MatrixXd b;
    double eta;
};

FlowState integrate_flow(const InfinitesimalTransformation& v, double a,
                         const Eigen::VectorXd& x0, int steps_per_unit)
{
    const int n =
        std::max(1, static_cast<int>(std::ceil(std::abs(a) * steps_per_unit)));
    const double h = a / n;
    const int d = static_cast<int>(inf_c(v, x0).rows());

    FlowState s{x0, Eigen::MatrixXd::Identity(d, d), 1.0};
    const auto rhs = [&v](const FlowState& st) {
        FlowState d_dt;
        d_dt.x = inf_y(v, st.x);
        d_dt.b = inf_c(v, st.x) * st.b;
        d_dt.eta = inf_tau(v, st.x) * st.eta;
        return d_dt;
    };
    const auto advance = [](const FlowState& st, const FlowState& k,
                            double w) {
        return FlowState{st.x + w * k.x, st.b + w * k.b,
                         st.eta + w * k.eta};
    };
    for (int i = 0; i < n; ++i) {
        const FlowState k1 = rhs(s);
        const FlowState k2 = rhs(advance(s, k1, h / 2.0));
        const FlowState k3 = rhs(advance(s, k2, h / 2.0));
        const FlowState k4 = rhs(advance(s, k3, h));
        s.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        s.b += (h / 6.0) * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b);
        s.eta += (h / 6.0) * (k1.eta + 2.0 * k2.eta + 2.0 * k3.eta + k4.eta);
        if (s.x.cwiseAbs().maxCoeff() > 1e8)
            throw std::runtime_error("flow diverged");
    }
    return s;
}

}  // namespace

StochasticTransformation flow(const InfinitesimalTransformation& v, double a,
                              int steps_per_unit)
{
    StochasticTransformation out;
    out.state_dim = v.state_dim;
    out.gauge = v.gauge;
    out.time = v.time;
    out.phi.forward = [v, a, steps_per_unit](const Eigen::VectorXd& x) {
        return integrate_flow(v, a, x, steps_per_unit).x;
    };
    out.phi.inverse = [v, a, steps_per_unit](const Eigen::VectorXd& y) {
        return integrate_flow(v, -a, y, steps_per_unit).x;
    };
    if (v.C || v.gauge) {
        out.gauge_value = [v, a, steps_per_unit](const Eigen::VectorXd& x) {
            return integrate_flow(v, a, x, steps_per_unit).b;
        };
    }
    if (v.tau) {
        out.eta = [v, a, steps_per_unit](const Eigen::VectorXd& x) {
            return integrate_flow(v, a, x, steps_per_unit).eta;
        };
    }
    return out;
}

double flow_self_check(const InfinitesimalTransformation& v, double a,
                       const Eigen::VectorXd& x, int steps_per_unit)
{
    const Eigen::VectorXd coarse = integrate_flow(v, a, x, steps_per_unit).x;
    const Eigen::VectorXd fine = integrate_flow(v, a, x, 2 * steps_per_unit).x;
    return (coarse - fine).cwiseAbs().maxCoeff();
}

Gsde apply_e(const StochasticTransformation& t, const Gsde& sde)
{
    if (t.state_dim != sde.state_dim)
        throw std::invalid_argument("state dimensions differ");
    if (t.gauge && !(t.gauge->group == sde.driver))
        throw std::invalid_argument("gauge action group does not match driver");
    if (t.time && !(t.time->group == sde.driver))
        throw std::invalid_argument("time action group does not match driver");
    if (t.gauge_value && !t.gauge)
        throw std::invalid_argument("gauge values present without an action");
    if (t.eta && !t.time)
        throw std::invalid_argument("clock change present without an action");

    Gsde out;
    out.state_dim = sde.state_dim;
    out.driver = sde.driver;
    out.discrete_only = sde.discrete_only;
    out.control = sde.control;
    out.psi = [t, sde](const Eigen::VectorXd& x, const GroupElement& z) {
        const Eigen::VectorXd x0 = diffeo_invert(t.phi, x);
        GroupElement w = z;
        if (t.gauge_value)
            w = t.gauge->act(transform_gauge_value(t, x0).inverse(), w);
        if (t.eta) w = t.time->act(1.0 / transform_eta(t, x0), w);
        return Eigen::VectorXd(t.phi.forward(sde.psi(x0, w)));
    };
    return out;
}

std::pair<CadlagPath, CadlagPath> apply_p(const StochasticTransformation& t,
                                          const CadlagPath& x,
                                          const CadlagPath& z,
                                          double eta_floor)
{
    if (x.points() != z.points())
        throw std::invalid_argument("paths have different grids");
    for (int i = 0; i < x.points(); ++i)
        if (x.times[i] != z.times[i])
            throw std::invalid_argument("paths have different grids");
    if (t.gauge_value && !t.gauge)
        throw std::invalid_argument("gauge values present without an action");
    if (t.eta && !t.time)
        throw std::invalid_argument("clock change present without an action");

    const int n = x.points();

    // driver: increments moved by the time action then the gauge action,
    // both taken at the pre-step state; untouched drivers are copied bitwise
    // so decompose/recompose round-off never leaks in
    Eigen::MatrixXd z_values(n, z.values.cols());
    if (!t.eta && !t.gauge_value) {
        z_values = z.values;
    } else {
        z_values.row(0) = z.values.row(0);
        GroupElement acc{z.desc, z.values.row(0).transpose()};
        for (int i = 1; i < n; ++i) {
            const Eigen::VectorXd x_prev = x.values.row(i - 1).transpose();
            const GroupElement before{z.desc,
                                      z.values.row(i - 1).transpose()};
            const GroupElement now{z.desc, z.values.row(i).transpose()};
            GroupElement dz = jump(now, before);
            if (t.eta) dz = t.time->act(transform_eta(t, x_prev), dz);
            if (t.gauge_value)
                dz = t.gauge->act(transform_gauge_value(t, x_prev), dz);
            acc = mul(dz, acc);
            z_values.row(i) = acc.coords.transpose();
        }
    }

    Eigen::MatrixXd x_values(n, x.values.cols());
    for (int i = 0; i < n; ++i)
        x_values.row(i) =
            t.phi.forward(x.values.row(i).transpose()).transpose();

    std::vector<double> times = x.times;
    if (t.eta) {
        Eigen::VectorXd eta_steps(n - 1);
        for (int i = 1; i < n; ++i) {
            const double e =
                transform_eta(t, x.values.row(i - 1).transpose());
            if (!(e >= eta_floor))
                throw std::invalid_argument("clock rate below floor");
            eta_steps[i - 1] = e;
        }
        for (int i = 1; i < n; ++i)
            times[i] = times[i - 1] +
                       eta_steps[i - 1] * (x.times[i] - x.times[i - 1]);
    }

    auto x_out = make_path(x.desc, x.style, times, x_values, x.is_jump);
    auto z_out = make_path(z.desc, z.style, times, z_values, z.is_jump);
    return {std::move(x_out), std::move(z_out)};
}

}  // namespace stosym
