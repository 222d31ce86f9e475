#include "stosym/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace stosym {

namespace {

using StateFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::VectorXd rk4_step(const StateFn& f, const Eigen::VectorXd& y, double h)
{
    const Eigen::VectorXd k1 = f(y);
    const Eigen::VectorXd k2 = f(y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool outside_box(const Eigen::VectorXd& y, const Eigen::VectorXd& lo,
                 const Eigen::VectorXd& hi)
{
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] < lo[i] || y[i] > hi[i]) return true;
    return false;
}

struct Crossing {
    bool found = false;
    double a = 0.0;  // unsigned parameter marched in the chosen direction
    Eigen::VectorXd point;
};

// marches y' = dir * Y(y) from x until the section functional changes sign,
// then narrows the crossing by bisection; gives up on escape, stall, or
// running past max_parameter.  Only oriented crossings count: the field must
// pierce the section the same way it does at the base point, so an orbit
// meeting the hyperplane again on the far side of the base point keeps going
// instead of stopping at the wrong sheet.
Crossing hunt_crossing(const StateFn& field, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& x0, const Eigen::VectorXd& nhat,
                       double dir, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, const OrbitOptions& opt)
{
    const StateFn f = [&field, dir](const Eigen::VectorXd& y) {
        return Eigen::VectorXd(dir * field(y));
    };
    double a = 0.0;
    Eigen::VectorXd y = x;
    double g = nhat.dot(y - x0);
    while (a < opt.max_parameter) {
        if (field(y).norm() < opt.min_speed) return {};
        const Eigen::VectorXd y1 = rk4_step(f, y, opt.march_step);
        const double a1 = a + opt.march_step;
        const double g1 = nhat.dot(y1 - x0);
        if (g * g1 <= 0.0) {
            double alo = a;
            double ahi = a1;
            Eigen::VectorXd ylo = y;
            double glo = g;
            while (ahi - alo > 1e-14 * (1.0 + std::abs(ahi))) {
                const double amid = 0.5 * (alo + ahi);
                Eigen::VectorXd ym = ylo;
                const double sub = (amid - alo) / 4.0;
                for (int s = 0; s < 4; ++s) ym = rk4_step(f, ym, sub);
                const double gm = nhat.dot(ym - x0);
                if (glo * gm <= 0.0) {
                    ahi = amid;
                } else {
                    alo = amid;
                    ylo = ym;
                    glo = gm;
                }
            }
            Crossing hit;
            hit.found = true;
            hit.a = 0.5 * (alo + ahi);
            Eigen::VectorXd ys = ylo;
            const double sub = (hit.a - alo) / 4.0;
            for (int s = 0; s < 4; ++s) ys = rk4_step(f, ys, sub);
            hit.point = ys;
            if (nhat.dot(field(hit.point)) > 0.0) return hit;
        }
        if (outside_box(y1, lo, hi)) return {};
        y = y1;
        a = a1;
        g = g1;
    }
    return {};
}

struct OrbitSolver {
    StateFn field;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> gauge_coeff;
    std::function<double(const Eigen::VectorXd&)> clock_coeff;
    Eigen::VectorXd x0;
    Eigen::VectorXd nhat;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    OrbitOptions opt;
    int gauge_dim = 0;

    // signed flow time from the closest section crossing, and the crossing
    std::pair<double, Eigen::VectorXd> locate(const Eigen::VectorXd& x) const
    {
        if (x.size() != x0.size())
            throw std::invalid_argument("query has the wrong dimension");
        if (field(x).norm() < opt.min_speed)
            throw std::runtime_error(
                "the vector field vanishes at the query point");
        const double g = nhat.dot(x - x0);
        if (std::abs(g) <= 1e-13 * (1.0 + x.norm()) &&
            nhat.dot(field(x)) > 0.0)
            return {0.0, x};
        const Crossing back =
            hunt_crossing(field, x, x0, nhat, -1.0, lo, hi, opt);
        const Crossing fwd =
            hunt_crossing(field, x, x0, nhat, 1.0, lo, hi, opt);
        if (!back.found && !fwd.found)
            throw std::runtime_error(
                "the orbit never reaches the section inside the domain");
        if (back.found && (!fwd.found || back.a <= fwd.a))
            return {back.a, back.point};
        return {-fwd.a, fwd.point};
    }

    std::pair<Eigen::MatrixXd, double> transport(const Eigen::VectorXd& x) const
    {
        const auto [a_total, section_point] = locate(x);
        const Eigen::Index m = x0.size();
        const int gd = gauge_dim;
        Eigen::VectorXd s(m + gd * gd + 1);
        s.head(m) = section_point;
        if (gd > 0) {
            Eigen::Map<Eigen::MatrixXd>(s.data() + m, gd, gd) =
                Eigen::MatrixXd::Identity(gd, gd);
        }
        s[m + gd * gd] = 1.0;

        const StateFn deriv = [this, m, gd](const Eigen::VectorXd& p) {
            const Eigen::VectorXd y = p.head(m);
            Eigen::VectorXd out(p.size());
            out.head(m) = field(y);
            if (gd > 0) {
                const Eigen::Map<const Eigen::MatrixXd> b(p.data() + m, gd,
                                                          gd);
                const Eigen::MatrixXd c =
                    gauge_coeff ? gauge_coeff(y)
                                : Eigen::MatrixXd(
                                      Eigen::MatrixXd::Zero(gd, gd));
                Eigen::Map<Eigen::MatrixXd>(out.data() + m, gd, gd) = -b * c;
            }
            out[m + gd * gd] =
                clock_coeff ? -clock_coeff(y) * p[m + gd * gd] : 0.0;
            return out;
        };

        const int steps = std::max(
            1, static_cast<int>(std::ceil(std::abs(a_total) *
                                          opt.transport_steps_per_unit)));
        const double da = a_total / steps;
        for (int i = 0; i < steps; ++i) s = rk4_step(deriv, s, da);

        if ((s.head(m) - x).norm() > 1e-5 * (1.0 + x.norm()))
            throw std::logic_error("the orbit retrace missed the query point");
        Eigen::MatrixXd b;
        if (gd > 0)
            b = Eigen::Map<Eigen::MatrixXd>(s.data() + m, gd, gd);
        return {b, s[m + gd * gd]};
    }
};

}  // namespace

CanonicalFormReport canonical_form_check(
    const std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>>&
        fields,
    const std::vector<Eigen::VectorXd>& grid, double tol)
{
    if (fields.empty())
        throw std::invalid_argument("no fields to check");
    if (grid.empty())
        throw std::invalid_argument("empty state grid");
    const int r = static_cast<int>(fields.size());
    double deviation = 0.0;
    for (const Eigen::VectorXd& x : grid) {
        for (int j = 0; j < r; ++j) {
            const Eigen::VectorXd col = fields[j](x);
            const int m = static_cast<int>(col.size());
            if (m < r)
                throw std::invalid_argument(
                    "more fields than state coordinates");
            if (col.size() != x.size())
                throw std::invalid_argument("state dimensions disagree");
            for (int i = 0; i < m; ++i) {
                if (i == j)
                    deviation = std::max(deviation, std::abs(col[i] - 1.0));
                else if (i > j)
                    // below the diagonal, including the rows past r
                    deviation = std::max(deviation, std::abs(col[i]));
            }
        }
    }
    return {deviation <= tol, deviation};
}

GaugeEtaSolution solve_gauge_eta(const InfinitesimalTransformation& v,
                                 const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& box_lo,
                                 const Eigen::VectorXd& box_hi,
                                 const OrbitOptions& options)
{
    if (!v.Y)
        throw std::invalid_argument("the field has no state part");
    const int m = v.state_dim;
    if (x0.size() != m || box_lo.size() != m || box_hi.size() != m)
        throw std::invalid_argument(
            "box and base point must match the state dimension");
    for (int i = 0; i < m; ++i) {
        if (!(box_lo[i] < box_hi[i]))
            throw std::invalid_argument("degenerate box");
        if (x0[i] < box_lo[i] || x0[i] > box_hi[i])
            throw std::invalid_argument(
                "the section base point lies outside the box");
    }
    Eigen::VectorXd nhat = v.Y(x0);
    if (nhat.norm() < options.min_speed)
        throw std::invalid_argument(
            "the field vanishes at the section base point");
    nhat.normalize();

    int gauge_dim = 0;
    if (v.C) {
        const Eigen::MatrixXd c0 = v.C(x0);
        if (c0.rows() != c0.cols())
            throw std::invalid_argument("gauge coefficient must be square");
        gauge_dim = static_cast<int>(c0.rows());
    } else if (v.gauge && !v.gauge->algebra.empty()) {
        gauge_dim = static_cast<int>(v.gauge->algebra.front().rows());
    }

    auto solver = std::make_shared<OrbitSolver>();
    solver->field = v.Y;
    solver->gauge_coeff = v.C;
    solver->clock_coeff = v.tau;
    solver->x0 = x0;
    solver->nhat = nhat;
    const Eigen::VectorXd width = box_hi - box_lo;
    solver->lo = box_lo - options.margin * width;
    solver->hi = box_hi + options.margin * width;
    solver->opt = options;
    solver->gauge_dim = gauge_dim;

    GaugeEtaSolution out;
    if (gauge_dim > 0)
        out.B = [solver](const Eigen::VectorXd& x) {
            return solver->transport(x).first;
        };
    out.eta = [solver](const Eigen::VectorXd& x) {
        return solver->transport(x).second;
    };
    out.orbit_parameter = [solver](const Eigen::VectorXd& x) {
        return solver->locate(x).first;
    };
    return out;
}

TriangularReport triangular_check(const Gsde& sde, int r,
                                  const std::vector<Eigen::VectorXd>& x_grid,
                                  const std::vector<GroupElement>& z_grid,
                                  double tol)
{
    const int m = sde.state_dim;
    if (r < 0 || r > m)
        throw std::invalid_argument(
            "the triangular depth must lie between 0 and the state dimension");
    if (x_grid.size() != z_grid.size())
        throw std::invalid_argument("probe grids have different lengths");
    if (x_grid.empty())
        throw std::invalid_argument("empty probe grid");

    static constexpr double kOffsets[] = {-0.6, -0.25, 0.3, 0.7};
    TriangularReport report;
    report.r = r;
    report.residuals = Eigen::MatrixXd::Zero(m, r);
    for (std::size_t p = 0; p < x_grid.size(); ++p) {
        const Eigen::VectorXd& x = x_grid[p];
        if (x.size() != m)
            throw std::invalid_argument("state dimensions disagree");
        if (!(z_grid[p].desc == sde.driver))
            throw std::invalid_argument("probe on the wrong driver group");
        const Eigen::VectorXd base = sde.psi(x, z_grid[p]);
        for (int i = 0; i < m; ++i) {
            const int probe_cols = i < r ? i + 1 : r;
            const double f0 = base[i] - (i < r ? x[i] : 0.0);
            for (int j = 0; j < probe_cols; ++j) {
                for (const double off : kOffsets) {
                    Eigen::VectorXd xp = x;
                    xp[j] += off;
                    const double f =
                        sde.psi(xp, z_grid[p])[i] - (i < r ? xp[i] : 0.0);
                    report.residuals(i, j) =
                        std::max(report.residuals(i, j), std::abs(f - f0));
                }
            }
        }
    }
    report.max_residual =
        report.residuals.size() > 0 ? report.residuals.maxCoeff() : 0.0;
    report.triangular = report.max_residual <= tol;
    return report;
}

namespace {

// shared stepping loop: trailing coordinates are copied from the given path
// when there is one, so the kept block stays exactly what the caller solved
CadlagPath step_and_fill(const Gsde& sde, const CadlagPath* reduced,
                         const CadlagPath& z, const Eigen::VectorXd& x0)
{
    const int m = sde.state_dim;
    if (x0.size() != m)
        throw std::invalid_argument("initial state has the wrong dimension");
    if (!(z.desc == sde.driver))
        throw std::invalid_argument("driver path lives on the wrong group");
    const bool discrete = z.style == PathStyle::DiscreteJump;
    if (sde.discrete_only && !discrete)
        throw std::logic_error(
            "an iterated-map SDE can only be advanced with solve_discrete");
    const int keep = reduced ? reduced->dim() : 0;

    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> d1 = sde.d_psi;
    if (!d1)
        d1 = [&sde](const Eigen::VectorXd& x) { return fd_d_psi(sde, x); };
    std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> d2 =
        sde.d2_psi;
    if (!d2)
        d2 = [&sde](const Eigen::VectorXd& x) { return fd_d2_psi(sde, x); };

    const int n = z.points();
    const int q = z.desc.coordinate_dim();
    const bool additive = z.desc.kind() == GroupKind::Additive;
    Eigen::MatrixXd values(n, m);
    Eigen::VectorXd x = x0;
    values.row(0) = x.transpose();
    Eigen::VectorXd w(q);
    for (int i = 1; i < n; ++i) {
        const GroupElement before{z.desc, z.values.row(i - 1).transpose()};
        Eigen::VectorXd next;
        if (discrete || z.is_jump[i]) {
            const GroupElement after{z.desc, z.values.row(i).transpose()};
            next = sde.psi(x, jump(after, before));
        } else {
            if (additive)
                w = (z.values.row(i) - z.values.row(i - 1)).transpose();
            else
                w.noalias() =
                    right_translation_jacobian(z.desc, inv(before).coords) *
                    (z.values.row(i) - z.values.row(i - 1)).transpose();
            const Eigen::MatrixXd first = d1(x);
            const auto hessians = d2(x);
            next = x + first * w;
            for (int c = 0; c < m; ++c)
                next[c] += 0.5 * w.dot(hessians[c] * w);
        }
        if (keep > 0)
            next.tail(keep) = reduced->values.row(i).transpose();
        x = next;
        values.row(i) = x.transpose();
    }
    if (discrete)
        return make_path(GroupDescriptor::additive(m),
                         PathStyle::DiscreteJump, z.times, values);
    return make_path(GroupDescriptor::additive(m), PathStyle::GridSampled,
                     z.times, values, z.is_jump);
}

bool same_grid(const CadlagPath& a, const CadlagPath& b)
{
    if (a.points() != b.points()) return false;
    for (int i = 0; i < a.points(); ++i) {
        const double scale =
            std::max({1.0, std::abs(a.times[i]), std::abs(b.times[i])});
        if (std::abs(a.times[i] - b.times[i]) > 1e-12 * scale) return false;
    }
    if (a.style == PathStyle::GridSampled && a.is_jump != b.is_jump)
        return false;
    return true;
}

}  // namespace

CadlagPath reconstruct(const CadlagPath& reduced, const Gsde& sde,
                       const CadlagPath& z, const Eigen::VectorXd& x0)
{
    const int m = sde.state_dim;
    if (reduced.desc.kind() != GroupKind::Additive)
        throw std::invalid_argument(
            "the reduced path must live on an additive group");
    const int keep = reduced.dim();
    if (keep > m)
        throw std::invalid_argument(
            "the reduced path has more coordinates than the state");
    if (reduced.style != z.style)
        throw std::invalid_argument(
            "the reduced path and the driver disagree on the path style");
    if (!same_grid(reduced, z))
        throw std::invalid_argument(
            "the reduced path and the driver live on different grids");
    if (x0.size() != m)
        throw std::invalid_argument("initial state has the wrong dimension");
    if (keep > 0 && (x0.tail(keep) - reduced.values.row(0).transpose())
                            .cwiseAbs()
                            .maxCoeff() > 1e-9)
        throw std::invalid_argument(
            "the initial state disagrees with the reduced path");
    if (keep == m) {
        CadlagPath out = reduced;
        out.desc = GroupDescriptor::additive(m);
        return out;
    }
    return step_and_fill(sde, &reduced, z, x0);
}

CadlagPath reconstruct(const Gsde& sde, const CadlagPath& z,
                       const Eigen::VectorXd& x0)
{
    return step_and_fill(sde, nullptr, z, x0);
}

}  // namespace stosym
