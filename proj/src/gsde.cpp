#include "stosym/gsde.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "stosym/rng.hpp"

namespace stosym {

namespace {

void check_state_dim(const Gsde& sde, const Eigen::VectorXd& x0)
{
    if (static_cast<int>(x0.size()) != sde.state_dim)
        throw std::invalid_argument("initial state has wrong dimension");
}

GroupElement displaced_identity(const GroupDescriptor& desc, int a, double h)
{
    GroupElement e = identity(desc);
    e.coords[a] += h;
    return e;
}

}  // namespace

double identity_defect(const Gsde& sde, int n_probes, double half_width)
{
    const GroupElement one = identity(sde.driver);
    QuasiRandom probe(sde.state_dim);
    double worst = 0.0;
    for (int i = 0; i < n_probes; ++i) {
        Eigen::VectorXd x = probe.next();
        x = (2.0 * x.array() - 1.0) * half_width;
        const Eigen::VectorXd y = sde.psi(x, one);
        worst = std::max(worst, (y - x).cwiseAbs().maxCoeff());
    }
    return worst;
}

Eigen::MatrixXd fd_d_psi(const Gsde& sde, const Eigen::VectorXd& x, double h)
{
    const int q = sde.driver.coordinate_dim();
    Eigen::MatrixXd out(sde.state_dim, q);
    for (int a = 0; a < q; ++a) {
        const Eigen::VectorXd up = sde.psi(x, displaced_identity(sde.driver, a, h));
        const Eigen::VectorXd dn = sde.psi(x, displaced_identity(sde.driver, a, -h));
        out.col(a) = (up - dn) / (2.0 * h);
    }
    return out;
}

std::vector<Eigen::MatrixXd> fd_d2_psi(const Gsde& sde,
                                       const Eigen::VectorXd& x, double h)
{
    const int q = sde.driver.coordinate_dim();
    const Eigen::VectorXd base = sde.psi(x, identity(sde.driver));
    Eigen::MatrixXd mixed(sde.state_dim, q * q);
    for (int a = 0; a < q; ++a) {
        const Eigen::VectorXd up = sde.psi(x, displaced_identity(sde.driver, a, h));
        const Eigen::VectorXd dn = sde.psi(x, displaced_identity(sde.driver, a, -h));
        mixed.col(a * q + a) = (up - 2.0 * base + dn) / (h * h);
        for (int b = a + 1; b < q; ++b) {
            GroupElement pp = displaced_identity(sde.driver, a, h);
            pp.coords[b] += h;
            GroupElement pm = displaced_identity(sde.driver, a, h);
            pm.coords[b] -= h;
            GroupElement mp = displaced_identity(sde.driver, a, -h);
            mp.coords[b] += h;
            GroupElement mm = displaced_identity(sde.driver, a, -h);
            mm.coords[b] -= h;
            const Eigen::VectorXd d = (sde.psi(x, pp) - sde.psi(x, pm) -
                                       sde.psi(x, mp) + sde.psi(x, mm)) /
                                      (4.0 * h * h);
            mixed.col(a * q + b) = d;
            mixed.col(b * q + a) = d;
        }
    }
    std::vector<Eigen::MatrixXd> out(sde.state_dim);
    for (int i = 0; i < sde.state_dim; ++i) {
        out[i].resize(q, q);
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b) out[i](a, b) = mixed(i, a * q + b);
    }
    return out;
}

CadlagPath solve_discrete(const Gsde& sde, const CadlagPath& z,
                          const Eigen::VectorXd& x0)
{
    check_state_dim(sde, x0);
    if (!(z.desc == sde.driver))
        throw std::invalid_argument("driver path lives on the wrong group");
    if (z.style != PathStyle::DiscreteJump)
        throw std::invalid_argument("solve_discrete needs a discrete-jump path");

    const int n = z.points();
    Eigen::MatrixXd values(n, sde.state_dim);
    Eigen::VectorXd x = x0;
    values.row(0) = x.transpose();
    for (int i = 1; i < n; ++i) {
        const GroupElement before{z.desc, z.values.row(i - 1).transpose()};
        const GroupElement after{z.desc, z.values.row(i).transpose()};
        x = sde.psi(x, jump(after, before));
        values.row(i) = x.transpose();
    }
    return make_path(GroupDescriptor::additive(sde.state_dim),
                     PathStyle::DiscreteJump, z.times, values);
}

CadlagPath solve_grid(const Gsde& sde, const CadlagPath& z,
                      const Eigen::VectorXd& x0)
{
    check_state_dim(sde, x0);
    if (sde.discrete_only)
        throw std::logic_error(
            "an iterated-map SDE can only be advanced with solve_discrete");
    if (!(z.desc == sde.driver))
        throw std::invalid_argument("driver path lives on the wrong group");
    if (z.style != PathStyle::GridSampled)
        throw std::invalid_argument("solve_grid needs a grid-sampled path");

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
    Eigen::MatrixXd values(n, sde.state_dim);
    Eigen::VectorXd x = x0;
    values.row(0) = x.transpose();
    Eigen::VectorXd w(q);
    for (int i = 1; i < n; ++i) {
        const GroupElement before{z.desc, z.values.row(i - 1).transpose()};
        if (z.is_jump[i]) {
            const GroupElement after{z.desc, z.values.row(i).transpose()};
            x = sde.psi(x, jump(after, before));
        } else if (additive) {
            // the chart increment is just dz on an abelian driver
            w = (z.values.row(i) - z.values.row(i - 1)).transpose();
            const Eigen::MatrixXd first = d1(x);
            const auto hessians = d2(x);
            Eigen::VectorXd next = x + first * w;
            for (int c = 0; c < sde.state_dim; ++c)
                next[c] += 0.5 * w.dot(hessians[c] * w);
            x = next;
        } else {
            // z' -> z' z^{-1} is affine on the supported groups, so the
            // chart increment is the exact constant Jacobian times dz
            const Eigen::MatrixXd jac =
                right_translation_jacobian(z.desc, inv(before).coords);
            w.noalias() =
                jac * (z.values.row(i) - z.values.row(i - 1)).transpose();
            const Eigen::MatrixXd first = d1(x);
            const auto hessians = d2(x);
            Eigen::VectorXd next = x + first * w;
            for (int c = 0; c < sde.state_dim; ++c)
                next[c] += 0.5 * w.dot(hessians[c] * w);
            x = next;
        }
        values.row(i) = x.transpose();
    }
    return make_path(GroupDescriptor::additive(sde.state_dim),
                     PathStyle::GridSampled, z.times, values, z.is_jump);
}

Gsde from_affine(int m, int n,
                 std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> sigma)
{
    Gsde sde;
    sde.state_dim = m;
    sde.driver = GroupDescriptor::additive(n);
    sde.psi = [sigma, m, n](const Eigen::VectorXd& x, const GroupElement& z) {
        const Eigen::MatrixXd s = sigma(x);
        if (s.rows() != m || s.cols() != n)
            throw std::invalid_argument("sigma has the wrong shape");
        return Eigen::VectorXd(x + s * z.coords);
    };
    sde.d_psi = sigma;
    sde.d2_psi = [m, n](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>(m, Eigen::MatrixXd::Zero(n, n));
    };
    return sde;
}

Eigen::VectorXd levy_drift_correction(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                        const Eigen::VectorXd&)>& jump_map,
    const JumpMeasure& nu0, const Eigen::VectorXd& x, std::uint64_t seed,
    int n_mc, double* stderr_out)
{
    const int m = static_cast<int>(jump_map(x, Eigen::VectorXd::Zero(nu0.dim)).size());
    Rng rng(seed, 0xC011EC7ull);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(m);
    const double h = 1e-5;
    Eigen::VectorXd probe(nu0.dim);
    for (int i = 0; i < n_mc; ++i) {
        const Eigen::VectorXd zeta = nu0.sample(rng);
        if (zeta.norm() > 1.0) continue;
        // integrand F(x, z) - dF/dz(x, z) . z, derivative at the draw itself
        Eigen::VectorXd term = jump_map(x, zeta);
        for (int a = 0; a < nu0.dim; ++a) {
            probe = zeta;
            probe[a] += h;
            const Eigen::VectorXd up = jump_map(x, probe);
            probe[a] -= 2.0 * h;
            const Eigen::VectorXd dn = jump_map(x, probe);
            term -= (up - dn) * (zeta[a] / (2.0 * h));
        }
        sum += term;
        sumsq += term.cwiseProduct(term);
    }
    const Eigen::VectorXd mean = sum / n_mc;
    if (stderr_out) {
        double worst = 0.0;
        for (int c = 0; c < m; ++c) {
            const double var =
                std::max(0.0, sumsq[c] / n_mc - mean[c] * mean[c]);
            worst = std::max(worst, std::sqrt(var / n_mc));
        }
        *stderr_out = nu0.total_mass * worst;
    }
    return nu0.total_mass * mean;
}

Gsde from_smooth_levy(
    int m, int k, int j,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> mu,
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> sigma,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                  const Eigen::VectorXd&)> jump_map,
    const JumpMeasure& nu0, std::uint64_t seed, int n_mc)
{
    if (nu0.dim != j) throw std::invalid_argument("jump dimension mismatch");

    {
        // the map must vanish at zero jump or Psi(x, 1) = x fails
        QuasiRandom probe(m);
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(j);
        for (int i = 0; i < 20; ++i) {
            Eigen::VectorXd x = probe.next();
            x = (2.0 * x.array() - 1.0) * 2.0;
            if (jump_map(x, zero).cwiseAbs().maxCoeff() > 1e-10)
                throw std::invalid_argument("jump map does not vanish at zero");
        }
    }

    // one shared cloud of draws keeps mu~ deterministic and cheap per call
    auto draws = std::make_shared<std::vector<Eigen::VectorXd>>();
    {
        Rng rng(seed, 0xC011EC7ull);
        draws->reserve(n_mc);
        for (int i = 0; i < n_mc; ++i) draws->push_back(nu0.sample(rng));
    }
    const double mass = nu0.total_mass;
    auto mu_tilde = [mu, jump_map, draws, mass, j,
                     m](const Eigen::VectorXd& x) {
        Eigen::VectorXd corr = Eigen::VectorXd::Zero(m);
        const double h = 1e-5;
        Eigen::VectorXd probe(j);
        for (const auto& zeta : *draws) {
            if (zeta.norm() > 1.0) continue;
            Eigen::VectorXd term = jump_map(x, zeta);
            for (int a = 0; a < j; ++a) {
                probe = zeta;
                probe[a] += h;
                const Eigen::VectorXd up = jump_map(x, probe);
                probe[a] -= 2.0 * h;
                const Eigen::VectorXd dn = jump_map(x, probe);
                term -= (up - dn) * (zeta[a] / (2.0 * h));
            }
            corr += term;
        }
        corr *= mass / static_cast<double>(draws->size());
        return Eigen::VectorXd(mu(x) - corr);
    };

    Gsde sde;
    sde.state_dim = m;
    sde.driver = GroupDescriptor::additive(1 + k + j);
    sde.psi = [mu_tilde, sigma, jump_map, m, k,
               j](const Eigen::VectorXd& x, const GroupElement& z) {
        const double s = z.coords[0];
        const Eigen::VectorXd w = z.coords.segment(1, k);
        const Eigen::VectorXd l = z.coords.segment(1 + k, j);
        return Eigen::VectorXd(x + mu_tilde(x) * s + sigma(x) * w +
                               jump_map(x, l));
    };
    // time and Brownian blocks are linear in z; only the jump block bends
    sde.d_psi = [mu_tilde, sigma, jump_map, m, k, j](const Eigen::VectorXd& x) {
        Eigen::MatrixXd out(m, 1 + k + j);
        out.col(0) = mu_tilde(x);
        out.block(0, 1, m, k) = sigma(x);
        const double h = 1e-5;
        Eigen::VectorXd probe = Eigen::VectorXd::Zero(j);
        for (int a = 0; a < j; ++a) {
            probe[a] = h;
            const Eigen::VectorXd up = jump_map(x, probe);
            probe[a] = -h;
            const Eigen::VectorXd dn = jump_map(x, probe);
            probe[a] = 0.0;
            out.col(1 + k + a) = (up - dn) / (2.0 * h);
        }
        return out;
    };
    return sde;
}

Gsde from_iterated_map(
    int m, const GroupDescriptor& group,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const GroupElement&)>
        map)
{
    Gsde sde;
    sde.state_dim = m;
    sde.driver = group;
    sde.psi = std::move(map);
    sde.discrete_only = true;
    return sde;
}

}  // namespace stosym
