#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stosym/gsde.hpp"
#include "stosym/stats.hpp"

using namespace stosym;

namespace {

// state-dependent 2x2 sigma used by several cases
Eigen::MatrixXd bendy_sigma(const Eigen::VectorXd& x)
{
    Eigen::MatrixXd s(2, 2);
    s << 1.0, x[0], std::sin(x[1]), 2.0;
    return s;
}

CadlagPath random_discrete_path(const GroupDescriptor& desc, int steps,
                                std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> times(steps + 1);
    Eigen::MatrixXd values(steps + 1, desc.coordinate_dim());
    GroupElement z = identity(desc);
    values.row(0) = z.coords.transpose();
    for (int i = 1; i <= steps; ++i) {
        times[i] = i;
        Eigen::VectorXd c = identity(desc).coords;
        for (int a = 0; a < c.size(); ++a) c[a] += 0.3 * rng.normal();
        z = mul(GroupElement{desc, c}, z);
        values.row(i) = z.coords.transpose();
    }
    return make_path(desc, PathStyle::DiscreteJump, times, values);
}

}  // namespace

TEST_SUITE_BEGIN("geometrical_sde");

TEST_CASE("identity law and derivative agreement for affine maps")
{
    const auto sde = from_affine(2, 2, bendy_sigma);
    CHECK(identity_defect(sde, 100) < 1e-12);

    Eigen::Vector2d x(0.7, -0.3);
    const auto analytic = sde.d_psi(x);
    const auto fd = fd_d_psi(sde, x);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <
          1e-6 * std::max(1.0, analytic.cwiseAbs().maxCoeff()));
    for (const auto& h : fd_d2_psi(sde, x))
        CHECK(h.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("derivatives of a curved map")
{
    // Psi(x, z) = x e^z: first and second derivative at 0 both equal x
    Gsde sde;
    sde.state_dim = 1;
    sde.driver = GroupDescriptor::additive(1);
    sde.psi = [](const Eigen::VectorXd& x, const GroupElement& z) {
        return Eigen::VectorXd(x * std::exp(z.coords[0]));
    };
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.7);
    CHECK(fd_d_psi(sde, x)(0, 0) == doctest::Approx(1.7).epsilon(1e-7));
    CHECK(fd_d2_psi(sde, x)[0](0, 0) == doctest::Approx(1.7).epsilon(1e-4));
}

TEST_CASE("discrete solve: constant map, unit jump, affine recursion")
{
    const auto desc = GroupDescriptor::product(
        {GroupDescriptor::general_linear(2), GroupDescriptor::additive(2)});

    // constant map: nothing moves
    const auto falling = from_iterated_map(
        2, desc,
        [](const Eigen::VectorXd& x, const GroupElement&) { return x; });
    const auto path = random_discrete_path(desc, 6, 11);
    Eigen::Vector2d x0(0.4, -1.0);
    const auto frozen = solve_discrete(falling, path, x0);
    for (int i = 0; i < frozen.points(); ++i)
        CHECK((frozen.values.row(i).transpose() - x0).norm() == 0.0);

    // Psi(x, (z1, z2)) = z1 x + z2
    const auto affine = from_iterated_map(
        2, desc, [](const Eigen::VectorXd& x, const GroupElement& dz) {
            const Eigen::MatrixXd a = gl_matrix(
                GroupDescriptor::general_linear(2), dz.coords.head(4));
            return Eigen::VectorXd(a * x + dz.coords.tail(2));
        });

    // one unit jump with z1 = I, z2 = v lands on x0 + v
    std::vector<double> times{0, 1};
    Eigen::MatrixXd vals(2, 6);
    vals.row(0) = identity(desc).coords.transpose();
    Eigen::VectorXd after = identity(desc).coords;
    after[4] = 0.5;
    after[5] = -0.25;
    vals.row(1) = after.transpose();
    const auto one_jump = make_path(desc, PathStyle::DiscreteJump, times, vals);
    const auto hop = solve_discrete(affine, one_jump, x0);
    CHECK((hop.values.row(1).transpose() -
           (x0 + Eigen::Vector2d(0.5, -0.25)))
              .norm() < 1e-14);

    // X_l = A_l X_{l-1} + B_l against a hand recursion
    const auto driver = random_discrete_path(desc, 5, 21);
    const auto sol = solve_discrete(affine, driver, x0);
    Eigen::Vector2d x = x0;
    for (int l = 1; l < driver.points(); ++l) {
        const GroupElement before{desc, driver.values.row(l - 1).transpose()};
        const GroupElement now{desc, driver.values.row(l).transpose()};
        const auto dz = jump(now, before);
        const Eigen::MatrixXd a =
            gl_matrix(GroupDescriptor::general_linear(2), dz.coords.head(4));
        x = a * x + dz.coords.tail(2);
        CHECK((sol.values.row(l).transpose() - x).norm() < 1e-12);
    }

    // the style and mismatched groups are rejected
    CHECK_THROWS_AS(solve_grid(affine,
                               make_path(desc, PathStyle::GridSampled,
                                         driver.times, driver.values),
                               x0),
                    std::logic_error);
    CHECK_THROWS_AS(
        solve_discrete(affine, random_discrete_path(
                                   GroupDescriptor::additive(6), 3, 5), x0),
        std::invalid_argument);
}

TEST_CASE("grid solve agrees with discrete solve on flagged re-encodings")
{
    const auto sde = from_affine(2, 2, bendy_sigma);
    const auto discrete =
        random_discrete_path(GroupDescriptor::additive(2), 8, 31);
    std::vector<std::uint8_t> flags(discrete.points(), 1);
    flags[0] = 0;
    const auto regrid = make_path(discrete.desc, PathStyle::GridSampled,
                                  discrete.times, discrete.values, flags);
    Eigen::Vector2d x0(1.0, 2.0);
    const auto a = solve_discrete(sde, discrete, x0);
    const auto b = solve_grid(sde, regrid, x0);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("linear change of variables transports solutions exactly")
{
    Eigen::Matrix2d phi;
    phi << 2.0, 1.0, 0.0, 1.0;
    const Eigen::Matrix2d phi_inv = phi.inverse();

    const auto desc = GroupDescriptor::additive(2);
    auto base_psi = [](const Eigen::VectorXd& x, const GroupElement& z) {
        Eigen::MatrixXd s(2, 2);
        s << 1.0, 0.2 * std::sin(x[0]), 0.0, 1.0;
        return Eigen::VectorXd(x + s * z.coords);
    };
    const auto base = from_iterated_map(2, desc, base_psi);
    const auto moved = from_iterated_map(
        2, desc,
        [phi, phi_inv, base_psi](const Eigen::VectorXd& x,
                                 const GroupElement& z) {
            return Eigen::VectorXd(phi * base_psi(phi_inv * x, z));
        });

    const auto driver = random_discrete_path(desc, 7, 41);
    Eigen::Vector2d x0(0.3, -0.6);
    const auto direct = solve_discrete(base, driver, x0);
    const auto pushed = solve_discrete(moved, driver, phi * x0);
    for (int i = 0; i < direct.points(); ++i) {
        const Eigen::Vector2d lhs = pushed.values.row(i).transpose();
        const Eigen::Vector2d rhs = phi * direct.values.row(i).transpose();
        CHECK((lhs - rhs).norm() < 1e-10);
    }
}

TEST_CASE("grid solve is exact for constant sigma")
{
    Eigen::MatrixXd s(2, 3);
    s << 1.0, -0.5, 2.0, 0.25, 1.5, -1.0;
    const auto sde = from_affine(2, 3, [s](const Eigen::VectorXd&) { return s; });

    DriverSpec spec;
    spec.model = BrownianDriver{2};
    spec.horizon = 1.0;
    spec.dt = 0.05;
    spec.seed = 8;
    const auto z = sample_driver(spec);

    Eigen::Vector2d x0(3.0, -1.0);
    const auto sol = solve_grid(sde, z, x0);
    for (int i = 0; i < z.points(); ++i) {
        const Eigen::Vector2d expect =
            x0 + s * z.values.row(i).transpose();
        CHECK((sol.values.row(i).transpose() - expect).norm() < 1e-12);
    }
}

TEST_CASE("identity sigma reproduces the driver shifted by the start")
{
    const auto sde = from_affine(
        3, 3, [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(3, 3); });
    DriverSpec spec;
    spec.model = BrownianDriver{2};
    spec.horizon = 2.0;
    spec.dt = 0.1;
    spec.seed = 14;
    const auto z = sample_driver(spec);
    Eigen::Vector3d x0(1.0, 2.0, 3.0);
    const auto sol = solve_grid(sde, z, x0);
    CHECK((sol.values.rowwise() - x0.transpose() - z.values)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("zero driver leaves the state alone")
{
    const auto sde = from_affine(2, 2, bendy_sigma);
    std::vector<double> times{0, 0.5, 1.0};
    Eigen::MatrixXd vals = Eigen::MatrixXd::Zero(3, 2);
    const auto z =
        make_path(GroupDescriptor::additive(2), PathStyle::GridSampled, times, vals);
    Eigen::Vector2d x0(0.2, 0.4);
    const auto sol = solve_grid(sde, z, x0);
    for (int i = 0; i < 3; ++i)
        CHECK((sol.values.row(i).transpose() - x0).norm() == 0.0);
}

TEST_CASE("exponential map matches the lognormal mean")
{
    Gsde sde;
    sde.state_dim = 1;
    sde.driver = GroupDescriptor::additive(2);  // clock + one Brownian component
    sde.psi = [](const Eigen::VectorXd& x, const GroupElement& z) {
        return Eigen::VectorXd(x * std::exp(z.coords[1]));
    };
    sde.d_psi = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd d(1, 2);
        d << 0.0, x[0];
        return d;
    };
    sde.d2_psi = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
        h(1, 1) = x[0];
        return std::vector<Eigen::MatrixXd>{h};
    };

    DriverSpec spec;
    spec.model = BrownianDriver{1};
    spec.horizon = 1.0;
    spec.dt = 0.01;

    const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);
    const int paths = 100000;
    std::vector<double> ends(paths);
    for (int i = 0; i < paths; ++i) {
        spec.seed = 123;
        spec.stream = i;
        const auto z = sample_driver(spec);
        const auto sol = solve_grid(sde, z, x0);
        ends[i] = sol.values(sol.points() - 1, 0);
    }
    const auto ci = mc_mean_ci(ends);
    CHECK(std::abs(ci.mean - std::exp(0.5)) < 3.0 * ci.std_error);
}

TEST_CASE("smooth levy construction: drift correction oracles")
{
    JumpMeasure uni;
    uni.total_mass = 1.0;
    uni.dim = 1;
    uni.sample = [](Rng& rng) {
        return Eigen::VectorXd::Constant(1, rng.uniform(-1.0, 1.0));
    };

    const auto zero_map = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::VectorXd::Zero(1);
    };
    const auto linear_map = [](const Eigen::VectorXd&,
                               const Eigen::VectorXd& z) { return z; };
    const auto square_map = [](const Eigen::VectorXd&,
                               const Eigen::VectorXd& z) {
        return Eigen::VectorXd(z.cwiseProduct(z));
    };

    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3);
    double err = 0.0;

    CHECK(levy_drift_correction(zero_map, uni, x, 5, 20000, &err)[0] == 0.0);

    // F = z: integrand z - 1 . z vanishes draw by draw
    CHECK(levy_drift_correction(linear_map, uni, x, 5, 20000)[0] ==
          doctest::Approx(0.0).epsilon(1e-9));

    // F = z^2: integrand z^2 - 2 z^2, integral -1/3
    const auto corr = levy_drift_correction(square_map, uni, x, 5, 200000, &err);
    CHECK(err < 2e-3);
    CHECK(std::abs(corr[0] + 1.0 / 3.0) < 4.0 * err);

    // mu~ = mu - correction = mu + 1/3 inside the built SDE
    const auto mu = [](const Eigen::VectorXd& v) {
        return Eigen::VectorXd(0.0 * v);
    };
    const auto sigma = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Identity(1, 1);
    };
    const auto sde = from_smooth_levy(1, 1, 1, mu, sigma, square_map, uni, 5,
                                      200000);
    CHECK(identity_defect(sde) < 1e-12);
    // advance one pure-time step of length 1: x + mu~ . 1
    GroupElement step = identity(sde.driver);
    step.coords[0] = 1.0;
    const double drift = sde.psi(x, step)[0] - x[0];
    CHECK(std::abs(drift - 1.0 / 3.0) < 4.0 * err);

    // analytic first derivative row: [mu~, sigma, dF(0)] with dF(0) = 0
    const auto d = sde.d_psi(x);
    CHECK(d(0, 1) == 1.0);
    CHECK(std::abs(d(0, 2)) < 1e-10);
    const auto fd = fd_d_psi(sde, x);
    CHECK((d - fd).cwiseAbs().maxCoeff() < 1e-5);

    // a jump map that does not vanish at zero is rejected
    const auto offset_map = [](const Eigen::VectorXd&,
                               const Eigen::VectorXd& z) {
        return Eigen::VectorXd(z.array() + 1.0);
    };
    CHECK_THROWS_AS(
        from_smooth_levy(1, 1, 1, mu, sigma, offset_map, uni, 5, 1000),
        std::invalid_argument);
}

TEST_SUITE_END();
