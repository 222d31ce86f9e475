#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "stosym/affine2d.hpp"
#include "stosym/drivers.hpp"
#include "stosym/rng.hpp"
#include "stosym/transform.hpp"

using namespace stosym;

namespace {

Eigen::Matrix2d rot(double a) {
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

// random walk on GL(2) x R^2 with every step a flagged jump
CadlagPath random_affine_walk(int steps, std::uint64_t seed) {
    const auto desc = affine2d_group();
    Rng rng(seed, 0);
    std::vector<double> times(steps + 1);
    Eigen::MatrixXd values(steps + 1, 6);
    std::vector<std::uint8_t> flags(steps + 1, 1);
    flags[0] = 0;
    times[0] = 0.0;
    GroupElement acc = identity(desc);
    values.row(0) = acc.coords.transpose();
    for (int l = 1; l <= steps; ++l) {
        times[l] = static_cast<double>(l);
        Eigen::VectorXd dz(6);
        dz << 1.0 + 0.25 * rng.normal(), 0.25 * rng.normal(),
            0.25 * rng.normal(), 1.0 + 0.25 * rng.normal(),
            0.5 * rng.normal(), 0.5 * rng.normal();
        acc = mul(element(desc, dz), acc);
        values.row(l) = acc.coords.transpose();
    }
    return make_path(desc, PathStyle::DiscreteJump, times, values, flags);
}

Eigen::VectorXd random_state(Rng& rng) {
    Eigen::VectorXd x(2);
    // stay away from the origin, where the polar gauge value is undefined
    const double radius = 0.5 + 1.5 * rng.uniform();
    const double angle = 6.0 * (rng.uniform() - 0.5);
    x << radius * std::cos(angle), radius * std::sin(angle);
    return x;
}

GroupElement random_driver_value(Rng& rng, double spread) {
    Eigen::VectorXd z(6);
    z << 1.0 + spread * rng.normal(), spread * rng.normal(),
        spread * rng.normal(), 1.0 + spread * rng.normal(),
        spread * rng.normal(), spread * rng.normal();
    return element(affine2d_group(), z);
}

}  // namespace

TEST_SUITE("transformations") {

TEST_CASE("gauge action transport of driver paths") {
    const auto gauge = rotation_gauge(2, true);

    DriverSpec spec;
    spec.model = BrownianDriver{2};
    spec.horizon = 1.0;
    spec.dt = 0.1;
    spec.seed = 7;
    const CadlagPath z = sample_driver(spec);
    REQUIRE(z.steps() == 10);

    SUBCASE("identity gauge values change nothing") {
        std::vector<Eigen::MatrixXd> values(
            z.steps(), Eigen::MatrixXd::Identity(2, 2));
        const CadlagPath out = apply_gauge(gauge, values, z);
        CHECK((out.values - z.values).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK(out.times == z.times);
    }

    SUBCASE("a constant rotation acts linearly on the whole path") {
        const Eigen::MatrixXd g = rot(0.9);
        std::vector<Eigen::MatrixXd> values(z.steps(), g);
        const CadlagPath out = apply_gauge(gauge, values, z);
        Eigen::MatrixXd upsilon = Eigen::MatrixXd::Identity(3, 3);
        upsilon.bottomRightCorner(2, 2) = g;
        for (int i = 0; i < z.points(); ++i) {
            const Eigen::VectorXd expect =
                upsilon * z.values.row(i).transpose();
            CHECK((out.values.row(i).transpose() - expect)
                      .cwiseAbs()
                      .maxCoeff() <= 1e-12);
        }
    }

    SUBCASE("conjugation moves a single jump as computed by hand") {
        const auto desc = affine2d_group();
        Eigen::MatrixXd values(2, 6);
        values.row(0) = identity(desc).coords.transpose();
        values.row(1) << 2, 1, 0, 3, 5, 7;
        const CadlagPath walk =
            make_path(desc, PathStyle::DiscreteJump, {0.0, 1.0}, values,
                      {0, 1});
        Eigen::MatrixXd g(2, 2);
        g << 0, -1, 1, 0;
        const CadlagPath out =
            apply_gauge(*conjugation_gauge_ptr(), {g}, walk);
        Eigen::VectorXd expect(6);
        expect << 3, 0, -1, 2, -7, 5;
        CHECK((out.values.row(1).transpose() - expect).cwiseAbs().maxCoeff() ==
              0.0);
    }

    SUBCASE("rejects mismatched inputs") {
        std::vector<Eigen::MatrixXd> too_few(
            z.steps() - 1, Eigen::MatrixXd::Identity(2, 2));
        CHECK_THROWS_AS(apply_gauge(gauge, too_few, z),
                        std::invalid_argument);
        std::vector<Eigen::MatrixXd> values(
            z.steps(), Eigen::MatrixXd::Identity(2, 2));
        CHECK_THROWS_AS(apply_gauge(*conjugation_gauge_ptr(), values, z),
                        std::invalid_argument);
    }

    SUBCASE("a nonlinear action refuses continuous grid steps") {
        GaugeAction cubed;
        cubed.gauge_dim = 1;
        cubed.group = GroupDescriptor::additive(1);
        cubed.algebra = {Eigen::MatrixXd::Zero(1, 1)};
        cubed.act = [](const Eigen::MatrixXd& g, const GroupElement& z) {
            GroupElement out = z;
            out.coords[0] = g(0, 0) * std::pow(z.coords[0], 3);
            return out;
        };
        cubed.linear = false;
        Eigen::MatrixXd values(2, 1);
        values << 0.0, 0.5;
        const CadlagPath grid =
            make_path(GroupDescriptor::additive(1), PathStyle::GridSampled,
                      {0.0, 1.0}, values);
        std::vector<Eigen::MatrixXd> g(1, Eigen::MatrixXd::Identity(1, 1));
        CHECK_THROWS_AS(apply_gauge(cubed, g, grid), std::invalid_argument);
        const CadlagPath jumps =
            make_path(GroupDescriptor::additive(1), PathStyle::GridSampled,
                      {0.0, 1.0}, values, {0, 1});
        CHECK_NOTHROW(apply_gauge(cubed, g, jumps));
    }
}

TEST_CASE("clock changes relabel times and keep values") {
    const auto desc = GroupDescriptor::additive(1);
    Eigen::MatrixXd values(4, 1);
    values << 0.0, 1.0, 2.0, 3.0;
    const CadlagPath walk = make_path(desc, PathStyle::DiscreteJump,
                                      {0.0, 1.0, 2.0, 3.0}, values,
                                      {0, 1, 1, 1});

    SUBCASE("a doubled clock rate lands the jumps at doubled times") {
        const CadlagPath out =
            time_change(walk, Eigen::VectorXd::Constant(3, 2.0));
        CHECK(out.times == std::vector<double>{0.0, 2.0, 4.0, 6.0});
        CHECK((out.values - walk.values).cwiseAbs().maxCoeff() == 0.0);
        CHECK(out.is_jump == walk.is_jump);
        CHECK(out.style == walk.style);
    }

    SUBCASE("unit rate is the identity") {
        const CadlagPath out =
            time_change(walk, Eigen::VectorXd::Constant(3, 1.0));
        CHECK(out.times == walk.times);
    }

    SUBCASE("a ramp rate accumulates the exact sums") {
        Eigen::MatrixXd v(5, 1);
        v.setZero();
        const CadlagPath grid = make_path(
            desc, PathStyle::GridSampled, {0.0, 0.25, 0.5, 0.75, 1.0}, v);
        Eigen::VectorXd eta(4);
        eta << 0.0 + 1.0, 0.25 + 1.0, 0.5 + 1.0, 0.75 + 1.0;
        const CadlagPath out = time_change(grid, eta);
        for (int i = 1; i < 5; ++i) {
            // sum of (1 + t_l) * 0.25 over left endpoints t_l
            const double expect =
                0.25 * i + 0.0625 * (i * (i - 1)) / 2.0;
            CHECK(out.times[i] == expect);
        }
    }

    SUBCASE("rejects rates at or below the floor and bad sizes") {
        Eigen::VectorXd eta = Eigen::VectorXd::Constant(3, 1.0);
        eta[1] = 0.0;
        CHECK_THROWS_AS(time_change(walk, eta), std::invalid_argument);
        eta[1] = 1e-9;
        CHECK_THROWS_AS(time_change(walk, eta), std::invalid_argument);
        CHECK_THROWS_AS(time_change(walk, Eigen::VectorXd::Constant(2, 1.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("composition and inversion of transformations") {
    Rng rng(31, 0);

    SUBCASE("rotations compose by adding angles") {
        const auto t = compose(affine2d_rotation_t(0.4),
                               affine2d_rotation_t(-1.1));
        const auto direct = affine2d_rotation_t(-0.7);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((t.phi.forward(x) - direct.phi.forward(x))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-12);
            CHECK((transform_gauge_value(t, x) -
                   transform_gauge_value(direct, x))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-12);
        }
    }

    SUBCASE("the polar gauge cancels against its inverse") {
        const auto t = affine2d_polar_t();
        const auto round = compose(invert(t), t);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((round.phi.forward(x) - x).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK((transform_gauge_value(round, x) -
                   Eigen::MatrixXd::Identity(2, 2))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-12);
        }
    }

    SUBCASE("Newton inversion handles a forward-only nonlinear map") {
        StochasticTransformation t;
        t.state_dim = 2;
        t.phi.forward = [](const Eigen::VectorXd& x) {
            Eigen::VectorXd y(2);
            y << x[0] + 0.1 * std::sin(x[1]), x[1] + 0.1 * std::tanh(x[0]);
            return y;
        };
        const auto round = compose(invert(t), t);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((round.phi.forward(x) - x).cwiseAbs().maxCoeff() <= 1e-9);
            const Eigen::MatrixXd j = diffeo_jacobian(t.phi, x);
            const Eigen::MatrixXd j_inv =
                diffeo_jacobian(invert(t).phi, t.phi.forward(x));
            CHECK((j * j_inv - Eigen::MatrixXd::Identity(2, 2))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-5);
        }
    }

    SUBCASE("clock rates multiply and invert") {
        StochasticTransformation t1 = identity_transformation(2);
        t1.eta = [](const Eigen::VectorXd&) { return 2.0; };
        StochasticTransformation t2 = identity_transformation(2);
        t2.eta = [](const Eigen::VectorXd& x) {
            return 1.0 + 0.5 * std::sin(x[0]);
        };
        const auto both = compose(t2, t1);
        const auto back = invert(t2);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK(transform_eta(both, x) ==
                  doctest::Approx(2.0 * (1.0 + 0.5 * std::sin(x[0])))
                      .epsilon(1e-12));
            CHECK(transform_eta(back, x) *
                      transform_eta(t2, x) ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    SUBCASE("composition is associative") {
        const auto t1 = affine2d_rotation_t(0.3);
        const auto t2 = affine2d_polar_t();
        const auto t3 = affine2d_rotation_t(-1.1);
        const auto left = compose(compose(t3, t2), t1);
        const auto right = compose(t3, compose(t2, t1));
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((left.phi.forward(x) - right.phi.forward(x))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-9);
            CHECK((transform_gauge_value(left, x) -
                   transform_gauge_value(right, x))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-9);
        }
    }
}

TEST_CASE("commutators of infinitesimal transformations") {
    Rng rng(47, 0);

    SUBCASE("a field commutes with itself") {
        const auto v = affine2d_rotation_v();
        const auto zero = bracket(v, v);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK(inf_y(zero, x).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK(inf_c(zero, x).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK(inf_tau(zero, x) == 0.0);
        }
    }

    SUBCASE("coordinate fields bracket to the classic answer") {
        InfinitesimalTransformation v1;
        v1.state_dim = 2;
        v1.Y = [](const Eigen::VectorXd&) {
            return Eigen::VectorXd(Eigen::Vector2d(1.0, 0.0));
        };
        InfinitesimalTransformation v2;
        v2.state_dim = 2;
        v2.Y = [](const Eigen::VectorXd& x) {
            return Eigen::VectorXd(Eigen::Vector2d(0.0, x[0]));
        };
        const auto w = bracket(v1, v2);
        const auto w_flip = bracket(v2, v1);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((inf_y(w, x) - Eigen::Vector2d(0.0, 1.0))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-8);
            CHECK((inf_y(w_flip, x) + Eigen::Vector2d(0.0, 1.0))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-8);
        }
    }

    SUBCASE("the rotation field against a constant field") {
        const auto v1 = affine2d_rotation_v();
        InfinitesimalTransformation v2;
        v2.state_dim = 2;
        const Eigen::Vector2d b(0.4, -1.3);
        v2.Y = [b](const Eigen::VectorXd&) { return Eigen::VectorXd(b); };
        const auto w = bracket(v1, v2);
        Eigen::Matrix2d r90;
        r90 << 0, -1, 1, 0;
        const Eigen::Vector2d expect = -(r90 * b);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((inf_y(w, x) - expect).cwiseAbs().maxCoeff() <= 1e-8);
            // both gauge parts are constant in x, so the commutator of the
            // matrices is all that survives, and one of them is zero
            CHECK(inf_c(w, x).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }

    SUBCASE("constant gauge parts bracket to minus their commutator") {
        InfinitesimalTransformation v1;
        v1.state_dim = 2;
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
        a(0, 1) = 1.0;
        v1.C = [a](const Eigen::VectorXd&) { return a; };
        InfinitesimalTransformation v2;
        v2.state_dim = 2;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 2);
        b(1, 0) = 1.0;
        v2.C = [b](const Eigen::VectorXd&) { return b; };
        const auto w = bracket(v1, v2);
        const Eigen::MatrixXd expect = -(a * b - b * a);
        const Eigen::VectorXd x = random_state(rng);
        CHECK((inf_c(w, x) - expect).cwiseAbs().maxCoeff() <= 1e-10);
    }

    SUBCASE("clock parts feel only the transverse derivative") {
        InfinitesimalTransformation v1;
        v1.state_dim = 2;
        v1.Y = [](const Eigen::VectorXd&) {
            return Eigen::VectorXd(Eigen::Vector2d(1.0, 0.0));
        };
        InfinitesimalTransformation v2;
        v2.state_dim = 2;
        v2.tau = [](const Eigen::VectorXd& x) { return x[0]; };
        const auto w = bracket(v1, v2);
        const auto w_flip = bracket(v2, v1);
        const Eigen::VectorXd x = random_state(rng);
        CHECK(inf_tau(w, x) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(inf_tau(w_flip, x) == doctest::Approx(-1.0).epsilon(1e-8));
    }
}

TEST_CASE("push forward along a transformation") {
    Rng rng(59, 0);

    SUBCASE("the identity transformation changes nothing") {
        const auto v = affine2d_rotation_v();
        const auto w = push_forward(identity_transformation(2), v);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((inf_y(w, x) - inf_y(v, x)).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK((inf_c(w, x) - inf_c(v, x)).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(inf_tau(w, x) == inf_tau(v, x));
        }
    }

    SUBCASE("a linear map pushes a constant field through its matrix") {
        Eigen::MatrixXd a(2, 2);
        a << 2.0, 1.0, 0.0, 0.5;
        StochasticTransformation t;
        t.state_dim = 2;
        t.phi = linear_diffeo(a);
        InfinitesimalTransformation v;
        v.state_dim = 2;
        const Eigen::Vector2d b(0.7, -0.2);
        v.Y = [b](const Eigen::VectorXd&) { return Eigen::VectorXd(b); };
        const auto w = push_forward(t, v);
        const Eigen::Vector2d expect = a * b;
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((inf_y(w, x) - expect).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }

    SUBCASE("the polar gauge absorbs the rotation's gauge part") {
        const auto w =
            push_forward(affine2d_polar_t(), affine2d_rotation_v());
        Eigen::Matrix2d r90;
        r90 << 0, -1, 1, 0;
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((inf_y(w, x) - r90 * x).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK(inf_c(w, x).cwiseAbs().maxCoeff() <= 1e-6);
            CHECK(inf_tau(w, x) == 0.0);
        }
    }
}

TEST_CASE("flows of infinitesimal transformations") {
    const auto v = affine2d_rotation_v();

    SUBCASE("zero flow time is the identity") {
        const auto t = flow(v, 0.0);
        const Eigen::Vector2d x(1.3, -0.4);
        CHECK((t.phi.forward(x) - x).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK((transform_gauge_value(t, x) -
               Eigen::MatrixXd::Identity(2, 2))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-14);
    }

    SUBCASE("the rotation field integrates to a rotation") {
        const double a = 1.234;
        const auto t = flow(v, a);
        const Eigen::Vector2d x(0.8, 0.5);
        CHECK((t.phi.forward(x) - rot(a) * x).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((transform_gauge_value(t, x) - rot(a)).cwiseAbs().maxCoeff() <=
              1e-8);
        CHECK((t.phi.inverse(t.phi.forward(x)) - x).cwiseAbs().maxCoeff() <=
              1e-8);
        CHECK(flow_self_check(v, a, x) <= 1e-8);
    }

    SUBCASE("a clock part integrates to an exponential rate") {
        InfinitesimalTransformation v2;
        v2.state_dim = 1;
        v2.tau = [](const Eigen::VectorXd&) { return 1.0; };
        const auto t = flow(v2, 0.7);
        const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
        CHECK(transform_eta(t, x) ==
              doctest::Approx(std::exp(0.7)).epsilon(1e-10));
    }

    SUBCASE("a blowing-up field is reported, not silently clipped") {
        InfinitesimalTransformation v2;
        v2.state_dim = 1;
        v2.Y = [](const Eigen::VectorXd& x) {
            return Eigen::VectorXd(x.array().square().matrix());
        };
        const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
        CHECK_THROWS_AS(flow(v2, 5.0).phi.forward(x), std::runtime_error);
    }
}

TEST_CASE("equation transport") {
    const Gsde sde = affine2d_sde();
    Rng rng(101, 0);

    SUBCASE("the identity transformation returns the same dynamics") {
        const Gsde out = apply_e(identity_transformation(2), sde);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            const GroupElement z = random_driver_value(rng, 0.4);
            CHECK((out.psi(x, z) - sde.psi(x, z)).cwiseAbs().maxCoeff() <=
                  1e-13);
        }
    }

    SUBCASE("the polar gauge produces the first-column form") {
        const Gsde out = apply_e(affine2d_polar_t(), sde);
        const Gsde printed = affine2d_transformed_printed();
        for (int i = 0; i < 20; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            const GroupElement z = random_driver_value(rng, 0.6);
            CHECK((out.psi(x, z) - printed.psi(x, z)).cwiseAbs().maxCoeff() <=
                  1e-9);
        }
    }

    SUBCASE("constant rotations are symmetries of the family") {
        for (const double a : {0.3, -1.2, 2.9}) {
            const Gsde out = apply_e(affine2d_rotation_t(a), sde);
            for (int i = 0; i < 5; ++i) {
                const Eigen::VectorXd x = random_state(rng);
                const GroupElement z = random_driver_value(rng, 0.5);
                CHECK((out.psi(x, z) - sde.psi(x, z)).cwiseAbs().maxCoeff() <=
                      1e-12);
            }
        }
    }

    SUBCASE("transporting in two stages matches one composite stage") {
        const auto t1 = affine2d_rotation_t(0.8);
        const auto t2 = affine2d_polar_t();
        const Gsde staged = apply_e(t2, apply_e(t1, sde));
        const Gsde composite = apply_e(compose(t2, t1), sde);
        for (int i = 0; i < 10; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            const GroupElement z = random_driver_value(rng, 0.5);
            CHECK((staged.psi(x, z) - composite.psi(x, z))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-9);
        }
    }

    SUBCASE("rejects inconsistent transformations") {
        StochasticTransformation bad = identity_transformation(2);
        bad.gauge_value = [](const Eigen::VectorXd&) {
            return Eigen::MatrixXd::Identity(2, 2);
        };
        CHECK_THROWS_AS(apply_e(bad, sde), std::invalid_argument);

        StochasticTransformation wrong_group = identity_transformation(2);
        wrong_group.gauge =
            std::make_shared<const GaugeAction>(rotation_gauge(2, true));
        wrong_group.gauge_value = [](const Eigen::VectorXd&) {
            return Eigen::MatrixXd::Identity(2, 2);
        };
        CHECK_THROWS_AS(apply_e(wrong_group, sde), std::invalid_argument);

        StochasticTransformation clock = identity_transformation(2);
        clock.eta = [](const Eigen::VectorXd&) { return 2.0; };
        CHECK_THROWS_AS(apply_e(clock, sde), std::invalid_argument);
    }
}

TEST_CASE("path transport") {
    const Gsde sde = affine2d_sde();
    const CadlagPath z = random_affine_walk(6, 11);
    Eigen::VectorXd x0(2);
    x0 << 1.2, -0.7;
    const CadlagPath x = solve_discrete(sde, z, x0);

    SUBCASE("the identity transformation is a round trip") {
        const auto [x_out, z_out] =
            apply_p(identity_transformation(2), x, z);
        CHECK((x_out.values - x.values).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((z_out.values - z.values).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(x_out.times == x.times);
    }

    SUBCASE("the transported pair solves the transported dynamics") {
        for (const auto& t :
             {affine2d_polar_t(), affine2d_rotation_t(0.8)}) {
            const auto [x_out, z_out] = apply_p(t, x, z);
            const Gsde moved = apply_e(t, sde);
            const Eigen::VectorXd x0_out =
                t.phi.forward(x0);
            const CadlagPath replay = solve_discrete(moved, z_out, x0_out);
            CHECK((replay.values - x_out.values).cwiseAbs().maxCoeff() <=
                  1e-10);
        }
    }

    SUBCASE("a plain rotation moves states by the matrix") {
        const auto t = affine2d_rotation_t(0.8);
        const auto [x_out, z_out] = apply_p(t, x, z);
        for (int i = 0; i < x.points(); ++i) {
            const Eigen::VectorXd expect =
                rot(0.8) * x.values.row(i).transpose();
            CHECK((x_out.values.row(i).transpose() - expect)
                      .cwiseAbs()
                      .maxCoeff() <= 1e-12);
        }
        CHECK(x_out.times == x.times);
    }

    SUBCASE("a clock change scales increments and relabels times") {
        const auto desc = GroupDescriptor::additive(2);
        Eigen::MatrixXd zv(3, 2);
        zv << 0.0, 0.0, 1.0, 0.3, 2.0, -0.5;
        const CadlagPath walk = make_path(desc, PathStyle::GridSampled,
                                          {0.0, 1.0, 2.0}, zv);
        Eigen::MatrixXd xv(3, 1);
        xv << 0.0, 0.1, 0.2;
        const CadlagPath state =
            make_path(GroupDescriptor::additive(1), PathStyle::GridSampled,
                      {0.0, 1.0, 2.0}, xv);
        StochasticTransformation t = identity_transformation(1);
        t.eta = [](const Eigen::VectorXd&) { return 2.0; };
        t.time = std::make_shared<const TimeAction>(brownian_time(1));
        const auto [x_out, z_out] = apply_p(t, state, walk);
        CHECK(x_out.times == std::vector<double>{0.0, 2.0, 4.0});
        CHECK(z_out.times == x_out.times);
        // each increment picks up (2 dt, sqrt(2) dw)
        CHECK(z_out.values(1, 0) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(z_out.values(1, 1) ==
              doctest::Approx(0.3 * std::sqrt(2.0)).epsilon(1e-12));
        CHECK(z_out.values(2, 0) == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(z_out.values(2, 1) ==
              doctest::Approx(-0.5 * std::sqrt(2.0)).epsilon(1e-12));
        CHECK((x_out.values - state.values).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("rejects mismatched grids") {
        CadlagPath shifted = z;
        shifted.times[2] = 2.5;
        CHECK_THROWS_AS(apply_p(identity_transformation(2), x, shifted),
                        std::invalid_argument);
    }
}

TEST_CASE("planar affine family sanity") {
    Rng rng(211, 0);
    const Gsde sde = affine2d_sde();
    const Gsde printed = affine2d_transformed_printed();

    SUBCASE("both maps fix the identity") {
        CHECK(identity_defect(sde) <= 1e-14);
        CHECK(identity_defect(printed) <= 1e-12);
    }

    SUBCASE("analytic derivatives agree with finite differences") {
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd x = random_state(rng);
            CHECK((sde.d_psi(x) - fd_d_psi(sde, x)).cwiseAbs().maxCoeff() <=
                  1e-9);
            CHECK((printed.d_psi(x) - fd_d_psi(printed, x))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-9);
        }
    }

    SUBCASE("the squared-radius form is the first-column form in polar "
            "coordinates") {
        const Gsde polar = affine2d_pseudo_polar();
        for (int i = 0; i < 20; ++i) {
            Eigen::VectorXd s(2);
            s << 6.0 * (rng.uniform() - 0.5), 0.25 + 3.0 * rng.uniform();
            const GroupElement z = random_driver_value(rng, 0.5);
            Eigen::VectorXd cart(2);
            cart << std::sqrt(s[1]) * std::cos(s[0]),
                std::sqrt(s[1]) * std::sin(s[0]);
            const Eigen::VectorXd next_cart = printed.psi(cart, z);
            const Eigen::VectorXd next_polar = polar.psi(s, z);
            CHECK(next_polar[1] ==
                  doctest::Approx(next_cart.squaredNorm()).epsilon(1e-10));
            CHECK(std::cos(next_polar[0]) ==
                  doctest::Approx(next_cart[0] / next_cart.norm())
                      .epsilon(1e-10));
            CHECK(std::sin(next_polar[0]) ==
                  doctest::Approx(next_cart[1] / next_cart.norm())
                      .epsilon(1e-10));
        }
        // identity at a few base points
        Eigen::VectorXd s(2);
        s << 0.3, 2.0;
        const Eigen::VectorXd same =
            polar.psi(s, identity(affine2d_group()));
        CHECK((same - s).cwiseAbs().maxCoeff() <= 1e-13);
    }
}

}  // TEST_SUITE
