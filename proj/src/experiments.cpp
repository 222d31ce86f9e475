#include "stosym/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include <Eigen/Dense>

#include "json.hpp"
#include "stosym/affine2d.hpp"
#include "stosym/drivers.hpp"
#include "stosym/gsde.hpp"
#include "stosym/path.hpp"
#include "stosym/reduction.hpp"
#include "stosym/rng.hpp"
#include "stosym/schemes.hpp"
#include "stosym/stats.hpp"
#include "stosym/symmetry.hpp"
#include "stosym/transform.hpp"

namespace stosym {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config plumbing

/// Tracks which keys were read so leftovers can be rejected as typos.
class Config {
public:
    explicit Config(json j) : j_(std::move(j)) {}

    int geti(const std::string& key, int fallback)
    {
        used_.insert(key);
        if (!j_.contains(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() <= 0)
            throw std::invalid_argument("config key \"" + key +
                                        "\" must be a positive integer");
        return v.get<int>();
    }

    double getd(const std::string& key, double fallback)
    {
        used_.insert(key);
        if (!j_.contains(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number() || v.get<double>() <= 0.0)
            throw std::invalid_argument("config key \"" + key +
                                        "\" must be a positive number");
        return v.get<double>();
    }

    void reject_unused() const
    {
        for (const auto& item : j_.items())
            if (used_.find(item.key()) == used_.end())
                throw std::invalid_argument("unknown config key \"" +
                                            item.key() + "\"");
    }

private:
    json j_;
    std::set<std::string> used_{"experiment", "seed", "out"};
};

void add_check(ExperimentReport& r, std::string label, double statistic,
               double threshold, std::string relation = "<=")
{
    ExperimentCheck c;
    c.label = std::move(label);
    c.statistic = statistic;
    c.threshold = threshold;
    c.pass = relation == "<=" ? statistic <= threshold
                              : statistic >= threshold;
    c.relation = std::move(relation);
    r.checks.push_back(std::move(c));
}

void add_law_conditions(ExperimentReport& r, const std::string& prefix,
                        const LawCheckReport& rep)
{
    for (const auto& c : rep.conditions)
        add_check(r, prefix + " " + c.label + " condition", c.statistic,
                  c.threshold);
}

// ---------------------------------------------------------------------------
// shared model pieces

Eigen::Matrix2d rot90()
{
    Eigen::Matrix2d r;
    r << 0.0, -1.0, 1.0, 0.0;
    return r;
}

// analytic derivatives of the planar affine map at a general probe
DeterminingOptions planar_affine_options()
{
    DeterminingOptions opts;
    opts.psi_dx = [](const Eigen::VectorXd&, const GroupElement& z) {
        Eigen::MatrixXd m(2, 2);
        m << z.coords[0], z.coords[1], z.coords[2], z.coords[3];
        return m;
    };
    opts.psi_dz = [](const Eigen::VectorXd& x, const GroupElement&) {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 6);
        d(0, 0) = x[0];
        d(0, 1) = x[1];
        d(1, 2) = x[0];
        d(1, 3) = x[1];
        d(0, 4) = 1.0;
        d(1, 5) = 1.0;
        return d;
    };
    return opts;
}

Eigen::VectorXd planar_walk_increment(Rng& rng)
{
    Eigen::VectorXd z(6);
    z << 1.0 + 0.08 * rng.normal(), 0.08 * rng.normal(), 0.08 * rng.normal(),
        1.0 + 0.08 * rng.normal(), 0.25 * rng.normal(), 0.25 * rng.normal();
    return z;
}

// one multiplicative increment per unit time, mildly contracting on average
DriverSpec planar_walk(double horizon, std::uint64_t seed)
{
    DriverSpec spec;
    DiscreteIidDriver model;
    model.group = affine2d_group();
    model.increment = planar_walk_increment;
    spec.model = model;
    spec.horizon = horizon;
    spec.seed = seed;
    return spec;
}

DiffusionCoefficients isotropic_coefficients()
{
    DiffusionCoefficients co;
    co.m = 2;
    co.k = 2;
    co.mu = [](const Eigen::VectorXd&) {
        return Eigen::VectorXd::Zero(2).eval();
    };
    co.sigma = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Identity(2, 2).eval();
    };
    co.d_mu = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Zero(2, 2).eval();
    };
    co.d_sigma = [](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(2, 2),
                                            Eigen::MatrixXd::Zero(2, 2)};
    };
    return co;
}

// dX = -0.1 X dt + |X| dW, rotation equivariant including the Milstein term
DiffusionCoefficients radial_coefficients()
{
    DiffusionCoefficients co;
    co.m = 2;
    co.k = 2;
    co.mu = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd(-0.1 * x);
    };
    co.sigma = [](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(x.norm() * Eigen::MatrixXd::Identity(2, 2));
    };
    co.d_mu = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd(-0.1 * Eigen::MatrixXd::Identity(2, 2));
    };
    co.d_sigma = [](const Eigen::VectorXd& x) {
        const double r = x.norm();
        std::vector<Eigen::MatrixXd> d;
        for (int j = 0; j < 2; ++j)
            d.push_back(x[j] / r * Eigen::MatrixXd::Identity(2, 2));
        return d;
    };
    return co;
}

InfinitesimalTransformation planar_rotation_field()
{
    InfinitesimalTransformation v;
    v.state_dim = 2;
    v.Y = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(rot90() * x); };
    v.Y_jacobian = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd(rot90());
    };
    v.C = [](const Eigen::VectorXd&) { return Eigen::MatrixXd(rot90()); };
    return v;
}

DiffusionCoefficients spiral_coefficients()
{
    DiffusionCoefficients co;
    co.m = 1;
    co.k = 2;
    co.mu = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, x[0]);
    };
    co.sigma = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd s(1, 2);
        s << x[0] * std::cos(x[0]), x[0] * std::sin(x[0]);
        return s;
    };
    co.d_mu = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Constant(1, 1, 1.0);
    };
    co.d_sigma = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd d(1, 2);
        d << std::cos(x[0]) - x[0] * std::sin(x[0]),
            std::sin(x[0]) + x[0] * std::cos(x[0]);
        return std::vector<Eigen::MatrixXd>{d};
    };
    return co;
}

InfinitesimalTransformation spiral_scaling()
{
    InfinitesimalTransformation v;
    v.state_dim = 1;
    v.Y = [](const Eigen::VectorXd& x) { return x; };
    v.Y_jacobian = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Identity(1, 1);
    };
    v.C = [](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(x[0] * rot90());
    };
    return v;
}

Eigen::VectorXd vec2(double a, double b)
{
    Eigen::VectorXd x(2);
    x << a, b;
    return x;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// paired probe grids with states kept away from the polar singularity
void planar_probes(int n, double min_radius, std::vector<Eigen::VectorXd>& xs,
                   std::vector<GroupElement>& zs)
{
    const auto x_grid = state_grid(2, n);
    const auto z_grid = driver_grid(affine2d_group(), n, 0.6);
    for (int i = 0; i < n; ++i) {
        if (x_grid[i].norm() < min_radius) continue;
        xs.push_back(x_grid[i]);
        zs.push_back(z_grid[i]);
    }
}

// ---------------------------------------------------------------------------
// experiments

ExperimentReport run_sec6_determining(std::uint64_t, Config& cfg)
{
    const int probes = cfg.geti("probes", 200);
    ExperimentReport r;

    const Gsde sde = affine2d_sde();
    const auto x_grid = state_grid(2, probes);
    const auto z_grid = driver_grid(affine2d_group(), probes, 0.6);
    const InfinitesimalTransformation v = affine2d_rotation_v();

    const ResidualReport good =
        determining_residual(sde, v, x_grid, z_grid, planar_affine_options());
    add_check(r, "rotation field residual", good.max_abs, 1e-9);

    InfinitesimalTransformation off = v;
    off.C = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd(1.1 * rot90());
    };
    const ResidualReport bad =
        determining_residual(sde, off, x_grid, z_grid, planar_affine_options());
    add_check(r, "mis-scaled gauge detected", bad.max_abs, 1e-2, ">=");
    return r;
}

ExperimentReport run_sec6_pathwise(std::uint64_t seed, Config& cfg)
{
    const int paths = cfg.geti("paths", 100);
    const int steps = cfg.geti("steps", 1000);
    ExperimentReport r;

    const Gsde sde = affine2d_sde();
    const DriverSpec driver = planar_walk(steps, seed);
    const Eigen::VectorXd x0 = vec2(0.7, -0.4);

    const ResidualReport small = is_symmetry_pathwise(
        sde, affine2d_rotation_t(0.3), x0, driver, paths);
    add_check(r, "recursion residual at angle 0.3", small.max_abs, 1e-10);
    const ResidualReport quarter = is_symmetry_pathwise(
        sde, affine2d_rotation_t(M_PI / 2.0), x0, driver, paths);
    add_check(r, "recursion residual at a right angle", quarter.max_abs, 1e-10);

    const CadlagPath z = sample_driver(driver, seed, 0);
    const CadlagPath x = solve_discrete(sde, z, x0);
    r.artifacts.emplace_back("driver-path.csv", path_to_csv(z));
    r.artifacts.emplace_back("state-path.csv", path_to_csv(x));
    return r;
}

ExperimentReport run_sec6_et_invariance(std::uint64_t, Config& cfg)
{
    const int probes = cfg.geti("probes", 200);
    ExperimentReport r;

    const Gsde sde = affine2d_sde();
    std::vector<Eigen::VectorXd> xs;
    std::vector<GroupElement> zs;
    planar_probes(probes, 0.1, xs, zs);

    for (const double a : {0.3, 1.0}) {
        const Gsde moved = apply_e(affine2d_rotation_t(a), sde);
        double worst = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            worst = std::max(
                worst, max_abs(moved.psi(xs[i], zs[i]) - sde.psi(xs[i], zs[i])));
        std::ostringstream label;
        label << "rotation leaves the equation fixed at angle " << a;
        add_check(r, label.str(), worst, 1e-9);
    }

    const Gsde polar_moved = apply_e(affine2d_polar_t(), sde);
    const Gsde printed = affine2d_transformed_printed();
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        worst = std::max(worst, max_abs(polar_moved.psi(xs[i], zs[i]) -
                                        printed.psi(xs[i], zs[i])));
    add_check(r, "polar transform matches the printed form", worst, 1e-9);
    return r;
}

ExperimentReport run_sec6_reduction_b(std::uint64_t, Config& cfg)
{
    const int n = cfg.geti("grid", 20);
    ExperimentReport r;

    const InfinitesimalTransformation v = affine2d_rotation_v();
    const auto sol =
        solve_gauge_eta(v, vec2(1.0, 0.0), vec2(-2.0, -2.0), vec2(2.0, 2.0));
    const StochasticTransformation polar = affine2d_polar_t();
    const InfinitesimalTransformation pushed = push_forward(polar, v);

    double worst_b = 0.0;
    double worst_c = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Eigen::VectorXd x = vec2(-1.0 + 2.0 * i / (n - 1),
                                           -1.0 + 2.0 * j / (n - 1));
            if (x.norm() < 0.1) continue;
            worst_b = std::max(worst_b, max_abs(sol.B(x) - polar.gauge_value(x)));
            worst_c = std::max(worst_c, max_abs(inf_c(pushed, x)));
        }
    }
    add_check(r, "transported frame matches the polar gauge", worst_b, 1e-6);
    add_check(r, "pushed field carries no gauge part", worst_c, 1e-5);
    return r;
}

ExperimentReport run_sec6_triangular(std::uint64_t seed, Config& cfg)
{
    const int probes = cfg.geti("probes", 60);
    const int steps = cfg.geti("steps", 80);
    ExperimentReport r;

    const Gsde polar_form = affine2d_pseudo_polar();
    std::vector<Eigen::VectorXd> x_grid;
    for (const auto& g : state_grid(2, probes))
        x_grid.push_back(vec2(g[0], 1.4 + 0.3 * g[1]));  // keep rho positive
    const auto z_grid = driver_grid(affine2d_group(), probes, 0.6);
    const TriangularReport shape =
        triangular_check(polar_form, 1, x_grid, z_grid);
    add_check(r, "radius block ignores the angle", shape.max_residual, 1e-9);

    const Gsde sde = affine2d_sde();
    const Eigen::VectorXd x0 = vec2(0.9, 0.5);
    const CadlagPath z = sample_driver(planar_walk(steps, seed));
    const CadlagPath direct = solve_discrete(sde, z, x0);

    double min_radius = 1e300;
    for (int i = 0; i < direct.points(); ++i)
        min_radius = std::min(min_radius, direct.values.row(i).norm());
    add_check(r, "path stays clear of the gauge singularity", min_radius, 0.1,
              ">=");

    const auto moved = apply_p(affine2d_polar_t(), direct, z);
    Eigen::VectorXd s0(2);
    s0 << arg2(x0[0], x0[1]), x0.squaredNorm();
    const CadlagPath polar_path =
        solve_discrete(polar_form, moved.second, s0);
    const CadlagPath reduced =
        make_path(GroupDescriptor::additive(1), PathStyle::DiscreteJump,
                  polar_path.times, polar_path.values.col(1));
    const CadlagPath rebuilt =
        reconstruct(reduced, polar_form, moved.second, s0);
    add_check(r, "angle refill reproduces the reduced solve",
              max_abs(rebuilt.values - polar_path.values), 1e-12);

    double worst = 0.0;
    for (int i = 0; i < direct.points(); ++i) {
        const double root = std::sqrt(rebuilt.values(i, 1));
        const double theta = rebuilt.values(i, 0);
        worst = std::max(
            worst, max_abs(vec2(root * std::cos(theta), root * std::sin(theta))
                               .transpose() -
                           direct.values.row(i)));
    }
    add_check(r, "rebuilt states track the direct run", worst, 1e-8);

    r.artifacts.emplace_back("direct-path.csv", path_to_csv(direct));
    r.artifacts.emplace_back("angle-radius-path.csv", path_to_csv(rebuilt));
    return r;
}

ExperimentReport run_sec6_bessel(std::uint64_t seed, Config& cfg)
{
    const int paths = cfg.geti("paths", 100000);
    const double dt = cfg.getd("dt", 1e-3);
    ExperimentReport r;

    const Gsde sde = affine2d_sde();
    const Eigen::VectorXd x0 = vec2(1.0, 0.0);
    const std::vector<double> times = make_time_grid(1.0, dt);
    const int points = static_cast<int>(times.size());
    int i_half = 0;
    for (int i = 0; i < points; ++i)
        if (times[i] <= 0.5) i_half = i;

    std::vector<double> r_half(paths), r_one(paths);
    std::string sample_csv;

    const auto worker = [&](int begin, int end, bool keep_first) {
        CadlagPath z;
        z.desc = affine2d_group();
        z.style = PathStyle::GridSampled;
        z.times = times;
        z.values.resize(points, 6);
        z.is_jump.assign(points, 0);
        for (int p = begin; p < end; ++p) {
            Rng rng(seed, p);
            // frozen identity matrix block, Brownian shift block
            z.values.row(0) << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0;
            for (int i = 1; i < points; ++i) {
                const double root = std::sqrt(times[i] - times[i - 1]);
                z.values.row(i) << 1.0, 0.0, 0.0, 1.0,
                    z.values(i - 1, 4) + root * rng.normal(),
                    z.values(i - 1, 5) + root * rng.normal();
            }
            const CadlagPath x = solve_grid(sde, z, x0);
            r_half[p] = x.values.row(i_half).squaredNorm();
            r_one[p] = x.values.row(points - 1).squaredNorm();
            if (keep_first && p == 0) sample_csv = path_to_csv(x);
        }
    };

    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int n_threads = std::max(1, std::min({hw, 16, paths}));
    std::vector<std::thread> pool;
    const int block = (paths + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const int begin = t * block;
        const int end = std::min(paths, begin + block);
        if (begin >= end) break;
        pool.emplace_back(worker, begin, end, t == 0);
    }
    for (auto& th : pool) th.join();

    const double r0 = x0.squaredNorm();
    const MeanCi half = mc_mean_ci(r_half);
    const MeanCi one = mc_mean_ci(r_one);
    add_check(r, "squared radius mean at the half time (stderr units)",
              std::abs(half.mean - (r0 + 2.0 * times[i_half])) / half.std_error,
              3.0);
    add_check(r, "squared radius mean at the horizon (stderr units)",
              std::abs(one.mean - (r0 + 2.0)) / one.std_error, 3.0);

    r.artifacts.emplace_back("sample-path.csv", sample_csv);
    return r;
}

ExperimentReport run_alpha_stable_time(std::uint64_t seed, Config& cfg)
{
    const int n_seeds = cfg.geti("seeds", 100);
    const int samples = cfg.geti("samples", 400);
    const double dt = cfg.getd("dt", 0.02);
    ExperimentReport r;

    for (const double alpha : {0.7, 1.0, 1.5}) {
        const TimeAction action = stable_time(alpha, 1);
        for (const double ratio : {2.0, 0.5}) {
            int fails = 0;
            int cauchy_fails = 0;
            for (int s = 0; s < n_seeds; ++s) {
                // the extra half step keeps the clamped grid end from
                // shaving off the last full increment
                DriverSpec base;
                base.model = AlphaStableDriver{alpha, 1};
                base.dt = dt;
                base.horizon = (samples + 0.5) * dt;
                const CadlagPath z = sample_driver(base, seed + s, 0);

                DriverSpec fresh = base;
                fresh.dt = ratio * dt;
                fresh.horizon = (samples + 0.5) * ratio * dt;
                const CadlagPath w = sample_driver(fresh, seed + s, 1);

                std::vector<double> moved(samples), drawn(samples);
                for (int i = 0; i < samples; ++i) {
                    GroupElement inc = element(
                        GroupDescriptor::additive(2),
                        vec2(z.times[i + 1] - z.times[i],
                             z.values(i + 1, 1) - z.values(i, 1)));
                    moved[i] = action.act(ratio, inc).coords[1];
                    drawn[i] = w.values(i + 1, 1) - w.values(i, 1);
                }
                if (!ks_two_sample(moved, drawn).pass) ++fails;
                if (alpha == 1.0) {
                    const double scale = ratio * dt;
                    const auto cdf = [scale](double x) {
                        return 0.5 + std::atan(x / scale) / M_PI;
                    };
                    if (!ks_one_sample(moved, cdf).pass) ++cauchy_fails;
                }

                if (r.artifacts.empty())
                    r.artifacts.emplace_back("sample-driver.csv",
                                             path_to_csv(z));
            }
            std::ostringstream label;
            label << "scaled increments match fresh draws, alpha " << alpha
                  << ", ratio " << ratio << " (failed seeds)";
            add_check(r, label.str(), fails, n_seeds / 20);
            if (alpha == 1.0) {
                std::ostringstream cl;
                cl << "cauchy closed form at ratio " << ratio
                   << " (failed seeds)";
                add_check(r, cl.str(), cauchy_fails, n_seeds / 20);
            }
        }
    }
    return r;
}

ExperimentReport run_levy_gauge_isotropic(std::uint64_t seed, Config& cfg)
{
    const int mc = cfg.geti("mc-samples", 8000);
    ExperimentReport r;

    JumpMeasure measure;
    measure.total_mass = 2.0;
    measure.dim = 3;
    measure.sample = [](Rng& rng) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
        z[1] = 0.5 * rng.normal();
        z[2] = 0.5 * rng.normal();
        return z;
    };
    CharacteristicTriplet triplet;
    triplet.b0 = Eigen::Vector3d(1.0, 0.0, 0.0);
    triplet.A0 = Eigen::Vector3d(0.0, 1.0, 1.0).asDiagonal();
    triplet.jumps = measure;
    const GaugeAction action = rotation_gauge(2, true);
    const std::vector<Eigen::MatrixXd> gs = {rotation2(0.7), rotation2(-2.1)};
    add_law_conditions(r, "isotropic",
                       check_levy_gauge(triplet, action, gs, mc, seed));

    CharacteristicTriplet skewed;
    skewed.b0 = Eigen::Vector3d(1.0, 0.0, 0.0);
    skewed.A0 = Eigen::Vector3d(0.0, 1.0, 2.0).asDiagonal();
    const LawCheckReport bad = check_levy_gauge(
        skewed, action, {rotation2(M_PI / 4.0)}, mc, seed);
    add_check(r, "anisotropic covariance detected",
              bad.condition("diffusion").statistic, 1e-2, ">=");
    return r;
}

ExperimentReport run_discrete_gauge_conjugation(std::uint64_t seed, Config& cfg)
{
    const int mc = cfg.geti("mc-samples", 4000);
    ExperimentReport r;

    const GroupDescriptor group = affine2d_group();
    const GaugeAction action = conjugation_gauge();
    const std::vector<Eigen::MatrixXd> rotations = {rotation2(0.9),
                                                    rotation2(-1.7)};
    add_law_conditions(
        r, "rotation conjugated walk",
        check_discrete_gauge(group, planar_walk_increment, action, rotations,
                             mc, seed));

    Eigen::MatrixXd stretch = Eigen::MatrixXd::Identity(2, 2);
    stretch(0, 0) = 2.0;
    const LawCheckReport bad = check_discrete_gauge(
        group, planar_walk_increment, action, {stretch}, mc, seed);
    double worst_ratio = 0.0;
    for (const auto& c : bad.conditions)
        worst_ratio = std::max(worst_ratio, c.statistic / c.threshold);
    add_check(r, "stretch conjugation detected (worst condition ratio)",
              worst_ratio, 1.0, ">=");
    return r;
}

ExperimentReport run_euler_gauge(std::uint64_t seed, Config& cfg)
{
    const int n_seeds = cfg.geti("seeds", 100);
    const int steps = cfg.geti("steps", 200);
    const double dt = cfg.getd("dt", 0.01);
    ExperimentReport r;

    const DiffusionCoefficients co = isotropic_coefficients();
    const Eigen::VectorXd x0 = vec2(0.6, -0.3);
    int fails = 0;
    for (int s = 0; s < n_seeds; ++s) {
        Rng rng(seed, s);
        const DiscretizedNoise noise =
            sample_brownian_increments(2, uniform_grid(steps * dt, steps), rng);
        const CadlagPath x = euler_solve(co, noise, x0);
        // predictable frame: each step's rotation reads the state before it
        std::vector<Eigen::MatrixXd> b_steps;
        for (int l = 0; l < steps; ++l) {
            const double angle = std::atan2(x.values(l, 1), x.values(l, 0)) +
                                 0.5 * x.values.row(l).norm();
            b_steps.push_back(rotation2(angle));
        }
        const DiscretizedNoise rotated = gauge_rotate_euler(b_steps, noise);
        std::vector<double> pooled;
        pooled.reserve(2 * steps);
        for (int l = 0; l < steps; ++l)
            for (int j = 0; j < 2; ++j)
                pooled.push_back(rotated.dw(l, j) / std::sqrt(dt));
        if (!ks_one_sample(pooled, [](double u) { return normal_cdf(u); })
                 .pass)
            ++fails;
        if (s == 0) {
            r.artifacts.emplace_back("noise.csv", noise_to_csv(noise));
            r.artifacts.emplace_back("rotated-noise.csv",
                                     noise_to_csv(rotated));
        }
    }
    add_check(r, "rotated increments keep the gaussian law (failed seeds)",
              fails, n_seeds / 20);
    return r;
}

ExperimentReport run_milstein_gauge_identity(std::uint64_t seed, Config& cfg)
{
    const int sequences = cfg.geti("sequences", 20);
    const int coarse = cfg.geti("coarse-steps", 10);
    const int fine = cfg.geti("fine-steps", 1000);
    ExperimentReport r;

    double worst_window = 0.0;
    double worst_whole = 0.0;
    for (int s = 0; s < sequences; ++s) {
        Rng rng(seed, s);
        // the frame is drawn before the noise, so it is trivially predictable
        std::vector<Eigen::MatrixXd> b_steps;
        for (int l = 0; l < coarse; ++l)
            b_steps.push_back(rotation2(rng.uniform(-M_PI, M_PI)));

        const int n_fine = coarse * fine;
        const std::vector<double> fine_times = uniform_grid(1.0, n_fine);
        Eigen::MatrixXd w(n_fine + 1, 2);
        w.row(0).setZero();
        for (int i = 0; i < n_fine; ++i) {
            const double root = std::sqrt(fine_times[i + 1] - fine_times[i]);
            w.row(i + 1) = w.row(i) +
                           root * rng.normal_vector(2).transpose();
        }
        const CadlagPath fine_path =
            make_path(GroupDescriptor::additive(2), PathStyle::GridSampled,
                      fine_times, w);
        const std::vector<double> coarse_times = uniform_grid(1.0, coarse);
        const DiscretizedNoise noise = levy_area(fine_path, coarse_times);
        const DiscretizedNoise rotated = gauge_rotate_milstein(b_steps, noise);

        Eigen::MatrixXd wr(n_fine + 1, 2);
        wr.row(0).setZero();
        for (int i = 0; i < n_fine; ++i)
            wr.row(i + 1) =
                wr.row(i) +
                (b_steps[i / fine] * (w.row(i + 1) - w.row(i)).transpose())
                    .transpose();
        const CadlagPath rotated_fine =
            make_path(GroupDescriptor::additive(2), PathStyle::GridSampled,
                      fine_times, wr);
        const DiscretizedNoise direct = levy_area(rotated_fine, coarse_times);

        for (int l = 0; l < coarse; ++l) {
            const double scale = std::max(1.0, max_abs(direct.dww[l]));
            worst_window = std::max(
                {worst_window,
                 max_abs(rotated.dww[l] - direct.dww[l]) / scale,
                 max_abs(rotated.dw.row(l) - direct.dw.row(l)) /
                     std::max(1.0, max_abs(direct.dw.row(l)))});
        }

        // cumulate the rotated increments with the group product and compare
        // against the one-window integral of the rotated fine path
        const CadlagPath cumulated = milstein_group_path(rotated);
        const DiscretizedNoise whole =
            levy_area(rotated_fine, std::vector<double>{0.0, 1.0});
        const Eigen::VectorXd last =
            cumulated.values.row(cumulated.points() - 1).transpose();
        Eigen::MatrixXd total(2, 2);
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) total(p, q) = last[3 + 2 * p + q];
        const double scale = std::max(1.0, max_abs(whole.dww[0]));
        worst_whole =
            std::max({worst_whole, max_abs(total - whole.dww[0]) / scale,
                      max_abs(last.segment(1, 2).transpose() - whole.dw.row(0)) /
                          std::max(1.0, max_abs(whole.dw.row(0)))});

        if (s == 0)
            r.artifacts.emplace_back("rotated-noise.csv",
                                     noise_to_csv(rotated));
    }
    add_check(r, "rotated areas match the rotated fine path (relative)",
              worst_window, 1e-12);
    add_check(r, "cumulated increments match the whole-interval area (relative)",
              worst_whole, 1e-12);
    return r;
}

ExperimentReport run_euler_determining(std::uint64_t, Config& cfg)
{
    const int probes = cfg.geti("probes", 200);
    ExperimentReport r;

    const ResidualReport iso = euler_determining_residual(
        isotropic_coefficients(), planar_rotation_field(),
        euler_grid(2, 2, probes));
    add_check(r, "planar rotation closes the euler equation", iso.max_abs,
              1e-9);

    const ResidualReport spiral = euler_determining_residual(
        spiral_coefficients(), spiral_scaling(), euler_grid(1, 2, probes));
    add_check(r, "spiral scaling closes the euler equation", spiral.max_abs,
              1e-9);

    // quadratic field at the origin: every term except the bare increment
    // square cancels, so the residual must equal dw^2 on the nose
    DiffusionCoefficients unit;
    unit.m = 1;
    unit.k = 1;
    unit.mu = [](const Eigen::VectorXd&) {
        return Eigen::VectorXd::Zero(1).eval();
    };
    unit.sigma = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Identity(1, 1).eval();
    };
    unit.d_mu = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Zero(1, 1).eval();
    };
    unit.d_sigma = [](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
    };
    InfinitesimalTransformation quad;
    quad.state_dim = 1;
    quad.Y = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, x[0] * x[0]);
    };
    double worst = 0.0;
    for (const double dw : {0.4, -0.7, 1.1, 0.05}) {
        EulerProbe p;
        p.x = Eigen::VectorXd::Zero(1);
        p.dt = 0.2;
        p.dw = Eigen::VectorXd::Constant(1, dw);
        const ResidualReport rep = euler_determining_residual(unit, quad, {p});
        worst = std::max(worst, std::abs(rep.max_abs - dw * dw));
    }
    add_check(r, "quadratic field residual equals the squared increment",
              worst, 1e-12);
    return r;
}

ExperimentReport run_milstein_determining(std::uint64_t, Config& cfg)
{
    const int probes = cfg.geti("probes", 200);
    ExperimentReport r;

    const ResidualReport iso = milstein_determining_residual(
        isotropic_coefficients(), planar_rotation_field(),
        milstein_grid(2, 2, probes));
    add_check(r, "planar rotation closes the milstein equation", iso.max_abs,
              1e-9);

    // state-dependent diffusion whose correction term is itself equivariant
    std::vector<MilsteinProbe> away;
    for (const auto& p : milstein_grid(2, 2, 2 * probes))
        if (p.x.norm() >= 0.5 &&
            static_cast<int>(away.size()) < probes)
            away.push_back(p);
    const ResidualReport radial = milstein_determining_residual(
        radial_coefficients(), planar_rotation_field(), away);
    add_check(r, "radial diffusion closes the milstein equation",
              radial.max_abs, 1e-9);
    return r;
}

ExperimentReport run_transform_algebra(std::uint64_t seed, Config& cfg)
{
    const int instances = cfg.geti("instances", 100);
    ExperimentReport r;

    const Gsde sde = affine2d_sde();
    Rng rng(seed);

    const auto random_transformation = [&rng]() {
        StochasticTransformation t;
        t.state_dim = 2;
        const double angle = rng.uniform(-1.0, 1.0);
        const double s0 = std::exp(rng.uniform(-0.3, 0.3));
        const double s1 = std::exp(rng.uniform(-0.3, 0.3));
        Eigen::Matrix2d m = rotation2(angle);
        m.col(0) *= s0;
        m.col(1) *= s1;
        t.phi = linear_diffeo(m);
        const double c0 = rng.uniform(-0.8, 0.8);
        const double c1 = rng.uniform(-0.4, 0.4);
        t.gauge_value = [c0, c1](const Eigen::VectorXd& x) {
            return Eigen::MatrixXd(rotation2(c0 + c1 * x[0]));
        };
        t.gauge = conjugation_gauge_ptr();
        return t;
    };
    const auto random_field = [&rng]() {
        InfinitesimalTransformation v;
        v.state_dim = 2;
        Eigen::Matrix2d a;
        a << rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8),
            rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8);
        const Eigen::Vector2d b(rng.uniform(-0.8, 0.8),
                                rng.uniform(-0.8, 0.8));
        v.Y = [a, b](const Eigen::VectorXd& x) {
            return Eigen::VectorXd(a * x + b);
        };
        v.Y_jacobian = [a](const Eigen::VectorXd&) {
            return Eigen::MatrixXd(a);
        };
        const double c0 = rng.uniform(-0.8, 0.8);
        const double c1 = rng.uniform(-0.4, 0.4);
        v.C = [c0, c1](const Eigen::VectorXd& x) {
            return Eigen::MatrixXd((c0 + c1 * x[1]) * rot90());
        };
        v.gauge = conjugation_gauge_ptr();
        return v;
    };

    double worst_assoc = 0.0;
    double worst_inverse = 0.0;
    double worst_functor = 0.0;
    double worst_bracket = 0.0;
    const auto z_probes = driver_grid(affine2d_group(), 3, 0.4);
    for (int i = 0; i < instances; ++i) {
        const StochasticTransformation t1 = random_transformation();
        const StochasticTransformation t2 = random_transformation();
        const StochasticTransformation t3 = random_transformation();
        const InfinitesimalTransformation v1 = random_field();
        const InfinitesimalTransformation v2 = random_field();
        std::vector<Eigen::VectorXd> probes;
        for (int p = 0; p < 3; ++p)
            probes.push_back(
                vec2(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)));

        const StochasticTransformation left =
            compose(t3, compose(t2, t1));
        const StochasticTransformation right =
            compose(compose(t3, t2), t1);
        const StochasticTransformation round = compose(invert(t1), t1);
        const StochasticTransformation round2 = compose(t1, invert(t1));
        const Gsde chained = apply_e(compose(t2, t1), sde);
        const Gsde stacked = apply_e(t2, apply_e(t1, sde));
        const InfinitesimalTransformation pushed_bracket =
            push_forward(t1, bracket(v1, v2));
        const InfinitesimalTransformation bracketed_push =
            bracket(push_forward(t1, v1), push_forward(t1, v2));

        for (std::size_t p = 0; p < probes.size(); ++p) {
            const Eigen::VectorXd& x = probes[p];
            worst_assoc = std::max(
                {worst_assoc,
                 max_abs(left.phi.forward(x) - right.phi.forward(x)),
                 max_abs(transform_gauge_value(left, x) -
                         transform_gauge_value(right, x))});
            worst_inverse = std::max(
                {worst_inverse, max_abs(round.phi.forward(x) - x),
                 max_abs(transform_gauge_value(round, x) -
                         Eigen::MatrixXd::Identity(2, 2)),
                 max_abs(round2.phi.forward(x) - x),
                 max_abs(transform_gauge_value(round2, x) -
                         Eigen::MatrixXd::Identity(2, 2))});
            worst_functor = std::max(
                worst_functor,
                max_abs(chained.psi(x, z_probes[p]) -
                        stacked.psi(x, z_probes[p])));
            worst_bracket = std::max(
                {worst_bracket,
                 max_abs(inf_y(pushed_bracket, x) - inf_y(bracketed_push, x)),
                 max_abs(inf_c(pushed_bracket, x) -
                         inf_c(bracketed_push, x))});
        }
    }
    add_check(r, "composition is associative", worst_assoc, 1e-5);
    add_check(r, "inverses cancel on both sides", worst_inverse, 1e-5);
    add_check(r, "equation transport respects composition", worst_functor,
              1e-5);
    add_check(r, "pushforward preserves brackets", worst_bracket, 1e-5);
    return r;
}

// ---------------------------------------------------------------------------
// registry

using Runner = ExperimentReport (*)(std::uint64_t, Config&);

const std::vector<std::pair<std::string, Runner>>& registry()
{
    static const std::vector<std::pair<std::string, Runner>> table = {
        {"sec6-determining", run_sec6_determining},
        {"sec6-pathwise", run_sec6_pathwise},
        {"sec6-ET-invariance", run_sec6_et_invariance},
        {"sec6-reduction-B", run_sec6_reduction_b},
        {"sec6-triangular", run_sec6_triangular},
        {"sec6-bessel", run_sec6_bessel},
        {"alpha-stable-time", run_alpha_stable_time},
        {"levy-gauge-isotropic", run_levy_gauge_isotropic},
        {"discrete-gauge-conjugation", run_discrete_gauge_conjugation},
        {"euler-gauge", run_euler_gauge},
        {"milstein-gauge-identity", run_milstein_gauge_identity},
        {"euler-determining", run_euler_determining},
        {"milstein-determining", run_milstein_determining},
        {"transform-algebra", run_transform_algebra},
    };
    return table;
}

}  // namespace

std::vector<std::string> experiment_names()
{
    std::vector<std::string> names;
    for (const auto& entry : registry()) names.push_back(entry.first);
    return names;
}

ExperimentReport run_experiment(const std::string& config_json,
                                std::optional<std::uint64_t> seed_override)
{
    json j = json::parse(config_json);
    if (!j.is_object())
        throw std::invalid_argument("the config must be a json object");
    if (!j.contains("experiment") || !j.at("experiment").is_string())
        throw std::invalid_argument(
            "the config needs an \"experiment\" name");
    const std::string name = j.at("experiment").get<std::string>();

    const Runner* runner = nullptr;
    for (const auto& entry : registry())
        if (entry.first == name) runner = &entry.second;
    if (runner == nullptr) {
        std::string msg = "unknown experiment \"" + name + "\"; valid names:";
        for (const auto& entry : registry())
            msg += " " + entry.first + ",";
        msg.back() = ' ';
        msg.pop_back();
        throw std::invalid_argument(msg);
    }

    std::uint64_t seed = 0;
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned())
            throw std::invalid_argument(
                "the seed must be a non-negative integer");
        seed = j.at("seed").get<std::uint64_t>();
    }
    if (seed_override) seed = *seed_override;
    if (j.contains("out") && !j.at("out").is_string())
        throw std::invalid_argument("the out field must be a string");

    Config cfg(j);
    ExperimentReport report = (*runner)(seed, cfg);
    cfg.reject_unused();

    report.name = name;
    report.seed = seed;
    report.pass = true;
    for (const auto& c : report.checks) report.pass = report.pass && c.pass;
    return report;
}

std::string report_to_json(const ExperimentReport& r)
{
    json out;
    out["experiment"] = r.name;
    out["seed"] = r.seed;
    out["pass"] = r.pass;
    json checks = json::array();
    for (const auto& c : r.checks) {
        json item;
        item["label"] = c.label;
        item["statistic"] = c.statistic;
        item["threshold"] = c.threshold;
        item["relation"] = c.relation;
        item["pass"] = c.pass;
        checks.push_back(item);
    }
    out["checks"] = checks;
    json files = json::array();
    for (const auto& a : r.artifacts) files.push_back(a.first);
    out["artifacts"] = files;
    return out.dump(2) + "\n";
}

}  // namespace stosym
