#include "stosym/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stosym {

namespace {

// compensator draws must not collide with the path's own stream
constexpr std::uint64_t kCompensatorStreamOffset = 1ull << 32;

Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& a0)
{
    if (a0.rows() != a0.cols())
        throw std::invalid_argument("covariance must be square");
    if ((a0 - a0.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("covariance must be symmetric");
    if (a0.cwiseAbs().maxCoeff() == 0.0)
        return Eigen::MatrixXd::Zero(a0.rows(), a0.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(a0);
    if (llt.info() != Eigen::Success) {
        // fall back to an eigenvalue root so semidefinite inputs work
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a0);
        Eigen::VectorXd ev = es.eigenvalues();
        if (ev.minCoeff() < -1e-10)
            throw std::invalid_argument("covariance must be positive semidefinite");
        return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    return llt.matrixL();
}

CadlagPath sample_brownian(const BrownianDriver& model, double horizon,
                           double dt, std::uint64_t seed, std::uint64_t stream)
{
    if (model.k < 1) throw std::invalid_argument("need at least one component");
    const auto times = make_time_grid(horizon, dt);
    const int n = static_cast<int>(times.size());
    Eigen::MatrixXd values(n, 1 + model.k);
    values.row(0).setZero();
    Rng rng(seed, stream);
    for (int i = 1; i < n; ++i) {
        const double step = times[i] - times[i - 1];
        values(i, 0) = times[i];
        const double scale = std::sqrt(step);
        for (int j = 0; j < model.k; ++j)
            values(i, 1 + j) = values(i - 1, 1 + j) + scale * rng.normal();
    }
    return make_path(GroupDescriptor::additive(1 + model.k),
                     PathStyle::GridSampled, times, values);
}

CadlagPath sample_levy_finite(const LevyFiniteDriver& model, double horizon,
                              double dt, std::uint64_t seed,
                              std::uint64_t stream)
{
    const auto& triplet = model.triplet;
    const int d = static_cast<int>(triplet.b0.size());
    if (d < 1) throw std::invalid_argument("empty drift");
    if (triplet.A0.rows() != d || triplet.A0.cols() != d)
        throw std::invalid_argument("covariance size mismatch");
    const Eigen::MatrixXd root = covariance_root(triplet.A0);
    const bool has_gauss = root.cwiseAbs().maxCoeff() > 0.0;

    Eigen::VectorXd drift = triplet.b0;
    const JumpMeasure* measure = nullptr;
    if (triplet.has_finite_jumps()) {
        measure = &triplet.finite_jumps();
        if (measure->dim != d)
            throw std::invalid_argument("jump dimension mismatch");
        // between jumps the process moves with the compensated drift
        drift -= small_jump_drift(*measure, seed);
    } else if (std::holds_alternative<AlphaStableTag>(triplet.jumps)) {
        throw std::invalid_argument(
            "stable jumps have infinite activity; use the stable driver");
    }

    Rng rng(seed, stream);

    std::vector<double> arrivals;
    if (measure != nullptr && measure->total_mass > 0.0) {
        double s = rng.exponential() / measure->total_mass;
        while (s < horizon) {
            arrivals.push_back(s);
            s += rng.exponential() / measure->total_mass;
        }
    }

    // merge the regular grid with the arrival times
    const auto grid = make_time_grid(horizon, dt);
    std::vector<double> times;
    std::vector<std::uint8_t> flags;
    times.reserve(grid.size() + arrivals.size());
    std::size_t gi = 0, ai = 0;
    while (gi < grid.size() || ai < arrivals.size()) {
        const bool take_arrival =
            ai < arrivals.size() &&
            (gi >= grid.size() || arrivals[ai] <= grid[gi]);
        if (take_arrival) {
            if (arrivals[ai] == times.back()) {
                // arrival collided with a grid point; flag the existing row
                flags.back() = 1;
            } else {
                times.push_back(arrivals[ai]);
                flags.push_back(1);
            }
            ++ai;
        } else {
            if (!times.empty() && grid[gi] == times.back()) {
                ++gi;
                continue;
            }
            times.push_back(grid[gi]);
            flags.push_back(0);
            ++gi;
        }
    }

    const int n = static_cast<int>(times.size());
    Eigen::MatrixXd values(n, d);
    values.row(0).setZero();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    for (int i = 1; i < n; ++i) {
        const double step = times[i] - times[i - 1];
        x += drift * step;
        if (has_gauss) x += root * rng.normal_vector(d) * std::sqrt(step);
        if (flags[i]) x += measure->sample(rng);
        values.row(i) = x.transpose();
    }
    flags[0] = 0;
    return make_path(GroupDescriptor::additive(d), PathStyle::GridSampled,
                     times, values, flags);
}

CadlagPath sample_stable(const AlphaStableDriver& model, double horizon,
                         double dt, std::uint64_t seed, std::uint64_t stream)
{
    if (model.n < 1) throw std::invalid_argument("need at least one component");
    const auto times = make_time_grid(horizon, dt);
    const int n = static_cast<int>(times.size());
    Eigen::MatrixXd values(n, 1 + model.n);
    values.row(0).setZero();
    Rng rng(seed, stream);
    for (int i = 1; i < n; ++i) {
        const double step = times[i] - times[i - 1];
        values(i, 0) = times[i];
        const double scale = std::pow(step, 1.0 / model.alpha);
        for (int j = 0; j < model.n; ++j)
            values(i, 1 + j) =
                values(i - 1, 1 + j) + scale * rng.stable(model.alpha);
    }
    return make_path(GroupDescriptor::additive(1 + model.n),
                     PathStyle::GridSampled, times, values);
}

CadlagPath sample_discrete(const DiscreteIidDriver& model, double horizon,
                           std::uint64_t seed, std::uint64_t stream)
{
    const int steps = static_cast<int>(std::floor(horizon + 1e-12));
    if (steps < 0) throw std::invalid_argument("negative horizon");
    Rng rng(seed, stream);
    std::vector<double> times(steps + 1);
    Eigen::MatrixXd values(steps + 1, model.group.coordinate_dim());
    GroupElement z = identity(model.group);
    times[0] = 0.0;
    values.row(0) = z.coords.transpose();
    for (int i = 1; i <= steps; ++i) {
        times[i] = static_cast<double>(i);
        const GroupElement dz{model.group, model.increment(rng)};
        z = mul(dz, z);
        values.row(i) = z.coords.transpose();
    }
    return make_path(model.group, PathStyle::DiscreteJump, times, values);
}

}  // namespace

std::vector<double> make_time_grid(double horizon, double dt)
{
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const int n = std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-9)));
    std::vector<double> times(n + 1);
    for (int i = 0; i < n; ++i) times[i] = i * dt;
    times[n] = horizon;
    if (times[n] <= times[n - 1]) times.pop_back(), times.back() = horizon;
    return times;
}

Eigen::VectorXd small_jump_drift(const JumpMeasure& measure, std::uint64_t seed,
                                 int n_mc, double* stderr_out)
{
    if (measure.small_jump_mean) {
        if (stderr_out) *stderr_out = 0.0;
        return *measure.small_jump_mean;
    }
    if (measure.total_mass <= 0.0) {
        if (stderr_out) *stderr_out = 0.0;
        return Eigen::VectorXd::Zero(measure.dim);
    }
    Rng rng(seed, kCompensatorStreamOffset);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(measure.dim);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(measure.dim);
    for (int i = 0; i < n_mc; ++i) {
        Eigen::VectorXd z = measure.sample(rng);
        if (z.norm() <= 1.0) {
            sum += z;
            sumsq += z.cwiseProduct(z);
        }
    }
    Eigen::VectorXd mean = sum / n_mc;
    if (stderr_out) {
        double worst = 0.0;
        for (int j = 0; j < measure.dim; ++j) {
            const double var =
                std::max(0.0, sumsq[j] / n_mc - mean[j] * mean[j]);
            worst = std::max(worst, std::sqrt(var / n_mc));
        }
        *stderr_out = measure.total_mass * worst;
    }
    return measure.total_mass * mean;
}

GroupDescriptor driver_group(const DriverSpec& spec)
{
    return std::visit(
        [](const auto& model) -> GroupDescriptor {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, BrownianDriver>)
                return GroupDescriptor::additive(1 + model.k);
            else if constexpr (std::is_same_v<T, LevyFiniteDriver>)
                return GroupDescriptor::additive(
                    static_cast<int>(model.triplet.b0.size()));
            else if constexpr (std::is_same_v<T, AlphaStableDriver>)
                return GroupDescriptor::additive(1 + model.n);
            else
                return model.group;
        },
        spec.model);
}

CadlagPath sample_driver(const DriverSpec& spec)
{
    return sample_driver(spec, spec.seed, spec.stream);
}

CadlagPath sample_driver(const DriverSpec& spec, std::uint64_t seed,
                         std::uint64_t stream)
{
    return std::visit(
        [&](const auto& model) -> CadlagPath {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, BrownianDriver>)
                return sample_brownian(model, spec.horizon, spec.dt, seed,
                                       stream);
            else if constexpr (std::is_same_v<T, LevyFiniteDriver>)
                return sample_levy_finite(model, spec.horizon, spec.dt, seed,
                                          stream);
            else if constexpr (std::is_same_v<T, AlphaStableDriver>)
                return sample_stable(model, spec.horizon, spec.dt, seed,
                                     stream);
            else
                return sample_discrete(model, spec.horizon, seed, stream);
        },
        spec.model);
}

CharacteristicTriplet driver_characteristics(const DriverSpec& spec)
{
    return std::visit(
        [](const auto& model) -> CharacteristicTriplet {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, BrownianDriver>) {
                CharacteristicTriplet t;
                t.b0 = Eigen::VectorXd::Zero(1 + model.k);
                t.b0[0] = 1.0;
                t.A0 = Eigen::MatrixXd::Zero(1 + model.k, 1 + model.k);
                t.A0.bottomRightCorner(model.k, model.k).setIdentity();
                return t;
            } else if constexpr (std::is_same_v<T, LevyFiniteDriver>) {
                return model.triplet;
            } else if constexpr (std::is_same_v<T, AlphaStableDriver>) {
                CharacteristicTriplet t;
                t.b0 = Eigen::VectorXd::Zero(1 + model.n);
                t.b0[0] = 1.0;
                t.A0 = Eigen::MatrixXd::Zero(1 + model.n, 1 + model.n);
                t.jumps = AlphaStableTag{model.alpha};
                return t;
            } else {
                throw std::invalid_argument(
                    "discrete iid drivers have no characteristic triplet");
            }
        },
        spec.model);
}

}  // namespace stosym
