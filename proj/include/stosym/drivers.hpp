#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "stosym/path.hpp"
#include "stosym/rng.hpp"

namespace stosym {

// Finite-activity jump measure nu0 = total_mass * law(sample).
struct JumpMeasure {
    double total_mass = 0.0;
    int dim = 0;
    // draws one jump from the normalized law nu0 / total_mass
    std::function<Eigen::VectorXd(Rng&)> sample;
    // integral of z over {|z| <= 1} against nu0 (unnormalized); when absent it
    // is estimated by Monte Carlo where needed
    std::optional<Eigen::VectorXd> small_jump_mean;
};

// Marker for a driver whose jump measure is the symmetric alpha-stable one;
// it has infinite mass, so only the scaling exponent is carried around.
struct AlphaStableTag {
    double alpha = 1.0;
};

// (drift, Gaussian covariance, jump part) with truncation 1_{|z|<=1}
struct CharacteristicTriplet {
    Eigen::VectorXd b0;
    Eigen::MatrixXd A0;
    std::variant<std::monostate, JumpMeasure, AlphaStableTag> jumps;

    bool has_finite_jumps() const
    {
        return std::holds_alternative<JumpMeasure>(jumps);
    }
    const JumpMeasure& finite_jumps() const
    {
        return std::get<JumpMeasure>(jumps);
    }
};

// Brownian motion with its clock: path on R^{1+k}, coordinate 0 is t.
struct BrownianDriver {
    int k = 1;
};

// Finite-activity Levy process on R^d, d = triplet.b0.size().  The caller
// decides whether a deterministic clock coordinate is included (drift 1,
// zero covariance row).  Jump arrivals show up as flagged grid rows.
struct LevyFiniteDriver {
    CharacteristicTriplet triplet;
};

// n iid symmetric alpha-stable components plus a clock coordinate.
struct AlphaStableDriver {
    double alpha = 1.0;
    int n = 1;
};

// One increment per unit time on an arbitrary group.
struct DiscreteIidDriver {
    GroupDescriptor group;
    std::function<Eigen::VectorXd(Rng&)> increment;  // group coordinates
};

struct DriverSpec {
    std::variant<BrownianDriver, LevyFiniteDriver, AlphaStableDriver,
                 DiscreteIidDriver>
        model;
    double horizon = 1.0;
    double dt = 1e-2;  // grid step for the grid-sampled models
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

GroupDescriptor driver_group(const DriverSpec& spec);

// Deterministic in (seed, stream).  Overload without them uses spec's own.
CadlagPath sample_driver(const DriverSpec& spec);
CadlagPath sample_driver(const DriverSpec& spec, std::uint64_t seed,
                         std::uint64_t stream);

// Throws std::invalid_argument for DiscreteIidDriver, which has no triplet.
CharacteristicTriplet driver_characteristics(const DriverSpec& spec);

// integral of z over {|z| <= 1} against nu0, analytic when provided,
// otherwise Monte Carlo with n_mc draws; stderr_out (per coordinate, max
// over coordinates) reports the Monte Carlo uncertainty, 0 when analytic.
Eigen::VectorXd small_jump_drift(const JumpMeasure& measure,
                                 std::uint64_t seed, int n_mc = 200000,
                                 double* stderr_out = nullptr);

// regular grid {0, dt, 2dt, ..., T} with the final point clamped to T
std::vector<double> make_time_grid(double horizon, double dt);

}  // namespace stosym
