#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace stosym {

/// Counter-based pseudo-random generator, Philox4x32 with 10 rounds
/// (Salmon, Moraes, Dror, Shaw; SC'11).  A (seed, stream, block) triple maps
/// to four 32-bit words through a fixed bijection, so draws are reproducible
/// bit for bit on any platform and independent streams never overlap.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    static Block generate(std::uint64_t block_index,
                          std::uint64_t stream,
                          std::uint64_t seed)
    {
        Block x{static_cast<std::uint32_t>(block_index),
                static_cast<std::uint32_t>(block_index >> 32),
                static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32)};
        std::array<std::uint32_t, 2> k{static_cast<std::uint32_t>(seed),
                                       static_cast<std::uint32_t>(seed >> 32)};
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                k[0] += 0x9E3779B9u;
                k[1] += 0xBB67AE85u;
            }
            const std::uint64_t m0 = 0xD2511F53ull * x[0];
            const std::uint64_t m1 = 0xCD9E8D57ull * x[2];
            const Block y{static_cast<std::uint32_t>(m1 >> 32) ^ x[1] ^ k[0],
                          static_cast<std::uint32_t>(m1),
                          static_cast<std::uint32_t>(m0 >> 32) ^ x[3] ^ k[1],
                          static_cast<std::uint32_t>(m0)};
            x = y;
        }
        return x;
    }
};

/// Seedable stream of scalar variates on top of Philox4x32-10.
/// Distinct (seed, stream) pairs give independent sequences; the same pair
/// always replays the same sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    std::uint32_t next_u32()
    {
        if (index_ == 4) {
            buffer_ = Philox4x32::generate(block_++, stream_, seed_);
            index_ = 0;
        }
        return buffer_[index_++];
    }

    std::uint64_t next_u64()
    {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform on the open interval (0, 1); safe under log().
    double uniform()
    {
        const std::uint64_t bits = next_u64() >> 11;  // top 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the pair mate is cached.
    double normal()
    {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    double exponential() { return -std::log(uniform()); }

    double cauchy() { return std::tan(M_PI * (uniform() - 0.5)); }

    /// Standard symmetric alpha-stable variate, unit scale
    /// (Chambers-Mallows-Stuck).  alpha = 2 gives sqrt(2) * normal,
    /// alpha = 1 gives standard Cauchy.
    double stable(double alpha)
    {
        if (alpha <= 0.0 || alpha > 2.0)
            throw std::invalid_argument("stable: alpha must lie in (0, 2]");
        const double theta = M_PI * (uniform() - 0.5);
        if (alpha == 1.0) return std::tan(theta);
        const double w = exponential();
        const double a = alpha * theta;
        const double s = std::sin(a) / std::pow(std::cos(theta), 1.0 / alpha);
        const double t =
            std::pow(std::cos(theta - a) / w, (1.0 - alpha) / alpha);
        return s * t;
    }

    /// Poisson count by summing unit exponentials; exact and deterministic,
    /// cost grows linearly with mean.
    int poisson(double mean)
    {
        if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
        int count = 0;
        double acc = exponential();
        while (acc <= mean) {
            ++count;
            acc += exponential();
        }
        return count;
    }

    Eigen::VectorXd normal_vector(int n)
    {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32::Block buffer_{};
    int index_ = 4;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

/// Additive-recurrence low-discrepancy sequence (generalized golden ratio,
/// one irrational per axis).  Used for deterministic probe grids.
class QuasiRandom {
public:
    explicit QuasiRandom(int dim) : dim_(dim), state_(dim)
    {
        // gamma_d is the unique positive root of x^(d+1) = x + 1.
        double g = 1.0;
        for (int it = 0; it < 64; ++it)
            g = std::pow(1.0 + g, 1.0 / (dim + 1.0));
        alpha_.resize(dim);
        double p = 1.0;
        for (int i = 0; i < dim; ++i) {
            p /= g;
            alpha_[i] = p;
        }
        state_.setConstant(0.5);
    }

    /// Next point in [0,1)^dim.
    Eigen::VectorXd next()
    {
        for (int i = 0; i < dim_; ++i) {
            state_[i] += alpha_[i];
            state_[i] -= std::floor(state_[i]);
        }
        return state_;
    }

private:
    int dim_;
    Eigen::VectorXd state_;
    Eigen::VectorXd alpha_;
};

/// Rotation of the plane by `angle` (counterclockwise).
inline Eigen::Matrix2d rotation2(double angle)
{
    Eigen::Matrix2d m;
    m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return m;
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// R diagonal sign fix (Stewart's method).
inline Eigen::MatrixXd haar_orthogonal(int n, Rng& rng)
{
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

}  // namespace stosym
