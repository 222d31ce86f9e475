#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace stosym {

/// Kolmogorov-Smirnov comparison.  Thresholds use the asymptotic critical
/// value c(level) = sqrt(-log(level / 2) / 2); the two-sample threshold is
/// c(level) * sqrt((n1 + n2) / (n1 n2)), the one-sample one c(level) / sqrt(n).
struct KsResult {
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    int n1 = 0;
    int n2 = 0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b,
                       double level = 0.01);

KsResult ks_one_sample(std::vector<double> a,
                       const std::function<double(double)>& cdf,
                       double level = 0.01);

/// Sample moments of two draws compared order by order; the gap is scaled by
/// the pooled standard error of the moment difference.
struct MomentComparison {
    std::vector<int> orders;
    std::vector<double> difference;      // m_p(a) - m_p(b)
    std::vector<double> scaled;          // |difference| / stderr
    double max_scaled = 0.0;
    bool pass = false;
};

MomentComparison moment_compare(const std::vector<double>& a,
                                const std::vector<double>& b,
                                const std::vector<int>& orders,
                                double max_stderr_units = 4.0);

/// Monte Carlo mean with its standard error.
struct MeanCi {
    double mean = 0.0;
    double std_error = 0.0;
    int n = 0;

    bool contains(double target, double stderr_units = 4.0) const
    {
        return std::abs(mean - target) <= stderr_units * std_error;
    }
};

MeanCi mc_mean_ci(const std::vector<double>& sample);

double normal_cdf(double x);

/// Critical constant for the Kolmogorov distribution at the given level.
double ks_critical_constant(double level);

}  // namespace stosym
