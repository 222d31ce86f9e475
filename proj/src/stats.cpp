#include "stosym/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stosym {

double ks_critical_constant(double level)
{
    if (level <= 0.0 || level >= 1.0)
        throw std::invalid_argument("ks: level must lie in (0, 1)");
    return std::sqrt(-0.5 * std::log(level / 2.0));
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b,
                       double level)
{
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const int n1 = static_cast<int>(a.size());
    const int n2 = static_cast<int>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / n1 - double(j) / n2));
    }
    d = std::max(d, std::abs(1.0 - double(j) / n2));
    d = std::max(d, std::abs(double(i) / n1 - 1.0));

    KsResult r;
    r.statistic = d;
    r.threshold = ks_critical_constant(level) *
                  std::sqrt(double(n1 + n2) / (double(n1) * double(n2)));
    r.pass = r.statistic <= r.threshold;
    r.n1 = n1;
    r.n2 = n2;
    return r;
}

KsResult ks_one_sample(std::vector<double> a,
                       const std::function<double(double)>& cdf, double level)
{
    if (a.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
    std::sort(a.begin(), a.end());
    const int n = static_cast<int>(a.size());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = cdf(a[i]);
        d = std::max(d, std::max(double(i + 1) / n - f, f - double(i) / n));
    }
    KsResult r;
    r.statistic = d;
    r.threshold = ks_critical_constant(level) / std::sqrt(double(n));
    r.pass = r.statistic <= r.threshold;
    r.n1 = n;
    r.n2 = 0;
    return r;
}

namespace {

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (const double x : v) s += x;
    return s / double(v.size());
}

}  // namespace

MomentComparison moment_compare(const std::vector<double>& a,
                                const std::vector<double>& b,
                                const std::vector<int>& orders,
                                double max_stderr_units)
{
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("moment_compare: samples too small");
    MomentComparison out;
    out.orders = orders;
    for (const int p : orders) {
        std::vector<double> ap(a.size()), bp(b.size());
        for (std::size_t i = 0; i < a.size(); ++i) ap[i] = std::pow(a[i], p);
        for (std::size_t i = 0; i < b.size(); ++i) bp[i] = std::pow(b[i], p);
        const double ma = mean_of(ap), mb = mean_of(bp);
        double va = 0.0, vb = 0.0;
        for (const double x : ap) va += (x - ma) * (x - ma);
        for (const double x : bp) vb += (x - mb) * (x - mb);
        va /= double(ap.size() - 1);
        vb /= double(bp.size() - 1);
        const double se =
            std::sqrt(va / double(ap.size()) + vb / double(bp.size()));
        out.difference.push_back(ma - mb);
        out.scaled.push_back(se > 0.0 ? std::abs(ma - mb) / se
                                      : (ma == mb ? 0.0 : INFINITY));
    }
    out.max_scaled = 0.0;
    for (const double s : out.scaled) out.max_scaled = std::max(out.max_scaled, s);
    out.pass = out.max_scaled <= max_stderr_units;
    return out;
}

MeanCi mc_mean_ci(const std::vector<double>& sample)
{
    if (sample.empty()) throw std::invalid_argument("mc_mean_ci: empty sample");
    MeanCi r;
    r.n = static_cast<int>(sample.size());
    r.mean = mean_of(sample);
    if (sample.size() > 1) {
        double v = 0.0;
        for (const double x : sample) v += (x - r.mean) * (x - r.mean);
        v /= double(sample.size() - 1);
        r.std_error = std::sqrt(v / double(sample.size()));
    }
    return r;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace stosym
