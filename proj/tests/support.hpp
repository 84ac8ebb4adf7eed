#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <fdmean/grid_basis.hpp>
#include <fdmean/random.hpp>

namespace fdmean::testing {

/// Seeded generator for property tests; each case draws from its own stream.
class Gen
{
public:
    explicit Gen(std::uint64_t seed, std::uint64_t stream = 0) : rng_(stream_engine(seed, stream)) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng_); }
    std::size_t index(std::size_t lo, std::size_t hi)
    {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

    Vector vector(std::size_t m, double lo = -10.0, double hi = 10.0)
    {
        Vector v(static_cast<Eigen::Index>(m));
        for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = uniform(lo, hi);
        return v;
    }

    Vector gaussian(std::size_t m, double sd = 1.0)
    {
        Vector v(static_cast<Eigen::Index>(m));
        for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = normal(sd);
        return v;
    }

    Matrix matrix(std::size_t rows, std::size_t cols, double sd = 1.0)
    {
        Matrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = normal(sd);
        }
        return a;
    }

    /// Sparse coefficient vector: each entry is nonzero with probability p.
    Vector sparse(std::size_t m, double p, double scale)
    {
        Vector v = Vector::Zero(static_cast<Eigen::Index>(m));
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            if (coin(p)) v[k] = normal(scale);
        }
        return v;
    }

    std::size_t power_of_two(unsigned lo_exp, unsigned hi_exp)
    {
        return std::size_t{1} << index(lo_exp, hi_exp);
    }

private:
    Engine rng_;
};

struct MeanSe
{
    double mean = 0.0;
    double se = 0.0;
    double var = 0.0;  // sample variance, divisor count - 1
};

inline MeanSe mean_se(const std::vector<double>& xs)
{
    MeanSe out;
    const auto n = static_cast<double>(xs.size());
    for (double x : xs) out.mean += x;
    out.mean /= n;
    for (double x : xs) out.var += (x - out.mean) * (x - out.mean);
    out.var /= n - 1.0;
    out.se = std::sqrt(out.var / n);
    return out;
}

/// Standard error of a sample variance from draws with the given fourth central moment.
inline double variance_se(const std::vector<double>& xs)
{
    const MeanSe s = mean_se(xs);
    const auto n = static_cast<double>(xs.size());
    double m4 = 0.0;
    for (double x : xs) m4 += std::pow(x - s.mean, 4);
    m4 /= n;
    return std::sqrt(std::max(m4 - s.var * s.var, 0.0) / n);
}

} // namespace fdmean::testing
