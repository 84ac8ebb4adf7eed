#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fdmean/grid_basis.hpp>
#include <fdmean/normal.hpp>
#include <fdmean/process_sim.hpp>

namespace fdmean {

/**
 * Pooled least-squares coefficients and the data-driven threshold levels.
 *
 * r_hat_k   = (S_k +  delta) z(alpha / 2m) / sqrt(n)
 * r_tilde_k = (S_k + 3 delta) z(alpha / 2m) / sqrt(n)
 */
struct CoefficientStats
{
    Vector mu_hat;     // column means of per_curve
    Matrix per_curve;  // (n, m): coefficients of each curve on its own
    Vector s_k;        // column sample standard deviations, divisor n - 1
    std::size_t n = 0;
    double alpha = 0.05;
    double delta = 0.0;
    double z = 0.0;    // z(alpha / 2m)
    Vector r_hat;
    Vector r_tilde;

    std::size_t m() const { return static_cast<std::size_t>(mu_hat.size()); }
};

/// Population counterparts of the levels, available when Gamma and sigma_eps are known.
struct TheoreticalLevels
{
    Vector sigma_k;    // sqrt of the coefficient variances sigma_k^2
    double sigma_eps = 0.0;
    std::size_t n = 0;
    double alpha = 0.05;
    double delta = 0.0;
    double z = 0.0;
    Vector r_k;        // sqrt((sigma_k^2 + sigma_eps^2 / m) / n) z
    Vector r_bar;      // r_k + 2 delta z / sqrt(n)
};

enum class ThresholdRule { Hard, Soft, LeastSquares };

inline std::string_view to_string(ThresholdRule rule)
{
    switch (rule) {
    case ThresholdRule::Hard: return "hard";
    case ThresholdRule::Soft: return "soft";
    case ThresholdRule::LeastSquares: return "ls";
    }
    return "?";
}

inline ThresholdRule parse_threshold_rule(std::string_view name)
{
    if (name == "hard" || name == "HT") return ThresholdRule::Hard;
    if (name == "soft" || name == "ST") return ThresholdRule::Soft;
    if (name == "ls" || name == "ols" || name == "OLS") return ThresholdRule::LeastSquares;
    throw std::invalid_argument("unknown threshold rule '" + std::string(name) + "'");
}

struct MeanEstimate
{
    ThresholdRule rule = ThresholdRule::Hard;
    double level_multiplier = 1.0;
    BasisFamily basis_family = BasisFamily::Fourier;
    Vector levels;             // thresholds actually applied, multiplier * r_hat
    Vector coeffs;             // post-threshold coefficients
    std::vector<bool> active;  // 1{|mu_hat_k| >= level_k}
    Vector values;             // synthesize(coeffs)

    std::size_t active_count() const
    {
        std::size_t count = 0;
        for (bool a : active) count += a ? 1 : 0;
        return count;
    }
};

/// Row i holds the least-squares coefficients of curve i alone.
inline Matrix per_curve_coeffs(const Matrix& Y, const BasisMatrix& basis)
{
    if (static_cast<std::size_t>(Y.cols()) != basis.size()) {
        throw std::invalid_argument("per_curve_coeffs: panel has " + std::to_string(Y.cols())
                                    + " columns, basis has " + std::to_string(basis.size()));
    }
    return Y * basis.values / static_cast<double>(basis.size());
}

inline Matrix per_curve_coeffs(const CurvePanel& panel, const BasisMatrix& basis)
{
    return per_curve_coeffs(panel.Y, basis);
}

inline CoefficientStats pooled_stats(Matrix per_curve, double alpha, double delta = 0.0)
{
    const auto n = per_curve.rows();
    if (n < 2) throw std::invalid_argument("pooled_stats: need n >= 2 curves, got " + std::to_string(n));
    if (!(delta >= 0.0)) throw std::invalid_argument("pooled_stats: delta must be >= 0");

    CoefficientStats stats;
    stats.n = static_cast<std::size_t>(n);
    stats.alpha = alpha;
    stats.delta = delta;
    stats.z = bonferroni_z(alpha, static_cast<std::size_t>(per_curve.cols()));
    stats.mu_hat = per_curve.colwise().mean().transpose();
    const Matrix centered = per_curve.rowwise() - stats.mu_hat.transpose();
    stats.s_k = (centered.colwise().squaredNorm().transpose() / static_cast<double>(n - 1)).cwiseSqrt();
    const double scale = stats.z / std::sqrt(static_cast<double>(n));
    stats.r_hat = (stats.s_k.array() + delta) * scale;
    stats.r_tilde = (stats.s_k.array() + 3.0 * delta) * scale;
    stats.per_curve = std::move(per_curve);
    return stats;
}

/// sigma_k_sq holds the coefficient variances sigma_k^2 (e.g. from sigma_k_theoretical).
inline TheoreticalLevels theoretical_levels(const Vector& sigma_k_sq, double sigma_eps, std::size_t n,
                                            double alpha, double delta = 0.0)
{
    if ((sigma_k_sq.array() < 0.0).any() || sigma_eps < 0.0) {
        throw std::invalid_argument("theoretical_levels: variances must be nonnegative");
    }
    if (n < 1) throw std::invalid_argument("theoretical_levels: need n >= 1");
    const auto m = static_cast<std::size_t>(sigma_k_sq.size());
    TheoreticalLevels levels;
    levels.sigma_k = sigma_k_sq.cwiseSqrt();
    levels.sigma_eps = sigma_eps;
    levels.n = n;
    levels.alpha = alpha;
    levels.delta = delta;
    levels.z = bonferroni_z(alpha, m);
    const double root_n = std::sqrt(static_cast<double>(n));
    const double eps_share = sigma_eps * sigma_eps / static_cast<double>(m);
    levels.r_k = ((sigma_k_sq.array() + eps_share) / static_cast<double>(n)).sqrt() * levels.z;
    levels.r_bar = levels.r_k.array() + 2.0 * delta * levels.z / root_n;
    return levels;
}

/**
 * Applies `rule` to `mu` at per-coefficient `levels`:
 * hard keeps mu_k when |mu_k| >= level_k, soft shrinks toward zero by level_k.
 */
inline MeanEstimate threshold_coefficients(const Vector& mu, const Vector& levels, ThresholdRule rule,
                                           const BasisMatrix& basis)
{
    if (mu.size() != levels.size()) {
        throw std::invalid_argument("threshold_coefficients: coefficient/level length mismatch");
    }
    MeanEstimate est;
    est.rule = rule;
    est.basis_family = basis.family;
    est.levels = levels;
    est.coeffs.resize(mu.size());
    est.active.resize(static_cast<std::size_t>(mu.size()));
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
        const double magnitude = std::abs(mu[k]);
        const bool keep = rule == ThresholdRule::LeastSquares || magnitude >= levels[k];
        est.active[static_cast<std::size_t>(k)] = keep;
        switch (rule) {
        case ThresholdRule::LeastSquares:
        case ThresholdRule::Hard: est.coeffs[k] = keep ? mu[k] : 0.0; break;
        case ThresholdRule::Soft:
            est.coeffs[k] = magnitude > levels[k] ? std::copysign(magnitude - levels[k], mu[k]) : 0.0;
            break;
        }
    }
    est.values = synthesize(est.coeffs, basis);
    return est;
}

inline MeanEstimate hard_threshold(const CoefficientStats& stats, const BasisMatrix& basis,
                                   double multiplier = 1.0)
{
    MeanEstimate est = threshold_coefficients(stats.mu_hat, multiplier * stats.r_hat,
                                              ThresholdRule::Hard, basis);
    est.level_multiplier = multiplier;
    return est;
}

inline MeanEstimate soft_threshold(const CoefficientStats& stats, const BasisMatrix& basis,
                                   double multiplier = 1.0)
{
    MeanEstimate est = threshold_coefficients(stats.mu_hat, multiplier * stats.r_hat,
                                              ThresholdRule::Soft, basis);
    est.level_multiplier = multiplier;
    return est;
}

/// Untruncated pooled least squares; equals the ensemble average for orthonormal bases.
inline MeanEstimate least_squares(const CoefficientStats& stats, const BasisMatrix& basis)
{
    return threshold_coefficients(stats.mu_hat, Vector::Zero(stats.mu_hat.size()),
                                  ThresholdRule::LeastSquares, basis);
}

inline MeanEstimate apply_rule(const CoefficientStats& stats, const BasisMatrix& basis,
                               ThresholdRule rule, double multiplier)
{
    switch (rule) {
    case ThresholdRule::Hard: return hard_threshold(stats, basis, multiplier);
    case ThresholdRule::Soft: return soft_threshold(stats, basis, multiplier);
    case ThresholdRule::LeastSquares: break;
    }
    return least_squares(stats, basis);
}

/// mu_k 1{|mu_k| >= level_k} and its reconstruction on the grid.
struct TruncatedTarget
{
    Vector coeffs;
    std::vector<bool> active;
    Vector values;
};

inline TruncatedTarget truncated_target(const Vector& mu, const Vector& levels, const BasisMatrix& basis)
{
    MeanEstimate est = threshold_coefficients(mu, levels, ThresholdRule::Hard, basis);
    return {std::move(est.coeffs), std::move(est.active), std::move(est.values)};
}

struct SparsityReport
{
    std::size_t count = 0;
    std::vector<std::size_t> indices;  // 1-based k with |mu_k| >= r_k
    double sup_error = 0.0;            // ||f_bar - f||_{m,inf}
    double l2_error = 0.0;             // ||f_bar - f||_{m,2}
    Vector mu;
    Vector target_values;
};

/// How many coefficients of f survive truncation at the theoretical levels r_k.
inline SparsityReport sparsity_report(const Vector& f_values, const BasisMatrix& basis,
                                      const TheoreticalLevels& levels)
{
    SparsityReport report;
    report.mu = analyze(f_values, basis);
    TruncatedTarget target = truncated_target(report.mu, levels.r_k, basis);
    for (std::size_t k = 0; k < target.active.size(); ++k) {
        if (target.active[k]) report.indices.push_back(k + 1);
    }
    report.count = report.indices.size();
    const Vector diff = target.values - f_values;
    report.sup_error = sup_norm(diff);
    report.l2_error = l2_norm(diff);
    report.target_values = std::move(target.values);
    return report;
}

} // namespace fdmean
