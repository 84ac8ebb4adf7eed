#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <fdmean/estimator.hpp>
#include <fdmean/process_sim.hpp>
#include <fdmean/random.hpp>

namespace fdmean {

enum class BandKind {
    ProposedHard1,          // hard estimate +- sum_k r_tilde_k |phi_k| 1{|mu_hat_k| > r_hat_k}
    ProposedHard3,          // same, three times wider
    ProposedSoft2,          // soft estimate, twice the sum
    UntruncatedLS,          // hard estimate +- sum_k r_hat_k |phi_k|
    CompetitorTheoretical,  // LS mean +- sqrt(Gamma(t,t)/n) z(alpha/2m)
    CompetitorSampleVar,    // LS mean +- sqrt(V2(t)/n) z(alpha/2m)
};

inline std::string_view to_string(BandKind kind)
{
    switch (kind) {
    case BandKind::ProposedHard1: return "proposed_hard1";
    case BandKind::ProposedHard3: return "proposed_hard3";
    case BandKind::ProposedSoft2: return "proposed_soft2";
    case BandKind::UntruncatedLS: return "untruncated_ls";
    case BandKind::CompetitorTheoretical: return "competitor_theoretical";
    case BandKind::CompetitorSampleVar: return "competitor_sample_var";
    }
    return "?";
}

inline BandKind parse_band_kind(std::string_view name)
{
    for (BandKind kind : {BandKind::ProposedHard1, BandKind::ProposedHard3, BandKind::ProposedSoft2,
                          BandKind::UntruncatedLS, BandKind::CompetitorTheoretical,
                          BandKind::CompetitorSampleVar}) {
        if (name == to_string(kind)) return kind;
    }
    if (name == "band1") return BandKind::CompetitorTheoretical;
    if (name == "band3") return BandKind::CompetitorSampleVar;
    throw std::invalid_argument("unknown band kind '" + std::string(name) + "'");
}

struct ConfidenceBand
{
    BandKind kind = BandKind::ProposedHard1;
    double alpha = 0.05;
    Vector center;
    Vector half_width;
    Vector lower;  // center - half_width
    Vector upper;  // center + half_width

    double mean_width() const { return 2.0 * half_width.mean(); }
};

inline ConfidenceBand make_band(BandKind kind, double alpha, Vector center, Vector half_width)
{
    if (center.size() != half_width.size()) throw std::invalid_argument("band: length mismatch");
    if ((half_width.array() < 0.0).any()) throw std::invalid_argument("band: negative half width");
    ConfidenceBand band;
    band.kind = kind;
    band.alpha = alpha;
    band.lower = center - half_width;
    band.upper = center + half_width;
    band.center = std::move(center);
    band.half_width = std::move(half_width);
    return band;
}

/**
 * Adaptive band around a thresholded estimate:
 * half_width(t_j) = w sum_k r_tilde_k |phi_k(t_j)| 1{|mu_hat_k| > r_hat_k}.
 * Hard estimates at level r_hat take w = 1 or 3; soft estimates take w = 2.
 */
inline ConfidenceBand proposed_band(const MeanEstimate& estimate, const CoefficientStats& stats,
                                    const BasisMatrix& basis, double width_multiplier)
{
    BandKind kind;
    if (estimate.rule == ThresholdRule::Hard && estimate.level_multiplier == 1.0
        && (width_multiplier == 1.0 || width_multiplier == 3.0)) {
        kind = width_multiplier == 1.0 ? BandKind::ProposedHard1 : BandKind::ProposedHard3;
    } else if (estimate.rule == ThresholdRule::Soft && estimate.level_multiplier == 1.0
               && width_multiplier == 2.0) {
        kind = BandKind::ProposedSoft2;
    } else {
        throw std::invalid_argument("proposed_band: needs a hard estimate at r_hat with width 1 or 3, "
                                    "or a soft estimate at r_hat with width 2");
    }
    Vector weights(stats.mu_hat.size());
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
        weights[k] = std::abs(stats.mu_hat[k]) > stats.r_hat[k] ? stats.r_tilde[k] : 0.0;
    }
    Vector half = basis.values.cwiseAbs() * weights;
    if (width_multiplier != 1.0) half *= width_multiplier;
    return make_band(kind, stats.alpha, estimate.values, std::move(half));
}

/// Hard estimate +- sum_k r_hat_k |phi_k(t_j)|, with no indicator.
inline ConfidenceBand untruncated_band(const CoefficientStats& stats, const MeanEstimate& estimate,
                                       const BasisMatrix& basis)
{
    return make_band(BandKind::UntruncatedLS, stats.alpha, estimate.values,
                     basis.values.cwiseAbs() * stats.r_hat);
}

/// center +- sqrt(V(t_j) / n) z(alpha / 2m).
inline ConfidenceBand competitor_band(const Vector& center, const Vector& variance, std::size_t n,
                                      double alpha, BandKind kind = BandKind::CompetitorTheoretical)
{
    if (center.size() != variance.size()) throw std::invalid_argument("competitor_band: length mismatch");
    if ((variance.array() < 0.0).any()) throw std::invalid_argument("competitor_band: negative variance");
    const double z = bonferroni_z(alpha, static_cast<std::size_t>(center.size()));
    Vector half = (variance / static_cast<double>(n)).cwiseSqrt() * z;
    return make_band(kind, alpha, center, std::move(half));
}

/// V2(t_j) = (1/(n-1)) sum_i (X_hat_i(t_j) - f_hat(t_j))^2 with X_hat_i = synthesize(row i).
inline Vector sample_variance_function(const CoefficientStats& stats, const BasisMatrix& basis)
{
    const Matrix curves = stats.per_curve * basis.values.transpose();
    const Vector mean = curves.colwise().mean().transpose();
    const Matrix centered = curves.rowwise() - mean.transpose();
    return centered.colwise().squaredNorm().transpose() / static_cast<double>(stats.n - 1);
}

/// lower <= target <= upper at every grid point.
inline bool covers(const ConfidenceBand& band, const Vector& target)
{
    if (target.size() != band.center.size()) throw std::invalid_argument("covers: length mismatch");
    return (target.array() >= band.lower.array()).all() && (target.array() <= band.upper.array()).all();
}

/**
 * Builds any band kind from pooled statistics. Theoretical competitor bands
 * need the pointwise process variance Gamma(t_j, t_j).
 */
inline ConfidenceBand build_band(BandKind kind, const CoefficientStats& stats, const BasisMatrix& basis,
                                 const std::optional<Vector>& process_variance = std::nullopt)
{
    switch (kind) {
    case BandKind::ProposedHard1: return proposed_band(hard_threshold(stats, basis, 1.0), stats, basis, 1.0);
    case BandKind::ProposedHard3: return proposed_band(hard_threshold(stats, basis, 1.0), stats, basis, 3.0);
    case BandKind::ProposedSoft2: return proposed_band(soft_threshold(stats, basis, 1.0), stats, basis, 2.0);
    case BandKind::UntruncatedLS: return untruncated_band(stats, hard_threshold(stats, basis, 1.0), basis);
    case BandKind::CompetitorTheoretical:
        if (!process_variance) {
            throw std::invalid_argument("competitor_theoretical band needs the process variance function");
        }
        return competitor_band(least_squares(stats, basis).values, *process_variance, stats.n, stats.alpha,
                               BandKind::CompetitorTheoretical);
    case BandKind::CompetitorSampleVar:
        return competitor_band(least_squares(stats, basis).values, sample_variance_function(stats, basis),
                               stats.n, stats.alpha, BandKind::CompetitorSampleVar);
    }
    throw std::invalid_argument("build_band: unknown kind");
}

enum class CoverageTarget { TrueMean, TruncatedTarget };

inline std::string_view to_string(CoverageTarget target)
{
    return target == CoverageTarget::TrueMean ? "true_mean" : "truncated_target";
}

inline CoverageTarget parse_coverage_target(std::string_view name)
{
    if (name == "true_mean") return CoverageTarget::TrueMean;
    if (name == "truncated_target") return CoverageTarget::TruncatedTarget;
    throw std::invalid_argument("unknown coverage target '" + std::string(name) + "'");
}

/**
 * The band surrogate f_bar_(2 r_bar): true coefficients kept where
 * |mu_k| >= 2 r_bar_k, with r_bar from the known covariance and noise level.
 */
inline Vector band_surrogate_target(const Vector& f_values, const BasisMatrix& basis,
                                    const TheoreticalLevels& levels)
{
    return truncated_target(analyze(f_values, basis), 2.0 * levels.r_bar, basis).values;
}

struct CoverageReport
{
    BandKind kind = BandKind::ProposedHard1;
    CoverageTarget target = CoverageTarget::TrueMean;
    std::size_t replicates = 0;
    std::size_t covered_count = 0;
    double mean_width = 0.0;  // average over replicates and grid points of upper - lower

    double coverage() const
    {
        return replicates == 0 ? 0.0 : static_cast<double>(covered_count) / static_cast<double>(replicates);
    }
};

struct CoverageOptions
{
    BasisFamily basis_family = BasisFamily::Fourier;
    double alpha = 0.05;
    double delta = 0.0;
};

/// Replicate r uses the panel seed derive_seed(scenario.seed, r).
inline CoverageReport coverage_experiment(const PanelConfig& scenario, BandKind kind, std::size_t replicates,
                                          CoverageTarget target_kind, const CoverageOptions& options = {})
{
    if (replicates < 1) throw std::invalid_argument("coverage_experiment: need at least one replicate");
    const BasisMatrix basis = make_basis(options.basis_family, scenario.grid);
    const Vector f = eval_signal(scenario.signal, scenario.grid);
    const Vector gamma_diag = pointwise_variance(scenario.process, scenario.grid);

    Vector target = f;
    if (target_kind == CoverageTarget::TruncatedTarget) {
        const TheoreticalLevels levels =
            theoretical_levels(sigma_k_theoretical(scenario.process, scenario.grid, basis), scenario.noise_sd,
                               scenario.n, options.alpha, options.delta);
        target = band_surrogate_target(f, basis, levels);
    }

    CoverageReport report;
    report.kind = kind;
    report.target = target_kind;
    report.replicates = replicates;
    double width_sum = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
        PanelConfig config = scenario;
        config.seed = derive_seed(scenario.seed, r);
        const CurvePanel panel = generate_panel(config);
        const CoefficientStats stats = pooled_stats(per_curve_coeffs(panel, basis), options.alpha, options.delta);
        const ConfidenceBand band = build_band(kind, stats, basis, gamma_diag);
        report.covered_count += covers(band, target) ? 1 : 0;
        width_sum += band.mean_width();
    }
    report.mean_width = width_sum / static_cast<double>(replicates);
    return report;
}

} // namespace fdmean
