#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <fdmean/bands.hpp>
#include <fdmean/estimator.hpp>
#include <fdmean/process_sim.hpp>
#include <fdmean/random.hpp>
#include <fdmean/selector.hpp>

namespace fdmean {

// ---------------------------------------------------------------------------
// Error summaries
// ---------------------------------------------------------------------------

struct MseSummary
{
    double sqrt_emse = 0.0;    // sqrt(mean_s MSE_s)
    double sqrt_medmse = 0.0;  // sqrt(median_s MSE_s)
};

inline MseSummary mse_summary_from(const std::vector<double>& mse)
{
    if (mse.empty()) throw std::invalid_argument("mse_summary: need at least one replicate");
    double sum = 0.0;
    for (double v : mse) sum += v;
    return {std::sqrt(sum / static_cast<double>(mse.size())), std::sqrt(median(mse))};
}

/// MSE_s = ||fit_s - truth||_{m,2}^2 per replicate.
inline MseSummary mse_summary(const std::vector<Vector>& fitted, const Vector& truth)
{
    std::vector<double> mse;
    mse.reserve(fitted.size());
    for (const Vector& fit : fitted) {
        if (fit.size() != truth.size()) throw std::invalid_argument("mse_summary: length mismatch");
        const double l2 = l2_norm(fit - truth);
        mse.push_back(l2 * l2);
    }
    return mse_summary_from(mse);
}

// ---------------------------------------------------------------------------
// Oracle checks (simulation only: Gamma, sigma_eps and f are known)
// ---------------------------------------------------------------------------

/**
 * The event on which every guarantee holds, for all k:
 * |mu_hat_k - mu_k| <= r_k, r_k <= r_hat_k <= r_bar_k <= r_tilde_k.
 */
inline bool omega_event_check(const CoefficientStats& stats, const TheoreticalLevels& levels, const Vector& mu_true)
{
    if (stats.mu_hat.size() != mu_true.size() || levels.r_k.size() != mu_true.size()) {
        throw std::invalid_argument("omega_event_check: length mismatch");
    }
    for (Eigen::Index k = 0; k < mu_true.size(); ++k) {
        if (!(std::abs(stats.mu_hat[k] - mu_true[k]) <= levels.r_k[k])) return false;
        if (!(stats.r_hat[k] >= levels.r_k[k])) return false;
        if (!(stats.r_hat[k] <= levels.r_bar[k])) return false;
        if (!(levels.r_bar[k] <= stats.r_tilde[k])) return false;
    }
    return true;
}

struct OracleCheck
{
    double sup_lhs = 0.0;
    double sup_rhs = 0.0;
    double l2_lhs = 0.0;
    double l2_rhs = 0.0;
    bool sup_ok = false;
    bool l2_ok = false;

    bool ok() const { return sup_ok && l2_ok; }
};

/**
 * Compares an estimate thresholded at 2 r_hat (hard or soft) with the
 * truncated target f_bar_(r):
 *   ||est - f_bar||_{m,inf} <= 3 max_k ||phi_k||_inf sum_k r_bar_k 1{|mu_k| >= r_k}
 *   ||est - f_bar||_{m,2}   <= 3 sqrt(sum_k r_bar_k^2 1{|mu_k| >= r_k})
 */
inline OracleCheck oracle_check(const MeanEstimate& estimate, const TheoreticalLevels& levels,
                                const Vector& mu_true, const BasisMatrix& basis)
{
    const TruncatedTarget target = truncated_target(mu_true, levels.r_k, basis);
    double bar_sum = 0.0;
    double bar_sq_sum = 0.0;
    for (std::size_t k = 0; k < target.active.size(); ++k) {
        if (!target.active[k]) continue;
        const double r = levels.r_bar[static_cast<Eigen::Index>(k)];
        bar_sum += r;
        bar_sq_sum += r * r;
    }
    const Vector diff = estimate.values - target.values;
    OracleCheck check;
    check.sup_lhs = sup_norm(diff);
    check.sup_rhs = 3.0 * basis.sup_norms.maxCoeff() * bar_sum;
    check.l2_lhs = l2_norm(diff);
    check.l2_rhs = 3.0 * std::sqrt(bar_sq_sum);
    check.sup_ok = check.sup_lhs <= check.sup_rhs;
    check.l2_ok = check.l2_lhs <= check.l2_rhs;
    return check;
}

/// Hard-threshold form: the estimate is f_hat_(2 r_hat).
inline OracleCheck oracle_check_hard(const CoefficientStats& stats, const BasisMatrix& basis,
                                     const TheoreticalLevels& levels, const Vector& mu_true)
{
    return oracle_check(hard_threshold(stats, basis, 2.0), levels, mu_true, basis);
}

/// Soft-threshold form: the estimate is f_tilde_(2 r_hat), same bounds.
inline OracleCheck oracle_check_soft(const CoefficientStats& stats, const BasisMatrix& basis,
                                     const TheoreticalLevels& levels, const Vector& mu_true)
{
    return oracle_check(soft_threshold(stats, basis, 2.0), levels, mu_true, basis);
}

/**
 * Gaussian bound on E||f_hat_(2r) - f_bar_(r)||_{m,2}^2:
 *   2 sum_k (sigma_k^2/n + sigma_eps^2/(mn) + 4 r_k^2) 1{|mu_k| > r_k}
 *   + (4 alpha / m) sum_k (r_k^2 + sigma_k^2/n + sigma_eps^2/(nm)).
 */
inline double gaussian_risk_bound(const TheoreticalLevels& levels, const Vector& mu_true)
{
    const auto m = static_cast<double>(mu_true.size());
    const auto n = static_cast<double>(levels.n);
    const double eps_term = levels.sigma_eps * levels.sigma_eps / (m * n);
    double active = 0.0;
    double all = 0.0;
    for (Eigen::Index k = 0; k < mu_true.size(); ++k) {
        const double var = levels.sigma_k[k] * levels.sigma_k[k] / n + eps_term;
        const double r2 = levels.r_k[k] * levels.r_k[k];
        if (std::abs(mu_true[k]) > levels.r_k[k]) active += var + 4.0 * r2;
        all += r2 + var;
    }
    return 2.0 * active + 4.0 * levels.alpha / m * all;
}

struct ExpectedRiskCheck
{
    double lhs_mc = 0.0;     // Monte Carlo mean of ||f_hat_(2r) - f_bar_(r)||^2
    double mc_se = 0.0;      // its standard error
    double rhs_bound = 0.0;
    bool ok = false;
    std::size_t replicates = 0;
};

struct OracleOptions
{
    BasisFamily basis_family = BasisFamily::Fourier;
    double alpha = 0.05;
    double delta = 0.01;
};

/**
 * Monte Carlo side of the Gaussian expected-risk bound, using the toy
 * estimator thresholded at the known levels 2 r_k. ok allows the Monte
 * Carlo mean to exceed the bound by a 3 standard-error guard:
 * lhs <= rhs (1 + 3 se / lhs).
 */
inline ExpectedRiskCheck expected_risk_check(const PanelConfig& scenario, std::size_t replicates,
                                   const OracleOptions& options = {})
{
    if (replicates < 2) throw std::invalid_argument("expected_risk_check: need at least two replicates");
    const BasisMatrix basis = make_basis(options.basis_family, scenario.grid);
    const Vector f = eval_signal(scenario.signal, scenario.grid);
    const Vector mu = analyze(f, basis);
    const TheoreticalLevels levels = theoretical_levels(sigma_k_theoretical(scenario.process, scenario.grid, basis),
                                                        scenario.noise_sd, scenario.n, options.alpha, options.delta);
    const Vector f_bar = truncated_target(mu, levels.r_k, basis).values;

    std::vector<double> losses;
    losses.reserve(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
        PanelConfig config = scenario;
        config.seed = derive_seed(scenario.seed, r);
        const CurvePanel panel = generate_panel(config);
        const Matrix coeffs = per_curve_coeffs(panel, basis);
        const Vector mu_hat = coeffs.colwise().mean().transpose();
        const Vector fit = threshold_coefficients(mu_hat, 2.0 * levels.r_k, ThresholdRule::Hard, basis).values;
        const double l2 = l2_norm(fit - f_bar);
        losses.push_back(l2 * l2);
    }
    ExpectedRiskCheck check;
    check.replicates = replicates;
    double sum = 0.0;
    for (double v : losses) sum += v;
    check.lhs_mc = sum / static_cast<double>(replicates);
    double ss = 0.0;
    for (double v : losses) ss += (v - check.lhs_mc) * (v - check.lhs_mc);
    check.mc_se = std::sqrt(ss / static_cast<double>(replicates - 1) / static_cast<double>(replicates));
    check.rhs_bound = gaussian_risk_bound(levels, mu);
    check.ok = check.lhs_mc <= 0.0 || check.lhs_mc <= check.rhs_bound * (1.0 + 3.0 * check.mc_se / check.lhs_mc);
    return check;
}

// ---------------------------------------------------------------------------
// Scenario runner
// ---------------------------------------------------------------------------

struct ScenarioConfig
{
    std::string name;
    PanelConfig panel;                       // panel.seed is ignored; replicates derive from base_seed
    std::vector<CandidateSpec> estimators;
    std::vector<BandKind> bands;
    BasisFamily band_basis = BasisFamily::Fourier;
    CoverageTarget coverage_target = CoverageTarget::TrueMean;
    double alpha = 0.05;                     // bands and oracle checks
    double delta = 0.0;                      // estimation and bands
    bool oracle_checks = false;
    double oracle_delta = 0.01;
    std::size_t replicates = 1;
    std::uint64_t base_seed = 0;
    std::size_t threads = 1;
    // Calibration echo, when the panel came from sigma* / SNR.
    std::optional<double> sigma_star;
    std::optional<double> snr;
};

inline void validate(const ScenarioConfig& config)
{
    validate(config.panel);
    if (config.replicates < 1) throw std::invalid_argument("scenario needs replicates >= 1");
    if (config.estimators.empty()) throw std::invalid_argument("scenario needs at least one estimator");
    for (const auto& c : config.estimators) {
        validate(c);
        if (!basis_supports(c.basis_family, config.panel.grid.m)) {
            throw std::invalid_argument(label(c) + " needs m to be a power of two");
        }
    }
    if (!config.bands.empty() && !basis_supports(config.band_basis, config.panel.grid.m)) {
        throw std::invalid_argument("band basis is not available for this m");
    }
}

struct EstimatorSummary
{
    std::string label;
    CandidateSpec spec;
    double sqrt_emse = 0.0;
    double sqrt_medmse = 0.0;
    double min_root_mse = 0.0;
    double max_root_mse = 0.0;
};

struct BandSummary
{
    BandKind kind = BandKind::ProposedHard1;
    std::size_t covered = 0;
    std::size_t replicates = 0;
    double coverage = 0.0;
    double mean_width = 0.0;
};

struct BenchReport
{
    std::string name;
    std::vector<EstimatorSummary> estimators;
    std::vector<BandSummary> bands;
    std::map<std::string, double> oracle_pass_rates;  // omega, hard_oracle, soft_oracle
    std::uint64_t base_seed = 0;
    std::size_t replicates = 0;
    std::vector<std::uint64_t> replicate_seeds;
};

namespace detail {

struct ReplicateResult
{
    std::vector<double> mse;                 // per estimator
    std::vector<std::pair<bool, double>> bands;  // covered, mean width
    bool omega = false;
    bool hard_oracle = false;
    bool soft_oracle = false;
};

inline ReplicateResult run_replicate(const ScenarioConfig& config, std::uint64_t seed, const Vector& truth,
                                     const std::vector<std::optional<BasisMatrix>>& bases,
                                     const std::optional<Vector>& gamma_diag, const Vector& band_target,
                                     const std::optional<TheoreticalLevels>& oracle_levels,
                                     const Vector& oracle_mu)
{
    PanelConfig panel_config = config.panel;
    panel_config.seed = seed;
    const CurvePanel panel = generate_panel(panel_config);
    auto basis_of = [&](BasisFamily f) -> const BasisMatrix& { return *bases[f == BasisFamily::Fourier ? 0 : 1]; };

    ReplicateResult out;
    std::map<std::tuple<int, double, double>, CoefficientStats> stats_cache;
    auto stats_for = [&](BasisFamily family, double alpha, double delta) -> const CoefficientStats& {
        const std::tuple<int, double, double> key{static_cast<int>(family), alpha, delta};
        auto it = stats_cache.find(key);
        if (it == stats_cache.end()) {
            it = stats_cache.emplace(key, pooled_stats(per_curve_coeffs(panel, basis_of(family)), alpha, delta)).first;
        }
        return it->second;
    };

    for (const CandidateSpec& c : config.estimators) {
        const BasisMatrix& basis = basis_of(c.basis_family);
        const MeanEstimate fit = apply_rule(stats_for(c.basis_family, c.alpha, config.delta), basis, c.rule, c.multiplier);
        const double l2 = l2_norm(fit.values - truth);
        out.mse.push_back(l2 * l2);
    }
    if (!config.bands.empty()) {
        const BasisMatrix& basis = basis_of(config.band_basis);
        const CoefficientStats& stats = stats_for(config.band_basis, config.alpha, config.delta);
        for (BandKind kind : config.bands) {
            const ConfidenceBand band = build_band(kind, stats, basis, gamma_diag);
            out.bands.emplace_back(covers(band, band_target), band.mean_width());
        }
    }
    if (oracle_levels) {
        const BasisMatrix& basis = basis_of(config.band_basis);
        const CoefficientStats& stats = stats_for(config.band_basis, config.alpha, config.oracle_delta);
        out.omega = omega_event_check(stats, *oracle_levels, oracle_mu);
        out.hard_oracle = oracle_check_hard(stats, basis, *oracle_levels, oracle_mu).ok();
        out.soft_oracle = oracle_check_soft(stats, basis, *oracle_levels, oracle_mu).ok();
    }
    return out;
}

} // namespace detail

/**
 * Runs every replicate of a scenario and aggregates errors, band coverage
 * and oracle pass rates. Replicate r simulates its panel from
 * derive_seed(base_seed, r); results are reduced in replicate order, so the
 * report does not depend on the thread count.
 */
inline BenchReport run_scenario(const ScenarioConfig& config)
{
    validate(config);
    const Grid& grid = config.panel.grid;

    std::vector<std::optional<BasisMatrix>> bases(2);
    auto ensure = [&](BasisFamily f) {
        auto& slot = bases[f == BasisFamily::Fourier ? 0 : 1];
        if (!slot) slot = make_basis(f, grid);
    };
    for (const auto& c : config.estimators) ensure(c.basis_family);
    if (!config.bands.empty() || config.oracle_checks) ensure(config.band_basis);

    const Vector truth = eval_signal(config.panel.signal, grid);
    std::optional<Vector> gamma_diag;
    if (!config.bands.empty()) gamma_diag = pointwise_variance(config.panel.process, grid);

    Vector band_target = truth;
    std::optional<TheoreticalLevels> oracle_levels;
    Vector oracle_mu;
    if ((!config.bands.empty() && config.coverage_target == CoverageTarget::TruncatedTarget) || config.oracle_checks) {
        const BasisMatrix& basis = *bases[config.band_basis == BasisFamily::Fourier ? 0 : 1];
        const Vector sigma_k_sq = sigma_k_theoretical(config.panel.process, grid, basis);
        if (config.coverage_target == CoverageTarget::TruncatedTarget) {
            band_target = band_surrogate_target(
                truth, basis, theoretical_levels(sigma_k_sq, config.panel.noise_sd, config.panel.n, config.alpha, config.delta));
        }
        if (config.oracle_checks) {
            oracle_levels = theoretical_levels(sigma_k_sq, config.panel.noise_sd, config.panel.n, config.alpha,
                                               config.oracle_delta);
            oracle_mu = analyze(truth, basis);
        }
    }

    BenchReport report;
    report.name = config.name;
    report.base_seed = config.base_seed;
    report.replicates = config.replicates;
    for (std::size_t r = 0; r < config.replicates; ++r) report.replicate_seeds.push_back(derive_seed(config.base_seed, r));

    std::vector<detail::ReplicateResult> results(config.replicates);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t failed_replicate = 0;
    auto worker = [&] {
        for (std::size_t r = next++; r < config.replicates; r = next++) {
            try {
                results[r] = detail::run_replicate(config, report.replicate_seeds[r], truth, bases, gamma_diag,
                                                   band_target, oracle_levels, oracle_mu);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error || r < failed_replicate) {
                    first_error = std::current_exception();
                    failed_replicate = r;
                }
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, config.replicates));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (first_error) {
        std::string what = "unknown error";
        try {
            std::rethrow_exception(first_error);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        throw std::runtime_error("replicate " + std::to_string(failed_replicate) + " (panel seed "
                                 + std::to_string(report.replicate_seeds[failed_replicate]) + ") failed: " + what);
    }

    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
        std::vector<double> mse;
        mse.reserve(results.size());
        for (const auto& res : results) mse.push_back(res.mse[e]);
        const MseSummary summary = mse_summary_from(mse);
        const auto [lo, hi] = std::minmax_element(mse.begin(), mse.end());
        report.estimators.push_back({label(config.estimators[e]), config.estimators[e], summary.sqrt_emse,
                                     summary.sqrt_medmse, std::sqrt(*lo), std::sqrt(*hi)});
    }
    for (std::size_t b = 0; b < config.bands.size(); ++b) {
        BandSummary summary;
        summary.kind = config.bands[b];
        summary.replicates = results.size();
        double width = 0.0;
        for (const auto& res : results) {
            summary.covered += res.bands[b].first ? 1 : 0;
            width += res.bands[b].second;
        }
        summary.coverage = static_cast<double>(summary.covered) / static_cast<double>(summary.replicates);
        summary.mean_width = width / static_cast<double>(summary.replicates);
        report.bands.push_back(summary);
    }
    if (config.oracle_checks) {
        double omega = 0, hard = 0, soft = 0;
        for (const auto& res : results) {
            omega += res.omega ? 1 : 0;
            hard += res.hard_oracle ? 1 : 0;
            soft += res.soft_oracle ? 1 : 0;
        }
        const auto s = static_cast<double>(results.size());
        report.oracle_pass_rates = {{"omega", omega / s}, {"hard_oracle", hard / s}, {"soft_oracle", soft / s}};
    }
    return report;
}

} // namespace fdmean
