#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <fdmean/estimator.hpp>
#include <fdmean/random.hpp>

namespace fdmean {

/// One entry of the estimator library: basis x rule x level multiplier x alpha.
struct CandidateSpec
{
    BasisFamily basis_family = BasisFamily::Fourier;
    ThresholdRule rule = ThresholdRule::Hard;
    double multiplier = 1.0;
    double alpha = 0.05;

    friend bool operator==(const CandidateSpec&, const CandidateSpec&) = default;
};

inline void validate(const CandidateSpec& candidate)
{
    if (!(candidate.alpha > 0.0 && candidate.alpha < 1.0)) {
        throw std::invalid_argument("candidate alpha must lie in (0, 1)");
    }
    if (candidate.multiplier != 1.0 && candidate.multiplier != 2.0) {
        throw std::invalid_argument("candidate multiplier must be 1 or 2");
    }
}

/// Display label in the style HT(r)-Fourier, ST(2r)-Haar, OLS-Fourier.
inline std::string label(const CandidateSpec& c)
{
    const std::string family = c.basis_family == BasisFamily::Fourier ? "Fourier" : "Haar";
    if (c.rule == ThresholdRule::LeastSquares) return "OLS-" + family;
    const std::string level = c.multiplier == 1.0 ? "r" : "2r";
    return std::string(c.rule == ThresholdRule::Hard ? "HT(" : "ST(") + level + ")-" + family;
}

/// {Fourier, Haar} x {Hard} x {1, 2} x {alpha = 0.05}.
inline std::vector<CandidateSpec> default_candidates()
{
    return {{BasisFamily::Fourier, ThresholdRule::Hard, 1.0, 0.05},
            {BasisFamily::Fourier, ThresholdRule::Hard, 2.0, 0.05},
            {BasisFamily::Haar, ThresholdRule::Hard, 1.0, 0.05},
            {BasisFamily::Haar, ThresholdRule::Hard, 2.0, 0.05}};
}

/// Fits `candidate` on the curves in `rows` (delta is the threshold offset).
inline MeanEstimate fit_candidate(const Matrix& Y, const std::vector<std::size_t>& rows,
                                  const BasisMatrix& basis, const CandidateSpec& candidate,
                                  double delta = 0.0)
{
    Matrix subset(static_cast<Eigen::Index>(rows.size()), Y.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        subset.row(static_cast<Eigen::Index>(r)) = Y.row(static_cast<Eigen::Index>(rows[r]));
    }
    const CoefficientStats stats = pooled_stats(per_curve_coeffs(subset, basis), candidate.alpha, delta);
    return apply_rule(stats, basis, candidate.rule, candidate.multiplier);
}

struct PanelSplit
{
    std::vector<std::size_t> i1;  // fitting half (gets the extra curve for odd n)
    std::vector<std::size_t> i2;  // validation half
};

/// Uniform random halving of curve indices 0..n-1; deterministic given seed.
inline PanelSplit split_panel(std::size_t n, std::uint64_t seed)
{
    if (n < 4) throw std::invalid_argument("split_panel: need n >= 4 curves, got " + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Engine rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t first = (n + 1) / 2;
    PanelSplit split;
    split.i1.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first));
    split.i2.assign(order.begin() + static_cast<std::ptrdiff_t>(first), order.end());
    std::sort(split.i1.begin(), split.i1.end());
    std::sort(split.i2.begin(), split.i2.end());
    return split;
}

/// (1/n2) sum_{i in I2} (1/m) sum_j (Y_ij - g(t_j))^2
inline double empirical_risk(const Matrix& Y, const std::vector<std::size_t>& indices, const Vector& g)
{
    if (indices.empty()) throw std::invalid_argument("empirical_risk: empty validation set");
    if (g.size() != Y.cols()) throw std::invalid_argument("empirical_risk: length mismatch");
    double total = 0.0;
    for (std::size_t i : indices) {
        total += (Y.row(static_cast<Eigen::Index>(i)).transpose() - g).squaredNorm();
    }
    return total / (static_cast<double>(indices.size()) * static_cast<double>(Y.cols()));
}

struct SelectionResult
{
    std::size_t winner_index = 0;
    CandidateSpec winner;
    std::vector<CandidateSpec> candidates;
    std::vector<double> risks;      // +inf for skipped candidates
    std::vector<std::string> warnings;
    Vector fitted_values;           // winner fitted on I1 (or on all curves if refit)
    bool refit_on_all = false;
    std::uint64_t split_seed = 0;
    std::vector<std::size_t> i1;
    std::vector<std::size_t> i2;
};

/**
 * Fits every candidate on I1, scores it on I2 and returns the argmin;
 * ties go to the earliest candidate. Candidates whose basis does not
 * exist for this m are skipped with a warning.
 *
 * With `refit_on_all` the winner is refit on all n curves afterwards. That
 * estimate is not the one the data-splitting risk bound covers.
 */
inline SelectionResult select(const CurvePanel& panel, const std::vector<CandidateSpec>& candidates,
                              std::uint64_t seed, bool refit_on_all = false, double delta = 0.0)
{
    if (candidates.empty()) throw std::invalid_argument("select: empty candidate list");
    for (const auto& c : candidates) validate(c);

    SelectionResult result;
    result.candidates = candidates;
    result.split_seed = seed;
    result.refit_on_all = refit_on_all;
    const PanelSplit split = split_panel(panel.n(), seed);
    result.i1 = split.i1;
    result.i2 = split.i2;

    std::vector<std::optional<BasisMatrix>> bases(2);
    auto basis_for = [&](BasisFamily family) -> const BasisMatrix& {
        auto& slot = bases[family == BasisFamily::Fourier ? 0 : 1];
        if (!slot) slot = make_basis(family, panel.grid);
        return *slot;
    };

    bool any = false;
    double best = std::numeric_limits<double>::infinity();
    Vector best_values;
    for (std::size_t l = 0; l < candidates.size(); ++l) {
        const CandidateSpec& c = candidates[l];
        if (!basis_supports(c.basis_family, panel.m())) {
            result.warnings.push_back("skipped " + label(c) + ": m = " + std::to_string(panel.m())
                                      + " is not a power of two");
            result.risks.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        const MeanEstimate fit = fit_candidate(panel.Y, split.i1, basis_for(c.basis_family), c, delta);
        const double risk = empirical_risk(panel.Y, split.i2, fit.values);
        result.risks.push_back(risk);
        if (!any || risk < best) {
            any = true;
            best = risk;
            result.winner_index = l;
            best_values = fit.values;
        }
    }
    if (!any) throw std::invalid_argument("select: no candidate is valid for m = " + std::to_string(panel.m()));

    result.winner = candidates[result.winner_index];
    if (refit_on_all) {
        std::vector<std::size_t> all(panel.n());
        std::iota(all.begin(), all.end(), std::size_t{0});
        best_values = fit_candidate(panel.Y, all, basis_for(result.winner.basis_family), result.winner, delta).values;
    }
    result.fitted_values = std::move(best_values);
    return result;
}

} // namespace fdmean
