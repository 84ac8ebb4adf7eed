#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fdmean/grid_basis.hpp>
#include <fdmean/random.hpp>

namespace fdmean {

// ---------------------------------------------------------------------------
// Mean signals
// ---------------------------------------------------------------------------

enum class SignalKind { Signal1, Signal2, Custom };

/**
 * Mean function of the simulated process.
 *
 * Signal1: c1 exp{-64 (t - 0.25)^2} + c2 exp{-256 (t - 0.75)^2}
 * Signal2: c3 1{0.35 < t < 0.375} + c3 1{0.75 < t < 0.875}
 * Custom:  user supplied values on the grid.
 */
struct SignalSpec
{
    SignalKind kind = SignalKind::Signal1;
    double c1 = 0.75;
    double c2 = 1.93;
    double c3 = 1.0;
    std::optional<Vector> custom_values;

    static SignalSpec signal1(double c1, double c2) { return {SignalKind::Signal1, c1, c2, 1.0, {}}; }
    static SignalSpec signal2(double c3) { return {SignalKind::Signal2, 0.0, 0.0, c3, {}}; }
    static SignalSpec custom(Vector values)
    {
        return {SignalKind::Custom, 0.0, 0.0, 0.0, std::move(values)};
    }
};

inline std::string_view to_string(SignalKind kind)
{
    switch (kind) {
    case SignalKind::Signal1: return "signal1";
    case SignalKind::Signal2: return "signal2";
    case SignalKind::Custom: return "custom";
    }
    return "?";
}

inline SignalKind parse_signal_kind(std::string_view name)
{
    if (name == "signal1") return SignalKind::Signal1;
    if (name == "signal2") return SignalKind::Signal2;
    if (name == "custom") return SignalKind::Custom;
    throw std::invalid_argument("unknown signal kind '" + std::string(name) + "'");
}

inline double eval_signal_at(const SignalSpec& spec, double t)
{
    switch (spec.kind) {
    case SignalKind::Signal1:
        return spec.c1 * std::exp(-64.0 * (t - 0.25) * (t - 0.25))
               + spec.c2 * std::exp(-256.0 * (t - 0.75) * (t - 0.75));
    case SignalKind::Signal2:
        return spec.c3 * ((0.35 < t && t < 0.375) ? 1.0 : 0.0)
               + spec.c3 * ((0.75 < t && t < 0.875) ? 1.0 : 0.0);
    case SignalKind::Custom: break;
    }
    throw std::invalid_argument("eval_signal_at: custom signals only exist on a grid");
}

inline Vector eval_signal(const SignalSpec& spec, const Grid& grid)
{
    if (spec.kind == SignalKind::Custom) {
        if (!spec.custom_values || static_cast<std::size_t>(spec.custom_values->size()) != grid.m) {
            throw std::invalid_argument("eval_signal: custom values must have length "
                                        + std::to_string(grid.m));
        }
        return *spec.custom_values;
    }
    Vector out(grid.points.size());
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = eval_signal_at(spec, grid.points[j]);
    return out;
}

/// Multiply every amplitude by `factor`.
inline SignalSpec scale_signal(SignalSpec spec, double factor)
{
    spec.c1 *= factor;
    spec.c2 *= factor;
    spec.c3 *= factor;
    if (spec.custom_values) *spec.custom_values *= factor;
    return spec;
}

/// |max_j f(t_j) - min_j f(t_j)|
inline double signal_range(const Vector& values)
{
    return values.size() == 0 ? 0.0 : values.maxCoeff() - values.minCoeff();
}

// ---------------------------------------------------------------------------
// Zero-mean processes
// ---------------------------------------------------------------------------

enum class ProcessKind { BrownianBridge, BrownianMotion, AR1, ARIMA11 };

/**
 * Zero-mean process Z. For BB/BM `innovation_sd` scales the standard path
 * (1 gives the textbook covariance); for AR1/ARIMA11 it is the AR innovation
 * standard deviation. Zero yields the degenerate process Z = 0.
 */
struct ProcessSpec
{
    ProcessKind kind = ProcessKind::BrownianBridge;
    double ar_phi = 0.5;
    double innovation_sd = 1.0;
};

inline std::string_view to_string(ProcessKind kind)
{
    switch (kind) {
    case ProcessKind::BrownianBridge: return "bb";
    case ProcessKind::BrownianMotion: return "bm";
    case ProcessKind::AR1: return "ar1";
    case ProcessKind::ARIMA11: return "arima11";
    }
    return "?";
}

inline ProcessKind parse_process_kind(std::string_view name)
{
    if (name == "bb" || name == "BB") return ProcessKind::BrownianBridge;
    if (name == "bm" || name == "BM") return ProcessKind::BrownianMotion;
    if (name == "ar1" || name == "AR1") return ProcessKind::AR1;
    if (name == "arima11" || name == "ARIMA11") return ProcessKind::ARIMA11;
    throw std::invalid_argument("unknown process kind '" + std::string(name) + "'");
}

inline void validate(const ProcessSpec& process)
{
    if (!(process.innovation_sd >= 0.0) || !std::isfinite(process.innovation_sd)) {
        throw std::invalid_argument("process innovation_sd must be finite and >= 0");
    }
    const bool ar = process.kind == ProcessKind::AR1 || process.kind == ProcessKind::ARIMA11;
    if (ar && !(process.ar_phi > -1.0 && process.ar_phi < 1.0)) {
        throw std::invalid_argument("ar_phi must lie in (-1, 1)");
    }
}

/// Stationary variance of the AR(1) component, innovation_sd^2 / (1 - phi^2).
inline double ar_stationary_variance(const ProcessSpec& process)
{
    return process.innovation_sd * process.innovation_sd / (1.0 - process.ar_phi * process.ar_phi);
}

/// Gamma(t_i, t_j) for grid indices i, j (0-based).
inline double covariance_on_grid(const ProcessSpec& process, const Grid& grid, std::size_t i,
                                 std::size_t j)
{
    const double scale2 = process.innovation_sd * process.innovation_sd;
    const double s = grid.points[static_cast<Eigen::Index>(i)];
    const double t = grid.points[static_cast<Eigen::Index>(j)];
    switch (process.kind) {
    case ProcessKind::BrownianBridge: return scale2 * (std::min(s, t) - s * t);
    case ProcessKind::BrownianMotion: return scale2 * std::min(s, t);
    case ProcessKind::AR1: {
        const auto lag = static_cast<double>(i > j ? i - j : j - i);
        return ar_stationary_variance(process) * std::pow(process.ar_phi, lag);
    }
    case ProcessKind::ARIMA11: {
        // Z_i = X_0 + ... + X_i with X a stationary AR(1).
        double sum = 0.0;
        for (std::size_t a = 0; a <= i; ++a) {
            for (std::size_t b = 0; b <= j; ++b) {
                sum += std::pow(process.ar_phi, static_cast<double>(a > b ? a - b : b - a));
            }
        }
        return ar_stationary_variance(process) * sum;
    }
    }
    return 0.0;
}

/**
 * Gamma(s, t). BB and BM accept any s, t in (0, 1); AR1 and ARIMA11 are
 * defined only on design points.
 */
inline double covariance_kernel(const ProcessSpec& process, const Grid& grid, double s, double t)
{
    switch (process.kind) {
    case ProcessKind::BrownianBridge:
    case ProcessKind::BrownianMotion: {
        const double scale2 = process.innovation_sd * process.innovation_sd;
        const double lo = std::min(s, t);
        return scale2 * (process.kind == ProcessKind::BrownianBridge ? lo - s * t : lo);
    }
    case ProcessKind::AR1:
    case ProcessKind::ARIMA11:
        return covariance_on_grid(process, grid, grid_index(grid, s), grid_index(grid, t));
    }
    return 0.0;
}

/// Full m x m covariance matrix Gamma(t_i, t_j).
inline Matrix covariance_matrix(const ProcessSpec& process, const Grid& grid)
{
    const auto m = static_cast<Eigen::Index>(grid.m);
    if (process.kind == ProcessKind::ARIMA11) {
        // Double prefix sum of the AR(1) covariance.
        ProcessSpec ar = process;
        ar.kind = ProcessKind::AR1;
        Matrix base(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                base(i, j) = covariance_on_grid(ar, grid, static_cast<std::size_t>(i),
                                                static_cast<std::size_t>(j));
        for (Eigen::Index i = 1; i < m; ++i) base.row(i) += base.row(i - 1);
        for (Eigen::Index j = 1; j < m; ++j) base.col(j) += base.col(j - 1);
        return base;
    }
    Matrix cov(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            cov(i, j) = covariance_on_grid(process, grid, static_cast<std::size_t>(i),
                                           static_cast<std::size_t>(j));
    return cov;
}

/// Gamma(t_j, t_j) for every design point.
inline Vector pointwise_variance(const ProcessSpec& process, const Grid& grid)
{
    if (process.kind == ProcessKind::ARIMA11) return covariance_matrix(process, grid).diagonal();
    Vector out(static_cast<Eigen::Index>(grid.m));
    for (std::size_t j = 0; j < grid.m; ++j)
        out[static_cast<Eigen::Index>(j)] = covariance_on_grid(process, grid, j, j);
    return out;
}

/// One zero-mean path Z(t_1), ..., Z(t_m).
template <class Rng>
Vector simulate_process(const ProcessSpec& process, const Grid& grid, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto m = static_cast<Eigen::Index>(grid.m);
    Vector path(m);

    switch (process.kind) {
    case ProcessKind::BrownianMotion:
    case ProcessKind::BrownianBridge: {
        double w = 0.0;
        double previous_t = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            w += std::sqrt(grid.points[j] - previous_t) * normal(rng);
            previous_t = grid.points[j];
            path[j] = w;
        }
        if (process.kind == ProcessKind::BrownianBridge) {
            const double w1 = w + std::sqrt(1.0 - previous_t) * normal(rng);
            path -= w1 * grid.points;
        }
        path *= process.innovation_sd;
        break;
    }
    case ProcessKind::AR1:
    case ProcessKind::ARIMA11: {
        double x = std::sqrt(ar_stationary_variance(process)) * normal(rng);
        path[0] = x;
        for (Eigen::Index j = 1; j < m; ++j) {
            x = process.ar_phi * x + process.innovation_sd * normal(rng);
            path[j] = x;
        }
        if (process.kind == ProcessKind::ARIMA11) {
            for (Eigen::Index j = 1; j < m; ++j) path[j] += path[j - 1];
        }
        break;
    }
    }
    return path;
}

inline double median(std::vector<double> values)
{
    if (values.empty()) throw std::invalid_argument("median of an empty sequence");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// median_j Gamma(t_j, t_j)
inline double median_process_variance(const ProcessSpec& process, const Grid& grid)
{
    const Vector var = pointwise_variance(process, grid);
    return median(std::vector<double>(var.data(), var.data() + var.size()));
}

// ---------------------------------------------------------------------------
// Calibration and panels
// ---------------------------------------------------------------------------

struct Calibration
{
    ProcessSpec process;    // AR innovations set by the variance matching
    SignalSpec signal;      // amplitudes rescaled to the requested SNR
    double noise_sd = 0.0;  // sigma_eps
    double process_variance = 0.0;  // Var[Z] = median pointwise variance
};

/**
 * Sets the noise level from sigma* = Var[Z] / sigma_eps^2 and rescales the
 * signal so that Range[f] = snr * sqrt(Var[Z] + sigma_eps^2).
 *
 * AR1 innovations are chosen so its variance equals the median Brownian
 * bridge variance on the same grid; ARIMA11 is matched to Brownian motion.
 */
inline Calibration calibrate(ProcessSpec process, const Grid& grid, double sigma_star, double snr,
                             const SignalSpec& signal)
{
    if (!(sigma_star > 0.0) || !(snr > 0.0)) {
        throw std::invalid_argument("calibrate: sigma_star and snr must be positive");
    }
    validate(process);

    if (process.kind == ProcessKind::AR1) {
        const double target = median_process_variance({ProcessKind::BrownianBridge, 0.0, 1.0}, grid);
        process.innovation_sd = std::sqrt(target * (1.0 - process.ar_phi * process.ar_phi));
    } else if (process.kind == ProcessKind::ARIMA11) {
        const double target = median_process_variance({ProcessKind::BrownianMotion, 0.0, 1.0}, grid);
        ProcessSpec unit = process;
        unit.innovation_sd = 1.0;
        process.innovation_sd = std::sqrt(target / median_process_variance(unit, grid));
    }

    Calibration out;
    out.process = process;
    out.process_variance = median_process_variance(process, grid);
    const double noise_var = out.process_variance / sigma_star;
    out.noise_sd = std::sqrt(noise_var);

    const double range = signal_range(eval_signal(signal, grid));
    if (!(range > 0.0)) throw std::invalid_argument("calibrate: signal has zero range");
    out.signal = scale_signal(signal, snr * std::sqrt(out.process_variance + noise_var) / range);
    return out;
}

struct PanelConfig
{
    std::size_t n = 0;
    Grid grid;
    SignalSpec signal;
    ProcessSpec process;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
};

/// n x m observation matrix Y with its grid.
struct CurvePanel
{
    Grid grid;
    Matrix Y;
    std::optional<Vector> true_mean;

    std::size_t n() const { return static_cast<std::size_t>(Y.rows()); }
    std::size_t m() const { return static_cast<std::size_t>(Y.cols()); }
};

inline void validate(const PanelConfig& config)
{
    if (config.n < 2) throw std::invalid_argument("panel needs n >= 2 curves");
    if (config.grid.m < 2) throw std::invalid_argument("panel needs a grid with m >= 2");
    if (!(config.noise_sd >= 0.0) || !std::isfinite(config.noise_sd)) {
        throw std::invalid_argument("noise_sd must be finite and >= 0");
    }
    validate(config.process);
}

/// Y_ij = f(t_j) + Z_i(t_j) + eps_ij. Curve i draws from stream (seed, i).
inline CurvePanel generate_panel(const PanelConfig& config)
{
    validate(config);
    const Vector mean = eval_signal(config.signal, config.grid);
    const auto m = static_cast<Eigen::Index>(config.grid.m);

    CurvePanel panel;
    panel.grid = config.grid;
    panel.Y.resize(static_cast<Eigen::Index>(config.n), m);
    panel.true_mean = mean;

    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < config.n; ++i) {
        auto rng = stream_engine(config.seed, i);
        Vector row = mean + simulate_process(config.process, config.grid, rng);
        for (Eigen::Index j = 0; j < m; ++j) row[j] += config.noise_sd * normal(rng);
        panel.Y.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return panel;
}

/// sigma_k^2 = (1/m^2) sum_j sum_j' Gamma(t_j, t_j') phi_k(t_j) phi_k(t_j'), clamped at 0.
inline Vector sigma_k_theoretical(const Matrix& covariance, const BasisMatrix& basis)
{
    if (static_cast<std::size_t>(covariance.rows()) != basis.size()
        || covariance.rows() != covariance.cols()) {
        throw std::invalid_argument("sigma_k_theoretical: covariance must be m x m");
    }
    const auto m = static_cast<double>(basis.size());
    const Matrix projected = covariance * basis.values;
    Vector out = (basis.values.cwiseProduct(projected)).colwise().sum().transpose() / (m * m);
    return out.cwiseMax(0.0);
}

inline Vector sigma_k_theoretical(const ProcessSpec& process, const Grid& grid,
                                  const BasisMatrix& basis)
{
    return sigma_k_theoretical(covariance_matrix(process, grid), basis);
}

} // namespace fdmean
