#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <fdmean/bands.hpp>
#include <fdmean/estimator.hpp>
#include <fdmean/metrics.hpp>
#include <fdmean/process_sim.hpp>
#include <fdmean/selector.hpp>

namespace fdmean {

using json = nlohmann::ordered_json;

/// Raised for unreadable or unwritable files (CLI exit code 2).
class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip-safe decimal rendering (17 significant digits).
inline std::string format_double(double value)
{
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> parse_csv_row(const std::string& line, std::size_t line_no)
{
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used == 0 || used != cell.size()) {
            throw std::invalid_argument("csv line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
        }
        row.push_back(value);
    }
    return row;
}

} // namespace detail

/// First row holds the grid points, each further row one curve.
inline void write_panel_csv(std::ostream& out, const CurvePanel& panel)
{
    for (Eigen::Index j = 0; j < panel.grid.points.size(); ++j) {
        if (j) out << ',';
        out << format_double(panel.grid.points[j]);
    }
    out << '\n';
    for (Eigen::Index i = 0; i < panel.Y.rows(); ++i) {
        for (Eigen::Index j = 0; j < panel.Y.cols(); ++j) {
            if (j) out << ',';
            out << format_double(panel.Y(i, j));
        }
        out << '\n';
    }
}

/// Lines starting with '#' and blank lines are ignored. The grid row must be the midpoint grid.
inline CurvePanel read_panel_csv(std::istream& in)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(detail::parse_csv_row(line, line_no));
    }
    if (rows.size() < 2) throw std::invalid_argument("panel csv: need a grid row and at least one curve");
    const std::size_t m = rows[0].size();
    CurvePanel panel;
    panel.grid = make_grid(m);
    for (std::size_t j = 0; j < m; ++j) {
        if (std::abs(rows[0][j] - panel.grid.points[static_cast<Eigen::Index>(j)]) > 1e-12) {
            throw std::invalid_argument("panel csv: grid row is not the midpoint grid (j - 1/2)/m");
        }
    }
    panel.Y.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(m));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != m) {
            throw std::invalid_argument("panel csv: row " + std::to_string(i) + " has " + std::to_string(rows[i].size())
                                        + " values, expected " + std::to_string(m));
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (!std::isfinite(rows[i][j])) throw std::invalid_argument("panel csv: non-finite value");
            panel.Y(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return panel;
}

/// k, mu_hat, S_k, r_hat, active (k is 1-based).
inline void write_coefficients_csv(std::ostream& out, const CoefficientStats& stats, const MeanEstimate& estimate)
{
    out << "k,mu_hat,S_k,r_hat,active\n";
    for (Eigen::Index k = 0; k < stats.mu_hat.size(); ++k) {
        out << (k + 1) << ',' << format_double(stats.mu_hat[k]) << ',' << format_double(stats.s_k[k]) << ','
            << format_double(stats.r_hat[k]) << ',' << (estimate.active[static_cast<std::size_t>(k)] ? 1 : 0) << '\n';
    }
}

/// j, t_j, f_hat, active_terms: active_terms counts active k with phi_k(t_j) != 0.
inline void write_estimate_csv(std::ostream& out, const Grid& grid, const MeanEstimate& estimate,
                               const BasisMatrix& basis)
{
    out << "j,t_j,f_hat,active_terms\n";
    for (Eigen::Index j = 0; j < estimate.values.size(); ++j) {
        std::size_t terms = 0;
        for (std::size_t k = 0; k < estimate.active.size(); ++k) {
            if (estimate.active[k] && basis.values(j, static_cast<Eigen::Index>(k)) != 0.0) ++terms;
        }
        out << (j + 1) << ',' << format_double(grid.points[j]) << ',' << format_double(estimate.values[j]) << ','
            << terms << '\n';
    }
}

/// j, t_j, center, lower, upper.
inline void write_band_csv(std::ostream& out, const Grid& grid, const ConfidenceBand& band)
{
    out << "j,t_j,center,lower,upper\n";
    for (Eigen::Index j = 0; j < band.center.size(); ++j) {
        out << (j + 1) << ',' << format_double(grid.points[j]) << ',' << format_double(band.center[j]) << ','
            << format_double(band.lower[j]) << ',' << format_double(band.upper[j]) << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON: configuration
// ---------------------------------------------------------------------------

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json to_json(const SignalSpec& s)
{
    json j{{"kind", to_string(s.kind)}};
    switch (s.kind) {
    case SignalKind::Signal1:
        j["c1"] = s.c1;
        j["c2"] = s.c2;
        j["form"] = "c1*exp(-64(t-0.25)^2) + c2*exp(-256(t-0.75)^2)";
        break;
    case SignalKind::Signal2: j["c3"] = s.c3; break;
    case SignalKind::Custom: j["values"] = to_std(*s.custom_values); break;
    }
    return j;
}

inline SignalSpec signal_from_json(const json& j)
{
    SignalSpec s;
    s.kind = parse_signal_kind(j.value("kind", std::string("signal1")));
    s.c1 = j.value("c1", 0.75);
    s.c2 = j.value("c2", 1.93);
    s.c3 = j.value("c3", 1.0);
    if (s.kind == SignalKind::Custom) s.custom_values = to_vector(j.at("values").get<std::vector<double>>());
    return s;
}

inline json to_json(const ProcessSpec& p)
{
    return {{"kind", to_string(p.kind)}, {"ar_phi", p.ar_phi}, {"innovation_sd", p.innovation_sd}};
}

inline ProcessSpec process_from_json(const json& j)
{
    ProcessSpec p;
    p.kind = parse_process_kind(j.value("kind", std::string("bb")));
    p.ar_phi = j.value("ar_phi", 0.5);
    p.innovation_sd = j.value("innovation_sd", 1.0);
    validate(p);
    return p;
}

inline json to_json(const PanelConfig& c)
{
    return {{"n", c.n},          {"m", c.grid.m},           {"signal", to_json(c.signal)},
            {"process", to_json(c.process)}, {"noise_sd", c.noise_sd}, {"seed", c.seed}};
}

/// Label form: HT(r)-Fourier, ST(2r)-Haar, OLS-Fourier (alpha 0.05).
inline CandidateSpec parse_candidate_label(const std::string& text)
{
    const auto dash = text.rfind('-');
    if (dash == std::string::npos) throw std::invalid_argument("bad estimator label '" + text + "'");
    CandidateSpec c;
    c.basis_family = parse_basis_family(text.substr(dash + 1));
    const std::string head = text.substr(0, dash);
    if (head == "OLS" || head == "LS") {
        c.rule = ThresholdRule::LeastSquares;
    } else if (head == "HT(r)" || head == "HT(2r)" || head == "ST(r)" || head == "ST(2r)") {
        c.rule = head[0] == 'H' ? ThresholdRule::Hard : ThresholdRule::Soft;
        c.multiplier = head.find("2r") != std::string::npos ? 2.0 : 1.0;
    } else {
        throw std::invalid_argument("bad estimator label '" + text + "'");
    }
    return c;
}

inline json to_json(const CandidateSpec& c)
{
    return {{"label", label(c)},
            {"basis", to_string(c.basis_family)},
            {"rule", to_string(c.rule)},
            {"multiplier", c.multiplier},
            {"alpha", c.alpha}};
}

inline CandidateSpec candidate_from_json(const json& j)
{
    if (j.is_string()) return parse_candidate_label(j.get<std::string>());
    CandidateSpec c;
    c.basis_family = parse_basis_family(j.value("basis", std::string("fourier")));
    c.rule = parse_threshold_rule(j.value("rule", std::string("hard")));
    c.multiplier = j.value("multiplier", 1.0);
    c.alpha = j.value("alpha", 0.05);
    validate(c);
    return c;
}

/**
 * Panel part of a scenario. Either "noise_sd" is given directly or
 * "calibration": {"sigma_star", "snr"} derives it (and rescales the signal).
 */
inline PanelConfig panel_config_from_json(const json& j, std::optional<double>* sigma_star = nullptr,
                                          std::optional<double>* snr = nullptr)
{
    PanelConfig c;
    c.n = j.at("n").get<std::size_t>();
    c.grid = make_grid(j.at("m").get<std::size_t>());
    c.signal = signal_from_json(j.value("signal", json::object()));
    c.process = process_from_json(j.value("process", json::object()));
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("calibration")) {
        const json& cal = j.at("calibration");
        const double star = cal.at("sigma_star").get<double>();
        const double ratio = cal.at("snr").get<double>();
        const Calibration calibrated = calibrate(c.process, c.grid, star, ratio, c.signal);
        c.process = calibrated.process;
        c.signal = calibrated.signal;
        c.noise_sd = calibrated.noise_sd;
        if (sigma_star) *sigma_star = star;
        if (snr) *snr = ratio;
    } else {
        c.noise_sd = j.value("noise_sd", 0.0);
    }
    validate(c);
    return c;
}

inline ScenarioConfig scenario_from_json(const json& j)
{
    ScenarioConfig s;
    s.name = j.value("name", std::string("scenario"));
    s.panel = panel_config_from_json(j, &s.sigma_star, &s.snr);
    s.replicates = j.value("replicates", std::size_t{1});
    s.base_seed = j.value("seed", std::uint64_t{0});
    s.alpha = j.value("alpha", 0.05);
    s.delta = j.value("delta", 0.0);
    if (j.contains("estimators")) {
        for (const json& e : j.at("estimators")) s.estimators.push_back(candidate_from_json(e));
    } else {
        s.estimators = default_candidates();
    }
    if (j.contains("bands")) {
        for (const json& b : j.at("bands")) s.bands.push_back(parse_band_kind(b.get<std::string>()));
    }
    s.band_basis = parse_basis_family(j.value("band_basis", std::string("fourier")));
    s.coverage_target = parse_coverage_target(j.value("coverage_target", std::string("true_mean")));
    s.oracle_checks = j.value("oracle_checks", false);
    s.oracle_delta = j.value("oracle_delta", 0.01);
    s.threads = j.value("threads", std::size_t{1});
    validate(s);
    return s;
}

inline json to_json(const ScenarioConfig& s)
{
    json j = to_json(s.panel);
    j["name"] = s.name;
    j["seed"] = s.base_seed;
    j["replicates"] = s.replicates;
    j["alpha"] = s.alpha;
    j["delta"] = s.delta;
    j["estimators"] = json::array();
    for (const auto& c : s.estimators) j["estimators"].push_back(to_json(c));
    j["bands"] = json::array();
    for (BandKind b : s.bands) j["bands"].push_back(to_string(b));
    j["band_basis"] = to_string(s.band_basis);
    j["coverage_target"] = to_string(s.coverage_target);
    j["oracle_checks"] = s.oracle_checks;
    j["oracle_delta"] = s.oracle_delta;
    if (s.sigma_star) j["calibration"] = {{"sigma_star", *s.sigma_star}, {"snr", *s.snr}};
    return j;
}

// ---------------------------------------------------------------------------
// JSON: reports
// ---------------------------------------------------------------------------

inline json to_json(const SelectionResult& r)
{
    json j;
    j["candidates"] = json::array();
    for (std::size_t l = 0; l < r.candidates.size(); ++l) {
        json c = to_json(r.candidates[l]);
        if (std::isfinite(r.risks[l])) {
            c["risk"] = r.risks[l];
        } else {
            c["risk"] = nullptr;
            c["skipped"] = true;
        }
        j["candidates"].push_back(c);
    }
    j["winner_index"] = r.winner_index;
    j["winner"] = to_json(r.winner);
    j["split_seed"] = r.split_seed;
    j["i1"] = r.i1;
    j["i2"] = r.i2;
    j["refit_on_all"] = r.refit_on_all;
    j["fitted_on"] = r.refit_on_all ? "all curves (post-selection refit)" : "I1";
    j["fitted_values"] = to_std(r.fitted_values);
    j["warnings"] = r.warnings;
    return j;
}

inline constexpr const char* kCompetitorNote =
    "competitor bands are centered at the pooled least-squares mean (ensemble average), not a kernel smoother";

inline json to_json(const CoverageReport& r)
{
    return {{"band", to_string(r.kind)},          {"target", to_string(r.target)},
            {"replicates", r.replicates},        {"covered", r.covered_count},
            {"coverage", r.coverage()},          {"mean_width", r.mean_width},
            {"notes", json::array({kCompetitorNote})}};
}

inline json to_json(const BenchReport& r)
{
    json j;
    j["name"] = r.name;
    j["base_seed"] = r.base_seed;
    j["replicates"] = r.replicates;
    j["estimators"] = json::array();
    for (const auto& e : r.estimators) {
        j["estimators"].push_back({{"label", e.label},
                                   {"spec", to_json(e.spec)},
                                   {"sqrt_emse", e.sqrt_emse},
                                   {"sqrt_medmse", e.sqrt_medmse},
                                   {"min_root_mse", e.min_root_mse},
                                   {"max_root_mse", e.max_root_mse}});
    }
    j["bands"] = json::array();
    for (const auto& b : r.bands) {
        j["bands"].push_back({{"band", to_string(b.kind)},
                              {"coverage", b.coverage},
                              {"covered", b.covered},
                              {"replicates", b.replicates},
                              {"mean_width", b.mean_width}});
    }
    j["oracle_pass_rates"] = r.oracle_pass_rates;
    j["replicate_seeds"] = r.replicate_seeds;
    j["notes"] = json::array({kCompetitorNote, "sqrt_emse values are unscaled"});
    return j;
}

/// One row per estimator and per band; `scale` multiplies error columns (1e6 mirrors the table display).
inline void write_bench_csv(std::ostream& out, const BenchReport& r, double scale = 1.0)
{
    out << "scenario,kind,name,sqrt_emse,sqrt_medmse,coverage,mean_width\n";
    for (const auto& e : r.estimators) {
        out << r.name << ",estimator," << e.label << ',' << format_double(e.sqrt_emse * scale) << ','
            << format_double(e.sqrt_medmse * scale) << ",,\n";
    }
    for (const auto& b : r.bands) {
        out << r.name << ",band," << to_string(b.kind) << ",,," << format_double(b.coverage) << ','
            << format_double(b.mean_width) << '\n';
    }
}

inline json to_json(const SparsityReport& r, BasisFamily family)
{
    return {{"basis", to_string(family)},       {"count", r.count},       {"indices", r.indices},
            {"sup_error", r.sup_error},         {"l2_error", r.l2_error}, {"mu", to_std(r.mu)}};
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

inline json read_json_file(const std::string& path)
{
    auto in = open_input(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument("invalid JSON in '" + path + "': " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j)
{
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

} // namespace fdmean
