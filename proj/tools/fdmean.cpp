// Command-line front end: simulate panels, estimate, select, build bands,
// report sparsity and run benchmark scenarios.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 I/O failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <fdmean/fdmean.hpp>
#include <fdmean/io.hpp>

namespace {

using namespace fdmean;

struct EstimateOptions
{
    std::string panel_path;
    std::string basis = "fourier";
    std::string rule = "hard";
    double multiplier = 1.0;
    double alpha = 0.05;
    double delta = 0.0;
};

CurvePanel load_panel(const std::string& path)
{
    auto in = open_input(path);
    return read_panel_csv(in);
}

/// The CSV itself plus a sidecar "<path>.json" echoing the configuration.
void write_with_sidecar(const std::string& path, const std::string& body, const json& provenance)
{
    auto out = open_output(path);
    auto side = open_output(path + ".json");
    out << body;
    side << provenance.dump(2) << '\n';
    if (!out || !side) throw IoError("failed writing '" + path + "'");
}

std::uint64_t effective_seed(const json& scenario, const std::optional<std::uint64_t>& seed)
{
    return seed ? *seed : scenario.value("seed", std::uint64_t{0});
}

int cmd_simulate(const std::string& scenario_path, const std::optional<std::uint64_t>& seed, const std::string& out)
{
    json scenario = read_json_file(scenario_path);
    scenario["seed"] = effective_seed(scenario, seed);
    PanelConfig config = panel_config_from_json(scenario);
    // Refuse early when the destination cannot be written.
    open_output(out);
    const CurvePanel panel = generate_panel(config);
    std::ostringstream body;
    write_panel_csv(body, panel);
    json provenance{{"command", "simulate"}, {"scenario", scenario}, {"panel_config", to_json(config)}};
    write_with_sidecar(out, body.str(), provenance);
    return 0;
}

int cmd_estimate(const EstimateOptions& opt, const std::string& out_prefix)
{
    const CurvePanel panel = load_panel(opt.panel_path);
    const BasisFamily family = parse_basis_family(opt.basis);
    if (!basis_supports(family, panel.m())) {
        throw std::invalid_argument("the Haar basis needs m to be a power of two; panel has m = "
                                    + std::to_string(panel.m()));
    }
    const BasisMatrix basis = make_basis(family, panel.grid);
    const CoefficientStats stats = pooled_stats(per_curve_coeffs(panel, basis), opt.alpha, opt.delta);
    const MeanEstimate estimate = apply_rule(stats, basis, parse_threshold_rule(opt.rule), opt.multiplier);

    std::ostringstream coeffs, values;
    write_coefficients_csv(coeffs, stats, estimate);
    write_estimate_csv(values, panel.grid, estimate, basis);
    const json provenance{{"command", "estimate"},   {"panel", opt.panel_path}, {"basis", opt.basis},
                          {"rule", opt.rule},        {"multiplier", opt.multiplier}, {"alpha", opt.alpha},
                          {"delta", opt.delta},      {"n", panel.n()},          {"m", panel.m()},
                          {"active_count", estimate.active_count()}};
    write_with_sidecar(out_prefix + "_coefficients.csv", coeffs.str(), provenance);
    write_with_sidecar(out_prefix + "_estimate.csv", values.str(), provenance);
    std::cout << "active coefficients: " << estimate.active_count() << '\n';
    return 0;
}

int cmd_select(const std::string& panel_path, const std::string& scenario_path, std::uint64_t seed, bool refit,
               double delta, const std::string& out)
{
    const CurvePanel panel = load_panel(panel_path);
    std::vector<CandidateSpec> candidates = default_candidates();
    if (!scenario_path.empty()) {
        const json scenario = read_json_file(scenario_path);
        if (scenario.contains("estimators")) {
            candidates.clear();
            for (const json& e : scenario.at("estimators")) candidates.push_back(candidate_from_json(e));
        }
    }
    open_output(out);
    const SelectionResult result = select(panel, candidates, seed, refit, delta);
    json report = to_json(result);
    report["command"] = "select";
    report["panel"] = panel_path;
    report["delta"] = delta;
    write_json_file(out, report);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "winner: " << label(result.winner) << '\n';
    return 0;
}

struct BandOptions
{
    std::string panel_path;
    std::string scenario_path;
    std::string kind = "proposed_hard1";
    std::string basis = "fourier";
    double alpha = 0.05;
    double delta = 0.0;
    std::string process = "";
    double ar_phi = 0.5;
    double innovation_sd = 1.0;
    std::size_t replicates = 0;
    std::string target = "true_mean";
};

int cmd_band(const BandOptions& opt, const std::optional<std::uint64_t>& seed, const std::string& out)
{
    const BandKind kind = parse_band_kind(opt.kind);
    const BasisFamily family = parse_basis_family(opt.basis);

    if (opt.replicates > 0) {
        // Coverage experiment over simulated panels from a scenario.
        if (opt.scenario_path.empty()) throw std::invalid_argument("band --replicates needs --scenario");
        json scenario = read_json_file(opt.scenario_path);
        scenario["seed"] = effective_seed(scenario, seed);
        const PanelConfig config = panel_config_from_json(scenario);
        open_output(out);
        const CoverageReport report = coverage_experiment(config, kind, opt.replicates,
                                                          parse_coverage_target(opt.target),
                                                          {family, opt.alpha, opt.delta});
        json j = to_json(report);
        j["command"] = "band";
        j["scenario"] = scenario;
        j["panel_config"] = to_json(config);
        j["basis"] = opt.basis;
        j["alpha"] = opt.alpha;
        j["delta"] = opt.delta;
        write_json_file(out, j);
        std::cout << "coverage: " << report.coverage() << "  mean width: " << report.mean_width << '\n';
        return 0;
    }

    if (opt.panel_path.empty()) throw std::invalid_argument("band needs --panel (or --scenario with --replicates)");
    const CurvePanel panel = load_panel(opt.panel_path);
    if (!basis_supports(family, panel.m())) throw std::invalid_argument("the Haar basis needs m to be a power of two");
    std::optional<Vector> gamma_diag;
    json process_echo = nullptr;
    if (kind == BandKind::CompetitorTheoretical) {
        ProcessSpec process;
        if (!opt.scenario_path.empty()) {
            process = process_from_json(read_json_file(opt.scenario_path).value("process", json::object()));
        } else if (!opt.process.empty()) {
            process = {parse_process_kind(opt.process), opt.ar_phi, opt.innovation_sd};
        } else {
            throw std::invalid_argument("competitor_theoretical needs the process (--process or --scenario)");
        }
        gamma_diag = pointwise_variance(process, panel.grid);
        process_echo = to_json(process);
    }
    const BasisMatrix basis = make_basis(family, panel.grid);
    const CoefficientStats stats = pooled_stats(per_curve_coeffs(panel, basis), opt.alpha, opt.delta);
    const ConfidenceBand band = build_band(kind, stats, basis, gamma_diag);
    std::ostringstream body;
    write_band_csv(body, panel.grid, band);
    json provenance{{"command", "band"}, {"panel", opt.panel_path}, {"band", opt.kind},  {"basis", opt.basis},
                    {"alpha", opt.alpha}, {"delta", opt.delta},     {"process", process_echo},
                    {"mean_width", band.mean_width()}};
    if (kind == BandKind::CompetitorTheoretical || kind == BandKind::CompetitorSampleVar) {
        provenance["notes"] = json::array({kCompetitorNote});
    }
    write_with_sidecar(out, body.str(), provenance);
    return 0;
}

struct SparsityOptions
{
    std::string scenario_path;
    std::size_t m = 256;
    std::size_t n = 400;
    double alpha = 0.05;
    double noise_var = 0.136;
    std::string process = "bb";
    double c1 = 0.75;
    double c2 = 1.93;
    std::vector<std::string> bases{"fourier", "haar"};
};

int cmd_sparsity(const SparsityOptions& opt, const std::string& format, const std::string& out)
{
    PanelConfig config;
    if (!opt.scenario_path.empty()) {
        config = panel_config_from_json(read_json_file(opt.scenario_path));
    } else {
        config.n = opt.n;
        config.grid = make_grid(opt.m);
        config.signal = SignalSpec::signal1(opt.c1, opt.c2);
        config.process = {parse_process_kind(opt.process), 0.5, 1.0};
        config.noise_sd = std::sqrt(opt.noise_var);
    }
    auto sink = open_output(out);
    const Vector f = eval_signal(config.signal, config.grid);
    json report{{"command", "sparsity"}, {"panel_config", to_json(config)}, {"alpha", opt.alpha},
                {"signal_form", "negative exponents: c1*exp(-64(t-0.25)^2) + c2*exp(-256(t-0.75)^2)"},
                {"results", json::array()}};
    std::ostringstream csv;
    csv << "basis,k,mu,r_k,active\n";
    for (const std::string& name : opt.bases) {
        const BasisFamily family = parse_basis_family(name);
        const BasisMatrix basis = make_basis(family, config.grid);
        const TheoreticalLevels levels = theoretical_levels(sigma_k_theoretical(config.process, config.grid, basis),
                                                            config.noise_sd, config.n, opt.alpha);
        const SparsityReport sparsity = sparsity_report(f, basis, levels);
        report["results"].push_back(to_json(sparsity, family));
        std::cout << name << ": " << sparsity.count << " coefficients survive\n";
        for (Eigen::Index k = 0; k < sparsity.mu.size(); ++k) {
            const bool active = std::abs(sparsity.mu[k]) >= levels.r_k[k];
            csv << name << ',' << (k + 1) << ',' << format_double(sparsity.mu[k]) << ','
                << format_double(levels.r_k[k]) << ',' << (active ? 1 : 0) << '\n';
        }
    }
    if (format == "csv") {
        sink << csv.str();
        auto side = open_output(out + ".json");
        side << report.dump(2) << '\n';
    } else {
        sink << report.dump(2) << '\n';
    }
    return 0;
}

int cmd_bench(const std::string& scenario_path, const std::optional<std::uint64_t>& seed, const std::string& format,
              double scale, std::optional<std::size_t> threads, const std::string& out)
{
    json scenario = read_json_file(scenario_path);
    scenario["seed"] = effective_seed(scenario, seed);
    if (threads) scenario["threads"] = *threads;
    const ScenarioConfig config = scenario_from_json(scenario);
    open_output(out);
    const BenchReport report = run_scenario(config);
    json j = to_json(report);
    j["scenario"] = to_json(config);
    if (format == "csv") {
        std::ostringstream body;
        write_bench_csv(body, report, scale);
        write_with_sidecar(out, body.str(), j);
    } else {
        write_json_file(out, j);
    }
    for (const auto& e : report.estimators) {
        std::cout << e.label << ": sqrt_emse " << e.sqrt_emse << " sqrt_medmse " << e.sqrt_medmse << '\n';
    }
    for (const auto& b : report.bands) {
        std::cout << to_string(b.kind) << ": coverage " << b.coverage << " width " << b.mean_width << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Thresholded mean estimation and confidence bands for functional data"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";

    auto* simulate = app.add_subcommand("simulate", "Simulate a curve panel from a scenario JSON");
    std::string scenario_path;
    simulate->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    simulate->add_option("--seed", seed, "Override the scenario seed");
    simulate->add_option("--out", out, "Panel CSV path")->required();

    auto* estimate = app.add_subcommand("estimate", "Thresholded estimate of the mean from a panel CSV");
    EstimateOptions est;
    estimate->add_option("--panel", est.panel_path, "Panel CSV")->required();
    estimate->add_option("--basis", est.basis, "fourier | haar");
    estimate->add_option("--rule", est.rule, "hard | soft | ls");
    estimate->add_option("--multiplier", est.multiplier, "Level multiplier (1 or 2)");
    estimate->add_option("--alpha", est.alpha);
    estimate->add_option("--delta", est.delta);
    estimate->add_option("--out", out, "Output prefix")->required();

    auto* select_cmd = app.add_subcommand("select", "Cross-validated choice among candidate estimators");
    std::string panel_path;
    std::uint64_t select_seed = 0;
    bool refit = false;
    double select_delta = 0.0;
    select_cmd->add_option("--panel", panel_path, "Panel CSV")->required();
    select_cmd->add_option("--scenario", scenario_path, "JSON with an \"estimators\" list");
    select_cmd->add_option("--seed", select_seed, "Split seed");
    select_cmd->add_flag("--refit", refit, "Refit the winner on all curves after selection");
    select_cmd->add_option("--delta", select_delta);
    select_cmd->add_option("--out", out, "Selection report JSON")->required();

    auto* band = app.add_subcommand("band", "Confidence band for a panel, or a coverage experiment");
    BandOptions band_opt;
    band->add_option("--panel", band_opt.panel_path, "Panel CSV");
    band->add_option("--scenario", band_opt.scenario_path, "Scenario JSON (process / coverage experiment)");
    band->add_option("--kind", band_opt.kind,
                     "proposed_hard1 | proposed_hard3 | proposed_soft2 | untruncated_ls | "
                     "competitor_theoretical | competitor_sample_var");
    band->add_option("--basis", band_opt.basis);
    band->add_option("--alpha", band_opt.alpha);
    band->add_option("--delta", band_opt.delta);
    band->add_option("--process", band_opt.process, "bb | bm | ar1 | arima11 (for competitor_theoretical)");
    band->add_option("--ar-phi", band_opt.ar_phi);
    band->add_option("--innovation-sd", band_opt.innovation_sd);
    band->add_option("--replicates", band_opt.replicates, "Run a coverage experiment with this many panels");
    band->add_option("--target", band_opt.target, "true_mean | truncated_target");
    band->add_option("--seed", seed);
    band->add_option("--out", out, "Band CSV or coverage JSON")->required();

    auto* sparsity = app.add_subcommand("sparsity", "Count coefficients surviving the theoretical levels");
    SparsityOptions sp;
    sparsity->add_option("--scenario", sp.scenario_path, "Scenario JSON (overrides the flags below)");
    sparsity->add_option("--m", sp.m);
    sparsity->add_option("--n", sp.n);
    sparsity->add_option("--alpha", sp.alpha);
    sparsity->add_option("--noise-var", sp.noise_var, "sigma_eps^2");
    sparsity->add_option("--process", sp.process);
    sparsity->add_option("--c1", sp.c1);
    sparsity->add_option("--c2", sp.c2);
    sparsity->add_option("--basis", sp.bases, "Bases to report")->delimiter(',');
    sparsity->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    sparsity->add_option("--out", out)->required();

    auto* bench = app.add_subcommand("bench", "Run a Monte Carlo scenario");
    double scale = 1.0;
    std::optional<std::size_t> threads;
    bench->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    bench->add_option("--seed", seed, "Override the base seed");
    bench->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    bench->add_option("--scale", scale, "Multiply error columns in CSV output (e.g. 1e6)");
    bench->add_option("--threads", threads);
    bench->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return cmd_simulate(scenario_path, seed, out);
        if (*estimate) return cmd_estimate(est, out);
        if (*select_cmd) return cmd_select(panel_path, scenario_path, select_seed, refit, select_delta, out);
        if (*band) return cmd_band(band_opt, seed, out);
        if (*sparsity) return cmd_sparsity(sp, format, out);
        if (*bench) return cmd_bench(scenario_path, seed, format, scale, threads, out);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
