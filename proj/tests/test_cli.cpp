#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <fdmean/io.hpp>

using namespace fdmean;
namespace fs = std::filesystem;

namespace {

const std::string kCli = FDMEAN_CLI;
const std::string kScenarios = FDMEAN_SCENARIOS;

class Cli : public ::testing::Test
{
protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("fdmean_cli_" + std::string(info->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }

    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int run(const std::string& args) const
    {
        const std::string cmd = kCli + " " + args + " >>" + path("log.txt") + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string write(const std::string& name, const std::string& text) const
    {
        std::ofstream out(path(name));
        out << text;
        return path(name);
    }

    fs::path dir_;
};

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path)
{
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        if (!line.empty() && line.back() == ',') row.emplace_back();
        rows.push_back(row);
    }
    return rows;
}

CurvePanel load(const std::string& path)
{
    std::ifstream in(path);
    return read_panel_csv(in);
}

std::string panel_csv(const Grid& grid, const Matrix& Y)
{
    CurvePanel panel;
    panel.grid = grid;
    panel.Y = Y;
    std::ostringstream out;
    write_panel_csv(out, panel);
    return out.str();
}

} // namespace

TEST_F(Cli, SimulateMinimalShape)
{
    ASSERT_EQ(run("simulate --scenario " + kScenarios + "/minimal.json --out " + path("p.csv")), 0);
    const auto rows = read_csv(path("p.csv"));
    ASSERT_EQ(rows.size(), 5u);
    for (const auto& row : rows) EXPECT_EQ(row.size(), 4u);
    const json side = read_json_file(path("p.csv.json"));
    EXPECT_EQ(side.at("panel_config").at("seed"), 7);
    EXPECT_EQ(side.at("panel_config").at("n"), 4);
}

TEST_F(Cli, SimulateDeterministic)
{
    const std::string scenario = kScenarios + "/minimal.json";
    ASSERT_EQ(run("simulate --scenario " + scenario + " --seed 3 --out " + path("a.csv")), 0);
    ASSERT_EQ(run("simulate --scenario " + scenario + " --seed 3 --out " + path("b.csv")), 0);
    ASSERT_EQ(run("simulate --scenario " + scenario + " --seed 4 --out " + path("c.csv")), 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

TEST_F(Cli, SimulateMatchesLibrary)
{
    const std::string scenario = kScenarios + "/minimal.json";
    ASSERT_EQ(run("simulate --scenario " + scenario + " --out " + path("p.csv")), 0);
    const CurvePanel direct = generate_panel(panel_config_from_json(read_json_file(scenario)));
    EXPECT_EQ(load(path("p.csv")).Y, direct.Y);
}

TEST_F(Cli, SimulateLargeShape)
{
    const std::string scenario =
        write("big.json", R"({"n": 400, "m": 256, "process": {"kind": "bb"}, "noise_sd": 0.3, "seed": 1})");
    ASSERT_EQ(run("simulate --scenario " + scenario + " --out " + path("p.csv")), 0);
    const auto rows = read_csv(path("p.csv"));
    ASSERT_EQ(rows.size(), 401u);
    for (const auto& row : rows) EXPECT_EQ(row.size(), 256u);
}

TEST_F(Cli, SimulateErrors)
{
    const std::string scenario = kScenarios + "/minimal.json";
    EXPECT_EQ(run("simulate --scenario " + scenario + " --out /nonexistent_dir/p.csv"), 2);
    EXPECT_EQ(run("simulate --scenario " + path("missing.json") + " --out " + path("p.csv")), 2);
    EXPECT_EQ(run("simulate --scenario " + write("bad.json", "{\"n\": ") + " --out " + path("p.csv")), 1);
    EXPECT_EQ(run("simulate --scenario " + write("neg.json", R"({"n": 4, "m": 4, "noise_sd": -1})") + " --out "
                  + path("p.csv")),
              1);
    EXPECT_EQ(run("simulate --out " + path("p.csv")), 1);
    EXPECT_EQ(run(""), 1);
}

TEST_F(Cli, EstimateConstantPanel)
{
    const Grid grid = make_grid(8);
    const std::string panel = write("p.csv", panel_csv(grid, Matrix::Constant(5, 8, 2.0)));
    ASSERT_EQ(run("estimate --panel " + panel + " --delta 1e-6 --out " + path("e")), 0);
    const auto coef = read_csv(path("e_coefficients.csv"));
    ASSERT_EQ(coef.size(), 9u);
    EXPECT_EQ(coef[0], (std::vector<std::string>{"k", "mu_hat", "S_k", "r_hat", "active"}));
    for (std::size_t k = 1; k <= 8; ++k) EXPECT_EQ(coef[k][4], k == 1 ? "1" : "0") << k;
    EXPECT_EQ(std::stod(coef[1][1]), 2.0);
    const auto est = read_csv(path("e_estimate.csv"));
    ASSERT_EQ(est.size(), 9u);
    for (std::size_t j = 1; j <= 8; ++j) EXPECT_NEAR(std::stod(est[j][2]), 2.0, 1e-14);
    EXPECT_TRUE(fs::exists(path("e_estimate.csv.json")));
    EXPECT_EQ(read_json_file(path("e_coefficients.csv.json")).at("active_count"), 1);
}

TEST_F(Cli, EstimateRecoversSparseCoefficients)
{
    const Grid grid = make_grid(16);
    for (const std::string family : {"fourier", "haar"}) {
        const BasisMatrix basis = make_basis(parse_basis_family(family), grid);
        Vector mu = Vector::Zero(16);
        mu[0] = 1.5;
        mu[3] = -0.75;
        mu[10] = 0.25;
        const Vector v = synthesize(mu, basis);
        const Matrix Y = v.transpose().replicate(6, 1);
        const std::string panel = write(family + ".csv", panel_csv(grid, Y));
        ASSERT_EQ(run("estimate --panel " + panel + " --basis " + family + " --delta 1e-6 --out " + path(family)), 0);
        const auto coef = read_csv(path(family + "_coefficients.csv"));
        ASSERT_EQ(coef.size(), 17u);
        for (Eigen::Index k = 0; k < 16; ++k) {
            const auto& row = coef[static_cast<std::size_t>(k + 1)];
            EXPECT_NEAR(std::stod(row[1]), mu[k], 1e-13) << family << " k=" << k + 1;
            EXPECT_EQ(row[4], mu[k] != 0.0 ? "1" : "0") << family << " k=" << k + 1;
        }
    }
}

TEST_F(Cli, EstimateErrors)
{
    const std::string panel = write("p.csv", panel_csv(make_grid(24), Matrix::Ones(3, 24)));
    EXPECT_EQ(run("estimate --panel " + panel + " --basis haar --out " + path("e")), 1);
    EXPECT_NE(slurp(path("log.txt")).find("power of two"), std::string::npos);
    EXPECT_EQ(run("estimate --panel " + panel + " --out /nonexistent_dir/e"), 2);
    EXPECT_EQ(run("estimate --panel " + path("missing.csv") + " --out " + path("e")), 2);
    EXPECT_EQ(run("estimate --panel " + write("bad.csv", "0.5\n1\nx\n") + " --out " + path("e")), 1);
    EXPECT_EQ(run("estimate --panel " + panel + " --rule median --out " + path("e")), 1);
}

TEST_F(Cli, EstimateSparsityScenarioPanel)
{
    ASSERT_EQ(run("simulate --scenario " + kScenarios + "/sparsity_bb.json --out " + path("p.csv")), 0);
    ASSERT_EQ(run("estimate --panel " + path("p.csv") + " --out " + path("e")), 0);
    const int active = read_json_file(path("e_estimate.csv.json")).at("active_count").get<int>();
    EXPECT_NEAR(active, 11, 3);
}

TEST_F(Cli, EstimateMatchesLibrary)
{
    ASSERT_EQ(run("simulate --scenario " + kScenarios + "/minimal.json --out " + path("p.csv")), 0);
    ASSERT_EQ(run("estimate --panel " + path("p.csv") + " --rule soft --multiplier 2 --out " + path("e")), 0);
    const CurvePanel panel = load(path("p.csv"));
    const BasisMatrix basis = fourier_basis(panel.grid);
    const MeanEstimate direct =
        apply_rule(pooled_stats(per_curve_coeffs(panel, basis), 0.05, 0.0), basis, ThresholdRule::Soft, 2.0);
    const auto est = read_csv(path("e_estimate.csv"));
    for (Eigen::Index j = 0; j < 4; ++j) EXPECT_EQ(std::stod(est[static_cast<std::size_t>(j + 1)][2]), direct.values[j]);
}

TEST_F(Cli, BandMatchesLibrary)
{
    const std::string scenario = kScenarios + "/coverage_ar1.json";
    ASSERT_EQ(run("simulate --scenario " + scenario + " --out " + path("p.csv")), 0);
    const CurvePanel panel = load(path("p.csv"));
    const BasisMatrix basis = fourier_basis(panel.grid);
    const CoefficientStats stats = pooled_stats(per_curve_coeffs(panel, basis), 0.05, 0.01);
    const ProcessSpec process = process_from_json(read_json_file(scenario).at("process"));
    for (const std::string kind : {"proposed_hard1", "proposed_hard3", "proposed_soft2", "competitor_theoretical",
                                   "competitor_sample_var"}) {
        ASSERT_EQ(run("band --panel " + path("p.csv") + " --kind " + kind + " --delta 0.01 --scenario " + scenario
                      + " --out " + path(kind + ".csv")),
                  0);
        const BandKind band_kind = parse_band_kind(kind);
        std::optional<Vector> gamma;
        if (band_kind == BandKind::CompetitorTheoretical) gamma = pointwise_variance(process, panel.grid);
        const ConfidenceBand direct = build_band(band_kind, stats, basis, gamma);
        const auto rows = read_csv(path(kind + ".csv"));
        ASSERT_EQ(rows.size(), 65u);
        for (Eigen::Index j = 0; j < 64; ++j) {
            const auto& row = rows[static_cast<std::size_t>(j + 1)];
            EXPECT_NEAR(std::stod(row[2]), direct.center[j], 1e-12);
            EXPECT_NEAR(std::stod(row[3]), direct.lower[j], 1e-12);
            EXPECT_NEAR(std::stod(row[4]), direct.upper[j], 1e-12);
            EXPECT_EQ(std::stod(row[4]), direct.upper[j]);
        }
        EXPECT_TRUE(fs::exists(path(kind + ".csv.json")));
    }
}

TEST_F(Cli, BandNeedsProcessForTheoreticalCompetitor)
{
    ASSERT_EQ(run("simulate --scenario " + kScenarios + "/minimal.json --out " + path("p.csv")), 0);
    EXPECT_EQ(run("band --panel " + path("p.csv") + " --kind competitor_theoretical --out " + path("b.csv")), 1);
    EXPECT_EQ(run("band --panel " + path("p.csv") + " --kind competitor_theoretical --process bb --out "
                  + path("b.csv")),
              0);
    EXPECT_EQ(run("band --panel " + path("p.csv") + " --kind wide --out " + path("b.csv")), 1);
}

TEST_F(Cli, BandCoverageExperiment)
{
    const std::string scenario = kScenarios + "/minimal.json";
    ASSERT_EQ(run("band --scenario " + scenario + " --replicates 5 --out " + path("cov.json")), 0);
    const json report = read_json_file(path("cov.json"));
    EXPECT_EQ(report.at("replicates"), 5);
    const double coverage = report.at("coverage").get<double>();
    EXPECT_GE(coverage, 0.0);
    EXPECT_LE(coverage, 1.0);
    EXPECT_TRUE(report.contains("panel_config"));
}

TEST_F(Cli, SelectMatchesLibrary)
{
    ASSERT_EQ(run("simulate --scenario " + kScenarios + "/coverage_ar1.json --out " + path("p.csv")), 0);
    ASSERT_EQ(run("select --panel " + path("p.csv") + " --seed 17 --out " + path("s.json")), 0);
    const json report = read_json_file(path("s.json"));
    const SelectionResult direct = select(load(path("p.csv")), default_candidates(), 17);
    EXPECT_EQ(report.at("winner_index").get<std::size_t>(), direct.winner_index);
    EXPECT_EQ(report.at("winner").at("label"), label(direct.winner));
    EXPECT_EQ(report.at("split_seed"), 17);
    for (std::size_t l = 0; l < direct.risks.size(); ++l) {
        EXPECT_EQ(report.at("candidates")[l].at("risk").get<double>(), direct.risks[l]);
    }
}

TEST_F(Cli, SparsityCounts)
{
    ASSERT_EQ(run("sparsity --out " + path("s.json")), 0);
    const json report = read_json_file(path("s.json"));
    ASSERT_EQ(report.at("results").size(), 2u);
    EXPECT_EQ(report.at("results")[0].at("basis"), "fourier");
    EXPECT_EQ(report.at("results")[0].at("count"), 11);
    EXPECT_EQ(report.at("panel_config").at("n"), 400);
    ASSERT_EQ(run("sparsity --basis fourier --format csv --out " + path("s.csv")), 0);
    const auto rows = read_csv(path("s.csv"));
    EXPECT_EQ(rows.size(), 257u);
    EXPECT_TRUE(fs::exists(path("s.csv.json")));
}

TEST_F(Cli, BenchSingleReplicate)
{
    ASSERT_EQ(run("bench --scenario " + kScenarios + "/minimal.json --format csv --out " + path("b.csv")), 0);
    const auto rows = read_csv(path("b.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][0], "minimal");
    EXPECT_EQ(rows[1][2], "HT(r)-Fourier");
    const json side = read_json_file(path("b.csv.json"));
    EXPECT_EQ(side.at("replicate_seeds").size(), 1u);
    EXPECT_EQ(side.at("scenario").at("seed"), 7);
}

TEST_F(Cli, BenchMatchesLibrary)
{
    const std::string scenario = kScenarios + "/minimal.json";
    ASSERT_EQ(run("bench --scenario " + scenario + " --seed 12 --out " + path("b.json")), 0);
    json j = read_json_file(scenario);
    j["seed"] = 12;
    const BenchReport direct = run_scenario(scenario_from_json(j));
    const json report = read_json_file(path("b.json"));
    EXPECT_EQ(report.at("estimators")[0].at("sqrt_emse").get<double>(), direct.estimators[0].sqrt_emse);
    EXPECT_EQ(run("bench --scenario " + scenario + " --format xml --out " + path("b.json")), 1);
}
