#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include <fdmean/bands.hpp>
#include <fdmean/metrics.hpp>

#include "support.hpp"

using namespace fdmean;
using fdmean::testing::Gen;

namespace {

const ProcessSpec kBB{ProcessKind::BrownianBridge, 0.5, 1.0};

CoefficientStats random_stats(Gen& gen, std::size_t n, std::size_t m, double delta)
{
    return pooled_stats(gen.matrix(n, m) * 0.3 + Matrix::Constant(static_cast<Eigen::Index>(n),
                                                                   static_cast<Eigen::Index>(m), 0.05),
                        0.05, delta);
}

PanelConfig calibrated(ProcessSpec process, std::size_t n, std::size_t m, double star, double snr, std::uint64_t seed)
{
    const Grid grid = make_grid(m);
    const Calibration cal = calibrate(process, grid, star, snr, SignalSpec::signal1(0.75, 1.93));
    return {n, grid, cal.signal, cal.process, cal.noise_sd, seed};
}

} // namespace

TEST(Proposed, NoActiveCoefficients)
{
    const BasisMatrix b = fourier_basis(make_grid(8));
    Matrix per_curve(3, 8);
    per_curve.setZero();
    per_curve(0, 2) = 1.0;
    per_curve(1, 2) = -1.0;
    const CoefficientStats s = pooled_stats(per_curve, 0.05);
    const ConfidenceBand band = proposed_band(hard_threshold(s, b, 1.0), s, b, 1.0);
    EXPECT_EQ(band.half_width, Vector::Zero(8));
    EXPECT_EQ(band.center, Vector::Zero(8));
}

TEST(Proposed, ConstantFunctionOnly)
{
    const BasisMatrix b = fourier_basis(make_grid(8));
    Matrix per_curve = Matrix::Zero(4, 8);
    per_curve.col(0) << 10.0, 11.0, 9.0, 10.5;
    const CoefficientStats s = pooled_stats(per_curve, 0.05);
    for (double w : {1.0, 3.0}) {
        const ConfidenceBand band = proposed_band(hard_threshold(s, b, 1.0), s, b, w);
        for (Eigen::Index j = 0; j < 8; ++j) EXPECT_NEAR(band.half_width[j], w * s.r_tilde[0], 1e-14);
    }
    const ConfidenceBand soft = proposed_band(soft_threshold(s, b, 1.0), s, b, 2.0);
    for (Eigen::Index j = 0; j < 8; ++j) EXPECT_NEAR(soft.half_width[j], 2.0 * s.r_tilde[0], 1e-14);
}

TEST(Proposed, BruteForce)
{
    Gen gen(3);
    const BasisMatrix b = haar_basis(make_grid(16));
    const CoefficientStats s = random_stats(gen, 12, 16, 0.02);
    const ConfidenceBand band = proposed_band(hard_threshold(s, b, 1.0), s, b, 1.0);
    for (Eigen::Index j = 0; j < 16; ++j) {
        double sum = 0.0;
        for (Eigen::Index k = 0; k < 16; ++k) {
            if (std::abs(s.mu_hat[k]) > s.r_hat[k]) sum += s.r_tilde[k] * std::abs(b.values(j, k));
        }
        EXPECT_NEAR(band.half_width[j], sum, 1e-12);
        EXPECT_EQ(band.lower[j], band.center[j] - band.half_width[j]);
        EXPECT_EQ(band.upper[j], band.center[j] + band.half_width[j]);
    }
}

TEST(Proposed, RejectsMismatchedPairings)
{
    Gen gen(4);
    const BasisMatrix b = fourier_basis(make_grid(8));
    const CoefficientStats s = random_stats(gen, 5, 8, 0.0);
    EXPECT_THROW(proposed_band(hard_threshold(s, b, 1.0), s, b, 2.0), std::invalid_argument);
    EXPECT_THROW(proposed_band(soft_threshold(s, b, 1.0), s, b, 1.0), std::invalid_argument);
    EXPECT_THROW(proposed_band(hard_threshold(s, b, 2.0), s, b, 1.0), std::invalid_argument);
}

TEST(Untruncated, SingleConstantFunction)
{
    // One-point design with the constant basis.
    BasisMatrix b;
    b.values = Matrix::Ones(1, 1);
    b.sup_norms = Vector::Ones(1);
    CoefficientStats s;
    s.mu_hat = Vector::Constant(1, 2.0);
    s.r_hat = Vector::Constant(1, 0.4);
    s.r_tilde = s.r_hat;
    s.n = 10;
    const MeanEstimate est = threshold_coefficients(s.mu_hat, s.r_hat, ThresholdRule::Hard, b);
    const ConfidenceBand band = untruncated_band(s, est, b);
    EXPECT_DOUBLE_EQ(band.half_width[0], 0.4);
}

TEST(Untruncated, BruteForce)
{
    Gen gen(5);
    const BasisMatrix b = fourier_basis(make_grid(10));
    const CoefficientStats s = random_stats(gen, 7, 10, 0.0);
    const ConfidenceBand band = untruncated_band(s, hard_threshold(s, b, 1.0), b);
    for (Eigen::Index j = 0; j < 10; ++j) {
        double sum = 0.0;
        for (Eigen::Index k = 0; k < 10; ++k) sum += s.r_hat[k] * std::abs(b.values(j, k));
        EXPECT_NEAR(band.half_width[j], sum, 1e-12);
    }
}

TEST(Competitor, ZeroVariance)
{
    const ConfidenceBand band = competitor_band(Vector::Ones(6), Vector::Zero(6), 10, 0.05);
    EXPECT_EQ(band.half_width, Vector::Zero(6));
}

TEST(Competitor, BridgeAtHalf)
{
    const double z = boost::math::quantile(
        boost::math::complement(boost::math::normal_distribution<double>(), 0.05 / 128.0));
    const ConfidenceBand band = competitor_band(Vector::Zero(64), Vector::Constant(64, 0.25), 100, 0.05);
    EXPECT_NEAR(band.half_width[0], 0.05 * z, 1e-12);
    EXPECT_NEAR(band.half_width[0], 0.167968, 1e-6);
}

TEST(Competitor, SampleVarianceBruteForce)
{
    Gen gen(6);
    const BasisMatrix b = haar_basis(make_grid(8));
    const CoefficientStats s = random_stats(gen, 9, 8, 0.0);
    const Vector v = sample_variance_function(s, b);
    for (Eigen::Index j = 0; j < 8; ++j) {
        std::vector<double> xs;
        for (Eigen::Index i = 0; i < 9; ++i) {
            double x = 0.0;
            for (Eigen::Index k = 0; k < 8; ++k) x += s.per_curve(i, k) * b.values(j, k);
            xs.push_back(x);
        }
        EXPECT_NEAR(v[j], fdmean::testing::mean_se(xs).var, 1e-12);
    }
}

TEST(Competitor, CenteredAtLeastSquares)
{
    Gen gen(7);
    const BasisMatrix b = fourier_basis(make_grid(8));
    const CoefficientStats s = random_stats(gen, 9, 8, 0.0);
    const ConfidenceBand band = build_band(BandKind::CompetitorSampleVar, s, b);
    EXPECT_EQ(band.center, least_squares(s, b).values);
    EXPECT_THROW(build_band(BandKind::CompetitorTheoretical, s, b), std::invalid_argument);
}

TEST(Covers, Boundaries)
{
    const ConfidenceBand band = make_band(BandKind::ProposedHard1, 0.05, Vector::Zero(4), Vector::Constant(4, 1.0));
    EXPECT_TRUE(covers(band, Vector::Zero(4)));
    EXPECT_TRUE(covers(band, Vector::Ones(4)));
    Vector out = Vector::Zero(4);
    out[2] = 1.0 + 1e-12;
    EXPECT_FALSE(covers(band, out));
}

TEST(Covers, ZeroWidthStrict)
{
    const ConfidenceBand band = make_band(BandKind::ProposedHard1, 0.05, Vector::Constant(3, 0.5), Vector::Zero(3));
    EXPECT_TRUE(covers(band, Vector::Constant(3, 0.5)));
    Vector target = Vector::Constant(3, 0.5);
    target[1] += 1e-15;
    EXPECT_FALSE(covers(band, target));
}

// Property: enlarging the half width never turns coverage off.
TEST(Property, CoversMonotone)
{
    Gen gen(8);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t m = gen.index(1, 20);
        const Vector center = gen.vector(m, -1, 1);
        const Vector half = gen.vector(m, 0, 1);
        const Vector target = center + gen.vector(m, -1, 1);
        const Vector grow = gen.vector(m, 0, 1);
        const bool before = covers(make_band(BandKind::ProposedHard1, 0.05, center, half), target);
        const bool after = covers(make_band(BandKind::ProposedHard1, 0.05, center, half + grow), target);
        if (before) {
            EXPECT_TRUE(after);
        }
    }
}

// Property: width relations between the band kinds.
TEST(Property, WidthRelations)
{
    Gen gen(9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = gen.power_of_two(1, 6);
        const BasisMatrix b = make_basis(gen.coin() ? BasisFamily::Haar : BasisFamily::Fourier, make_grid(m));
        const CoefficientStats s = random_stats(gen, gen.index(2, 50), m, 0.0);
        const ConfidenceBand one = build_band(BandKind::ProposedHard1, s, b);
        const ConfidenceBand three = build_band(BandKind::ProposedHard3, s, b);
        const ConfidenceBand soft = build_band(BandKind::ProposedSoft2, s, b);
        const ConfidenceBand full = build_band(BandKind::UntruncatedLS, s, b);
        for (Eigen::Index j = 0; j < one.half_width.size(); ++j) {
            EXPECT_EQ(three.half_width[j], 3.0 * one.half_width[j]);
            EXPECT_EQ(soft.half_width[j], 2.0 * one.half_width[j]);
            EXPECT_LE(one.half_width[j], full.half_width[j]);
        }
    }
}

TEST(Coverage, DegenerateScenarioAlwaysCovers)
{
    // Dyadic step a + b psi_00: analysis and synthesis are exact in floating point,
    // so the zero-width bands sit exactly on the signal.
    Vector step(16);
    for (Eigen::Index j = 0; j < 16; ++j) step[j] = j < 8 ? 2.25 : -0.75;
    const PanelConfig c{8, make_grid(16), SignalSpec::custom(step), {ProcessKind::BrownianBridge, 0.5, 0.0}, 0.0, 3};
    for (BandKind kind : {BandKind::ProposedHard1, BandKind::ProposedHard3, BandKind::ProposedSoft2}) {
        const CoverageReport r = coverage_experiment(c, kind, 5, CoverageTarget::TrueMean, {BasisFamily::Haar});
        EXPECT_EQ(r.coverage(), 1.0) << to_string(kind);
        EXPECT_EQ(r.mean_width, 0.0);
    }
}

TEST(Coverage, SeedsPerReplicate)
{
    const PanelConfig c = calibrated(kBB, 30, 32, 1.0, 1.5, 17);
    const CoverageReport a = coverage_experiment(c, BandKind::ProposedHard1, 20, CoverageTarget::TrueMean);
    const CoverageReport b = coverage_experiment(c, BandKind::ProposedHard1, 20, CoverageTarget::TrueMean);
    EXPECT_EQ(a.covered_count, b.covered_count);
    EXPECT_EQ(a.mean_width, b.mean_width);
}

TEST(Coverage, ProposedBandCoversSmoothMean)
{
    const PanelConfig c = calibrated({ProcessKind::AR1, 0.5, 1.0}, 100, 64, 1.0, 1.5, 101);
    const CoverageReport r = coverage_experiment(c, BandKind::ProposedHard1, 200, CoverageTarget::TrueMean);
    EXPECT_GE(r.coverage(), 0.95);
}

namespace {

struct EventTally
{
    int omega = 0;
    int covered = 0;
    int violations = 0;  // on the event but not covered
};

EventTally tally_event(const PanelConfig& c, BandKind kind, std::size_t replicates)
{
    const BasisMatrix b = fourier_basis(c.grid);
    const Vector f = eval_signal(c.signal, c.grid);
    const Vector mu = analyze(f, b);
    const TheoreticalLevels levels =
        theoretical_levels(sigma_k_theoretical(c.process, c.grid, b), c.noise_sd, c.n, 0.05, 0.01);
    const Vector target = band_surrogate_target(f, b, levels);
    EventTally t;
    for (std::size_t r = 0; r < replicates; ++r) {
        PanelConfig cr = c;
        cr.seed = derive_seed(c.seed, r);
        const CoefficientStats s = pooled_stats(per_curve_coeffs(generate_panel(cr), b), 0.05, 0.01);
        const bool on_event = omega_event_check(s, levels, mu);
        const bool cov = covers(build_band(kind, s, b), target);
        t.omega += on_event ? 1 : 0;
        t.covered += cov ? 1 : 0;
        t.violations += (on_event && !cov) ? 1 : 0;
    }
    return t;
}

} // namespace

// On the event where every coefficient is accurate and the levels nest, the
// three-times hard band and the twice soft band contain the surrogate target.
TEST(Property, OmegaImpliesSurrogateCoverage)
{
    for (const ProcessSpec& p : {kBB, ProcessSpec{ProcessKind::AR1, 0.5, 1.0}}) {
        // Large n so the level-nesting event is common.
        const PanelConfig c = calibrated(p, 1200, 16, 1.0, 1.5, 202);
        for (BandKind kind : {BandKind::ProposedHard3, BandKind::ProposedSoft2}) {
            const EventTally t = tally_event(c, kind, 120);
            EXPECT_EQ(t.violations, 0) << to_string(kind);
            EXPECT_LE(t.omega, t.covered) << to_string(kind);
            EXPECT_GT(t.omega, 60) << to_string(kind);
        }
    }
}

// The narrow band needs every nonzero coefficient above 2 r_bar; a sparse
// mean with large coefficients meets that.
TEST(Property, OmegaImpliesNarrowBandCoverageForSeparatedMeans)
{
    const Grid grid = make_grid(16);
    const BasisMatrix b = fourier_basis(grid);
    Vector mu = Vector::Zero(16);
    mu[0] = 1.0;
    mu[1] = 0.8;
    mu[4] = -0.6;
    const PanelConfig c{1200, grid, SignalSpec::custom(synthesize(mu, b)), kBB, 0.4, 303};
    const TheoreticalLevels levels = theoretical_levels(sigma_k_theoretical(kBB, grid, b), 0.4, 1200, 0.05, 0.01);
    for (Eigen::Index k = 0; k < 16; ++k) {
        if (mu[k] != 0.0) {
            ASSERT_GT(std::abs(mu[k]), 2.0 * levels.r_bar[k]);
        }
    }
    const EventTally t = tally_event(c, BandKind::ProposedHard1, 120);
    EXPECT_EQ(t.violations, 0);
    EXPECT_GT(t.omega, 60);
}

TEST(Names, BandKinds)
{
    for (BandKind k : {BandKind::ProposedHard1, BandKind::ProposedHard3, BandKind::ProposedSoft2,
                       BandKind::UntruncatedLS, BandKind::CompetitorTheoretical, BandKind::CompetitorSampleVar}) {
        EXPECT_EQ(parse_band_kind(to_string(k)), k);
    }
    EXPECT_EQ(parse_band_kind("band1"), BandKind::CompetitorTheoretical);
    EXPECT_EQ(parse_band_kind("band3"), BandKind::CompetitorSampleVar);
    EXPECT_THROW(parse_band_kind("band2"), std::invalid_argument);
    EXPECT_EQ(parse_coverage_target("truncated_target"), CoverageTarget::TruncatedTarget);
}

TEST(MakeBand, Errors)
{
    EXPECT_THROW(make_band(BandKind::ProposedHard1, 0.05, Vector::Zero(3), Vector::Zero(4)), std::invalid_argument);
    EXPECT_THROW(make_band(BandKind::ProposedHard1, 0.05, Vector::Zero(2), -Vector::Ones(2)), std::invalid_argument);
    EXPECT_THROW(competitor_band(Vector::Zero(2), -Vector::Ones(2), 4, 0.05), std::invalid_argument);
}
