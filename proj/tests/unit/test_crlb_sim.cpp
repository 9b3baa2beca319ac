// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// CRLB engine and the Monte-Carlo harness.

#include "oracles/oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hrpa;

namespace
{

/// Single Theta-polarised port with pattern exp(j pi cos theta).
struct CosPhaseField
{
    Index ports() const { return 1; }
    CVector steering(double t, double) const
    {
        CVector s(2);
        s << std::polar(1.0, kPi * std::cos(deg2rad(t))), 0.0;
        return s;
    }
};

Eigen::RowVectorXcd random_row(Index n, std::mt19937_64 &rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::RowVectorXcd r(n);
    for (Index i = 0; i < n; ++i)
        r(i) = Complex(g(rng), g(rng));
    return r;
}

} // namespace

// ---------------------------------------------------------------- projection

TEST(Projection, AxisAligned)
{
    Eigen::RowVectorXcd f(2);
    f << 1.0, 0.0;
    const CMatrix d = projection_matrix(f);
    EXPECT_NEAR(std::abs(d(0, 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(d(1, 1) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(d(0, 1)), 0.0, 1e-15);
}

TEST(Projection, ProjectorAlgebraOnRandomVectors)
{
    std::mt19937_64 rng(21);
    for (int t = 0; t < 200; ++t)
    {
        const Eigen::RowVectorXcd f = random_row(2 + static_cast<Index>(rng() % 15), rng);
        const CMatrix d = projection_matrix(f);
        EXPECT_LT((d - d.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((d * d - d).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((d * f.adjoint()).cwiseAbs().maxCoeff(), 1e-12 * f.norm());
    }
}

TEST(Projection, ZeroVectorIsRejected)
{
    EXPECT_THROW(projection_matrix(Eigen::RowVectorXcd::Zero(3)), NumericalError);
}

// ---------------------------------------------------------------- Jacobian

TEST(Jacobian, ConstantPatternsHaveZeroDerivative)
{
    const AngleGrid grid(60, 120, -30, 30, 1.0);
    CMatrix d(4, grid.size());
    d.setConstant(Complex(0.3, -0.7));
    const PatternSet ps(grid, 2, d);
    const Jacobian j = steering_jacobian(ps, {90, 0});
    EXPECT_EQ(j.j.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(steering_jacobian(ps, {60, -30}).j.cwiseAbs().maxCoeff(), 0.0); // one-sided corner
}

TEST(Jacobian, CosinePhaseDerivativeMagnitudeIsPi)
{
    const Jacobian j = steering_jacobian(CosPhaseField{}, {90, 0}, 0.01);
    EXPECT_NEAR(std::abs(j.j(0, 0)), kPi, 1e-4);
    const AngleGrid grid(80, 100, -5, 5, 0.5);
    CMatrix d(2, grid.size());
    for (Index g = 0; g < grid.size(); ++g)
        d.col(g) = CosPhaseField{}.steering(grid.angle(g).theta_deg, 0.0);
    const PatternSet ps(grid, 1, d);
    EXPECT_NEAR(std::abs(steering_jacobian(ps, {90, 0}).j(0, 0)), kPi, 2e-3 * kPi);
}

TEST(Jacobian, UpaFiniteDifferenceMatchesAnalyticGradient)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    for (const Angle a : {Angle{90, 0}, Angle{70, 25}, Angle{110, -40}})
    {
        const Jacobian j = steering_jacobian(f, a, 0.1);
        const auto u = oracle::upa_analytic(2, 2, 0.5, a.theta_deg, a.phi_deg);
        EXPECT_LT((CVector(j.j.col(0)) - u.d_theta).norm(), 1e-4 * u.d_theta.norm());
        EXPECT_LT((CVector(j.j.col(1)) - u.d_phi).norm(), 1e-4 * std::max(u.d_phi.norm(), 1.0));
    }
}

TEST(Jacobian, GridStepOptions)
{
    const AngleGrid grid(60, 120, -30, 30, 0.5);
    const PatternSet ps = upa_patterns(2, 2, 0.5, grid);
    EXPECT_NO_THROW(steering_jacobian(ps, {90, 0}, 1.0));
    EXPECT_THROW(steering_jacobian(ps, {90, 0}, 0.75), InvalidArgument);
    EXPECT_THROW(steering_jacobian(ps, {90.25, 0}), CoverageError);
}

// ---------------------------------------------------------------- CRLB

TEST(Crlb, BroadsideNumericMatchesSlepianBangOracle)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    const CRLBResult r = crlb_matrix(f, {90, 0}, 1.0, 0.1);
    const Eigen::Matrix2d want = oracle::analytic_upa_crlb(2, 2, 0.5, 90, 0, 1.0);
    EXPECT_NEAR(r.c_tt(), want(0, 0), 1e-4 * want(0, 0));
    EXPECT_NEAR(r.c_pp(), want(1, 1), 1e-4 * want(1, 1));
    // First-principles value for four unit-modulus ports: 1 / (2 pi^2).
    EXPECT_NEAR(want(0, 0), 1.0 / (2.0 * kPi * kPi), 1e-12);
}

TEST(Crlb, ClosedFormBroadsideValues)
{
    const CRLBResult r = upa_crlb_closed_form(2, 2, 0.5, {90, 0}, 1.0);
    const double inv_pi4 = 1.0 / std::pow(kPi, 4);
    EXPECT_NEAR(r.c_tt(), inv_pi4, 1e-15);
    EXPECT_NEAR(r.c_pp(), inv_pi4, 1e-15);
    EXPECT_NEAR(r.c_tt(), 1.0266e-2, 1e-6);
}

TEST(Crlb, ClosedFormCrossTermVanishesAtEquator)
{
    for (double phi : {-50.0, -10.0, 0.0, 20.0, 45.0})
        EXPECT_NEAR(upa_crlb_closed_form(3, 2, 0.5, {90, phi}, 1.0).c_tp(), 0.0, 1e-18);
}

TEST(Crlb, ClosedFormLinearArrayIsInfinite)
{
    const CRLBResult r = upa_crlb_closed_form(1, 4, 0.5, {80, 10}, 1.0);
    EXPECT_TRUE(r.singular);
    EXPECT_TRUE(std::isinf(r.c_tt()));
    EXPECT_TRUE(std::isinf(r.c_pp()));
    EXPECT_TRUE(std::isinf(r.objective));
}

TEST(Crlb, NumericToClosedFormRatioTracksSinTheta)
{
    // numeric/closed-form c_tt is pi^2 / (2 sin^2 theta): flat in phi, not in theta
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    for (double t = 60; t <= 120; t += 10)
        for (double p = -60; p <= 60; p += 10)
        {
            const CRLBResult n = crlb_matrix(f, {t, p}, 1.0, 0.1);
            const CRLBResult c = upa_crlb_closed_form(2, 2, 0.5, {t, p}, 1.0);
            const double st = std::sin(deg2rad(t));
            const double want = kPi * kPi / (2.0 * st * st);
            EXPECT_NEAR(n.c_tt() / c.c_tt(), want, 1e-3 * want) << t << ", " << p;
        }
}

TEST(Crlb, EndfireIsSingular)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    const CRLBResult r = crlb_matrix(f, {90, 90}, 1.0, 0.1);
    EXPECT_TRUE(r.singular);
    EXPECT_TRUE(std::isinf(r.objective));
    EXPECT_TRUE(upa_crlb_closed_form(2, 2, 0.5, {90, 90}, 1.0).singular);
}

TEST(Crlb, ScalesAsInverseSnrAndIsSymmetric)
{
    const UpaField f(UpaSpec{2, 3, 0.5, false});
    const CRLBResult a = crlb_matrix(f, {75, 20}, 1.0, 0.1);
    const CRLBResult b = crlb_matrix(f, {75, 20}, 2.0, 0.1);
    EXPECT_NEAR(b.c_tt(), 0.5 * a.c_tt(), 1e-14 * a.c_tt());
    EXPECT_NEAR(b.c_pp(), 0.5 * a.c_pp(), 1e-14 * a.c_pp());
    EXPECT_NEAR(b.c_tp(), 0.5 * a.c_tp(), 1e-14 * std::abs(a.c_tt()));
    EXPECT_EQ(a.c(0, 1), a.c(1, 0));
    EXPECT_GE(a.c_tt(), 0.0);
    EXPECT_GE(a.c_pp(), 0.0);
    EXPECT_NEAR(a.objective, std::sqrt(a.c_tt() + a.c_pp()), 1e-15);
}

TEST(Crlb, SecondOrderFiniteDifferenceConvergence)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    const Angle a{70, 30};
    const Eigen::Matrix2d want = oracle::analytic_upa_crlb(2, 2, 0.5, a.theta_deg, a.phi_deg, 1.0);
    double prev = kInf;
    for (double h : {1.0, 0.5, 0.25})
    {
        const double err = std::abs(crlb_matrix(f, a, 1.0, h).c_tt() - want(0, 0));
        if (std::isfinite(prev))
            EXPECT_GE(prev / err, 3.0) << "step " << h;
        prev = err;
    }
}

TEST(Objective, Examples)
{
    Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
    c(0, 0) = c(1, 1) = 0.02;
    EXPECT_NEAR(objective(c), 0.2, 1e-15);
    EXPECT_EQ(objective(Eigen::Matrix2d::Zero()), 0.0);
    c(0, 0) = kInf;
    EXPECT_TRUE(std::isinf(objective(c)));
}

// ---------------------------------------------------------------- maps

TEST(Map, SinglePointArea)
{
    const PatternSet ps = upa_patterns(2, 2, 0.5, AngleGrid(80, 100, -10, 10, 1.0));
    const CRLBMap m = crlb_map(ps, {90, 90, 3, 3}, 1.0);
    ASSERT_EQ(m.points.size(), 1u);
    EXPECT_EQ(m.worst, m.points[0].objective);
}

TEST(Map, TenDegreeAreaHas121Points)
{
    const PatternSet ps = upa_patterns(2, 2, 0.5, AngleGrid(80, 100, -10, 10, 1.0));
    EXPECT_EQ(crlb_map(ps, {85, 95, -5, 5}, 1.0).points.size(), 121u);
}

TEST(Map, UpaWorstIsAtCornerFarthestFromBroadside)
{
    const PatternSet ps = upa_patterns(2, 2, 0.5, AngleGrid::full_sphere(1.0));
    const CRLBMap m = crlb_map(ps, {85, 95, -5, 5}, 1.0);
    EXPECT_EQ(std::abs(m.worst_angle.phi_deg), 5.0);
    EXPECT_EQ(std::abs(m.worst_angle.theta_deg - 90.0), 5.0);
    double mx = 0.0;
    for (const auto &p : m.points)
        mx = std::max(mx, p.objective);
    EXPECT_EQ(m.worst, mx);
}

TEST(Map, WorstAngleInvariantUnderComplexScaling)
{
    const EMDataset ds = oracle::small_dataset(2, 2, 1.0);
    const ActiveNetwork net = overall_patterns(ds, {{1, 4}, {0, 1, 1, 0}});
    const SensingArea area{75, 85, 75, 85};
    const CRLBMap a = crlb_map(net.e, area, 1.0);
    const CRLBMap b = crlb_map(net.e.scaled(2.0 * std::polar(1.0, kPi / 3)), area, 1.0);
    EXPECT_EQ(a.worst_index, b.worst_index);
    EXPECT_NEAR(b.worst, 0.5 * a.worst, 1e-9 * a.worst);
}

TEST(Map, ThreadCountDoesNotChangeResults)
{
    const PatternSet ps = upa_patterns(2, 2, 0.5, AngleGrid::full_sphere(1.0));
    const CRLBMap a = crlb_map(ps, {35, 45, 35, 45}, 1.0, 0.0, 1);
    const CRLBMap b = crlb_map(ps, {35, 45, 35, 45}, 1.0, 0.0, 4);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i)
        EXPECT_EQ(a.points[i].c, b.points[i].c);
    EXPECT_EQ(a.worst_index, b.worst_index);
}

TEST(Map, EmptyOrMisalignedAreaIsCoverageError)
{
    const PatternSet ps = upa_patterns(2, 2, 0.5, AngleGrid(80, 100, -10, 10, 1.0));
    EXPECT_THROW(crlb_map(ps, {95, 85, 0, 1}, 1.0), CoverageError);
    EXPECT_THROW(crlb_map(ps, {85.5, 95, 0, 1}, 1.0), CoverageError);
    EXPECT_THROW(crlb_map(ps, {70, 95, 0, 1}, 1.0), CoverageError);
}

TEST(Map, CsvRendersInfinity)
{
    const UpaSpec spec{2, 2, 0.5, false};
    const CRLBMap m = upa_closed_form_map(spec, {90, 90, 89, 90}, 1.0, 1.0);
    std::ostringstream s;
    write_crlb_map_csv(s, m);
    EXPECT_NE(s.str().find("theta_deg,phi_deg,c_tt,c_tp,c_pp,objective"), std::string::npos);
    EXPECT_NE(s.str().find(",inf"), std::string::npos);
}

TEST(Map, DualPolNeverWorseThanSinglePol)
{
    const AngleGrid grid = AngleGrid::full_sphere(1.0);
    const PatternSet one = upa_patterns(UpaSpec{2, 2, 0.5, false}, grid);
    const PatternSet two = upa_patterns(UpaSpec{2, 2, 0.5, true}, grid);
    for (const SensingArea &a : {SensingArea{85, 95, -5, 5}, SensingArea{35, 45, 35, 45}})
        EXPECT_LE(crlb_map(two, a, 1.0).worst, crlb_map(one, a, 1.0).worst * (1 + 1e-12));
}

// ---------------------------------------------------------------- snapshots and ML

TEST(Snapshot, NoiselessIsModelTerm)
{
    const PatternSet ps = upa_patterns(2, 2, 0.5, AngleGrid(80, 100, -10, 10, 1.0));
    const Eigen::Vector2cd s(Complex(0.6, 0.2), Complex(-0.1, 0.3));
    const Snapshot snap = simulate_snapshot(ps, {90, 0}, s, kInf, std::uint64_t{4});
    const Index g = *ps.grid().locate({90, 0});
    const CVector want = ps.data().col(g).head(4) * s(0) + ps.data().col(g).tail(4) * s(1);
    EXPECT_EQ(snap.y, want);
    EXPECT_EQ(snap.noise_var, 0.0);
}

TEST(Snapshot, SinglePortSubstitution)
{
    const AngleGrid grid(90, 90, 0, 0, 1.0);
    CMatrix d(2, 1);
    d << Complex(2, 0), Complex(0, 0);
    const Snapshot snap = simulate_snapshot(PatternSet(grid, 1, d), {90, 0}, Eigen::Vector2cd(1, 0), kInf, 1ULL);
    EXPECT_EQ(snap.y(0), Complex(2, 0));
}

TEST(Snapshot, DeterministicAndCalibrated)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    const Snapshot a = simulate_snapshot(f, {90, 0}, Eigen::Vector2cd(1, 0), 10.0, 99ULL);
    const Snapshot b = simulate_snapshot(f, {90, 0}, Eigen::Vector2cd(1, 0), 10.0, 99ULL);
    EXPECT_EQ(a.y, b.y);
    EXPECT_NEAR(a.noise_var, 4.0 / (4.0 * 10.0), 1e-15);
    // Empirical per-port noise power over many draws.
    std::mt19937_64 rng(1);
    double acc = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
    {
        const Snapshot s = simulate_snapshot(f, {90, 0}, Eigen::Vector2cd(1, 0), 10.0, rng);
        acc += (s.y - f.steering(90, 0).head(4)).squaredNorm() / 4.0;
    }
    EXPECT_NEAR(acc / n, 0.1, 0.005);
}

TEST(Snapshot, OffGridAngleIsCoverageError)
{
    const PatternSet ps = upa_patterns(2, 2, 0.5, AngleGrid(80, 100, -10, 10, 1.0));
    EXPECT_THROW(simulate_snapshot(ps, {90.5, 0}, Eigen::Vector2cd(1, 0), 1.0, 1ULL), CoverageError);
}

TEST(Ml, NoiselessEstimateIsTruth)
{
    const PatternSet ps = upa_patterns(UpaSpec{2, 2, 0.5, true}, AngleGrid(60, 120, -30, 30, 1.0));
    for (const Angle a : {Angle{90, 0}, Angle{73, 12}, Angle{101, -25}})
    {
        const Snapshot s = simulate_snapshot(ps, a, Eigen::Vector2cd(0.3, 0.8), kInf, 1ULL);
        const MLEstimate e = ml_estimate(s.y, ps, {60, 120, -30, 30}, false);
        EXPECT_EQ(e.angle.theta_deg, a.theta_deg);
        EXPECT_EQ(e.angle.phi_deg, a.phi_deg);
        const MLEstimate r = ml_estimate(s.y, ps, {60, 120, -30, 30}, true);
        EXPECT_NEAR(r.angle.theta_deg, a.theta_deg, 0.5);
    }
}

TEST(Ml, OrthogonalConstructionPicksTheOnlyMatch)
{
    // Three grid points with mutually orthogonal single-port-per-angle patterns.
    const AngleGrid grid(90, 90, 0, 2, 1.0);
    CMatrix d = CMatrix::Zero(6, 3);
    d(0, 0) = 1.0;
    d(1, 1) = 1.0;
    d(2, 2) = 1.0;
    const PatternSet ps(grid, 3, d);
    CVector y(3);
    y << 0.0, 0.0, Complex(0.0, 2.0);
    const MLEstimate e = ml_estimate(y, ps, {90, 90, 0, 2}, false);
    EXPECT_EQ(e.angle.phi_deg, 2.0);
}

TEST(Ml, AllZeroCandidatesAreSkipped)
{
    const AngleGrid grid(90, 90, 0, 2, 1.0);
    CMatrix d = CMatrix::Zero(2, 3);
    d(0, 1) = 1.0;
    const PatternSet ps(grid, 1, d);
    CVector y(1);
    y << 1.0;
    const MLEstimate e = ml_estimate(y, ps, {90, 90, 0, 2}, false);
    EXPECT_EQ(e.skipped, 2u);
    EXPECT_EQ(e.angle.phi_deg, 1.0);
}

TEST(MonteCarlo, NoiselessRmseIsZero)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    MonteCarloOptions o;
    o.search_halfwidth_deg = 3.0;
    const MonteCarloReport rep = monte_carlo_rmse(f, {{90, 0}}, {kInf}, 100, 1, o);
    ASSERT_EQ(rep.records.size(), 1u);
    EXPECT_EQ(rep.records[0].rmse_theta, 0.0);
    EXPECT_EQ(rep.records[0].rmse_phi, 0.0);
}

TEST(MonteCarlo, TooFewTrialsIsRejected)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    EXPECT_THROW(monte_carlo_rmse(f, {{90, 0}}, {1.0}, 10, 1), InvalidArgument);
}

TEST(MonteCarlo, DeterministicForFixedSeedAndThreadCount)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    MonteCarloOptions o;
    o.search_halfwidth_deg = 5.0;
    const MonteCarloReport a = monte_carlo_rmse(f, {{90, 0}}, {100.0}, 200, 7, o);
    o.threads = 3;
    const MonteCarloReport b = monte_carlo_rmse(f, {{90, 0}}, {100.0}, 200, 7, o);
    EXPECT_EQ(a.records[0].rmse_theta, b.records[0].rmse_theta);
    EXPECT_EQ(a.records[0].rmse_phi, b.records[0].rmse_phi);
}

TEST(MonteCarlo, SixDecibelsHalvesHighSnrRmse)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    MonteCarloOptions o;
    o.search_halfwidth_deg = 5.0;
    o.field_step_deg = 0.05;
    const double s1 = db_to_linear(30.0), s2 = db_to_linear(36.0);
    const MonteCarloReport rep = monte_carlo_rmse(f, {{90, 0}}, {s1, s2}, 1000, 3, o);
    const double ratio = rep.records[0].rmse_theta / rep.records[1].rmse_theta;
    EXPECT_NEAR(ratio, std::sqrt(s2 / s1), 0.25 * std::sqrt(s2 / s1));
}

TEST(MonteCarlo, BoundHoldsAndOutliersVanishWithSnr)
{
    const UpaField f(UpaSpec{2, 2, 0.5, false});
    MonteCarloOptions o;
    o.search_halfwidth_deg = 10.0;
    const std::vector<double> snrs{db_to_linear(0), db_to_linear(10), db_to_linear(20), db_to_linear(40)};
    const MonteCarloReport rep = monte_carlo_rmse(f, {{90, 0}, {80, 15}}, snrs, 400, 5, o);
    for (std::size_t a = 0; a < 2; ++a)
    {
        double prev = 2.0;
        for (std::size_t s = 0; s < snrs.size(); ++s)
        {
            const auto &r = rep.records[a * snrs.size() + s];
            EXPECT_LE(r.outlier_fraction, prev);
            prev = r.outlier_fraction;
            if (s >= 2)
            {
                EXPECT_GE(r.mse_theta, r.crlb_theta * r.crlb_theta - 3.0 * r.se_mse_theta);
                EXPECT_GE(r.mse_phi, r.crlb_phi * r.crlb_phi - 3.0 * r.se_mse_phi);
            }
        }
        EXPECT_EQ(prev, 0.0);
    }
}

TEST(MonteCarlo, PatternSetSourceAndCsv)
{
    const PatternSet ps = upa_patterns(2, 2, 0.5, AngleGrid(70, 110, -20, 20, 1.0));
    const MonteCarloReport rep = monte_carlo_rmse(ps, {{90, 0}}, {1.0, 100.0}, 100, 2);
    ASSERT_EQ(rep.records.size(), 2u);
    std::ostringstream s;
    write_montecarlo_csv(s, rep);
    std::istringstream in(s.str());
    std::string line;
    int rows = 0;
    std::getline(in, line);
    EXPECT_EQ(line, "theta_deg,phi_deg,snr_db,trials,rmse_theta_rad,rmse_phi_rad,crlb_theta_rad,crlb_phi_rad");
    while (std::getline(in, line))
        ++rows;
    EXPECT_EQ(rows, 2);
}
