// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// Evaluator, GA, port updates, alternation and codebooks.

#include "oracles/oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hrpa;

namespace
{

const EMDataset &toy()
{
    static const EMDataset ds = oracle::small_dataset(2, 2, 1.0, 0);
    return ds;
}

const SensingArea kBroadside{85, 95, -5, 5};

GAParams small_ga(std::uint64_t seed = 1)
{
    GAParams p;
    p.population = 20;
    p.generations = 10;
    p.seed = seed;
    return p;
}

} // namespace

// ---------------------------------------------------------------- evaluator

TEST(Evaluator, FiniteObjectiveForInitialConfig)
{
    ConfigEvaluator ev(toy());
    const double v = ev.evaluate(initial_config(toy().layout(), 2), kBroadside);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
}

TEST(Evaluator, CacheHitSkipsPatternWork)
{
    ConfigEvaluator ev(toy());
    const GeometryConfig cfg{{1, 4}, {0, 1, 0, 1}};
    const double a = ev.evaluate(cfg, kBroadside);
    const std::size_t work = ev.pattern_computations();
    const double b = ev.evaluate(cfg, kBroadside);
    EXPECT_EQ(a, b);
    EXPECT_EQ(ev.pattern_computations(), work);
    EXPECT_EQ(ev.hits(), 1u);
    EXPECT_EQ(ev.misses(), 1u);
}

TEST(Evaluator, MatchesFreshFullGridRecomputation)
{
    ConfigEvaluator ev(toy());
    for (const GeometryConfig &cfg : {GeometryConfig{{1, 2}, {0, 0, 0, 0}}, GeometryConfig{{3, 4}, {1, 0, 1, 1}}})
    {
        const ActiveNetwork net = overall_patterns(toy(), cfg);
        const double want = crlb_map(net.e, kBroadside, 1.0).worst;
        EXPECT_NEAR(ev.evaluate(cfg, kBroadside), want, 1e-9 * want);
    }
}

TEST(Evaluator, AreaOfSingularAnglesScoresInfinity)
{
    // One Theta-only feed and all switches open: a single port has no
    // two-dimensional information anywhere.
    ConfigEvaluator ev(toy());
    EXPECT_TRUE(std::isinf(ev.evaluate({{1}, {1, 1, 1, 1}}, {88, 92, -2, 2})));
}

TEST(Evaluator, InvalidConfigIsRejected)
{
    ConfigEvaluator ev(toy());
    EXPECT_THROW(ev.evaluate({{1, 1}, {0, 0, 0, 0}}, kBroadside), InvalidArgument);
    EXPECT_THROW(ev.evaluate({{1}, {0, 0}}, kBroadside), InvalidArgument);
}

// ---------------------------------------------------------------- GA

TEST(Ga, EnumeratingPopulationFindsExhaustiveOptimum)
{
    ConfigEvaluator ev(toy());
    const std::vector<int> f{1, 4};
    GAParams p = small_ga();
    p.population = 16;
    p.generations = 2;
    const GAResult r = ga_optimize_connections(ev, f, kBroadside, p, Bits(4, 0));
    const oracle::Exhaustive ex = oracle::exhaustive_connections(toy(), f, kBroadside, 1.0);
    EXPECT_EQ(r.best, ex.best.connections);
    EXPECT_NEAR(r.best_objective, ex.objective, 1e-12 * ex.objective);
}

TEST(Ga, DegenerateSettingsReturnBestInitialIndividual)
{
    ConfigEvaluator ev(toy());
    GAParams p;
    p.population = 5;
    p.elite_count = 4;
    p.generations = 3;
    p.crossover_prob = 0.0;
    p.mutation_prob = 0.0;
    p.enumerate_small = false;
    p.seed = 9;
    const std::vector<int> f{2, 3};
    const auto pop = ga_initial_population(4, p, Bits{1, 0, 0, 1});
    double best = kInf;
    for (const auto &g : pop)
        best = std::min(best, ev.evaluate({f, g}, kBroadside));
    const GAResult r = ga_optimize_connections(ev, f, kBroadside, p, Bits{1, 0, 0, 1});
    EXPECT_EQ(r.best_objective, best);
}

TEST(Ga, InitialPopulationContainsInitAndIsSeeded)
{
    GAParams p;
    p.population = 30;
    p.enumerate_small = false;
    const Bits init{1, 1, 0, 0, 1, 0};
    const auto a = ga_initial_population(6, p, init);
    const auto b = ga_initial_population(6, p, init);
    EXPECT_EQ(a.front(), init);
    EXPECT_EQ(a, b);
    p.seed = 2;
    EXPECT_NE(ga_initial_population(6, p, init), a);
}

TEST(Ga, HistoryIsNonIncreasingAndDeterministicAcrossThreads)
{
    const EMDataset ds = oracle::small_dataset(3, 3, 1.0, 1);
    EvaluatorOptions o1;
    EvaluatorOptions o4;
    o4.threads = 4;
    ConfigEvaluator e1(ds, o1), e4(ds, o4);
    GAParams p = small_ga(5);
    const Bits init(static_cast<std::size_t>(ds.loaded_count()), 0);
    const GAResult a = ga_optimize_connections(e1, {1, 5, 9}, kBroadside, p, init);
    const GAResult b = ga_optimize_connections(e4, {1, 5, 9}, kBroadside, p, init);
    EXPECT_TRUE(oracle::non_increasing(a.history));
    EXPECT_EQ(a.best, b.best);
    EXPECT_EQ(a.history, b.history);
    EXPECT_LE(a.best_objective, e1.evaluate({{1, 5, 9}, init}, kBroadside));
}

TEST(Ga, ParameterValidation)
{
    GAParams p;
    p.population = 1;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = GAParams{};
    p.crossover_prob = 1.5;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = GAParams{};
    p.elite_count = p.population;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = GAParams{};
    p.mutation_prob = -0.1;
    EXPECT_THROW(p.validate(), InvalidArgument);
}

// ---------------------------------------------------------------- port update

TEST(PortUpdate, AllFeedsActiveIsImmediateFixedPoint)
{
    ConfigEvaluator ev(toy());
    const PortUpdateResult r = sequential_port_update(ev, Bits(4, 0), {1, 2, 3, 4}, kBroadside);
    EXPECT_EQ(r.feed_ports, (std::vector<int>{1, 2, 3, 4}));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.passes, 1);
}

TEST(PortUpdate, NeverWorseThanStartAndMonotone)
{
    ConfigEvaluator ev(toy());
    for (const auto &f : oracle::subsets(4, 2))
    {
        const Bits g{0, 1, 1, 0};
        const PortUpdateResult r = sequential_port_update(ev, g, f, kBroadside);
        EXPECT_LE(r.objective, ev.evaluate({f, g}, kBroadside));
        EXPECT_TRUE(oracle::non_increasing(r.history));
        EXPECT_TRUE(r.converged);
        // Exhaustive over the six pairs bounds it from below.
        double best = kInf;
        for (const auto &h : oracle::subsets(4, 2))
            best = std::min(best, ev.evaluate({h, g}, kBroadside));
        EXPECT_GE(r.objective, best);
    }
}

TEST(PortUpdate, ReachesPairOptimumWhenSingleSwapConnected)
{
    // With N=2 of M=4 every pair is one swap away from a pair sharing a
    // port, and a converged pass checks both positions.
    ConfigEvaluator ev(toy());
    const Bits g{0, 0, 0, 0};
    double best = kInf;
    for (const auto &h : oracle::subsets(4, 2))
        best = std::min(best, ev.evaluate({h, g}, kBroadside));
    const PortUpdateResult r = sequential_port_update(ev, g, {1, 2}, kBroadside);
    // Not guaranteed in general; record the gap when it exists.
    EXPECT_LE(r.objective, 1.5 * best);
}

// ---------------------------------------------------------------- alternation

TEST(Alternating, WithinTwentyPercentOfGlobalOptimum)
{
    ConfigEvaluator ev(toy());
    const oracle::Exhaustive ex = oracle::exhaustive_optimum(toy(), 2, kBroadside, 1.0);
    EXPECT_EQ(ex.evaluated, 96u);
    const AlternatingResult r = alternating_optimize(ev, initial_config(toy().layout(), 2), kBroadside, small_ga());
    EXPECT_LE(r.codeword.objective, 1.2 * ex.objective);
    EXPECT_GE(r.codeword.objective, ex.objective * (1 - 1e-12));
}

TEST(Alternating, StartingAtOptimumConvergesInOneIteration)
{
    ConfigEvaluator ev(toy());
    const oracle::Exhaustive ex = oracle::exhaustive_optimum(toy(), 2, kBroadside, 1.0);
    const AlternatingResult r = alternating_optimize(ev, ex.best, kBroadside, small_ga());
    EXPECT_EQ(r.codeword.iterations_used, 1);
    EXPECT_EQ(r.codeword.config, ex.best);
    EXPECT_TRUE(r.trace.converged);
}

TEST(Alternating, TraceIsMonotoneAndFeasible)
{
    const EMDataset ds = oracle::small_dataset(3, 3, 1.0, 1);
    ConfigEvaluator ev(ds);
    const AlternatingResult r = alternating_optimize(ev, initial_config(ds.layout(), 3), kBroadside, small_ga(), 5);
    std::vector<double> obj;
    for (const auto &rec : r.trace.records)
    {
        obj.push_back(rec.objective);
        EXPECT_NO_THROW(validate_config(rec.config, 9, ds.loaded_count()));
        EXPECT_EQ(rec.config.n(), 3);
    }
    EXPECT_TRUE(oracle::non_increasing(obj));
    EXPECT_NEAR(r.codeword.objective, ev.map(r.codeword.config, kBroadside).worst, 1e-12);
}

TEST(Alternating, RejectsZeroOuterIterations)
{
    ConfigEvaluator ev(toy());
    EXPECT_THROW(alternating_optimize(ev, initial_config(toy().layout(), 2), kBroadside, small_ga(), 0),
                 InvalidArgument);
}

// ---------------------------------------------------------------- codebook

TEST(Schedule, ParseAndDescribe)
{
    const SubdivisionSchedule s = SubdivisionSchedule::parse("1,2x2,1x2");
    ASSERT_EQ(s.stages.size(), 2u);
    EXPECT_EQ(s.total(), 8);
    EXPECT_EQ(s.describe(), "1,2x2,1x2");
    EXPECT_EQ(SubdivisionSchedule::parse("1").total(), 1);
    EXPECT_THROW(SubdivisionSchedule::parse("1,2y2"), InvalidArgument);
    EXPECT_THROW(SubdivisionSchedule::parse("1,0x2"), InvalidArgument);
}

TEST(Schedule, SplitTilesParentExactly)
{
    const AngleGrid grid = AngleGrid::full_sphere(1.0);
    const SensingArea parent{80, 100, -10, 10};
    const auto kids = split_area(parent, {2, 2}, grid);
    ASSERT_EQ(kids.size(), 4u);
    double area = 0.0;
    for (const auto &k : kids)
    {
        EXPECT_TRUE(parent.contains(k));
        area += k.theta_span() * k.phi_span();
    }
    EXPECT_EQ(area, parent.theta_span() * parent.phi_span());
    EXPECT_THROW(split_area({80, 100, -10, 10}, {3, 1}, grid), CoverageError);
}

TEST(Codebook, SingleStageGivesOneCodeword)
{
    ConfigEvaluator ev(toy());
    const Codebook cb = build_codebook(ev, kBroadside, {}, small_ga(), initial_config(toy().layout(), 2), 3);
    EXPECT_EQ(cb.codewords.size(), 1u);
    EXPECT_EQ(cb.codewords[0].area, kBroadside);
}

TEST(Codebook, ChildrenNeverWorseThanParentOnTheirArea)
{
    ConfigEvaluator ev(toy());
    const SensingArea space{80, 100, -10, 10};
    const Codebook cb = build_codebook(ev, space, SubdivisionSchedule::parse("1,2x2"), small_ga(),
                                       initial_config(toy().layout(), 2), 3);
    ASSERT_EQ(cb.codewords.size(), 4u);
    ASSERT_EQ(cb.nodes.size(), 5u);
    for (std::size_t i = 1; i < cb.nodes.size(); ++i)
    {
        const auto &n = cb.nodes[i];
        EXPECT_EQ(n.parent, 0);
        EXPECT_EQ(n.codeword.area.theta_span(), 10.0);
        EXPECT_LE(n.codeword.objective, n.parent_objective);
        const double parent_on_child = ev.map(cb.nodes[0].codeword.config, n.codeword.area).worst;
        EXPECT_NEAR(n.parent_objective, parent_on_child, 1e-12 * parent_on_child);
    }
}

TEST(Codebook, LookupBoundaryConvention)
{
    Codebook cb;
    cb.space = {80, 100, -10, 10};
    for (const auto &a : split_area(cb.space, {2, 2}, AngleGrid::full_sphere(1.0)))
        cb.codewords.push_back({a, {}, 0.0, 0});
    EXPECT_EQ(codebook_lookup(cb, {85, -5}).area, (SensingArea{80, 90, -10, 0}));
    EXPECT_EQ(codebook_lookup(cb, {90, 0}).area, (SensingArea{90, 100, 0, 10}));
    EXPECT_EQ(codebook_lookup(cb, {90, -3}).area, (SensingArea{90, 100, -10, 0}));
    EXPECT_EQ(codebook_lookup(cb, {100, 10}).area, (SensingArea{90, 100, 0, 10}));
    EXPECT_THROW(codebook_lookup(cb, {101, 0}), CoverageError);
    EXPECT_THROW(codebook_lookup(cb, {79.5, 0}), CoverageError);
}

TEST(Codebook, FileRoundTripAndDeterminism)
{
    const auto build = [](unsigned threads) {
        EvaluatorOptions o;
        o.threads = threads;
        ConfigEvaluator ev(toy(), o);
        const Codebook cb = build_codebook(ev, {80, 100, -10, 10}, SubdivisionSchedule::parse("1,1x2"), small_ga(3),
                                           initial_config(toy().layout(), 2), 3);
        std::ostringstream s;
        save_codebook(cb, s);
        return s.str();
    };
    const std::string a = build(1), b = build(4);
    EXPECT_EQ(a, b);
    std::istringstream in(a);
    const Codebook back = load_codebook(in);
    ASSERT_EQ(back.codewords.size(), 2u);
    std::ostringstream again;
    save_codebook(back, again);
    EXPECT_EQ(again.str(), a);
}

TEST(Codebook, MalformedFilesAreFormatErrors)
{
    std::istringstream junk("[1,2");
    EXPECT_THROW(load_codebook(junk), FormatError);
    std::istringstream badg(R"({"version":1,"space":{"theta_min":0,"theta_max":1,"phi_min":0,"phi_max":1},
        "schedule":"1","ports":{"feed":4,"loaded":4,"active":2},
        "codewords":[{"area":{"theta_min":0,"theta_max":1,"phi_min":0,"phi_max":1},"F":[1,2],"g":"01x0",
        "objective_rad":0.1}]})");
    EXPECT_THROW(load_codebook(badg), FormatError);
    EXPECT_THROW(load_codebook(std::string("/nonexistent/cb.json")), IoError);
}

TEST(InitialConfig, SpreadsFeedsAndConnectsEverything)
{
    const PortLayout l;
    const GeometryConfig c = initial_config(l, 4);
    EXPECT_EQ(c.feed_ports, (std::vector<int>{1, 5, 21, 25}));
    EXPECT_EQ(c.connections, Bits(40, 0));
    EXPECT_EQ(initial_config(l, 25).n(), 25);
    EXPECT_THROW(initial_config(l, 26), InvalidArgument);
}

TEST(Nested, SweepWarmStartsDownTheNesting)
{
    ConfigEvaluator ev(toy());
    const auto r = nested_area_sweep(ev, {90, 0}, {10, 4}, small_ga(), initial_config(toy().layout(), 2), 3);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[1].codeword.area, (SensingArea{88, 92, -2, 2}));
    EXPECT_LE(r[1].codeword.objective, ev.evaluate(r[0].codeword.config, r[1].codeword.area));
}
