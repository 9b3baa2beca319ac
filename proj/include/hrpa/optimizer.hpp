// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// Min-max CRLB geometry search: a genetic algorithm over the connection
// bits with the feed set fixed, alternated with coordinate-wise feed-port
// replacement, and a subdivision schedule that warm-starts every child
// area from its parent's optimum.

#pragma once

#include "hrpa/angle_grid.hpp"
#include "hrpa/core.hpp"
#include "hrpa/crlb.hpp"
#include "hrpa/em_dataset.hpp"
#include "hrpa/parallel.hpp"
#include "hrpa/port_network.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace hrpa
{

// ---------------------------------------------------------------- RNG streams

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for a (seed, a, b, c) key.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0)
{
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq ss{lo(seed), hi(seed), lo(a), hi(a), lo(b), hi(b), lo(c), hi(c)};
    return std::mt19937_64(ss);
}

// ---------------------------------------------------------------- evaluation

struct EvaluatorOptions
{
    double snr_linear = 1.0;
    double fd_step_deg = 0.0; // 0: grid step
    FeedNetworkConfig feednet{};
    unsigned threads = 1;
    double efficiency_tolerance = 1e-6; // lambda above 1 + tol is non-physical
};

/// Worst-case objective of (config, area), memoised. Thread-safe; patterns
/// are formed only on the area plus the finite-difference halo.
class ConfigEvaluator
{
public:
    explicit ConfigEvaluator(const EMDataset &ds, EvaluatorOptions opts = {})
        : model_(ds, opts.feednet.quadrature), opts_(std::move(opts))
    {
        halo_ = detail::fd_multiple(ds.grid(), opts_.fd_step_deg);
        if (!(opts_.snr_linear > 0.0))
            throw InvalidArgument("evaluator: SNR must be positive");
    }

    const EMDataset &dataset() const { return model_.dataset(); }
    const NetworkModel &model() const { return model_; }
    const EvaluatorOptions &options() const { return opts_; }
    Index feed_count() const { return dataset().feed_count(); }
    Index loaded_count() const { return dataset().loaded_count(); }

    std::size_t hits() const { return hits_.load(); }
    std::size_t misses() const { return misses_.load(); }
    std::size_t pattern_computations() const { return computations_.load(); }

    /// Grid window of `area` widened by the finite-difference halo.
    GridBox window(const SensingArea &area) const
    {
        const AngleGrid &g = dataset().grid();
        GridBox b = area_box(g, area);
        b.it0 = std::max<Index>(0, b.it0 - halo_);
        b.ip0 = std::max<Index>(0, b.ip0 - halo_);
        b.it1 = std::min<Index>(g.n_theta() - 1, b.it1 + halo_);
        b.ip1 = std::min<Index>(g.n_phi() - 1, b.ip1 + halo_);
        return b;
    }

    /// Full CRLB map (not cached). Throws on numerical failure.
    CRLBMap map(const GeometryConfig &cfg, const SensingArea &area) const
    {
        validate_config(cfg, feed_count(), loaded_count());
        ++computations_;
        const ActiveNetwork net = model_.evaluate(cfg, opts_.feednet, window(area));
        for (Index i = 0; i < net.efficiencies.size(); ++i)
        {
            const double l = net.efficiencies(i);
            if (!(l >= 0.0) || l > 1.0 + opts_.efficiency_tolerance)
                throw NumericalError("efficiency " + std::to_string(l) + " at active port " + std::to_string(i + 1) +
                                     " is non-physical for " + cfg.describe());
        }
        return crlb_map(net.e, area, opts_.snr_linear, opts_.fd_step_deg, 1);
    }

    /// Worst objective over the area; +inf for non-physical or failed configs.
    double evaluate(const GeometryConfig &cfg, const SensingArea &area)
    {
        validate_config(cfg, feed_count(), loaded_count());
        const std::string k = key(cfg, area);
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(k); it != cache_.end())
            {
                ++hits_;
                return it->second;
            }
        }
        ++misses_;
        double v = kInf;
        try
        {
            v = map(cfg, area).worst;
        }
        catch (const NumericalError &)
        {
            v = kInf;
        }
        std::lock_guard lock(mutex_);
        cache_.emplace(k, v);
        return v;
    }

    std::vector<double> evaluate_many(const std::vector<GeometryConfig> &cfgs, const SensingArea &area)
    {
        std::vector<double> out(cfgs.size());
        parallel_for(cfgs.size(), opts_.threads, [&](std::size_t i) { out[i] = evaluate(cfgs[i], area); });
        return out;
    }

private:
    std::string key(const GeometryConfig &cfg, const SensingArea &area) const
    {
        std::string k = dataset().id_hex();
        for (int f : cfg.feed_ports)
            k += ',' + std::to_string(f);
        k += '|' + cfg.bits() + '|' + format_value(area.theta_min) + ',' + format_value(area.theta_max) + ',' +
             format_value(area.phi_min) + ',' + format_value(area.phi_max);
        return k;
    }

    NetworkModel model_;
    EvaluatorOptions opts_;
    Index halo_ = 1;
    std::mutex mutex_;
    std::unordered_map<std::string, double> cache_;
    std::atomic<std::size_t> hits_{0}, misses_{0};
    mutable std::atomic<std::size_t> computations_{0};
};

// ---------------------------------------------------------------- GA

struct GAParams
{
    int population = 500;
    int generations = 200;
    double crossover_prob = 0.9;
    std::optional<double> mutation_prob; // unset: 1/Q per bit
    int tournament_size = 3;
    int elite_count = 2;
    std::uint64_t seed = 1;
    bool enumerate_small = true; // seed the population with all 2^Q states when they fit

    double mutation(Index q) const { return mutation_prob.value_or(q > 0 ? 1.0 / static_cast<double>(q) : 0.0); }

    void validate() const
    {
        if (population < 2)
            throw InvalidArgument("GA: population must be >= 2");
        if (generations < 0)
            throw InvalidArgument("GA: generations must be >= 0");
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob(crossover_prob) || (mutation_prob && !prob(*mutation_prob)))
            throw InvalidArgument("GA: probabilities must lie in [0, 1]");
        if (tournament_size < 1)
            throw InvalidArgument("GA: tournament size must be >= 1");
        if (elite_count < 0 || elite_count >= population)
            throw InvalidArgument("GA: elite count must be in [0, population)");
    }
};

using Bits = std::vector<std::uint8_t>;

/// Generation-0 population: init_g, then every state if 2^Q fits, then
/// random strings from per-individual streams.
inline std::vector<Bits> ga_initial_population(Index q, const GAParams &p, const Bits &init_g)
{
    std::vector<Bits> pop;
    pop.reserve(static_cast<std::size_t>(p.population));
    pop.push_back(init_g);
    if (p.enumerate_small && q <= 20 && (Index{1} << q) <= p.population)
    {
        for (std::uint64_t v = 0; v < (std::uint64_t{1} << q); ++v)
        {
            Bits g(static_cast<std::size_t>(q));
            for (Index i = 0; i < q; ++i)
                g[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((v >> (q - 1 - i)) & 1U);
            if (g != init_g)
                pop.push_back(std::move(g));
        }
    }
    std::bernoulli_distribution coin(0.5);
    while (static_cast<int>(pop.size()) < p.population)
    {
        auto rng = stream_rng(p.seed, 0, pop.size());
        Bits g(static_cast<std::size_t>(q));
        for (auto &b : g)
            b = coin(rng);
        pop.push_back(std::move(g));
    }
    return pop;
}

struct GAResult
{
    Bits best;
    double best_objective = kInf;
    std::vector<double> history; // best-so-far after generation 0, 1, ...
};

inline GAResult ga_optimize_connections(ConfigEvaluator &ev, const std::vector<int> &feed_ports,
                                        const SensingArea &area, const GAParams &params, const Bits &init_g)
{
    params.validate();
    const Index q = ev.loaded_count();
    if (q < 1)
        throw InvalidArgument("GA: dataset has no loaded ports");
    validate_config({feed_ports, init_g}, ev.feed_count(), q);

    auto evaluate_all = [&](const std::vector<Bits> &gs) {
        std::vector<GeometryConfig> cfgs;
        cfgs.reserve(gs.size());
        for (const auto &g : gs)
            cfgs.push_back({feed_ports, g});
        return ev.evaluate_many(cfgs, area);
    };

    std::vector<Bits> pop = ga_initial_population(q, params, init_g);
    std::vector<double> fit = evaluate_all(pop);

    GAResult res;
    for (std::size_t i = 0; i < pop.size(); ++i)
        if (i == 0 || fit[i] < res.best_objective)
        {
            res.best = pop[i];
            res.best_objective = fit[i];
        }
    res.history.push_back(res.best_objective);

    const auto n = pop.size();
    const double pm = params.mutation(q);
    std::vector<std::size_t> order(n);
    for (int gen = 1; gen <= params.generations; ++gen)
    {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; });

        std::vector<Bits> next(n);
        std::vector<double> next_fit(n, kInf);
        for (int e = 0; e < params.elite_count; ++e)
        {
            next[static_cast<std::size_t>(e)] = pop[order[static_cast<std::size_t>(e)]];
            next_fit[static_cast<std::size_t>(e)] = fit[order[static_cast<std::size_t>(e)]];
        }
        for (std::size_t idx = static_cast<std::size_t>(params.elite_count); idx < n; ++idx)
        {
            auto rng = stream_rng(params.seed, static_cast<std::uint64_t>(gen), idx);
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            auto tournament = [&] {
                std::size_t best = pick(rng);
                for (int t = 1; t < params.tournament_size; ++t)
                {
                    const std::size_t c = pick(rng);
                    if (fit[c] < fit[best] || (fit[c] == fit[best] && c < best))
                        best = c;
                }
                return best;
            };
            const std::size_t a = tournament();
            const std::size_t b = tournament();
            Bits child = pop[a];
            if (u(rng) < params.crossover_prob)
                for (std::size_t i = 0; i < child.size(); ++i)
                    if (u(rng) < 0.5)
                        child[i] = pop[b][i];
            for (auto &bit : child)
                if (u(rng) < pm)
                    bit ^= 1U;
            next[idx] = std::move(child);
        }
        std::vector<Bits> fresh(next.begin() + params.elite_count, next.end());
        const std::vector<double> fresh_fit = evaluate_all(fresh);
        std::copy(fresh_fit.begin(), fresh_fit.end(), next_fit.begin() + params.elite_count);
        pop = std::move(next);
        fit = std::move(next_fit);

        for (std::size_t i = 0; i < n; ++i)
            if (fit[i] < res.best_objective)
            {
                res.best = pop[i];
                res.best_objective = fit[i];
            }
        res.history.push_back(res.best_objective);
    }
    return res;
}

// ---------------------------------------------------------------- port update

struct PortUpdateResult
{
    std::vector<int> feed_ports;
    double objective = kInf;
    std::vector<double> history; // initial objective, then after every position update
    int passes = 0;
    bool converged = false;
};

/// Coordinate descent over feed positions. Each f_n is replaced by the best
/// of (M \ F) u {f_n}; the incumbent is kept on ties, otherwise the lowest
/// port number wins. Stops after a pass without changes.
inline PortUpdateResult sequential_port_update(ConfigEvaluator &ev, const Bits &g, const std::vector<int> &init_f,
                                               const SensingArea &area, int max_passes = 50)
{
    const Index m = ev.feed_count();
    validate_config({init_f, g}, m, ev.loaded_count());
    PortUpdateResult res;
    res.feed_ports = init_f;
    res.objective = ev.evaluate({init_f, g}, area);
    res.history.push_back(res.objective);

    for (int pass = 1; pass <= max_passes; ++pass)
    {
        res.passes = pass;
        bool changed = false;
        for (std::size_t n = 0; n < res.feed_ports.size(); ++n)
        {
            std::vector<bool> used(static_cast<std::size_t>(m) + 1, false);
            for (std::size_t i = 0; i < res.feed_ports.size(); ++i)
                if (i != n)
                    used[static_cast<std::size_t>(res.feed_ports[i])] = true;
            std::vector<int> cands;
            for (int c = 1; c <= m; ++c)
                if (!used[static_cast<std::size_t>(c)])
                    cands.push_back(c);
            std::vector<GeometryConfig> cfgs;
            for (int c : cands)
            {
                GeometryConfig cfg{res.feed_ports, g};
                cfg.feed_ports[n] = c;
                cfgs.push_back(std::move(cfg));
            }
            const std::vector<double> obj = ev.evaluate_many(cfgs, area);

            const int incumbent = res.feed_ports[n];
            double best = res.objective;
            int best_port = incumbent;
            for (std::size_t i = 0; i < cands.size(); ++i)
                if (obj[i] < best)
                {
                    best = obj[i];
                    best_port = cands[i];
                }
            if (best_port != incumbent)
            {
                res.feed_ports[n] = best_port;
                res.objective = best;
                changed = true;
            }
            res.history.push_back(res.objective);
        }
        if (!changed)
        {
            res.converged = true;
            break;
        }
    }
    return res;
}

// ---------------------------------------------------------------- alternation

struct TraceRecord
{
    int iteration = 0;
    std::string phase; // init | connections | ports
    double objective = kInf;
    GeometryConfig config;
};

struct OptimizationTrace
{
    std::vector<TraceRecord> records;
    std::vector<std::vector<double>> ga_histories;
    std::vector<std::vector<double>> port_histories;
    bool converged = false;
};

struct Codeword
{
    SensingArea area;
    GeometryConfig config;
    double objective = kInf;
    int iterations_used = 0;
};

struct AlternatingResult
{
    Codeword codeword;
    OptimizationTrace trace;
};

inline AlternatingResult alternating_optimize(ConfigEvaluator &ev, const GeometryConfig &init,
                                              const SensingArea &area, const GAParams &ga, int max_outer = 20)
{
    if (max_outer < 1)
        throw InvalidArgument("alternating optimisation: max_outer must be >= 1");
    validate_config(init, ev.feed_count(), ev.loaded_count());
    AlternatingResult out;
    GeometryConfig cur = init;
    double obj = ev.evaluate(cur, area);
    out.trace.records.push_back({0, "init", obj, cur});

    int outer = 0;
    for (outer = 1; outer <= max_outer; ++outer)
    {
        const GeometryConfig prev = cur;
        if (ev.loaded_count() > 0)
        {
            GAParams p = ga;
            p.seed = splitmix64(ga.seed ^ splitmix64(static_cast<std::uint64_t>(outer)));
            GAResult r = ga_optimize_connections(ev, cur.feed_ports, area, p, cur.connections);
            cur.connections = r.best;
            obj = r.best_objective;
            out.trace.ga_histories.push_back(std::move(r.history));
            out.trace.records.push_back({outer, "connections", obj, cur});
        }
        PortUpdateResult pu = sequential_port_update(ev, cur.connections, cur.feed_ports, area);
        cur.feed_ports = pu.feed_ports;
        obj = pu.objective;
        out.trace.port_histories.push_back(std::move(pu.history));
        out.trace.records.push_back({outer, "ports", obj, cur});
        if (cur == prev)
        {
            out.trace.converged = true;
            break;
        }
    }
    out.codeword = {area, cur, obj, std::min(outer, max_outer)};
    return out;
}

// ---------------------------------------------------------------- codebook

struct StageSplit
{
    int theta_parts = 1;
    int phi_parts = 1;

    int factor() const { return theta_parts * phi_parts; }
    friend bool operator==(const StageSplit &, const StageSplit &) = default;
};

/// Stages after the root (whose factor is 1).
struct SubdivisionSchedule
{
    std::vector<StageSplit> stages;

    int total() const
    {
        int k = 1;
        for (const auto &s : stages)
            k *= s.factor();
        return k;
    }

    /// "1" for the root only, otherwise e.g. "1,2x2,1x2".
    std::string describe() const
    {
        std::string s = "1";
        for (const auto &st : stages)
            s += "," + std::to_string(st.theta_parts) + "x" + std::to_string(st.phi_parts);
        return s;
    }

    static SubdivisionSchedule parse(const std::string &text)
    {
        SubdivisionSchedule sch;
        std::size_t pos = 0;
        bool first = true;
        while (pos <= text.size())
        {
            const std::size_t comma = std::min(text.find(',', pos), text.size());
            const std::string tok = text.substr(pos, comma - pos);
            pos = comma + 1;
            if (first && tok == "1")
            {
                first = false;
                if (comma == text.size())
                    break;
                continue;
            }
            first = false;
            const auto x = tok.find('x');
            if (x == std::string::npos)
                throw InvalidArgument("schedule stage '" + tok + "' must look like <theta parts>x<phi parts>");
            StageSplit s;
            try
            {
                s.theta_parts = std::stoi(tok.substr(0, x));
                s.phi_parts = std::stoi(tok.substr(x + 1));
            }
            catch (const std::exception &)
            {
                throw InvalidArgument("schedule stage '" + tok + "' is not numeric");
            }
            if (s.theta_parts < 1 || s.phi_parts < 1)
                throw InvalidArgument("schedule parts must be >= 1");
            sch.stages.push_back(s);
            if (comma == text.size())
                break;
        }
        return sch;
    }
};

/// Equal split of `area` into theta_parts x phi_parts children, theta-major.
inline std::vector<SensingArea> split_area(const SensingArea &area, const StageSplit &split, const AngleGrid &grid)
{
    std::vector<SensingArea> out;
    const double dt = area.theta_span() / split.theta_parts;
    const double dp = area.phi_span() / split.phi_parts;
    for (int i = 0; i < split.theta_parts; ++i)
        for (int j = 0; j < split.phi_parts; ++j)
        {
            SensingArea c{area.theta_min + i * dt, area.theta_min + (i + 1) * dt, area.phi_min + j * dp,
                          area.phi_min + (j + 1) * dp};
            if (i + 1 == split.theta_parts)
                c.theta_max = area.theta_max;
            if (j + 1 == split.phi_parts)
                c.phi_max = area.phi_max;
            try
            {
                area_box(grid, c);
            }
            catch (const CoverageError &)
            {
                throw CoverageError("schedule split " + std::to_string(split.theta_parts) + "x" +
                                    std::to_string(split.phi_parts) + " of " + area.describe() +
                                    " does not align with the grid step " + std::to_string(grid.step()));
            }
            out.push_back(c);
        }
    return out;
}

struct CodebookNode
{
    int stage = 1;
    int parent = -1;                  // index into Codebook::nodes
    double parent_objective = kInf;   // parent's config evaluated on this area
    Codeword codeword;
    OptimizationTrace trace;
};

struct Codebook
{
    SensingArea space;
    SubdivisionSchedule schedule;
    Index feed_count = 0;
    Index loaded_count = 0;
    Index active_count = 0;
    std::string dataset_id;
    std::vector<Codeword> codewords; // leaves
    std::vector<CodebookNode> nodes; // every optimised area, stage by stage (empty when loaded from file)
};

using ProgressFn = std::function<void(const CodebookNode &)>;

/// Subdivision codebook. Stage 1 optimises the whole space from `init`;
/// each later child starts from the optimum of the area it was split from.
inline Codebook build_codebook(ConfigEvaluator &ev, const SensingArea &space, const SubdivisionSchedule &schedule,
                               const GAParams &ga, const GeometryConfig &init, int max_outer = 20,
                               const ProgressFn &progress = {})
{
    area_box(ev.dataset().grid(), space);
    Codebook cb;
    cb.space = space;
    cb.schedule = schedule;
    cb.feed_count = ev.feed_count();
    cb.loaded_count = ev.loaded_count();
    cb.active_count = init.n();
    cb.dataset_id = ev.dataset().id_hex();

    auto run = [&](int stage, int parent, const SensingArea &area, const GeometryConfig &start) {
        CodebookNode node;
        node.stage = stage;
        node.parent = parent;
        node.parent_objective = ev.evaluate(start, area);
        GAParams p = ga;
        p.seed = splitmix64(ga.seed ^ splitmix64(0x5eed0000ULL + cb.nodes.size()));
        AlternatingResult r = alternating_optimize(ev, start, area, p, max_outer);
        node.codeword = r.codeword;
        node.trace = std::move(r.trace);
        cb.nodes.push_back(std::move(node));
        if (progress)
            progress(cb.nodes.back());
    };

    run(1, -1, space, init);
    std::vector<int> level{0};
    int stage = 1;
    for (const auto &split : schedule.stages)
    {
        ++stage;
        std::vector<int> next;
        for (int parent : level)
        {
            const SensingArea parent_area = cb.nodes[static_cast<std::size_t>(parent)].codeword.area;
            for (const auto &child : split_area(parent_area, split, ev.dataset().grid()))
            {
                const GeometryConfig start = cb.nodes[static_cast<std::size_t>(parent)].codeword.config;
                run(stage, parent, child, start);
                next.push_back(static_cast<int>(cb.nodes.size()) - 1);
            }
        }
        level = std::move(next);
    }
    for (int i : level)
        cb.codewords.push_back(cb.nodes[static_cast<std::size_t>(i)].codeword);
    return cb;
}

/// Codeword whose area holds the angle: lower bounds inclusive, upper bounds
/// exclusive unless they coincide with the covered space's maximum.
inline const Codeword &codebook_lookup(const Codebook &cb, const Angle &a)
{
    double tmax = -kInf, pmax = -kInf;
    for (const auto &c : cb.codewords)
    {
        tmax = std::max(tmax, c.area.theta_max);
        pmax = std::max(pmax, c.area.phi_max);
    }
    constexpr double eps = 1e-9;
    for (const auto &c : cb.codewords)
    {
        const bool t_ok = a.theta_deg >= c.area.theta_min - eps &&
                          (a.theta_deg < c.area.theta_max - eps ||
                           (std::abs(c.area.theta_max - tmax) <= eps && a.theta_deg <= tmax + eps));
        const bool p_ok = a.phi_deg >= c.area.phi_min - eps &&
                          (a.phi_deg < c.area.phi_max - eps ||
                           (std::abs(c.area.phi_max - pmax) <= eps && a.phi_deg <= pmax + eps));
        if (t_ok && p_ok)
            return c;
    }
    throw CoverageError("angle (" + format_value(a.theta_deg) + ", " + format_value(a.phi_deg) +
                        ") is outside the codebook coverage");
}

/// Root-stage start: N pixel-center feeds chosen by greedy farthest-point
/// sampling from port 1, all pixels connected (g = 0).
inline GeometryConfig initial_config(const PortLayout &layout, Index n)
{
    const Index m = layout.feed_count();
    if (n < 1 || n > m)
        throw InvalidArgument("initial config: N must lie in 1.." + std::to_string(m));
    const auto ports = layout.ports();
    std::vector<int> chosen{1};
    std::vector<double> dmin(static_cast<std::size_t>(m), kInf);
    while (static_cast<Index>(chosen.size()) < n)
    {
        const auto &last = ports[static_cast<std::size_t>(chosen.back() - 1)].position_mm;
        int best = -1;
        double best_d = -1.0;
        for (Index i = 0; i < m; ++i)
        {
            auto &d = dmin[static_cast<std::size_t>(i)];
            d = std::min(d, (ports[static_cast<std::size_t>(i)].position_mm - last).norm());
            if (d > best_d + 1e-9)
            {
                best_d = d;
                best = static_cast<int>(i) + 1;
            }
        }
        chosen.push_back(best);
    }
    std::sort(chosen.begin(), chosen.end());
    return {chosen, Bits(static_cast<std::size_t>(layout.loaded_count()), 0)};
}

struct NestedResult
{
    double size_deg = 0.0;
    Codeword codeword;
    OptimizationTrace trace;
};

/// Square areas of the given sizes (largest first) centred on `center`,
/// each optimisation warm-started from the previous optimum.
inline std::vector<NestedResult> nested_area_sweep(ConfigEvaluator &ev, const Angle &center,
                                                   const std::vector<double> &sizes_deg, const GAParams &ga,
                                                   const GeometryConfig &init, int max_outer = 20)
{
    std::vector<NestedResult> out;
    GeometryConfig start = init;
    for (std::size_t i = 0; i < sizes_deg.size(); ++i)
    {
        const double h = 0.5 * sizes_deg[i];
        const SensingArea area{center.theta_deg - h, center.theta_deg + h, center.phi_deg - h, center.phi_deg + h};
        GAParams p = ga;
        p.seed = splitmix64(ga.seed ^ splitmix64(0xa5ea0000ULL + i));
        AlternatingResult r = alternating_optimize(ev, start, area, p, max_outer);
        start = r.codeword.config;
        out.push_back({sizes_deg[i], r.codeword, std::move(r.trace)});
    }
    return out;
}

} // namespace hrpa
