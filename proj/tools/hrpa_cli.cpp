// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// Command-line front end. Every command writes its outputs plus one
// <command>.manifest.json into --out-dir.
//
// Exit codes: 0 ok, 1 unexpected, 2 bad flags / coverage, 3 I/O or file
// format, 4 validation or dimension mismatch, 5 numerical failure.

#include "hrpa/hrpa.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace hrpa;

namespace
{

constexpr const char *kToolVersion = "1.0.0";

// ---------------------------------------------------------------- parsing

std::vector<std::string> split(const std::string &s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        if (!cur.empty())
            out.push_back(cur);
    return out;
}

double to_double(const std::string &s, const std::string &what)
{
    try
    {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    }
    catch (const std::exception &)
    {
        throw InvalidArgument(what + ": '" + s + "' is not a number");
    }
}

std::vector<double> parse_doubles(const std::string &s, const std::string &what)
{
    std::vector<double> out;
    for (const auto &t : split(s, ','))
        out.push_back(to_double(t, what));
    return out;
}

std::pair<int, int> parse_dims(const std::string &s, const std::string &what)
{
    const auto x = s.find('x');
    if (x == std::string::npos)
        throw InvalidArgument(what + " must look like RxC, got '" + s + "'");
    const double a = to_double(s.substr(0, x), what), b = to_double(s.substr(x + 1), what);
    if (a < 1 || b < 1 || a != std::floor(a) || b != std::floor(b))
        throw InvalidArgument(what + " must be positive integers, got '" + s + "'");
    return {static_cast<int>(a), static_cast<int>(b)};
}

SensingArea parse_area(const std::string &s)
{
    const auto v = parse_doubles(s, "area");
    if (v.size() != 4)
        throw InvalidArgument("area must be theta_min,theta_max,phi_min,phi_max, got '" + s + "'");
    return {v[0], v[1], v[2], v[3]};
}

std::vector<SensingArea> parse_areas(const std::string &s)
{
    std::vector<SensingArea> out;
    for (const auto &t : split(s, ';'))
        out.push_back(parse_area(t));
    if (out.empty())
        throw InvalidArgument("no areas given");
    return out;
}

std::vector<Angle> parse_angles(const std::string &s)
{
    std::vector<Angle> out;
    for (const auto &t : split(s, ';'))
    {
        const auto v = parse_doubles(t, "angle");
        if (v.size() != 2)
            throw InvalidArgument("angle must be theta,phi, got '" + t + "'");
        out.push_back({v[0], v[1]});
    }
    if (out.empty())
        throw InvalidArgument("no angles given");
    return out;
}

std::vector<int> parse_ints(const std::string &s, const std::string &what)
{
    std::vector<int> out;
    for (double v : parse_doubles(s, what))
    {
        if (v != std::floor(v))
            throw InvalidArgument(what + ": " + std::to_string(v) + " is not an integer");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

/// The four 10 x 10 degree evaluation areas: broadside plus three toward endfire.
std::vector<SensingArea> eval_areas()
{
    return {{85, 95, -5, 5}, {15, 25, 65, 75}, {35, 45, 35, 45}, {75, 85, 75, 85}};
}

// ---------------------------------------------------------------- io

std::string digest_bytes(const std::string &bytes)
{
    Fnv1a h;
    h.update(bytes);
    return h.hex();
}

std::string digest_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read '" + path + "'");
    Fnv1a h;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h.update(buf, static_cast<std::size_t>(in.gcount()));
    return h.hex();
}

struct Common
{
    std::string dataset;
    std::string codebook;
    double snr_db = 0.0;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out_dir = ".";
};

class Run
{
public:
    Run(std::string command, const Common &c) : command_(std::move(command)), common_(c)
    {
        start_ = std::chrono::steady_clock::now();
        std::error_code ec;
        fs::create_directories(common_.out_dir, ec);
        if (ec || !fs::is_directory(common_.out_dir))
            throw IoError("cannot create output directory '" + common_.out_dir + "'");
    }

    nlohmann::ordered_json &params() { return params_; }

    void input(const std::string &path)
    {
        if (!path.empty())
            inputs_[path] = digest_file(path);
    }

    std::string path(const std::string &name) const { return (fs::path(common_.out_dir) / name).string(); }

    void write(const std::string &name, const std::string &bytes)
    {
        const std::string p = path(name);
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw IoError("cannot open '" + p + "' for writing");
        out << bytes;
        if (!out)
            throw IoError("write to '" + p + "' failed");
        outputs_[name] = digest_bytes(bytes);
    }

    void wrote_file(const std::string &name) { outputs_[name] = digest_file(path(name)); }

    void finish(const std::vector<std::string> &argv)
    {
        nlohmann::ordered_json m;
        m["command"] = command_;
        m["tool_version"] = kToolVersion;
        m["argv"] = argv;
        nlohmann::ordered_json common;
        common["dataset"] = common_.dataset;
        common["codebook"] = common_.codebook;
        common["snr_db"] = common_.snr_db;
        common["seed"] = common_.seed;
        common["threads"] = common_.threads;
        common["out_dir"] = common_.out_dir;
        m["common"] = common;
        m["parameters"] = params_;
        m["seed"] = common_.seed;
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        m["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const std::string p = path(command_ + ".manifest.json");
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw IoError("cannot write manifest '" + p + "'");
        out << m.dump(2) << '\n';
    }

private:
    std::string command_;
    Common common_;
    std::chrono::steady_clock::time_point start_;
    nlohmann::ordered_json params_;
    std::map<std::string, std::string> inputs_, outputs_;
};

std::string fmt4(double v)
{
    if (std::isinf(v))
        return "inf";
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------- shared option groups

struct NetworkFlags
{
    double z0 = 50.0;
    double z_oc = 1e9;
    bool literal_efficiency = false;
    bool literal_quadrature = false;
    bool normalize = false;
    double fd_step_deg = 0.0;

    void add(CLI::App *app)
    {
        app->add_option("--z0", z0, "source impedance of every active port (ohm)")->capture_default_str();
        app->add_option("--z-oc", z_oc, "open-switch load impedance (ohm)")->capture_default_str();
        app->add_flag("--literal-efficiency", literal_efficiency, "normalise efficiency by eta Re{[(Z0+ZF)^-1]_nn}");
        app->add_flag("--literal-quadrature", literal_quadrature, "drop the sin(theta) weight in power integrals");
        app->add_flag("--normalize-patterns", normalize, "scale coupled patterns to unit average power first");
        app->add_option("--fd-step-deg", fd_step_deg, "finite-difference step (0: grid step)")->capture_default_str();
    }

    EvaluatorOptions options(double snr_linear, unsigned threads) const
    {
        EvaluatorOptions o;
        o.snr_linear = snr_linear;
        o.fd_step_deg = fd_step_deg;
        o.threads = threads;
        o.feednet.source_impedances = {Complex(z0, 0.0)};
        o.feednet.z_oc = z_oc;
        o.feednet.quadrature = literal_quadrature ? Quadrature::Literal : Quadrature::SolidAngle;
        o.feednet.efficiency_mode = literal_efficiency ? EfficiencyMode::Literal : EfficiencyMode::AcceptedPower;
        o.feednet.normalize_patterns = normalize;
        return o;
    }

    void record(nlohmann::ordered_json &p) const
    {
        p["z0"] = z0;
        p["z_oc"] = z_oc;
        p["literal_efficiency"] = literal_efficiency;
        p["literal_quadrature"] = literal_quadrature;
        p["normalize_patterns"] = normalize;
        p["fd_step_deg"] = fd_step_deg;
    }
};

struct GAFlags
{
    GAParams ga;
    double mutation = -1.0;
    int max_outer = 20;

    void add(CLI::App *app)
    {
        app->add_option("--population", ga.population)->capture_default_str();
        app->add_option("--generations", ga.generations)->capture_default_str();
        app->add_option("--crossover", ga.crossover_prob)->capture_default_str();
        app->add_option("--mutation", mutation, "per-bit mutation probability (default 1/Q)");
        app->add_option("--tournament", ga.tournament_size)->capture_default_str();
        app->add_option("--elites", ga.elite_count)->capture_default_str();
        app->add_option("--max-outer", max_outer, "cap on alternating iterations")->capture_default_str();
    }

    GAParams resolve(std::uint64_t seed) const
    {
        GAParams p = ga;
        p.seed = seed;
        if (mutation >= 0.0)
            p.mutation_prob = mutation;
        p.validate();
        if (max_outer < 1)
            throw InvalidArgument("--max-outer must be >= 1");
        return p;
    }

    void record(nlohmann::ordered_json &p) const
    {
        p["population"] = ga.population;
        p["generations"] = ga.generations;
        p["crossover"] = ga.crossover_prob;
        p["mutation"] = mutation >= 0.0 ? nlohmann::ordered_json(mutation) : nlohmann::ordered_json("1/Q");
        p["tournament"] = ga.tournament_size;
        p["elites"] = ga.elite_count;
        p["max_outer"] = max_outer;
    }
};

double snr_linear(const Common &c) { return db_to_linear(c.snr_db); }

EMDataset require_dataset(const Common &c, bool strict = true)
{
    if (c.dataset.empty())
        throw InvalidArgument("--dataset is required");
    LoadOptions o;
    o.strict_validation = strict;
    return load_dataset(c.dataset, o);
}

Codebook require_codebook(const std::string &path, const EMDataset *ds)
{
    if (path.empty())
        throw InvalidArgument("--codebook is required");
    Codebook cb = load_codebook(path);
    if (ds)
    {
        if (cb.feed_count != ds->feed_count() || cb.loaded_count != ds->loaded_count())
            throw DimensionMismatch("codebook port counts (" + std::to_string(cb.feed_count) + "+" +
                                    std::to_string(cb.loaded_count) + ") do not match the dataset");
        if (!cb.dataset_id.empty() && cb.dataset_id != ds->id_hex())
            throw DimensionMismatch("codebook was optimised on dataset " + cb.dataset_id + ", not " + ds->id_hex());
    }
    return cb;
}

// ---------------------------------------------------------------- gen-dataset

struct GenFlags
{
    std::string pixels = "5x5";
    double pixel_side = 12.0, substrate = 62.5, height = 12.5, freq = 2.4e9;
    double step = 1.0;
    std::string theta = "0,180", phi = "-180,180";
    double jitter = 0.0, floor = 0.01;
    std::string out = "dataset.json";
};

int cmd_gen_dataset(const Common &c, const GenFlags &f, const std::vector<std::string> &argv)
{
    const auto [rows, cols] = parse_dims(f.pixels, "--pixels");
    PortLayout layout;
    layout.pixel_rows = rows;
    layout.pixel_cols = cols;
    layout.pixel_side_mm = f.pixel_side;
    layout.substrate_side_mm = f.substrate;
    layout.height_mm = f.height;
    layout.frequency_hz = f.freq;
    layout.validate();
    const auto th = parse_doubles(f.theta, "--theta"), ph = parse_doubles(f.phi, "--phi");
    if (th.size() != 2 || ph.size() != 2)
        throw InvalidArgument("--theta and --phi take start,stop");
    const AngleGrid grid(th[0], th[1], ph[0], ph[1], f.step);
    DipoleModelParams mp;
    mp.reactance_jitter = f.jitter;
    mp.resistance_floor = f.floor;

    Run run("gen-dataset", c);
    auto &p = run.params();
    p["pixels"] = f.pixels;
    p["pixel_side_mm"] = f.pixel_side;
    p["substrate_mm"] = f.substrate;
    p["height_mm"] = f.height;
    p["freq_hz"] = f.freq;
    p["grid"] = grid.describe();
    p["jitter"] = f.jitter;
    p["resistance_floor"] = f.floor;
    p["out"] = f.out;

    const EMDataset ds = generate_synthetic_dataset(layout, grid, mp, c.seed);
    save_dataset(ds, run.path(f.out));
    run.wrote_file(f.out);
    run.finish(argv);
    std::cout << "wrote " << run.path(f.out) << ": " << ds.feed_count() << " feed + " << ds.loaded_count()
              << " loaded ports, " << grid.size() << " directions, id " << ds.id_hex() << '\n';
    return 0;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const Common &c, const std::vector<std::string> &argv)
{
    Run run("validate", c);
    run.input(c.dataset);
    const EMDataset ds = require_dataset(c, false);
    const ValidationReport rep = validate_dataset(ds);
    const std::string text = "dataset " + c.dataset + " (" + ds.provenance() + ", " +
                             std::to_string(ds.port_count()) + " ports, id " + ds.id_hex() + ")\n" + rep.summary();
    run.write("validation.txt", text);
    run.params()["ok"] = rep.ok();
    run.finish(argv);
    std::cout << text;
    return rep.ok() ? 0 : 4;
}

// ---------------------------------------------------------------- optimize

struct OptimizeFlags
{
    int n = 4;
    std::string space = "85,95,-5,5";
    std::string schedule = "1";
    std::string areas;
    bool eval_areas = false;
    std::string out = "codebook.json";
    NetworkFlags net;
    GAFlags ga;
    bool quiet = false;
};

int cmd_optimize(const Common &c, const OptimizeFlags &f, const std::vector<std::string> &argv)
{
    Run run("optimize", c);
    run.input(c.dataset);
    const EMDataset ds = require_dataset(c);
    if (f.n < 1 || f.n > ds.feed_count())
        throw InvalidArgument("--N must lie in 1.." + std::to_string(ds.feed_count()));
    const GAParams ga = f.ga.resolve(c.seed);
    ConfigEvaluator ev(ds, f.net.options(snr_linear(c), c.threads));
    const GeometryConfig init = initial_config(ds.layout(), f.n);

    auto &p = run.params();
    p["N"] = f.n;
    f.ga.record(p);
    f.net.record(p);

    ProgressFn progress;
    if (!f.quiet)
        progress = [](const CodebookNode &n) {
            std::cout << "  stage " << n.stage << "  " << n.codeword.area.describe() << "  worst "
                      << fmt4(n.codeword.objective) << " rad (start " << fmt4(n.parent_objective) << ", "
                      << n.codeword.iterations_used << " iterations)\n";
        };

    Codebook cb;
    if (f.eval_areas || !f.areas.empty())
    {
        // Independent root optimisations, one per listed area.
        const auto areas = f.eval_areas ? eval_areas() : parse_areas(f.areas);
        p["areas"] = nlohmann::ordered_json::array();
        for (const auto &a : areas)
            p["areas"].push_back(a.describe());
        SensingArea box = areas.front();
        for (const auto &a : areas)
            box = {std::min(box.theta_min, a.theta_min), std::max(box.theta_max, a.theta_max),
                   std::min(box.phi_min, a.phi_min), std::max(box.phi_max, a.phi_max)};
        cb.space = box;
        cb.feed_count = ds.feed_count();
        cb.loaded_count = ds.loaded_count();
        cb.active_count = f.n;
        cb.dataset_id = ds.id_hex();
        for (std::size_t i = 0; i < areas.size(); ++i)
        {
            GAParams gi = ga;
            gi.seed = splitmix64(ga.seed ^ splitmix64(0x5eed0000ULL + i));
            Codebook one = build_codebook(ev, areas[i], SubdivisionSchedule{}, gi, init, f.ga.max_outer, progress);
            cb.codewords.push_back(one.codewords.front());
            for (auto &n : one.nodes)
                cb.nodes.push_back(std::move(n));
        }
    }
    else
    {
        const SensingArea space = parse_area(f.space);
        const SubdivisionSchedule sch = SubdivisionSchedule::parse(f.schedule);
        p["space"] = space.describe();
        p["schedule"] = sch.describe();
        cb = build_codebook(ev, space, sch, ga, init, f.ga.max_outer, progress);
    }

    std::ostringstream cbs, trace;
    save_codebook(cb, cbs);
    write_trace_csv(trace, cb);
    run.write(f.out, cbs.str());
    run.write("trace.csv", trace.str());
    run.finish(argv);
    std::cout << "codebook with " << cb.codewords.size() << " codewords -> " << run.path(f.out) << '\n';
    for (const auto &w : cb.codewords)
        std::cout << "  " << w.area.describe() << "  " << w.config.describe() << "  worst " << fmt4(w.objective)
                  << " rad\n";
    return 0;
}

// ---------------------------------------------------------------- sources for map / compare

struct Source
{
    // Exactly one of these is set.
    std::optional<UpaSpec> upa;
    std::optional<Codebook> codebook;
    std::string label;
};

Source parse_source(const std::string &text, const Common &c, const EMDataset *ds)
{
    Source s;
    s.label = text;
    if (text.rfind("upa:", 0) == 0)
    {
        const auto parts = split(text.substr(4), ':');
        if (parts.empty())
            throw InvalidArgument("upa source must look like upa:NYxNZ[:dual]");
        const auto [ny, nz] = parse_dims(parts[0], "upa size");
        UpaSpec u{ny, nz, 0.5, parts.size() > 1 && parts[1] == "dual"};
        s.upa = u;
        return s;
    }
    if (text == "codebook")
    {
        s.codebook = require_codebook(c.codebook, ds);
        return s;
    }
    if (text.rfind("codebook:", 0) == 0)
    {
        s.codebook = require_codebook(text.substr(9), ds);
        return s;
    }
    throw InvalidArgument("source must be codebook, codebook:<path> or upa:NYxNZ[:dual], got '" + text + "'");
}

/// Per-angle CRLB of a codebook: each angle uses the codeword that covers it.
std::vector<CRLBResult> codebook_points(ConfigEvaluator &ev, const Codebook &cb, const SensingArea &area)
{
    const auto angles = area_angles(ev.dataset().grid(), area);
    const GridBox win = ev.window(area);
    std::map<std::size_t, PatternSet> nets;
    std::vector<CRLBResult> out;
    const auto &opts = ev.options();
    for (const auto &a : angles)
    {
        const Codeword &w = codebook_lookup(cb, a);
        const auto idx = static_cast<std::size_t>(&w - cb.codewords.data());
        auto it = nets.find(idx);
        if (it == nets.end())
            it = nets.emplace(idx, ev.model().evaluate(w.config, opts.feednet, win).e).first;
        out.push_back(crlb_matrix(it->second, a, opts.snr_linear, opts.fd_step_deg));
    }
    return out;
}

double worst_of(const std::vector<CRLBResult> &pts)
{
    double w = -1.0;
    for (const auto &r : pts)
        w = std::max(w, std::isnan(r.objective) ? kInf : r.objective);
    return w;
}

// ---------------------------------------------------------------- crlb-map

struct MapFlags
{
    std::string area = "85,95,-5,5";
    std::string upa;
    bool dual = false;
    bool closed_form = false;
    bool numeric = false;
    double spacing = 0.5;
    double step = 1.0;
    double upa_fd = 0.1;
    std::string feeds, bits;
    std::string out = "crlb_map.csv";
    NetworkFlags net;
};

int cmd_crlb_map(const Common &c, const MapFlags &f, const std::vector<std::string> &argv)
{
    Run run("crlb-map", c);
    const SensingArea area = parse_area(f.area);
    const double snr = snr_linear(c);
    auto &p = run.params();
    p["area"] = area.describe();
    std::ostringstream csv;

    if (!f.upa.empty())
    {
        const auto [ny, nz] = parse_dims(f.upa, "--upa");
        const UpaSpec spec{ny, nz, f.spacing, f.dual};
        spec.validate();
        p["upa"] = spec.describe();
        p["step_deg"] = f.step;
        p["fd_step_deg"] = f.upa_fd;
        const bool want_num = !f.closed_form || f.numeric;
        const bool want_cf = f.closed_form || !f.numeric;
        p["mode"] = want_num && want_cf ? "numeric+closed-form" : (want_cf ? "closed-form" : "numeric");
        const UpaField field(spec);
        CRLBMap num, cf;
        if (want_num)
            num = crlb_map(field, area, f.step, snr, f.upa_fd, c.threads);
        if (want_cf)
            cf = upa_closed_form_map(spec, area, f.step, snr);
        if (want_num && want_cf)
        {
            csv << "theta_deg,phi_deg,c_tt,c_tp,c_pp,objective,cf_c_tt,cf_c_tp,cf_c_pp,cf_objective\n";
            for (std::size_t i = 0; i < num.points.size(); ++i)
            {
                const auto &a = num.points[i], &b = cf.points[i];
                csv << format_value(a.angle.theta_deg) << ',' << format_value(a.angle.phi_deg) << ','
                    << format_value(a.c_tt()) << ',' << format_value(a.c_tp()) << ',' << format_value(a.c_pp())
                    << ',' << format_value(a.objective) << ',' << format_value(b.c_tt()) << ','
                    << format_value(b.c_tp()) << ',' << format_value(b.c_pp()) << ',' << format_value(b.objective)
                    << '\n';
            }
        }
        else
        {
            write_crlb_map_csv(csv, want_num ? num : cf);
        }
        const CRLBMap &shown = want_num ? num : cf;
        std::cout << spec.describe() << " over " << area.describe() << ": worst " << fmt4(shown.worst)
                  << " rad at (" << shown.worst_angle.theta_deg << ", " << shown.worst_angle.phi_deg << ")\n";
    }
    else
    {
        run.input(c.dataset);
        const EMDataset ds = require_dataset(c);
        ConfigEvaluator ev(ds, f.net.options(snr, c.threads));
        f.net.record(p);
        CRLBMap m;
        m.area = area;
        if (!f.feeds.empty())
        {
            const GeometryConfig cfg{parse_ints(f.feeds, "--feeds"), parse_bits(f.bits)};
            p["config"] = cfg.describe();
            m = ev.map(cfg, area);
        }
        else
        {
            run.input(c.codebook);
            const Codebook cb = require_codebook(c.codebook, &ds);
            m.points = codebook_points(ev, cb, area);
        }
        write_crlb_map_csv(csv, m);
        std::cout << "worst objective over " << area.describe() << ": " << fmt4(worst_of(m.points)) << " rad ("
                  << m.points.size() << " directions)\n";
    }
    run.write(f.out, csv.str());
    run.finish(argv);
    return 0;
}

// ---------------------------------------------------------------- compare

struct CompareFlags
{
    std::string subject = "codebook";
    std::string baseline = "upa:2x2";
    std::string areas;
    double step = 1.0;
    std::string out = "compare.csv";
    NetworkFlags net;
};

int cmd_compare(const Common &c, const CompareFlags &f, const std::vector<std::string> &argv)
{
    Run run("compare", c);
    std::optional<EMDataset> ds;
    if (!c.dataset.empty())
    {
        run.input(c.dataset);
        ds.emplace(require_dataset(c));
    }
    const double snr = snr_linear(c);
    const Source subj = parse_source(f.subject, c, ds ? &*ds : nullptr);
    const Source base = parse_source(f.baseline, c, ds ? &*ds : nullptr);
    if ((subj.codebook || base.codebook) && !ds)
        throw InvalidArgument("codebook sources need --dataset");
    if (subj.codebook && !c.codebook.empty())
        run.input(c.codebook);

    const AngleGrid grid = ds ? ds->grid() : AngleGrid::full_sphere(f.step);
    std::vector<SensingArea> areas;
    if (!f.areas.empty())
        areas = parse_areas(f.areas);
    else if (subj.codebook)
        for (const auto &w : subj.codebook->codewords)
            areas.push_back(w.area);
    else
        areas = eval_areas();

    std::unique_ptr<ConfigEvaluator> ev;
    if (ds)
        ev = std::make_unique<ConfigEvaluator>(*ds, f.net.options(snr, c.threads));

    auto worst = [&](const Source &s, const SensingArea &a) {
        if (s.upa)
        {
            const PatternSet ps = UpaField(*s.upa).sample(grid.sub(0, grid.n_theta() - 1, 0, grid.n_phi() - 1));
            return crlb_map(ps, a, snr, f.net.fd_step_deg, c.threads).worst;
        }
        return worst_of(codebook_points(*ev, *s.codebook, a));
    };

    auto &p = run.params();
    p["subject"] = f.subject;
    p["baseline"] = f.baseline;
    p["grid"] = grid.describe();
    f.net.record(p);

    std::ostringstream csv;
    csv << "area,theta_min,theta_max,phi_min,phi_max,subject_worst_rad,baseline_worst_rad,improvement\n";
    for (std::size_t i = 0; i < areas.size(); ++i)
    {
        const auto &a = areas[i];
        const double ws = worst(subj, a), wb = worst(base, a);
        double ratio = 1.0 - ws / wb;
        if (std::isinf(wb) && !std::isinf(ws))
            ratio = 1.0;
        csv << i + 1 << ',' << format_value(a.theta_min) << ',' << format_value(a.theta_max) << ','
            << format_value(a.phi_min) << ',' << format_value(a.phi_max) << ',' << format_value(ws) << ','
            << format_value(wb) << ',' << format_value(ratio) << '\n';
        std::cout << "  area " << i + 1 << " " << a.describe() << "  " << subj.label << " " << fmt4(ws) << "  "
                  << base.label << " " << fmt4(wb) << "  improvement " << fmt4(ratio) << '\n';
    }
    run.write(f.out, csv.str());
    run.finish(argv);
    return 0;
}

// ---------------------------------------------------------------- montecarlo

struct MonteFlags
{
    std::string upa;
    bool dual = false;
    std::string angles = "90,0";
    std::string snr_list = "0,10,20";
    int trials = 2000;
    double halfwidth = 10.0;
    double field_step = 0.1;
    double fd_step = 0.1;
    bool no_refine = false;
    bool random_pol = false;
    std::string out = "montecarlo.csv";
    NetworkFlags net;
};

int cmd_montecarlo(const Common &c, const MonteFlags &f, const std::vector<std::string> &argv)
{
    if (f.trials < 100)
        throw InvalidArgument("--trials must be >= 100");
    Run run("montecarlo", c);
    const auto angles = parse_angles(f.angles);
    std::vector<double> snrs;
    for (double db : parse_doubles(f.snr_list, "--snr-list"))
        snrs.push_back(db_to_linear(db));
    MonteCarloOptions o;
    o.search_halfwidth_deg = f.halfwidth;
    o.field_step_deg = f.field_step;
    o.fd_step_deg = f.fd_step;
    o.refine = !f.no_refine;
    o.random_polarization = f.random_pol;
    o.threads = c.threads;

    auto &p = run.params();
    p["angles"] = f.angles;
    p["snr_list_db"] = f.snr_list;
    p["trials"] = f.trials;
    p["search_halfwidth_deg"] = f.halfwidth;
    p["refine"] = o.refine;
    p["random_polarization"] = f.random_pol;

    MonteCarloReport rep;
    rep.seed = c.seed;
    if (!f.upa.empty())
    {
        const auto [ny, nz] = parse_dims(f.upa, "--upa");
        const UpaField field(UpaSpec{ny, nz, 0.5, f.dual});
        p["upa"] = field.spec().describe();
        p["field_step_deg"] = f.field_step;
        p["fd_step_deg"] = f.fd_step;
        rep = monte_carlo_rmse(field, angles, snrs, f.trials, c.seed, o);
    }
    else
    {
        run.input(c.dataset);
        run.input(c.codebook);
        const EMDataset ds = require_dataset(c);
        const Codebook cb = require_codebook(c.codebook, &ds);
        const EvaluatorOptions eo = f.net.options(1.0, c.threads);
        f.net.record(p);
        for (std::size_t i = 0; i < angles.size(); ++i)
        {
            const Codeword &w = codebook_lookup(cb, angles[i]);
            const ActiveNetwork net = overall_patterns(ds, w.config, eo.feednet);
            // Stream index i keeps per-angle draws distinct.
            MonteCarloReport one =
                monte_carlo_rmse(net.e, {angles[i]}, snrs, f.trials, splitmix64(c.seed ^ splitmix64(i)), o);
            rep.records.insert(rep.records.end(), one.records.begin(), one.records.end());
        }
    }
    std::ostringstream csv;
    write_montecarlo_csv(csv, rep);
    run.write(f.out, csv.str());
    run.finish(argv);
    for (const auto &r : rep.records)
        std::cout << "  (" << r.truth.theta_deg << ", " << r.truth.phi_deg << ") " << fmt4(linear_to_db(r.snr_linear))
                  << " dB  rmse " << fmt4(r.rmse_theta) << " / " << fmt4(r.rmse_phi) << "  crlb "
                  << fmt4(r.crlb_theta) << " / " << fmt4(r.crlb_phi) << " rad\n";
    return 0;
}

// ---------------------------------------------------------------- export-plots

struct PlotFlags
{
    std::string ports_list = "2,4,6,8,10,12";
    std::string sizes = "20,10,5";
    std::string center = "90,0";
    std::string compare_range = "80,90,-10,10";
    int n = 4;
    NetworkFlags net;
    GAFlags ga;
};

int cmd_export_plots(const Common &c, const PlotFlags &f, const std::vector<std::string> &argv)
{
    Run run("export-plots", c);
    run.input(c.dataset);
    const EMDataset ds = require_dataset(c);
    const double snr = snr_linear(c);
    const GAParams ga = f.ga.resolve(c.seed);
    ConfigEvaluator ev(ds, f.net.options(snr, c.threads));
    auto &p = run.params();
    p["N"] = f.n;
    p["ports_list"] = f.ports_list;
    p["sizes"] = f.sizes;
    p["center"] = f.center;
    p["compare_range"] = f.compare_range;
    f.ga.record(p);
    f.net.record(p);

    // Per-area bars: codebook (or per-area optimisation) against both UPA baselines.
    std::ostringstream fig5;
    fig5 << "area,theta_min,theta_max,phi_min,phi_max,source,worst_objective_rad\n";
    std::optional<Codebook> cb;
    if (!c.codebook.empty())
    {
        run.input(c.codebook);
        cb = require_codebook(c.codebook, &ds);
    }
    const PatternSet upa1 = UpaField(UpaSpec{2, 2, 0.5, false}).sample(ds.grid());
    const PatternSet upa2 = UpaField(UpaSpec{2, 2, 0.5, true}).sample(ds.grid());
    const GeometryConfig init = initial_config(ds.layout(), f.n);
    const auto areas = eval_areas();
    for (std::size_t i = 0; i < areas.size(); ++i)
    {
        const auto &a = areas[i];
        double hrpa = 0.0;
        if (cb)
        {
            hrpa = worst_of(codebook_points(ev, *cb, a));
        }
        else
        {
            GAParams gi = ga;
            gi.seed = splitmix64(ga.seed ^ splitmix64(0x5eed0000ULL + i));
            hrpa = alternating_optimize(ev, init, a, gi, f.ga.max_outer).codeword.objective;
        }
        auto row = [&](const char *src, double v) {
            fig5 << i + 1 << ',' << format_value(a.theta_min) << ',' << format_value(a.theta_max) << ','
                 << format_value(a.phi_min) << ',' << format_value(a.phi_max) << ',' << src << ','
                 << format_value(v) << '\n';
        };
        row("hrpa", hrpa);
        row("upa_2x2", crlb_map(upa1, a, snr, 0.0, c.threads).worst);
        row("upa_2x2_dual", crlb_map(upa2, a, snr, 0.0, c.threads).worst);
    }
    run.write("fig_area_crlb.csv", fig5.str());

    // Area-size sweep: nested squares, each optimum evaluated over a common range.
    const auto centre = parse_doubles(f.center, "--center");
    if (centre.size() != 2)
        throw InvalidArgument("--center takes theta,phi");
    const SensingArea range = parse_area(f.compare_range);
    const auto sweep = nested_area_sweep(ev, {centre[0], centre[1]}, parse_doubles(f.sizes, "--sizes"), ga, init,
                                         f.ga.max_outer);
    std::ostringstream fig6;
    fig6 << "size_deg,theta_deg,phi_deg,objective_rad,inside_optimised_area\n";
    for (const auto &s : sweep)
    {
        const CRLBMap m = ev.map(s.codeword.config, range);
        for (const auto &pt : m.points)
            fig6 << format_value(s.size_deg) << ',' << format_value(pt.angle.theta_deg) << ','
                 << format_value(pt.angle.phi_deg) << ',' << format_value(pt.objective) << ','
                 << (s.codeword.area.contains(pt.angle) ? 1 : 0) << '\n';
    }
    run.write("fig_area_size.csv", fig6.str());

    // Port-count tradeoff on the broadside area.
    std::ostringstream fig7;
    fig7 << "N,worst_objective_rad,mean_efficiency\n";
    for (int n : parse_ints(f.ports_list, "--ports-list"))
    {
        if (n < 1 || n > ds.feed_count())
            throw InvalidArgument("--ports-list entry " + std::to_string(n) + " outside 1.." +
                                  std::to_string(ds.feed_count()));
        GAParams gn = ga;
        gn.seed = splitmix64(ga.seed ^ splitmix64(0x9047ULL + static_cast<std::uint64_t>(n)));
        const auto r = alternating_optimize(ev, initial_config(ds.layout(), n), areas[0], gn, f.ga.max_outer);
        const ActiveNetwork net =
            ev.model().evaluate(r.codeword.config, ev.options().feednet, ev.window(areas[0]));
        fig7 << n << ',' << format_value(r.codeword.objective) << ',' << format_value(net.efficiencies.mean())
             << '\n';
    }
    run.write("fig_port_tradeoff.csv", fig7.str());
    run.finish(argv);
    std::cout << "wrote fig_area_crlb.csv, fig_area_size.csv, fig_port_tradeoff.csv to " << c.out_dir << '\n';
    return 0;
}

void add_common(CLI::App *app, Common &c)
{
    app->add_option("--dataset", c.dataset, "dataset file");
    app->add_option("--codebook", c.codebook, "codebook file");
    app->add_option("--snr-db", c.snr_db, "signal-to-noise ratio in dB")->capture_default_str();
    app->add_option("--seed", c.seed, "master random seed")->capture_default_str();
    app->add_option("--threads", c.threads, "worker threads (0: all cores)")->capture_default_str();
    app->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"hrpa: CRLB-driven geometry codebooks for reconfigurable pixel antennas"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    Common common;
    GenFlags gen;
    OptimizeFlags opt;
    MapFlags map;
    CompareFlags cmp;
    MonteFlags mc;
    PlotFlags plots;

    auto *s_gen = app.add_subcommand("gen-dataset", "synthesise a coupled-dipole dataset");
    add_common(s_gen, common);
    s_gen->add_option("--pixels", gen.pixels, "pixel array RxC")->capture_default_str();
    s_gen->add_option("--pixel-side-mm", gen.pixel_side)->capture_default_str();
    s_gen->add_option("--substrate-mm", gen.substrate)->capture_default_str();
    s_gen->add_option("--height-mm", gen.height)->capture_default_str();
    s_gen->add_option("--freq-hz", gen.freq)->capture_default_str();
    s_gen->add_option("--step-deg", gen.step, "angular grid step")->capture_default_str();
    s_gen->add_option("--theta", gen.theta, "theta start,stop")->capture_default_str();
    s_gen->add_option("--phi", gen.phi, "phi start,stop")->capture_default_str();
    s_gen->add_option("--jitter", gen.jitter, "self-reactance jitter std-dev (ohm)")->capture_default_str();
    s_gen->add_option("--resistance-floor", gen.floor)->capture_default_str();
    s_gen->add_option("--out", gen.out, "file name inside --out-dir")->capture_default_str();

    auto *s_val = app.add_subcommand("validate", "check reciprocity, passivity and finiteness of a dataset");
    add_common(s_val, common);

    auto *s_opt = app.add_subcommand("optimize", "build a geometry codebook");
    add_common(s_opt, common);
    s_opt->add_option("--N", opt.n, "active feed ports")->capture_default_str();
    s_opt->add_option("--space", opt.space, "theta_min,theta_max,phi_min,phi_max")->capture_default_str();
    s_opt->add_option("--schedule", opt.schedule, "stage splits, e.g. 1,2x2")->capture_default_str();
    s_opt->add_option("--areas", opt.areas, "independent areas 'a,b,c,d;...' instead of a subdivision");
    s_opt->add_flag("--eval-areas", opt.eval_areas, "the four 10x10 degree evaluation areas");
    s_opt->add_option("--out", opt.out)->capture_default_str();
    s_opt->add_flag("--quiet", opt.quiet);
    opt.net.add(s_opt);
    opt.ga.add(s_opt);

    auto *s_map = app.add_subcommand("crlb-map", "per-direction CRLB table");
    add_common(s_map, common);
    s_map->add_option("--area", map.area)->capture_default_str();
    s_map->add_option("--upa", map.upa, "UPA baseline NYxNZ instead of a dataset");
    s_map->add_flag("--dual-pol", map.dual);
    s_map->add_flag("--closed-form", map.closed_form, "closed-form UPA bound only");
    s_map->add_flag("--numeric", map.numeric, "numeric UPA bound only");
    s_map->add_option("--spacing", map.spacing, "UPA spacing / wavelength")->capture_default_str();
    s_map->add_option("--step-deg", map.step, "UPA map step")->capture_default_str();
    s_map->add_option("--upa-fd-step-deg", map.upa_fd)->capture_default_str();
    s_map->add_option("--feeds", map.feeds, "explicit feed ports, e.g. 1,5,21,25");
    s_map->add_option("--g", map.bits, "explicit connection bitstring");
    s_map->add_option("--out", map.out)->capture_default_str();
    map.net.add(s_map);

    auto *s_cmp = app.add_subcommand("compare", "worst objective per area, subject against baseline");
    add_common(s_cmp, common);
    s_cmp->add_option("--subject", cmp.subject, "codebook | codebook:<path> | upa:NYxNZ[:dual]")
        ->capture_default_str();
    s_cmp->add_option("--baseline", cmp.baseline)->capture_default_str();
    s_cmp->add_option("--areas", cmp.areas);
    s_cmp->add_option("--step-deg", cmp.step, "grid step when no dataset is given")->capture_default_str();
    s_cmp->add_option("--out", cmp.out)->capture_default_str();
    cmp.net.add(s_cmp);

    auto *s_mc = app.add_subcommand("montecarlo", "ML estimator RMSE against the CRLB");
    add_common(s_mc, common);
    s_mc->add_option("--upa", mc.upa, "UPA NYxNZ instead of dataset + codebook");
    s_mc->add_flag("--dual-pol", mc.dual);
    s_mc->add_option("--angles", mc.angles, "theta,phi;...")->capture_default_str();
    s_mc->add_option("--snr-list", mc.snr_list, "dB values")->capture_default_str();
    s_mc->add_option("--trials", mc.trials)->capture_default_str();
    s_mc->add_option("--search-halfwidth-deg", mc.halfwidth)->capture_default_str();
    s_mc->add_option("--field-step-deg", mc.field_step)->capture_default_str();
    s_mc->add_option("--upa-fd-step-deg", mc.fd_step)->capture_default_str();
    s_mc->add_flag("--no-refine", mc.no_refine);
    s_mc->add_flag("--random-pol", mc.random_pol);
    s_mc->add_option("--out", mc.out)->capture_default_str();
    mc.net.add(s_mc);

    auto *s_plot = app.add_subcommand("export-plots", "plot-ready CSVs: per-area bars, area size, port count");
    add_common(s_plot, common);
    s_plot->add_option("--N", plots.n)->capture_default_str();
    s_plot->add_option("--ports-list", plots.ports_list)->capture_default_str();
    s_plot->add_option("--sizes", plots.sizes)->capture_default_str();
    s_plot->add_option("--center", plots.center)->capture_default_str();
    s_plot->add_option("--compare-range", plots.compare_range)->capture_default_str();
    plots.net.add(s_plot);
    plots.ga.add(s_plot);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::Success &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return 2;
    }

    const std::vector<std::string> args(argv, argv + argc);
    try
    {
        if (*s_gen)
            return cmd_gen_dataset(common, gen, args);
        if (*s_val)
            return cmd_validate(common, args);
        if (*s_opt)
            return cmd_optimize(common, opt, args);
        if (*s_map)
            return cmd_crlb_map(common, map, args);
        if (*s_cmp)
            return cmd_compare(common, cmp, args);
        if (*s_mc)
            return cmd_montecarlo(common, mc, args);
        if (*s_plot)
            return cmd_export_plots(common, plots, args);
    }
    catch (const InvalidArgument &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const CoverageError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const IoError &e)
    {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    }
    catch (const FormatError &e)
    {
        std::cerr << "format error: " << e.what() << '\n';
        return 3;
    }
    catch (const ValidationError &e)
    {
        std::cerr << "validation error: " << e.what() << '\n';
        return 4;
    }
    catch (const DimensionMismatch &e)
    {
        std::cerr << "dimension mismatch: " << e.what() << '\n';
        return 4;
    }
    catch (const NumericalError &e)
    {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 5;
    }
    catch (const std::exception &e)
    {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
