// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// Versioned dataset file: one JSON document
//
//   { "version": 1, "provenance": "...", "layout": {...}, "grid": {...},
//     "model": {...} (optional),
//     "Z":    [[re, im], ...]   (M+Q)^2 entries, row-major, ohms
//     "E_oc": [[re, im], ...]   2 x (M+Q) x G entries, polarisation-major,
//                               port-major, grid-row-major }
//
// Floats are written in shortest round-trip form, so save/load is bit-exact.

#pragma once

#include "hrpa/core.hpp"
#include "hrpa/em_dataset.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

namespace hrpa
{

namespace detail
{

/// Shortest round-trip decimal form that always parses back as a float.
inline std::string format_double(double v)
{
    if (!std::isfinite(v))
        throw FormatError("cannot serialise non-finite value");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eE") == std::string::npos)
        s += ".0";
    return s;
}

inline void write_pair(std::ostream &out, Complex c)
{
    out << '[' << format_double(c.real()) << ',' << format_double(c.imag()) << ']';
}

inline nlohmann::ordered_json layout_to_json(const PortLayout &l)
{
    nlohmann::ordered_json j;
    j["pixel_rows"] = l.pixel_rows;
    j["pixel_cols"] = l.pixel_cols;
    j["pixel_side_mm"] = l.pixel_side_mm;
    j["substrate_side_mm"] = l.substrate_side_mm;
    j["height_mm"] = l.height_mm;
    j["frequency_hz"] = l.frequency_hz;
    j["feed_ports"] = l.feed_count();
    j["loaded_ports"] = l.loaded_count();
    return j;
}

inline nlohmann::ordered_json grid_to_json(const AngleGrid &g)
{
    nlohmann::ordered_json j;
    j["theta_start_deg"] = g.theta_start();
    j["theta_stop_deg"] = g.theta_stop();
    j["phi_start_deg"] = g.phi_start();
    j["phi_stop_deg"] = g.phi_stop();
    j["step_deg"] = g.step();
    return j;
}

inline nlohmann::ordered_json model_to_json(const DipoleModelParams &m)
{
    nlohmann::ordered_json j;
    if (m.feed_length_mm)
        j["feed_length_mm"] = *m.feed_length_mm;
    if (m.loaded_length_mm)
        j["loaded_length_mm"] = *m.loaded_length_mm;
    j["feed_self_reactance"] = m.feed_self_reactance;
    j["loaded_self_reactance"] = m.loaded_self_reactance;
    j["mutual_reactance_scale"] = m.mutual_reactance_scale;
    j["resistance_floor"] = m.resistance_floor;
    j["reactance_jitter"] = m.reactance_jitter;
    j["ground_plane"] = m.ground_plane;
    return j;
}

template <class Json> double require_number(const Json &obj, const char *key, const char *where)
{
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_number())
        throw FormatError(std::string("dataset: missing numeric field '") + where + "." + key + "'");
    return obj.at(key).template get<double>();
}

/// SAX consumer that streams the bulk "Z" / "E_oc" arrays into flat vectors
/// and builds an ordinary DOM for everything else.
class DatasetSax
{
public:
    using json = nlohmann::json;

    json root;
    std::vector<double> z_values;
    std::vector<double> e_values;

    bool null() { return scalar(json(nullptr)); }
    bool boolean(bool v) { return scalar(json(v)); }
    bool number_integer(json::number_integer_t v) { return number(static_cast<double>(v)); }
    bool number_unsigned(json::number_unsigned_t v) { return number(static_cast<double>(v)); }
    bool number_float(json::number_float_t v, const json::string_t &) { return number(v); }
    bool string(json::string_t &v) { return scalar(json(v)); }
    bool binary(json::binary_t &) { return fail("unexpected binary value"); }

    bool start_object(std::size_t)
    {
        if (bulk_)
            return fail("object inside numeric array '" + bulk_key_ + "'");
        return open(json::object());
    }
    bool end_object()
    {
        stack_.pop_back();
        return true;
    }
    bool key(json::string_t &k)
    {
        last_key_ = k;
        if (stack_.size() == 1 && (k == "Z" || k == "E_oc"))
            pending_bulk_ = true;
        return true;
    }
    bool start_array(std::size_t)
    {
        if (pending_bulk_)
        {
            pending_bulk_ = false;
            bulk_ = last_key_ == "Z" ? &z_values : &e_values;
            bulk_key_ = last_key_;
            bulk_depth_ = 1;
            return true;
        }
        if (bulk_)
        {
            if (bulk_depth_ != 1)
                return fail("nesting too deep in '" + bulk_key_ + "'");
            bulk_depth_ = 2;
            pair_count_ = 0;
            return true;
        }
        return open(json::array());
    }
    bool end_array()
    {
        if (bulk_)
        {
            if (bulk_depth_ == 2)
            {
                if (pair_count_ != 2)
                    return fail("entries of '" + bulk_key_ + "' must be [re, im] pairs");
                bulk_depth_ = 1;
            }
            else
            {
                bulk_ = nullptr;
            }
            return true;
        }
        stack_.pop_back();
        return true;
    }
    bool parse_error(std::size_t pos, const std::string &, const nlohmann::detail::exception &ex)
    {
        return fail("parse error at byte " + std::to_string(pos) + ": " + ex.what());
    }

    const std::string &error() const { return error_; }

private:
    bool fail(std::string msg)
    {
        error_ = std::move(msg);
        return false;
    }

    bool number(double v)
    {
        if (bulk_)
        {
            if (bulk_depth_ != 2)
                return fail("bare number in '" + bulk_key_ + "'; expected [re, im] pairs");
            if (++pair_count_ > 2)
                return fail("entries of '" + bulk_key_ + "' must be [re, im] pairs");
            bulk_->push_back(v);
            return true;
        }
        return scalar(json(v));
    }

    bool scalar(json v)
    {
        if (bulk_)
            return fail("non-numeric value in '" + bulk_key_ + "'");
        pending_bulk_ = false;
        if (stack_.empty())
        {
            root = std::move(v);
            return true;
        }
        json &top = *stack_.back();
        if (top.is_object())
            top[last_key_] = std::move(v);
        else
            top.push_back(std::move(v));
        return true;
    }

    bool open(json v)
    {
        if (stack_.empty())
        {
            root = std::move(v);
            stack_.push_back(&root);
            return true;
        }
        json &top = *stack_.back();
        json *child = nullptr;
        if (top.is_object())
        {
            top[last_key_] = std::move(v);
            child = &top[last_key_];
        }
        else
        {
            top.push_back(std::move(v));
            child = &top.back();
        }
        stack_.push_back(child);
        return true;
    }

    std::vector<json *> stack_;
    std::string last_key_;
    bool pending_bulk_ = false;
    std::vector<double> *bulk_ = nullptr;
    std::string bulk_key_;
    int bulk_depth_ = 0;
    int pair_count_ = 0;
    std::string error_;
};

} // namespace detail

inline void save_dataset(const EMDataset &ds, std::ostream &out)
{
    out << "{\n\"version\": 1,\n";
    out << "\"provenance\": " << nlohmann::json(ds.provenance()).dump() << ",\n";
    out << "\"layout\": " << detail::layout_to_json(ds.layout()).dump() << ",\n";
    out << "\"grid\": " << detail::grid_to_json(ds.grid()).dump() << ",\n";
    if (ds.model())
        out << "\"model\": " << detail::model_to_json(*ds.model()).dump() << ",\n";

    const Index p = ds.port_count();
    out << "\"Z\": [";
    for (Index r = 0; r < p; ++r)
    {
        out << '\n';
        for (Index c = 0; c < p; ++c)
        {
            if (r + c > 0)
                out << ',';
            detail::write_pair(out, ds.z()(r, c));
        }
    }
    out << "\n],\n\"E_oc\": [";
    const CMatrix &e = ds.e_oc();
    bool first = true;
    for (Index row = 0; row < e.rows(); ++row) // rows are already polarisation-major, port-major
    {
        out << '\n';
        for (Index g = 0; g < e.cols(); ++g)
        {
            if (!first)
                out << ',';
            first = false;
            detail::write_pair(out, e(row, g));
        }
    }
    out << "\n]\n}\n";
}

inline void save_dataset(const EMDataset &ds, const std::string &path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    save_dataset(ds, out);
    out.flush();
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

struct LoadOptions
{
    bool strict_validation = true;
    ValidationTolerances tolerances{};
};

inline EMDataset load_dataset(std::istream &in, const LoadOptions &opts = {})
{
    detail::DatasetSax sax;
    const bool ok = nlohmann::json::sax_parse(in, &sax);
    if (!ok)
        throw FormatError("dataset: " + (sax.error().empty() ? std::string("malformed document") : sax.error()));
    const auto &root = sax.root;
    if (!root.is_object())
        throw FormatError("dataset: top level must be an object");
    if (!root.contains("version") || !root.at("version").is_number() || root.at("version").get<double>() != 1.0)
        throw FormatError("dataset: unsupported or missing version (expected 1)");

    const auto &lj = root.contains("layout") ? root.at("layout") : nlohmann::json();
    PortLayout layout;
    layout.pixel_rows = static_cast<int>(detail::require_number(lj, "pixel_rows", "layout"));
    layout.pixel_cols = static_cast<int>(detail::require_number(lj, "pixel_cols", "layout"));
    layout.pixel_side_mm = detail::require_number(lj, "pixel_side_mm", "layout");
    layout.substrate_side_mm = detail::require_number(lj, "substrate_side_mm", "layout");
    layout.height_mm = detail::require_number(lj, "height_mm", "layout");
    layout.frequency_hz = detail::require_number(lj, "frequency_hz", "layout");
    try
    {
        layout.validate();
    }
    catch (const InvalidArgument &e)
    {
        throw FormatError(std::string("dataset: ") + e.what());
    }
    if (lj.contains("feed_ports") && static_cast<Index>(lj.at("feed_ports").get<double>()) != layout.feed_count())
        throw DimensionMismatch("dataset: declared feed_ports disagrees with the pixel array");
    if (lj.contains("loaded_ports") &&
        static_cast<Index>(lj.at("loaded_ports").get<double>()) != layout.loaded_count())
        throw DimensionMismatch("dataset: declared loaded_ports disagrees with the pixel array");

    const auto &gj = root.contains("grid") ? root.at("grid") : nlohmann::json();
    AngleGrid grid = [&] {
        try
        {
            return AngleGrid(detail::require_number(gj, "theta_start_deg", "grid"),
                             detail::require_number(gj, "theta_stop_deg", "grid"),
                             detail::require_number(gj, "phi_start_deg", "grid"),
                             detail::require_number(gj, "phi_stop_deg", "grid"),
                             detail::require_number(gj, "step_deg", "grid"));
        }
        catch (const InvalidArgument &e)
        {
            throw FormatError(std::string("dataset: ") + e.what());
        }
    }();

    std::optional<DipoleModelParams> model;
    if (root.contains("model") && root.at("model").is_object())
    {
        const auto &mj = root.at("model");
        DipoleModelParams m;
        if (mj.contains("feed_length_mm"))
            m.feed_length_mm = mj.at("feed_length_mm").get<double>();
        if (mj.contains("loaded_length_mm"))
            m.loaded_length_mm = mj.at("loaded_length_mm").get<double>();
        m.feed_self_reactance = mj.value("feed_self_reactance", m.feed_self_reactance);
        m.loaded_self_reactance = mj.value("loaded_self_reactance", m.loaded_self_reactance);
        m.mutual_reactance_scale = mj.value("mutual_reactance_scale", m.mutual_reactance_scale);
        m.resistance_floor = mj.value("resistance_floor", m.resistance_floor);
        m.reactance_jitter = mj.value("reactance_jitter", m.reactance_jitter);
        m.ground_plane = mj.value("ground_plane", m.ground_plane);
        model = m;
    }

    const Index p = layout.port_count();
    const auto z_entries = static_cast<Index>(sax.z_values.size() / 2);
    if (z_entries != p * p)
        throw DimensionMismatch("dataset: Z has " + std::to_string(z_entries) + " entries but " + std::to_string(p) +
                                " ports require " + std::to_string(p * p));
    const auto e_entries = static_cast<Index>(sax.e_values.size() / 2);
    if (e_entries != 2 * p * grid.size())
        throw DimensionMismatch("dataset: E_oc has " + std::to_string(e_entries) + " entries, expected " +
                                std::to_string(2 * p * grid.size()));

    CMatrix z(p, p);
    for (Index r = 0; r < p; ++r)
        for (Index c = 0; c < p; ++c)
        {
            const auto k = static_cast<std::size_t>(2 * (r * p + c));
            z(r, c) = Complex(sax.z_values[k], sax.z_values[k + 1]);
        }
    CMatrix e(2 * p, grid.size());
    for (Index row = 0; row < 2 * p; ++row)
        for (Index g = 0; g < grid.size(); ++g)
        {
            const auto k = static_cast<std::size_t>(2 * (row * grid.size() + g));
            e(row, g) = Complex(sax.e_values[k], sax.e_values[k + 1]);
        }

    std::string provenance = root.contains("provenance") && root.at("provenance").is_string()
                                 ? root.at("provenance").get<std::string>()
                                 : std::string("imported");
    EMDataset ds(layout, grid, std::move(z), std::move(e), std::move(provenance), model);

    if (opts.strict_validation)
    {
        const ValidationReport rep = validate_dataset(ds, opts.tolerances);
        if (!rep.z_finite || !rep.patterns_finite)
            throw ValidationError("dataset: non-finite impedance or pattern entries");
        if (!rep.symmetric)
            throw ValidationError("dataset: reciprocity violation, max|Z - Z^T| = " +
                                  std::to_string(rep.symmetry_residual) + " ohm");
        if (!rep.passive)
            throw ValidationError("dataset: passivity violation, min eig(Re Z) = " + std::to_string(rep.min_eig_r));
    }
    return ds;
}

inline EMDataset load_dataset(const std::string &path, const LoadOptions &opts = {})
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open dataset '" + path + "'");
    return load_dataset(in, opts);
}

} // namespace hrpa
