// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------
//
// Codebook file (JSON, version 1):
//   space {theta_min, theta_max, phi_min, phi_max} in degrees, schedule
//   string, port counts, and one record per leaf area with 1-based F,
//   g as a bitstring (first character = port M+1), objective_rad and
//   iterations_used. Infinite objectives are written as the string "inf".

#pragma once

#include "hrpa/core.hpp"
#include "hrpa/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <ostream>
#include <string>

namespace hrpa
{

namespace detail
{
inline nlohmann::ordered_json area_to_json(const SensingArea &a)
{
    nlohmann::ordered_json j;
    j["theta_min"] = a.theta_min;
    j["theta_max"] = a.theta_max;
    j["phi_min"] = a.phi_min;
    j["phi_max"] = a.phi_max;
    return j;
}

inline SensingArea area_from_json(const nlohmann::json &j)
{
    try
    {
        return {j.at("theta_min").get<double>(), j.at("theta_max").get<double>(), j.at("phi_min").get<double>(),
                j.at("phi_max").get<double>()};
    }
    catch (const nlohmann::json::exception &e)
    {
        throw FormatError(std::string("codebook: bad area record: ") + e.what());
    }
}

inline nlohmann::ordered_json objective_to_json(double v)
{
    if (std::isinf(v))
        return "inf";
    return v;
}
} // namespace detail

inline void save_codebook(const Codebook &cb, std::ostream &out)
{
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["dataset_id"] = cb.dataset_id;
    j["space"] = detail::area_to_json(cb.space);
    j["schedule"] = cb.schedule.describe();
    j["ports"] = {{"feed", cb.feed_count}, {"loaded", cb.loaded_count}, {"active", cb.active_count}};
    auto &words = j["codewords"] = nlohmann::ordered_json::array();
    for (const auto &c : cb.codewords)
    {
        nlohmann::ordered_json w;
        w["area"] = detail::area_to_json(c.area);
        w["F"] = c.config.feed_ports;
        w["g"] = c.config.bits();
        w["objective_rad"] = detail::objective_to_json(c.objective);
        w["iterations_used"] = c.iterations_used;
        words.push_back(std::move(w));
    }
    out << j.dump(2) << '\n';
}

inline void save_codebook(const Codebook &cb, const std::string &path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    save_codebook(cb, out);
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

inline Codebook load_codebook(std::istream &in)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::parse_error &e)
    {
        throw FormatError(std::string("codebook: ") + e.what());
    }
    if (!j.is_object() || j.value("version", 0) != 1)
        throw FormatError("codebook: unsupported or missing version (expected 1)");
    Codebook cb;
    try
    {
        cb.dataset_id = j.value("dataset_id", std::string());
        cb.space = detail::area_from_json(j.at("space"));
        cb.schedule = SubdivisionSchedule::parse(j.at("schedule").get<std::string>());
        cb.feed_count = j.at("ports").at("feed").get<Index>();
        cb.loaded_count = j.at("ports").at("loaded").get<Index>();
        cb.active_count = j.at("ports").at("active").get<Index>();
        for (const auto &w : j.at("codewords"))
        {
            Codeword c;
            c.area = detail::area_from_json(w.at("area"));
            c.config.feed_ports = w.at("F").get<std::vector<int>>();
            c.config.connections = parse_bits(w.at("g").get<std::string>());
            const auto &o = w.at("objective_rad");
            c.objective = o.is_string() ? kInf : o.get<double>();
            c.iterations_used = w.value("iterations_used", 0);
            validate_config(c.config, cb.feed_count, cb.loaded_count);
            cb.codewords.push_back(std::move(c));
        }
    }
    catch (const nlohmann::json::exception &e)
    {
        throw FormatError(std::string("codebook: ") + e.what());
    }
    catch (const InvalidArgument &e)
    {
        throw FormatError(std::string("codebook: ") + e.what());
    }
    if (cb.codewords.empty())
        throw FormatError("codebook: no codewords");
    return cb;
}

inline Codebook load_codebook(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open codebook '" + path + "'");
    return load_codebook(in);
}

/// One row per trace record of every optimised area.
inline void write_trace_csv(std::ostream &out, const Codebook &cb)
{
    out << "node,stage,iteration,phase,objective\n";
    for (std::size_t i = 0; i < cb.nodes.size(); ++i)
        for (const auto &r : cb.nodes[i].trace.records)
            out << i << ',' << cb.nodes[i].stage << ',' << r.iteration << ',' << r.phase << ','
                << format_value(r.objective) << '\n';
}

} // namespace hrpa
