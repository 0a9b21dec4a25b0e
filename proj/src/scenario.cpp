// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "nmimo/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace nmimo
{

const char *to_string(LinkState s)
{
    switch (s)
    {
    case LinkState::los:
        return "LOS";
    case LinkState::nlos:
        return "NLOS";
    case LinkState::outage:
        return "OUT";
    }
    return "?";
}

const char *to_string(StrategyMode m)
{
    switch (m)
    {
    case StrategyMode::network:
        return "network";
    case StrategyMode::coordinated:
        return "coordinated";
    case StrategyMode::single_cell:
        return "single_cell";
    }
    return "?";
}

StrategyMode parse_strategy(const char *text)
{
    const std::string s(text);
    if (s == "network")
        return StrategyMode::network;
    if (s == "coordinated")
        return StrategyMode::coordinated;
    if (s == "single_cell" || s == "single-cell")
        return StrategyMode::single_cell;
    throw std::invalid_argument("unknown strategy '" + s + "'");
}

void ScenarioConfig::validate() const
{
    auto require = [](bool ok, const char *key, const char *msg)
    {
        if (!ok)
            throw ConfigError(key, msg);
    };
    require(num_cells >= 1, "cells", "must be >= 1");
    require(cell_radius_m > 0.0, "radius_m", "must be > 0");
    require(bs_antennas_h >= 1, "bs_antennas_h", "must be >= 1");
    require(bs_antennas_v >= 1, "bs_antennas_v", "must be >= 1");
    require(ut_antennas >= 1, "ut_antennas", "must be >= 1");
    require(uts_per_cell >= 1, "uts_per_cell", "must be >= 1");
    require(carrier_hz > 0.0, "carrier_ghz", "must be > 0");
    require(power_mw > 0.0 && std::isfinite(power_mw), "power_dbm", "must be finite");
    require(noise_mw > 0.0 && std::isfinite(noise_mw), "noise_dbm", "must be finite");
    require(ofdm.sampling_interval_s > 0.0, "ofdm.ts_ns", "must be > 0");
    require(ofdm.num_subcarriers >= 1, "ofdm.n_us", "must be >= 1");
    require(ofdm.cp_length >= 1, "ofdm.n_cp", "must be >= 1");
    require(ofdm.cp_length <= ofdm.num_subcarriers, "ofdm.n_cp", "cyclic prefix longer than the symbol (T_cp > T_us)");
    if (p_out_override)
        require(*p_out_override >= 0.0 && *p_out_override <= 1.0, "p_out_override", "must lie in [0, 1]");

    const auto &ch = channel;
    require(ch.a_out > 0.0, "channel.out_length_m", "must be > 0");
    require(ch.a_los > 0.0, "channel.los_length_m", "must be > 0");
    require(ch.los.shadow_db >= 0.0, "channel.los_shadow_db", "must be >= 0");
    require(ch.nlos.shadow_db >= 0.0, "channel.nlos_shadow_db", "must be >= 0");
    require(ch.num_clusters >= 1, "channel.clusters", "must be >= 1");
    require(ch.subpaths_per_cluster >= 1, "channel.subpaths", "must be >= 1");
    require(ch.angle_spread_deg >= 0.0, "channel.angle_spread_deg", "must be >= 0");
    require(ch.delay_spread_s > 0.0, "channel.delay_spread_ns", "must be > 0");
    require(ch.max_doppler_hz >= 0.0, "channel.ut_speed_kmh", "must be >= 0");

    const auto &s = solver;
    require(s.cccp_tol > 0.0, "solver.cccp_tol", "must be > 0");
    require(s.de_tol > 0.0, "solver.de_tol", "must be > 0");
    require(s.newton_tol > 0.0, "solver.newton_tol", "must be > 0");
    require(s.bisect_tol > 0.0, "solver.bisect_tol_mw", "must be > 0");
    require(s.cccp_max_iter >= 1, "solver.cccp_max_iter", "must be >= 1");
    require(s.de_max_iter >= 1, "solver.de_max_iter", "must be >= 1");
    require(s.newton_max_iter >= 1, "solver.newton_max_iter", "must be >= 1");
    require(s.bisect_max_iter >= 1, "solver.bisect_max_iter", "must be >= 1");
}

namespace
{

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string &key, const std::string &v)
{
    double out = 0.0;
    const auto *end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out))
        throw ConfigError(key, "expected a number, got '" + v + "'");
    return out;
}

long long parse_integer(const std::string &key, const std::string &v)
{
    long long out = 0;
    const auto *end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(key, "expected an integer, got '" + v + "'");
    return out;
}

int parse_int(const std::string &key, const std::string &v)
{
    const auto x = parse_integer(key, v);
    if (x < -2147483647LL || x > 2147483647LL)
        throw ConfigError(key, "integer out of range");
    return static_cast<int>(x);
}

using Setter = std::function<void(ScenarioConfig &, const std::string &key, const std::string &value)>;

const std::map<std::string, Setter> &setters()
{
    static const std::map<std::string, Setter> table = {
        {"cells", [](auto &c, auto &k, auto &v) { c.num_cells = parse_int(k, v); }},
        {"radius_m", [](auto &c, auto &k, auto &v) { c.cell_radius_m = parse_double(k, v); }},
        {"bs_antennas_h", [](auto &c, auto &k, auto &v) { c.bs_antennas_h = parse_int(k, v); }},
        {"bs_antennas_v", [](auto &c, auto &k, auto &v) { c.bs_antennas_v = parse_int(k, v); }},
        {"ut_antennas", [](auto &c, auto &k, auto &v) { c.ut_antennas = parse_int(k, v); }},
        {"uts_per_cell", [](auto &c, auto &k, auto &v) { c.uts_per_cell = parse_int(k, v); }},
        {"carrier_ghz", [](auto &c, auto &k, auto &v) { c.carrier_hz = parse_double(k, v) * 1e9; }},
        {"power_dbm", [](auto &c, auto &k, auto &v) { c.power_mw = dbm_to_mw(parse_double(k, v)); }},
        {"noise_dbm", [](auto &c, auto &k, auto &v) { c.noise_mw = dbm_to_mw(parse_double(k, v)); }},
        {"seed", [](auto &c, auto &k, auto &v)
         {
             const auto s = parse_integer(k, v);
             if (s < 0)
                 throw ConfigError(k, "must be >= 0");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"strategy", [](auto &c, auto &k, auto &v)
         {
             try
             {
                 c.strategy = parse_strategy(v.c_str());
             }
             catch (const std::invalid_argument &e)
             {
                 throw ConfigError(k, e.what());
             }
             c.solver.strategy = c.strategy;
         }},
        {"p_out_override", [](auto &c, auto &k, auto &v)
         {
             if (v == "none" || v.empty())
                 c.p_out_override.reset();
             else
                 c.p_out_override = parse_double(k, v);
         }},
        {"ofdm.ts_ns", [](auto &c, auto &k, auto &v) { c.ofdm.sampling_interval_s = parse_double(k, v) * 1e-9; }},
        {"ofdm.n_us", [](auto &c, auto &k, auto &v) { c.ofdm.num_subcarriers = parse_int(k, v); }},
        {"ofdm.n_cp", [](auto &c, auto &k, auto &v) { c.ofdm.cp_length = parse_int(k, v); }},
        {"channel.out_length_m", [](auto &c, auto &k, auto &v) { c.channel.a_out = 1.0 / parse_double(k, v); }},
        {"channel.b_out", [](auto &c, auto &k, auto &v) { c.channel.b_out = parse_double(k, v); }},
        {"channel.los_length_m", [](auto &c, auto &k, auto &v) { c.channel.a_los = 1.0 / parse_double(k, v); }},
        {"channel.los_a_db", [](auto &c, auto &k, auto &v) { c.channel.los.a_db = parse_double(k, v); }},
        {"channel.los_b", [](auto &c, auto &k, auto &v) { c.channel.los.b = parse_double(k, v); }},
        {"channel.los_shadow_db", [](auto &c, auto &k, auto &v) { c.channel.los.shadow_db = parse_double(k, v); }},
        {"channel.nlos_a_db", [](auto &c, auto &k, auto &v) { c.channel.nlos.a_db = parse_double(k, v); }},
        {"channel.nlos_b", [](auto &c, auto &k, auto &v) { c.channel.nlos.b = parse_double(k, v); }},
        {"channel.nlos_shadow_db", [](auto &c, auto &k, auto &v) { c.channel.nlos.shadow_db = parse_double(k, v); }},
        {"channel.clusters", [](auto &c, auto &k, auto &v) { c.channel.num_clusters = parse_int(k, v); }},
        {"channel.subpaths", [](auto &c, auto &k, auto &v) { c.channel.subpaths_per_cluster = parse_int(k, v); }},
        {"channel.angle_spread_deg", [](auto &c, auto &k, auto &v) { c.channel.angle_spread_deg = parse_double(k, v); }},
        {"channel.delay_spread_ns", [](auto &c, auto &k, auto &v) { c.channel.delay_spread_s = parse_double(k, v) * 1e-9; }},
        // stored as speed until the carrier is known, converted after parsing
        {"channel.ut_speed_kmh", [](auto &c, auto &k, auto &v) { c.channel.max_doppler_hz = parse_double(k, v); }},
        {"solver.cccp_tol", [](auto &c, auto &k, auto &v) { c.solver.cccp_tol = parse_double(k, v); }},
        {"solver.cccp_max_iter", [](auto &c, auto &k, auto &v) { c.solver.cccp_max_iter = parse_int(k, v); }},
        {"solver.de_tol", [](auto &c, auto &k, auto &v) { c.solver.de_tol = parse_double(k, v); }},
        {"solver.de_max_iter", [](auto &c, auto &k, auto &v) { c.solver.de_max_iter = parse_int(k, v); }},
        {"solver.newton_tol", [](auto &c, auto &k, auto &v) { c.solver.newton_tol = parse_double(k, v); }},
        {"solver.newton_max_iter", [](auto &c, auto &k, auto &v) { c.solver.newton_max_iter = parse_int(k, v); }},
        {"solver.bisect_tol_mw", [](auto &c, auto &k, auto &v) { c.solver.bisect_tol = parse_double(k, v); }},
        {"solver.bisect_max_iter", [](auto &c, auto &k, auto &v) { c.solver.bisect_max_iter = parse_int(k, v); }},
    };
    return table;
}

} // namespace

ScenarioConfig load_config(const std::string &text)
{
    ScenarioConfig c;
    std::set<std::string> seen;
    bool speed_given = false;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw))
    {
        ++line_no;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        const std::string body = trim(line);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(body, "line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty())
            throw ConfigError("", "line " + std::to_string(line_no) + ": empty key");
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError(key, "unknown key");
        if (!seen.insert(key).second)
            throw ConfigError(key, "duplicate key");
        it->second(c, key, value);
        speed_given = speed_given || key == "channel.ut_speed_kmh";
    }
    if (speed_given)
    {
        if (c.channel.max_doppler_hz < 0.0)
            throw ConfigError("channel.ut_speed_kmh", "must be >= 0");
        c.channel.max_doppler_hz = c.channel.max_doppler_hz / 3.6 * c.carrier_hz / speed_of_light;
    }
    c.solver.strategy = c.strategy;
    c.validate();
    return c;
}

ScenarioConfig load_config_file(const std::string &path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError("", "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return load_config(ss.str());
}

namespace
{

// shortest text that parses back to the same double
std::string num(double x)
{
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, x).ptr);
}

} // namespace

std::string to_config_text(const ScenarioConfig &c)
{
    std::ostringstream o;
    o << "cells = " << c.num_cells << '\n'
      << "radius_m = " << num(c.cell_radius_m) << '\n'
      << "bs_antennas_h = " << c.bs_antennas_h << '\n'
      << "bs_antennas_v = " << c.bs_antennas_v << '\n'
      << "ut_antennas = " << c.ut_antennas << '\n'
      << "uts_per_cell = " << c.uts_per_cell << '\n'
      << "carrier_ghz = " << num(c.carrier_hz / 1e9) << '\n'
      << "power_dbm = " << num(mw_to_dbm(c.power_mw)) << '\n'
      << "noise_dbm = " << num(mw_to_dbm(c.noise_mw)) << '\n'
      << "seed = " << c.seed << '\n'
      << "strategy = " << to_string(c.strategy) << '\n'
      << "p_out_override = ";
    if (c.p_out_override)
        o << num(*c.p_out_override) << '\n';
    else
        o << "none\n";
    o << "ofdm.ts_ns = " << num(c.ofdm.sampling_interval_s * 1e9) << '\n'
      << "ofdm.n_us = " << c.ofdm.num_subcarriers << '\n'
      << "ofdm.n_cp = " << c.ofdm.cp_length << '\n'
      << "channel.out_length_m = " << num(1.0 / c.channel.a_out) << '\n'
      << "channel.b_out = " << num(c.channel.b_out) << '\n'
      << "channel.los_length_m = " << num(1.0 / c.channel.a_los) << '\n'
      << "channel.los_a_db = " << num(c.channel.los.a_db) << '\n'
      << "channel.los_b = " << num(c.channel.los.b) << '\n'
      << "channel.los_shadow_db = " << num(c.channel.los.shadow_db) << '\n'
      << "channel.nlos_a_db = " << num(c.channel.nlos.a_db) << '\n'
      << "channel.nlos_b = " << num(c.channel.nlos.b) << '\n'
      << "channel.nlos_shadow_db = " << num(c.channel.nlos.shadow_db) << '\n'
      << "channel.clusters = " << c.channel.num_clusters << '\n'
      << "channel.subpaths = " << c.channel.subpaths_per_cluster << '\n'
      << "channel.angle_spread_deg = " << num(c.channel.angle_spread_deg) << '\n'
      << "channel.delay_spread_ns = " << num(c.channel.delay_spread_s * 1e9) << '\n'
      << "channel.ut_speed_kmh = " << num(c.channel.max_doppler_hz * speed_of_light / c.carrier_hz * 3.6) << '\n'
      << "solver.cccp_tol = " << num(c.solver.cccp_tol) << '\n'
      << "solver.cccp_max_iter = " << c.solver.cccp_max_iter << '\n'
      << "solver.de_tol = " << num(c.solver.de_tol) << '\n'
      << "solver.de_max_iter = " << c.solver.de_max_iter << '\n'
      << "solver.newton_tol = " << num(c.solver.newton_tol) << '\n'
      << "solver.newton_max_iter = " << c.solver.newton_max_iter << '\n'
      << "solver.bisect_tol_mw = " << num(c.solver.bisect_tol) << '\n'
      << "solver.bisect_max_iter = " << c.solver.bisect_max_iter << '\n';
    return o.str();
}

BeamRange bs_block_indices(const ScenarioConfig &c, int v)
{
    if (v < 0 || v >= c.num_cells)
        throw std::out_of_range("BS index " + std::to_string(v) + " outside [0, " + std::to_string(c.num_cells) + ")");
    const int m = c.bs_antennas();
    return {v * m, (v + 1) * m};
}

std::vector<Eigen::Vector2d> bs_sites(const ScenarioConfig &c)
{
    const double isd = 2.0 * c.cell_radius_m * std::cos(std::numbers::pi / 6.0);
    // enough lattice rings to hold num_cells sites
    int rings = 0;
    while (1 + 3 * rings * (rings + 1) < c.num_cells)
        ++rings;

    const Eigen::Vector2d e1(isd, 0.0);
    const Eigen::Vector2d e2(0.5 * isd, 0.5 * std::sqrt(3.0) * isd);
    struct Site
    {
        Eigen::Vector2d p;
        long ring;
        double angle;
    };
    std::vector<Site> sites;
    for (int a = -2 * rings; a <= 2 * rings; ++a)
        for (int b = -2 * rings; b <= 2 * rings; ++b)
        {
            // hex distance in axial coordinates
            const long ring = (std::labs(a) + std::labs(b) + std::labs(a + b)) / 2;
            if (ring > rings)
                continue;
            const Eigen::Vector2d p = a * e1 + b * e2;
            double ang = std::atan2(p.y(), p.x());
            if (ang < -1e-12)
                ang += 2.0 * std::numbers::pi;
            sites.push_back({p, ring, ring == 0 ? 0.0 : std::max(ang, 0.0)});
        }
    std::sort(sites.begin(), sites.end(), [](const Site &x, const Site &y)
              { return x.ring != y.ring ? x.ring < y.ring : x.angle < y.angle - 1e-12; });

    std::vector<Eigen::Vector2d> out;
    for (int v = 0; v < c.num_cells; ++v)
        out.push_back(sites[v].p);
    return out;
}

NetworkTopology drop_uts(const ScenarioConfig &c, Rng &rng)
{
    c.validate();
    NetworkTopology t;
    t.bs_positions = bs_sites(c);

    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto &p : t.bs_positions)
        centroid += p;
    centroid /= static_cast<double>(c.num_cells);
    for (const auto &p : t.bs_positions)
    {
        const Eigen::Vector2d d = centroid - p;
        t.sector_boresight_rad.push_back(d.norm() < 1e-9 ? 0.0 : std::atan2(d.y(), d.x()));
    }

    const double r0 = std::min(min_ut_distance_m, 0.1 * c.cell_radius_m);
    const double R = c.cell_radius_m;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int u = 0; u < c.num_cells; ++u)
        for (int k = 0; k < c.uts_per_cell; ++k)
        {
            // area-uniform radius over the annulus [r0, R], angle over +-60 deg
            const double r = std::sqrt(unif(rng) * (R * R - r0 * r0) + r0 * r0);
            const double phi = t.sector_boresight_rad[u] + (unif(rng) - 0.5) * (2.0 * std::numbers::pi / 3.0);
            t.ut_positions.push_back(t.bs_positions[u] + r * Eigen::Vector2d(std::cos(phi), std::sin(phi)));
            t.ut_ids.push_back({k, u});
        }

    t.distances.resize(t.num_uts(), c.num_cells);
    for (int i = 0; i < t.num_uts(); ++i)
        for (int v = 0; v < c.num_cells; ++v)
            t.distances(i, v) = std::max((t.ut_positions[i] - t.bs_positions[v]).norm(), r0);

    for (int v = 0; v < c.num_cells; ++v)
        t.blocks.push_back(bs_block_indices(c, v));
    t.total_beams = c.total_bs_antennas();
    return t;
}

} // namespace nmimo
