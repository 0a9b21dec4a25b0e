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

#include "nmimo/pbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nmimo
{

const char *to_string(SyncMode m) { return m == SyncMode::space ? "space" : "pbs"; }

std::vector<BeamPath> beam_paths(std::span<const SubpathSet> links, int n)
{
    std::vector<BeamPath> out;
    for (const auto &link : links)
        for (const auto &sp : link.subpaths)
            out.push_back({receive_beam(sp.theta, n), sp.delay_s, sp.doppler_hz});
    return out;
}

namespace
{

struct Range
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double x)
    {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    bool empty() const { return lo > hi; }
    double width() const { return empty() ? 0.0 : hi - lo; }
};

struct BeamRanges
{
    std::vector<Range> delay;
    std::vector<Range> doppler;
};

BeamRanges ranges_per_beam(std::span<const BeamPath> paths, int num_beams)
{
    BeamRanges r{std::vector<Range>(num_beams), std::vector<Range>(num_beams)};
    for (const auto &p : paths)
    {
        if (p.beam < 0 || p.beam >= num_beams)
            throw std::out_of_range("path beam index outside [0, N)");
        r.delay[p.beam].add(p.delay_s);
        r.doppler[p.beam].add(p.doppler_hz);
    }
    return r;
}

} // namespace

SyncParams per_beam_sync_params(std::span<const BeamPath> paths, int num_beams)
{
    const auto r = ranges_per_beam(paths, num_beams);
    SyncParams s;
    s.tau_syn.assign(num_beams, 0.0);
    s.nu_syn.assign(num_beams, 0.0);
    s.occupied.assign(num_beams, false);
    for (int i = 0; i < num_beams; ++i)
    {
        if (r.delay[i].empty())
            continue;
        s.occupied[i] = true;
        s.tau_syn[i] = r.delay[i].lo;
        s.nu_syn[i] = 0.5 * (r.doppler[i].hi + r.doppler[i].lo);
    }
    return s;
}

SyncParams per_beam_sync_params(std::span<const SubpathSet> links, int n)
{
    const auto paths = beam_paths(links, n);
    if (paths.empty())
        throw std::runtime_error("no propagation: every link of the UT is in outage");
    return per_beam_sync_params(paths, n);
}

Spreads effective_spreads(std::span<const BeamPath> paths, SyncMode mode)
{
    if (paths.empty())
        return {};
    if (mode == SyncMode::space)
    {
        Range d, f;
        for (const auto &p : paths)
        {
            d.add(p.delay_s);
            f.add(p.doppler_hz);
        }
        return {d.width(), 0.5 * f.width()};
    }
    int num_beams = 0;
    for (const auto &p : paths)
        num_beams = std::max(num_beams, p.beam + 1);
    const auto r = ranges_per_beam(paths, num_beams);
    Spreads s;
    for (int i = 0; i < num_beams; ++i)
    {
        s.delta_tau_s = std::max(s.delta_tau_s, r.delay[i].width());
        s.delta_nu_hz = std::max(s.delta_nu_hz, 0.5 * r.doppler[i].width());
    }
    return s;
}

Spreads effective_spreads(std::span<const SubpathSet> links, SyncMode mode, int n)
{
    const auto paths = beam_paths(links, n);
    return effective_spreads(paths, mode);
}

SpreadReport spread_report(std::span<const SubpathSet> links, int n)
{
    const auto paths = beam_paths(links, n);
    const auto spa = effective_spreads(paths, SyncMode::space);
    const auto per = effective_spreads(paths, SyncMode::per_beam);
    SpreadReport r{spa.delta_tau_s, spa.delta_nu_hz, per.delta_tau_s, per.delta_nu_hz, 1.0};
    if (per.delta_nu_hz > 0.0)
        r.reduction_factor_nu = spa.delta_nu_hz / per.delta_nu_hz;
    else if (spa.delta_nu_hz > 0.0)
        r.reduction_factor_nu = std::numeric_limits<double>::infinity();
    return r;
}

OfdmValidity check_ofdm_validity(const Spreads &worst, const OfdmConfig &ofdm, double margin)
{
    if (!(margin > 0.0))
        throw std::invalid_argument("margin must be > 0");
    const double t_cp = ofdm.cp_duration();
    const double t_us = ofdm.symbol_duration();
    OfdmValidity v;
    v.cp_covers_delay = worst.delta_tau_s <= t_cp;
    v.cp_within_symbol = t_cp <= t_us;
    v.doppler_ok = worst.delta_nu_hz <= 0.0 || t_us * margin * worst.delta_nu_hz <= 1.0;
    v.pass = v.cp_covers_delay && v.cp_within_symbol && v.doppler_ok;

    std::ostringstream d;
    if (!v.cp_covers_delay)
        d << "CP too short: delay spread " << worst.delta_tau_s << " s > T_cp " << t_cp << " s; ";
    if (!v.cp_within_symbol)
        d << "CP longer than symbol: T_cp " << t_cp << " s > T_us " << t_us << " s; ";
    if (!v.doppler_ok)
        d << "symbol too long for Doppler: T_us " << t_us << " s > 1/(" << margin << " * " << worst.delta_nu_hz
          << " Hz); ";
    v.diagnostic = d.str();
    return v;
}

double ici_power_bound(double delta_nu_hz, double symbol_duration_s)
{
    if (delta_nu_hz < 0.0)
        throw std::invalid_argument("Doppler spread must be >= 0");
    const double x = std::numbers::pi * delta_nu_hz * symbol_duration_s;
    return x * x / 3.0;
}

std::vector<SubpathSet> with_max_doppler(std::span<const SubpathSet> links, double nu_max_hz)
{
    std::vector<SubpathSet> out(links.begin(), links.end());
    for (auto &l : out)
        for (auto &sp : l.subpaths)
            sp.doppler_hz = nu_max_hz * sp.theta;
    return out;
}

} // namespace nmimo
