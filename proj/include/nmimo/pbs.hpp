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

#ifndef NMIMO_PBS_HPP
#define NMIMO_PBS_HPP

#include "nmimo/channel.hpp"
#include "nmimo/scenario.hpp"

#include <span>
#include <string>
#include <vector>

namespace nmimo
{

/// A propagation path as seen by the synchroniser: which receive beam it
/// lands in, and its delay and Doppler.
struct BeamPath
{
    int beam;
    double delay_s;
    double doppler_hz;
};

/// Collects the paths of all non-outage links of one UT with their receive beam.
std::vector<BeamPath> beam_paths(std::span<const SubpathSet> links, int num_ut_antennas);

/// Per-receive-beam time/frequency adjustment: tau_syn = min delay in the
/// beam, nu_syn = midpoint of the beam's Doppler range. Beams without paths
/// are flagged unoccupied and carry (0, 0).
struct SyncParams
{
    std::vector<double> tau_syn;
    std::vector<double> nu_syn;
    std::vector<bool> occupied;
};

SyncParams per_beam_sync_params(std::span<const BeamPath> paths, int num_beams);

/// Throws std::runtime_error("no propagation") when every link is in outage.
SyncParams per_beam_sync_params(std::span<const SubpathSet> links, int num_ut_antennas);

enum class SyncMode
{
    space,
    per_beam
};

const char *to_string(SyncMode m);

struct Spreads
{
    double delta_tau_s = 0.0;
    double delta_nu_hz = 0.0;
};

/// Space mode: global delay range and half the global Doppler range.
/// Per-beam mode: the largest within-beam delay range and half-Doppler range.
Spreads effective_spreads(std::span<const BeamPath> paths, SyncMode mode);
Spreads effective_spreads(std::span<const SubpathSet> links, SyncMode mode, int num_ut_antennas);

struct SpreadReport
{
    double delta_tau_spa = 0.0;
    double delta_nu_spa = 0.0;
    double delta_tau_per = 0.0;
    double delta_nu_per = 0.0;
    double reduction_factor_nu = 1.0; // delta_nu_spa / delta_nu_per, 1 when both vanish

    Spreads spreads(SyncMode mode) const
    {
        return mode == SyncMode::space ? Spreads{delta_tau_spa, delta_nu_spa} : Spreads{delta_tau_per, delta_nu_per};
    }
};

SpreadReport spread_report(std::span<const SubpathSet> links, int num_ut_antennas);

struct OfdmValidity
{
    bool pass = true;
    bool cp_covers_delay = true;   // max delta_tau <= T_cp
    bool cp_within_symbol = true;  // T_cp <= T_us
    bool doppler_ok = true;        // T_us <= 1 / (margin max delta_nu)
    std::string diagnostic;
};

/// Checks max delta_tau <= T_cp <= T_us << 1/max delta_nu, with "<<" read as
/// a factor of `margin`.
OfdmValidity check_ofdm_validity(const Spreads &worst, const OfdmConfig &ofdm, double margin = 10.0);

/// Universal ICI power bound (pi f_d T_us)^2 / 3 relative to the received
/// signal power, applied with f_d the effective Doppler spread.
double ici_power_bound(double delta_nu_hz, double symbol_duration_s);

/// Maximum Doppler of a UT moving at `speed_mps` for the given carrier.
inline double max_doppler_hz(double speed_mps, double carrier_hz) { return speed_mps * carrier_hz / speed_of_light; }

/// Copies `links` with every Doppler recomputed as nu_max * theta.
std::vector<SubpathSet> with_max_doppler(std::span<const SubpathSet> links, double nu_max_hz);

} // namespace nmimo

#endif
