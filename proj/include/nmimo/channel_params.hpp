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

#ifndef NMIMO_CHANNEL_PARAMS_HPP
#define NMIMO_CHANNEL_PARAMS_HPP

namespace nmimo
{

enum class LinkState
{
    los,
    nlos,
    outage
};

const char *to_string(LinkState s);

struct PathLossCoeffs
{
    double a_db;      // intercept
    double b;         // distance exponent (per decade, times 10)
    double shadow_db; // log-normal shadowing std
};

/// Three-state large-scale model and cluster geometry. Defaults follow the
/// 28 GHz measurement fit (outage length 30 m, LOS length 67.1 m).
struct ChannelParams
{
    double a_out = 1.0 / 30.0; // 1/m
    double b_out = 5.2;
    double a_los = 1.0 / 67.1; // 1/m
    PathLossCoeffs los{61.4, 2.0, 5.8};
    PathLossCoeffs nlos{72.0, 2.92, 8.7};
    int num_clusters = 4;
    int subpaths_per_cluster = 20;
    double angle_spread_deg = 2.0;
    double delay_spread_s = 1388.4e-9;
    double max_doppler_hz = 0.0;

    const PathLossCoeffs &coeffs(LinkState s) const { return s == LinkState::los ? los : nlos; }
};

} // namespace nmimo

#endif
