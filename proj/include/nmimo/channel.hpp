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

#ifndef NMIMO_CHANNEL_HPP
#define NMIMO_CHANNEL_HPP

#include "nmimo/channel_params.hpp"
#include "nmimo/random.hpp"
#include "nmimo/scenario.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace nmimo
{

struct LinkProbabilities
{
    double outage;
    double los;
    double nlos;
};

/// Distance-dependent state probabilities of the three-state blockage model:
/// p_out = max(0, 1 - exp(-a_out d + b_out)), p_los = (1 - p_out) exp(-a_los d).
LinkProbabilities link_state_probs(double distance_m, const ChannelParams &p);

/// Same, with p_out pinned to `p_out_override` and the remaining mass split
/// in the model's LOS:NLOS ratio.
LinkProbabilities link_state_probs(double distance_m, const ChannelParams &p, std::optional<double> p_out_override);

LinkState sample_link_state(double distance_m, const ChannelParams &p, Rng &rng,
                            std::optional<double> p_out_override = std::nullopt);

/// a + b 10 log10(d) + shadow. Outage links have no finite path loss; asking
/// for one throws std::invalid_argument.
double path_loss_db(double distance_m, LinkState state, const ChannelParams &p, double shadow_db);

struct Subpath
{
    double theta;      // auxiliary AoA, sin of the arrival angle
    double alpha;      // auxiliary AoD, horizontal
    double beta;       // auxiliary AoD, vertical
    double power;      // linear gain
    double delay_s;
    double doppler_hz;
    double phase;      // [0, 2 pi)
};

struct SubpathSet
{
    int ut = 0;
    int bs = 0;
    LinkState state = LinkState::outage;
    std::optional<double> path_loss_db; // empty for outage
    std::vector<Subpath> subpaths;

    double total_power() const;
};

struct ArrayDims
{
    int ut_antennas;
    int bs_h;
    int bs_v;

    int bs_antennas() const { return bs_h * bs_v; }
};

/// Receive beam i with theta in [2i/N - 1, 2(i+1)/N - 1); theta = 1 maps to N-1.
int receive_beam(double theta, int num_ut_antennas);

/// Transmit beam j = n_j M_h + m_j from the horizontal bin m_j of alpha and
/// the vertical bin n_j of beta.
int transmit_beam(double alpha, double beta, int bs_h, int bs_v);

constexpr int transmit_beam_index(int m_j, int n_j, int bs_h) { return n_j * bs_h + m_j; }

/// Draws cluster/subpath geometry for a non-outage link. Total subpath power
/// is normalised to M_v N / zeta (path loss in linear scale).
SubpathSet generate_paths(int ut, int bs, LinkState state, double distance_m, double shadow_db,
                          const ArrayDims &dims, const ChannelParams &p, Rng &rng);

/// Beam-domain statistical CSI of one UT: N x M_tot nonnegative coupling
/// powers, BS blocks concatenated in cell order.
struct BeamCsi
{
    Eigen::MatrixXd omega;
    std::vector<LinkState> states; // one per BS

    int rows() const { return static_cast<int>(omega.rows()); }
    int cols() const { return static_cast<int>(omega.cols()); }
};

/// Bins every subpath's power into its (receive beam, transmit beam) cell.
/// `sets` holds one entry per BS, in cell order.
BeamCsi compute_omega(std::span<const SubpathSet> sets, const ArrayDims &dims);

/// One realisation of the beam-domain channel: independent CN(0, Omega[i,j])
/// entries, drawn column-major.
Eigen::MatrixXcd sample_beam_channel(const BeamCsi &csi, Rng &rng);

/// Everything drawn for one network drop.
struct ChannelDrop
{
    NetworkTopology topology;
    std::vector<std::vector<SubpathSet>> links; // [ut][bs]
    std::vector<BeamCsi> csi;                   // [ut]
};

/// Topology from stream {seed, 0}; link (ut, bs) from stream {seed, 1, ut, bs}.
ChannelDrop generate_drop(const ScenarioConfig &c, std::uint64_t seed);

} // namespace nmimo

#endif
