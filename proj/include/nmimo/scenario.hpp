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

#ifndef NMIMO_SCENARIO_HPP
#define NMIMO_SCENARIO_HPP

#include "nmimo/channel_params.hpp"
#include "nmimo/random.hpp"
#include "nmimo/solver_config.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmimo
{

constexpr double speed_of_light = 299792458.0;

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// Raised for malformed or invalid configuration documents; key() names the
/// offending entry (empty when the problem is not tied to one key).
class ConfigError : public std::runtime_error
{
  public:
    ConfigError(std::string key, const std::string &what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    const std::string &key() const noexcept { return key_; }

  private:
    std::string key_;
};

struct OfdmConfig
{
    double sampling_interval_s = 6.51e-9;
    int num_subcarriers = 2048;
    int cp_length = 144;

    double symbol_duration() const { return num_subcarriers * sampling_interval_s; }
    double cp_duration() const { return cp_length * sampling_interval_s; }
};

struct ScenarioConfig
{
    int num_cells = 3;
    double cell_radius_m = 100.0;
    int bs_antennas_h = 32;
    int bs_antennas_v = 4;
    int ut_antennas = 16;
    int uts_per_cell = 4;
    double carrier_hz = 28e9;
    double power_mw = 1e3;    // per-BS budget P_v
    double noise_mw = 1e-4;   // sigma^2
    OfdmConfig ofdm;
    ChannelParams channel;
    SolverConfig solver;
    std::uint64_t seed = 1;
    StrategyMode strategy = StrategyMode::network;
    std::optional<double> p_out_override;

    int bs_antennas() const { return bs_antennas_h * bs_antennas_v; }
    int total_bs_antennas() const { return num_cells * bs_antennas(); }
    int num_uts() const { return num_cells * uts_per_cell; }

    /// Throws ConfigError naming the first violated field.
    void validate() const;
};

/// Parses the key/value configuration format. Missing keys keep their
/// defaults; unknown or duplicate keys are errors.
ScenarioConfig load_config(const std::string &text);
ScenarioConfig load_config_file(const std::string &path);

/// Canonical text form; load_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ScenarioConfig &c);

struct UtId
{
    int k; // index within cell
    int u; // serving cell
};

/// Half-open global beam range [begin, end) of one BS.
struct BeamRange
{
    int begin;
    int end;

    int size() const { return end - begin; }
    bool contains(int m) const { return m >= begin && m < end; }
};

/// Global beam indices belonging to BS v (0-based).
BeamRange bs_block_indices(const ScenarioConfig &c, int v);

struct NetworkTopology
{
    std::vector<Eigen::Vector2d> bs_positions;
    std::vector<double> sector_boresight_rad;
    std::vector<Eigen::Vector2d> ut_positions; // global UT order: u * K_u + k
    std::vector<UtId> ut_ids;
    Eigen::MatrixXd distances; // num_uts x num_cells, meters
    std::vector<BeamRange> blocks;
    int total_beams = 0;

    int num_uts() const { return static_cast<int>(ut_positions.size()); }
    int num_cells() const { return static_cast<int>(bs_positions.size()); }
    int serving_cell(int ut) const { return ut_ids[ut].u; }
};

constexpr double min_ut_distance_m = 1.0;

/// BS sites on a triangular lattice with spacing 2 R cos(30 deg), taken in
/// order of distance from the origin then angle; each BS serves a 120 deg
/// sector facing the network centroid.
std::vector<Eigen::Vector2d> bs_sites(const ScenarioConfig &c);

/// Drops K_u UTs uniformly over each cell's sector (annulus r >= 1 m).
NetworkTopology drop_uts(const ScenarioConfig &c, Rng &rng);

inline NetworkTopology drop_uts(const ScenarioConfig &c, std::uint64_t seed)
{
    Rng rng(seed);
    return drop_uts(c, rng);
}

} // namespace nmimo

#endif
