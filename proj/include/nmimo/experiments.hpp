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

#ifndef NMIMO_EXPERIMENTS_HPP
#define NMIMO_EXPERIMENTS_HPP

#include "nmimo/io.hpp"
#include "nmimo/pbs.hpp"
#include "nmimo/scenario.hpp"
#include "nmimo/solver.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nmimo
{

enum class ExperimentKind
{
    convergence,
    power_sweep,
    cdf,
    mobility,
    single_run
};

const char *to_string(ExperimentKind k);

struct ExperimentSpec
{
    ExperimentKind kind = ExperimentKind::single_run;
    ScenarioConfig config;
    std::vector<double> powers_dbm{0.0, 10.0, 20.0, 30.0, 40.0};
    int num_drops = 1;
    int mc_samples = 0;
    std::vector<double> velocities_kmh{0.0, 60.0, 120.0, 240.0, 360.0};
    std::vector<StrategyMode> strategies{StrategyMode::network, StrategyMode::coordinated,
                                         StrategyMode::single_cell};
    std::string experiment_id = "run";
    bool timing = false;
    std::optional<std::string> omega_in;
    bool omega_out = false;

    /// Throws std::invalid_argument for empty lists or non-positive counts.
    void validate() const;
};

struct ExperimentOutput
{
    std::vector<std::pair<std::string, CsvTable>> tables; // file name, table
    std::vector<std::pair<std::string, nlohmann::json>> json_files;
    std::vector<std::pair<std::string, std::vector<BeamCsi>>> omega_files;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> errors; // per-case solver failures; the run continues

    const CsvTable &table(const std::string &name) const;
};

/// Seed of drop `d` under the master seed.
inline std::uint64_t drop_seed(std::uint64_t master, int d) { return derive_seed(master, {0, static_cast<std::uint64_t>(d)}); }

/// Problem for `drop` at a per-BS budget given in dBm.
NetworkProblem problem_at(const ChannelDrop &drop, const ScenarioConfig &c, double power_dbm, StrategyMode s);

/// Per-UT noise with the ICI bound as extra white noise: sigma^2 + bound_ut
/// times the UT's mean received power per beam under uniform full power.
NoiseVector mobility_noise(const NetworkProblem &p, std::span<const double> ici_bound);

/// R_0.05: the largest sample value r with at least 95% of samples >= r.
double percentile_05(std::vector<double> samples);

ExperimentOutput run_convergence(const ExperimentSpec &spec);
ExperimentOutput run_power_sweep(const ExperimentSpec &spec);
ExperimentOutput run_cdf(const ExperimentSpec &spec);
ExperimentOutput run_mobility(const ExperimentSpec &spec);
ExperimentOutput run_single(const ExperimentSpec &spec);
ExperimentOutput run_experiment(const ExperimentSpec &spec);

/// Writes every table and JSON file under `dir` plus manifest.json.
void write_output(const ExperimentOutput &out, const ExperimentSpec &spec, const std::string &dir);

} // namespace nmimo

#endif
