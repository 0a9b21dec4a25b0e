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

#include "nmimo/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace nmimo;

int main(int argc, char **argv)
{
    CLI::App app{"Network massive MIMO downlink simulator"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", strategy, omega_in, experiment_id = "run";
    std::uint64_t seed = 0;
    int drops = 0, mc_samples = 0;
    std::vector<double> powers, velocities;
    bool omega_out = false, timing = false;

    const std::vector<std::pair<const char *, ExperimentKind>> verbs{
        {"convergence", ExperimentKind::convergence}, {"sweep", ExperimentKind::power_sweep},
        {"cdf", ExperimentKind::cdf},                 {"mobility", ExperimentKind::mobility},
        {"solve", ExperimentKind::single_run}};
    std::vector<CLI::App *> subs;
    for (const auto &[name, kind] : verbs)
    {
        auto *s = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        s->add_option("--config", config_path, "scenario configuration file");
        s->add_option("--out", out_dir, "output directory")->capture_default_str();
        s->add_option("--seed", seed, "master seed (overrides the config)");
        s->add_option("--drops", drops, "number of channel drops")->check(CLI::PositiveNumber);
        s->add_option("--powers", powers, "per-BS transmit powers in dBm")->delimiter(',');
        s->add_option("--strategy", strategy, "network, coordinated or single_cell (comma list allowed)");
        s->add_option("--mc-samples", mc_samples, "Monte Carlo samples per rate (0 = DE only)")
            ->check(CLI::NonNegativeNumber);
        s->add_option("--velocities", velocities, "UT velocities in km/h")->delimiter(',');
        s->add_option("--id", experiment_id, "experiment id written to every row")->capture_default_str();
        s->add_flag("--timing", timing, "include wall-clock time in traces");
        if (kind == ExperimentKind::single_run)
        {
            s->add_option("--omega-in", omega_in, "solve on a beam-domain Omega file instead of a drop");
            s->add_flag("--omega-out", omega_out, "export the Omega of the solved instance");
        }
        subs.push_back(s);
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e);
    }

    ExperimentSpec spec;
    for (std::size_t i = 0; i < subs.size(); ++i)
        if (subs[i]->parsed())
            spec.kind = verbs[i].second;

    try
    {
        if (!config_path.empty())
            spec.config = load_config_file(config_path);
        if (app.get_subcommands().front()->count("--seed"))
            spec.config.seed = seed;
        if (drops > 0)
            spec.num_drops = drops;
        if (!powers.empty())
        {
            spec.powers_dbm = powers;
            spec.config.power_mw = dbm_to_mw(powers.front());
        }
        if (!velocities.empty())
            spec.velocities_kmh = velocities;
        if (!strategy.empty())
        {
            spec.strategies.clear();
            std::size_t pos = 0;
            while (pos <= strategy.size())
            {
                const auto end = std::min(strategy.find(',', pos), strategy.size());
                spec.strategies.push_back(parse_strategy(strategy.substr(pos, end - pos).c_str()));
                pos = end + 1;
            }
            spec.config.strategy = spec.strategies.front();
        }
        spec.mc_samples = mc_samples;
        spec.experiment_id = experiment_id;
        spec.timing = timing;
        if (!omega_in.empty())
            spec.omega_in = omega_in;
        spec.omega_out = omega_out;
        spec.validate();
    }
    catch (const std::exception &e)
    {
        std::cerr << "nmimo: configuration error: " << e.what() << '\n';
        return 2;
    }

    try
    {
        const auto out = run_experiment(spec);
        write_output(out, spec, out_dir);
        for (const auto &e : out.errors)
            std::cerr << "nmimo: " << e << '\n';
        if (spec.kind == ExperimentKind::single_run)
            std::cout << out.summary.dump(2) << '\n';
        return out.errors.empty() ? 0 : 3;
    }
    catch (const std::exception &e)
    {
        std::cerr << "nmimo: " << e.what() << '\n';
        return 1;
    }
}
