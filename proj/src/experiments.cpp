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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>

namespace nmimo
{

const char *to_string(ExperimentKind k)
{
    switch (k)
    {
    case ExperimentKind::convergence:
        return "convergence";
    case ExperimentKind::power_sweep:
        return "sweep";
    case ExperimentKind::cdf:
        return "cdf";
    case ExperimentKind::mobility:
        return "mobility";
    case ExperimentKind::single_run:
        return "solve";
    }
    return "?";
}

void ExperimentSpec::validate() const
{
    config.validate();
    if (powers_dbm.empty())
        throw std::invalid_argument("power list must not be empty");
    if (num_drops < 1)
        throw std::invalid_argument("number of drops must be >= 1");
    if (mc_samples < 0)
        throw std::invalid_argument("MC sample count must be >= 0");
    if (strategies.empty())
        throw std::invalid_argument("strategy list must not be empty");
    if (kind == ExperimentKind::mobility && velocities_kmh.empty())
        throw std::invalid_argument("mobility needs at least one velocity");
    for (double v : velocities_kmh)
        if (v < 0.0)
            throw std::invalid_argument("velocities must be >= 0");
}

const CsvTable &ExperimentOutput::table(const std::string &name) const
{
    for (const auto &[n, t] : tables)
        if (n == name)
            return t;
    throw std::out_of_range("no table " + name);
}

NetworkProblem problem_at(const ChannelDrop &drop, const ScenarioConfig &c, double power_dbm, StrategyMode s)
{
    ScenarioConfig cc = c;
    cc.power_mw = dbm_to_mw(power_dbm);
    cc.strategy = s;
    return make_problem(drop, cc);
}

NoiseVector mobility_noise(const NetworkProblem &p, std::span<const double> ici_bound)
{
    if (static_cast<int>(ici_bound.size()) != p.num_uts())
        throw std::invalid_argument("mobility_noise: one ICI bound per UT required");
    Eigen::VectorXd full(p.total_beams());
    for (int v = 0; v < p.num_cells(); ++v)
        full.segment(p.blocks[v].begin, p.blocks[v].size()).setConstant(p.power(v) / p.blocks[v].size());
    NoiseVector n = p.noise;
    for (int i = 0; i < p.num_uts(); ++i)
        n(i) += ici_bound[i] * xi_diag(p.csi[i].omega, full).mean();
    return n;
}

double percentile_05(std::vector<double> samples)
{
    if (samples.empty())
        throw std::invalid_argument("percentile of an empty sample");
    std::sort(samples.begin(), samples.end());
    const auto n = samples.size();
    return samples[n - static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)))];
}

namespace
{

std::string fmt(double x) { return format_double(x); }

std::uint64_t mc_seed(std::uint64_t master, int drop, int power_idx, int strategy)
{
    return derive_seed(master, {1, static_cast<std::uint64_t>(drop), static_cast<std::uint64_t>(power_idx),
                                static_cast<std::uint64_t>(strategy)});
}

} // namespace

ExperimentOutput run_convergence(const ExperimentSpec &spec)
{
    spec.validate();
    const auto &c = spec.config;
    ExperimentOutput out;
    CsvTable t("convergence", 1, {"power_dbm", "iteration", "de_sum_rate"}, spec.experiment_id, c.seed);
    const auto drop = generate_drop(c, drop_seed(c.seed, 0));
    nlohmann::json runs = nlohmann::json::array();
    for (double pw : spec.powers_dbm)
    {
        try
        {
            const auto p = problem_at(drop, c, pw, c.strategy);
            const auto res = cccp_solve(p, c.solver);
            // a rejected first step leaves the start point as iterate 1
            const auto &e = res.trace.entries;
            const std::size_t last = e.size() - 1;
            for (std::size_t k = 1; k <= std::max<std::size_t>(last, 1); ++k)
                t.row({fmt(pw), std::to_string(k), fmt(e[std::min(k, last)].sum_rate_bits)});
            runs.push_back({{"power_dbm", pw},
                            {"iterations", res.trace.entries.size() - 1},
                            {"converged", res.trace.converged},
                            {"kkt_worst", res.kkt.worst()}});
        }
        catch (const std::exception &e)
        {
            out.errors.push_back("power " + fmt(pw) + " dBm: " + e.what());
        }
    }
    out.summary["runs"] = runs;
    out.tables.emplace_back("convergence.csv", std::move(t));
    return out;
}

ExperimentOutput run_power_sweep(const ExperimentSpec &spec)
{
    spec.validate();
    const auto &c = spec.config;
    ExperimentOutput out;
    CsvTable t("power_sweep", 1, {"power_dbm", "strategy", "method", "sum_rate", "drop_id"}, spec.experiment_id,
               c.seed);
    for (int d = 0; d < spec.num_drops; ++d)
    {
        const auto drop = generate_drop(c, drop_seed(c.seed, d));
        for (std::size_t pi = 0; pi < spec.powers_dbm.size(); ++pi)
        {
            const double pw = spec.powers_dbm[pi];
            for (auto s : spec.strategies)
            {
                try
                {
                    const auto p = problem_at(drop, c, pw, s);
                    const auto res = cccp_solve(p, c.solver);
                    const double de = de_sum_rate(drop.csi, res.allocation, p.noise).sum_bits();
                    t.row({fmt(pw), to_string(s), "de", fmt(de), std::to_string(d)});
                    if (spec.mc_samples > 0)
                    {
                        const double mc = mc_sum_rate(drop.csi, res.allocation, p.noise, spec.mc_samples,
                                                      mc_seed(c.seed, d, static_cast<int>(pi), static_cast<int>(s)))
                                              .sum_bits();
                        t.row({fmt(pw), to_string(s), "mc", fmt(mc), std::to_string(d)});
                    }
                }
                catch (const std::exception &e)
                {
                    out.errors.push_back("drop " + std::to_string(d) + ", " + fmt(pw) + " dBm, " + to_string(s) +
                                         ": " + e.what());
                }
            }
        }
    }
    out.tables.emplace_back("sweep.csv", std::move(t));
    return out;
}

ExperimentOutput run_cdf(const ExperimentSpec &spec)
{
    spec.validate();
    const auto &c = spec.config;
    ExperimentOutput out;
    CsvTable t("cdf", 1, {"power_dbm", "strategy", "drop_id", "sum_rate"}, spec.experiment_id, c.seed);
    CsvTable s("cdf_summary", 1, {"power_dbm", "strategy", "drops", "r05", "median", "mean"}, spec.experiment_id,
               c.seed);
    const auto np = spec.powers_dbm.size();
    const auto ns = spec.strategies.size();
    std::vector<std::vector<double>> rates(np * ns);
    for (int d = 0; d < spec.num_drops; ++d)
    {
        const auto drop = generate_drop(c, drop_seed(c.seed, d));
        for (std::size_t pi = 0; pi < np; ++pi)
            for (std::size_t si = 0; si < ns; ++si)
            {
                const auto st = spec.strategies[si];
                try
                {
                    const auto p = problem_at(drop, c, spec.powers_dbm[pi], st);
                    const auto res = cccp_solve(p, c.solver);
                    const double r = de_sum_rate(drop.csi, res.allocation, p.noise).sum_bits();
                    rates[pi * ns + si].push_back(r);
                    t.row({fmt(spec.powers_dbm[pi]), to_string(st), std::to_string(d), fmt(r)});
                }
                catch (const std::exception &e)
                {
                    out.errors.push_back("drop " + std::to_string(d) + ", " + to_string(st) + ": " + e.what());
                }
            }
    }
    for (std::size_t pi = 0; pi < np; ++pi)
        for (std::size_t si = 0; si < ns; ++si)
        {
            auto v = rates[pi * ns + si];
            if (v.empty())
                continue;
            std::sort(v.begin(), v.end());
            const double median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            s.row({fmt(spec.powers_dbm[pi]), to_string(spec.strategies[si]), std::to_string(v.size()),
                   fmt(percentile_05(v)), fmt(median), fmt(mean)});
        }
    out.tables.emplace_back("cdf.csv", std::move(t));
    out.tables.emplace_back("cdf_summary.csv", std::move(s));
    return out;
}

ExperimentOutput run_mobility(const ExperimentSpec &spec)
{
    spec.validate();
    const auto &c = spec.config;
    const double pw = spec.powers_dbm.front();
    ExperimentOutput out;
    CsvTable t("mobility", 1, {"velocity_kmh", "sync_mode", "method", "sum_rate", "drop_id"}, spec.experiment_id,
               c.seed);
    CsvTable sp("spreads", 1,
                {"velocity_kmh", "drop_id", "ut_id", "mode", "delta_tau_s", "delta_nu_hz", "ici_bound", "ofdm_valid"},
                spec.experiment_id, c.seed);
    const char *method = spec.mc_samples > 0 ? "mc" : "de";
    for (int d = 0; d < spec.num_drops; ++d)
    {
        const auto drop = generate_drop(c, drop_seed(c.seed, d));
        const auto base = problem_at(drop, c, pw, StrategyMode::network);
        auto rate = [&](const NoiseVector &noise, int tag) {
            NetworkProblem p = base;
            p.noise = noise;
            const auto res = cccp_solve(p, c.solver);
            if (spec.mc_samples > 0)
                return mc_sum_rate(drop.csi, res.allocation, noise, spec.mc_samples, mc_seed(c.seed, d, tag, 0))
                    .sum_bits();
            return de_sum_rate(drop.csi, res.allocation, noise).sum_bits();
        };
        double ideal = 0.0;
        try
        {
            ideal = rate(base.noise, 0);
        }
        catch (const std::exception &e)
        {
            out.errors.push_back("drop " + std::to_string(d) + ", ideal: " + e.what());
            continue;
        }
        for (std::size_t vi = 0; vi < spec.velocities_kmh.size(); ++vi)
        {
            const double vk = spec.velocities_kmh[vi];
            const double nu = max_doppler_hz(vk / 3.6, c.carrier_hz);
            t.row({fmt(vk), "ideal", method, fmt(ideal), std::to_string(d)});
            for (auto mode : {SyncMode::per_beam, SyncMode::space})
            {
                std::vector<double> bound(base.num_uts());
                for (int i = 0; i < base.num_uts(); ++i)
                {
                    const auto links = with_max_doppler(drop.links[i], nu);
                    const auto s = spread_report(links, c.ut_antennas).spreads(mode);
                    bound[i] = ici_power_bound(s.delta_nu_hz, c.ofdm.symbol_duration());
                    const auto ok = check_ofdm_validity(s, c.ofdm);
                    sp.row({fmt(vk), std::to_string(d), std::to_string(i), to_string(mode), fmt(s.delta_tau_s),
                            fmt(s.delta_nu_hz), fmt(bound[i]), ok.pass ? "1" : "0"});
                }
                try
                {
                    const int tag = 1 + 2 * static_cast<int>(vi) + (mode == SyncMode::space);
                    const double r = vk == 0.0 ? ideal : rate(mobility_noise(base, bound), tag);
                    t.row({fmt(vk), to_string(mode), method, fmt(r), std::to_string(d)});
                }
                catch (const std::exception &e)
                {
                    out.errors.push_back("drop " + std::to_string(d) + ", " + fmt(vk) + " km/h, " + to_string(mode) +
                                         ": " + e.what());
                }
            }
        }
    }
    out.tables.emplace_back("mobility.csv", std::move(t));
    out.tables.emplace_back("spreads.csv", std::move(sp));
    return out;
}

ExperimentOutput run_single(const ExperimentSpec &spec)
{
    spec.validate();
    const auto &c = spec.config;
    ExperimentOutput out;
    NetworkProblem p;
    if (spec.omega_in)
    {
        auto f = read_omega_file(*spec.omega_in);
        if (static_cast<int>(f.csi.size()) != c.num_uts())
            throw std::invalid_argument("omega file has " + std::to_string(f.csi.size()) + " UTs, config expects " +
                                        std::to_string(c.num_uts()));
        std::vector<int> serving;
        std::vector<BeamRange> blocks;
        for (int i = 0; i < c.num_uts(); ++i)
            serving.push_back(i / c.uts_per_cell);
        for (int v = 0; v < c.num_cells; ++v)
            blocks.push_back(bs_block_indices(c, v));
        p = make_problem(std::move(f.csi), std::move(serving), std::move(blocks),
                         Eigen::VectorXd::Constant(c.num_cells, c.power_mw), uniform_noise(c.num_uts(), c.noise_mw),
                         c.strategy);
    }
    else
    {
        const auto drop = generate_drop(c, drop_seed(c.seed, 0));
        p = make_problem(drop, c);
    }
    if (spec.omega_out)
        out.omega_files.emplace_back("omega.csv", p.csi);
    const auto res = cccp_solve(p, c.solver);
    const auto de = de_sum_rate(p.csi, res.allocation, p.noise);
    CsvTable rates = rate_breakdown_table(de, "de", static_cast<int>(res.trace.entries.size()) - 1,
                                          spec.experiment_id, c.seed);
    out.summary["de_sum_rate_bits"] = de.sum_bits();
    if (spec.mc_samples > 0)
    {
        const auto mc = mc_sum_rate(p.csi, res.allocation, p.noise, spec.mc_samples, mc_seed(c.seed, 0, 0, 0));
        for (std::size_t i = 0; i < mc.per_ut.size(); ++i)
            rates.row({std::to_string(res.trace.entries.size() - 1), std::to_string(i),
                       format_double(mc.per_ut[i].f_plus), format_double(mc.per_ut[i].f_minus),
                       format_double(nats_to_bits(mc.per_ut[i].rate())), "mc"});
        out.summary["mc_sum_rate_bits"] = mc.sum_bits();
    }
    out.summary["iterations"] = res.trace.entries.size() - 1;
    out.summary["converged"] = res.trace.converged;
    out.summary["kkt_worst"] = res.kkt.worst();
    out.tables.emplace_back("trace.csv", trace_table(res.trace, spec.experiment_id, c.seed, spec.timing));
    out.tables.emplace_back("allocation.csv", allocation_table(res.allocation, spec.experiment_id, c.seed));
    out.tables.emplace_back("rates.csv", std::move(rates));
    out.json_files.emplace_back("trace.json", trace_json(res.trace, spec.timing));
    return out;
}

ExperimentOutput run_experiment(const ExperimentSpec &spec)
{
    switch (spec.kind)
    {
    case ExperimentKind::convergence:
        return run_convergence(spec);
    case ExperimentKind::power_sweep:
        return run_power_sweep(spec);
    case ExperimentKind::cdf:
        return run_cdf(spec);
    case ExperimentKind::mobility:
        return run_mobility(spec);
    case ExperimentKind::single_run:
        return run_single(spec);
    }
    throw std::invalid_argument("unknown experiment kind");
}

void write_output(const ExperimentOutput &out, const ExperimentSpec &spec, const std::string &dir)
{
    std::filesystem::create_directories(dir);
    const std::filesystem::path root(dir);
    nlohmann::json files = nlohmann::json::array();
    for (const auto &[name, t] : out.tables)
    {
        t.write_file((root / name).string());
        files.push_back(name);
    }
    for (const auto &[name, j] : out.json_files)
    {
        write_json_file((root / name).string(), j);
        files.push_back(name);
    }
    for (const auto &[name, csi] : out.omega_files)
    {
        write_omega_file((root / name).string(), csi, spec.config.seed);
        files.push_back(name);
    }
    std::vector<std::string> strategies;
    for (auto s : spec.strategies)
        strategies.emplace_back(to_string(s));
    const nlohmann::json manifest{{"tool", "nmimo"},
                                  {"version", version},
                                  {"experiment_id", spec.experiment_id},
                                  {"kind", to_string(spec.kind)},
                                  {"seed", spec.config.seed},
                                  {"powers_dbm", spec.powers_dbm},
                                  {"num_drops", spec.num_drops},
                                  {"mc_samples", spec.mc_samples},
                                  {"velocities_kmh", spec.velocities_kmh},
                                  {"strategies", strategies},
                                  {"config", to_config_text(spec.config)},
                                  {"outputs", files},
                                  {"summary", out.summary},
                                  {"errors", out.errors}};
    write_json_file((root / "manifest.json").string(), manifest);
}

} // namespace nmimo
