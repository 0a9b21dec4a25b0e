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

#include "nmimo/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace nmimo
{

LinkProbabilities link_state_probs(double d, const ChannelParams &p)
{
    return link_state_probs(d, p, std::nullopt);
}

LinkProbabilities link_state_probs(double d, const ChannelParams &p, std::optional<double> p_out_override)
{
    if (!(d > 0.0))
        throw std::invalid_argument("link distance must be > 0");
    const double p_out = p_out_override ? *p_out_override
                                        : std::max(0.0, 1.0 - std::exp(-p.a_out * d + p.b_out));
    const double p_los = (1.0 - p_out) * std::exp(-p.a_los * d);
    return {p_out, p_los, std::max(0.0, 1.0 - p_out - p_los)};
}

LinkState sample_link_state(double d, const ChannelParams &p, Rng &rng, std::optional<double> p_out_override)
{
    const auto pr = link_state_probs(d, p, p_out_override);
    const double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (x < pr.outage)
        return LinkState::outage;
    if (x < pr.outage + pr.los)
        return LinkState::los;
    return LinkState::nlos;
}

double path_loss_db(double d, LinkState state, const ChannelParams &p, double shadow_db)
{
    if (state == LinkState::outage)
        throw std::invalid_argument("outage links have no finite path loss");
    if (!(d > 0.0))
        throw std::invalid_argument("link distance must be > 0");
    const auto &c = p.coeffs(state);
    return c.a_db + c.b * 10.0 * std::log10(d) + shadow_db;
}

double SubpathSet::total_power() const
{
    double s = 0.0;
    for (const auto &sp : subpaths)
        s += sp.power;
    return s;
}

namespace
{

int angle_bin(double x, int n, const char *what)
{
    if (!(x >= -1.0 && x <= 1.0))
        throw std::domain_error(std::string(what) + " outside [-1, 1]");
    const int i = static_cast<int>(std::floor((x + 1.0) * 0.5 * n));
    return std::clamp(i, 0, n - 1);
}

// N(0, std^2); std = 0 is a point mass
double gaussian(Rng &rng, double std)
{
    const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
    return std * z;
}

// wrap a physical angle into [-pi/2, pi/2)
double wrap_half_pi(double x)
{
    const double pi = std::numbers::pi;
    return x - pi * std::floor((x + 0.5 * pi) / pi);
}

} // namespace

int receive_beam(double theta, int n) { return angle_bin(theta, n, "theta"); }

int transmit_beam(double alpha, double beta, int bs_h, int bs_v)
{
    return transmit_beam_index(angle_bin(alpha, bs_h, "alpha"), angle_bin(beta, bs_v, "beta"), bs_h);
}

SubpathSet generate_paths(int ut, int bs, LinkState state, double d, double shadow_db,
                          const ArrayDims &dims, const ChannelParams &p, Rng &rng)
{
    SubpathSet out;
    out.ut = ut;
    out.bs = bs;
    out.state = state;
    if (state == LinkState::outage)
        return out;

    const double pl_db = path_loss_db(d, state, p, shadow_db);
    out.path_loss_db = pl_db;
    const double total = dims.bs_antennas() * static_cast<double>(dims.ut_antennas) * std::pow(10.0, -pl_db / 10.0);

    const double pi = std::numbers::pi;
    std::uniform_real_distribution<double> centre(-0.5 * pi, 0.5 * pi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double spread = p.angle_spread_deg * pi / 180.0;
    std::exponential_distribution<double> excess(1.0 / p.delay_spread_s);

    const int nc = p.num_clusters;
    const int ns = p.subpaths_per_cluster;
    std::vector<double> cluster_delay(nc), cluster_power(nc);
    for (int c = 0; c < nc; ++c)
    {
        cluster_delay[c] = excess(rng);
        cluster_power[c] = std::exp(-cluster_delay[c] / p.delay_spread_s);
    }
    const double norm = std::accumulate(cluster_power.begin(), cluster_power.end(), 0.0);
    const double prop_delay = d / speed_of_light;

    out.subpaths.reserve(static_cast<std::size_t>(nc) * ns);
    for (int c = 0; c < nc; ++c)
    {
        const double aoa = centre(rng);
        const double elev = centre(rng);
        const double azim = centre(rng);
        const double per_path = total * cluster_power[c] / norm / ns;
        for (int s = 0; s < ns; ++s)
        {
            const double a = wrap_half_pi(aoa + gaussian(rng, spread));
            const double e = wrap_half_pi(elev + gaussian(rng, spread));
            const double z = wrap_half_pi(azim + gaussian(rng, spread));
            Subpath sp;
            sp.theta = std::clamp(std::sin(a), -1.0, 1.0);
            sp.alpha = std::clamp(std::cos(z) * std::sin(e), -1.0, 1.0);
            sp.beta = std::clamp(std::sin(z) * std::sin(e), -1.0, 1.0);
            sp.power = per_path;
            sp.delay_s = prop_delay + cluster_delay[c];
            sp.doppler_hz = p.max_doppler_hz * sp.theta;
            sp.phase = 2.0 * pi * unit(rng);
            out.subpaths.push_back(sp);
        }
    }
    return out;
}

BeamCsi compute_omega(std::span<const SubpathSet> sets, const ArrayDims &dims)
{
    const int mv = dims.bs_antennas();
    BeamCsi csi;
    csi.omega = Eigen::MatrixXd::Zero(dims.ut_antennas, mv * static_cast<Eigen::Index>(sets.size()));
    for (std::size_t v = 0; v < sets.size(); ++v)
    {
        const auto &set = sets[v];
        if (set.bs != static_cast<int>(v))
            throw std::invalid_argument("subpath sets must be ordered by BS index");
        csi.states.push_back(set.state);
        for (const auto &sp : set.subpaths)
        {
            const int i = receive_beam(sp.theta, dims.ut_antennas);
            const int j = transmit_beam(sp.alpha, sp.beta, dims.bs_h, dims.bs_v);
            csi.omega(i, static_cast<Eigen::Index>(v) * mv + j) += sp.power;
        }
    }
    return csi;
}

Eigen::MatrixXcd sample_beam_channel(const BeamCsi &csi, Rng &rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd out(csi.rows(), csi.cols());
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = 0; i < out.rows(); ++i)
        {
            const double s = std::sqrt(0.5 * csi.omega(i, j));
            const double re = g(rng);
            const double im = g(rng);
            out(i, j) = {s * re, s * im};
        }
    return out;
}

ChannelDrop generate_drop(const ScenarioConfig &c, std::uint64_t seed)
{
    ChannelDrop drop;
    {
        auto rng = make_rng(seed, {0});
        drop.topology = drop_uts(c, rng);
    }
    const ArrayDims dims{c.ut_antennas, c.bs_antennas_h, c.bs_antennas_v};
    const int nu = drop.topology.num_uts();
    drop.links.resize(nu);
    for (int ut = 0; ut < nu; ++ut)
    {
        for (int v = 0; v < c.num_cells; ++v)
        {
            auto rng = make_rng(seed, {1, static_cast<std::uint64_t>(ut), static_cast<std::uint64_t>(v)});
            const double d = drop.topology.distances(ut, v);
            const LinkState st = sample_link_state(d, c.channel, rng, c.p_out_override);
            double shadow = 0.0;
            if (st != LinkState::outage)
                shadow = gaussian(rng, c.channel.coeffs(st).shadow_db);
            drop.links[ut].push_back(generate_paths(ut, v, st, d, shadow, dims, c.channel, rng));
        }
        drop.csi.push_back(compute_omega(drop.links[ut], dims));
    }
    return drop;
}

} // namespace nmimo
