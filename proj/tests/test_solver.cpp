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

#include "nmimo/solver.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace nmimo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

BeamCsi csi_of(Eigen::MatrixXd omega)
{
    BeamCsi c;
    c.omega = std::move(omega);
    return c;
}

// Random network: `cells` BSs with `m` beams each, `per_cell` UTs per cell,
// N receive beams and sparse nonnegative couplings.
NetworkProblem random_problem(std::uint64_t seed, int cells, int m, int per_cell, int n, double power_mw,
                              StrategyMode s = StrategyMode::network)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<BeamCsi> csi;
    std::vector<int> serving;
    std::vector<BeamRange> blocks;
    for (int v = 0; v < cells; ++v)
        blocks.push_back({v * m, (v + 1) * m});
    for (int v = 0; v < cells; ++v)
        for (int k = 0; k < per_cell; ++k)
        {
            Eigen::MatrixXd om = Eigen::MatrixXd::Zero(n, cells * m);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < cells * m; ++c)
                    if (u(rng) < 0.3)
                        om(r, c) = (c / m == v ? 1.0 : 0.2) * u(rng);
            csi.push_back(csi_of(om));
            serving.push_back(v);
        }
    const int uts = cells * per_cell;
    return make_problem(std::move(csi), std::move(serving), std::move(blocks),
                        Eigen::VectorXd::Constant(cells, power_mw), uniform_noise(uts, 0.01), s);
}

// Single UT, one BS, couplings chosen so the context has the given gamma and delta.
struct SingleUt
{
    NetworkProblem p;
    DeContext ctx;
};

SingleUt single_ut(const Eigen::VectorXd &gamma, const Eigen::VectorXd &delta, double power)
{
    const auto m = static_cast<int>(gamma.size());
    SingleUt s{make_problem({csi_of(Eigen::MatrixXd::Ones(1, m))}, {0}, {{0, m}},
                            Eigen::VectorXd::Constant(1, power), uniform_noise(1, 1.0), StrategyMode::network),
               {}};
    UtContext c;
    c.gamma = gamma;
    c.delta = delta;
    c.gamma_tilde = Eigen::VectorXd::Zero(1);
    c.k_diag = Eigen::VectorXd::Ones(1);
    s.ctx.ut.push_back(c);
    return s;
}

} // namespace

TEST_CASE("strategy masks")
{
    const std::vector<int> serving{0, 0, 1, 2};
    const auto net = apply_strategy_mask(StrategyMode::network, serving, 3);
    const auto single = apply_strategy_mask(StrategyMode::single_cell, serving, 3);
    const auto coord = apply_strategy_mask(StrategyMode::coordinated, serving, 3);
    for (int i = 0; i < 4; ++i)
        for (int v = 0; v < 3; ++v)
        {
            CHECK(net.permits(i, v));
            CHECK(single.permits(i, v) == (v == serving[i]));
            CHECK(coord.permits(i, v) == (v == serving[i]));
        }
}

TEST_CASE("Newton root of the stationarity function")
{
    RhoTerms t;
    t.gamma = 1.0;
    t.offset = 0.5;
    const auto r = newton_root(t, 0.0, 100.0, 1e-14, 100);
    CHECK_THAT(r.x, WithinAbs(1.0, 1e-12));

    RhoTerms neg;
    neg.gamma = 1.0;
    neg.offset = 2.0;
    CHECK(newton_root(neg, 0.5, 100.0, 1e-14, 100).x == 0.0);

    RhoTerms cap;
    cap.gamma = 1.0;
    cap.offset = 0.5;
    CHECK(newton_root(cap, 0.0, 0.5, 1e-14, 100).x == 0.5);

    RhoTerms inf = t;
    inf.r = {2.0};
    inf.base = {0.3};
    CHECK_THAT(inf.evaluate(1e12).rho, WithinAbs(-0.5, 1e-9));
}

TEST_CASE("Newton converges quadratically")
{
    RhoTerms t;
    t.gamma = 3.0;
    t.offset = 0.2;
    t.r = {1.0, 0.5};
    t.base = {0.4, 2.0};
    const auto r = newton_root(t, 0.0, 1e3, 1e-15, 100);
    REQUIRE(r.residuals.size() >= 4);
    CHECK(std::abs(t.evaluate(r.x).rho) < 1e-12);
    // e_{k+1} / e_k^2 stays bounded until round-off
    bool checked = false;
    for (std::size_t k = 1; k + 1 < r.residuals.size(); ++k)
    {
        const double a = r.residuals[k], b = r.residuals[k + 1];
        if (a > 1e-3 || a < 1e-12)
            continue;
        INFO("residuals " << a << " -> " << b);
        CHECK(b <= 100.0 * a * a);
        checked = true;
    }
    CHECK(checked);
    CHECK(r.iterations < 15);
}

TEST_CASE("two-beam water-filling by hand")
{
    auto s = single_ut(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d::Zero(), 1.0);
    SolverConfig cfg;
    cfg.bisect_tol = 1e-13;
    Subproblem sp(s.p, s.ctx, PowerAllocation(1, 2));
    const auto w = sp.waterfill_bs(0, PowerConstraint::equality, cfg);
    CHECK_THAT(sp.allocation().lambda[0](0), WithinAbs(0.25, 1e-9));
    CHECK_THAT(sp.allocation().lambda[0](1), WithinAbs(0.75, 1e-9));
    CHECK_THAT(w.mu, WithinAbs(0.8, 1e-9));

    Eigen::VectorXd mu;
    const std::vector<BeamRange> blocks{{0, 2}};
    const auto cf = single_ut_closed_form(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d::Zero(), Eigen::VectorXd::Ones(1),
                                          blocks, &mu);
    CHECK_THAT(cf(0), WithinAbs(0.25, 1e-12));
    CHECK_THAT(cf(1), WithinAbs(0.75, 1e-12));
    CHECK_THAT(mu(0), WithinAbs(0.8, 1e-12));

    const auto rep = kkt_residuals(s.p, s.ctx, [&] {
        PowerAllocation a(1, 2);
        a.lambda[0] = cf;
        return a;
    }(), mu);
    CHECK(rep.worst() <= 1e-10);
}

TEST_CASE("closed form edge cases")
{
    const std::vector<BeamRange> blocks{{0, 4}};
    const auto uni = single_ut_closed_form(Eigen::VectorXd::Constant(4, 3.0), Eigen::VectorXd::Zero(4),
                                           Eigen::VectorXd::Constant(1, 2.0), blocks);
    CHECK(uni.isApprox(Eigen::VectorXd::Constant(4, 0.5), 1e-12));
    const auto zero = single_ut_closed_form(Eigen::VectorXd::Constant(4, 3.0), Eigen::VectorXd::Zero(4),
                                            Eigen::VectorXd::Zero(1), blocks);
    CHECK(zero.isZero());
}

TEST_CASE("inactive budget gives mu = 0 and interior stationarity")
{
    auto s = single_ut(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.5, 0.25), 1e6);
    SolverConfig cfg;
    Subproblem sp(s.p, s.ctx, PowerAllocation(1, 2));
    const auto w = sp.waterfill_bs(0, PowerConstraint::inequality, cfg);
    CHECK(w.mu == 0.0);
    CHECK_THAT(sp.allocation().lambda[0](0), WithinAbs(1.0, 1e-9));
    CHECK_THAT(sp.allocation().lambda[0](1), WithinAbs(3.5, 1e-9));

    auto z = single_ut(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d::Zero(), 0.0);
    Subproblem sz(z.p, z.ctx, PowerAllocation(1, 2));
    sz.waterfill_bs(0, PowerConstraint::inequality, cfg);
    CHECK(sz.allocation().lambda[0].isZero());
}

TEST_CASE("KKT flags a non-optimal zero allocation")
{
    auto s = single_ut(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d::Zero(), 1.0);
    const auto rep = kkt_residuals(s.p, s.ctx, PowerAllocation(1, 2), Eigen::VectorXd::Zero(1));
    CHECK(rep.zero_beam > 0.1);
}

TEST_CASE("Delta gradient")
{
    auto p1 = random_problem(1, 1, 3, 1, 2, 1.0);
    PowerAllocation a1 = uniform_allocation(p1);
    CHECK(delta_gradient(p1, a1, 0).isZero());

    Eigen::MatrixXd o0(1, 2), o1(1, 2);
    o0 << 1.0, 0.5;
    o1 << 0.25, 2.0;
    const auto p = make_problem({csi_of(o0), csi_of(o1)}, {0, 0}, {{0, 2}}, Eigen::VectorXd::Ones(1),
                                uniform_noise(2, 0.1), StrategyMode::network);
    PowerAllocation zero(2, 2);
    const auto dz = delta_gradient(p, zero, 0);
    CHECK_THAT(dz(0), WithinAbs(0.25 / 0.1, 1e-12));
    CHECK_THAT(dz(1), WithinAbs(2.0 / 0.1, 1e-12));

    PowerAllocation a(2, 2);
    a.lambda[0] << 0.3, 0.2;
    a.lambda[1] << 0.1, 0.4;
    // UT 1's NPI is sigma^2 + Omega_1 . lambda_0
    const double k1 = 0.1 + 0.25 * 0.3 + 2.0 * 0.2;
    const auto d = delta_gradient(p, a, 0);
    CHECK_THAT(d(0), WithinAbs(0.25 / k1, 1e-12));
    CHECK_THAT(d(1), WithinAbs(2.0 / k1, 1e-12));
}

TEST_CASE("CCCP on a small network is monotone, feasible and stationary")
{
    for (std::uint64_t seed : {3u, 4u, 5u})
    {
        const auto p = random_problem(seed, 2, 6, 2, 3, 10.0);
        SolverConfig cfg;
        const auto res = cccp_solve(p, cfg);
        CHECK(res.trace.converged);
        const auto &e = res.trace.entries;
        REQUIRE(e.size() >= 2);
        for (std::size_t k = 1; k < e.size(); ++k)
        {
            CHECK(e[k].sum_rate_bits >= e[k - 1].sum_rate_bits - 1e-6 * std::abs(e[k - 1].sum_rate_bits));
            CHECK((e[k].bs_power.array() <= p.power.array() + 1e-9).all());
        }
        CHECK(res.kkt.worst() <= 1e-4);
        const double rate = de_sum_rate(p.csi, res.allocation, p.noise).sum_bits();
        CHECK_THAT(rate, WithinRel(e.back().sum_rate_bits, 1e-9));
        CHECK(rate > e.front().sum_rate_bits);
    }
}

TEST_CASE("strategies coincide on a single-cell network")
{
    const auto p = random_problem(9, 1, 8, 3, 3, 5.0);
    SolverConfig cfg;
    const auto a = cccp_solve(p, cfg);
    const auto b = cccp_solve(with_strategy(p, StrategyMode::single_cell), cfg);
    const auto c = cccp_solve(with_strategy(p, StrategyMode::coordinated), cfg);
    for (int i = 0; i < p.num_uts(); ++i)
    {
        CHECK(a.allocation.lambda[i] == b.allocation.lambda[i]);
        CHECK(a.allocation.lambda[i] == c.allocation.lambda[i]);
    }
}

TEST_CASE("masked blocks stay empty")
{
    const auto p = random_problem(11, 3, 4, 2, 2, 10.0, StrategyMode::coordinated);
    const auto res = cccp_solve(p, SolverConfig{});
    for (int i = 0; i < p.num_uts(); ++i)
        for (int v = 0; v < p.num_cells(); ++v)
            if (!p.mask.permits(i, v))
                CHECK(res.allocation.lambda[i].segment(p.blocks[v].begin, p.blocks[v].size()).isZero(0.0));
    CHECK_THROWS_AS(cccp_solve(p, SolverConfig{}, uniform_allocation(with_strategy(p, StrategyMode::network))),
                    std::invalid_argument);
}

TEST_CASE("low SNR: solver matches a grid search")
{
    Eigen::MatrixXd om(2, 4);
    om << 0.2, 1.0, 0.1, 0.7, 0.3, 0.9, 0.05, 0.2;
    const double power = 1.0;
    const auto p = make_problem({csi_of(om)}, {0}, {{0, 4}}, Eigen::VectorXd::Constant(1, power),
                                uniform_noise(1, 100.0), StrategyMode::network);
    const auto res = cccp_solve(p, SolverConfig{});
    const double got = de_sum_rate(p.csi, res.allocation, p.noise).sum_nats;

    // simplex grid at resolution P/200 over the full budget
    const int steps = 200;
    double best = 0.0;
    PowerAllocation a(1, 4);
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; i + j <= steps; ++j)
            for (int k = 0; i + j + k <= steps; ++k)
            {
                a.lambda[0] << i, j, k, steps - i - j - k;
                a.lambda[0] *= power / steps;
                best = std::max(best, de_sum_rate(p.csi, a, p.noise).sum_nats);
            }
    CHECK(got >= best * (1.0 - 1e-9));
    // the power goes to the strongest column
    Eigen::Index top;
    res.allocation.lambda[0].maxCoeff(&top);
    CHECK(top == 1);
    CHECK(res.allocation.lambda[0](1) > 0.9 * power);
}
