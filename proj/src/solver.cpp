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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace nmimo
{

StrategyMask apply_strategy_mask(StrategyMode mode, std::span<const int> serving_cell, int num_cells)
{
    StrategyMask mask;
    for (int cell : serving_cell)
    {
        if (cell < 0 || cell >= num_cells)
            throw std::out_of_range("serving cell " + std::to_string(cell) + " outside the network");
        std::vector<char> row(num_cells, mode == StrategyMode::network ? 1 : 0);
        row[cell] = 1;
        mask.allowed.push_back(std::move(row));
    }
    return mask;
}

int NetworkProblem::bs_of_beam(int m) const
{
    for (int v = 0; v < num_cells(); ++v)
        if (blocks[v].contains(m))
            return v;
    throw std::out_of_range("beam index " + std::to_string(m));
}

NetworkProblem make_problem(std::vector<BeamCsi> csi, std::vector<int> serving_cell, std::vector<BeamRange> blocks,
                            Eigen::VectorXd power, NoiseVector noise, StrategyMode strategy)
{
    NetworkProblem p;
    p.csi = std::move(csi);
    p.serving_cell = std::move(serving_cell);
    p.blocks = std::move(blocks);
    p.power = std::move(power);
    p.noise = std::move(noise);
    p.strategy = strategy;
    const int u = p.num_uts();
    if (static_cast<int>(p.serving_cell.size()) != u || p.noise.size() != u)
        throw std::invalid_argument("make_problem: serving cells and noise must cover every UT");
    if (p.power.size() != p.num_cells())
        throw std::invalid_argument("make_problem: one power budget per BS required");
    if ((p.power.array() < 0.0).any() || (p.noise.array() <= 0.0).any())
        throw std::invalid_argument("make_problem: budgets must be >= 0 and noise > 0");
    for (const auto &c : p.csi)
        if (c.cols() != p.total_beams())
            throw std::invalid_argument("make_problem: Omega width differs from M_tot");
    p.mask = apply_strategy_mask(strategy, p.serving_cell, p.num_cells());
    p.columns.assign(p.total_beams(), {});
    for (int m = 0; m < p.total_beams(); ++m)
        for (int i = 0; i < u; ++i)
            for (int n = 0; n < p.csi[i].rows(); ++n)
                if (const double r = p.csi[i].omega(n, m); r > 0.0)
                    p.columns[m].push_back({i, n, r});
    return p;
}

NetworkProblem make_problem(const ChannelDrop &drop, const ScenarioConfig &c)
{
    std::vector<int> serving;
    for (const auto &id : drop.topology.ut_ids)
        serving.push_back(id.u);
    return make_problem(drop.csi, std::move(serving), drop.topology.blocks,
                        Eigen::VectorXd::Constant(c.num_cells, c.power_mw),
                        uniform_noise(drop.topology.num_uts(), c.noise_mw), c.strategy);
}

NetworkProblem with_strategy(const NetworkProblem &p, StrategyMode strategy)
{
    NetworkProblem q = p;
    q.strategy = strategy;
    q.mask = apply_strategy_mask(strategy, q.serving_cell, q.num_cells());
    return q;
}

PowerAllocation uniform_allocation(const NetworkProblem &p)
{
    PowerAllocation a(p.num_uts(), p.total_beams());
    for (int v = 0; v < p.num_cells(); ++v)
    {
        int users = 0;
        for (int i = 0; i < p.num_uts(); ++i)
            users += p.mask.permits(i, v);
        if (users == 0)
            continue;
        const auto &b = p.blocks[v];
        const double each = p.power(v) / (static_cast<double>(users) * b.size());
        for (int i = 0; i < p.num_uts(); ++i)
            if (p.mask.permits(i, v))
                a.lambda[i].segment(b.begin, b.size()).setConstant(each);
    }
    return a;
}

Eigen::VectorXd model_npi(const NetworkProblem &p, const PowerAllocation &a, int i)
{
    Eigen::VectorXd others = Eigen::VectorXd::Zero(p.total_beams());
    for (int j = 0; j < p.num_uts(); ++j)
        if (j != i && p.visible(i, j))
            others += a.lambda[j];
    return (p.noise(i) + xi_diag(p.csi[i].omega, others).array()).matrix();
}

DeContext evaluate_context(const NetworkProblem &p, const PowerAllocation &a, const SolverConfig &cfg)
{
    const int u = p.num_uts();
    DeContext ctx;
    ctx.ut.resize(u);
    std::vector<Eigen::VectorXd> w(u);
    for (int i = 0; i < u; ++i)
    {
        auto &c = ctx.ut[i];
        c.k_diag = model_npi(p, a, i);
        const auto st = de_fixed_point<double>(p.csi[i].omega, a.lambda[i], c.k_diag, cfg.de_tol, cfg.de_max_iter);
        c.gamma = st.gamma;
        c.gamma_tilde = st.gamma_tilde;
        c.de_iterations = st.iterations;
        c.f_plus = de_rate_plus(st, a.lambda[i], c.k_diag);
        c.f_minus = c.k_diag.array().log().sum();
        ctx.sum_nats += c.f_plus - c.f_minus;
        w[i] = pi_diag(p.csi[i].omega, c.k_diag.cwiseInverse());
    }
    for (int i = 0; i < u; ++i)
    {
        ctx.ut[i].delta = Eigen::VectorXd::Zero(p.total_beams());
        for (int j = 0; j < u; ++j)
            if (j != i && p.visible(j, i))
                ctx.ut[i].delta += w[j];
    }
    return ctx;
}

Eigen::VectorXd delta_gradient(const NetworkProblem &p, const PowerAllocation &a, int target)
{
    Eigen::VectorXd d = Eigen::VectorXd::Zero(p.total_beams());
    for (int j = 0; j < p.num_uts(); ++j)
        if (j != target && p.visible(j, target))
            d += pi_diag(p.csi[j].omega, model_npi(p, a, j).cwiseInverse());
    return d;
}

RhoTerms::Value RhoTerms::evaluate(double x) const
{
    const double g = gamma / (1.0 + gamma * x);
    Value v{g - offset, -g * g, g};
    for (std::size_t i = 0; i < r.size(); ++i)
    {
        const double q = r[i] / (base[i] + r[i] * x);
        v.rho += q;
        v.derivative -= q * q;
        v.positive += q;
    }
    return v;
}

NewtonResult newton_root(const RhoTerms &t, double x0, double x_hi, double tol, int max_iter)
{
    NewtonResult out;
    if (t.evaluate(0.0).rho <= 0.0)
        return out;
    if (t.evaluate(x_hi).rho >= 0.0)
    {
        out.x = x_hi;
        return out;
    }
    double lo = 0.0;
    double hi = x_hi;
    double x = std::clamp(x0, 0.0, x_hi);
    for (int it = 0; it < max_iter; ++it)
    {
        const auto v = t.evaluate(x);
        ++out.iterations;
        const double res = std::abs(v.rho) / v.positive;
        out.residuals.push_back(res);
        if (v.rho > 0.0)
            lo = std::max(lo, x);
        else
            hi = std::min(hi, x);
        if (res <= tol)
        {
            out.x = x;
            return out;
        }
        double next = x - v.rho / v.derivative;
        if (!(next >= lo && next <= hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x)
        {
            out.x = next;
            return out;
        }
        x = next;
    }
    out.bisected = true;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        (t.evaluate(mid).rho > 0.0 ? lo : hi) = mid;
    }
    out.x = 0.5 * (lo + hi);
    return out;
}

Subproblem::Subproblem(const NetworkProblem &p, const DeContext &ctx, const PowerAllocation &start)
    : p_(p), ctx_(ctx), x_(start)
{
    rebuild_denominators();
}

void Subproblem::rebuild_denominators()
{
    denom_.resize(p_.num_uts());
    for (int i = 0; i < p_.num_uts(); ++i)
    {
        Eigen::VectorXd others = Eigen::VectorXd::Zero(p_.total_beams());
        for (int j = 0; j < p_.num_uts(); ++j)
            if (j != i && p_.visible(i, j))
                others += x_.lambda[j];
        denom_[i] = ctx_.ut[i].gamma_tilde.array() + p_.noise(i) + xi_diag(p_.csi[i].omega, others).array();
    }
}

double Subproblem::bs_power(int v) const
{
    return x_.block_power(p_.blocks[v].begin, p_.blocks[v].end);
}

RhoTerms Subproblem::terms(int ut, int m, double mu) const
{
    RhoTerms t;
    t.gamma = ctx_.ut[ut].gamma(m);
    t.offset = ctx_.ut[ut].delta(m) + mu;
    const double x = x_.lambda[ut](m);
    for (const auto &c : p_.columns[m])
    {
        if (c.ut == ut || !p_.visible(c.ut, ut))
            continue;
        t.r.push_back(c.r);
        t.base.push_back(denom_[c.ut](c.row) - c.r * x);
    }
    return t;
}

void Subproblem::set(int ut, int m, double value)
{
    const double diff = value - x_.lambda[ut](m);
    if (diff == 0.0)
        return;
    for (const auto &c : p_.columns[m])
        if (c.ut != ut && p_.visible(c.ut, ut))
            denom_[c.ut](c.row) += c.r * diff;
    x_.lambda[ut](m) = value;
}

Subproblem::SweepStats Subproblem::sweep(int v, double mu, double x_hi, const SolverConfig &cfg)
{
    const auto &b = p_.blocks[v];
    SweepStats st;
    std::vector<int> users;
    for (int m = b.begin; m < b.end; ++m)
    {
        users.clear();
        for (int ut = 0; ut < p_.num_uts(); ++ut)
        {
            if (!p_.mask.permits(ut, v))
                continue;
            if (ctx_.ut[ut].gamma(m) > 0.0)
                users.push_back(ut);
            else
            {
                st.change = std::max(st.change, x_.lambda[ut](m));
                set(ut, m, 0.0);
            }
        }
        if (users.size() == 1)
        {
            const int ut = users.front();
            const double old = x_.lambda[ut](m);
            scratch_ = terms(ut, m, mu);
            const auto at = scratch_.evaluate(old);
            const double res = old > 0.0 && old < x_hi ? std::abs(at.rho) : std::max(0.0, at.rho);
            st.residual = std::max(st.residual, res / at.positive);
            const double next = newton_root(scratch_, old, x_hi, cfg.newton_tol, cfg.newton_max_iter).x;
            st.change = std::max(st.change, std::abs(next - old));
            set(ut, m, next);
        }
        else if (users.size() > 1)
            beam_update(m, users, mu, x_hi, cfg, st);
    }
    return st;
}

namespace
{

// Concave surrogate restricted to the powers of one beam shared by several
// UTs: sum_k log(1 + g_k x_k) + sum_e log(base_e + r_e a_e.x) - sum_k c_k x_k,
// where a_e selects the UTs whose power lands in row e as interference.
struct BeamBlock
{
    Eigen::VectorXd gamma;
    Eigen::VectorXd cost;
    std::vector<double> r;
    std::vector<double> base;
    std::vector<Eigen::VectorXd> sel;

    double value(const Eigen::VectorXd &x) const
    {
        double f = (1.0 + gamma.array() * x.array()).log().sum() - cost.dot(x);
        for (std::size_t e = 0; e < r.size(); ++e)
            f += std::log(base[e] + r[e] * sel[e].dot(x));
        return f;
    }

    void derivatives(const Eigen::VectorXd &x, Eigen::VectorXd &g, Eigen::VectorXd &pos, Eigen::MatrixXd &h) const
    {
        const Eigen::ArrayXd q0 = gamma.array() / (1.0 + gamma.array() * x.array());
        g = (q0 - cost.array()).matrix();
        pos = q0.matrix();
        h = (-q0.square()).matrix().asDiagonal();
        for (std::size_t e = 0; e < r.size(); ++e)
        {
            const double q = r[e] / (base[e] + r[e] * sel[e].dot(x));
            g += q * sel[e];
            pos += q * sel[e];
            h.noalias() -= q * q * sel[e] * sel[e].transpose();
        }
    }
};

double block_residual(const Eigen::VectorXd &x, const Eigen::VectorXd &g, const Eigen::VectorXd &pos, double x_hi)
{
    double res = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k)
    {
        const double r = x(k) > 0.0 && x(k) < x_hi ? std::abs(g(k)) : (x(k) <= 0.0 ? std::max(0.0, g(k))
                                                                                    : std::max(0.0, -g(k)));
        res = std::max(res, r / pos(k));
    }
    return res;
}

} // namespace

void Subproblem::beam_update(int m, const std::vector<int> &users, double mu, double x_hi, const SolverConfig &cfg,
                             SweepStats &st)
{
    const auto n = static_cast<Eigen::Index>(users.size());
    BeamBlock blk;
    blk.gamma.resize(n);
    blk.cost.resize(n);
    Eigen::VectorXd x(n);
    for (Eigen::Index k = 0; k < n; ++k)
    {
        blk.gamma(k) = ctx_.ut[users[k]].gamma(m);
        blk.cost(k) = ctx_.ut[users[k]].delta(m) + mu;
        x(k) = x_.lambda[users[k]](m);
    }
    for (const auto &c : p_.columns[m])
    {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k)
            if (users[k] != c.ut && p_.visible(c.ut, users[k]))
                a(k) = 1.0;
        if (!a.any())
            continue;
        blk.r.push_back(c.r);
        blk.base.push_back(denom_[c.ut](c.row) - c.r * a.dot(x));
        blk.sel.push_back(std::move(a));
    }

    const Eigen::VectorXd start = x;
    Eigen::VectorXd g, pos;
    Eigen::MatrixXd h;
    blk.derivatives(x, g, pos, h);
    st.residual = std::max(st.residual, block_residual(x, g, pos, x_hi));
    double f = blk.value(x);
    for (int it = 0; it < cfg.newton_max_iter; ++it)
    {
        if (block_residual(x, g, pos, x_hi) <= cfg.newton_tol)
            break;
        // Projected Newton with an epsilon-active set; Levenberg damping is
        // added when the projected step fails the Armijo test (near-parallel
        // users make the Hessian close to singular).
        const double eps = 1e-9 * x_hi;
        std::vector<Eigen::Index> free;
        for (Eigen::Index k = 0; k < n; ++k)
            if (!((x(k) <= eps && g(k) <= 0.0) || (x(k) >= x_hi - eps && g(k) >= 0.0)))
                free.push_back(k);
        const auto nf = static_cast<Eigen::Index>(free.size());
        if (nf == 0)
            break;
        Eigen::MatrixXd hf(nf, nf);
        Eigen::VectorXd gf(nf);
        for (Eigen::Index a = 0; a < nf; ++a)
        {
            gf(a) = g(free[a]);
            for (Eigen::Index c = 0; c < nf; ++c)
                hf(a, c) = -h(free[a], free[c]);
        }
        const double scale = hf.diagonal().maxCoeff();
        bool moved = false;
        for (int damp = -1; damp < 16 && !moved; ++damp)
        {
            Eigen::MatrixXd hd = hf;
            if (damp >= 0)
                hd.diagonal().array() += scale * std::pow(10.0, damp - 10);
            const Eigen::VectorXd df = hd.ldlt().solve(gf);
            Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
            for (Eigen::Index a = 0; a < nf; ++a)
                d(free[a]) = df(a);
            double t = 1.0;
            for (int ls = 0; ls < 30; ++ls, t *= 0.5)
            {
                Eigen::VectorXd trial = (x + t * d).cwiseMax(0.0).cwiseMin(x_hi);
                for (Eigen::Index k = 0; k < n; ++k)
                    if (trial(k) <= eps && g(k) <= 0.0)
                        trial(k) = 0.0;
                const double ft = blk.value(trial);
                if (ft > f && ft >= f + 1e-4 * g.dot(trial - x))
                {
                    moved = true;
                    x = trial;
                    f = ft;
                    break;
                }
            }
        }
        if (!moved)
            break;
        blk.derivatives(x, g, pos, h);
    }
    for (Eigen::Index k = 0; k < n; ++k)
    {
        st.change = std::max(st.change, std::abs(x(k) - start(k)));
        set(users[k], m, x(k));
    }
}

double Subproblem::mu_max(int v) const
{
    const auto &b = p_.blocks[v];
    double best = 0.0;
    for (int ut = 0; ut < p_.num_uts(); ++ut)
    {
        if (!p_.mask.permits(ut, v))
            continue;
        for (int m = b.begin; m < b.end; ++m)
        {
            const double g = ctx_.ut[ut].gamma(m);
            if (g <= 0.0)
                continue;
            double s = g - ctx_.ut[ut].delta(m);
            for (const auto &c : p_.columns[m])
                if (c.ut != ut && p_.visible(c.ut, ut))
                    s += c.r / (ctx_.ut[c.ut].gamma_tilde(c.row) + p_.noise(c.ut));
            best = std::max(best, s);
        }
    }
    return best;
}

WaterfillResult Subproblem::waterfill_bs(int v, PowerConstraint mode, const SolverConfig &cfg)
{
    const auto &b = p_.blocks[v];
    const double budget = p_.power(v);
    WaterfillResult res;
    if (budget <= 0.0)
    {
        for (int ut = 0; ut < p_.num_uts(); ++ut)
            for (int m = b.begin; m < b.end; ++m)
                set(ut, m, 0.0);
        return res;
    }
    const double x_hi = 2.0 * budget;
    const double stable = cfg.sweep_tol * budget;
    auto solve_at = [&](double mu) {
        for (int s = 0;; ++s)
        {
            if (s >= cfg.sweep_max_iter)
                throw WaterfillError("water-filling sweeps did not settle at BS " + std::to_string(v) +
                                     ", mu " + std::to_string(mu));
            ++res.sweeps;
            const auto st = sweep(v, mu, x_hi, cfg);
            if (st.change <= stable || st.residual <= cfg.sweep_residual_tol)
                break;
        }
        return bs_power(v);
    };

    double lo = 0.0;
    if (mode == PowerConstraint::equality)
    {
        // below -min delta the first usable beam has unbounded power
        lo = -std::numeric_limits<double>::infinity();
        for (int ut = 0; ut < p_.num_uts(); ++ut)
            if (p_.mask.permits(ut, v))
                for (int m = b.begin; m < b.end; ++m)
                    if (ctx_.ut[ut].gamma(m) > 0.0)
                        lo = std::max(lo, -ctx_.ut[ut].delta(m));
        if (!std::isfinite(lo))
            throw WaterfillError("equality constraint at BS " + std::to_string(v) + " has no usable beam");
    }
    // Bracketed search on mu: p(mu) is nonincreasing, p(mu_max) = 0. Interior
    // points come from false position (Illinois variant) once both ends carry
    // a power value, bisection otherwise.
    double hi = mu_max(v);
    double f_hi = -budget;
    double f_lo = std::numeric_limits<double>::quiet_NaN();
    int side = 0;
    const double mu_floor = 1e-12 * hi;
    bool met = false;
    while (res.bisections < cfg.bisect_max_iter)
    {
        ++res.bisections;
        double mid = 0.5 * (lo + hi);
        if (!std::isnan(f_lo))
        {
            const double fp = lo + (hi - lo) * f_lo / (f_lo - f_hi);
            if (fp > lo && fp < hi)
                mid = fp;
        }
        res.mu = mid;
        res.power = solve_at(mid);
        const double f = res.power - budget;
        if (std::abs(f) <= cfg.bisect_tol)
        {
            met = true;
            break;
        }
        if (f > 0.0)
        {
            lo = mid;
            f_lo = f;
            if (side == 1)
                f_hi *= 0.5;
            side = 1;
        }
        else
        {
            hi = mid;
            f_hi = f;
            if (side == -1 && !std::isnan(f_lo))
                f_lo *= 0.5;
            side = -1;
        }
        if (mode == PowerConstraint::inequality && lo == 0.0 && hi <= mu_floor)
        {
            // mu has been driven to zero with the budget unused: the constraint
            // may be slack. The unconstrained solve starts from a nearby state.
            const double p0 = solve_at(0.0);
            if (p0 <= budget + cfg.bisect_tol)
            {
                res.mu = 0.0;
                res.power = p0;
                met = true;
                break;
            }
            f_lo = p0 - budget;
            res.power = solve_at(hi);
        }
        if (hi - lo <= 1e-15 * std::max(std::abs(hi), std::abs(lo)))
        {
            met = true;
            break;
        }
    }
    if (!met)
    {
        std::ostringstream os;
        os << "bisection on mu at BS " << v << " exhausted: bracket [" << lo << ", " << hi << "], power "
           << res.power << " mW vs budget " << budget << " mW";
        throw WaterfillError(os.str());
    }
    // a positive multiplier needs the full budget; at very low SNR p(mu) is
    // too steep for the bracket to resolve it
    if (res.power > budget || ((mode == PowerConstraint::equality || res.mu > 0.0) &&
                               res.power < budget - cfg.bisect_tol && res.power > 0.0))
        rescale(v, budget);
    res.power = bs_power(v);
    return res;
}

void Subproblem::rescale(int v, double budget)
{
    const auto &b = p_.blocks[v];
    const double f = budget / bs_power(v) * (1.0 - 1e-12);
    for (int ut = 0; ut < p_.num_uts(); ++ut)
        for (int m = b.begin; m < b.end; ++m)
            set(ut, m, x_.lambda[ut](m) * f);
}

double KktReport::worst() const
{
    return std::max({stationarity, zero_beam, slackness, dual, primal, mask});
}

KktReport kkt_residuals(const NetworkProblem &p, const DeContext &ctx, const PowerAllocation &a,
                        const Eigen::VectorXd &mu)
{
    KktReport rep;
    Subproblem sp(p, ctx, a);
    for (int v = 0; v < p.num_cells(); ++v)
    {
        const auto &b = p.blocks[v];
        for (int ut = 0; ut < p.num_uts(); ++ut)
        {
            if (!p.mask.permits(ut, v))
            {
                rep.mask = std::max(rep.mask, a.lambda[ut].segment(b.begin, b.size()).cwiseAbs().maxCoeff());
                continue;
            }
            for (int m = b.begin; m < b.end; ++m)
            {
                if (ctx.ut[ut].gamma(m) <= 0.0)
                    continue;
                const double x = a.lambda[ut](m);
                const auto val = sp.terms(ut, m, mu(v)).evaluate(x);
                if (x > 0.0)
                    rep.stationarity = std::max(rep.stationarity, std::abs(val.rho) / val.positive);
                else
                    rep.zero_beam = std::max(rep.zero_beam, std::max(0.0, val.rho) / val.positive);
            }
        }
        const double used = sp.bs_power(v);
        rep.dual = std::max(rep.dual, std::max(0.0, -mu(v)));
        rep.primal = std::max(rep.primal, std::max(0.0, used - p.power(v)));
        if (mu(v) > 0.0 && p.power(v) > 0.0)
            rep.slackness = std::max(rep.slackness, std::abs(used - p.power(v)) / p.power(v));
    }
    return rep;
}

namespace
{

void check_feasible(const NetworkProblem &p, const PowerAllocation &a)
{
    if (a.num_uts() != p.num_uts())
        throw std::invalid_argument("initial allocation covers the wrong number of UTs");
    for (int i = 0; i < p.num_uts(); ++i)
    {
        if (a.lambda[i].size() != p.total_beams() || (a.lambda[i].array() < 0.0).any())
            throw std::invalid_argument("initial allocation must be nonnegative with M_tot entries");
        for (int v = 0; v < p.num_cells(); ++v)
            if (!p.mask.permits(i, v) && a.lambda[i].segment(p.blocks[v].begin, p.blocks[v].size()).any())
                throw std::invalid_argument("initial allocation violates the strategy mask");
    }
    for (int v = 0; v < p.num_cells(); ++v)
        if (a.block_power(p.blocks[v].begin, p.blocks[v].end) > p.power(v) + 1e-9)
            throw std::invalid_argument("initial allocation exceeds the budget of BS " + std::to_string(v));
}

Eigen::VectorXd bs_powers(const NetworkProblem &p, const PowerAllocation &a)
{
    Eigen::VectorXd out(p.num_cells());
    for (int v = 0; v < p.num_cells(); ++v)
        out(v) = a.block_power(p.blocks[v].begin, p.blocks[v].end);
    return out;
}

PowerAllocation blend(const PowerAllocation &from, const PowerAllocation &to, double t)
{
    PowerAllocation out = from;
    for (std::size_t i = 0; i < out.lambda.size(); ++i)
        out.lambda[i] += t * (to.lambda[i] - from.lambda[i]);
    return out;
}

double max_change(const PowerAllocation &a, const PowerAllocation &b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.lambda.size(); ++i)
        d = std::max(d, (a.lambda[i] - b.lambda[i]).cwiseAbs().maxCoeff());
    return d;
}

} // namespace

SolveResult cccp_solve(const NetworkProblem &p, const SolverConfig &cfg, std::optional<PowerAllocation> initial)
{
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    SolveResult out;
    PowerAllocation alloc = initial ? std::move(*initial) : uniform_allocation(p);
    check_feasible(p, alloc);
    DeContext ctx = evaluate_context(p, alloc, cfg);
    out.mu = Eigen::VectorXd::Zero(p.num_cells());

    TraceEntry first;
    first.sum_rate_bits = nats_to_bits(ctx.sum_nats);
    first.bs_power = bs_powers(p, alloc);
    first.mu = out.mu;
    first.step = 0.0;
    out.trace.entries.push_back(first);

    const double pass_tol = cfg.pass_tol * std::max(p.power.maxCoeff(), 1e-300);
    for (int it = 1; it <= cfg.cccp_max_iter; ++it)
    {
        Subproblem sp(p, ctx, alloc);
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(p.num_cells());
        for (int pass = 0; pass < cfg.bs_pass_max_iter; ++pass)
        {
            const PowerAllocation before = sp.allocation();
            for (int v = 0; v < p.num_cells(); ++v)
            {
                try
                {
                    mu(v) = sp.waterfill_bs(v, PowerConstraint::inequality, cfg).mu;
                }
                catch (const WaterfillError &e)
                {
                    throw WaterfillError("CCCP iteration " + std::to_string(it) + ": " + e.what());
                }
            }
            if (p.num_cells() == 1 || max_change(before, sp.allocation()) <= pass_tol)
                break;
        }
        const PowerAllocation &full = sp.allocation();

        TraceEntry e;
        e.iteration = it;
        e.kkt = kkt_residuals(p, ctx, full, mu);
        PowerAllocation cand = full;
        DeContext cctx = evaluate_context(p, cand, cfg);
        const double floor = ctx.sum_nats - cfg.monotone_tol * std::abs(ctx.sum_nats);
        while (cctx.sum_nats < floor && e.backtracks < cfg.max_backtracks)
        {
            ++e.backtracks;
            e.step *= 0.5;
            cand = blend(alloc, full, e.step);
            cctx = evaluate_context(p, cand, cfg);
        }
        if (cctx.sum_nats < floor)
        {
            // No ascent along the surrogate direction: the iterate is stationary.
            out.trace.converged = true;
            break;
        }
        const double rel = std::abs(cctx.sum_nats - ctx.sum_nats) / std::max(std::abs(ctx.sum_nats), 1e-300);
        alloc = std::move(cand);
        ctx = std::move(cctx);
        out.mu = mu;
        out.kkt = e.kkt;
        e.sum_rate_bits = nats_to_bits(ctx.sum_nats);
        e.bs_power = bs_powers(p, alloc);
        e.mu = mu;
        e.wall_time_s = std::chrono::duration<double>(clock::now() - t0).count();
        out.trace.entries.push_back(e);
        if (rel < cfg.cccp_tol)
        {
            out.trace.converged = true;
            break;
        }
    }
    out.allocation = std::move(alloc);
    return out;
}

Eigen::VectorXd single_ut_closed_form(const Eigen::VectorXd &gamma, const Eigen::VectorXd &delta,
                                      const Eigen::VectorXd &power, std::span<const BeamRange> blocks,
                                      Eigen::VectorXd *mu_out)
{
    if (gamma.size() != delta.size() || power.size() != static_cast<Eigen::Index>(blocks.size()))
        throw std::invalid_argument("single_ut_closed_form: dimension mismatch");
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(gamma.size());
    Eigen::VectorXd mus = Eigen::VectorXd::Zero(power.size());
    for (std::size_t v = 0; v < blocks.size(); ++v)
    {
        const auto &b = blocks[v];
        if (power(v) <= 0.0)
            continue;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int m = b.begin; m < b.end; ++m)
            if (gamma(m) > 0.0)
            {
                lo = std::max(lo, -delta(m));
                hi = std::max(hi, gamma(m) - delta(m));
            }
        if (!std::isfinite(lo))
            continue;
        auto fill = [&](double mu) {
            double s = 0.0;
            for (int m = b.begin; m < b.end; ++m)
            {
                lambda(m) = gamma(m) > 0.0 ? std::max(0.0, 1.0 / (delta(m) + mu) - 1.0 / gamma(m)) : 0.0;
                s += lambda(m);
            }
            return s;
        };
        for (int it = 0; it < 2000; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi)
                break;
            (fill(mid) > power(v) ? lo : hi) = mid;
        }
        mus(v) = hi;
        fill(hi);
    }
    if (mu_out)
        *mu_out = mus;
    return lambda;
}

} // namespace nmimo
