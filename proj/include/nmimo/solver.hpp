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

#ifndef NMIMO_SOLVER_HPP
#define NMIMO_SOLVER_HPP

#include "nmimo/channel.hpp"
#include "nmimo/rate.hpp"
#include "nmimo/scenario.hpp"
#include "nmimo/solver_config.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmimo
{

/// Permitted BS blocks per UT.
struct StrategyMask
{
    std::vector<std::vector<char>> allowed; // [ut][bs]

    bool permits(int ut, int bs) const { return allowed[ut][bs] != 0; }
};

StrategyMask apply_strategy_mask(StrategyMode mode, std::span<const int> serving_cell, int num_cells);

/// One nonzero entry Omega_ut[row, m] of a beam column m.
struct Coupling
{
    int ut;
    int row;
    double r;
};

/// Everything the solver reads: statistical CSI, per-BS budgets, noise and
/// the strategy. Built once per drop by make_problem.
struct NetworkProblem
{
    std::vector<BeamCsi> csi;
    std::vector<int> serving_cell;
    std::vector<BeamRange> blocks;
    Eigen::VectorXd power;  // P_v, mW
    NoiseVector noise;      // per-UT sigma^2, mW
    StrategyMode strategy = StrategyMode::network;
    StrategyMask mask;
    std::vector<std::vector<Coupling>> columns; // nonzeros of every beam column over all UTs

    int num_uts() const { return static_cast<int>(csi.size()); }
    int num_cells() const { return static_cast<int>(blocks.size()); }
    int total_beams() const { return blocks.empty() ? 0 : blocks.back().end; }
    int bs_of_beam(int m) const;
    /// Whether UT j's transmissions enter UT i's NPI in the solver's model.
    /// single_cell only accounts for same-cell UTs.
    bool visible(int i, int j) const
    {
        return strategy != StrategyMode::single_cell || serving_cell[i] == serving_cell[j];
    }
};

NetworkProblem make_problem(std::vector<BeamCsi> csi, std::vector<int> serving_cell, std::vector<BeamRange> blocks,
                            Eigen::VectorXd power, NoiseVector noise, StrategyMode strategy);

NetworkProblem make_problem(const ChannelDrop &drop, const ScenarioConfig &c);

/// Same problem under another strategy.
NetworkProblem with_strategy(const NetworkProblem &p, StrategyMode strategy);

/// Uniform split of P_v over permitted UTs and the beams of C_v.
PowerAllocation uniform_allocation(const NetworkProblem &p);

/// DE quantities frozen at a CCCP iterate.
struct UtContext
{
    Eigen::VectorXd gamma;       // M_tot
    Eigen::VectorXd gamma_tilde; // N
    Eigen::VectorXd delta;       // M_tot
    Eigen::VectorXd k_diag;      // N
    double f_plus = 0.0;
    double f_minus = 0.0;
    int de_iterations = 0;
};

struct DeContext
{
    std::vector<UtContext> ut;
    double sum_nats = 0.0;
};

/// NPI diagonal of UT i under the problem's visibility rule.
Eigen::VectorXd model_npi(const NetworkProblem &p, const PowerAllocation &a, int i);

/// Per-UT DE fixed points, Gamma, Gamma_tilde, Delta and the DE sum-rate
/// (in the solver's interference model).
DeContext evaluate_context(const NetworkProblem &p, const PowerAllocation &a, const SolverConfig &cfg);

/// Delta_{target}[t] = sum over visible (i,j) != target of
/// sum_n Omega_ij[n,t] / (sigma^2 + Omega_ij[n,:] . Lambda_without_ij).
Eigen::VectorXd delta_gradient(const NetworkProblem &p, const PowerAllocation &a, int target);

/// The scalar stationarity function of one variable x = lambda_{k,u,m}:
/// rho(x) = gamma/(1 + gamma x) + sum r/(base + r x) - offset, offset = delta + mu.
struct RhoTerms
{
    double gamma = 0.0;
    double offset = 0.0;
    std::vector<double> r;
    std::vector<double> base;

    struct Value
    {
        double rho;
        double derivative;
        double positive; // sum of the positive terms, for relative tests
    };
    Value evaluate(double x) const;
};

struct NewtonResult
{
    double x = 0.0;
    int iterations = 0;
    bool bisected = false;
    std::vector<double> residuals;
};

/// Root of rho on [0, x_hi]: 0 if rho(0) <= 0, x_hi if rho(x_hi) > 0.
/// Newton steps land left of the root (rho is convex and decreasing), so the
/// iteration is monotone after the first step; bisection is the fallback.
NewtonResult newton_root(const RhoTerms &t, double x0, double x_hi, double tol, int max_iter);

class WaterfillError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct WaterfillResult
{
    double mu = 0.0;
    double power = 0.0;
    int bisections = 0;
    int sweeps = 0;
};

/// Working state of one CCCP subproblem: interference denominators
/// gamma_tilde + sigma^2 + Omega_i[n,:] . (Lambda_total - Lambda_i) for every UT.
class Subproblem
{
  public:
    Subproblem(const NetworkProblem &p, const DeContext &ctx, const PowerAllocation &start);

    /// Water-filling for BS v (all other blocks held fixed).
    WaterfillResult waterfill_bs(int v, PowerConstraint mode, const SolverConfig &cfg);

    /// rho terms of variable (ut, m) at the current state, offset = delta + mu.
    RhoTerms terms(int ut, int m, double mu) const;

    const PowerAllocation &allocation() const { return x_; }
    double bs_power(int v) const;

  private:
    struct SweepStats
    {
        double change = 0.0;   // largest update
        double residual = 0.0; // largest relative stationarity residual before the update
    };
    SweepStats sweep(int v, double mu, double x_hi, const SolverConfig &cfg);
    void beam_update(int m, const std::vector<int> &users, double mu, double x_hi, const SolverConfig &cfg,
                     SweepStats &st);
    void set(int ut, int m, double value);
    void rescale(int v, double budget);
    void rebuild_denominators();
    double mu_max(int v) const;

    const NetworkProblem &p_;
    const DeContext &ctx_;
    PowerAllocation x_;
    std::vector<Eigen::VectorXd> denom_;
    RhoTerms scratch_;
};

struct KktReport
{
    double stationarity = 0.0; // max relative |rho| over active beams
    double zero_beam = 0.0;    // max relative positive rho(0) over inactive beams
    double slackness = 0.0;    // max |mu_v (p_v - P_v)| / (mu_v P_v)
    double dual = 0.0;         // max negative part of mu_v
    double primal = 0.0;       // max excess p_v - P_v, mW
    double mask = 0.0;         // max |lambda| outside permitted blocks

    double worst() const;
};

KktReport kkt_residuals(const NetworkProblem &p, const DeContext &ctx, const PowerAllocation &a,
                        const Eigen::VectorXd &mu);

struct TraceEntry
{
    int iteration = 0;
    double sum_rate_bits = 0.0;
    Eigen::VectorXd bs_power;
    Eigen::VectorXd mu;
    KktReport kkt;
    double step = 1.0; // line-search factor accepted
    int backtracks = 0;
    double wall_time_s = 0.0;
};

struct SolveTrace
{
    std::vector<TraceEntry> entries;
    bool converged = false;
};

struct SolveResult
{
    PowerAllocation allocation;
    SolveTrace trace;
    KktReport kkt;
    Eigen::VectorXd mu;
};

/// CCCP on the DE sum-rate. Each iteration freezes Gamma, Gamma_tilde and
/// Delta at the iterate, solves the concave surrogate by per-BS water-filling
/// (passes over all BSs until stable) and accepts the step, halving it while
/// the DE sum-rate would decrease.
SolveResult cccp_solve(const NetworkProblem &p, const SolverConfig &cfg,
                       std::optional<PowerAllocation> initial = std::nullopt);

/// lambda_m = [1/(delta_m + mu_v) - 1/gamma_m]^+ on each block, mu_v set by
/// bisection so the block sums to P_v exactly.
Eigen::VectorXd single_ut_closed_form(const Eigen::VectorXd &gamma, const Eigen::VectorXd &delta,
                                      const Eigen::VectorXd &power, std::span<const BeamRange> blocks,
                                      Eigen::VectorXd *mu_out = nullptr);

} // namespace nmimo

#endif
