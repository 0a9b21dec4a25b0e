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

#ifndef NMIMO_SOLVER_CONFIG_HPP
#define NMIMO_SOLVER_CONFIG_HPP

namespace nmimo
{

enum class StrategyMode
{
    network,     // every BS may serve every UT
    coordinated, // own-cell service, network-wide interference awareness
    single_cell  // own-cell service, own-cell interference awareness only
};

const char *to_string(StrategyMode m);
StrategyMode parse_strategy(const char *text);

enum class PowerConstraint
{
    inequality, // sum <= P_v, slack allowed (mu_v = 0)
    equality    // sum == P_v, mu_v may go negative
};

struct SolverConfig
{
    double cccp_tol = 1e-6;      // relative sum-rate change
    int cccp_max_iter = 200;
    double de_tol = 1e-11;       // max relative change of phi_tilde
    int de_max_iter = 200000;
    double newton_tol = 1e-12;   // relative stationarity residual
    int newton_max_iter = 100;
    double bisect_tol = 1e-6;    // epsilon, mW
    int bisect_max_iter = 200;
    double sweep_tol = 1e-11;    // Gauss-Seidel stop on the largest update, relative to P_v
    double sweep_residual_tol = 1e-10; // or on the largest relative stationarity residual
    int sweep_max_iter = 2000;
    double pass_tol = 1e-7;      // stop passes over BSs, largest update relative to max P_v
    int bs_pass_max_iter = 100;  // water-filling passes over all BSs per CCCP step
    double monotone_tol = 1e-9;  // allowed relative decrease before backtracking
    int max_backtracks = 40;
    StrategyMode strategy = StrategyMode::network;
};

} // namespace nmimo

#endif
