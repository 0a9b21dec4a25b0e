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

#ifndef NMIMO_RATE_HPP
#define NMIMO_RATE_HPP

#include "nmimo/channel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmimo
{

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

constexpr double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

/// Diagonal of E{G diag(x) G^H}: out[n] = sum_m Omega[n,m] x[m].
template <typename Derived, typename VDerived>
auto xi_diag(const Eigen::MatrixBase<Derived> &omega, const Eigen::MatrixBase<VDerived> &x)
{
    if (omega.cols() != x.size())
        throw std::invalid_argument("xi_diag: Omega has " + std::to_string(omega.cols()) +
                                    " columns, x has " + std::to_string(x.size()) + " entries");
    return (omega * x).eval();
}

/// Diagonal of E{G^H diag(y) G}: out[m] = sum_n Omega[n,m] y[n].
template <typename Derived, typename VDerived>
auto pi_diag(const Eigen::MatrixBase<Derived> &omega, const Eigen::MatrixBase<VDerived> &y)
{
    if (omega.rows() != y.size())
        throw std::invalid_argument("pi_diag: Omega has " + std::to_string(omega.rows()) +
                                    " rows, y has " + std::to_string(y.size()) + " entries");
    return (omega.transpose() * y).eval();
}

/// log det of a Hermitian positive definite matrix via Cholesky.
template <typename Derived>
typename Derived::RealScalar log_det_hpd(const Eigen::MatrixBase<Derived> &a)
{
    using Real = typename Derived::RealScalar;
    Eigen::LLT<typename Derived::PlainObject> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("log_det_hpd: matrix is not positive definite");
    Real s(0);
    const auto &l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i)
        s += std::log(std::real(l(i, i)));
    return Real(2) * s;
}

class DeConvergenceError : public std::runtime_error
{
  public:
    DeConvergenceError(int iterations, double residual)
        : std::runtime_error("deterministic-equivalent fixed point did not converge after " +
                             std::to_string(iterations) + " iterations (residual " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}
    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

  private:
    int iterations_;
    double residual_;
};

/// Converged deterministic-equivalent quantities of one UT. All of them are
/// diagonal matrices in the underlying model and are kept as vectors.
template <typename Scalar>
struct DeStateT
{
    Vec<Scalar> phi;         // M_tot, >= 1
    Vec<Scalar> phi_tilde;   // N, >= 1
    Vec<Scalar> gamma;       // M_tot
    Vec<Scalar> gamma_tilde; // N
    Vec<Scalar> k_diag;      // N
    int iterations = 0;
    std::vector<double> residuals; // max relative change of phi_tilde per iteration
};

using DeState = DeStateT<double>;

/// Solves phi_tilde = 1 + Xi(lambda / phi) / k, phi = 1 + lambda Pi(1 / (phi_tilde k))
/// by alternating updates from phi_tilde = 1. Stops when the largest relative
/// change of phi_tilde drops below `tol`; throws DeConvergenceError otherwise.
template <typename Scalar>
DeStateT<Scalar> de_fixed_point(const Mat<Scalar> &omega, const Vec<Scalar> &lambda, const Vec<Scalar> &k_diag,
                                Scalar tol, int max_iter)
{
    const Eigen::Index n = omega.rows();
    const Eigen::Index m = omega.cols();
    if (lambda.size() != m || k_diag.size() != n)
        throw std::invalid_argument("de_fixed_point: dimension mismatch");
    if ((k_diag.array() <= Scalar(0)).any())
        throw std::invalid_argument("de_fixed_point: k_diag must be positive");
    if ((lambda.array() < Scalar(0)).any())
        throw std::invalid_argument("de_fixed_point: lambda must be nonnegative");

    // Only powered columns enter the coupled iteration.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < m; ++j)
        if (lambda(j) > Scalar(0) && omega.col(j).any())
            active.push_back(j);
    const auto na = static_cast<Eigen::Index>(active.size());
    Mat<Scalar> om(n, na);
    Vec<Scalar> lam(na);
    for (Eigen::Index a = 0; a < na; ++a)
    {
        om.col(a) = omega.col(active[a]);
        lam(a) = lambda(active[a]);
    }

    DeStateT<Scalar> s;
    s.k_diag = k_diag;
    Vec<Scalar> phi_t = Vec<Scalar>::Ones(n);
    Vec<Scalar> phi_a = Vec<Scalar>::Ones(na);
    bool converged = na == 0;
    int it = 0;
    while (!converged)
    {
        if (it >= max_iter)
            throw DeConvergenceError(it, s.residuals.empty() ? 0.0 : s.residuals.back());
        ++it;
        const Vec<Scalar> inv_tk = (phi_t.array() * k_diag.array()).inverse().matrix();
        phi_a = (Scalar(1) + lam.array() * (om.transpose() * inv_tk).array()).matrix();
        const Vec<Scalar> next = (Scalar(1) + (om * (lam.array() / phi_a.array()).matrix()).array() /
                                                  k_diag.array()).matrix();
        const Scalar res = ((next - phi_t).array().abs() / next.array()).maxCoeff();
        s.residuals.push_back(static_cast<double>(res));
        phi_t = next;
        converged = res < tol;
    }
    s.iterations = it;

    // Close the loop so phi, gamma and gamma_tilde correspond to the final phi_tilde.
    const Vec<Scalar> inv_tk = (phi_t.array() * k_diag.array()).inverse().matrix();
    s.gamma = pi_diag(omega, inv_tk);
    s.phi = (Scalar(1) + lambda.array() * s.gamma.array()).matrix();
    s.gamma_tilde = xi_diag(omega, (lambda.array() / s.phi.array()).matrix());
    s.phi_tilde = (Scalar(1) + s.gamma_tilde.array() / k_diag.array()).matrix();
    return s;
}

/// DE of E{log det(K + G Lambda G^H)} in nats:
/// sum log(1 + gamma lambda) + sum log(gamma_tilde + k) - sum (1 - 1/phi_tilde).
template <typename Scalar>
Scalar de_rate_plus(const DeStateT<Scalar> &s, const Vec<Scalar> &lambda, const Vec<Scalar> &k_diag)
{
    if (lambda.size() != s.gamma.size() || k_diag.size() != s.gamma_tilde.size())
        throw std::invalid_argument("de_rate_plus: dimension mismatch");
    const Scalar a = (Scalar(1) + s.gamma.array() * lambda.array()).log().sum();
    const Scalar b = (s.gamma_tilde.array() + k_diag.array()).log().sum();
    const Scalar c = (Scalar(1) - s.phi_tilde.array().inverse()).sum();
    return a + b - c;
}

/// Per-UT diagonal beam powers; lambda[ut] has length M_tot (mW per beam).
struct PowerAllocation
{
    std::vector<Eigen::VectorXd> lambda;

    PowerAllocation() = default;
    PowerAllocation(int num_uts, int total_beams) : lambda(num_uts, Eigen::VectorXd::Zero(total_beams)) {}

    int num_uts() const { return static_cast<int>(lambda.size()); }
    /// sum over UTs of lambda (per-beam total transmit power)
    Eigen::VectorXd beam_totals() const;
    double block_power(int begin, int end) const;
};

/// Noise variance per UT (mW); uniform sigma^2 unless impairments add to it.
using NoiseVector = Eigen::VectorXd;

/// NPI diagonal seen by `ut`: sigma^2 + Xi(Omega_ut, sum of other UTs' lambda).
Eigen::VectorXd npi_diag(std::span<const BeamCsi> csi, const PowerAllocation &alloc, int ut, double sigma2);

struct UtRate
{
    double f_plus = 0.0;  // nats
    double f_minus = 0.0; // nats
    double rate() const { return f_plus - f_minus; }
};

struct SumRate
{
    std::vector<UtRate> per_ut;
    double sum_nats = 0.0;
    double sum_bits() const { return nats_to_bits(sum_nats); }
};

struct DeOptions
{
    double tol = 1e-11;
    int max_iter = 200000;
};

/// Deterministic-equivalent network sum-rate; f_minus = sum log k_diag.
SumRate de_sum_rate(std::span<const BeamCsi> csi, const PowerAllocation &alloc, const NoiseVector &noise,
                    const DeOptions &opt = {});

/// Monte-Carlo ergodic sum-rate with Gaussianised NPI. UT i draws from the
/// stream {seed, i}; only powered beams with nonzero coupling are sampled.
SumRate mc_sum_rate(std::span<const BeamCsi> csi, const PowerAllocation &alloc, const NoiseVector &noise,
                    int n_samples, std::uint64_t seed);

inline NoiseVector uniform_noise(int num_uts, double sigma2) { return NoiseVector::Constant(num_uts, sigma2); }

} // namespace nmimo

#endif
