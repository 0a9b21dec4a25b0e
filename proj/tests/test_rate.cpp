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

#include "nmimo/rate.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

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

} // namespace

TEST_CASE("Xi and Pi diagonals")
{
    Eigen::MatrixXd om = Eigen::MatrixXd::Zero(4, 6);
    om(2, 5) = 3.0;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
    x(5) = 2.0;
    CHECK(xi_diag(om, x)(2) == 6.0);
    CHECK(xi_diag(om, Eigen::VectorXd::Zero(6)).isZero());

    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(5, 7, [&] { return u(rng); });
    const Eigen::VectorXd xs = Eigen::VectorXd::NullaryExpr(7, [&] { return u(rng); });
    const Eigen::VectorXd ys = Eigen::VectorXd::NullaryExpr(5, [&] { return u(rng); });
    CHECK(xi_diag(a, Eigen::VectorXd::Ones(7)).isApprox(a.rowwise().sum()));
    CHECK(pi_diag(a, Eigen::VectorXd::Ones(5)).isApprox(a.colwise().sum().transpose()));
    CHECK_THAT(ys.dot(xi_diag(a, xs)), WithinRel(xs.dot(pi_diag(a, ys)), 1e-13));
    CHECK(pi_diag(Eigen::MatrixXd::Zero(5, 7), ys).isZero());
    CHECK_THROWS_AS(xi_diag(a, ys), std::invalid_argument);
    CHECK_THROWS_AS(pi_diag(a, xs), std::invalid_argument);
}

TEST_CASE("log det via Cholesky")
{
    Eigen::MatrixXcd g(3, 3);
    g << std::complex<double>(1, 2), 0.5, std::complex<double>(0, -1), 0.2, 2.0, std::complex<double>(0.3, 0.1), 0.0,
        std::complex<double>(-1, 1), 1.5;
    const Eigen::MatrixXcd q = Eigen::MatrixXcd::Identity(3, 3) + g * g.adjoint();
    CHECK_THAT(log_det_hpd(q), WithinRel(std::log(q.determinant().real()), 1e-12));
    CHECK_THROWS_AS(log_det_hpd(Eigen::MatrixXd::Zero(2, 2)), std::domain_error);
}

TEST_CASE("NPI diagonal")
{
    std::vector<BeamCsi> one{csi_of(Eigen::MatrixXd::Ones(2, 3))};
    PowerAllocation a1(1, 3);
    a1.lambda[0] << 1.0, 2.0, 3.0;
    CHECK(npi_diag(one, a1, 0, 0.1).isApprox(Eigen::VectorXd::Constant(2, 0.1)));

    Eigen::MatrixXd o0(2, 2), o1(2, 2);
    o0 << 1.0, 2.0, 0.5, 0.0;
    o1 << 0.0, 1.0, 1.0, 1.0;
    std::vector<BeamCsi> two{csi_of(o0), csi_of(o1)};
    PowerAllocation a(2, 2);
    a.lambda[0] << 0.3, 0.7;
    a.lambda[1] << 0.4, 0.6;
    const auto k0 = npi_diag(two, a, 0, 0.01);
    CHECK_THAT(k0(0), WithinAbs(0.01 + 1.0 * 0.4 + 2.0 * 0.6, 1e-15));
    CHECK_THAT(k0(1), WithinAbs(0.01 + 0.5 * 0.4, 1e-15));
    const auto k1 = npi_diag(two, a, 1, 0.01);
    CHECK_THAT(k1(0), WithinAbs(0.01 + 0.7, 1e-15));
    CHECK_THAT(k1(1), WithinAbs(0.01 + 0.3 + 0.7, 1e-15));
    PowerAllocation z(2, 2);
    CHECK(npi_diag(two, z, 0, 0.01).isApprox(Eigen::VectorXd::Constant(2, 0.01)));
}

TEST_CASE("DE fixed point at zero power and zero coupling")
{
    Eigen::MatrixXd om(2, 3);
    om << 1.0, 0.0, 2.0, 0.5, 3.0, 0.0;
    const Eigen::VectorXd k = Eigen::Vector2d(0.5, 2.0);
    const auto s = de_fixed_point<double>(om, Eigen::VectorXd::Zero(3), k, 1e-12, 100);
    CHECK(s.phi.isApprox(Eigen::VectorXd::Ones(3)));
    CHECK(s.phi_tilde.isApprox(Eigen::VectorXd::Ones(2)));
    CHECK(s.gamma.isApprox(pi_diag(om, k.cwiseInverse())));
    CHECK(s.gamma_tilde.isZero());
    CHECK_THAT(de_rate_plus(s, Eigen::VectorXd(Eigen::VectorXd::Zero(3)), k), WithinAbs(k.array().log().sum(), 1e-15));

    const auto z = de_fixed_point<double>(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Ones(3), k, 1e-12, 100);
    CHECK(z.phi.isApprox(Eigen::VectorXd::Ones(3)));
    CHECK(z.phi_tilde.isApprox(Eigen::VectorXd::Ones(2)));
}

TEST_CASE("scalar DE matches the quadratic root")
{
    for (double s : {0.01, 1.0, 37.0, 1e4})
    {
        const double omega = 2.0, k = 0.5, lambda = s * k / omega;
        const auto st = de_fixed_point<double>(Eigen::MatrixXd::Constant(1, 1, omega),
                                               Eigen::VectorXd::Constant(1, lambda), Eigen::VectorXd::Constant(1, k),
                                               1e-14, 100000);
        const double phi = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * s));
        CHECK_THAT(st.phi(0), WithinRel(phi, 1e-10));
        CHECK_THAT(st.phi_tilde(0), WithinRel(phi, 1e-10));
        const double rate = de_rate_plus(st, Eigen::VectorXd(Eigen::VectorXd::Constant(1, lambda)),
                                         Eigen::VectorXd(Eigen::VectorXd::Constant(1, k))) -
                            std::log(k);
        CHECK_THAT(rate, WithinRel(2.0 * std::log(phi) - (1.0 - 1.0 / phi), 1e-9));
    }
}

TEST_CASE("DE fixed point is generic in the scalar type")
{
    Eigen::MatrixXd om(3, 2);
    om << 1.0, 0.2, 0.0, 3.0, 0.7, 0.7;
    const Eigen::VectorXd lam = Eigen::Vector2d(1.5, 0.25);
    const Eigen::VectorXd k = Eigen::Vector3d(0.1, 0.2, 0.3);
    const auto d = de_fixed_point<double>(om, lam, k, 1e-13, 10000);
    const auto l = de_fixed_point<long double>(om.cast<long double>(), lam.cast<long double>(), k.cast<long double>(),
                                               1e-16L, 10000);
    CHECK(d.phi_tilde.isApprox(l.phi_tilde.cast<double>(), 1e-11));
    CHECK(d.gamma.isApprox(l.gamma.cast<double>(), 1e-11));
    CHECK_THROWS_AS(de_fixed_point<double>(om, lam, k, 1e-13, 1), DeConvergenceError);
}

TEST_CASE("MC rate: scalar exponential-integral oracle")
{
    std::vector<BeamCsi> one{csi_of(Eigen::MatrixXd::Constant(1, 1, 1.0))};
    PowerAllocation a(1, 1);
    a.lambda[0](0) = 0.5;
    const NoiseVector noise = uniform_noise(1, 0.5);
    const double e1 = -std::expint(-1.0);
    const double oracle = std::exp(1.0) * e1 / std::numbers::ln2;
    CHECK_THAT(oracle, WithinAbs(0.8603, 1e-3));
    const auto mc = mc_sum_rate(one, a, noise, 100000, 9);
    CHECK_THAT(mc.sum_bits(), WithinRel(oracle, 0.02));
    CHECK(mc_sum_rate(one, a, noise, 1000, 9).sum_nats == mc_sum_rate(one, a, noise, 1000, 9).sum_nats);
}

TEST_CASE("zero power gives zero rate")
{
    Eigen::MatrixXd om(2, 2);
    om << 1.0, 2.0, 0.5, 0.1;
    std::vector<BeamCsi> csi{csi_of(om), csi_of(om.transpose())};
    PowerAllocation z(2, 2);
    const NoiseVector n = uniform_noise(2, 1e-3);
    CHECK(de_sum_rate(csi, z, n).sum_nats == 0.0);
    CHECK(mc_sum_rate(csi, z, n, 100, 1).sum_nats == 0.0);
}

TEST_CASE("DE tracks MC on a small multi-beam instance")
{
    Rng rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<BeamCsi> csi;
    for (int i = 0; i < 2; ++i)
        csi.push_back(csi_of(Eigen::MatrixXd::NullaryExpr(8, 12, [&] { return u(rng); })));
    PowerAllocation a(2, 12);
    a.lambda[0].head(6).setConstant(1.0);
    a.lambda[1].tail(6).setConstant(1.0);
    const NoiseVector n = uniform_noise(2, 0.1);
    const double de = de_sum_rate(csi, a, n).sum_bits();
    const double mc = mc_sum_rate(csi, a, n, 5000, 3).sum_bits();
    CHECK_THAT(de, WithinRel(mc, 0.03));
    CHECK_THROWS_AS(de_sum_rate(csi, a, uniform_noise(3, 0.1)), std::invalid_argument);
}
