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

#include "nmimo/random.hpp"

namespace nmimo
{

Eigen::VectorXd PowerAllocation::beam_totals() const
{
    Eigen::VectorXd t = Eigen::VectorXd::Zero(lambda.empty() ? 0 : lambda.front().size());
    for (const auto &l : lambda)
        t += l;
    return t;
}

double PowerAllocation::block_power(int begin, int end) const
{
    double s = 0.0;
    for (const auto &l : lambda)
        s += l.segment(begin, end - begin).sum();
    return s;
}

namespace
{

void check_shapes(std::span<const BeamCsi> csi, const PowerAllocation &alloc, const NoiseVector &noise)
{
    if (static_cast<int>(csi.size()) != alloc.num_uts() || noise.size() != alloc.num_uts())
        throw std::invalid_argument("CSI, allocation and noise must cover the same UTs");
    for (std::size_t i = 0; i < csi.size(); ++i)
        if (csi[i].cols() != alloc.lambda[i].size())
            throw std::invalid_argument("allocation length differs from M_tot for UT " + std::to_string(i));
}

} // namespace

Eigen::VectorXd npi_diag(std::span<const BeamCsi> csi, const PowerAllocation &alloc, int ut, double sigma2)
{
    const Eigen::VectorXd others = alloc.beam_totals() - alloc.lambda.at(ut);
    return (sigma2 + xi_diag(csi[ut].omega, others).array()).matrix();
}

SumRate de_sum_rate(std::span<const BeamCsi> csi, const PowerAllocation &alloc, const NoiseVector &noise,
                    const DeOptions &opt)
{
    check_shapes(csi, alloc, noise);
    const Eigen::VectorXd totals = alloc.beam_totals();
    SumRate out;
    for (std::size_t i = 0; i < csi.size(); ++i)
    {
        const Eigen::VectorXd k = (noise(i) + xi_diag(csi[i].omega, totals - alloc.lambda[i]).array()).matrix();
        const auto st = de_fixed_point<double>(csi[i].omega, alloc.lambda[i], k, opt.tol, opt.max_iter);
        UtRate r;
        r.f_plus = de_rate_plus(st, alloc.lambda[i], k);
        r.f_minus = k.array().log().sum();
        out.per_ut.push_back(r);
        out.sum_nats += r.rate();
    }
    return out;
}

SumRate mc_sum_rate(std::span<const BeamCsi> csi, const PowerAllocation &alloc, const NoiseVector &noise,
                    int n_samples, std::uint64_t seed)
{
    check_shapes(csi, alloc, noise);
    if (n_samples < 1)
        throw std::invalid_argument("mc_sum_rate: n_samples must be >= 1");
    const Eigen::VectorXd totals = alloc.beam_totals();
    SumRate out;
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < csi.size(); ++i)
    {
        const auto &om = csi[i].omega;
        const Eigen::VectorXd k = (noise(i) + xi_diag(om, totals - alloc.lambda[i]).array()).matrix();
        UtRate r;
        r.f_minus = k.array().log().sum();

        std::vector<Eigen::Index> active;
        for (Eigen::Index m = 0; m < om.cols(); ++m)
            if (alloc.lambda[i](m) > 0.0 && om.col(m).any())
                active.push_back(m);
        if (active.empty())
        {
            r.f_plus = r.f_minus;
            out.per_ut.push_back(r);
            continue;
        }

        // A = K^{-1/2} G Lambda^{1/2} has independent CN(0, Omega lambda / k) entries.
        const Eigen::Index n = om.rows();
        const auto na = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd scale(n, na);
        for (Eigen::Index a = 0; a < na; ++a)
            scale.col(a) = (0.5 * om.col(active[a]).array() * alloc.lambda[i](active[a]) / k.array()).sqrt();

        auto rng = make_rng(seed, {static_cast<std::uint64_t>(i)});
        Eigen::MatrixXcd a_mat(n, na);
        Eigen::MatrixXcd gram(n, n);
        double acc = 0.0;
        for (int s = 0; s < n_samples; ++s)
        {
            for (Eigen::Index c = 0; c < na; ++c)
                for (Eigen::Index row = 0; row < n; ++row)
                {
                    const double sc = scale(row, c);
                    if (sc == 0.0)
                    {
                        a_mat(row, c) = 0.0;
                        continue;
                    }
                    const double re = g(rng);
                    const double im = g(rng);
                    a_mat(row, c) = {sc * re, sc * im};
                }
            gram.setIdentity();
            gram.selfadjointView<Eigen::Lower>().rankUpdate(a_mat);
            acc += log_det_hpd(gram.selfadjointView<Eigen::Lower>().toDenseMatrix());
        }
        r.f_plus = r.f_minus + acc / n_samples;
        out.per_ut.push_back(r);
        out.sum_nats += r.rate();
    }
    return out;
}

} // namespace nmimo
