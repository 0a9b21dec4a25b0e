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

#include "nmimo/io.hpp"
#include "nmimo/solver.hpp"

#include <catch_amalgamated.hpp>

#include <charconv>
#include <sstream>

using namespace nmimo;

TEST_CASE("doubles print in shortest round-trip form")
{
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 123456789.125})
    {
        const auto s = format_double(x);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == x);
    }
    CHECK(format_double(0.25) == "0.25");
}

TEST_CASE("CSV tables carry schema, id, seed and version")
{
    CsvTable t("demo", 2, {"a", "b"}, "exp1", 42);
    t.row({"1", "x"}).row({"2", "y"});
    CHECK_THROWS_AS(t.row({"3"}), std::invalid_argument);
    std::ostringstream os;
    t.write(os);
    CHECK(os.str() == std::string("# schema=demo/2 nmimo=") + version +
                          "\nexperiment_id,seed,version,a,b\nexp1,42," + version + ",1,x\nexp1,42," + version +
                          ",2,y\n");
}

TEST_CASE("Omega files round-trip bit-exactly")
{
    Rng rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<BeamCsi> csi(3);
    for (auto &c : csi)
    {
        c.omega = Eigen::MatrixXd::NullaryExpr(4, 6, [&] { return u(rng) < 0.5 ? 0.0 : u(rng) * 1e-9; });
        c.states = {LinkState::los, LinkState::outage};
    }
    std::stringstream ss;
    write_omega(ss, csi, 77);
    const auto back = read_omega(ss);
    CHECK(back.seed == 77);
    REQUIRE(back.csi.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
    {
        CHECK(back.csi[i].omega == csi[i].omega);
        CHECK(back.csi[i].states == csi[i].states);
    }
}

TEST_CASE("malformed Omega files are rejected")
{
    const std::string head = "# schema=omega/1\n# seed=1\n# uts=1 cols=2\n# ut=0 rows=2 states=LOS\n";
    std::istringstream neg(head + "0,0,1,-2\n0,1,0,0\n");
    CHECK_THROWS(read_omega(neg));
    std::istringstream missing(head + "0,0,1,2\n");
    CHECK_THROWS(read_omega(missing));
    std::istringstream width(head + "0,0,1\n0,1,0,0\n");
    CHECK_THROWS(read_omega(width));
    std::istringstream ok(head + "0,0,1,2\n0,1,0,0.5\n");
    CHECK(read_omega(ok).csi[0].omega(1, 1) == 0.5);
}

TEST_CASE("trace output omits wall time unless asked")
{
    SolveTrace tr;
    TraceEntry e;
    e.bs_power = Eigen::VectorXd::Ones(2);
    e.mu = Eigen::VectorXd::Zero(2);
    e.wall_time_s = 1.5;
    tr.entries.push_back(e);
    std::ostringstream a, b;
    trace_table(tr, "x", 1, false).write(a);
    trace_table(tr, "x", 1, true).write(b);
    CHECK(a.str().find("wall_time") == std::string::npos);
    CHECK(b.str().find("wall_time") != std::string::npos);
    CHECK(a.str().find("power_mw_bs1") != std::string::npos);
    CHECK_FALSE(trace_json(tr).dump().find("wall_time") != std::string::npos);
}
