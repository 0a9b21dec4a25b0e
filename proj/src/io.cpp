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

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nmimo
{

std::string format_double(double x)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

CsvTable::CsvTable(std::string schema, int schema_version, std::vector<std::string> columns,
                   std::string experiment_id, std::uint64_t seed)
    : schema_(std::move(schema)), schema_version_(schema_version), columns_(std::move(columns)),
      experiment_id_(std::move(experiment_id)), seed_(seed)
{
}

CsvTable &CsvTable::row(std::vector<std::string> cells)
{
    if (cells.size() != columns_.size())
        throw std::invalid_argument("CSV row for " + schema_ + " has " + std::to_string(cells.size()) +
                                    " cells, expected " + std::to_string(columns_.size()));
    rows_.push_back(std::move(cells));
    return *this;
}

void CsvTable::write(std::ostream &os) const
{
    os << "# schema=" << schema_ << '/' << schema_version_ << " nmimo=" << version << '\n';
    os << "experiment_id,seed,version";
    for (const auto &c : columns_)
        os << ',' << c;
    os << '\n';
    for (const auto &r : rows_)
    {
        os << experiment_id_ << ',' << seed_ << ',' << version;
        for (const auto &c : r)
            os << ',' << c;
        os << '\n';
    }
}

void CsvTable::write_file(const std::string &path) const
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open " + path + " for writing");
    write(f);
}

void write_omega(std::ostream &os, std::span<const BeamCsi> csi, std::uint64_t seed)
{
    os << "# schema=omega/1 nmimo=" << version << '\n';
    os << "# seed=" << seed << '\n';
    os << "# uts=" << csi.size() << " cols=" << (csi.empty() ? 0 : csi.front().cols()) << '\n';
    for (std::size_t i = 0; i < csi.size(); ++i)
    {
        os << "# ut=" << i << " rows=" << csi[i].rows() << " states=";
        for (std::size_t v = 0; v < csi[i].states.size(); ++v)
            os << (v ? ";" : "") << to_string(csi[i].states[v]);
        os << '\n';
    }
    for (std::size_t i = 0; i < csi.size(); ++i)
        for (int n = 0; n < csi[i].rows(); ++n)
        {
            os << i << ',' << n;
            for (int m = 0; m < csi[i].cols(); ++m)
                os << ',' << format_double(csi[i].omega(n, m));
            os << '\n';
        }
}

void write_omega_file(const std::string &path, std::span<const BeamCsi> csi, std::uint64_t seed)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_omega(f, csi, seed);
}

namespace
{

[[noreturn]] void bad_omega(int line, const std::string &what)
{
    throw std::runtime_error("omega file line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_num(std::string_view s, int line)
{
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        bad_omega(line, "not a number: '" + std::string(s) + "'");
    return v;
}

std::string_view field(std::string_view text, std::string_view key)
{
    const auto p = text.find(key);
    if (p == std::string_view::npos)
        return {};
    auto rest = text.substr(p + key.size());
    return rest.substr(0, rest.find(' '));
}

LinkState parse_state(std::string_view s, int line)
{
    for (auto st : {LinkState::los, LinkState::nlos, LinkState::outage})
        if (s == to_string(st))
            return st;
    bad_omega(line, "unknown link state '" + std::string(s) + "'");
}

} // namespace

OmegaFile read_omega(std::istream &is)
{
    OmegaFile out;
    std::string line;
    int ln = 0;
    int cols = -1;
    std::vector<int> filled;
    while (std::getline(is, line))
    {
        ++ln;
        if (line.empty())
            continue;
        const std::string_view sv(line);
        if (sv.front() == '#')
        {
            if (auto s = field(sv, "seed="); !s.empty())
                out.seed = parse_num<std::uint64_t>(s, ln);
            else if (auto u = field(sv, "uts="); !u.empty())
            {
                out.csi.resize(parse_num<std::size_t>(u, ln));
                cols = parse_num<int>(field(sv, "cols="), ln);
                filled.assign(out.csi.size(), 0);
            }
            else if (auto id = field(sv, "ut="); !id.empty())
            {
                const auto i = parse_num<std::size_t>(id, ln);
                if (i >= out.csi.size())
                    bad_omega(ln, "UT index out of range");
                out.csi[i].omega = Eigen::MatrixXd::Zero(parse_num<int>(field(sv, "rows="), ln), cols);
                auto st = field(sv, "states=");
                while (!st.empty())
                {
                    const auto cut = st.find(';');
                    out.csi[i].states.push_back(parse_state(st.substr(0, cut), ln));
                    st = cut == std::string_view::npos ? std::string_view{} : st.substr(cut + 1);
                }
            }
            continue;
        }
        if (cols < 0)
            bad_omega(ln, "data before the dimension header");
        std::vector<std::string_view> cells;
        std::string_view rest = sv;
        while (true)
        {
            const auto cut = rest.find(',');
            cells.push_back(rest.substr(0, cut));
            if (cut == std::string_view::npos)
                break;
            rest = rest.substr(cut + 1);
        }
        if (static_cast<int>(cells.size()) != cols + 2)
            bad_omega(ln, "expected " + std::to_string(cols + 2) + " fields");
        const auto i = parse_num<std::size_t>(cells[0], ln);
        const auto n = parse_num<int>(cells[1], ln);
        if (i >= out.csi.size() || n < 0 || n >= out.csi[i].rows())
            bad_omega(ln, "row index out of range");
        for (int m = 0; m < cols; ++m)
        {
            const double v = parse_num<double>(cells[m + 2], ln);
            if (!(v >= 0.0))
                bad_omega(ln, "negative coupling");
            out.csi[i].omega(n, m) = v;
        }
        ++filled[i];
    }
    for (std::size_t i = 0; i < out.csi.size(); ++i)
        if (filled[i] != out.csi[i].rows())
            throw std::runtime_error("omega file: UT " + std::to_string(i) + " is missing rows");
    return out;
}

OmegaFile read_omega_file(const std::string &path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open " + path);
    return read_omega(f);
}

CsvTable rate_breakdown_table(const SumRate &r, const char *method, int iteration, const std::string &experiment_id,
                              std::uint64_t seed)
{
    CsvTable t("rate_breakdown", 1, {"iteration", "ut_id", "f_plus", "f_minus", "rate_bits", "method"}, experiment_id,
               seed);
    for (std::size_t i = 0; i < r.per_ut.size(); ++i)
        t.row({std::to_string(iteration), std::to_string(i), format_double(r.per_ut[i].f_plus),
               format_double(r.per_ut[i].f_minus), format_double(nats_to_bits(r.per_ut[i].rate())), method});
    return t;
}

CsvTable trace_table(const SolveTrace &tr, const std::string &experiment_id, std::uint64_t seed, bool with_timing)
{
    std::vector<std::string> cols{"iteration", "sum_rate_bits", "step", "backtracks", "kkt_stationarity",
                                  "kkt_zero_beam", "kkt_slackness", "kkt_primal"};
    const auto cells = tr.entries.empty() ? 0 : tr.entries.front().bs_power.size();
    for (Eigen::Index v = 0; v < cells; ++v)
    {
        cols.push_back("power_mw_bs" + std::to_string(v));
        cols.push_back("mu_bs" + std::to_string(v));
    }
    if (with_timing)
        cols.push_back("wall_time_s");
    CsvTable t("solve_trace", 1, cols, experiment_id, seed);
    for (const auto &e : tr.entries)
    {
        std::vector<std::string> r{std::to_string(e.iteration), format_double(e.sum_rate_bits), format_double(e.step),
                                   std::to_string(e.backtracks), format_double(e.kkt.stationarity),
                                   format_double(e.kkt.zero_beam), format_double(e.kkt.slackness),
                                   format_double(e.kkt.primal)};
        for (Eigen::Index v = 0; v < cells; ++v)
        {
            r.push_back(format_double(e.bs_power(v)));
            r.push_back(format_double(e.mu(v)));
        }
        if (with_timing)
            r.push_back(format_double(e.wall_time_s));
        t.row(std::move(r));
    }
    return t;
}

nlohmann::json trace_json(const SolveTrace &tr, bool with_timing)
{
    nlohmann::json j;
    j["converged"] = tr.converged;
    j["iterations"] = nlohmann::json::array();
    for (const auto &e : tr.entries)
    {
        nlohmann::json it{{"iteration", e.iteration},
                          {"sum_rate_bits", e.sum_rate_bits},
                          {"step", e.step},
                          {"backtracks", e.backtracks},
                          {"bs_power_mw", std::vector<double>(e.bs_power.begin(), e.bs_power.end())},
                          {"mu", std::vector<double>(e.mu.begin(), e.mu.end())},
                          {"kkt",
                           {{"stationarity", e.kkt.stationarity},
                            {"zero_beam", e.kkt.zero_beam},
                            {"slackness", e.kkt.slackness},
                            {"dual", e.kkt.dual},
                            {"primal", e.kkt.primal},
                            {"mask", e.kkt.mask}}}};
        if (with_timing)
            it["wall_time_s"] = e.wall_time_s;
        j["iterations"].push_back(std::move(it));
    }
    return j;
}

CsvTable allocation_table(const PowerAllocation &a, const std::string &experiment_id, std::uint64_t seed)
{
    CsvTable t("allocation", 1, {"ut_id", "beam_index", "power_mw"}, experiment_id, seed);
    for (int i = 0; i < a.num_uts(); ++i)
        for (Eigen::Index m = 0; m < a.lambda[i].size(); ++m)
            t.row({std::to_string(i), std::to_string(m), format_double(a.lambda[i](m))});
    return t;
}

void write_json_file(const std::string &path, const nlohmann::json &j)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open " + path + " for writing");
    f << j.dump(2) << '\n';
}

} // namespace nmimo
