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

#ifndef NMIMO_IO_HPP
#define NMIMO_IO_HPP

#include "nmimo/channel.hpp"
#include "nmimo/rate.hpp"
#include "nmimo/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nmimo
{

inline constexpr const char *version = "0.1.0";

/// Shortest decimal that round-trips a double.
std::string format_double(double x);

/// A CSV table whose first line is "# schema=<name>/<version> nmimo=<version>".
/// Every row is prefixed with experiment_id, seed and version.
class CsvTable
{
  public:
    CsvTable(std::string schema, int schema_version, std::vector<std::string> columns,
             std::string experiment_id, std::uint64_t seed);

    CsvTable &row(std::vector<std::string> cells);
    std::size_t size() const { return rows_.size(); }
    const std::vector<std::string> &columns() const { return columns_; }

    void write(std::ostream &os) const;
    void write_file(const std::string &path) const;

  private:
    std::string schema_;
    int schema_version_;
    std::vector<std::string> columns_;
    std::string experiment_id_;
    std::uint64_t seed_;
    std::vector<std::vector<std::string>> rows_;
};

/// Omega export: comment header (dims, seed, link states), then one line per
/// (ut, row): "ut,row,omega[row,0],...". Values round-trip bit-exactly.
void write_omega(std::ostream &os, std::span<const BeamCsi> csi, std::uint64_t seed);
void write_omega_file(const std::string &path, std::span<const BeamCsi> csi, std::uint64_t seed);

struct OmegaFile
{
    std::vector<BeamCsi> csi;
    std::uint64_t seed = 0;
};

OmegaFile read_omega(std::istream &is);
OmegaFile read_omega_file(const std::string &path);

CsvTable rate_breakdown_table(const SumRate &r, const char *method, int iteration, const std::string &experiment_id,
                              std::uint64_t seed);
CsvTable trace_table(const SolveTrace &t, const std::string &experiment_id, std::uint64_t seed,
                     bool with_timing = false);
nlohmann::json trace_json(const SolveTrace &t, bool with_timing = false);
CsvTable allocation_table(const PowerAllocation &a, const std::string &experiment_id, std::uint64_t seed);

void write_json_file(const std::string &path, const nlohmann::json &j);

} // namespace nmimo

#endif
