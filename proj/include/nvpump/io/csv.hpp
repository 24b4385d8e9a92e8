// Copyright 2026 The nvpump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// csv.hpp: deterministic CSV output: LF line endings, 17 significant digits.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvpump::io {

struct CsvColumn {
    std::string name;
    std::string unit;  // empty for dimensionless columns

    std::string header() const { return unit.empty() ? name : name + " [" + unit + "]"; }
};

using CsvSchema = std::vector<CsvColumn>;

struct CsvTable {
    CsvSchema schema;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row) {
        if (row.size() != schema.size())
            throw std::invalid_argument("CsvTable: row has " + std::to_string(row.size()) + " values, schema has " +
                                        std::to_string(schema.size()));
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < schema.size(); ++i)
            if (schema[i].name == name) return i;
        throw std::out_of_range("CsvTable: no column " + name);
    }
};

// %.17g round-trips every finite double; non-finite values print as nan/inf.
inline std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.schema.size(); ++i) {
        if (i) out += ',';
        out += table.schema[i].header();
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline void emit_csv(const CsvTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << format_csv(table);
}

}  // namespace nvpump::io
