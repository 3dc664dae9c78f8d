/*
   Copyright 2026 The qmon Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <variant>
#include <vector>

#include "qmon/errors.hpp"

namespace qmon {

/// Minimal CSV writer: header row, then rows of cells. Floating-point cells
/// are printed with 9 significant digits so that regression tests can compare
/// outputs byte for byte.
class CsvWriter {
  public:
    using Cell = std::variant<std::string, double, long long>;

    explicit CsvWriter(const std::filesystem::path& path) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        out_.open(path);
        if (!out_) throw config_error("cannot open output file " + path.string());
    }

    void row(std::initializer_list<Cell> cells) { write_row(cells.begin(), cells.end()); }

    template <class It>
    void write_row(It begin, It end) {
        bool first = true;
        for (It it = begin; it != end; ++it) {
            if (!first) out_ << ',';
            first = false;
            if (const auto* s = std::get_if<std::string>(&*it)) {
                out_ << *s;
            } else if (const auto* d = std::get_if<double>(&*it)) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.9g", *d);
                out_ << buf;
            } else {
                out_ << std::get<long long>(*it);
            }
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
};

}  // namespace qmon
