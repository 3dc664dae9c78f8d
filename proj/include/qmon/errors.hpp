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

#include <stdexcept>
#include <string>

namespace qmon {

/// A Bloch vector left the unit ball by more than the allowed tolerance.
class physicality_error : public std::runtime_error {
  public:
    explicit physicality_error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid run configuration (bad JSON, incompatible step sizes, ...).
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qmon
