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

#include <cmath>
#include <string>

#include "qmon/errors.hpp"
#include "qmon/vec3.hpp"

namespace qmon {

/// Physicality tolerance on the Bloch radius: states with |r| <= 1 + kRadiusTol
/// are accepted as-is.
inline constexpr double kRadiusTol = 1e-9;

/// Qubit state as a Bloch vector r = (<sx>, <sy>, <sz>).
/// Pure states have |r| = 1, the maximally mixed state has r = 0.
struct QubitState {
    Vec3 bloch;

    double radius2() const { return norm2(bloch); }
    double radius() const { return norm(bloch); }
};

/// True when |r| <= 1 + kRadiusTol.
inline bool is_physical(const QubitState& q) {
    return q.radius2() <= (1.0 + kRadiusTol) * (1.0 + kRadiusTol);
}

/// Purity P = 2 Tr rho^2 - 1 = r^2, clamped to [0, 1] inside the tolerance
/// band. Throws physicality_error when |r| > 1 + kRadiusTol.
inline double purity(const QubitState& q) {
    const double p = q.radius2();
    if (p > (1.0 + kRadiusTol) * (1.0 + kRadiusTol)) {
        throw physicality_error("Bloch radius " + std::to_string(std::sqrt(p)) +
                                " exceeds the unit ball");
    }
    return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

/// Linear entropy 1 - P.
inline double linear_entropy(const QubitState& q) { return 1.0 - purity(q); }

}  // namespace qmon
