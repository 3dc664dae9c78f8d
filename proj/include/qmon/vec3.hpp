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

#include <array>
#include <cmath>

namespace qmon {

/// Plain 3-vector used for Bloch coordinates, detector records and noise.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](int k) const { return k == 0 ? x : (k == 1 ? y : z); }
    double& operator[](int k) { return k == 0 ? x : (k == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double c) const { return {c * x, c * y, c * z}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator*=(double c) {
        x *= c;
        y *= c;
        z *= c;
        return *this;
    }
    constexpr bool operator==(const Vec3& o) const = default;

    std::array<double, 3> as_array() const { return {x, y, z}; }
};

constexpr Vec3 operator*(double c, const Vec3& v) { return v * c; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

constexpr double norm2(const Vec3& v) { return dot(v, v); }

inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }

/// v / |v|; returns the fallback when |v| == 0.
inline Vec3 normalized(const Vec3& v, const Vec3& fallback = {0.0, 0.0, 1.0}) {
    const double n = norm(v);
    if (n == 0.0) return fallback;
    return v * (1.0 / n);
}

}  // namespace qmon
