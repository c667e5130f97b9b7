#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <complex>

namespace glv {

using vec3 = Eigen::Vector3d;
using mat3 = Eigen::Matrix3d;
using cplx = std::complex<double>;

constexpr double PI = 3.14159265358979323846;

inline double sq(double x) { return x * x; }

// cylindrical <-> cartesian
inline double radius_of(const vec3& x) { return std::hypot(x[0], x[1]); }
inline double angle_of(const vec3& x) { return std::atan2(x[1], x[0]); }

inline vec3 cyl_to_cart(double r, double th, double z) {
    return {r * std::cos(th), r * std::sin(th), z};
}

// unit vectors of the cylindrical frame at azimuth th
inline vec3 e_r(double th) { return {std::cos(th), std::sin(th), 0.0}; }
inline vec3 e_th(double th) { return {-std::sin(th), std::cos(th), 0.0}; }

// wrap to [0, 2*pi)
inline double wrap_angle(double th) {
    th = std::fmod(th, 2.0 * PI);
    return th < 0 ? th + 2.0 * PI : th;
}

} // namespace glv
