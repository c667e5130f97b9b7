#pragma once

// Analytic braid constructions shared across test suites. All use the default
// desk domain (rho = 1, ell = 1, ell_tilde = 2.5) with strands spanning z in
// [-ell, ell] and velocities vertical at the caps (so extensions blend trivially).

#include "glv/braid.hpp"

#include <cmath>
#include <vector>

namespace glv::testing {

inline double smoothstep(double tau) { return tau * tau * (3.0 - 2.0 * tau); }

inline vec3 rotated_about(const vec3& center, const vec3& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const double dx = p.x() - center.x(), dy = p.y() - center.y();
  return vec3(center.x() + c * dx - s * dy, center.y() + s * dx + c * dy, p.z());
}

// Two strands on a circle of radius r swapping ends by a rotation of
// 2*pi*turns; turns = 0.5 is the single exchange, 1.0 the double (Hopf)
// exchange. orientation +1 rotates counterclockwise (seen from +z).
inline Braid exchange_braid(double turns = 0.5, int orientation = +1, double r = 0.3,
                            int npts = 41) {
  DomainSpec dom;
  std::vector<double> ts;
  std::vector<vec3> a, b;
  for (int i = 0; i < npts; ++i) {
    const double s = -1.0 + 2.0 * i / (npts - 1);
    const double th = orientation * 2.0 * PI * turns * smoothstep(0.5 * (s + 1.0));
    ts.push_back(s);
    a.emplace_back(r * std::cos(th), r * std::sin(th), s * dom.ell);
    b.emplace_back(-r * std::cos(th), -r * std::sin(th), s * dom.ell);
  }
  Braid braid;
  braid.domain = dom;
  braid.cap_z = dom.ell;
  braid.strands = {Strand::through(ts, a), Strand::through(ts, b)};
  return braid;
}

// Exact positions of the three strands of the sigma_1 sigma_2^{-1} braid at
// parameter s in [-1, 1] (z = s). Strands start at x = -0.45, 0, 0.45.
inline vec3 sigma12inv_pos(int strand, double s) {
  const vec3 m12(-0.225, 0, 0), m23(0.225, 0, 0);
  const vec3 p1(-0.45, 0, s), p2(0, 0, s), p3(0.45, 0, s);
  if (s <= 0) {
    const double h = smoothstep(s + 1.0);
    if (strand == 0) return rotated_about(m12, p1, PI * h);
    if (strand == 1) return rotated_about(m12, p2, PI * h);
    return p3;
  }
  const double h = smoothstep(s);
  if (strand == 0) return rotated_about(m23, vec3(0, 0, s), -PI * h);
  if (strand == 1) return vec3(-0.45, 0, s);
  return rotated_about(m23, p3, -PI * h);
}

inline Braid sigma12inv_braid(int npts = 81) {
  DomainSpec dom;
  Braid braid;
  braid.domain = dom;
  braid.cap_z = dom.ell;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> ts;
    std::vector<vec3> pts;
    for (int i = 0; i < npts; ++i) {
      const double s = -1.0 + 2.0 * i / (npts - 1);
      ts.push_back(s);
      pts.push_back(sigma12inv_pos(k, s));
    }
    braid.strands.push_back(Strand::through(ts, pts));
  }
  return braid;
}

inline Braid vertical_braid(const std::vector<vec3>& xy_positions) {
  DomainSpec dom;
  Braid braid;
  braid.domain = dom;
  braid.cap_z = dom.ell;
  for (const auto& q : xy_positions) {
    std::vector<double> ts = {-1.0, 0.0, 1.0};
    std::vector<vec3> pts = {vec3(q.x(), q.y(), -dom.ell), vec3(q.x(), q.y(), 0.0),
                             vec3(q.x(), q.y(), dom.ell)};
    braid.strands.push_back(Strand::through(ts, pts));
  }
  return braid;
}

}  // namespace glv::testing
