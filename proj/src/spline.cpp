#include "glv/spline.hpp"

#include "glv/errors.hpp"

#include <algorithm>
#include <cmath>

namespace glv {

CubicPiece CubicPiece::reversed() const {
  // q(s') = p(L - s') on [-t1, -t0].
  const double L = t1 - t0;
  CubicPiece q;
  q.t0 = -t1;
  q.t1 = -t0;
  q.a = a + L * (b + L * (c + L * d));
  q.b = -(b + L * (2.0 * c + 3.0 * L * d));
  q.c = c + 3.0 * L * d;
  q.d = -d;
  return q;
}

CubicPiece CubicPiece::z_mirrored() const {
  CubicPiece q = *this;
  q.a.z() = -q.a.z();
  q.b.z() = -q.b.z();
  q.c.z() = -q.c.z();
  q.d.z() = -q.d.z();
  return q;
}

CubicPiece CubicPiece::hermite(double t0, double t1, const vec3& p0, const vec3& v0,
                               const vec3& p1, const vec3& v1) {
  if (!(t1 > t0)) throw BadParameter("hermite piece needs t1 > t0");
  const double L = t1 - t0;
  CubicPiece q;
  q.t0 = t0;
  q.t1 = t1;
  q.a = p0;
  q.b = v0;
  q.c = (3.0 * (p1 - p0) / (L * L)) - (2.0 * v0 + v1) / L;
  q.d = (2.0 * (p0 - p1) / (L * L * L)) + (v0 + v1) / (L * L);
  return q;
}

PiecewiseCubic::PiecewiseCubic(std::vector<CubicPiece> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw BadParameter("piecewise cubic needs at least one piece");
  for (size_t i = 0; i + 1 < pieces_.size(); ++i) {
    if (std::abs(pieces_[i].t1 - pieces_[i + 1].t0) > 1e-12 * (1.0 + std::abs(pieces_[i].t1)))
      throw BadParameter("piecewise cubic breakpoints must be contiguous");
  }
}

PiecewiseCubic PiecewiseCubic::natural_spline(const std::vector<double>& t,
                                              const std::vector<vec3>& p) {
  const int n = static_cast<int>(t.size());
  if (n < 2 || p.size() != t.size())
    throw BadParameter("natural spline needs >= 2 knots and matching point count");
  for (int i = 0; i + 1 < n; ++i)
    if (!(t[i + 1] > t[i])) throw BadParameter("spline knots must strictly increase");

  // Second derivatives M_i from the standard tridiagonal system, M_0 = M_{n-1} = 0.
  std::vector<vec3> M(n, vec3::Zero());
  if (n > 2) {
    const int m = n - 2;
    std::vector<double> diag(m), sub(m), sup(m);
    std::vector<vec3> rhs(m);
    for (int i = 0; i < m; ++i) {
      const double h0 = t[i + 1] - t[i];
      const double h1 = t[i + 2] - t[i + 1];
      sub[i] = h0 / 6.0;
      diag[i] = (h0 + h1) / 3.0;
      sup[i] = h1 / 6.0;
      rhs[i] = (p[i + 2] - p[i + 1]) / h1 - (p[i + 1] - p[i]) / h0;
    }
    for (int i = 1; i < m; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    M[m] = rhs[m - 1] / diag[m - 1];
    for (int i = m - 2; i >= 0; --i) M[i + 1] = (rhs[i] - sup[i] * M[i + 2]) / diag[i];
  }

  std::vector<CubicPiece> pieces(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    const double h = t[i + 1] - t[i];
    CubicPiece& q = pieces[i];
    q.t0 = t[i];
    q.t1 = t[i + 1];
    q.a = p[i];
    q.b = (p[i + 1] - p[i]) / h - h * (2.0 * M[i] + M[i + 1]) / 6.0;
    q.c = 0.5 * M[i];
    q.d = (M[i + 1] - M[i]) / (6.0 * h);
  }
  return PiecewiseCubic(std::move(pieces));
}

int PiecewiseCubic::find(double t) const {
  int lo = 0, hi = static_cast<int>(pieces_.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (t < pieces_[mid].t1)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

PiecewiseCubic PiecewiseCubic::reversed() const {
  std::vector<CubicPiece> out;
  out.reserve(pieces_.size());
  for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it) out.push_back(it->reversed());
  return PiecewiseCubic(std::move(out));
}

PiecewiseCubic PiecewiseCubic::z_mirrored() const {
  std::vector<CubicPiece> out;
  out.reserve(pieces_.size());
  for (const auto& q : pieces_) out.push_back(q.z_mirrored());
  return PiecewiseCubic(std::move(out));
}

PiecewiseCubic PiecewiseCubic::rescaled(double s0, double s1) const {
  if (!(s1 > s0)) throw BadParameter("rescaled needs s1 > s0");
  const double T0 = t_min(), T1 = t_max();
  const double al = (s1 - s0) / (T1 - T0);
  std::vector<CubicPiece> out;
  out.reserve(pieces_.size());
  for (const auto& q : pieces_) {
    CubicPiece r;
    r.t0 = s0 + (q.t0 - T0) * al;
    r.t1 = s0 + (q.t1 - T0) * al;
    r.a = q.a;
    r.b = q.b / al;
    r.c = q.c / (al * al);
    r.d = q.d / (al * al * al);
    out.push_back(r);
  }
  // Pin the ends exactly so repeated remapping cannot drift the domain.
  out.front().t0 = s0;
  out.back().t1 = s1;
  return PiecewiseCubic(std::move(out));
}

}  // namespace glv
