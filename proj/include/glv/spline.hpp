#pragma once

#include "glv/geometry.hpp"

#include <vector>

namespace glv {

// One cubic segment p(s) = a + b s + c s^2 + d s^3 with s = t - t0, valid on [t0, t1].
struct CubicPiece {
  double t0 = 0.0;
  double t1 = 0.0;
  vec3 a = vec3::Zero();
  vec3 b = vec3::Zero();
  vec3 c = vec3::Zero();
  vec3 d = vec3::Zero();

  vec3 value(double t) const {
    const double s = t - t0;
    return a + s * (b + s * (c + s * d));
  }
  vec3 deriv(double t) const {
    const double s = t - t0;
    return b + s * (2.0 * c + s * 3.0 * d);
  }
  vec3 second(double t) const {
    const double s = t - t0;
    return 2.0 * c + 6.0 * s * d;
  }

  // Same point set traversed backwards; parameter interval becomes [-t1, -t0].
  CubicPiece reversed() const;
  // Negates the z component (mirror through the z = 0 plane).
  CubicPiece z_mirrored() const;

  static CubicPiece hermite(double t0, double t1, const vec3& p0, const vec3& v0,
                            const vec3& p1, const vec3& v1);
};

// C^2 curve assembled from cubic segments sharing breakpoints.
class PiecewiseCubic {
 public:
  PiecewiseCubic() = default;
  explicit PiecewiseCubic(std::vector<CubicPiece> pieces);

  // Natural cubic spline through (t_i, p_i); t strictly increasing, at least two knots.
  static PiecewiseCubic natural_spline(const std::vector<double>& t,
                                       const std::vector<vec3>& p);

  bool empty() const { return pieces_.empty(); }
  double t_min() const { return pieces_.front().t0; }
  double t_max() const { return pieces_.back().t1; }

  vec3 value(double t) const { return pieces_[find(t)].value(t); }
  vec3 deriv(double t) const { return pieces_[find(t)].deriv(t); }
  vec3 second(double t) const { return pieces_[find(t)].second(t); }

  const std::vector<CubicPiece>& pieces() const { return pieces_; }

  PiecewiseCubic reversed() const;
  PiecewiseCubic z_mirrored() const;
  // Affine reparametrization of [t_min, t_max] onto [s0, s1]; the image is unchanged.
  PiecewiseCubic rescaled(double s0, double s1) const;

 private:
  std::vector<CubicPiece> pieces_;
  int find(double t) const;
};

}  // namespace glv
