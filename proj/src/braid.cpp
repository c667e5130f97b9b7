#include "glv/braid.hpp"

#include "glv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace glv {

Strand Strand::through(const std::vector<double>& t, const std::vector<vec3>& points) {
  for (const auto& p : points)
    if (!p.allFinite()) throw NonFiniteControlPoint("strand control point is not finite");
  auto spline = PiecewiseCubic::natural_spline(t, points);
  if (points.back().z() < points.front().z()) spline = spline.reversed();
  return Strand{spline.rescaled(-1.0, 1.0)};
}

double Strand::param_at_z(double z) const {
  double lo = -1.0, hi = 1.0;
  const double zlo = pos(lo).z(), zhi = pos(hi).z();
  if (z <= zlo) return lo;
  if (z >= zhi) return hi;
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (pos(mid).z() < z)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

namespace {

constexpr int kDenseSamples = 512;

// Minimum of a smooth scalar function over [-1,1]: dense scan plus ternary refinement.
double scan_min(const std::function<double(double)>& f, double* arg = nullptr) {
  double best = std::numeric_limits<double>::infinity(), tbest = -1.0;
  for (int i = 0; i <= kDenseSamples; ++i) {
    const double t = -1.0 + 2.0 * i / kDenseSamples;
    const double v = f(t);
    if (v < best) {
      best = v;
      tbest = t;
    }
  }
  double lo = std::max(-1.0, tbest - 2.0 / kDenseSamples);
  double hi = std::min(1.0, tbest + 2.0 / kDenseSamples);
  for (int k = 0; k < 60; ++k) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2))
      hi = m2;
    else
      lo = m1;
  }
  const double t = 0.5 * (lo + hi);
  if (arg) *arg = t;
  return std::min(best, f(t));
}

// Minimum distance between two strands: coarse grid then shrinking 3x3 pattern search.
double pair_distance(const Strand& a, const Strand& b) {
  constexpr int N = 192;
  std::vector<vec3> pa(N + 1), pb(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double t = -1.0 + 2.0 * i / N;
    pa[i] = a.pos(t);
    pb[i] = b.pos(t);
  }
  double best = std::numeric_limits<double>::infinity();
  double ta = 0, tb = 0;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) {
      const double d2 = (pa[i] - pb[j]).squaredNorm();
      if (d2 < best) {
        best = d2;
        ta = -1.0 + 2.0 * i / N;
        tb = -1.0 + 2.0 * j / N;
      }
    }
  double h = 2.0 / N;
  for (int round = 0; round < 48; ++round) {
    bool moved = false;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        const double sa = std::clamp(ta + di * h, -1.0, 1.0);
        const double sb = std::clamp(tb + dj * h, -1.0, 1.0);
        const double d2 = (a.pos(sa) - b.pos(sb)).squaredNorm();
        if (d2 < best) {
          best = d2;
          ta = sa;
          tb = sb;
          moved = true;
        }
      }
    if (!moved) h *= 0.5;
    if (h < 1e-14) break;
  }
  return std::sqrt(best);
}

}  // namespace

ValidationReport validate_braid(const Braid& braid) {
  if (braid.strands.empty()) throw EmptyBraid("braid has no strands");
  const double cap = braid.cap_z;
  if (!(cap > 0) || !std::isfinite(cap)) throw BadParameter("braid cap height must be positive");

  ValidationReport rep;
  rep.min_dz = std::numeric_limits<double>::infinity();
  rep.wall_clearance = std::numeric_limits<double>::infinity();
  rep.endpoint_err = 0.0;

  double max_radius = 0.0;
  for (const auto& s : braid.strands) {
    for (const auto& q : s.curve.pieces())
      if (!q.a.allFinite() || !q.b.allFinite() || !q.c.allFinite() || !q.d.allFinite())
        throw NonFiniteControlPoint("strand has non-finite coefficients");
    rep.endpoint_err = std::max(rep.endpoint_err, std::abs(s.pos(-1.0).z() + cap));
    rep.endpoint_err = std::max(rep.endpoint_err, std::abs(s.pos(1.0).z() - cap));
    rep.min_dz = std::min(rep.min_dz, scan_min([&](double t) { return s.d1(t).z(); }));
    const double rmax = -scan_min([&](double t) { return -radius_of(s.pos(t)); });
    max_radius = std::max(max_radius, rmax);
  }
  rep.wall_clearance = braid.domain.rho - max_radius;

  for (size_t i = 0; i < braid.strands.size(); ++i)
    for (size_t j = i + 1; j < braid.strands.size(); ++j)
      rep.min_pair_distance =
          std::min(rep.min_pair_distance, pair_distance(braid.strands[i], braid.strands[j]));

  const double cap_tol = 1e-7 * std::max(1.0, cap);
  if (rep.endpoint_err > cap_tol)
    rep.failure = "endpoint placement";
  else if (!(rep.min_dz > 0))
    rep.failure = "z-monotonicity";
  else if (!(rep.wall_clearance > 0))
    rep.failure = "wall clearance";
  else if (!(rep.min_pair_distance > 1e-12 * braid.domain.rho))
    rep.failure = "disjointness margin";
  rep.pass = rep.failure.empty();
  return rep;
}

namespace {

// C^2 transition from Hermite state (p0, v0, acc0) to constant velocity ve, built
// from two cubic segments of equal parameter length T. The interior node values
// are the unique choice making the second derivative continuous end to end.
void append_blend(std::vector<CubicPiece>& out, double t_start, double T, const vec3& p0,
                  const vec3& v0, const vec3& acc0, const vec3& ve) {
  const vec3 v1 = 0.25 * (2.0 * v0 + 2.0 * ve + acc0 * T);
  const vec3 p1 = p0 + acc0 * (T * T / 6.0) + T * (4.0 * v0 + 2.0 * v1) / 6.0;
  const vec3 p2 = p1 + T * (2.0 * v1 + 4.0 * ve) / 6.0;
  out.push_back(CubicPiece::hermite(t_start, t_start + T, p0, v0, p1, v1));
  out.push_back(CubicPiece::hermite(t_start + T, t_start + 2.0 * T, p1, v1, p2, ve));
}

// Pieces continuing `curve` upward from its top end to height z_top: a blend to
// purely vertical motion followed by a straight segment.
std::vector<CubicPiece> upward_extension(const PiecewiseCubic& curve, double z_top,
                                         double blend_height) {
  const double te = curve.t_max();
  const vec3 p0 = curve.value(te), v0 = curve.deriv(te), a0 = curve.second(te);
  const double w = v0.z();
  if (!(w > 0)) throw NotMonotoneInZ("strand end velocity must rise in z");
  const double gap = z_top - p0.z();
  if (!(gap > 0)) throw InvalidDomainNesting("extension target is not taller than the braid");

  const double db = std::min(blend_height, 0.2 * gap);
  const double T = db / w;
  std::vector<CubicPiece> out;
  append_blend(out, te, T, p0, v0, a0, vec3(0, 0, w));
  const vec3 pe = out.back().value(out.back().t1);
  const double rest = z_top - pe.z();
  if (!(rest > 0)) throw InvalidDomainNesting("blend overshoots the target cap");
  CubicPiece straight;
  straight.t0 = out.back().t1;
  straight.t1 = straight.t0 + rest / w;
  straight.a = pe;
  straight.b = vec3(0, 0, w);
  out.push_back(straight);
  return out;
}

}  // namespace

Braid extend_braid(const Braid& braid, const DomainSpec& target) {
  const auto rep = validate_braid(braid);
  if (!rep.pass) throw BadParameter("extend_braid input fails validation: " + rep.failure);
  if (std::abs(target.rho - braid.domain.rho) > 1e-12 ||
      std::abs(target.ell - braid.domain.ell) > 1e-12)
    throw InvalidDomainNesting("extension must keep rho and ell");
  if (!(target.ell_tilde > 2.0 * target.ell) || !(target.ell_tilde < 3.0 * target.ell))
    throw InvalidDomainNesting("target outer half-height must lie in (2 ell, 3 ell)");
  if (!(target.ell_tilde > braid.cap_z))
    throw InvalidDomainNesting("target caps must lie beyond the braid caps");

  const double blend_height = 0.25 * target.delta0;
  Braid out;
  out.domain = target;
  out.cap_z = target.ell_tilde;
  for (const auto& s : braid.strands) {
    auto pieces = s.curve.pieces();
    const auto top = upward_extension(s.curve, target.ell_tilde, blend_height);
    pieces.insert(pieces.end(), top.begin(), top.end());
    // Bottom extension via the z-mirrored, reversed curve, mapped back afterwards.
    const auto flipped = s.curve.reversed().z_mirrored();
    const auto bot = upward_extension(flipped, target.ell_tilde, blend_height);
    const auto mapped = PiecewiseCubic(bot).reversed().z_mirrored();
    std::vector<CubicPiece> all(mapped.pieces());
    all.insert(all.end(), pieces.begin(), pieces.end());
    out.strands.push_back(Strand{PiecewiseCubic(std::move(all)).rescaled(-1.0, 1.0)});
  }
  return out;
}

namespace {

// One rotation-minimizing transport step (double reflection).
vec3 rmf_step(const vec3& p0, const vec3& tan0, const vec3& n0, const vec3& p1,
              const vec3& tan1) {
  const vec3 v1 = p1 - p0;
  const double c1 = v1.squaredNorm();
  if (c1 < 1e-28) return n0;
  const vec3 nL = n0 - (2.0 / c1) * v1.dot(n0) * v1;
  const vec3 tL = tan0 - (2.0 / c1) * v1.dot(tan0) * v1;
  const vec3 v2 = tan1 - tL;
  const double c2 = v2.squaredNorm();
  vec3 n1 = (c2 < 1e-28) ? nL : nL - (2.0 / c2) * v2.dot(nL) * v2;
  n1 -= n1.dot(tan1) * tan1;
  return n1.normalized();
}

vec3 unit_tangent(const PiecewiseCubic& c, double t) {
  const vec3 d = c.deriv(t);
  const double n = d.norm();
  if (!(n > 0)) throw NotMonotoneInZ("strand tangent vanished");
  return d / n;
}

}  // namespace

std::vector<TubeFrame> make_tube_frames(const Braid& braid, int n_samples, double radius) {
  if (n_samples < 3) throw BadParameter("tube frames need at least 3 samples");
  const auto rep = validate_braid(braid);
  if (!rep.pass) throw BadParameter("tube frames need a valid braid: " + rep.failure);

  const double limit = std::min(rep.min_pair_distance, rep.wall_clearance);
  double r = radius;
  if (r <= 0) r = 0.4 * limit;
  if (!(r < 0.5 * rep.min_pair_distance) || !(r < rep.wall_clearance))
    throw BadParameter("tube radius violates the disjointness/clearance bounds");

  std::vector<TubeFrame> frames;
  frames.reserve(braid.strands.size());
  for (size_t k = 0; k < braid.strands.size(); ++k) {
    const auto& curve = braid.strands[k].curve;
    TubeFrame f;
    f.strand = static_cast<int>(k);
    f.radius = r;
    f.curve = curve;
    f.ts.resize(n_samples);
    f.n1s.resize(n_samples);
    for (int i = 0; i < n_samples; ++i) f.ts[i] = -1.0 + 2.0 * i / (n_samples - 1);

    vec3 tan = unit_tangent(curve, f.ts[0]);
    vec3 seed = (std::abs(tan.x()) < 0.9) ? vec3(1, 0, 0) : vec3(0, 1, 0);
    f.n1s[0] = (seed - seed.dot(tan) * tan).normalized();
    for (int i = 1; i < n_samples; ++i) {
      const vec3 tan1 = unit_tangent(curve, f.ts[i]);
      f.n1s[i] = rmf_step(curve.value(f.ts[i - 1]), tan, f.n1s[i - 1], curve.value(f.ts[i]), tan1);
      tan = tan1;
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

vec3 frame_normal(const TubeFrame& frame, double t) {
  const auto it = std::upper_bound(frame.ts.begin(), frame.ts.end(), t);
  int i = static_cast<int>(it - frame.ts.begin()) - 1;
  i = std::clamp(i, 0, static_cast<int>(frame.ts.size()) - 1);
  // Nearer sample keeps the transport step short.
  if (i + 1 < static_cast<int>(frame.ts.size()) &&
      std::abs(frame.ts[i + 1] - t) < std::abs(t - frame.ts[i]))
    ++i;
  const double ti = frame.ts[i];
  const vec3 tan0 = unit_tangent(frame.curve, ti);
  const vec3 tan1 = unit_tangent(frame.curve, t);
  return rmf_step(frame.curve.value(ti), tan0, frame.n1s[i], frame.curve.value(t), tan1);
}

TubeCoords tube_coordinates(const TubeFrame& frame, const vec3& x) {
  if (!x.allFinite()) throw BadParameter("tube_coordinates: non-finite point");
  const auto& c = frame.curve;

  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < frame.ts.size(); ++i) {
    const double d2 = (x - c.value(frame.ts[i])).squaredNorm();
    if (d2 < bd) {
      bd = d2;
      best = static_cast<int>(i);
    }
  }

  // Newton on g(t) = (x - gamma(t)) . gamma'(t), clamped to the parameter range.
  double t = frame.ts[best];
  for (int k = 0; k < 60; ++k) {
    const vec3 diff = x - c.value(t);
    const vec3 d1 = c.deriv(t);
    const double g = diff.dot(d1);
    const double gp = -d1.squaredNorm() + diff.dot(c.second(t));
    if (gp >= 0) break;  // not locally convex in distance; keep current t
    double step = -g / gp;
    const double cap = 2.0 / (frame.ts.size() - 1.0);
    step = std::clamp(step, -cap, cap);
    const double tn = std::clamp(t + step, -1.0, 1.0);
    if (std::abs(tn - t) < 1e-15) {
      t = tn;
      break;
    }
    t = tn;
  }

  const vec3 diff = x - c.value(t);
  if (diff.norm() > frame.radius)
    throw OutsideTube("point lies outside the tube (distance " + std::to_string(diff.norm()) +
                      " > radius " + std::to_string(frame.radius) + ")");
  const vec3 tan = unit_tangent(c, t);
  const vec3 n1 = frame_normal(frame, t);
  const vec3 n2 = tan.cross(n1).normalized();
  return TubeCoords{diff.dot(n1), diff.dot(n2), t};
}

}  // namespace glv
