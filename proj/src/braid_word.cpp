#include "glv/braid_word.hpp"

#include "glv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace glv {

std::vector<int> free_reduce(std::vector<int> word) {
  std::vector<int> out;
  out.reserve(word.size());
  for (int g : word) {
    if (!out.empty() && out.back() == -g)
      out.pop_back();
    else
      out.push_back(g);
  }
  return out;
}

std::vector<int> word_permutation(const std::vector<int>& word, int n) {
  std::vector<int> occ(n);
  std::iota(occ.begin(), occ.end(), 0);
  for (int g : word) {
    const int k = std::abs(g) - 1;
    if (k < 0 || k + 1 >= n) throw BadParameter("word generator out of range");
    std::swap(occ[k], occ[k + 1]);
  }
  // occ[slot] = bottom slot of the strand now occupying `slot`; invert to get
  // bottom slot -> top slot.
  std::vector<int> perm(n);
  for (int s = 0; s < n; ++s) perm[occ[s]] = s;
  return perm;
}

namespace {

struct Sampled {
  std::vector<double> z, u, w;  // ascending z
  std::vector<vec3> p;
};

struct RetryProjection : std::exception {
  const char* reason;
  explicit RetryProjection(const char* r) : reason(r) {}
  const char* what() const noexcept override { return reason; }
};

double interp(const std::vector<double>& z, const std::vector<double>& f, double zq) {
  const auto it = std::upper_bound(z.begin(), z.end(), zq);
  int i = static_cast<int>(it - z.begin()) - 1;
  i = std::clamp(i, 0, static_cast<int>(z.size()) - 2);
  const double s = (zq - z[i]) / (z[i + 1] - z[i]);
  return f[i] + s * (f[i + 1] - f[i]);
}

double slope(const std::vector<double>& z, const std::vector<double>& f, double zq) {
  const auto it = std::upper_bound(z.begin(), z.end(), zq);
  int i = static_cast<int>(it - z.begin()) - 1;
  i = std::clamp(i, 0, static_cast<int>(z.size()) - 2);
  return (f[i + 1] - f[i]) / (z[i + 1] - z[i]);
}

struct Crossing {
  double z;
  int a, b;   // strand indices (input order)
  int slot;   // 1-based generator index
  int sign;
};

BraidInvariants diagram_invariants(const std::vector<Sampled>& strands, double zlo, double zhi,
                                   const ProjectionOptions& opts) {
  const int n = static_cast<int>(strands.size());
  const double span = zhi - zlo;
  double uscale = 0.0;
  for (const auto& s : strands)
    for (double u : s.u) uscale = std::max(uscale, std::abs(u));
  uscale = std::max(uscale, 1e-300);

  const double z_eps = 1e-9 * span;
  const double za = zlo + z_eps, zb = zhi - z_eps;
  const double touch_tol = 1e-9 * uscale;

  // Crossings per unordered pair: sign changes of u_a - u_b on a fine grid,
  // refined by bisection; cells where the gap dips low are sub-scanned to catch
  // crossing pairs hiding inside one cell.
  std::vector<Crossing> crossings;
  const int NZ = opts.z_levels;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      auto gap = [&](double z) {
        return interp(strands[a].z, strands[a].u, z) - interp(strands[b].z, strands[b].u, z);
      };
      auto refine = [&](double lo, double hi) {
        double flo = gap(lo);
        for (int k = 0; k < 100; ++k) {
          const double mid = 0.5 * (lo + hi);
          const double fm = gap(mid);
          if ((flo < 0) == (fm < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
          if (hi - lo < 1e-14 * span) break;
        }
        return 0.5 * (lo + hi);
      };
      auto emit = [&](double zc) {
        const double sa = slope(strands[a].z, strands[a].u, zc);
        const double sb = slope(strands[b].z, strands[b].u, zc);
        if (std::abs(sa - sb) < 1e-7 * uscale / span)
          throw RetryProjection("tangential crossing in projection");
        const double wa = interp(strands[a].z, strands[a].w, zc);
        const double wb = interp(strands[b].z, strands[b].w, zc);
        if (std::abs(wa - wb) < 1e-9 * uscale)
          throw RetryProjection("over/under depth tie at a crossing");
        const int over = (wa > wb) ? a : b;
        const double s_over = (over == a) ? sa : sb;
        const double s_under = (over == a) ? sb : sa;
        const int sign = (s_over > s_under) ? +1 : -1;
        const double uc = 0.5 * (interp(strands[a].z, strands[a].u, zc) +
                                 interp(strands[b].z, strands[b].u, zc));
        int below = 0;
        for (int c = 0; c < n; ++c) {
          if (c == a || c == b) continue;
          const double ucc = interp(strands[c].z, strands[c].u, zc);
          if (std::abs(ucc - uc) < 1e-8 * uscale)
            throw RetryProjection("triple point in projection");
          if (ucc < uc) ++below;
        }
        crossings.push_back({zc, a, b, below + 1, sign});
      };

      double zprev = za, fprev = gap(za);
      if (std::abs(fprev) < touch_tol) throw RetryProjection("strands meet at the bottom cap");
      for (int i = 1; i <= NZ; ++i) {
        const double zc = za + (zb - za) * i / NZ;
        const double f = gap(zc);
        const bool flip = (fprev < 0) != (f < 0);
        if (flip) {
          emit(refine(zprev, zc));
        } else if (std::min(std::abs(fprev), std::abs(f)) < 0.02 * uscale) {
          // near miss: sub-scan for an even number of crossings inside the cell
          double zp = zprev, fp = fprev;
          for (int k = 1; k <= 64; ++k) {
            const double zq = zprev + (zc - zprev) * k / 64.0;
            const double fq = gap(zq);
            if ((fp < 0) != (fq < 0)) emit(refine(zp, zq));
            zp = zq;
            fp = fq;
          }
        }
        zprev = zc;
        fprev = f;
      }
      if (std::abs(fprev) < touch_tol) throw RetryProjection("strands meet at the top cap");
    }

  std::sort(crossings.begin(), crossings.end(),
            [](const Crossing& x, const Crossing& y) { return x.z < y.z; });
  for (size_t i = 0; i + 1 < crossings.size(); ++i)
    if (crossings[i + 1].z - crossings[i].z < 1e-7 * span)
      throw RetryProjection("coincident crossing heights");

  // Slot assignments at the caps.
  auto order_at = [&](double z) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> u(n);
    for (int s = 0; s < n; ++s) u[s] = interp(strands[s].z, strands[s].u, z);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return u[x] < u[y]; });
    for (int k = 0; k + 1 < n; ++k)
      if (u[idx[k + 1]] - u[idx[k]] < 1e-9 * uscale)
        throw RetryProjection("slot tie at a cap");
    return idx;  // idx[slot] = strand
  };
  const auto bottom = order_at(za);
  const auto top = order_at(zb);

  // Word consistency: applying the crossings to the bottom order must yield the
  // top order; a mismatch means the scan missed a crossing.
  std::vector<int> occ = bottom;
  std::vector<int> word;
  word.reserve(crossings.size());
  for (const auto& c : crossings) {
    const int k = c.slot - 1;
    if (k < 0 || k + 1 >= n || !((occ[k] == c.a && occ[k + 1] == c.b) ||
                                 (occ[k] == c.b && occ[k + 1] == c.a)))
      throw RetryProjection("crossing sequence inconsistent with strand order");
    std::swap(occ[k], occ[k + 1]);
    word.push_back(c.sign * c.slot);
  }
  if (occ != top) throw RetryProjection("diagram permutation mismatch");

  // Canonical labels: bottom endpoints sorted lexicographically by (x, y).
  auto lex_rank = [&](bool at_top) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) {
      const vec3& px = at_top ? strands[x].p.back() : strands[x].p.front();
      const vec3& py = at_top ? strands[y].p.back() : strands[y].p.front();
      if (px.x() != py.x()) return px.x() < py.x();
      return px.y() < py.y();
    });
    std::vector<int> rank(n);
    for (int r = 0; r < n; ++r) rank[idx[r]] = r;
    return rank;  // strand -> rank
  };
  const auto rank_b = lex_rank(false);
  const auto rank_t = lex_rank(true);

  BraidInvariants inv;
  inv.n_strands = n;
  inv.permutation.resize(n);
  for (int s = 0; s < n; ++s) inv.permutation[rank_b[s]] = rank_t[s];
  inv.word = free_reduce(word);

  // Closure components: the closure joins top slot j back to bottom slot j.
  std::vector<int> slot_b(n), slot_t(n);
  for (int k = 0; k < n; ++k) slot_b[bottom[k]] = k;
  for (int k = 0; k < n; ++k) slot_t[top[k]] = k;
  std::vector<int> comp_of_strand(n, -1);
  int ncomp = 0;
  for (int r = 0; r < n; ++r) {
    // walk in canonical order so component ids are canonical
    int s0 = -1;
    for (int s = 0; s < n; ++s)
      if (rank_b[s] == r) s0 = s;
    if (comp_of_strand[s0] >= 0) continue;
    int s = s0;
    while (comp_of_strand[s] < 0) {
      comp_of_strand[s] = ncomp;
      s = bottom[slot_t[s]];
    }
    ++ncomp;
  }
  inv.component.resize(n);
  for (int s = 0; s < n; ++s) inv.component[rank_b[s]] = comp_of_strand[s];

  Eigen::MatrixXi twice = Eigen::MatrixXi::Zero(ncomp, ncomp);
  for (const auto& c : crossings) {
    const int ca = comp_of_strand[c.a], cb = comp_of_strand[c.b];
    if (ca == cb) continue;
    twice(ca, cb) += c.sign;
    twice(cb, ca) += c.sign;
  }
  for (int i = 0; i < ncomp; ++i)
    for (int j = 0; j < ncomp; ++j)
      if (twice(i, j) % 2 != 0) throw RetryProjection("odd inter-component crossing sum");
  inv.linking = twice / 2;
  return inv;
}

BraidInvariants run_with_retries(const std::vector<std::vector<vec3>>& polys, const vec3& dir,
                                 const ProjectionOptions& opts) {
  if (polys.empty()) throw EmptyBraid("no strands to project");
  for (const auto& poly : polys)
    if (poly.size() < 2) throw BadParameter("polyline strand needs at least two points");

  vec3 d = dir;
  d.z() = 0.0;
  if (d.norm() < 1e-12) throw BadParameter("projection direction must have a horizontal part");
  d.normalize();

  std::mt19937 rng(opts.seed);
  std::string last = "";
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    const vec3 e_u = vec3(0, 0, 1).cross(d).normalized();
    std::vector<Sampled> strands(polys.size());
    double zlo = -std::numeric_limits<double>::infinity();
    double zhi = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (size_t k = 0; k < polys.size(); ++k) {
      auto pts = polys[k];
      if (pts.back().z() < pts.front().z()) std::reverse(pts.begin(), pts.end());
      auto& s = strands[k];
      for (const auto& p : pts) {
        if (!s.z.empty() && !(p.z() > s.z.back())) {
          if (p.z() == s.z.back()) continue;  // drop duplicate heights
          monotone = false;
          break;
        }
        s.z.push_back(p.z());
        s.u.push_back(p.dot(e_u));
        s.w.push_back(p.dot(d));
        s.p.push_back(p);
      }
      if (!monotone || s.z.size() < 2) throw NotMonotoneInZ("strand is not monotone in z");
      zlo = std::max(zlo, s.z.front());
      zhi = std::min(zhi, s.z.back());
    }
    if (!(zhi > zlo)) throw BadParameter("strands share no z range");

    try {
      return diagram_invariants(strands, zlo, zhi, opts);
    } catch (const RetryProjection& r) {
      last = r.reason;
      std::uniform_real_distribution<double> ang(0.05, 0.45);
      const double th = ang(rng) * ((attempt % 2 == 0) ? 1.0 : -1.0);
      const double c = std::cos(th), sn = std::sin(th);
      d = vec3(c * d.x() - sn * d.y(), sn * d.x() + c * d.y(), 0.0);
    }
  }
  throw DegenerateProjection("no generic projection found after retries (" + last + ")");
}

}  // namespace

BraidInvariants polyline_invariants(const std::vector<std::vector<vec3>>& strands,
                                    const vec3& dir, const ProjectionOptions& opts) {
  return run_with_retries(strands, dir, opts);
}

BraidInvariants braid_invariants(const Braid& braid, const vec3& dir,
                                 const ProjectionOptions& opts) {
  if (braid.strands.empty()) throw EmptyBraid("braid has no strands");
  std::vector<std::vector<vec3>> polys(braid.strands.size());
  const int N = std::max(64, opts.curve_samples);
  for (size_t k = 0; k < braid.strands.size(); ++k) {
    polys[k].reserve(N + 1);
    for (int i = 0; i <= N; ++i) polys[k].push_back(braid.strands[k].pos(-1.0 + 2.0 * i / N));
  }
  return run_with_retries(polys, dir, opts);
}

bool same_invariants(const BraidInvariants& a, const BraidInvariants& b) {
  return a.n_strands == b.n_strands && a.permutation == b.permutation &&
         a.component == b.component && a.word == b.word &&
         a.linking.rows() == b.linking.rows() &&
         (a.linking.array() == b.linking.array()).all();
}

}  // namespace glv
