#include "glv/braid_word.hpp"

#include "glv/errors.hpp"
#include "doctest.h"
#include "test_braids.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace glv;
using namespace glv::testing;

namespace {

// Independent crossing enumerator: walk a fine z-grid, sort strands by the
// screen coordinate at each level, and record every adjacent transposition of
// the order. Signs come from the depth coordinate and the slope difference.
// Strands are sampled analytically, not through the spline machinery.
std::vector<int> oracle_word(const std::vector<std::vector<vec3>>& polys, vec3 dir,
                             int levels = 30000) {
  dir.z() = 0.0;
  dir.normalize();
  const vec3 eu = vec3(0, 0, 1).cross(dir).normalized();
  const int n = static_cast<int>(polys.size());

  auto coord = [&](int s, double z, const vec3& axis) {
    const auto& pts = polys[s];
    size_t j = 1;
    while (j + 1 < pts.size() && pts[j].z() < z) ++j;
    const double w = (z - pts[j - 1].z()) / (pts[j].z() - pts[j - 1].z());
    return (pts[j - 1] + w * (pts[j] - pts[j - 1])).dot(axis);
  };

  double zlo = -1e300, zhi = 1e300;
  for (const auto& pts : polys) {
    zlo = std::max(zlo, pts.front().z());
    zhi = std::min(zhi, pts.back().z());
  }
  const double margin = 1e-7 * (zhi - zlo);
  zlo += margin;
  zhi -= margin;

  auto order_at = [&](double z) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return coord(a, z, eu) < coord(b, z, eu); });
    return idx;
  };

  std::vector<int> word;
  auto prev = order_at(zlo);
  for (int lev = 1; lev <= levels; ++lev) {
    const double z = zlo + (zhi - zlo) * lev / levels;
    const auto cur = order_at(z);
    if (cur == prev) continue;
    // exactly one adjacent swap expected per step at this resolution
    int k = -1;
    for (int i = 0; i < n; ++i)
      if (cur[i] != prev[i]) {
        k = i;
        break;
      }
    REQUIRE(k >= 0);
    REQUIRE(k + 1 < n);
    REQUIRE(cur[k] == prev[k + 1]);
    REQUIRE(cur[k + 1] == prev[k]);
    for (int i = k + 2; i < n; ++i) REQUIRE(cur[i] == prev[i]);

    const int a = prev[k], b = prev[k + 1];
    const double zm = z - 0.5 * (zhi - zlo) / levels;
    const int over = (coord(a, zm, dir) > coord(b, zm, dir)) ? a : b;
    const double dz = (zhi - zlo) / levels;
    auto slope_of = [&](int s) { return (coord(s, z, eu) - coord(s, z - dz, eu)) / dz; };
    const double s_over = slope_of(over);
    const double s_under = slope_of(over == a ? b : a);
    word.push_back((s_over > s_under ? 1 : -1) * (k + 1));
    prev = cur;
  }
  return free_reduce(word);
}

std::vector<std::vector<vec3>> analytic_exchange(double turns, int orientation, int npts = 3000) {
  std::vector<std::vector<vec3>> polys(2);
  for (int i = 0; i <= npts; ++i) {
    const double s = -1.0 + 2.0 * i / npts;
    const double th = orientation * 2.0 * PI * turns * smoothstep(0.5 * (s + 1.0));
    polys[0].emplace_back(0.3 * std::cos(th), 0.3 * std::sin(th), s);
    polys[1].emplace_back(-0.3 * std::cos(th), -0.3 * std::sin(th), s);
  }
  return polys;
}

std::vector<std::vector<vec3>> analytic_sigma12inv(int npts = 4000) {
  std::vector<std::vector<vec3>> polys(3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i <= npts; ++i) polys[k].push_back(sigma12inv_pos(k, -1.0 + 2.0 * i / npts));
  return polys;
}

}  // namespace

TEST_CASE("word utilities") {
  CHECK(free_reduce({1, -1}).empty());
  CHECK(free_reduce({1, 2, -2, -1}).empty());
  CHECK(free_reduce({1, -2, 2, 1}) == std::vector<int>{1, 1});
  CHECK(free_reduce({-3, 3, 2}) == std::vector<int>{2});

  CHECK(word_permutation({}, 3) == std::vector<int>{0, 1, 2});
  CHECK(word_permutation({1}, 2) == std::vector<int>{1, 0});
  CHECK(word_permutation({1, -2}, 3) == std::vector<int>{2, 0, 1});
}

TEST_CASE("trivial braid has trivial invariants") {
  const auto braid = vertical_braid({vec3(-0.4, 0, 0), vec3(0, 0.1, 0), vec3(0.4, 0, 0)});
  const auto inv = braid_invariants(braid, vec3(0, 1, 0));
  CHECK(inv.n_strands == 3);
  CHECK(inv.word.empty());
  CHECK(inv.permutation == std::vector<int>{0, 1, 2});
  CHECK(inv.component == std::vector<int>{0, 1, 2});
  REQUIRE(inv.linking.rows() == 3);
  CHECK(inv.linking.cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("single exchange gives sigma_1 and a transposition") {
  const auto braid = exchange_braid();
  const auto inv = braid_invariants(braid, vec3(0, 1, 0));
  CHECK(inv.n_strands == 2);
  CHECK(inv.word == std::vector<int>{1});
  CHECK(inv.permutation == std::vector<int>{1, 0});
  // both strands in one closure component: 1x1 zero matrix
  CHECK(inv.component == std::vector<int>{0, 0});
  REQUIRE(inv.linking.rows() == 1);
  CHECK(inv.linking(0, 0) == 0);

  // clockwise exchange flips the sign
  const auto mirror = braid_invariants(exchange_braid(0.5, -1), vec3(0, 1, 0));
  CHECK(mirror.word == std::vector<int>{-1});
}

TEST_CASE("double exchange closes to the Hopf link") {
  const auto braid = exchange_braid(1.0);
  const auto inv = braid_invariants(braid, vec3(0, 1, 0));
  CHECK(inv.word == std::vector<int>{1, 1});
  CHECK(inv.permutation == std::vector<int>{0, 1});
  CHECK(inv.component == std::vector<int>{0, 1});
  REQUIRE(inv.linking.rows() == 2);
  CHECK(inv.linking(0, 1) == 1);
  CHECK(inv.linking(1, 0) == 1);
  CHECK(inv.linking(0, 0) == 0);
  CHECK(inv.linking(1, 1) == 0);
}

TEST_CASE("sigma_1 sigma_2^{-1} braid") {
  const auto braid = sigma12inv_braid();
  // viewing along -y puts the screen axis at +x, so slots follow the x order
  const auto inv = braid_invariants(braid, vec3(0, -1, 0));
  CHECK(inv.n_strands == 3);
  CHECK(inv.word == std::vector<int>{1, -2});
  CHECK(inv.permutation == std::vector<int>{2, 0, 1});
  // single closure component (3-cycle), so a 1x1 zero linking matrix
  CHECK(inv.component == std::vector<int>{0, 0, 0});
  REQUIRE(inv.linking.rows() == 1);
  CHECK(inv.linking(0, 0) == 0);
}

TEST_CASE("crossing words match the independent enumerator") {
  const vec3 dirs[] = {vec3(0, 1, 0), vec3(0.83, -0.41, 0), vec3(-0.37, -0.56, 0.2)};
  for (const auto& dir : dirs) {
    {
      const auto polys = analytic_exchange(0.5, +1);
      CHECK(polyline_invariants(polys, dir).word == oracle_word(polys, dir));
    }
    {
      const auto polys = analytic_exchange(1.0, +1);
      CHECK(polyline_invariants(polys, dir).word == oracle_word(polys, dir));
    }
    {
      const auto polys = analytic_sigma12inv();
      CHECK(polyline_invariants(polys, dir).word == oracle_word(polys, dir));
    }
  }
}

TEST_CASE("permutation and linking are projection independent") {
  const vec3 dirs[] = {vec3(0, 1, 0), vec3(1, 0.2, 0), vec3(-0.6, 0.8, 0),
                       vec3(0.31, -0.95, 0.1)};
  const Braid braids[] = {exchange_braid(), exchange_braid(1.0), sigma12inv_braid()};
  for (const auto& braid : braids) {
    const auto ref = braid_invariants(braid, dirs[0]);
    for (const auto& dir : dirs) {
      const auto inv = braid_invariants(braid, dir);
      CHECK(inv.permutation == ref.permutation);
      CHECK(inv.component == ref.component);
      CHECK((inv.linking.array() == ref.linking.array()).all());
    }
  }

  // two-strand words are conjugation invariant, so they agree across directions
  for (const auto& dir : dirs) {
    CHECK(braid_invariants(exchange_braid(), dir).word == std::vector<int>{1});
    CHECK(braid_invariants(exchange_braid(1.0), dir).word == std::vector<int>{1, 1});
  }
}

TEST_CASE("extension preserves invariants") {
  const Braid braids[] = {exchange_braid(1.0), sigma12inv_braid()};
  for (const auto& braid : braids) {
    const auto ext = extend_braid(braid, braid.domain);
    const auto a = braid_invariants(braid, vec3(0, 1, 0));
    const auto b = braid_invariants(ext, vec3(0, 1, 0));
    CHECK(same_invariants(a, b));
  }
}

TEST_CASE("degenerate projection is rejected when retries are disabled") {
  // along x the exchange crossing has an exact over/under depth tie
  ProjectionOptions opts;
  opts.max_retries = 0;
  CHECK_THROWS_AS(braid_invariants(exchange_braid(), vec3(1, 0, 0), opts),
                  DegenerateProjection);
}
