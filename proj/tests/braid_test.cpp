#include "glv/braid.hpp"

#include "glv/errors.hpp"
#include "doctest.h"
#include "test_braids.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

using namespace glv;
using namespace glv::testing;

namespace {

// Brute-force minimum distance between two strands over a fine parameter grid.
double brute_force_min_distance(const Strand& a, const Strand& b, int n = 1200) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<vec3> pa(n + 1), pb(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = -1.0 + 2.0 * i / n;
    pa[i] = a.pos(t);
    pb[i] = b.pos(t);
  }
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) best = std::min(best, (pa[i] - pb[j]).norm());
  return best;
}

// Brute-force nearest parameter on a strand.
double brute_force_foot(const Strand& s, const vec3& x, int n = 20000) {
  double best = std::numeric_limits<double>::infinity(), tb = 0;
  for (int i = 0; i <= n; ++i) {
    const double t = -1.0 + 2.0 * i / n;
    const double d = (x - s.pos(t)).squaredNorm();
    if (d < best) {
      best = d;
      tb = t;
    }
  }
  return tb;
}

}  // namespace

TEST_CASE("parallel vertical strands validate with the expected clearance") {
  const auto braid = vertical_braid({vec3(0.3, 0, 0), vec3(-0.3, 0, 0)});
  const auto rep = validate_braid(braid);
  CHECK(rep.pass);
  CHECK(rep.failure.empty());
  CHECK(rep.min_pair_distance == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(rep.wall_clearance == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(rep.min_dz > 0);
}

TEST_CASE("strands sharing a point fail disjointness") {
  DomainSpec dom;
  Braid braid;
  braid.domain = dom;
  braid.cap_z = dom.ell;
  // straight diagonals crossing at the origin
  braid.strands.push_back(Strand::through(
      {-1.0, 1.0}, {vec3(-0.4, 0, -dom.ell), vec3(0.4, 0, dom.ell)}));
  braid.strands.push_back(Strand::through(
      {-1.0, 1.0}, {vec3(0.4, 0, -dom.ell), vec3(-0.4, 0, dom.ell)}));
  const auto rep = validate_braid(braid);
  CHECK(!rep.pass);
  CHECK(rep.failure == "disjointness margin");
  CHECK(rep.min_pair_distance < 1e-9);
}

TEST_CASE("helical exchange validates; min distance matches brute force") {
  const auto braid = exchange_braid();
  const auto rep = validate_braid(braid);
  CHECK(rep.pass);
  // antipodal strands on a circle of radius 0.3 stay at distance 0.6 for all z
  CHECK(rep.min_pair_distance == doctest::Approx(0.6).epsilon(1e-6));

  const auto three = sigma12inv_braid();
  const auto rep3 = validate_braid(three);
  CHECK(rep3.pass);
  double oracle = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      oracle = std::min(oracle, brute_force_min_distance(three.strands[i], three.strands[j]));
  CHECK(rep3.min_pair_distance <= oracle + 1e-10);
  CHECK(oracle - rep3.min_pair_distance <= 2e-5);
}

TEST_CASE("constraint violations are identified") {
  DomainSpec dom;

  Braid empty;
  empty.domain = dom;
  empty.cap_z = dom.ell;
  CHECK_THROWS_AS(validate_braid(empty), EmptyBraid);

  CHECK_THROWS_AS(Strand::through({-1.0, 1.0}, {vec3(0, 0, -1),
                                                vec3(std::nan(""), 0, 1)}),
                  NonFiniteControlPoint);

  Braid misplaced = vertical_braid({vec3(0.2, 0, 0)});
  misplaced.cap_z = 1.1;  // strand still ends at |z| = 1
  auto rep = validate_braid(misplaced);
  CHECK(!rep.pass);
  CHECK(rep.failure == "endpoint placement");

  Braid dipping;
  dipping.domain = dom;
  dipping.cap_z = dom.ell;
  dipping.strands.push_back(Strand::through(
      {-1.0, -0.3, 0.3, 1.0},
      {vec3(0, 0, -1), vec3(0.1, 0, 0.6), vec3(-0.1, 0, -0.6), vec3(0, 0, 1)}));
  rep = validate_braid(dipping);
  CHECK(!rep.pass);
  CHECK(rep.failure == "z-monotonicity");

  Braid bulging;
  bulging.domain = dom;
  bulging.cap_z = dom.ell;
  bulging.strands.push_back(Strand::through(
      {-1.0, 0.0, 1.0}, {vec3(0.2, 0, -1), vec3(1.4, 0, 0), vec3(0.2, 0, 1)}));
  rep = validate_braid(bulging);
  CHECK(!rep.pass);
  CHECK(rep.failure == "wall clearance");
}

TEST_CASE("vertical braid extends to vertical strands") {
  const auto braid = vertical_braid({vec3(0.3, 0, 0), vec3(-0.3, 0, 0)});
  const auto ext = extend_braid(braid, braid.domain);
  CHECK(ext.cap_z == doctest::Approx(braid.domain.ell_tilde));
  CHECK(validate_braid(ext).pass);
  for (const auto& s : ext.strands) {
    CHECK(std::abs(s.pos(-1.0).z() + braid.domain.ell_tilde) < 1e-12);
    CHECK(std::abs(s.pos(1.0).z() - braid.domain.ell_tilde) < 1e-12);
    const double x0 = s.pos(0.0).x(), y0 = s.pos(0.0).y();
    for (double t = -1.0; t <= 1.0; t += 0.05) {
      CHECK(std::abs(s.pos(t).x() - x0) < 1e-12);
      CHECK(std::abs(s.pos(t).y() - y0) < 1e-12);
    }
  }
}

TEST_CASE("helical extension agrees with the original on the overlap") {
  const auto braid = exchange_braid();
  const auto ext = extend_braid(braid, braid.domain);
  CHECK(validate_braid(ext).pass);

  for (size_t k = 0; k < braid.strands.size(); ++k) {
    const auto& orig = braid.strands[k];
    const auto& wide = ext.strands[k];
    for (int i = 0; i <= 40; ++i) {
      const double z = -0.999 + 1.998 * i / 40.0;
      const vec3 a = orig.pos(orig.param_at_z(z));
      const vec3 b = wide.pos(wide.param_at_z(z));
      CHECK((a - b).norm() < 1e-12);
    }
  }

  // C2 across every breakpoint of the extended curve
  for (const auto& s : ext.strands) {
    const auto& pieces = s.curve.pieces();
    for (size_t i = 0; i + 1 < pieces.size(); ++i) {
      const double tb = pieces[i].t1;
      CHECK((pieces[i].value(tb) - pieces[i + 1].value(tb)).norm() < 1e-10);
      CHECK((pieces[i].deriv(tb) - pieces[i + 1].deriv(tb)).norm() < 1e-9);
      CHECK((pieces[i].second(tb) - pieces[i + 1].second(tb)).norm() < 1e-7);
    }
  }
}

TEST_CASE("extension rejects bad targets") {
  const auto braid = exchange_braid();
  DomainSpec shallow = braid.domain;
  shallow.ell_tilde = 1.9;  // <= 2*ell
  CHECK_THROWS_AS(extend_braid(braid, shallow), InvalidDomainNesting);

  DomainSpec wrong_rho = braid.domain;
  wrong_rho.rho = 2.0;
  CHECK_THROWS_AS(extend_braid(braid, wrong_rho), InvalidDomainNesting);
}

TEST_CASE("tube frames are orthonormal and rotation-minimizing") {
  const auto braid = exchange_braid();
  const auto frames = make_tube_frames(braid);
  REQUIRE(frames.size() == 2);
  CHECK(frames[0].radius == doctest::Approx(0.4 * 0.6).epsilon(1e-3));

  for (const auto& f : frames) {
    for (size_t i = 0; i < f.ts.size(); ++i) {
      const vec3 tan = f.curve.deriv(f.ts[i]).normalized();
      CHECK(std::abs(f.n1s[i].norm() - 1.0) < 1e-12);
      CHECK(std::abs(f.n1s[i].dot(tan)) < 1e-12);
    }
  }

  // independent fine-stepped transport reaches the same end normal
  const auto& f = frames[0];
  const int fine = 4096;
  vec3 n = f.n1s.front();
  vec3 tan_prev = f.curve.deriv(-1.0).normalized();
  vec3 p_prev = f.curve.value(-1.0);
  for (int i = 1; i <= fine; ++i) {
    const double t = -1.0 + 2.0 * i / fine;
    const vec3 p = f.curve.value(t);
    const vec3 tan = f.curve.deriv(t).normalized();
    const vec3 v1 = p - p_prev;
    const double c1 = v1.squaredNorm();
    vec3 nl = n - (2.0 / c1) * v1.dot(n) * v1;
    const vec3 tl = tan_prev - (2.0 / c1) * v1.dot(tan_prev) * v1;
    const vec3 v2 = tan - tl;
    const double c2 = v2.squaredNorm();
    if (c2 > 1e-28) nl = nl - (2.0 / c2) * v2.dot(nl) * v2;
    n = (nl - nl.dot(tan) * tan).normalized();
    tan_prev = tan;
    p_prev = p;
  }
  CHECK((n - f.n1s.back()).norm() < 1e-5);
}

TEST_CASE("tube coordinates invert the frame map") {
  const auto braid = exchange_braid();
  const auto frames = make_tube_frames(braid);
  const auto& f = frames[0];
  const auto& s = braid.strands[0];

  for (double t = -0.95; t <= 0.95; t += 0.121) {
    const vec3 tan = s.d1(t).normalized();
    const vec3 n1 = frame_normal(f, t);
    const vec3 n2 = tan.cross(n1).normalized();

    const auto on = tube_coordinates(f, s.pos(t));
    CHECK(std::abs(on.theta1) < 1e-10);
    CHECK(std::abs(on.theta2) < 1e-10);
    CHECK(std::abs(on.t - t) < 1e-6);

    for (const auto& th : {std::pair{0.1, 0.0}, {0.0, -0.08}, {0.07, 0.05}}) {
      const vec3 x = s.pos(t) + th.first * n1 + th.second * n2;
      const auto tc = tube_coordinates(f, x);
      CHECK(std::abs(tc.theta1 - th.first) < 1e-8);
      CHECK(std::abs(tc.theta2 - th.second) < 1e-8);
      CHECK(std::abs(tc.t - t) < 1e-7);
    }
  }
}

TEST_CASE("foot point matches brute force for generic points") {
  const auto braid = sigma12inv_braid();
  const auto frames = make_tube_frames(braid);
  const auto& f = frames[0];
  const auto& s = braid.strands[0];

  int checked = 0;
  for (double t = -0.9; t <= 0.9; t += 0.3) {
    const vec3 tan = s.d1(t).normalized();
    const vec3 n1 = frame_normal(f, t);
    const vec3 n2 = tan.cross(n1).normalized();
    const vec3 x = s.pos(t) + 0.4 * f.radius * (0.6 * n1 - 0.8 * n2);
    const auto tc = tube_coordinates(f, x);
    const double tb = brute_force_foot(s, x);
    CHECK(std::abs(tc.t - tb) < 1e-4);
    CHECK((x - s.pos(tc.t)).norm() <= (x - s.pos(tb)).norm() + 1e-10);
    ++checked;
  }
  CHECK(checked > 0);

  const vec3 far = s.pos(0.0) + vec3(0.9, 0, 0);
  CHECK_THROWS_AS(tube_coordinates(f, far), OutsideTube);
}

TEST_CASE("braid files round-trip") {
  const auto braid = exchange_braid();
  const std::string path = "test_exchange.braid";
  write_braid(braid, path, 65);
  const auto back = read_braid(path);
  REQUIRE(back.strands.size() == braid.strands.size());
  CHECK(back.cap_z == doctest::Approx(braid.cap_z).epsilon(1e-12));
  CHECK(back.domain.ell_tilde == doctest::Approx(braid.domain.ell_tilde));
  for (size_t k = 0; k < braid.strands.size(); ++k)
    for (double t = -1.0; t <= 1.0; t += 0.1)
      CHECK((back.strands[k].pos(t) - braid.strands[k].pos(t)).norm() < 1e-4);
  CHECK(validate_braid(back).pass);
  std::remove(path.c_str());
}

TEST_CASE("braid file errors are specific") {
  auto write_file = [](const std::string& path, const std::string& body) {
    FILE* fp = std::fopen(path.c_str(), "w");
    REQUIRE(fp != nullptr);
    std::fputs(body.c_str(), fp);
    std::fclose(fp);
  };

  CHECK_THROWS_AS(read_braid("does_not_exist.braid"), IoError);

  write_file("bad1.braid", "[domain]\nrho = 1\nell = 1\nell_tilde = 2.5\ndelta0 = 0.3\n");
  CHECK_THROWS_AS(read_braid("bad1.braid"), EmptyBraid);

  write_file("bad2.braid", "[domain]\nrho = oops\n");
  CHECK_THROWS_AS(read_braid("bad2.braid"), FormatError);

  write_file("bad3.braid",
             "[domain]\nrho = 1\nell = 1\nell_tilde = 2.5\ndelta0 = 0.3\n"
             "[strand]\n-1 0 0 -1\nnan 0 0 1\n");
  CHECK_THROWS_AS(read_braid("bad3.braid"), NonFiniteControlPoint);

  for (const auto* p : {"bad1.braid", "bad2.braid", "bad3.braid"}) std::remove(p);
}
