#pragma once

#include "glv/domain.hpp"
#include "glv/spline.hpp"

#include <limits>
#include <string>
#include <vector>

namespace glv {

// One braid strand: a C^2 piecewise-cubic curve over t in [-1, 1], strictly rising
// in z, running from the bottom cap to the top cap of its braid's cylinder.
struct Strand {
  PiecewiseCubic curve;

  vec3 pos(double t) const { return curve.value(t); }
  vec3 d1(double t) const { return curve.deriv(t); }
  vec3 d2(double t) const { return curve.second(t); }

  // Natural spline through the given points, reparametrized onto [-1, 1].
  // Points must be ordered along the strand; if z decreases, orientation is flipped.
  static Strand through(const std::vector<double>& t, const std::vector<vec3>& points);

  // Parameter at the given height (curve must be strictly z-monotone).
  double param_at_z(double z) const;
};

struct Braid {
  std::vector<Strand> strands;
  DomainSpec domain;
  // |z| of the caps the strands span: domain.ell for raw input braids,
  // domain.ell_tilde after extension.
  double cap_z = 0.0;
};

struct ValidationReport {
  bool pass = false;
  std::string failure;  // offending constraint when !pass, empty otherwise
  double min_pair_distance = std::numeric_limits<double>::infinity();
  double wall_clearance = 0.0;  // rho - max strand radius
  double min_dz = 0.0;          // min z'(t) over all strands
  double endpoint_err = 0.0;    // worst |z(+-1) -+ cap_z|
};

// Checks endpoint placement, strict z-monotonicity, wall clearance and pairwise
// disjointness. Constraint violations are reported, not thrown; only structurally
// unusable input (no strands, non-finite data) throws.
ValidationReport validate_braid(const Braid& braid);

// Extends every strand straight to the caps of the taller target domain, with a
// short C^2 blend between the original end and the vertical continuation. The
// original pieces are kept verbatim (up to an affine parameter remap), so the
// extension agrees with the input pointwise on the overlap.
Braid extend_braid(const Braid& braid, const DomainSpec& target);

// Rotation-minimizing orthonormal frame along one strand plus the tube radius.
// theta coordinates of a point x near the strand are the components of
// x - gamma(t*) along (n1, n2) at the foot point t*.
struct TubeFrame {
  int strand = -1;
  double radius = 0.0;
  PiecewiseCubic curve;       // copy of the strand curve (frames stay self-contained)
  std::vector<double> ts;     // frame sample parameters, ascending
  std::vector<vec3> n1s;      // first normal at each sample; n2 = tangent x n1
};

// Frames for every strand. radius <= 0 selects the default
// 0.4 * min(min inter-strand distance, wall clearance).
std::vector<TubeFrame> make_tube_frames(const Braid& braid, int n_samples = 257,
                                        double radius = 0.0);

// Frame normal n1 transported to parameter t.
vec3 frame_normal(const TubeFrame& frame, double t);

struct TubeCoords {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double t = 0.0;  // foot-point parameter on the strand
};

// Tube coordinates of x: distance components along the frame normals at the
// nearest strand point. Throws OutsideTube when x is farther than the tube radius.
TubeCoords tube_coordinates(const TubeFrame& frame, const vec3& x);

// Braid input file: "[domain]" section with key = value lines, then one
// "[strand]" section per strand with "t x y z" rows.
Braid read_braid(const std::string& path);
void write_braid(const Braid& braid, const std::string& path, int rows_per_strand = 33);
// CSV export with rows strand_id,t,x,y,z.
void export_braid_csv(const Braid& braid, const std::string& path,
                      int samples_per_strand = 200);

}  // namespace glv
