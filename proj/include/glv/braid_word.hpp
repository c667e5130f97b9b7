#pragma once

#include "glv/braid.hpp"

#include <Eigen/Dense>

#include <vector>

namespace glv {

// Topological summary of a braid diagram. Generators are slot-based: +k / -k
// stands for sigma_k^{+1} / sigma_k^{-1}, slots counted from the low-u side of
// the chosen projection, crossings read bottom to top. A crossing is positive
// when the over-strand (larger depth coordinate, i.e. nearer the viewer) moves
// toward larger u. The permutation and the linking data are expressed in
// canonical strand labels (bottom endpoints sorted lexicographically by (x, y)),
// which makes them independent of the projection direction; the word itself is
// canonical only per direction (rotating the viewpoint conjugates it).
struct BraidInvariants {
  int n_strands = 0;
  std::vector<int> permutation;  // canonical bottom rank -> canonical top rank
  std::vector<int> word;         // freely reduced, bottom to top
  std::vector<int> component;    // canonical strand index -> closure component id
  Eigen::MatrixXi linking;       // closure components; symmetric, zero diagonal
};

struct ProjectionOptions {
  int z_levels = 4096;     // crossing-scan resolution along the axis
  int curve_samples = 1600;  // polyline sampling density for spline strands
  int max_retries = 32;    // direction perturbations before giving up
  unsigned seed = 20260814;  // deterministic perturbation sequence
};

// Invariants of a braid from its projection along `dir` (horizontal part used;
// must be nonzero). Degenerate projections are retried with perturbed
// directions; DegenerateProjection is thrown once retries are exhausted.
BraidInvariants braid_invariants(const Braid& braid, const vec3& dir,
                                 const ProjectionOptions& opts = {});

// Same computation for curves given as polylines ordered along z (ascending or
// descending; descending input is flipped). Used for traced nodal curves.
BraidInvariants polyline_invariants(const std::vector<std::vector<vec3>>& strands,
                                    const vec3& dir, const ProjectionOptions& opts = {});

// Free reduction: cancel adjacent sigma_k sigma_k^{-1} pairs until stable.
std::vector<int> free_reduce(std::vector<int> word);

// Permutation induced by a word on n slots (slot -> slot).
std::vector<int> word_permutation(const std::vector<int>& word, int n);

bool same_invariants(const BraidInvariants& a, const BraidInvariants& b);

}  // namespace glv
