#pragma once
#include "glv/geometry.hpp"
#include "glv/errors.hpp"

namespace glv {

// Nested cylinders, all of radius rho and centered on the z axis:
//   inner:    |z| < ell        (where the vortex pattern is prescribed)
//   middle:   |z| < 2*ell      (containment region for the nodal tubes)
//   solve:    |z| < 1.5*ell    (grid domain for the boundary-value solves)
//   outer:    |z| < ell_tilde  (where the synthesized wave satisfies the
//                               Neumann wall condition), 2*ell < ell_tilde < 3*ell
// Sources for the wave synthesis live outside the middle cylinder by at
// least delta0/4; the cap slabs have thickness delta0/2.
struct DomainSpec {
    double rho = 1.0;
    double ell = 1.0;
    double ell_tilde = 2.5;
    double delta0 = 0.3;

    double ell_mid() const { return 2.0 * ell; }
    double ell_solve() const { return 1.5 * ell; }

    void validate() const {
        if (!(rho > 0) || !(ell > 0))
            throw BadParameter("domain lengths must be positive");
        if (!(ell_tilde > 2.0 * ell) || !(ell_tilde < 3.0 * ell))
            throw BadParameter("outer half-height must lie strictly between 2*ell and 3*ell");
        if (!(delta0 > 0) || !(ell_tilde - 2.0 * ell > delta0))
            throw BadParameter("separation delta0 must satisfy 0 < delta0 < ell_tilde - 2*ell");
    }

    // distance from a point to the closed middle cylinder (0 if inside)
    double dist_to_mid(const vec3& x) const {
        double dr = std::max(0.0, radius_of(x) - rho);
        double dz = std::max(0.0, std::abs(x[2]) - ell_mid());
        return std::hypot(dr, dz);
    }

    bool inside_inner(const vec3& x) const {
        return radius_of(x) < rho && std::abs(x[2]) < ell;
    }
};

} // namespace glv
