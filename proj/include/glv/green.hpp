#pragma once
#include "glv/geometry.hpp"
#include "glv/errors.hpp"
#include <memory>
#include <vector>

namespace glv {

struct GLParams {
    double kappa = 1.0;
    void validate() const {
        if (!(kappa > 0)) throw BadParameter("kappa must be positive");
    }
};

// Free-space fundamental solution of (kappa^-2 Delta + 1):
//   G0(r) = -kappa^2 cos(kappa r) / (4 pi r),  r = |x - y|.
// Real and radial, so it is symmetric and a least-squares fit over complex
// coefficients decouples into independent real and imaginary solves.
double free_kernel(double kappa, const vec3& x, const vec3& y);
vec3 free_kernel_grad(double kappa, const vec3& x, const vec3& y); // d/dx
mat3 free_kernel_hess(double kappa, const vec3& x, const vec3& y); // d2/dx dx

// ---------------------------------------------------------------------------
// Neumann spectrum of -Delta on the cylinder D_R x (-hh, hh):
//   lambda = (j'_{m,n}/R)^2 + (p pi / (2 hh))^2,  j' = zeros of J_m'.
// ---------------------------------------------------------------------------
struct EigenMode {
    double lambda;
    int m, n, p; // angular order, radial root index (0 = constant mode), axial index
    int mult;    // angular multiplicity: 1 for m = 0, else 2
};

// All modes with lambda <= cutoff, sorted ascending. lambda = 0 included.
std::vector<EigenMode> neumann_eigenvalues(double R, double hh, double cutoff);

struct GapCheck {
    bool ok = false;
    double gap = 0;     // min |kappa^2 - lambda|
    double nearest = 0; // eigenvalue achieving the min
    double tol = 0;
    double cutoff = 0;
};

// tol < 0 selects the default 1e-2 * kappa^2; cutoff <= 0 selects
// max(4 kappa^2, kappa^2 + 3 tol).
GapCheck check_spectral_gap(double kappa, double R, double hh,
                            double tol = -1.0, double cutoff = 0.0);

// ---------------------------------------------------------------------------
// Green kernel. Two modes:
//   free_space       : G0 alone; the wall condition is the caller's problem
//                      (enforced by collocation rows in the synthesis fit).
//   neumann_cylinder : G = G0 + R where R is the smooth correction that
//                      cancels the normal derivative of G0 on the boundary of
//                      the cylinder. R is represented per angular order m as
//                        R_m(x,y) = f_m(x)^T B_m f_m(y) * cos(m (th_x - th_y))
//                      over separable solutions of the homogeneous equation
//                      (so the PDE holds term-by-term), with the symmetric
//                      matrices B_m fitted once at construction by boundary
//                      collocation. Symmetry G(x,y) = G(y,x) is then exact up
//                      to roundoff, and accuracy is set by the fit, not by an
//                      eigenfunction tail.
// Accuracy region of the fitted correction: points with radius below
// (1 - wall_margin) * R and |z| below (1 - cap_margin) * hh. Evaluations
// outside that region extrapolate the basis and degrade gracefully.
// ---------------------------------------------------------------------------
struct CorrectionParams {
    int ang_order = 24;  // max angular order of the correction basis
    int rad_order = 24;  // length of the cap-oriented radial ladder per order
    int ax_order = 24;   // length of the wall-oriented axial ladder
    double wall_margin = 0.10;
    double cap_margin = 0.08;
    int n_theta = 192;   // angular quadrature for the boundary data
    double series_tol = 1e-6;
};

class GreenKernel {
public:
    enum class Mode { free_space, neumann_cylinder };

    explicit GreenKernel(GLParams par);
    GreenKernel(GLParams par, double R, double hh,
                CorrectionParams cp = {}, double gap_tol = -1.0);

    Mode mode() const { return mode_; }
    double kappa() const { return par_.kappa; }
    double domain_radius() const { return R_; }
    double domain_half_height() const { return hh_; }

    double value(const vec3& x, const vec3& y) const;
    vec3 grad_x(const vec3& x, const vec3& y) const;
    mat3 hess_x(const vec3& x, const vec3& y) const;

    // neumann_cylinder diagnostics (0 in free mode)
    double boundary_residual() const { return bnd_resid_; } // rel. Neumann residual on a held-out boundary set
    double tail_estimate() const { return tail_est_; }      // rel. contribution of the top basis orders on probe pairs
    const GapCheck& gap() const { return gap_; }

private:
    // One separable correction basis function: radial(r) * axial(z), order m.
    // Two sub-families make up each block:
    //   wall family: axial wavenumber on the ladder p pi / (2 hh) with the
    //     parity chosen so the cap normal derivative vanishes identically;
    //   cap family: radial factor J_m(alpha r / R) at zeros of J_m', so the
    //     wall normal derivative vanishes identically.
    // The boundary fit therefore decouples into two well-conditioned solves.
    struct BasisFn {
        double k;      // axial wavenumber (trig) or decay rate (hyperbolic)
        int axkind;    // 0: cos(k z), 1: sin(k z), 2: cosh-type, 3: sinh-type
        int kind;      // 0: J_m(gamma r), 1: I_m(mu r), 2: r^m
        double gamma;  // radial argument scale
        double scale;  // normalizer so max |radial| ~ 1 on [0, R]
        bool top;      // member of the last retained orders (tail probe)
    };
    struct ModeBlock {
        int m;
        int wall_count = 0; // fns[0 .. wall_count) is the wall family
        std::vector<BasisFn> fns;
        Eigen::MatrixXd B; // symmetric coefficient matrix
    };

    void fit_correction(const CorrectionParams& cp);
    // radial ladder quantities for basis j of block b at radius r
    struct RadialEval { double val, dp, dm, dpdp, dmdm, lap2; };
    RadialEval radial_eval(const ModeBlock& blk, const BasisFn& f, double r) const;
    // axial factor and derivatives; hyperbolic kinds use overflow-free forms
    struct AxialEval { double val, d1, d2; };
    AxialEval axial_eval(const BasisFn& f, double z) const;
    Eigen::VectorXd basis_values(const ModeBlock& blk, double r, double z) const;
    Eigen::VectorXd basis_normal_deriv(const ModeBlock& blk, double r, double z,
                                       const vec3& n) const;

    Mode mode_;
    GLParams par_;
    double R_ = 0, hh_ = 0;
    GapCheck gap_{};
    std::vector<ModeBlock> blocks_;
    double bnd_resid_ = 0;
    double tail_est_ = 0;
    CorrectionParams cp_{};

    friend class SourceTable;
    friend class Superposition;
};

// Second-slot data of a fixed source list, precomputed once. Pairing many
// field points against the same sources through value()/grad_x() would redo
// the source-side basis ladders per pair; here each row costs one x-side
// basis evaluation plus a matrix product. Row entries match the per-pair
// evaluators to roundoff.
class SourceTable {
public:
    SourceTable(std::shared_ptr<const GreenKernel> kernel, std::vector<vec3> sources);

    int count() const { return static_cast<int>(ys_.size()); }
    const std::vector<vec3>& sources() const { return ys_; }

    void values(const vec3& x, Eigen::Ref<Eigen::VectorXd> out) const;  // out[j] = G(x, y_j)
    void grads(const vec3& x, Eigen::Ref<Eigen::Matrix3Xd> out) const;  // col j = d/dx G(x, y_j)

private:
    std::shared_ptr<const GreenKernel> K_;
    std::vector<vec3> ys_;
    std::vector<Eigen::MatrixXd> W_;  // per block: B * [f(y_0) ... f(y_{n-1})]
    Eigen::MatrixXd cosm_, sinm_;     // (m, j) -> cos/sin(m * theta_j)
};

// Fixed combination sum_j c_j G(x, y_j) with the correction collapsed per
// angular block, so evaluation cost is independent of the source count
// (the free-space part still sums over sources). Exact superposition, no
// further approximation.
class Superposition {
public:
    Superposition(std::shared_ptr<const GreenKernel> kernel, std::vector<vec3> sources,
                  Eigen::VectorXcd coeff);

    cplx value(const vec3& x) const;
    Eigen::Vector3cd grad(const vec3& x) const;
    Eigen::Matrix3cd hess(const vec3& x) const;
    double min_source_distance(const vec3& x) const;

    const std::vector<vec3>& sources() const { return ys_; }
    const GreenKernel& kernel() const { return *K_; }

private:
    std::shared_ptr<const GreenKernel> K_;
    std::vector<vec3> ys_;
    Eigen::VectorXcd c_;
    // per block: (1/2) sum_j c_j e^{-+ i m theta_j} B f(y_j); the angular
    // factor of the collapsed block is then e^{+- i m theta_x}
    std::vector<Eigen::VectorXcd> a_, b_;
};

} // namespace glv
