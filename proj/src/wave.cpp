#include "glv/wave.hpp"

#include "glv/errors.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace glv {

namespace {

const double GOLDEN_ANGLE = PI * (3.0 - std::sqrt(5.0));

vec3 unit_tangent(const Strand& s, double t) { return s.d1(t).normalized(); }

// Lateral wall points used both as collocation rows and as the Neumann
// diagnostic. Golden-angle helix over |z| <= 2*ell, the lateral wall of the
// middle cylinder where the wave's boundary condition is stated. Going closer
// to the caps would put rows within reach of the slab-source singularities.
struct WallSample {
  vec3 x;
  vec3 normal;
};

std::vector<WallSample> wall_layout(const DomainSpec& dom, int n) {
  std::vector<WallSample> pts;
  if (n <= 0) return pts;
  pts.reserve(n);
  const double zs = dom.ell_mid();
  for (int j = 0; j < n; ++j) {
    const double z = -zs + (2.0 * zs) * (j + 0.5) / n;
    const double th = wrap_angle(j * GOLDEN_ANGLE);
    pts.push_back({cyl_to_cart(dom.rho, th, z), e_r(th)});
  }
  return pts;
}

cplx dot_real(const vec3& n, const Eigen::Vector3cd& g) {
  return n[0] * g[0] + n[1] * g[1] + n[2] * g[2];
}

}  // namespace

LocalModel build_local_model(const Braid& braid, const std::vector<TubeFrame>& frames,
                             const ModelParams& mp) {
  if (mp.n_axial < 2 || mp.n_ring < 1)
    throw BadParameter("build_local_model: need n_axial >= 2 and n_ring >= 1");
  if (!(mp.axial_extent > 0.0))
    throw BadParameter("build_local_model: axial_extent must be positive");
  for (double f : mp.ring_fracs)
    if (!(f > 0.0 && f < 1.0))
      throw BadParameter("build_local_model: ring fractions must lie in (0, 1)");

  const ValidationReport rep = validate_braid(braid);
  if (!rep.pass) throw BadParameter("build_local_model: invalid braid (" + rep.failure + ")");
  if (frames.size() != braid.strands.size())
    throw BadParameter("build_local_model: one tube frame per strand required");

  double rmax = 0.0;
  for (const auto& f : frames) {
    if (!(f.radius > 0.0)) throw BadParameter("build_local_model: frame without tube radius");
    rmax = std::max(rmax, f.radius);
  }
  if (braid.strands.size() > 1 && 2.0 * rmax > rep.min_pair_distance)
    throw TubesOverlap("tube diameter " + std::to_string(2.0 * rmax) +
                       " exceeds the strand separation " + std::to_string(rep.min_pair_distance));

  LocalModel model;
  model.domain = braid.domain;
  model.tube_radius = rmax;
  model.min_sigma2 = std::numeric_limits<double>::infinity();
  model.samples.reserve(braid.strands.size() * mp.n_axial *
                        (1 + mp.n_ring * mp.ring_fracs.size()));

  // Samples stop at |z| = axial_extent * ell (never past 2*ell): far enough to
  // cover the verification cylinder, short enough that wall-compatible fields
  // can still track a z-independent target, and |z| <= 2*ell keeps every
  // sample at distance >= delta0/2 from the source slabs.
  const double zcut = std::min(
      braid.cap_z, std::min(mp.axial_extent * braid.domain.ell, braid.domain.ell_mid()));

  for (size_t k = 0; k < braid.strands.size(); ++k) {
    const Strand& s = braid.strands[k];
    const TubeFrame& fr = frames[k];
    double tlo = -1.0, thi = 1.0;
    if (zcut < braid.cap_z * (1.0 - 1e-12)) {
      tlo = s.param_at_z(-zcut);
      thi = s.param_at_z(zcut);
    }

    for (int i = 0; i < mp.n_axial; ++i) {
      const double t = tlo + (thi - tlo) * (i + 0.5) / mp.n_axial;
      const vec3 base = s.pos(t);
      const vec3 tan = unit_tangent(s, t);
      vec3 n1 = frame_normal(fr, t);
      n1 = (n1 - n1.dot(tan) * tan).normalized();  // keep the pair exactly orthonormal
      const vec3 n2 = tan.cross(n1);
      const Eigen::Vector3cd grad = n1.cast<cplx>() + cplx(0.0, 1.0) * n2.cast<cplx>();

      Eigen::Matrix<double, 2, 3> J;
      J.row(0) = n1.transpose();
      J.row(1) = n2.transpose();
      const auto sv = J.jacobiSvd().singularValues();
      model.min_sigma2 = std::min(model.min_sigma2, sv[1]);

      model.samples.push_back({base, cplx(0.0, 0.0), grad, static_cast<int>(k), t, true});
      for (double frac : mp.ring_fracs) {
        const double r = frac * fr.radius;
        for (int j = 0; j < mp.n_ring; ++j) {
          const double al = 2.0 * PI * (j + 0.5 * (i % 2)) / mp.n_ring;
          const vec3 off = r * (std::cos(al) * n1 + std::sin(al) * n2);
          model.samples.push_back({base + off, r * cplx(std::cos(al), std::sin(al)), grad,
                                   static_cast<int>(k), t, false});
        }
      }
    }
  }

  model.target_scale = 0.0;
  for (const auto& smp : model.samples)
    model.target_scale = std::max(model.target_scale, std::abs(smp.phi));
  return model;
}

std::vector<vec3> place_sources(const DomainSpec& dom, const SourceCounts& counts,
                                const SourceOffsets& offsets) {
  dom.validate();
  std::vector<vec3> pts;
  const int ncap = std::max(counts.cap_per_slab, 0);
  const int nring = std::max(counts.per_ring, 0);
  const int nlev = std::max(counts.rings, 0);
  pts.reserve(2 * ncap + nring * nlev);

  // One sunflower layer per cap slab, at mid-slab height.
  const double zcap = dom.ell_tilde - 0.25 * dom.delta0;
  const double rcap = std::clamp(offsets.cap_radius_frac, 0.05, 1.0) * dom.rho;
  for (int j = 0; j < ncap; ++j) {
    const double r = rcap * std::sqrt((j + 0.5) / ncap);
    const double th = wrap_angle(j * GOLDEN_ANGLE);
    pts.push_back(cyl_to_cart(r, th, zcap));
    pts.push_back(cyl_to_cart(r, th, -zcap));
  }

  // Staggered rings outside the lateral wall, spanning the full height. The
  // offset is clamped so the exclusion distance holds whatever the caller asks.
  const double off = std::max(offsets.ring, 0.25 * dom.delta0 / dom.rho);
  const double rring = (1.0 + off) * dom.rho;
  for (int l = 0; l < nlev; ++l) {
    const double z = -dom.ell_tilde + (2.0 * dom.ell_tilde) * (l + 0.5) / nlev;
    for (int j = 0; j < nring; ++j) {
      const double th = 2.0 * PI * (j + 0.5 * (l % 2)) / nring;
      pts.push_back(cyl_to_cart(rring, th, z));
    }
  }

  for (const vec3& p : pts) {
    assert(dom.dist_to_mid(p) >= 0.25 * dom.delta0 * (1.0 - 1e-12));
    (void)p;
  }
  return pts;
}

std::pair<SourceExpansion, FitReport> fit_expansion(const LocalModel& model,
                                                    const std::vector<vec3>& sources,
                                                    std::shared_ptr<const GreenKernel> kernel,
                                                    const FitWeights& weights) {
  if (!kernel) throw BadParameter("fit_expansion: kernel required");
  if (sources.empty()) throw NoSources("fit_expansion: empty source set");
  if (model.samples.empty()) throw BadParameter("fit_expansion: model has no samples");

  const DomainSpec& dom = model.domain;
  for (const vec3& z : sources) {
    if (dom.dist_to_mid(z) < 0.25 * dom.delta0 * (1.0 - 1e-9))
      throw SourceInsideDomain("source too close to the middle cylinder");
    if (kernel->mode() == GreenKernel::Mode::neumann_cylinder) {
      if (radius_of(z) > kernel->domain_radius() || std::abs(z[2]) > kernel->domain_half_height())
        throw BadParameter("fit_expansion: source outside the kernel cylinder");
    }
  }

  const int ncols = static_cast<int>(sources.size());
  int n_on = 0;
  for (const auto& smp : model.samples) n_on += smp.on_strand ? 1 : 0;

  const bool wall_rows =
      kernel->mode() == GreenKernel::Mode::free_space && weights.neumann > 0.0;
  const std::vector<WallSample> wall = wall_layout(dom, weights.wall_samples);
  const int nrows = static_cast<int>(model.samples.size()) + 3 * n_on +
                    (wall_rows ? static_cast<int>(wall.size()) : 0);

  const double wv = weights.value;
  const double wg = weights.gradient < 0.0 ? model.tube_radius : weights.gradient;
  const double wn = weights.neumann;

  const SourceTable table(kernel, sources);
  Eigen::VectorXd gv(ncols);
  Eigen::Matrix3Xd gg(3, ncols);

  Eigen::MatrixXd A(nrows, ncols);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nrows, 2);
  int r = 0;
  for (const auto& smp : model.samples) {
    table.values(smp.x, gv);
    A.row(r) = wv * gv.transpose();
    b(r, 0) = wv * smp.phi.real();
    b(r, 1) = wv * smp.phi.imag();
    ++r;
  }
  for (const auto& smp : model.samples) {
    if (!smp.on_strand) continue;
    table.grads(smp.x, gg);
    for (int c = 0; c < 3; ++c) {
      A.row(r + c) = wg * gg.row(c);
      b(r + c, 0) = wg * smp.grad[c].real();
      b(r + c, 1) = wg * smp.grad[c].imag();
    }
    r += 3;
  }
  if (wall_rows) {
    for (const auto& ws : wall) {
      table.grads(ws.x, gg);
      A.row(r) = wn * (ws.normal[0] * gg.row(0) + ws.normal[1] * gg.row(1) +
                       ws.normal[2] * gg.row(2));
      ++r;
    }
  }

  double maxdiag = 0.0;
  for (int j = 0; j < ncols; ++j) maxdiag = std::max(maxdiag, A.col(j).squaredNorm());
  const double lambda =
      weights.lambda_abs > 0.0 ? weights.lambda_abs : weights.lambda_rel * maxdiag;

  Eigen::MatrixXd M(nrows + ncols, ncols);
  M.topRows(nrows) = A;
  M.bottomRows(ncols) =
      std::sqrt(std::max(lambda, 0.0)) * Eigen::MatrixXd::Identity(ncols, ncols);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nrows + ncols, 2);
  rhs.topRows(nrows) = b;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  const Eigen::MatrixXd X = qr.solve(rhs);
  if (!X.allFinite()) throw SingularSystem("fit_expansion: least-squares solve failed");

  const auto Rdiag = qr.matrixR().diagonal().head(ncols).cwiseAbs().eval();
  const double rmin = Rdiag.minCoeff();
  if (!(rmin > 0.0)) throw SingularSystem("fit_expansion: rank collapse");

  SourceExpansion ex;
  ex.sources = sources;
  ex.kernel = kernel;
  ex.coeff.resize(ncols);
  for (int j = 0; j < ncols; ++j) ex.coeff[j] = cplx(X(j, 0), X(j, 1));
  ex.field = std::make_shared<const Superposition>(kernel, ex.sources, ex.coeff);

  FitReport rep;
  rep.rows = nrows;
  rep.cols = ncols;
  rep.lambda = lambda;
  rep.cond_estimate = Rdiag.maxCoeff() / rmin;
  rep.objective = (M * X - rhs).squaredNorm();
  if (nrows < 2 * ncols)
    rep.warnings.push_back("fewer than 2 rows per source; fit may be underdetermined");

  const double tiny = std::numeric_limits<double>::min();
  double dmax = 0.0, gmax = 0.0, gtarget = 0.0, gscale = 0.0;
  for (const auto& smp : model.samples) {
    dmax = std::max(dmax, std::abs(evaluate_psi(ex, smp.x) - smp.phi));
    if (!smp.on_strand) continue;
    const Eigen::Vector3cd g = evaluate_psi_grad(ex, smp.x);
    gmax = std::max(gmax, (g - smp.grad).norm());
    gtarget = std::max(gtarget, smp.grad.norm());
    gscale = std::max(gscale, g.norm());
  }
  rep.delta_fit = dmax / std::max(model.target_scale, tiny);
  rep.grad_resid = gmax / std::max(gtarget, tiny);

  double nmax = 0.0;
  for (const auto& ws : wall)
    nmax = std::max(nmax, std::abs(dot_real(ws.normal, evaluate_psi_grad(ex, ws.x))));
  rep.neumann_resid = nmax / std::max(gscale, tiny);

  return {std::move(ex), rep};
}

namespace {

const Superposition& field_of(const SourceExpansion& e, const vec3& x) {
  if (!e.kernel) throw BadParameter("expansion has no kernel");
  if (e.coeff.size() != static_cast<Eigen::Index>(e.sources.size()))
    throw BadParameter("expansion coefficient count mismatch");
  if (!e.field)
    e.field = std::make_shared<const Superposition>(e.kernel, e.sources, e.coeff);
  if (e.field->min_source_distance(x) < 1e-9)
    throw TooCloseToSource("evaluation point within 1e-9 of a source");
  return *e.field;
}

}  // namespace

cplx evaluate_psi(const SourceExpansion& e, const vec3& x) {
  if (e.sources.empty()) return cplx(0.0, 0.0);
  return field_of(e, x).value(x);
}

Eigen::Vector3cd evaluate_psi_grad(const SourceExpansion& e, const vec3& x) {
  if (e.sources.empty()) return Eigen::Vector3cd::Zero();
  return field_of(e, x).grad(x);
}

Eigen::Matrix3cd evaluate_psi_hess(const SourceExpansion& e, const vec3& x) {
  if (e.sources.empty()) return Eigen::Matrix3cd::Zero();
  return field_of(e, x).hess(x);
}

void write_expansion_csv(const SourceExpansion& e, const std::string& path) {
  if (!e.kernel) throw BadParameter("write_expansion_csv: expansion has no kernel");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << std::setprecision(17);
  out << "# kappa=" << e.kernel->kappa() << " mode="
      << (e.kernel->mode() == GreenKernel::Mode::free_space ? "free_space" : "neumann_cylinder")
      << "\n";
  out << "z_x,z_y,z_z,re_c,im_c\n";
  for (size_t j = 0; j < e.sources.size(); ++j) {
    const vec3& z = e.sources[j];
    out << z[0] << ',' << z[1] << ',' << z[2] << ',' << e.coeff[j].real() << ','
        << e.coeff[j].imag() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

SourceExpansion read_expansion_csv(const std::string& path,
                                   std::shared_ptr<const GreenKernel> kernel) {
  if (!kernel) throw BadParameter("read_expansion_csv: kernel required");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  double kappa = 0.0;
  char mode_buf[32] = {0};
  if (std::sscanf(line.c_str(), "# kappa=%lf mode=%31s", &kappa, mode_buf) != 2)
    throw FormatError(path + ": bad expansion header");
  const std::string mode(mode_buf);
  const std::string want =
      kernel->mode() == GreenKernel::Mode::free_space ? "free_space" : "neumann_cylinder";
  if (mode != want) throw FormatError(path + ": kernel mode mismatch (" + mode + ")");
  if (std::abs(kappa - kernel->kappa()) > 1e-12 * std::max(1.0, kernel->kappa()))
    throw FormatError(path + ": kappa mismatch");
  if (!std::getline(in, line)) throw FormatError(path + ": missing column header");

  SourceExpansion ex;
  ex.kernel = kernel;
  std::vector<cplx> coeff;
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double v[5];
    std::string tok;
    for (int c = 0; c < 5; ++c) {
      if (!std::getline(ss, tok, ','))
        throw FormatError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
      try {
        v[c] = std::stod(tok);
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    ex.sources.push_back(vec3(v[0], v[1], v[2]));
    coeff.push_back(cplx(v[3], v[4]));
  }
  ex.coeff.resize(coeff.size());
  for (size_t j = 0; j < coeff.size(); ++j) ex.coeff[j] = coeff[j];
  if (!ex.sources.empty())
    ex.field = std::make_shared<const Superposition>(kernel, ex.sources, ex.coeff);
  return ex;
}

}  // namespace glv
