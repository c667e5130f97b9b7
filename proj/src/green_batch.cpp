#include "glv/green.hpp"

#include <cmath>
#include <limits>

namespace glv {

// ---------------------------------------------------------------------------
// SourceTable
// ---------------------------------------------------------------------------

SourceTable::SourceTable(std::shared_ptr<const GreenKernel> kernel, std::vector<vec3> sources)
    : K_(std::move(kernel)), ys_(std::move(sources)) {
    if (!K_) throw BadParameter("SourceTable: kernel required");
    const int n = count();
    if (K_->mode_ == GreenKernel::Mode::free_space || n == 0) return;

    const auto& blocks = K_->blocks_;
    const int M = static_cast<int>(blocks.size()) - 1;
    cosm_.resize(M + 1, n);
    sinm_.resize(M + 1, n);
    for (int j = 0; j < n; ++j) {
        const double th = angle_of(ys_[j]);
        for (int m = 0; m <= M; ++m) {
            cosm_(m, j) = std::cos(m * th);
            sinm_(m, j) = std::sin(m * th);
        }
    }
    W_.reserve(blocks.size());
    for (const auto& blk : blocks) {
        Eigen::MatrixXd F(static_cast<int>(blk.fns.size()), n);
        for (int j = 0; j < n; ++j)
            F.col(j) = K_->basis_values(blk, radius_of(ys_[j]), ys_[j][2]);
        W_.push_back(blk.B * F);
    }
}

void SourceTable::values(const vec3& x, Eigen::Ref<Eigen::VectorXd> out) const {
    const int n = count();
    for (int j = 0; j < n; ++j) out[j] = free_kernel(K_->par_.kappa, x, ys_[j]);
    if (W_.empty()) return;

    const double rx = radius_of(x), thx = angle_of(x);
    for (size_t bkt = 0; bkt < W_.size(); ++bkt) {
        const auto& blk = K_->blocks_[bkt];
        const Eigen::VectorXd fx = K_->basis_values(blk, rx, x[2]);
        const Eigen::RowVectorXd t = fx.transpose() * W_[bkt];
        const double cm = std::cos(blk.m * thx), sm = std::sin(blk.m * thx);
        for (int j = 0; j < n; ++j)
            out[j] += t[j] * (cm * cosm_(blk.m, j) + sm * sinm_(blk.m, j));
    }
}

void SourceTable::grads(const vec3& x, Eigen::Ref<Eigen::Matrix3Xd> out) const {
    const int n = count();
    for (int j = 0; j < n; ++j) out.col(j) = free_kernel_grad(K_->par_.kappa, x, ys_[j]);
    if (W_.empty()) return;

    const double rx = radius_of(x), thx = angle_of(x);
    for (size_t bkt = 0; bkt < W_.size(); ++bkt) {
        const auto& blk = K_->blocks_[bkt];
        const int m = blk.m;
        const int J = static_cast<int>(blk.fns.size());
        Eigen::VectorXd P(J), Q(J), Z(J);
        for (int f = 0; f < J; ++f) {
            const auto e = K_->radial_eval(blk, blk.fns[f], rx);
            const auto a = K_->axial_eval(blk.fns[f], x[2]);
            P[f] = e.dp * a.val;
            Q[f] = e.dm * a.val;
            Z[f] = e.val * a.d1;
        }
        const Eigen::RowVectorXd sdp = P.transpose() * W_[bkt];
        const Eigen::RowVectorXd sdm = Q.transpose() * W_[bkt];
        const Eigen::RowVectorXd sz = Z.transpose() * W_[bkt];

        const double cp1 = std::cos((m + 1) * thx), sp1 = std::sin((m + 1) * thx);
        const double cm1 = std::cos((m - 1) * thx), sm1 = std::sin((m - 1) * thx);
        const double c0 = std::cos(m * thx), s0 = std::sin(m * thx);
        for (int j = 0; j < n; ++j) {
            const double cj = cosm_(m, j), sj = sinm_(m, j);
            // e^{i (a thx - m th_j)} for a = m+1, m-1, m
            const cplx ep(cp1 * cj + sp1 * sj, sp1 * cj - cp1 * sj);
            const cplx em(cm1 * cj + sm1 * sj, sm1 * cj - cm1 * sj);
            const cplx e0(c0 * cj + s0 * sj, s0 * cj - c0 * sj);
            const cplx ux = 0.5 * (sdp[j] * ep + sdm[j] * em);
            const cplx uy = cplx(0, -0.5) * (sdp[j] * ep - sdm[j] * em);
            out(0, j) += ux.real();
            out(1, j) += uy.real();
            out(2, j) += (sz[j] * e0).real();
        }
    }
}

// ---------------------------------------------------------------------------
// Superposition
// ---------------------------------------------------------------------------

Superposition::Superposition(std::shared_ptr<const GreenKernel> kernel, std::vector<vec3> sources,
                             Eigen::VectorXcd coeff)
    : K_(std::move(kernel)), ys_(std::move(sources)), c_(std::move(coeff)) {
    if (!K_) throw BadParameter("Superposition: kernel required");
    if (c_.size() != static_cast<Eigen::Index>(ys_.size()))
        throw BadParameter("Superposition: one coefficient per source");
    if (K_->mode_ == GreenKernel::Mode::free_space || ys_.empty()) return;

    const auto& blocks = K_->blocks_;
    a_.resize(blocks.size());
    b_.resize(blocks.size());
    for (size_t bkt = 0; bkt < blocks.size(); ++bkt) {
        const auto& blk = blocks[bkt];
        const int J = static_cast<int>(blk.fns.size());
        a_[bkt] = Eigen::VectorXcd::Zero(J);
        b_[bkt] = Eigen::VectorXcd::Zero(J);
        for (size_t j = 0; j < ys_.size(); ++j) {
            const double th = angle_of(ys_[j]);
            const Eigen::VectorXd w = blk.B * K_->basis_values(blk, radius_of(ys_[j]), ys_[j][2]);
            a_[bkt] += (0.5 * c_[j] * std::polar(1.0, -blk.m * th)) * w.cast<cplx>();
            b_[bkt] += (0.5 * c_[j] * std::polar(1.0, blk.m * th)) * w.cast<cplx>();
        }
    }
}

double Superposition::min_source_distance(const vec3& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const vec3& y : ys_) d = std::min(d, (x - y).norm());
    return d;
}

cplx Superposition::value(const vec3& x) const {
    cplx acc(0.0, 0.0);
    for (size_t j = 0; j < ys_.size(); ++j) acc += c_[j] * free_kernel(K_->par_.kappa, x, ys_[j]);
    if (a_.empty()) return acc;

    const double rx = radius_of(x), thx = angle_of(x);
    for (size_t bkt = 0; bkt < a_.size(); ++bkt) {
        const auto& blk = K_->blocks_[bkt];
        const Eigen::VectorXd fx = K_->basis_values(blk, rx, x[2]);
        cplx fa(0.0, 0.0), fb(0.0, 0.0);
        for (int f = 0; f < fx.size(); ++f) {
            fa += fx[f] * a_[bkt][f];
            fb += fx[f] * b_[bkt][f];
        }
        acc += std::polar(1.0, blk.m * thx) * fa + std::polar(1.0, -blk.m * thx) * fb;
    }
    return acc;
}

Eigen::Vector3cd Superposition::grad(const vec3& x) const {
    Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
    for (size_t j = 0; j < ys_.size(); ++j)
        acc += c_[j] * free_kernel_grad(K_->par_.kappa, x, ys_[j]).cast<cplx>();
    if (a_.empty()) return acc;

    const double rx = radius_of(x), thx = angle_of(x);
    for (size_t bkt = 0; bkt < a_.size(); ++bkt) {
        const auto& blk = K_->blocks_[bkt];
        const int m = blk.m;
        cplx Adp(0, 0), Adm(0, 0), Az(0, 0), Bdp(0, 0), Bdm(0, 0), Bz(0, 0);
        for (size_t f = 0; f < blk.fns.size(); ++f) {
            const auto e = K_->radial_eval(blk, blk.fns[f], rx);
            const auto ax = K_->axial_eval(blk.fns[f], x[2]);
            Adp += a_[bkt][f] * (e.dp * ax.val);
            Adm += a_[bkt][f] * (e.dm * ax.val);
            Az += a_[bkt][f] * (e.val * ax.d1);
            Bdp += b_[bkt][f] * (e.dp * ax.val);
            Bdm += b_[bkt][f] * (e.dm * ax.val);
            Bz += b_[bkt][f] * (e.val * ax.d1);
        }
        const cplx ep = std::polar(1.0, (m + 1) * thx), epc = std::conj(ep);
        const cplx em = std::polar(1.0, (m - 1) * thx), emc = std::conj(em);
        const cplx e0 = std::polar(1.0, m * thx), e0c = std::conj(e0);
        // d/dx of G(r) h(z) e^{+- i m th}: dp rides e^{+-i(m+1)th} and dm
        // e^{+-i(m-1)th}, with the roles swapped on the conjugate family.
        acc[0] += 0.5 * (Adp * ep + Adm * em) + 0.5 * (Bdm * emc + Bdp * epc);
        acc[1] += cplx(0, -0.5) * (Adp * ep - Adm * em) + cplx(0, -0.5) * (Bdm * emc - Bdp * epc);
        acc[2] += Az * e0 + Bz * e0c;
    }
    return acc;
}

Eigen::Matrix3cd Superposition::hess(const vec3& x) const {
    Eigen::Matrix3cd acc = Eigen::Matrix3cd::Zero();
    for (size_t j = 0; j < ys_.size(); ++j)
        acc += c_[j] * free_kernel_hess(K_->par_.kappa, x, ys_[j]).cast<cplx>();
    if (a_.empty()) return acc;

    const double rx = radius_of(x), thx = angle_of(x);
    const auto part = [&](int m, cplx Spp, cplx Smm, cplx SL, cplx Spz, cplx Smz, cplx Szz) {
        const cplx e2p = std::polar(1.0, (m + 2) * thx);
        const cplx e2m = std::polar(1.0, (m - 2) * thx);
        const cplx e1p = std::polar(1.0, (m + 1) * thx);
        const cplx e1m = std::polar(1.0, (m - 1) * thx);
        const cplx e0 = std::polar(1.0, m * thx);
        Eigen::Matrix3cd H;
        const cplx uxx = 0.25 * (Spp * e2p + Smm * e2m + 2.0 * SL * e0);
        const cplx uyy = 0.25 * (-Spp * e2p - Smm * e2m + 2.0 * SL * e0);
        const cplx uxy = cplx(0, -0.25) * (Spp * e2p - Smm * e2m);
        const cplx uxz = 0.5 * (Spz * e1p + Smz * e1m);
        const cplx uyz = cplx(0, -0.5) * (Spz * e1p - Smz * e1m);
        const cplx uzz = Szz * e0;
        H << uxx, uxy, uxz, uxy, uyy, uyz, uxz, uyz, uzz;
        return H;
    };

    for (size_t bkt = 0; bkt < a_.size(); ++bkt) {
        const auto& blk = K_->blocks_[bkt];
        cplx App(0, 0), Amm(0, 0), AL(0, 0), Apz(0, 0), Amz(0, 0), Azz(0, 0);
        cplx Bpp(0, 0), Bmm(0, 0), BL(0, 0), Bpz(0, 0), Bmz(0, 0), Bzz(0, 0);
        for (size_t f = 0; f < blk.fns.size(); ++f) {
            const auto e = K_->radial_eval(blk, blk.fns[f], rx);
            const auto ax = K_->axial_eval(blk.fns[f], x[2]);
            const cplx qa = a_[bkt][f], qb = std::conj(b_[bkt][f]);
            App += qa * (e.dpdp * ax.val);
            Amm += qa * (e.dmdm * ax.val);
            AL += qa * (e.lap2 * ax.val);
            Apz += qa * (e.dp * ax.d1);
            Amz += qa * (e.dm * ax.d1);
            Azz += qa * (e.val * ax.d2);
            Bpp += qb * (e.dpdp * ax.val);
            Bmm += qb * (e.dmdm * ax.val);
            BL += qb * (e.lap2 * ax.val);
            Bpz += qb * (e.dp * ax.d1);
            Bmz += qb * (e.dm * ax.d1);
            Bzz += qb * (e.val * ax.d2);
        }
        // the e^{-i m th} family is the conjugate of the e^{+i m th} family
        // run with conjugated weights
        acc += part(blk.m, App, Amm, AL, Apz, Amz, Azz) +
               part(blk.m, Bpp, Bmm, BL, Bpz, Bmz, Bzz).conjugate();
    }
    return acc;
}

} // namespace glv
