#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sprim/primitive.hpp"

namespace sprim {

using LatentCode = Eigen::VectorXd;

/// Affine latent shape model over packed (c, r) primitive parameters:
/// packed(z) = mean + basis * z, radii clamped at 0 when decoding.
/// Basis columns are mutually orthogonal principal directions; each column's
/// norm equals that mode's training standard deviation, so z ~ N(0, I)
/// reproduces the training variance.
struct LinearShapeBasis {
    int latent_dim = 0;
    int n_primitives = 0;
    Eigen::VectorXd mean;  // length 4 * n_primitives, layout [cx cy cz r] per primitive
    Eigen::MatrixXd basis; // (4 * n_primitives) x latent_dim
    std::string category;
};

namespace detail {

inline Eigen::VectorXd pack_primitives(const PrimitiveSet& ps) {
    Eigen::VectorXd v(4 * Eigen::Index(ps.size()));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        v.segment<3>(4 * Eigen::Index(i)) = ps.primitives[i].c;
        v(4 * Eigen::Index(i) + 3) = ps.primitives[i].r;
    }
    return v;
}

inline PrimitiveSet unpack_primitives(const Eigen::VectorXd& v, const std::string& category) {
    PrimitiveSet ps;
    ps.category = category;
    ps.primitives.resize(std::size_t(v.size() / 4));
    for (std::size_t i = 0; i < ps.primitives.size(); ++i) {
        ps.primitives[i].c = v.segment<3>(4 * Eigen::Index(i));
        ps.primitives[i].r = std::max(0.0, v(4 * Eigen::Index(i) + 3));
    }
    return ps;
}

} // namespace detail

/// Principal-component fit of the packed primitive parameters of aligned
/// instance sets. Column d of the basis is the d-th principal direction
/// scaled by its standard deviation.
inline LinearShapeBasis fit_shape_basis(const std::vector<PrimitiveSet>& aligned, int latent_dim) {
    if (aligned.empty()) throw TooFewInstances("fit_shape_basis: no instances");
    const int n_c = int(aligned.front().size());
    if (latent_dim < 1 || latent_dim > 4 * n_c)
        throw TooFewInstances("fit_shape_basis: latent dim out of range");
    if (int(aligned.size()) < latent_dim + 1)
        throw TooFewInstances("fit_shape_basis: need at least latent_dim + 1 instances");
    for (const auto& ps : aligned)
        if (int(ps.size()) != n_c) throw CountMismatch("fit_shape_basis: inconsistent N_c");

    const Eigen::Index dim = 4 * Eigen::Index(n_c);
    const Eigen::Index n = Eigen::Index(aligned.size());
    Eigen::MatrixXd data(dim, n);
    for (Eigen::Index k = 0; k < n; ++k)
        data.col(k) = detail::pack_primitives(aligned[std::size_t(k)]);

    LinearShapeBasis out;
    out.latent_dim = latent_dim;
    out.n_primitives = n_c;
    out.category = aligned.front().category;
    out.mean = data.rowwise().mean();
    data.colwise() -= out.mean;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU);
    out.basis.resize(dim, latent_dim);
    for (int d = 0; d < latent_dim; ++d) {
        const double sigma =
            d < svd.singularValues().size() ? svd.singularValues()(d) / std::sqrt(double(n)) : 0.0;
        out.basis.col(d) = svd.matrixU().col(d) * sigma;
    }
    return out;
}

/// packed = mean + basis * z; radii clamped at 0.
inline PrimitiveSet decode(const LinearShapeBasis& basis, const LatentCode& z) {
    if (z.size() != basis.latent_dim)
        throw DimensionMismatch("decode: latent code dimension mismatch");
    return detail::unpack_primitives(basis.mean + basis.basis * z, basis.category);
}

/// Least-squares latent code of a primitive set (zero along zero-variance modes).
inline LatentCode project(const LinearShapeBasis& basis, const PrimitiveSet& ps) {
    if (int(ps.size()) != basis.n_primitives)
        throw CountMismatch("project: primitive count mismatch");
    const Eigen::VectorXd delta = detail::pack_primitives(ps) - basis.mean;
    LatentCode z(basis.latent_dim);
    for (int d = 0; d < basis.latent_dim; ++d) {
        const double nrm2 = basis.basis.col(d).squaredNorm();
        z(d) = nrm2 > 1e-18 ? basis.basis.col(d).dot(delta) / nrm2 : 0.0;
    }
    return z;
}

/// Jacobian of all primitive centers w.r.t. z: (3 * n_primitives) x latent_dim,
/// constant in z (the center rows of the basis).
inline Eigen::MatrixXd center_jacobian(const LinearShapeBasis& basis) {
    Eigen::MatrixXd jac(3 * Eigen::Index(basis.n_primitives), basis.latent_dim);
    for (Eigen::Index i = 0; i < basis.n_primitives; ++i)
        jac.middleRows<3>(3 * i) = basis.basis.middleRows<3>(4 * i);
    return jac;
}

} // namespace sprim
