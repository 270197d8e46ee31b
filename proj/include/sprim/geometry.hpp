#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sprim/errors.hpp"

namespace sprim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using PointCloud = std::vector<Vec3>;

/// Similarity transform acting as x_world = s * R * x + t.
struct Sim3 {
    double s = 1.0;
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    static Sim3 identity() { return {}; }

    Vec3 apply(const Vec3& x) const { return s * (R * x) + t; }

    Sim3 inverse() const {
        Sim3 inv;
        inv.s = 1.0 / s;
        inv.R = R.transpose();
        inv.t = -(inv.s) * (inv.R * t);
        return inv;
    }

    // this ∘ other: apply other first, then this.
    Sim3 compose(const Sim3& other) const {
        Sim3 out;
        out.s = s * other.s;
        out.R = R * other.R;
        out.t = s * (R * other.t) + t;
        return out;
    }

    bool valid(double tol = 1e-9) const {
        if (!(s > 0.0) || !t.allFinite() || !R.allFinite()) return false;
        if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
        return std::abs(R.determinant() - 1.0) <= tol;
    }
};

inline PointCloud sim3_apply(const Sim3& T, const PointCloud& cloud) {
    PointCloud out;
    out.reserve(cloud.size());
    for (const auto& p : cloud) out.push_back(T.apply(p));
    return out;
}

struct UmeyamaResult {
    Sim3 transform;
    double residual = 0.0; // mean squared alignment error
};

/// Closed-form least-squares similarity alignment: finds {s,R,t} minimizing
/// (1/N) sum ||dst_i - s R src_i - t||^2 with det(R) = +1.
/// Rank-2 (planar) source configurations are accepted; rank <= 1 is rejected.
inline UmeyamaResult umeyama_align(const PointCloud& src, const PointCloud& dst) {
    const std::size_t n = src.size();
    if (n != dst.size()) throw LengthMismatch("umeyama_align: cloud sizes differ");
    if (n < 3) throw DegenerateConfiguration("umeyama_align: need at least 3 correspondences");

    Vec3 mu_src = Vec3::Zero(), mu_dst = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        mu_src += src[i];
        mu_dst += dst[i];
    }
    mu_src /= double(n);
    mu_dst /= double(n);

    Mat3 cov = Mat3::Zero();
    double var_src = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x = src[i] - mu_src;
        const Vec3 y = dst[i] - mu_dst;
        cov += y * x.transpose();
        var_src += x.squaredNorm();
    }
    cov /= double(n);
    var_src /= double(n);

    if (var_src <= 1e-20)
        throw DegenerateConfiguration("umeyama_align: source points coincident");

    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 d = svd.singularValues();
    if (d(1) <= 1e-12 * std::max(d(0), 1e-300))
        throw DegenerateConfiguration("umeyama_align: correspondence covariance rank <= 1");

    Vec3 sgn = Vec3::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) sgn(2) = -1.0;

    UmeyamaResult res;
    res.transform.R = svd.matrixU() * sgn.asDiagonal() * svd.matrixV().transpose();
    res.transform.s = d.dot(sgn) / var_src;
    res.transform.t = mu_dst - res.transform.s * (res.transform.R * mu_src);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        err += (dst[i] - res.transform.apply(src[i])).squaredNorm();
    res.residual = err / double(n);
    return res;
}

/// Geodesic angle between two rotations, in degrees. Uses the Frobenius
/// identity ||a - b||_F = 2 sqrt(2) |sin(theta/2)|, which stays accurate
/// for tiny angles where the trace formula cancels.
inline double rotation_angle_deg(const Mat3& a, const Mat3& b) {
    const double d = (a - b).norm() / (2.0 * std::sqrt(2.0));
    return 2.0 * std::asin(std::clamp(d, 0.0, 1.0)) * 180.0 / M_PI;
}

/// Rotation of `angle_deg` degrees about a unit axis.
inline Mat3 axis_angle_deg(const Vec3& axis, double angle_deg) {
    return Eigen::AngleAxisd(angle_deg * M_PI / 180.0, axis.normalized()).toRotationMatrix();
}

} // namespace sprim
