#pragma once

#include <array>
#include <random>
#include <unordered_map>
#include <vector>

#include "sprim/geometry.hpp"
#include "sprim/labeling.hpp"

namespace sprim {

inline constexpr double kDegenerateEps = 1e-12;

using Quadruple = std::array<Label, 4>; // (i, j, k, o) with i != j, k != o

struct QuadrupleSample {
    std::vector<Quadruple> quadruples;
    std::uint64_t seed = 0;
    std::vector<Label> source_labels;

    std::size_t size() const { return quadruples.size(); }
};

using ShapeDescriptor = Eigen::VectorXd; // entries in [-1, 1]

using CenterMap = std::unordered_map<Label, Vec3>;

/// Cosine between the normalized difference vectors (c_i - c_j) and
/// (c_k - c_o): a single SIM(3)-invariant scalar.
inline double atomic_descriptor(const Vec3& c_i, const Vec3& c_j, const Vec3& c_k,
                                const Vec3& c_o) {
    const Vec3 v1 = c_i - c_j;
    const Vec3 v2 = c_k - c_o;
    const double n1 = v1.norm(), n2 = v2.norm();
    if (n1 <= kDegenerateEps || n2 <= kDegenerateEps)
        throw DegenerateVector("atomic_descriptor: coincident centers");
    return v1.dot(v2) / (n1 * n2);
}

/// Gradient of the atomic descriptor w.r.t. each of the four centers.
inline std::array<Vec3, 4> atomic_descriptor_grad(const Vec3& c_i, const Vec3& c_j,
                                                  const Vec3& c_k, const Vec3& c_o) {
    const Vec3 v1 = c_i - c_j;
    const Vec3 v2 = c_k - c_o;
    const double n1 = v1.norm(), n2 = v2.norm();
    if (n1 <= kDegenerateEps || n2 <= kDegenerateEps)
        throw DegenerateVector("atomic_descriptor_grad: coincident centers");
    const Vec3 u1 = v1 / n1;
    const Vec3 u2 = v2 / n2;
    const double cosv = u1.dot(u2);
    // d(cos)/dv1 = (u2 - cos * u1) / n1, and symmetrically for v2.
    const Vec3 g1 = (u2 - cosv * u1) / n1;
    const Vec3 g2 = (u1 - cosv * u2) / n2;
    return {g1, -g1, g2, -g2};
}

/// Draws m quadruples uniformly i.i.d. (with replacement across quadruples)
/// from the feasible set {(i,j,k,o) : i != j, k != o}; deterministic given
/// the seed. When a center map is supplied, quadruples whose observed
/// difference vectors are degenerate are rejected and redrawn.
inline QuadrupleSample sample_quadruples(const std::vector<Label>& labels, std::size_t m,
                                         std::uint64_t seed,
                                         const CenterMap* centers = nullptr) {
    if (labels.size() < 2) throw LabelSetTooSmall("sample_quadruples: need at least 2 labels");
    QuadrupleSample out;
    out.seed = seed;
    out.source_labels = labels;
    out.quadruples.reserve(m);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
    auto draw_pair = [&](Label& a, Label& b) {
        do {
            a = labels[pick(rng)];
            b = labels[pick(rng)];
        } while (a == b);
    };
    while (out.quadruples.size() < m) {
        Quadruple q;
        draw_pair(q[0], q[1]);
        draw_pair(q[2], q[3]);
        if (centers) {
            const double n1 = (centers->at(q[0]) - centers->at(q[1])).norm();
            const double n2 = (centers->at(q[2]) - centers->at(q[3])).norm();
            if (n1 <= kDegenerateEps || n2 <= kDegenerateEps) continue;
        }
        out.quadruples.push_back(q);
    }
    return out;
}

inline CenterMap make_center_map(const SemanticCenters& sc) {
    CenterMap map;
    map.reserve(sc.size());
    for (std::size_t i = 0; i < sc.size(); ++i) map.emplace(sc.labels[i], sc.centers[i]);
    return map;
}

inline CenterMap make_center_map(const PrimitiveSet& ps) {
    CenterMap map;
    map.reserve(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) map.emplace(Label(i), ps.primitives[i].c);
    return map;
}

/// Concatenation of atomic descriptors over the quadruple sample, in order.
inline ShapeDescriptor shape_descriptor(const CenterMap& centers, const QuadrupleSample& qs) {
    ShapeDescriptor values(Eigen::Index(qs.size()));
    for (std::size_t m = 0; m < qs.size(); ++m) {
        const Quadruple& q = qs.quadruples[m];
        std::array<const Vec3*, 4> c;
        for (int k = 0; k < 4; ++k) {
            const auto it = centers.find(q[std::size_t(k)]);
            if (it == centers.end())
                throw MissingLabel("shape_descriptor: quadruple label has no center");
            c[std::size_t(k)] = &it->second;
        }
        try {
            values(Eigen::Index(m)) = atomic_descriptor(*c[0], *c[1], *c[2], *c[3]);
        } catch (const DegenerateVector&) {
            throw DegenerateVector("shape_descriptor: degenerate quadruple at index " +
                                   std::to_string(m));
        }
    }
    return values;
}

/// Euclidean norm of the elementwise difference of two descriptors.
inline double descriptor_residual(const ShapeDescriptor& a, const ShapeDescriptor& b) {
    if (a.size() != b.size()) throw LengthMismatch("descriptor_residual: length mismatch");
    return (a - b).norm();
}

} // namespace sprim
