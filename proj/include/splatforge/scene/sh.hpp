// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Real spherical harmonics up to degree 3 in the basis/sign convention used by
// common splat files (f_dc / f_rest).
//
#pragma once

#include <Eigen/Core>

namespace splatforge::sh {

inline constexpr double kC0 = 0.28209479177387814;
inline constexpr double kC1 = 0.4886025119029199;
inline constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                                  0.5462742152960396};
inline constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                                  -0.4570457994644658, 1.445305721320277, -0.5900435899266435};

constexpr int coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Raw SH sum (without the +0.5 offset) for a unit direction `d`.
/// `coeffs` has coeff_count(degree) rows and 3 color columns.
template <class S, class Coeffs>
Eigen::Matrix<S, 3, 1> evaluate(int degree, const Coeffs& coeffs, const Eigen::Matrix<S, 3, 1>& d) {
    auto row = [&](int k) -> Eigen::Matrix<S, 3, 1> { return coeffs.row(k).transpose().template cast<S>(); };
    Eigen::Matrix<S, 3, 1> r = row(0) * S(kC0);
    if (degree < 1) return r;
    const S x = d.x(), y = d.y(), z = d.z();
    r += row(1) * (S(-kC1) * y) + row(2) * (S(kC1) * z) + row(3) * (S(-kC1) * x);
    if (degree < 2) return r;
    const S xx = x * x, yy = y * y, zz = z * z, xy = x * y, yz = y * z, xz = x * z;
    r += row(4) * (S(kC2[0]) * xy) + row(5) * (S(kC2[1]) * yz) + row(6) * (S(kC2[2]) * (S(2) * zz - xx - yy)) +
         row(7) * (S(kC2[3]) * xz) + row(8) * (S(kC2[4]) * (xx - yy));
    if (degree < 3) return r;
    r += row(9) * (S(kC3[0]) * y * (S(3) * xx - yy)) + row(10) * (S(kC3[1]) * xy * z) +
         row(11) * (S(kC3[2]) * y * (S(4) * zz - xx - yy)) + row(12) * (S(kC3[3]) * z * (S(2) * zz - S(3) * xx - S(3) * yy)) +
         row(13) * (S(kC3[4]) * x * (S(4) * zz - xx - yy)) + row(14) * (S(kC3[5]) * z * (xx - yy)) +
         row(15) * (S(kC3[6]) * x * (xx - S(3) * yy));
    return r;
}

/// Degree-1 coefficients (rows 1..3) as a direction vector v with contribution C1 * dot(v, d).
template <class Coeffs>
Eigen::Matrix3d degree1_as_vectors(const Coeffs& coeffs) {
    // Columns are color channels; rows are (x, y, z).
    Eigen::Matrix3d v;
    v.row(0) = -coeffs.row(3);
    v.row(1) = -coeffs.row(1);
    v.row(2) = coeffs.row(2);
    return v;
}

template <class Coeffs>
void set_degree1_from_vectors(Coeffs& coeffs, const Eigen::Matrix3d& v) {
    coeffs.row(3) = -v.row(0);
    coeffs.row(1) = -v.row(1);
    coeffs.row(2) = v.row(2);
}

}  // namespace splatforge::sh
