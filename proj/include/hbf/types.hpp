// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_TYPES_HPP
#define HBF_TYPES_HPP

#include <Eigen/Dense>
#include <complex>

namespace hbf
{
    using Real = double;
    using Complex = std::complex<Real>;

    template <typename Scalar>
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    template <typename Scalar>
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    using CMatrix = Mat<Complex>;
    using CVector = Vec<Complex>;
    using RMatrix = Mat<Real>;
    using RVector = Vec<Real>;

    inline constexpr Real pi = 3.14159265358979323846;
}

#endif
