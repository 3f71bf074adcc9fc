#pragma once

#include "fista/core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <functional>
#include <vector>

namespace fista {

namespace detail {
inline void require_positive(double value, const char* what) {
    if (!(value > 0)) throw std::invalid_argument(std::string(what) + ": threshold must be positive");
}
}  // namespace detail

/// Soft thresholding, prox of lam*||.||_1. Works entrywise on any dense shape.
template <typename Derived>
typename Derived::PlainObject prox_l1(const Eigen::MatrixBase<Derived>& z,
                                      typename Derived::Scalar lam) {
    using Scalar = typename Derived::Scalar;
    detail::require_positive(static_cast<double>(lam), "prox_l1");
    return z.unaryExpr([lam](Scalar v) {
        const Scalar m = std::abs(v) - lam;
        return m > 0 ? (v > 0 ? m : -m) : Scalar(0);
    });
}

/// Euclidean projection onto {x : ||x||_1 <= radius} by sorting.
template <typename Derived>
typename Derived::PlainObject project_l1_ball(const Eigen::MatrixBase<Derived>& z,
                                              typename Derived::Scalar radius) {
    using Scalar = typename Derived::Scalar;
    detail::require_positive(static_cast<double>(radius), "project_l1_ball");
    typename Derived::PlainObject out = z;
    if (z.cwiseAbs().sum() <= radius) return out;

    std::vector<Scalar> mags(static_cast<std::size_t>(z.size()));
    for (Index i = 0; i < z.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(z(i));
    std::sort(mags.begin(), mags.end(), std::greater<Scalar>());

    Scalar cumulative = 0;
    Scalar theta = 0;
    for (std::size_t j = 0; j < mags.size(); ++j) {
        cumulative += mags[j];
        const Scalar candidate = (cumulative - radius) / Scalar(j + 1);
        if (mags[j] - candidate > 0) theta = candidate;
        else break;
    }
    for (Index i = 0; i < out.size(); ++i) {
        const Scalar m = std::abs(z(i)) - theta;
        out(i) = m > 0 ? (z(i) > 0 ? m : -m) : Scalar(0);
    }
    return out;
}

/// prox of lam*||.||_inf through the Moreau identity with the l1 ball.
template <typename Derived>
typename Derived::PlainObject prox_linf(const Eigen::MatrixBase<Derived>& z,
                                        typename Derived::Scalar lam) {
    detail::require_positive(static_cast<double>(lam), "prox_linf");
    const typename Derived::PlainObject scaled = z / lam;
    return z - lam * project_l1_ball(scaled, typename Derived::Scalar(1));
}

/// Exact prox of lam * sum_i |x_{i+1} - x_i| (Condat's direct algorithm).
template <typename Derived>
typename Derived::PlainObject prox_tv1d(const Eigen::MatrixBase<Derived>& input,
                                        typename Derived::Scalar lam) {
    using Scalar = typename Derived::Scalar;
    detail::require_positive(static_cast<double>(lam), "prox_tv1d");
    const Index n = input.size();
    typename Derived::PlainObject output(input.rows(), input.cols());
    if (n == 0) return output;
    const auto in = [&](Index i) { return input(i); };

    Index k = 0, k0 = 0, kplus = 0, kminus = 0;
    Scalar umin = lam, umax = -lam;
    Scalar vmin = in(0) - lam, vmax = in(0) + lam;
    const Scalar twolam = 2 * lam;
    const Scalar minlam = -lam;

    for (;;) {
        while (k == n - 1) {
            if (umin < 0) {
                do output(k0++) = vmin; while (k0 <= kminus);
                k = kminus = k0;
                vmin = in(k);
                umin = lam;
                umax = vmin + umin - vmax;
            } else if (umax > 0) {
                do output(k0++) = vmax; while (k0 <= kplus);
                k = kplus = k0;
                vmax = in(k);
                umax = minlam;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / Scalar(k - k0 + 1);
                do output(k0++) = vmin; while (k0 <= k);
                return output;
            }
        }
        umin += in(k + 1) - vmin;
        if (umin < minlam) {
            do output(k0++) = vmin; while (k0 <= kminus);
            k = kminus = kplus = k0;
            vmin = in(k);
            vmax = vmin + twolam;
            umin = lam;
            umax = minlam;
            continue;
        }
        umax += in(k + 1) - vmax;
        if (umax > lam) {
            do output(k0++) = vmax; while (k0 <= kplus);
            k = kminus = kplus = k0;
            vmax = in(k);
            vmin = vmax - twolam;
            umin = lam;
            umax = minlam;
            continue;
        }
        ++k;
        if (umin >= lam) {
            kminus = k;
            vmin += (umin - lam) / Scalar(kminus - k0 + 1);
            umin = lam;
        }
        if (umax <= minlam) {
            kplus = k;
            vmax += (umax + lam) / Scalar(kplus - k0 + 1);
            umax = minlam;
        }
    }
}

/// Singular value thresholding: prox of lam*||.||_* (nuclear norm).
template <typename Derived>
typename Derived::PlainObject prox_nuclear(const Eigen::MatrixBase<Derived>& z,
                                           typename Derived::Scalar lam) {
    using Scalar = typename Derived::Scalar;
    using Plain = typename Derived::PlainObject;
    detail::require_positive(static_cast<double>(lam), "prox_nuclear");
    if (!z.allFinite()) throw NumericalFault("prox_nuclear: non-finite input", 0);
    Eigen::JacobiSVD<Plain> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalFault("prox_nuclear: SVD failed", 0);
    const Vec<Scalar> shrunk = (svd.singularValues().array() - lam).max(Scalar(0)).matrix();
    return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

/// Sum of singular values.
template <typename Derived>
typename Derived::Scalar nuclear_norm(const Eigen::MatrixBase<Derived>& z) {
    using Plain = typename Derived::PlainObject;
    Eigen::JacobiSVD<Plain> svd(z);
    return svd.singularValues().sum();
}

/// Gradient of the index-1 Moreau envelope of mu*||.||_1, i.e. z - prox_l1(z, mu).
template <typename Derived>
typename Derived::PlainObject moreau_env_grad_l1(const Eigen::MatrixBase<Derived>& z,
                                                 typename Derived::Scalar mu) {
    detail::require_positive(static_cast<double>(mu), "moreau_env_grad_l1");
    return z.cwiseMax(-mu).cwiseMin(mu);
}

/// Value of the index-1 Moreau envelope of mu*||.||_1 (Huber function).
template <typename Derived>
typename Derived::Scalar moreau_env_l1(const Eigen::MatrixBase<Derived>& z,
                                       typename Derived::Scalar mu) {
    using Scalar = typename Derived::Scalar;
    detail::require_positive(static_cast<double>(mu), "moreau_env_l1");
    Scalar total = 0;
    for (Index j = 0; j < z.cols(); ++j)
        for (Index i = 0; i < z.rows(); ++i) {
            const Scalar a = std::abs(z(i, j));
            total += a <= mu ? a * a / 2 : mu * (a - mu / 2);
        }
    return total;
}

template <typename Derived>
typename Derived::Scalar total_variation(const Eigen::MatrixBase<Derived>& x) {
    if (x.size() < 2) return 0;
    return (x.tail(x.size() - 1) - x.head(x.size() - 1)).cwiseAbs().sum();
}

}  // namespace fista
