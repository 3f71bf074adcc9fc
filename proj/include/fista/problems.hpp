#pragma once

#include "fista/core.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fista {

using Vector = Vec<double>;
using Matrix = Mat<double>;

/// Largest eigenvalue of a symmetric positive semi-definite operator.
/// Stops when the Rayleigh quotient changes by less than rel_tol; throws
/// NumericalFault when max_iters is reached first.
double power_iteration(const std::function<Vector(const Vector&)>& op, Index n,
                       std::uint64_t seed = 0, double rel_tol = 1e-9, long max_iters = 100000);

/// Indices drawn uniformly without replacement, sorted.
std::vector<Index> sample_indices(Index n, Index count, std::uint64_t seed, std::uint64_t stream);

// ---- least squares with the (-1, 2, -1) tridiagonal operator ----

/// A x for the n x n tridiagonal matrix with 2 on the diagonal and -1 beside it.
Vector tridiag_apply(const Vector& x);
Matrix tridiag_matrix(Index n);

/// F = 1/2 ||A x||^2, R = 0; L and alpha from the analytic spectrum.
Problem<double> make_tridiag_lsq(Index n = 201);

// ---- generic quadratic ----

/// F = 1/2 (x - x*)^T Q (x - x*), R = 0, with Q = U diag(eigenvalues) U^T and U a
/// seeded random orthogonal matrix. L and alpha are the extreme eigenvalues.
Problem<double> make_quadratic(const Vector& eigenvalues, const Vector& minimizer, std::uint64_t seed);

/// Seeded random orthogonal matrix (Q factor of a Gaussian matrix, sign fixed).
Matrix random_orthogonal(Index n, std::uint64_t seed);

// ---- regularised linear inverse problems  mu R(x) + 1/2 ||K x - f||^2 ----

enum class Regularizer { L1, Linf, TV };

const char* to_string(Regularizer reg);

struct LinearInverse {
    Matrix K;
    Vector f;
    Vector x_ob;
    double mu = 0;
    Regularizer reg = Regularizer::L1;
};

struct LinearInverseRecipe {
    Regularizer reg = Regularizer::L1;
    Index m = 32;
    Index n = 64;
    /// Non-zeros (L1), saturated entries (Linf) or jumps (TV) of x_ob.
    Index count = 8;
    double noise_sigma = 0;
    /// Unset selects 0.1 * ||K^T f||_inf.
    std::optional<double> mu;
    std::uint64_t seed = 0;
};

LinearInverseRecipe lasso_defaults();
LinearInverseRecipe linf_defaults();
LinearInverseRecipe tv_defaults();

/// K has i.i.d. N(0, 1/m) entries and f = K x_ob + w.
LinearInverse generate_linear_inverse(const LinearInverseRecipe& recipe);

/// L is the power-iteration estimate of ||K||^2.
Problem<double> make_linear_inverse(const LinearInverse& data);

// ---- sparse logistic regression ----

struct LabeledData {
    Matrix features;
    Vector labels;
};

/// F = (1/m) sum log(1 + exp(-l_i h_i^T x)), R = mu ||x||_1, L = ||H||^2 / (4m).
Problem<double> make_logistic(const Matrix& features, const Vector& labels, double mu = 1e-2);

/// Gaussian features with a sparse planted separator; labels sign(h^T w + noise).
LabeledData synthetic_logistic(Index m, Index n, std::uint64_t seed, Index support = 10,
                               double label_noise = 0.5);

/// Scale each column to zero mean and unit variance (constant columns only centred).
void standardize_columns(Matrix& features);

/// Numerically safe log(1 + exp(z)).
double log1p_exp(double z);

// ---- principal component pursuit ----

struct PcpData {
    Matrix f;
    Matrix low_rank;
    Matrix sparse;
};

/// f = U V^T + S with U, V Gaussian (m x rank, n x rank) and S supported on a
/// fraction `sparsity` of entries with values uniform in +-[1, 2] * magnitude.
PcpData synthetic_pcp(Index m, Index n, Index rank, double sparsity, std::uint64_t seed,
                      double magnitude = 1.0);

/// Variable x_l stored column-major as a vector of length m*n.
/// F(x_l) = Moreau envelope of mu ||.||_1 at f - x_l, R = nu ||x_l||_*, L = 1.
Problem<double> make_pcp(const Matrix& f, double mu, double nu);

/// x_s = prox_{mu ||.||_1}(f - x_l).
Matrix extract_sparse(const Matrix& f, const Matrix& x_l, double mu);

Matrix as_matrix(const Vector& x, Index rows, Index cols);
Vector as_vector(const Matrix& x);

// ---- LIBSVM text format ----

/// Parses "<label> <idx>:<val> ..." lines with 1-based indices. Labels 0/-1
/// map to -1, +1/1 to +1. Columns are max(index, min_features).
LabeledData parse_libsvm(std::istream& in, Index min_features = 0);
void write_libsvm(std::ostream& out, const Matrix& features, const Vector& labels);

}  // namespace fista
