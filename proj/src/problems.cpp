#include "fista/problems.hpp"

#include "fista/prox.hpp"
#include "fista/rng.hpp"
#include "fista/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fista {

namespace {

enum Stream : std::uint64_t { kOperator = 1, kSignal = 2, kNoise = 3, kSupport = 4, kSign = 5 };

Vector normal_vector(Index n, CounterRng& rng) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

Matrix normal_matrix(Index rows, Index cols, CounterRng& rng, double scale) {
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = scale * rng.normal();
    return out;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double power_iteration(const std::function<Vector(const Vector&)>& op, Index n, std::uint64_t seed,
                       double rel_tol, long max_iters) {
    if (n <= 0) throw std::invalid_argument("power_iteration: dimension must be positive");
    CounterRng rng(seed, 0x70);
    Vector v = normal_vector(n, rng);
    v.normalize();
    double previous = 0;
    for (long it = 1; it <= max_iters; ++it) {
        Vector w = op(v);
        const double lambda = v.dot(w);
        const double norm = w.norm();
        if (!std::isfinite(lambda) || !std::isfinite(norm))
            throw NumericalFault("power_iteration: non-finite value", it);
        if (norm == 0) return 0;
        if (it > 1 && std::abs(lambda - previous) <= rel_tol * std::abs(lambda)) return lambda;
        previous = lambda;
        v = w / norm;
    }
    throw NumericalFault("power_iteration: no convergence", max_iters);
}

std::vector<Index> sample_indices(Index n, Index count, std::uint64_t seed, std::uint64_t stream) {
    if (count < 0 || count > n) throw std::invalid_argument("sample_indices: count out of range");
    std::vector<Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Index(0));
    CounterRng rng(seed, stream);
    for (Index i = 0; i < count; ++i) {
        const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(count));
    std::sort(pool.begin(), pool.end());
    return pool;
}

Vector tridiag_apply(const Vector& x) {
    const Index n = x.size();
    Vector out(n);
    for (Index i = 0; i < n; ++i) {
        double v = 2 * x(i);
        if (i > 0) v -= x(i - 1);
        if (i + 1 < n) v -= x(i + 1);
        out(i) = v;
    }
    return out;
}

Matrix tridiag_matrix(Index n) {
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        a(i, i) = 2;
        if (i > 0) a(i, i - 1) = -1;
        if (i + 1 < n) a(i, i + 1) = -1;
    }
    return a;
}

Problem<double> make_tridiag_lsq(Index n) {
    if (n < 1) throw std::invalid_argument("make_tridiag_lsq: n must be >= 1");
    const auto model = tridiag_spectrum<double>(n);
    Problem<double> p;
    p.dimension = n;
    p.lipschitz = model.lipschitz;
    p.strong_convexity = model.alpha;
    p.gradient = [](const Vector& x) { return tridiag_apply(tridiag_apply(x)); };
    p.smooth_value = [](const Vector& x) { return 0.5 * tridiag_apply(x).squaredNorm(); };
    p.prox = [](const Vector& z, double) { return z; };
    p.nonsmooth_value = [](const Vector&) { return 0.0; };
    return p;
}

Matrix random_orthogonal(Index n, std::uint64_t seed) {
    CounterRng rng(seed, kOperator);
    const Matrix g = normal_matrix(n, n, rng, 1.0);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < n; ++j)
        if (r(j, j) < 0) q.col(j) *= -1;
    return q;
}

Problem<double> make_quadratic(const Vector& eigenvalues, const Vector& minimizer, std::uint64_t seed) {
    const Index n = eigenvalues.size();
    require_dimension(minimizer.size(), n, "make_quadratic");
    if (n == 0 || eigenvalues.minCoeff() < 0) throw std::invalid_argument("make_quadratic: eigenvalues must be non-negative");
    const Matrix u = random_orthogonal(n, seed);
    auto q = std::make_shared<const Matrix>(u * eigenvalues.asDiagonal() * u.transpose());
    auto xs = std::make_shared<const Vector>(minimizer);
    Problem<double> p;
    p.dimension = n;
    p.lipschitz = eigenvalues.maxCoeff();
    p.strong_convexity = eigenvalues.minCoeff();
    p.gradient = [q, xs](const Vector& x) -> Vector { return *q * (x - *xs); };
    p.smooth_value = [q, xs](const Vector& x) {
        const Vector d = x - *xs;
        return 0.5 * d.dot(*q * d);
    };
    p.prox = [](const Vector& z, double) { return z; };
    p.nonsmooth_value = [](const Vector&) { return 0.0; };
    return p;
}

const char* to_string(Regularizer reg) {
    switch (reg) {
    case Regularizer::L1: return "l1";
    case Regularizer::Linf: return "linf";
    case Regularizer::TV: return "tv";
    }
    return "unknown";
}

LinearInverseRecipe lasso_defaults() { return {Regularizer::L1, 32, 64, 8, 0.0, std::nullopt, 0}; }
LinearInverseRecipe linf_defaults() { return {Regularizer::Linf, 1020, 1024, 32, 0.0, std::nullopt, 0}; }
LinearInverseRecipe tv_defaults() { return {Regularizer::TV, 256, 1024, 32, 0.0, std::nullopt, 0}; }

LinearInverse generate_linear_inverse(const LinearInverseRecipe& recipe) {
    if (recipe.m < 1 || recipe.n < 1) throw std::invalid_argument("linear inverse: dimensions must be positive");
    if (recipe.noise_sigma < 0) throw std::invalid_argument("linear inverse: noise must be non-negative");
    if (recipe.mu && !(*recipe.mu > 0)) throw std::invalid_argument("linear inverse: mu must be positive");
    const Index n = recipe.n;
    LinearInverse out;
    out.reg = recipe.reg;

    CounterRng op_rng(recipe.seed, kOperator);
    out.K = normal_matrix(recipe.m, n, op_rng, 1.0 / std::sqrt(double(recipe.m)));

    CounterRng sig_rng(recipe.seed, kSignal);
    switch (recipe.reg) {
    case Regularizer::L1: {
        if (recipe.count > n) throw std::invalid_argument("linear inverse: too many non-zeros");
        out.x_ob = Vector::Zero(n);
        for (Index i : sample_indices(n, recipe.count, recipe.seed, kSupport)) out.x_ob(i) = sig_rng.normal();
        break;
    }
    case Regularizer::Linf: {
        if (recipe.count > n) throw std::invalid_argument("linear inverse: too many saturated entries");
        out.x_ob.resize(n);
        for (Index i = 0; i < n; ++i) out.x_ob(i) = sig_rng.uniform(-1.0, 1.0);
        CounterRng sign_rng(recipe.seed, kSign);
        for (Index i : sample_indices(n, recipe.count, recipe.seed, kSupport))
            out.x_ob(i) = (sign_rng() & 1U) ? 1.0 : -1.0;
        break;
    }
    case Regularizer::TV: {
        if (recipe.count > n - 1) throw std::invalid_argument("linear inverse: too many jumps");
        Vector steps = Vector::Zero(n);
        steps(0) = sig_rng.normal();
        for (Index i : sample_indices(n - 1, recipe.count, recipe.seed, kSupport)) steps(i + 1) = sig_rng.normal();
        out.x_ob.resize(n);
        double level = 0;
        for (Index i = 0; i < n; ++i) out.x_ob(i) = (level += steps(i));
        break;
    }
    }

    out.f = out.K * out.x_ob;
    if (recipe.noise_sigma > 0) {
        CounterRng noise_rng(recipe.seed, kNoise);
        out.f += recipe.noise_sigma * normal_vector(recipe.m, noise_rng);
    }
    out.mu = recipe.mu ? *recipe.mu : 0.1 * (out.K.transpose() * out.f).cwiseAbs().maxCoeff();
    if (!(out.mu > 0)) throw std::invalid_argument("linear inverse: calibrated mu is zero (f = 0?)");
    return out;
}

Problem<double> make_linear_inverse(const LinearInverse& data) {
    if (data.K.rows() != data.f.size()) throw std::invalid_argument("linear inverse: K and f disagree");
    if (!(data.mu > 0)) throw std::invalid_argument("linear inverse: mu must be positive");
    struct Shared {
        Matrix K;
        Vector f;
        Matrix gram;
        Vector kt_f;
        bool use_gram;
    };
    auto s = std::make_shared<Shared>();
    s->K = data.K;
    s->f = data.f;
    s->kt_f = data.K.transpose() * data.f;
    s->use_gram = data.K.cols() < 2 * data.K.rows();
    if (s->use_gram) s->gram = data.K.transpose() * data.K;

    Problem<double> p;
    p.dimension = data.K.cols();
    p.gradient = [s](const Vector& x) -> Vector {
        if (s->use_gram) return s->gram * x - s->kt_f;
        return s->K.transpose() * (s->K * x - s->f);
    };
    p.smooth_value = [s](const Vector& x) { return 0.5 * (s->K * x - s->f).squaredNorm(); };
    p.lipschitz = power_iteration(
        [s](const Vector& v) -> Vector {
            if (s->use_gram) return s->gram * v;
            return s->K.transpose() * (s->K * v);
        },
        p.dimension);
    const double mu = data.mu;
    switch (data.reg) {
    case Regularizer::L1:
        p.prox = [mu](const Vector& z, double g) { return prox_l1(z, g * mu); };
        p.nonsmooth_value = [mu](const Vector& x) { return mu * x.lpNorm<1>(); };
        break;
    case Regularizer::Linf:
        p.prox = [mu](const Vector& z, double g) { return prox_linf(z, g * mu); };
        p.nonsmooth_value = [mu](const Vector& x) { return mu * x.lpNorm<Eigen::Infinity>(); };
        break;
    case Regularizer::TV:
        p.prox = [mu](const Vector& z, double g) { return prox_tv1d(z, g * mu); };
        p.nonsmooth_value = [mu](const Vector& x) { return mu * total_variation(x); };
        break;
    }
    return p;
}

double log1p_exp(double z) {
    if (z > 0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

Problem<double> make_logistic(const Matrix& features, const Vector& labels, double mu) {
    if (features.rows() != labels.size()) throw std::invalid_argument("logistic: features and labels disagree");
    if (features.rows() == 0 || features.cols() == 0) throw std::invalid_argument("logistic: empty data");
    if (!(mu > 0)) throw std::invalid_argument("logistic: mu must be positive");
    for (Index i = 0; i < labels.size(); ++i)
        if (labels(i) != 1.0 && labels(i) != -1.0)
            throw std::invalid_argument("logistic: label " + std::to_string(i) + " is not +1 or -1");
    struct Shared {
        Matrix h;
        Vector l;
    };
    auto s = std::make_shared<Shared>(Shared{features, labels});
    const double m = double(features.rows());

    Problem<double> p;
    p.dimension = features.cols();
    p.smooth_value = [s, m](const Vector& x) {
        const Vector margin = s->l.cwiseProduct(s->h * x);
        double total = 0;
        for (Index i = 0; i < margin.size(); ++i) total += log1p_exp(-margin(i));
        return total / m;
    };
    p.gradient = [s, m](const Vector& x) -> Vector {
        const Vector margin = s->l.cwiseProduct(s->h * x);
        Vector w(margin.size());
        for (Index i = 0; i < margin.size(); ++i) w(i) = -s->l(i) * sigmoid(-margin(i));
        return s->h.transpose() * w / m;
    };
    p.prox = [mu](const Vector& z, double g) { return prox_l1(z, g * mu); };
    p.nonsmooth_value = [mu](const Vector& x) { return mu * x.lpNorm<1>(); };
    const double top = power_iteration([s](const Vector& v) -> Vector { return s->h.transpose() * (s->h * v); },
                                       p.dimension);
    p.lipschitz = top / (4 * m);
    return p;
}

LabeledData synthetic_logistic(Index m, Index n, std::uint64_t seed, Index support, double label_noise) {
    if (m < 1 || n < 1) throw std::invalid_argument("synthetic_logistic: dimensions must be positive");
    support = std::min(support, n);
    LabeledData out;
    CounterRng op_rng(seed, kOperator);
    out.features = normal_matrix(m, n, op_rng, 1.0);
    CounterRng sig_rng(seed, kSignal);
    Vector w = Vector::Zero(n);
    for (Index i : sample_indices(n, support, seed, kSupport)) w(i) = sig_rng.normal();
    CounterRng noise_rng(seed, kNoise);
    const Vector score = out.features * w;
    out.labels.resize(m);
    for (Index i = 0; i < m; ++i) out.labels(i) = score(i) + label_noise * noise_rng.normal() >= 0 ? 1.0 : -1.0;
    return out;
}

void standardize_columns(Matrix& features) {
    const double rows = double(features.rows());
    if (rows == 0) return;
    for (Index j = 0; j < features.cols(); ++j) {
        auto col = features.col(j);
        const double mean = col.mean();
        col.array() -= mean;
        const double sd = std::sqrt(col.squaredNorm() / rows);
        if (sd > 0) col /= sd;
    }
}

PcpData synthetic_pcp(Index m, Index n, Index rank, double sparsity, std::uint64_t seed, double magnitude) {
    if (m < 1 || n < 1 || rank < 1) throw std::invalid_argument("synthetic_pcp: dimensions must be positive");
    if (!(sparsity >= 0 && sparsity <= 1)) throw std::invalid_argument("synthetic_pcp: sparsity must lie in [0,1]");
    PcpData out;
    CounterRng op_rng(seed, kOperator);
    const Matrix u = normal_matrix(m, rank, op_rng, 1.0);
    const Matrix v = normal_matrix(n, rank, op_rng, 1.0);
    out.low_rank = u * v.transpose() / std::sqrt(double(rank));
    out.sparse = Matrix::Zero(m, n);
    const auto count = static_cast<Index>(std::llround(sparsity * double(m * n)));
    CounterRng sig_rng(seed, kSignal);
    for (Index idx : sample_indices(m * n, count, seed, kSupport)) {
        const double value = magnitude * sig_rng.uniform(1.0, 2.0);
        out.sparse(idx % m, idx / m) = (sig_rng() & 1U) ? value : -value;
    }
    out.f = out.low_rank + out.sparse;
    return out;
}

Matrix as_matrix(const Vector& x, Index rows, Index cols) {
    require_dimension(x.size(), rows * cols, "as_matrix");
    return Eigen::Map<const Matrix>(x.data(), rows, cols);
}

Vector as_vector(const Matrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

Problem<double> make_pcp(const Matrix& f, double mu, double nu) {
    if (!(mu > 0) || !(nu > 0)) throw std::invalid_argument("pcp: mu and nu must be positive");
    auto fv = std::make_shared<const Vector>(as_vector(f));
    const Index rows = f.rows();
    const Index cols = f.cols();
    Problem<double> p;
    p.dimension = f.size();
    p.lipschitz = 1;
    p.gradient = [fv, mu](const Vector& x) -> Vector { return -moreau_env_grad_l1(*fv - x, mu); };
    p.smooth_value = [fv, mu](const Vector& x) { return moreau_env_l1(*fv - x, mu); };
    p.prox = [rows, cols, nu](const Vector& z, double g) {
        return as_vector(prox_nuclear(as_matrix(z, rows, cols), g * nu));
    };
    p.nonsmooth_value = [rows, cols, nu](const Vector& x) { return nu * nuclear_norm(as_matrix(x, rows, cols)); };
    return p;
}

Matrix extract_sparse(const Matrix& f, const Matrix& x_l, double mu) {
    if (f.rows() != x_l.rows() || f.cols() != x_l.cols()) throw std::invalid_argument("extract_sparse: shape mismatch");
    return prox_l1(f - x_l, mu);
}

namespace {

bool parse_double(std::string_view token, double& out) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return false;
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

[[noreturn]] void libsvm_error(long line, const std::string& what) {
    throw std::runtime_error("libsvm line " + std::to_string(line) + ": " + what);
}

}  // namespace

LabeledData parse_libsvm(std::istream& in, Index min_features) {
    struct Entry {
        Index row;
        Index col;
        double value;
    };
    std::vector<Entry> entries;
    std::vector<double> labels;
    Index cols = min_features;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream tokens(line);
        std::string token;
        if (!(tokens >> token)) continue;
        double label = 0;
        if (!parse_double(token, label)) libsvm_error(line_no, "non-numeric label '" + token + "'");
        if (label == 0 || label == -1) label = -1;
        else if (label == 1) label = 1;
        else libsvm_error(line_no, "label '" + token + "' is not in {-1, 0, +1}");
        const auto row = static_cast<Index>(labels.size());
        labels.push_back(label);
        while (tokens >> token) {
            const auto colon = token.find(':');
            if (colon == std::string::npos || colon == 0) libsvm_error(line_no, "malformed feature '" + token + "'");
            long long index = 0;
            const auto idx_view = std::string_view(token).substr(0, colon);
            const auto r = std::from_chars(idx_view.data(), idx_view.data() + idx_view.size(), index);
            if (r.ec != std::errc() || r.ptr != idx_view.data() + idx_view.size() || index < 1)
                libsvm_error(line_no, "bad feature index in '" + token + "'");
            double value = 0;
            if (!parse_double(std::string_view(token).substr(colon + 1), value))
                libsvm_error(line_no, "bad feature value in '" + token + "'");
            entries.push_back({row, static_cast<Index>(index - 1), value});
            cols = std::max(cols, static_cast<Index>(index));
        }
    }
    LabeledData out;
    out.features = Matrix::Zero(static_cast<Index>(labels.size()), cols);
    out.labels = Eigen::Map<const Vector>(labels.data(), static_cast<Index>(labels.size()));
    for (const auto& e : entries) out.features(e.row, e.col) = e.value;
    return out;
}

void write_libsvm(std::ostream& out, const Matrix& features, const Vector& labels) {
    if (features.rows() != labels.size()) throw std::invalid_argument("write_libsvm: features and labels disagree");
    char buf[64];
    for (Index i = 0; i < features.rows(); ++i) {
        out << (labels(i) > 0 ? "+1" : "-1");
        for (Index j = 0; j < features.cols(); ++j) {
            const double v = features(i, j);
            if (v == 0) continue;
            std::snprintf(buf, sizeof buf, " %lld:%.17g", static_cast<long long>(j + 1), v);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace fista
