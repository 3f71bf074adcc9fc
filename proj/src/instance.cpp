#include "fista/instance.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fista {

namespace {

constexpr const char* kFormat = "fista-instance";
constexpr const char* kReferenceFormat = "fista-reference";
constexpr int kVersion = 1;

void put_le(std::ostream& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
}

double get_le(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("instance file: truncated data block");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

void write_container(std::ostream& out, const char* format, nlohmann::json header,
                     const std::vector<std::pair<std::string, Matrix>>& blocks) {
    header["format"] = format;
    header["version"] = kVersion;
    auto list = nlohmann::json::array();
    for (const auto& [name, mat] : blocks) list.push_back({{"name", name}, {"rows", mat.rows()}, {"cols", mat.cols()}});
    header["blocks"] = list;
    out << header.dump() << '\n';
    for (const auto& [name, mat] : blocks)
        for (Index j = 0; j < mat.cols(); ++j)
            for (Index i = 0; i < mat.rows(); ++i) put_le(out, mat(i, j));
    if (!out) throw std::runtime_error("instance file: write failed");
}

nlohmann::json read_container(std::istream& in, const char* format,
                              std::vector<std::pair<std::string, Matrix>>& blocks) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("instance file: missing header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("instance file: bad header: ") + e.what());
    }
    if (header.value("format", "") != format) throw std::runtime_error(std::string("instance file: expected format ") + format);
    if (header.value("version", 0) != kVersion) throw std::runtime_error("instance file: unsupported version");
    for (const auto& b : header.at("blocks")) {
        const Index rows = b.at("rows").get<Index>();
        const Index cols = b.at("cols").get<Index>();
        if (rows < 0 || cols < 0) throw std::runtime_error("instance file: negative block shape");
        Matrix mat(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) mat(i, j) = get_le(in);
        blocks.emplace_back(b.at("name").get<std::string>(), std::move(mat));
    }
    return header;
}

Index or_default(Index value, Index fallback) { return value > 0 ? value : fallback; }

Matrix column(const Vector& v) { return v; }

}  // namespace

const char* to_string(Family family) {
    switch (family) {
    case Family::Tridiag: return "tridiag";
    case Family::Lasso: return "lasso";
    case Family::Linf: return "linf";
    case Family::TV: return "tv";
    case Family::Logistic: return "logistic";
    case Family::PCP: return "pcp";
    }
    return "unknown";
}

Family parse_family(const std::string& name) {
    for (Family f : {Family::Tridiag, Family::Lasso, Family::Linf, Family::TV, Family::Logistic, Family::PCP})
        if (name == to_string(f)) return f;
    throw std::invalid_argument("unknown family '" + name + "'");
}

bool Instance::has(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.first == name) return true;
    return false;
}

const Matrix& Instance::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.first == name) return b.second;
    throw std::runtime_error("instance has no block '" + name + "'");
}

Instance generate_instance(const InstanceRecipe& recipe) {
    Instance inst;
    inst.family = recipe.family;
    inst.seed = recipe.seed;
    auto& params = inst.params;
    switch (recipe.family) {
    case Family::Tridiag:
        params["n"] = or_default(recipe.n, 201);
        break;
    case Family::Lasso:
    case Family::Linf:
    case Family::TV: {
        LinearInverseRecipe r = recipe.family == Family::Lasso  ? lasso_defaults()
                                : recipe.family == Family::Linf ? linf_defaults()
                                                                : tv_defaults();
        r.m = or_default(recipe.m, r.m);
        r.n = or_default(recipe.n, r.n);
        r.count = or_default(recipe.count, r.count);
        r.noise_sigma = recipe.noise_sigma;
        r.mu = recipe.mu;
        r.seed = recipe.seed;
        const LinearInverse data = generate_linear_inverse(r);
        params = {{"m", r.m}, {"n", r.n}, {"count", r.count}, {"noise_sigma", r.noise_sigma},
                  {"mu", data.mu}, {"regularizer", to_string(r.reg)}};
        inst.blocks = {{"K", data.K}, {"f", column(data.f)}, {"x_ob", column(data.x_ob)}};
        break;
    }
    case Family::Logistic: {
        LabeledData data;
        if (recipe.dataset.empty()) {
            data = synthetic_logistic(or_default(recipe.m, 500), or_default(recipe.n, 200), recipe.seed);
        } else {
            std::ifstream file(recipe.dataset);
            if (!file) throw std::runtime_error("cannot open dataset '" + recipe.dataset + "'");
            data = parse_libsvm(file, recipe.n);
        }
        if (recipe.standardize) standardize_columns(data.features);
        const double mu = recipe.mu.value_or(1e-2);
        params = {{"m", data.features.rows()}, {"n", data.features.cols()}, {"mu", mu},
                  {"dataset", recipe.dataset}, {"standardize", recipe.standardize}};
        inst.blocks = {{"H", data.features}, {"labels", column(data.labels)}};
        break;
    }
    case Family::PCP: {
        const Index m = or_default(recipe.m, 60);
        const Index n = or_default(recipe.n, 60);
        const PcpData data = synthetic_pcp(m, n, recipe.rank, recipe.sparsity, recipe.seed);
        const double nu = recipe.nu.value_or(0.1);
        const double mu = recipe.mu.value_or(nu / std::sqrt(double(std::max(m, n))));
        params = {{"m", m}, {"n", n}, {"rank", recipe.rank}, {"sparsity", recipe.sparsity}, {"mu", mu}, {"nu", nu}};
        inst.blocks = {{"f", data.f}, {"low_rank", data.low_rank}, {"sparse", data.sparse}};
        break;
    }
    }
    return inst;
}

Problem<double> build_problem(const Instance& inst) {
    switch (inst.family) {
    case Family::Tridiag:
        return make_tridiag_lsq(inst.params.at("n").get<Index>());
    case Family::Lasso:
    case Family::Linf:
    case Family::TV: {
        LinearInverse data;
        data.K = inst.block("K");
        data.f = inst.block("f").col(0);
        data.x_ob = inst.block("x_ob").col(0);
        data.mu = inst.params.at("mu").get<double>();
        data.reg = inst.family == Family::Lasso  ? Regularizer::L1
                   : inst.family == Family::Linf ? Regularizer::Linf
                                                 : Regularizer::TV;
        return make_linear_inverse(data);
    }
    case Family::Logistic:
        return make_logistic(inst.block("H"), inst.block("labels").col(0), inst.params.at("mu").get<double>());
    case Family::PCP:
        return make_pcp(inst.block("f"), inst.params.at("mu").get<double>(), inst.params.at("nu").get<double>());
    }
    throw std::logic_error("build_problem: unknown family");
}

std::optional<Vector> ground_truth(const Instance& inst) {
    if (inst.family == Family::Tridiag) return Vector::Zero(inst.params.at("n").get<Index>());
    if (inst.has("x_ob")) return Vector(inst.block("x_ob").col(0));
    if (inst.has("low_rank")) return as_vector(inst.block("low_rank"));
    return std::nullopt;
}

void write_instance(std::ostream& out, const Instance& inst) {
    nlohmann::json header;
    header["family"] = to_string(inst.family);
    header["seed"] = inst.seed;
    header["params"] = inst.params;
    write_container(out, kFormat, header, inst.blocks);
}

Instance read_instance(std::istream& in) {
    Instance inst;
    const auto header = read_container(in, kFormat, inst.blocks);
    inst.family = parse_family(header.at("family").get<std::string>());
    inst.seed = header.at("seed").get<std::uint64_t>();
    inst.params = header.at("params");
    return inst;
}

void save_instance(const std::string& path, const Instance& inst) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_instance(out, inst);
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_instance(in);
}

void write_reference(std::ostream& out, const Reference& ref) {
    nlohmann::json header;
    header["family"] = to_string(ref.family);
    header["seed"] = ref.seed;
    header["residual"] = ref.residual;
    header["objective"] = ref.objective;
    header["iterations"] = ref.iterations;
    write_container(out, kReferenceFormat, header, {{"x", column(ref.x)}});
}

Reference read_reference(std::istream& in) {
    std::vector<std::pair<std::string, Matrix>> blocks;
    const auto header = read_container(in, kReferenceFormat, blocks);
    if (blocks.size() != 1 || blocks[0].first != "x" || blocks[0].second.cols() != 1)
        throw std::runtime_error("reference file: expected a single column block 'x'");
    Reference ref;
    ref.x = blocks[0].second.col(0);
    ref.family = parse_family(header.at("family").get<std::string>());
    ref.seed = header.at("seed").get<std::uint64_t>();
    ref.residual = header.at("residual").get<double>();
    ref.objective = header.at("objective").get<double>();
    ref.iterations = header.at("iterations").get<long>();
    return ref;
}

void save_reference(const std::string& path, const Reference& ref) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_reference(out, ref);
}

Reference load_reference(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_reference(in);
}

}  // namespace fista
