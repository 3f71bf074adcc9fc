#pragma once

#include "fista/problems.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fista {

enum class Family { Tridiag, Lasso, Linf, TV, Logistic, PCP };

const char* to_string(Family family);
Family parse_family(const std::string& name);

/// Everything needed to regenerate an experiment instance. Zero / unset
/// fields select the family defaults.
struct InstanceRecipe {
    Family family = Family::Tridiag;
    std::uint64_t seed = 0;
    Index m = 0;
    Index n = 0;
    /// Sparsity, saturation or jump count of the planted signal.
    Index count = 0;
    double noise_sigma = 0;
    std::optional<double> mu;
    std::optional<double> nu;
    Index rank = 2;
    double sparsity = 0.05;
    /// LIBSVM file for the logistic family; empty means synthetic data.
    std::string dataset;
    bool standardize = false;
};

/// Materialised instance: named dense blocks plus a JSON parameter record.
struct Instance {
    Family family = Family::Tridiag;
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();
    std::vector<std::pair<std::string, Matrix>> blocks;

    bool has(const std::string& name) const;
    const Matrix& block(const std::string& name) const;
};

Instance generate_instance(const InstanceRecipe& recipe);
Problem<double> build_problem(const Instance& instance);

/// Planted solution carried by the instance, when it has one.
std::optional<Vector> ground_truth(const Instance& instance);

// File layout: one line of JSON header (format, version, family, seed,
// params, blocks[name, rows, cols]) terminated by '\n', then every block in
// header order as column-major little-endian IEEE-754 float64 values.
void write_instance(std::ostream& out, const Instance& instance);
Instance read_instance(std::istream& in);
void save_instance(const std::string& path, const Instance& instance);
Instance load_instance(const std::string& path);

struct Reference {
    Vector x;
    double residual = 0;
    double objective = 0;
    long iterations = 0;
    Family family = Family::Tridiag;
    std::uint64_t seed = 0;
};

void write_reference(std::ostream& out, const Reference& ref);
Reference read_reference(std::istream& in);
void save_reference(const std::string& path, const Reference& ref);
Reference load_reference(const std::string& path);

}  // namespace fista
