#include "cli.hpp"

#include "fista/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace fista::cli {

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_number(const std::string& token, const std::string& context) {
    double v = 0;
    std::size_t used = 0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != token.size())
        throw std::invalid_argument("bad number '" + token + "' in " + context);
    return v;
}

void expect_params(const VariantSpec& v, std::size_t lo, std::size_t hi) {
    if (v.params.size() < lo || v.params.size() > hi)
        throw std::invalid_argument("variant '" + v.text + "': wrong number of parameters");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string key_of(const std::string& token) {
    if (token.rfind("--", 0) != 0) return "";
    const auto eq = token.find('=');
    return token.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
}

struct InstanceOptions {
    std::string path;
    std::string family;
    std::uint64_t seed = 0;
    long m = 0;
    long n = 0;
    long count = 0;
    double noise = 0;
    double mu = kUnset;
    double nu = kUnset;
    long rank = 2;
    double sparsity = 0.05;
    std::string dataset;
    bool standardize = false;

    void add(CLI::App* app) {
        app->add_option("--instance", path, "Instance file written by the 'instance' command");
        app->add_option("--family", family, "tridiag | lasso | linf | tv | logistic | pcp");
        app->add_option("--seed", seed, "Instance seed");
        app->add_option("--m", m, "Rows / samples (0 = family default)");
        app->add_option("--n", n, "Unknowns / features (0 = family default)");
        app->add_option("--count", count, "Non-zeros, saturated entries or jumps (0 = default)");
        app->add_option("--noise", noise, "Observation noise standard deviation");
        app->add_option("--mu", mu, "Regularisation weight (default per family)");
        app->add_option("--nu", nu, "Nuclear-norm weight (pcp)");
        app->add_option("--rank", rank, "Rank of the low-rank part (pcp)");
        app->add_option("--sparsity", sparsity, "Fraction of sparse entries (pcp)");
        app->add_option("--dataset", dataset, "LIBSVM file for the logistic family");
        app->add_flag("--standardize", standardize, "Standardise feature columns (logistic)");
    }

    InstanceRecipe recipe(const std::string& fam) const {
        InstanceRecipe r;
        r.family = parse_family(fam);
        r.seed = seed;
        r.m = m;
        r.n = n;
        r.count = count;
        r.noise_sigma = noise;
        if (!std::isnan(mu)) r.mu = mu;
        if (!std::isnan(nu)) r.nu = nu;
        r.rank = rank;
        r.sparsity = sparsity;
        r.dataset = dataset;
        r.standardize = standardize;
        return r;
    }

    Instance resolve() const {
        if (!path.empty() && !family.empty())
            throw std::invalid_argument("give either --instance or --family, not both");
        if (path.empty() && family.empty()) throw std::invalid_argument("one of --instance or --family is required");
        if (!path.empty()) return load_instance(path);
        return generate_instance(recipe(family));
    }
};

struct RunOptions {
    std::string variant = "bt";
    long max_iters = 1000;
    double tol = 0;
    long stride = 0;
    std::string x0 = "zeros";
    double x0_scale = 1;
    std::string reference;

    void add(CLI::App* app) {
        app->add_option("--variant", variant, "bt | restart | cd:d | mod:p,q,r | alpha:p,q[,alpha] | "
                                              "rada1:xi[,p,q] | rada2:xi[,p,q] | greedy:gamma,S,xi | apg:sigma,tau");
        app->add_option("--max-iters", max_iters, "Iteration budget");
        app->add_option("--tol", tol, "Stop when ||x_k - x_{k-1}|| <= tol");
        app->add_option("--stride", stride, "Record every n-th iterate (0 = 1 up to 1e4, then 100)");
        app->add_option("--x0", x0, "Starting point: zeros | ones | unit (ones / sqrt(n))");
        app->add_option("--x0-scale", x0_scale, "Multiplier applied to the starting point");
        app->add_option("--reference", reference, "Reference solution file for the dist_to_ref column");
    }

    SolverConfig<double> config(const Problem<double>& problem) const {
        if (max_iters < 1) throw std::invalid_argument("--max-iters must be positive");
        if (tol < 0) throw std::invalid_argument("--tol must be non-negative");
        if (stride < 0) throw std::invalid_argument("--stride must be non-negative");
        SolverConfig<double> cfg;
        cfg.max_iters = max_iters;
        cfg.tol_residual = tol;
        cfg.trace_stride = stride;
        const Index n = problem.dimension;
        if (x0 == "zeros") cfg.initial_point = Vector::Zero(n);
        else if (x0 == "ones") cfg.initial_point = Vector::Ones(n);
        else if (x0 == "unit") cfg.initial_point = Vector::Ones(n) / std::sqrt(double(n));
        else throw std::invalid_argument("--x0 must be zeros, ones or unit");
        cfg.initial_point *= x0_scale;
        if (!reference.empty()) {
            Reference ref = load_reference(reference);
            require_dimension(ref.x.size(), n, "reference");
            cfg.reference = ref.x;
        }
        return cfg;
    }
};

std::ostream* open_or(const std::string& path, std::ofstream& file, std::ostream& fallback) {
    if (path.empty() || path == "-") return &fallback;
    file.open(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write '" + path + "'");
    return &file;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
    return out;
}

std::optional<long> first_hit(const RunTrace<double>& trace, double threshold) {
    for (const auto& row : trace.rows)
        if (row.dist_to_ref && *row.dist_to_ref <= threshold) return row.k;
    return std::nullopt;
}

std::vector<double> read_numbers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<double> out;
    std::string token;
    while (in >> token) out.push_back(to_number(token, path));
    return out;
}

int cmd_solve(const InstanceOptions& io, const RunOptions& ro, const std::string& output, const std::string& summary,
              std::ostream& out, std::ostream& err) {
    const Instance inst = io.resolve();
    const Problem<double> problem = build_problem(inst);
    const VariantSpec spec = parse_variant(ro.variant);
    SolverSetup setup = make_setup(spec, problem);
    SolverConfig<double> cfg = ro.config(problem);
    cfg.step = setup.step;

    const auto start = std::chrono::steady_clock::now();
    const RunTrace<double> trace = run(problem, setup.rule, setup.policy, cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ofstream csv_file;
    std::ostream* csv = open_or(output, csv_file, out);
    write_trace_csv(*csv, trace);

    std::ofstream json_file;
    std::ostream& json_fallback = (csv == &out) ? err : out;
    std::ostream* js = open_or(summary, json_file, json_fallback);
    *js << summary_json(trace, problem, inst.seed, ro.variant).dump() << '\n';
    err << "wall_time_s=" << wall << '\n';
    if (trace.ended_above_inverse_lipschitz) err << "warning: run ended with gamma > 1/L\n";
    if (trace.stop == StopReason::NumericalFault) {
        err << "numerical fault: " << trace.fault_message << '\n';
        return 2;
    }
    return 0;
}

int cmd_reference(const InstanceOptions& io, double tol, long max_iters, const std::string& output,
                  std::ostream& out, std::ostream& err) {
    if (output.empty()) throw std::invalid_argument("--output is required");
    const Instance inst = io.resolve();
    const Problem<double> problem = build_problem(inst);
    const RunTrace<double> trace = reference_run(problem, tol, max_iters);
    if (trace.stop == StopReason::NumericalFault) {
        err << "numerical fault: " << trace.fault_message << '\n';
        return 2;
    }
    if (trace.stop != StopReason::Converged) {
        err << "reference did not reach residual " << tol << " within " << max_iters
            << " iterations (residual " << trace.final_residual << ")\n";
        return 2;
    }
    Reference ref;
    ref.x = trace.final_point;
    ref.residual = trace.final_residual;
    ref.objective = objective(problem, ref.x);
    ref.iterations = trace.iterations;
    ref.family = inst.family;
    ref.seed = inst.seed;
    save_reference(output, ref);
    out << nlohmann::json{{"iterations", ref.iterations}, {"residual", ref.residual}, {"objective", ref.objective}}.dump()
        << '\n';
    return 0;
}

int cmd_instance(const InstanceOptions& io, const std::string& output, std::ostream& out) {
    if (output.empty()) throw std::invalid_argument("--output is required");
    const Instance inst = io.resolve();
    save_instance(output, inst);
    nlohmann::json info = inst.params;
    info["family"] = to_string(inst.family);
    info["seed"] = inst.seed;
    out << info.dump() << '\n';
    return 0;
}

struct SpectralOptions {
    long n = 201;
    std::string eigs;
    std::vector<double> ds{2, 20};
    long k = 1000000;
    long points = 61;
    std::vector<double> tols{-2, -3, -4, -5, -6, -7, -8, -9, -10};
    double shift = 0;
    double eps = kUnset;
};

int cmd_spectral(const SpectralOptions& so, const std::string& output, const std::string& summary,
                 std::ostream& out, std::ostream& err) {
    if (so.k < 1) throw std::invalid_argument("--k must be >= 1");
    if (so.points < 2) throw std::invalid_argument("--points must be >= 2");
    if (so.ds.empty()) throw std::invalid_argument("at least one --d is required");
    for (double d : so.ds)
        if (!(d >= 2)) throw std::invalid_argument("--d must be >= 2");
    const SpectralModel<double> model = so.eigs.empty() ? tridiag_spectrum<double>(so.n)
                                                        : SpectralModel<double>::from_eigenvalues(read_numbers(so.eigs));

    std::set<long> kset{1, so.k};
    const double top = std::log10(double(so.k));
    for (long i = 0; i < so.points; ++i) kset.insert(std::max(1L, std::lround(std::pow(10.0, top * double(i) / double(so.points - 1)))));
    const std::vector<long> ks(kset.begin(), kset.end());

    std::vector<std::vector<double>> logs;
    for (double d : so.ds) logs.push_back(log_envelope_path(d, ks, model));

    std::ofstream csv_file;
    std::ostream* csv = open_or(output, csv_file, out);
    *csv << "k";
    for (double d : so.ds) *csv << ",E_d" << fmt(d) << ",logE_d" << fmt(d);
    const bool pair = so.ds.size() == 2;
    if (pair) *csv << ",ratio";
    *csv << '\n';
    for (std::size_t i = 0; i < ks.size(); ++i) {
        *csv << ks[i];
        for (const auto& col : logs) *csv << ',' << fmt(std::exp(col[i])) << ',' << fmt(col[i]);
        if (pair) *csv << ',' << fmt(std::exp(logs[0][i] - logs[1][i]));
        *csv << '\n';
    }

    const double d_fast = *std::min_element(so.ds.begin(), so.ds.end());
    const double d_slow = *std::max_element(so.ds.begin(), so.ds.end());
    nlohmann::json js;
    js["L"] = model.lipschitz;
    js["alpha"] = model.alpha;
    js["C"] = model.condition;
    js["a_star"] = model.a_star;
    js["rho_star"] = model.rho_star;
    js["eta"] = model.eta;
    js["k"] = so.k;
    auto keq = nlohmann::json::object();
    for (double d : so.ds) keq[fmt(d)] = k_eq(d, model.a_star);
    js["K_eq"] = keq;
    if (d_slow > d_fast) {
        const auto approx = ratio_approx(model.condition, so.k, d_slow);
        js["R_k_approx"] = approx.value;
        js["R_k_approx_valid"] = approx.valid;
        js["R_k_exact"] = ratio_exact(model.condition, so.k, d_slow, d_fast);
        const auto fast = std::min_element(so.ds.begin(), so.ds.end()) - so.ds.begin();
        const auto slow = std::max_element(so.ds.begin(), so.ds.end()) - so.ds.begin();
        js["envelope_ratio"] = std::exp(logs[fast].back() - logs[slow].back());
    }
    auto dstar = nlohmann::json::array();
    for (double t : so.tols) dstar.push_back({{"tol", t}, {"d_star", optimal_d_fit(t, so.shift)}});
    js["d_star"] = dstar;
    if (!std::isnan(so.eps)) {
        const auto damping = optimal_damping(model.alpha / model.lipschitz, so.eps);
        js["omega"] = damping.omega;
        js["omega_d"] = damping.d;
    }
    std::ofstream json_file;
    std::ostream* jout = open_or(summary, json_file, csv == &out ? err : out);
    *jout << js.dump() << '\n';
    return 0;
}

struct BenchCell {
    std::size_t instance;
    std::string variant;
    nlohmann::json result;
    std::string error;
};

int cmd_bench(const InstanceOptions& io, const RunOptions& ro, const std::vector<std::string>& families,
              const std::vector<std::string>& variants, int jobs, const std::string& out_dir, double hit,
              double ref_tol, std::ostream& out, std::ostream& err) {
    if (families.empty() || variants.empty()) throw std::invalid_argument("bench needs --families and --variants");
    if (jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
    for (const auto& v : variants) parse_variant(v);
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    std::vector<Instance> instances;
    std::vector<Problem<double>> problems;
    std::vector<std::optional<Vector>> refs;
    for (const auto& fam : families) {
        instances.push_back(generate_instance(io.recipe(fam)));
        problems.push_back(build_problem(instances.back()));
        if (!std::isnan(hit)) {
            const auto ref = reference_run(problems.back(), ref_tol, 1000000);
            if (ref.stop != StopReason::Converged) throw NumericalFault("bench: reference run did not converge", ref.iterations);
            refs.emplace_back(ref.final_point);
        } else {
            refs.emplace_back(std::nullopt);
        }
    }

    std::vector<BenchCell> cells;
    for (std::size_t i = 0; i < instances.size(); ++i)
        for (const auto& v : variants) cells.push_back({i, v, {}, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < cells.size(); c = next++) {
            BenchCell& cell = cells[c];
            try {
                const Problem<double>& problem = problems[cell.instance];
                SolverSetup setup = make_setup(parse_variant(cell.variant), problem);
                RunOptions local = ro;
                local.reference.clear();
                SolverConfig<double> cfg = local.config(problem);
                cfg.step = setup.step;
                if (refs[cell.instance]) cfg.reference = refs[cell.instance];
                const RunTrace<double> trace = run(problem, setup.rule, setup.policy, cfg);
                cell.result = summary_json(trace, problem, instances[cell.instance].seed, cell.variant);
                if (!std::isnan(hit)) {
                    const auto k = first_hit(trace, hit);
                    cell.result["hit_iteration"] = k ? nlohmann::json(*k) : nlohmann::json(nullptr);
                }
                if (!out_dir.empty()) {
                    const std::string stem = out_dir + "/" + families[cell.instance] + "__" + sanitize(cell.variant);
                    std::ofstream csv(stem + ".csv", std::ios::binary);
                    write_trace_csv(csv, trace);
                    std::ofstream js(stem + ".json", std::ios::binary);
                    js << cell.result.dump() << '\n';
                }
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int status = 0;
    out << "family,variant,iterations,restarts,final_residual,stop_reason" << (std::isnan(hit) ? "" : ",hit_iteration")
        << '\n';
    for (const auto& cell : cells) {
        if (!cell.error.empty()) {
            err << families[cell.instance] << " / " << cell.variant << ": " << cell.error << '\n';
            status = std::max(status, 1);
            continue;
        }
        const auto& r = cell.result;
        out << families[cell.instance] << ",\"" << cell.variant << "\"," << r["iterations"].get<long>() << ','
            << r["restarts"].get<long>() << ',' << fmt(r["final_residual"].get<double>()) << ','
            << r["stop_reason"].get<std::string>();
        if (!std::isnan(hit)) {
            out << ',';
            if (!r["hit_iteration"].is_null()) out << r["hit_iteration"].get<long>();
        }
        out << '\n';
        if (r["stop_reason"] == to_string(StopReason::NumericalFault)) status = 2;
    }
    return status;
}

}  // namespace

VariantSpec parse_variant(const std::string& text) {
    VariantSpec v;
    v.text = text;
    const auto colon = text.find(':');
    v.name = text.substr(0, colon);
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        bool first = true;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (first && item == "auto" && (v.name == "rada1" || v.name == "rada2")) {
                v.auto_xi = true;
                v.params.push_back(0.96);
            } else {
                v.params.push_back(to_number(item, "variant '" + text + "'"));
            }
            first = false;
        }
    }
    if (v.name == "bt" || v.name == "restart") expect_params(v, 0, 0);
    else if (v.name == "cd") expect_params(v, 1, 1);
    else if (v.name == "mod") expect_params(v, 3, 3);
    else if (v.name == "alpha") expect_params(v, 2, 3);
    else if (v.name == "rada1" || v.name == "rada2") expect_params(v, 1, 3);
    else if (v.name == "greedy") expect_params(v, 3, 3);
    else if (v.name == "apg") expect_params(v, 2, 2);
    else throw std::invalid_argument("unknown variant '" + text + "'");
    if ((v.name == "rada1" || v.name == "rada2") && v.params.size() == 2)
        throw std::invalid_argument("variant '" + text + "': give both p and q");
    return v;
}

SolverSetup make_setup(const VariantSpec& v, const Problem<double>& problem) {
    using Rule = InertialRule<double>;
    const auto& p = v.params;
    const double inv_l = 1.0 / problem.lipschitz;
    if (v.name == "bt") return {Rule::beck_teboulle(), NoRestart{}, std::nullopt};
    if (v.name == "restart") return {Rule::beck_teboulle(), MomentumRestart{}, std::nullopt};
    if (v.name == "cd") return {Rule::chambolle_dossal(p[0]), NoRestart{}, std::nullopt};
    if (v.name == "mod") return {Rule::modified(p[0], p[1], p[2]), NoRestart{}, std::nullopt};
    if (v.name == "alpha") {
        const double alpha = p.size() == 3 ? p[2] : problem.strong_convexity;
        return {Rule::modified(p[0], p[1], optimal_r(alpha, inv_l, p[0], p[1])), NoRestart{}, std::nullopt};
    }
    if (v.name == "rada1" || v.name == "rada2") {
        const double pp = p.size() == 3 ? p[1] : 1.0;
        const double qq = p.size() == 3 ? p[2] : 1.0;
        AdaptiveRestart<double> policy{p[0], v.name == "rada2", v.auto_xi, 50};
        return {Rule::modified(pp, qq, 4.0), policy, std::nullopt};
    }
    if (v.name == "greedy") return {Rule::constant(1.0), GreedyRestart<double>{p[1], p[2]}, p[0] * inv_l};
    if (v.name == "apg") return {Rule::nesterov(p[0], p[1]), NoRestart{}, std::nullopt};
    throw std::invalid_argument("unknown variant '" + v.text + "'");
}

RunTrace<double> reference_run(const Problem<double>& problem, double tol, long max_iters) {
    SolverConfig<double> cfg;
    cfg.max_iters = max_iters;
    cfg.tol_residual = tol;
    cfg.trace_stride = std::numeric_limits<long>::max();
    cfg.step = 1.3 / problem.lipschitz;
    return run(problem, InertialRule<double>::constant(1.0), RestartPolicy<double>{GreedyRestart<double>{1.0, 0.96}},
               cfg);
}

std::vector<std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": empty key");
        if (value == "true") tokens.push_back("--" + key);
        else if (value == "false") continue;
        else tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> rest;
    std::string config;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw std::invalid_argument("--config needs a file");
            config = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (config.empty()) return rest;
    std::set<std::string> given;
    for (const auto& a : rest)
        if (auto k = key_of(a); !k.empty()) given.insert(k);
    std::vector<std::string> out;
    if (!rest.empty()) out.push_back(rest.front());
    for (const auto& t : read_config_file(config))
        if (!given.count(key_of(t))) out.push_back(t);
    out.insert(out.end(), rest.begin() + (rest.empty() ? 0 : 1), rest.end());
    return out;
}

void write_trace_csv(std::ostream& out, const RunTrace<double>& trace) {
    const bool with_ref = !trace.rows.empty() && trace.rows.front().dist_to_ref.has_value();
    out << "k,residual,obj,a_k,t_k,gamma,restarted" << (with_ref ? ",dist_to_ref" : "") << '\n';
    for (const auto& r : trace.rows) {
        out << r.k << ',' << fmt(r.residual) << ',' << fmt(r.objective) << ',' << fmt(r.a) << ',' << fmt(r.t) << ','
            << fmt(r.gamma) << ',' << (r.restarted ? 1 : 0);
        if (with_ref) out << ',' << fmt(r.dist_to_ref.value_or(kUnset));
        out << '\n';
    }
}

nlohmann::json summary_json(const RunTrace<double>& trace, const Problem<double>& problem, std::uint64_t seed,
                            const std::string& preset) {
    double final_obj = kUnset;
    if (trace.final_point.size() == problem.dimension && trace.final_point.allFinite())
        final_obj = objective(problem, trace.final_point);
    nlohmann::json js;
    js["iterations"] = trace.iterations;
    js["restarts"] = trace.restarts;
    js["final_residual"] = trace.final_residual;
    js["final_obj"] = final_obj;
    js["seed"] = seed;
    js["preset"] = preset;
    js["gamma_final"] = trace.final_gamma;
    js["stop_reason"] = to_string(trace.stop);
    return js;
}

int run_cli(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    try {
        args = expand_config(raw);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    CLI::App app{"Accelerated proximal-gradient solvers, restart schemes and spectral analysis", "fista"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::function<int()> action;
    InstanceOptions io;
    RunOptions ro;
    std::string output;
    std::string summary;

    auto* solve = app.add_subcommand("solve", "Run one solver variant and write a CSV trace");
    io.add(solve);
    ro.add(solve);
    solve->add_option("--output", output, "CSV trace path (default stdout)");
    solve->add_option("--summary", summary, "JSON summary path");
    solve->callback([&] { action = [&] { return cmd_solve(io, ro, output, summary, out, err); }; });

    SpectralOptions so;
    auto* spectral = app.add_subcommand("spectral", "Envelopes and spectral scalars of a quadratic model");
    spectral->add_option("--n", so.n, "Size of the tridiagonal model");
    spectral->add_option("--eigs", so.eigs, "File of Hessian eigenvalues (overrides --n)");
    spectral->add_option("--d", so.ds, "FISTA-CD parameter(s)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');
    spectral->add_option("--k", so.k, "Largest iteration");
    spectral->add_option("--points", so.points, "Log-spaced sample count");
    spectral->add_option("--tols", so.tols, "log10 targets for the fitted d*")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->delimiter(',');
    spectral->add_option("--shift", so.shift, "Shift s of the fitted law");
    spectral->add_option("--eps", so.eps, "Tolerance for the optimal damping");
    spectral->add_option("--output", output, "CSV path (default stdout)");
    spectral->add_option("--summary", summary, "JSON summary path");
    spectral->callback([&] { action = [&] { return cmd_spectral(so, output, summary, out, err); }; });

    double ref_tol = 1e-13;
    long ref_iters = 1000000;
    auto* reference = app.add_subcommand("reference", "High-accuracy minimiser by greedy FISTA");
    io.add(reference);
    reference->add_option("--tol", ref_tol, "Residual tolerance");
    reference->add_option("--max-iters", ref_iters, "Iteration budget");
    reference->add_option("--output", output, "Reference file path")->required();
    reference->callback([&] { action = [&] { return cmd_reference(io, ref_tol, ref_iters, output, out, err); }; });

    auto* instance = app.add_subcommand("instance", "Generate an instance and save it");
    io.add(instance);
    instance->add_option("--output", output, "Instance file path")->required();
    instance->callback([&] { action = [&] { return cmd_instance(io, output, out); }; });

    std::vector<std::string> families;
    std::vector<std::string> variants;
    int jobs = 1;
    std::string out_dir;
    double hit = kUnset;
    double bench_ref_tol = 1e-13;
    auto* bench = app.add_subcommand("bench", "Run a families x variants matrix");
    InstanceOptions bench_io;
    bench_io.add(bench);
    ro.add(bench);
    bench->add_option("--families", families, "Instance families")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->delimiter(',');
    bench->add_option("--variants", variants, "Solver presets (repeat the flag)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    bench->add_option("--jobs", jobs, "Parallel cells");
    bench->add_option("--out-dir", out_dir, "Directory for per-cell CSV and JSON");
    bench->add_option("--hit", hit, "Report the first k with ||x_k - x*|| <= hit (computes references)");
    bench->add_option("--reference-tol", bench_ref_tol, "Residual tolerance of the reference runs");
    bench->callback([&] {
        action = [&] {
            return cmd_bench(bench_io, ro, families, variants, jobs, out_dir, hit, bench_ref_tol, out, err);
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        return action ? action() : 1;
    } catch (const NumericalFault& e) {
        err << "numerical fault: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace fista::cli
