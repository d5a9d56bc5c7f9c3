#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cma/chern_prescription.hpp"
#include "cma/estimates.hpp"
#include "cma/expression.hpp"
#include "cma/field_io.hpp"
#include "cma/parallel.hpp"
#include "cma/pointwise_identities.hpp"
#include "cma/random_fields.hpp"

namespace ma_lab {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using cma::Error;
using cma::ErrorCode;

inline const std::vector<std::string> kTasks{"solve", "sweep", "gauduchon", "verify-identities", "prescribe-ricci",
                                              "report"};

enum class MetricKind { flat, conformal, kaehler_perturbation, explicit_file, random };

struct MetricSpec {
    MetricKind kind = MetricKind::flat;
    std::string expression; // h for conformal, f for kaehler_perturbation
    fs::path file;
    double amplitude = 0.2; // random
    int max_freq = 1;
};

struct DataSpec {
    std::string expression;
    fs::path file;
    std::optional<double> random_amplitude;
    bool given() const { return !expression.empty() || !file.empty() || random_amplitude; }
};

struct RunConfig {
    std::string task;
    cma::GridSpec grid;
    MetricSpec metric;
    DataSpec rhs;
    cma::SolverConfig solver;
    std::uint64_t seed = 0;
    fs::path output_dir = "ma_lab_out";
    std::vector<double> scales{0.25, 0.5, 1.0, 1.5, 2.0};
    std::vector<double> alphas = cma::kDefaultAlphas;
    std::vector<double> exponents = cma::kDefaultExponents;
    int instances = 1000;
    double identity_tol = 1e-12;
    int keep_failures = 5;
    DataSpec prescribe_h;
    fs::path psi_file;
    DataSpec ibp_psi;
    std::vector<double> ibp_powers{1.0, 2.0, 3.0};
};

// ---------------------------------------------------------------- config

namespace detail {

[[noreturn]] inline void config_fail(const std::string& field, const std::string& what)
{
    throw Error(ErrorCode::config_error, "field '" + field + "': " + what);
}

/// Typed access to one JSON object; rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            config_fail(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key)
    {
        seen_.insert(key);
        return j_.contains(key);
    }

    double number(const std::string& key, double fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number())
            config_fail(field(key), "expected a number");
        return v.get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer())
            config_fail(field(key), "expected an integer");
        return v.get<std::int64_t>();
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string())
            config_fail(field(key), "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_array() || v.empty())
            config_fail(field(key), "expected a non-empty array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number())
                config_fail(field(key), "expected a non-empty array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    Section child(const std::string& key)
    {
        seen_.insert(key);
        return Section(j_.at(key), field(key));
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                config_fail(field(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

inline void check_expression(const std::string& text, int n, const std::string& field)
{
    try {
        cma::Expression::parse(text, n);
    } catch (const Error& e) {
        config_fail(field, e.detail());
    }
}

inline DataSpec read_data(Section s, const fs::path& base, int n)
{
    DataSpec d;
    d.expression = s.string("expression", "");
    if (s.has("expression"))
        check_expression(d.expression, n, s.field("expression"));
    const std::string file = s.string("file", "");
    if (!file.empty())
        d.file = resolve(base, file);
    if (s.has("random_amplitude"))
        d.random_amplitude = s.number("random_amplitude", 0.0);
    s.finish();
    const int given = !d.expression.empty() + !d.file.empty() + d.random_amplitude.has_value();
    if (given != 1)
        config_fail(s.field("expression"), "give exactly one of 'expression', 'file', 'random_amplitude'");
    return d;
}

inline cma::DiffScheme parse_scheme(const std::string& name, const std::string& field)
{
    if (name == "fourier")
        return cma::DiffScheme::fourier();
    for (int order : {2, 4, 6})
        if (name == "central" + std::to_string(order))
            return cma::DiffScheme::central_difference(order);
    config_fail(field, "unknown scheme '" + name + "' (fourier, central2, central4, central6)");
}

inline void validate_positive(const std::vector<double>& v, const std::string& field)
{
    for (double x : v)
        if (!(x > 0.0))
            config_fail(field, "entries must be positive");
}

} // namespace detail

/// Parses a config document; relative file paths are taken relative to `base`.
inline RunConfig parse_config(const json& doc, const fs::path& base)
{
    using detail::config_fail;
    RunConfig c;
    detail::Section root(doc, "");
    c.task = root.string("task", "");
    c.seed = static_cast<std::uint64_t>(root.integer("seed", 0));
    c.output_dir = detail::resolve(base, root.string("output_dir", "ma_lab_out"));

    if (root.has("grid")) {
        auto g = root.child("grid");
        c.grid.complex_dim = static_cast<int>(g.integer("complex_dim", 2));
        c.grid.points_per_axis = static_cast<int>(g.integer("points_per_axis", 16));
        c.grid.scheme = detail::parse_scheme(g.string("scheme", "fourier"), g.field("scheme"));
        g.finish();
    }
    try {
        c.grid.validate();
    } catch (const Error& e) {
        config_fail("grid", e.detail());
    }

    if (root.has("metric")) {
        auto m = root.child("metric");
        const std::string type = m.string("type", "flat");
        if (type == "flat") {
            c.metric.kind = MetricKind::flat;
        } else if (type == "conformal") {
            c.metric.kind = MetricKind::conformal;
            c.metric.expression = m.string("h", "");
            if (c.metric.expression.empty())
                config_fail(m.field("h"), "conformal metric needs an expression 'h'");
            detail::check_expression(c.metric.expression, c.grid.complex_dim, m.field("h"));
        } else if (type == "kaehler_perturbation") {
            c.metric.kind = MetricKind::kaehler_perturbation;
            c.metric.expression = m.string("f", "");
            if (c.metric.expression.empty())
                config_fail(m.field("f"), "Kaehler perturbation needs an expression 'f'");
            detail::check_expression(c.metric.expression, c.grid.complex_dim, m.field("f"));
        } else if (type == "explicit") {
            c.metric.kind = MetricKind::explicit_file;
            const std::string file = m.string("file", "");
            if (file.empty())
                config_fail(m.field("file"), "explicit metric needs a field file");
            c.metric.file = detail::resolve(base, file);
        } else if (type == "random") {
            c.metric.kind = MetricKind::random;
            c.metric.amplitude = m.number("amplitude", 0.2);
            c.metric.max_freq = static_cast<int>(m.integer("max_freq", 1));
            if (!(c.metric.amplitude >= 0.0 && c.metric.amplitude * c.grid.complex_dim < 1.0))
                config_fail(m.field("amplitude"), "need 0 <= amplitude < 1/complex_dim");
            if (c.metric.max_freq < 1)
                config_fail(m.field("max_freq"), "must be at least 1");
        } else {
            config_fail(m.field("type"), "unknown metric type '" + type +
                                             "' (flat, conformal, kaehler_perturbation, explicit, random)");
        }
        m.finish();
    }

    if (root.has("rhs"))
        c.rhs = detail::read_data(root.child("rhs"), base, c.grid.complex_dim);

    if (root.has("solver")) {
        auto s = root.child("solver");
        auto& v = c.solver;
        v.newton_tol = s.number("newton_tol", v.newton_tol);
        v.max_newton_iters = static_cast<int>(s.integer("max_newton_iters", v.max_newton_iters));
        v.t_step_initial = s.number("t_step_initial", v.t_step_initial);
        v.t_step_min = s.number("t_step_min", v.t_step_min);
        v.damping = s.number("damping", v.damping);
        v.linear_tol = s.number("linear_tol", v.linear_tol);
        v.max_linear_iters = static_cast<int>(s.integer("max_linear_iters", v.max_linear_iters));
        s.finish();
    }
    try {
        c.solver.validate();
    } catch (const Error& e) {
        config_fail("solver", e.detail());
    }

    if (root.has("sweep")) {
        auto s = root.child("sweep");
        c.scales = s.numbers("scales", c.scales);
        c.alphas = s.numbers("alphas", c.alphas);
        c.exponents = s.numbers("exponents", c.exponents);
        s.finish();
        detail::validate_positive(c.alphas, "sweep.alphas");
        detail::validate_positive(c.exponents, "sweep.exponents");
    }

    if (root.has("identities")) {
        auto s = root.child("identities");
        c.instances = static_cast<int>(s.integer("instances", c.instances));
        c.identity_tol = s.number("tolerance", c.identity_tol);
        c.keep_failures = static_cast<int>(s.integer("keep_failures", c.keep_failures));
        s.finish();
        if (c.instances < 1)
            config_fail("identities.instances", "must be positive");
        if (c.keep_failures < 0)
            config_fail("identities.keep_failures", "must be nonnegative");
    }

    if (root.has("prescribe")) {
        auto s = root.child("prescribe");
        if (s.has("h"))
            c.prescribe_h = detail::read_data(s.child("h"), base, c.grid.complex_dim);
        const std::string psi = s.string("psi_file", "");
        if (!psi.empty())
            c.psi_file = detail::resolve(base, psi);
        s.finish();
        if (c.prescribe_h.given() == !c.psi_file.empty())
            config_fail("prescribe", "give exactly one of 'h' and 'psi_file'");
    }

    if (root.has("gauduchon")) {
        auto s = root.child("gauduchon");
        if (s.has("psi"))
            c.ibp_psi = detail::read_data(s.child("psi"), base, c.grid.complex_dim);
        c.ibp_powers = s.numbers("powers", c.ibp_powers);
        s.finish();
        for (double p : c.ibp_powers)
            if (!(p >= 1.0))
                config_fail("gauduchon.powers", "exponents must be at least 1");
    }
    root.finish();
    return c;
}

inline RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::config_error, "cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::config_error, path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

// ---------------------------------------------------------------- problem setup

inline cma::HermitianField build_metric(const RunConfig& c, const cma::GridPtr& grid, std::mt19937_64& rng)
{
    const int n = grid->n();
    switch (c.metric.kind) {
    case MetricKind::flat:
        return cma::HermitianField::identity(grid);
    case MetricKind::conformal:
        return cma::HermitianField::conformal_flat(cma::Expression::parse(c.metric.expression, n).evaluate(grid));
    case MetricKind::kaehler_perturbation: {
        auto g = cma::HermitianField::identity(grid) + cma::ddbar(cma::Expression::parse(c.metric.expression, n).evaluate(grid));
        cma::require_metric(g, "I + ddbar(f)");
        return g;
    }
    case MetricKind::explicit_file: {
        auto g = cma::io::load_hermitian(c.metric.file, grid);
        cma::require_metric(g, c.metric.file.string());
        return g;
    }
    case MetricKind::random:
        return cma::random::smooth_metric(grid, rng, c.metric.amplitude, c.metric.max_freq);
    }
    return cma::HermitianField::identity(grid);
}

inline cma::RealField build_scalar(const DataSpec& d, const cma::GridPtr& grid, std::mt19937_64& rng)
{
    if (!d.expression.empty())
        return cma::Expression::parse(d.expression, grid->n()).evaluate(grid);
    if (!d.file.empty())
        return cma::io::load_real(d.file, grid);
    if (d.random_amplitude)
        return cma::random::smooth_field(grid, rng, *d.random_amplitude);
    return cma::RealField(grid, 0.0);
}

// ---------------------------------------------------------------- JSON helpers

inline json to_json(const cma::SolveResult& r)
{
    json trace = json::array();
    for (const auto& t : r.t_trace)
        trace.push_back({{"t", t.t}, {"newton_iters", t.newton_iters}, {"residual", t.residual}});
    return {{"b", r.b},
            {"residual", r.residual},
            {"min_eigen_gprime", r.min_eigen_gprime},
            {"continuation_steps", r.t_trace.size()},
            {"residual_history", r.residual_history},
            {"t_trace", trace}};
}

inline json pairs_to_json(const std::vector<std::pair<double, double>>& v, const char* key, const char* value)
{
    json out = json::array();
    for (const auto& [k, x] : v)
        out.push_back({{key, k}, {value, x}});
    return out;
}

inline json to_json(const cma::EstimateReport& r)
{
    return {{"sup_tr", r.sup_tr},
            {"osc_phi", r.osc_phi},
            {"R_alpha", pairs_to_json(r.R_alpha, "alpha", "R")},
            {"C1", r.C1},
            {"levelset_measure", r.levelset_measure},
            {"levelset_bound", std::exp(-r.C1) / 4.0},
            {"fitted_A_C", pairs_to_json(r.fitted_A_C, "A", "C")},
            {"L1_phi", r.L1_phi},
            {"Q_max", r.Q_max},
            {"Q_exponent", r.Q_exponent},
            {"b", r.b},
            {"trace_identity_error", r.trace_identity_error},
            {"trace_inequality_excess", r.trace_inequality_excess},
            {"trace_equality_error", r.trace_equality_error}};
}

inline json matrix_json(const cma::PointMatrix& m)
{
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j)
            row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const cma::pointwise::FuzzFailure& f)
{
    json out = {{"check", f.check}, {"n", f.n}, {"slack", f.slack}};
    if (f.g.size() > 0)
        out["g"] = matrix_json(f.g);
    if (f.gp.size() > 0)
        out["gprime"] = matrix_json(f.gp);
    if (!f.lambda.empty())
        out["lambda"] = f.lambda;
    if (!f.dgprime.empty()) {
        json t = json::array();
        for (const auto& m : f.dgprime)
            t.push_back(matrix_json(m));
        out["dgprime"] = t;
    }
    return out;
}

inline json grid_json(const cma::GridSpec& g)
{
    std::string scheme = "fourier";
    if (g.scheme.kind == cma::DiffScheme::Kind::central_difference)
        scheme = "central" + std::to_string(g.scheme.order);
    return {{"complex_dim", g.complex_dim}, {"points_per_axis", g.points_per_axis}, {"scheme", scheme}};
}

inline void write_text(const fs::path& path, const std::string& text) { cma::io::write_atomically(path, text); }

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------- tasks

inline std::string trace_csv(const cma::SolveResult& r)
{
    std::string out = "t,newton_iters,residual\n";
    for (const auto& t : r.t_trace)
        out += cma::detail::fmt(t.t) + "," + std::to_string(t.newton_iters) + "," + cma::detail::fmt(t.residual) + "\n";
    return out;
}

inline void task_solve(const RunConfig& c, const cma::GridPtr& grid, std::mt19937_64& rng, json& summary,
                       bool with_report)
{
    const auto g = build_metric(c, grid, rng);
    const auto F = build_scalar(c.rhs, grid, rng);
    const auto v = cma::gauduchon_weight(g).v;
    const auto result = cma::continuity_solve(g, F, c.solver, &v);
    cma::io::save(c.output_dir / "phi.field", result.phi);
    write_text(c.output_dir / "trace.csv", trace_csv(result));
    summary["sup_abs_F"] = cma::sup_norm(F);
    summary["solve"] = to_json(result);
    summary["b"] = result.b;
    summary["residual"] = result.residual;
    if (with_report) {
        const auto r = cma::report(g, result, F, c.alphas, c.exponents);
        summary["report"] = to_json(r);
        cma::SweepEntry entry;
        entry.s = 1.0;
        entry.report = r;
        write_text(c.output_dir / "report.csv", cma::sweep_summary_csv({entry}, c.alphas, c.exponents));
    }
}

inline void task_sweep(const RunConfig& c, const cma::GridPtr& grid, std::mt19937_64& rng, json& summary)
{
    const auto g = build_metric(c, grid, rng);
    const auto F = build_scalar(c.rhs, grid, rng);
    const auto entries = cma::sweep(g, F, c.scales, c.solver, c.alphas, c.exponents);
    write_text(c.output_dir / "sweep_summary.csv", cma::sweep_summary_csv(entries, c.alphas, c.exponents));
    write_text(c.output_dir / "sweep_long.csv", cma::sweep_long_csv(entries));
    json rows = json::array();
    int failed = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& e : entries) {
        json row = {{"s", e.s}};
        if (e.report) {
            row["status"] = "ok";
            row["report"] = to_json(*e.report);
            const double cA = e.report->C_at(e.report->fitted_A_C.back().first);
            lo = std::min(lo, cA);
            hi = std::max(hi, cA);
        } else {
            ++failed;
            row["status"] = "failed";
            row["error"] = e.error;
        }
        rows.push_back(row);
    }
    summary["sup_abs_F"] = cma::sup_norm(F);
    summary["failed_entries"] = failed;
    if (hi > 0.0)
        summary["C_ratio_largest_exponent"] = hi / lo;
    summary["entries"] = rows;
}

inline void task_gauduchon(const RunConfig& c, const cma::GridPtr& grid, std::mt19937_64& rng, json& summary)
{
    const auto g = build_metric(c, grid, rng);
    const auto res = cma::gauduchon_weight(g);
    cma::io::save(c.output_dir / "v.field", res.v);
    cma::io::save(c.output_dir / "u.field", res.u);
    cma::io::save(c.output_dir / "omega_G.field", res.metric);
    const auto d = cma::defects(g);
    summary["residual"] = res.residual;
    summary["iterations"] = res.iterations;
    summary["min_v"] = cma::min_value(res.v);
    summary["max_v"] = cma::max_value(res.v);
    summary["defects"] = {{"kaehler", d.kaehler_defect}, {"balanced", d.balanced_defect}, {"gauduchon", d.gauduchon_defect}};
    summary["omega_G_gauduchon_defect"] = cma::defects(res.metric).gauduchon_defect;
    if (c.ibp_psi.given()) {
        auto psi = build_scalar(c.ibp_psi, grid, rng);
        const double lo = cma::min_value(psi);
        if (lo < 0.0)
            psi += -lo; // the identity is stated for psi >= 0
        json checks = json::array();
        for (double p : c.ibp_powers) {
            const auto s = cma::gauduchon_integration_by_parts(res.metric, psi, p);
            checks.push_back({{"p", p}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"relative_error", s.relative_error()}});
        }
        summary["integration_by_parts"] = checks;
    }
}

inline void task_identities(const RunConfig& c, json& summary)
{
    const auto r = cma::pointwise::fuzz_identities(c.seed, c.instances, c.identity_tol,
                                                   static_cast<std::size_t>(c.keep_failures));
    summary["instances"] = r.instances;
    summary["tolerance"] = c.identity_tol;
    summary["failures"] = {{"trace_inequality", r.trace_inequality_failures},
                           {"trace_equality", r.trace_equality_failures},
                           {"cs_chain", r.cs_chain_failures},
                           {"total", r.total_failures()}};
    summary["worst"] = {{"trace_slack", r.worst_trace_slack},
                        {"equality_error", r.worst_equality_error},
                        {"cs_slack", r.worst_cs_slack}};
    summary["passed"] = r.total_failures() == 0;
    json dump = json::array();
    for (const auto& f : r.failures)
        dump.push_back(to_json(f));
    write_json(c.output_dir / "identity_failures.json", dump);
}

inline void task_prescribe(const RunConfig& c, const cma::GridPtr& grid, std::mt19937_64& rng, json& summary)
{
    if (grid->n() != 2)
        throw Error(ErrorCode::config_error, "field 'grid.complex_dim': prescribe-ricci needs complex_dim = 2");
    const auto g = build_metric(c, grid, rng);
    cma::HermitianField psi;
    if (!c.psi_file.empty()) {
        psi = cma::io::load_hermitian(c.psi_file, grid);
    } else if (c.prescribe_h.given()) {
        const auto h = build_scalar(c.prescribe_h, grid, rng);
        psi = cma::ricci_form(g) - (1.0 / (2.0 * std::numbers::pi)) * cma::ddbar(h);
    } else {
        throw Error(ErrorCode::config_error, "field 'prescribe': prescribe-ricci needs 'h' or 'psi_file'");
    }
    cma::PrescriptionConfig pc;
    pc.solver = c.solver;
    const auto r = cma::prescribe_ricci(g, psi, pc);
    cma::io::save(c.output_dir / "psi.field", psi);
    cma::io::save(c.output_dir / "f.field", r.f);
    cma::io::save(c.output_dir / "phi.field", r.solve.phi);
    summary["constraint_value"] = r.constraint_value;
    summary["asd_residual"] = r.asd_residual;
    summary["a_norm"] = r.a_norm;
    summary["poisson_border"] = r.poisson_border;
    summary["transgression_error"] = r.transgression_error;
    summary["final_ricci_error"] = r.final_ricci_error;
    summary["b"] = r.solve.b;
    summary["residual"] = r.solve.residual;
    summary["solve"] = to_json(r.solve);
}

inline std::string timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

/**
 * Runs one task. On success writes summary.json last and returns 0. On failure
 * writes error.json (never summary.json) and returns 2 for configuration
 * problems, 1 for everything else. Timing lives in run.log only.
 */
inline int run(const std::string& task, const fs::path& config_path, std::optional<std::uint64_t> seed,
               std::optional<fs::path> out, std::ostream& err)
{
    fs::path out_dir = out.value_or(fs::path{});
    json error;
    int status = 0;
    try {
        if (std::find(kTasks.begin(), kTasks.end(), task) == kTasks.end())
            throw Error(ErrorCode::config_error, "unknown task '" + task + "'");
        RunConfig c = load_config(config_path);
        if (!c.task.empty() && c.task != task)
            throw Error(ErrorCode::config_error, "field 'task': config is for '" + c.task + "', not '" + task + "'");
        c.task = task;
        if (seed)
            c.seed = *seed;
        if (out)
            c.output_dir = *out;
        out_dir = c.output_dir;
        fs::create_directories(out_dir);
        fs::remove(out_dir / "summary.json");
        fs::remove(out_dir / "error.json");

        const auto started = std::chrono::steady_clock::now();
        const std::string started_at = timestamp();
        const auto grid = cma::Grid::create(c.grid);
        std::mt19937_64 rng(c.seed);
        json summary = {{"task", task}, {"status", "ok"}, {"seed", c.seed}, {"grid", grid_json(c.grid)}};
        if (task == "solve")
            task_solve(c, grid, rng, summary, false);
        else if (task == "report")
            task_solve(c, grid, rng, summary, true);
        else if (task == "sweep")
            task_sweep(c, grid, rng, summary);
        else if (task == "gauduchon")
            task_gauduchon(c, grid, rng, summary);
        else if (task == "verify-identities")
            task_identities(c, summary);
        else
            task_prescribe(c, grid, rng, summary);

        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        std::ostringstream log;
        log << "task " << task << "\nstarted " << started_at << "\nfinished " << timestamp() << "\nseconds " << seconds
            << "\nthreads " << cma::configure_threads_from_env() << "\n";
        write_text(out_dir / "run.log", log.str());
        write_json(out_dir / "summary.json", summary);
        return 0;
    } catch (const Error& e) {
        error = {{"status", "error"}, {"code", std::string(cma::to_string(e.code()))}, {"message", e.detail()}};
        status = e.code() == ErrorCode::config_error ? 2 : 1;
    } catch (const std::exception& e) {
        error = {{"status", "error"}, {"code", "internal"}, {"message", e.what()}};
        status = 1;
    }
    error["task"] = task;
    err << error.dump() << "\n";
    if (!out_dir.empty()) {
        try {
            fs::create_directories(out_dir);
            write_json(out_dir / "error.json", error);
        } catch (const std::exception&) {
            // stderr already has it
        }
    }
    return status;
}

} // namespace ma_lab
