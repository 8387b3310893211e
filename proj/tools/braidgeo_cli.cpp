// Command line driver: checks geometry files against the exact identity
// suites, solves for the Levi-Civita connection, and evaluates expressions in
// the deformed algebra.  All reports are canonical JSON on stdout; timing
// lines go to stderr so identical inputs give byte-identical reports.

#include <chrono>
#include <cstdint>
#include <iostream>

#include <braidgeo/report.hpp>

#include <CLI11.hpp>

namespace {

using namespace braidgeo;

class PhaseTimer {
public:
    explicit PhaseTimer(const char* name) : name_(name), start_(std::chrono::steady_clock::now()) {}
    ~PhaseTimer() {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_);
        std::cerr << "# timing: " << name_ << " " << ms.count() << " ms\n";
    }

private:
    const char* name_;
    std::chrono::steady_clock::time_point start_;
};

void print_warnings(const Geometry& geo) {
    for (const auto& w : geo.warnings) std::cerr << "warning: " << w << "\n";
}

Json cartan_suite_json(const ModuleContext& ctx, int samples, std::uint64_t seed, bool& ok) {
    PhaseTimer timer("cartan suite");
    CartanReport rep = cartan_suite(ctx, samples, seed);
    ok = ok && rep.all_zero();
    Json out = Json::object();
    out["samples"] = rep.samples;
    Json rel = Json::object();
    for (const auto& [name, checked] : rep.checked) {
        Json r = Json::object();
        r["checked"] = checked;
        auto it = rep.failed.find(name);
        r["nonzero"] = it == rep.failed.end() ? 0 : it->second;
        rel[name] = std::move(r);
    }
    out["relations"] = std::move(rel);
    return out;
}

Json connection_checks_json(const ModuleContext& ctx, const Connection& c, int samples, std::uint64_t seed,
                            bool& ok) {
    Json out = Json::object();
    auto rng = sampling::make_rng(seed);

    int nonzero = 0;
    for (int s = 0; s < samples; ++s) {
        TensorField u = sampling::random_tensor_field(rng, ctx, 0, 1);
        TensorField v = sampling::random_tensor_field(rng, ctx, 0, 1);
        TensorField sigma = sampling::random_tensor_field(rng, ctx, 1, 1);
        if (!cartan_relation_residual(ctx, c, u, v, sigma).is_zero()) ++nonzero;
    }
    out["cartan_relation"] = Json{{"samples", samples}, {"nonzero", nonzero}};
    ok = ok && nonzero == 0;

    CurvatureData data = curvature_sq(ctx, c);
    int mismatches = 0;
    for (int i = 1; i <= ctx.rank(); ++i)
        for (int j = 1; j <= ctx.rank(); ++j)
            for (int k = 1; k <= ctx.rank(); ++k) {
                TensorField lhs = ctx.zero_field(0, 1);
                for (int l = 1; l <= ctx.rank(); ++l) {
                    const AlgebraElement& co =
                        data.coeff[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1]
                                  [static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(l) - 1];
                    if (!co.is_zero()) lhs.add_term({vec_leg(l)}, co);
                }
                TensorField rhs =
                    curvature_comm(ctx, c, ctx.basis_vector(i), ctx.basis_vector(j), ctx.basis_vector(k));
                if (!(lhs == rhs)) ++mismatches;
            }
    out["curvature_equivalence"] =
        Json{{"tuples", ctx.rank() * ctx.rank() * ctx.rank()}, {"nonzero", mismatches}};
    ok = ok && mismatches == 0;

    // torsion() cross-checks the canonical-element extraction against the
    // pointwise formula internally and throws on any disagreement.
    torsion(ctx, c);
    out["torsion_consistency"] = "ok";

    StructureReport srep = cartan_structure_check(ctx, c);
    int snz = 0;
    for (const auto& t : srep.torsion_eq) snz += t.is_zero() ? 0 : 1;
    for (const auto& t : srep.curvature_eq) snz += t.is_zero() ? 0 : 1;
    out["structure_equations"] =
        Json{{"entries", static_cast<int>(srep.torsion_eq.size() + srep.curvature_eq.size())}, {"nonzero", snz}};
    ok = ok && snz == 0;

    BianchiReport brep = bianchi_check(ctx, c);
    int bnz = 0;
    for (const auto& t : brep.curvature_eq) bnz += t.is_zero() ? 0 : 1;
    for (const auto& t : brep.torsion_eq) bnz += t.is_zero() ? 0 : 1;
    out["bianchi"] =
        Json{{"entries", static_cast<int>(brep.curvature_eq.size() + brep.torsion_eq.size())}, {"nonzero", bnz}};
    ok = ok && bnz == 0;

    return out;
}

Json koszul_identity_json(const ModuleContext& ctx, const Metric& m, const Connection& c, int samples,
                          std::uint64_t seed, bool& ok) {
    auto rng = sampling::make_rng(seed);
    int nonzero = 0;
    for (int s = 0; s < samples; ++s) {
        TensorField u = sampling::random_tensor_field(rng, ctx, 0, 1);
        TensorField v = sampling::random_tensor_field(rng, ctx, 0, 1);
        TensorField z = sampling::random_tensor_field(rng, ctx, 0, 1);
        AlgebraElement lhs = ctx.zero_elem();
        for (const auto& [words, w] : ctx.alg.R_inv.terms) {
            TensorField v2 = word_symmetry_act(ctx, words[0], v);
            if (v2.is_zero()) continue;
            TensorField u2 = word_symmetry_act(ctx, words[1], u);
            if (u2.is_zero()) continue;
            lhs += pair(ctx, tensor(ctx, v2, cov_deriv(ctx, c, u2, z)), m.g).as_scalar().scaled(w);
        }
        if (!(lhs.scaled(GaussianRational(2)) == koszul(ctx, m, u, v, z))) ++nonzero;
    }
    if (nonzero != 0) ok = false;
    return Json{{"samples", samples}, {"nonzero", nonzero}};
}

/// Solves for the Levi-Civita connection and emits its full coefficient and
/// residual tables into the report.
bool riemann_tables(const Geometry& geo, Json& report, Json& suite, int samples, std::uint64_t seed) {
    const ModuleContext& ctx = geo.ctx;
    bool ok = true;

    PhaseTimer timer("levi-civita solve");
    LCResult lc = levi_civita(ctx, geo.metric);
    ok = ok && lc.ok();

    suite["levi_civita"] = Json::object();
    Json& sect = suite["levi_civita"];
    bool torsion_zero = true;
    for (const auto& bi : lc.torsion_data.coeff)
        for (const auto& bj : bi)
            for (const auto& co : bj) torsion_zero = torsion_zero && co.is_zero();
    sect["torsion_residual_zero"] = torsion_zero;
    sect["metric_compatibility_residual"] = print_field(lc.metric_residual);
    sect["koszul_identity"] = koszul_identity_json(ctx, geo.metric, lc.connection, samples, seed, ok);

    bool conn_ok = true;
    suite["levi_civita_connection"] = connection_checks_json(ctx, lc.connection, samples, seed, conn_ok);
    ok = ok && conn_ok;

    report["metric"] = metric_json(ctx, geo.metric);
    report["christoffel"] = christoffel_json(ctx, lc.connection);
    report["curvature"] = curvature_json(ctx, curvature_sq(ctx, lc.connection));
    report["torsion"] = torsion_json(ctx, lc.torsion_data);
    report["structure_residuals"] = structure_json(ctx, cartan_structure_check(ctx, lc.connection));
    report["bianchi_residuals"] = bianchi_json(ctx, bianchi_check(ctx, lc.connection));
    auto ric = ricci(ctx, lc.connection);
    report["ricci"] = ricci_json(ctx, ric);
    report["einstein"] = einstein_json(einstein_check(ctx, geo.metric, ric));
    return ok;
}

int run_check(const std::string& path, const std::string& suite_name, std::optional<std::uint64_t> seed_arg) {
    Geometry geo = load_geometry(path);
    print_warnings(geo);
    const std::uint64_t seed = seed_arg.value_or(geo.suite.seed);
    const int samples = geo.suite.samples;
    bool ok = true;

    Json report = Json::object();
    report["geometry"] = geo.name;
    report["order"] = geo.order;
    report["seed"] = seed;
    report["samples"] = samples;
    report["spec_hash"] = source_hash(geo.source_text);
    Json suites = Json::object();

    const bool want_cartan = suite_name == "cartan" || suite_name == "all";
    const bool want_conn = suite_name == "connection" || suite_name == "all";
    const bool want_riemann = suite_name == "riemann" || suite_name == "all";

    if (want_cartan) suites["cartan"] = cartan_suite_json(geo.ctx, samples, seed, ok);
    if (want_conn) {
        PhaseTimer timer("connection suite");
        Json sect = Json::object();
        bool conn_ok = true;
        sect["zero"] = connection_checks_json(geo.ctx, Connection::zero(geo.ctx), samples, seed, conn_ok);
        ok = ok && conn_ok;
        suites["connection"] = std::move(sect);
    }
    if (want_riemann) {
        if (!geo.has_metric) {
            if (suite_name == "riemann") throw SpecError(path + ": geometry has no [metric] section");
            suites["riemann"] = Json{{"skipped", "no metric section"}};
        } else {
            Json sect = Json::object();
            ok = riemann_tables(geo, report, sect, samples, seed) && ok;
            suites["riemann"] = std::move(sect);
        }
    }

    report["suites"] = std::move(suites);
    report["all_residuals_zero"] = ok;
    std::cout << serialize_report(report);
    return ok ? 0 : 1;
}

int run_levi_civita(const std::string& path, const std::string& out_path) {
    Geometry geo = load_geometry(path);
    print_warnings(geo);
    if (!geo.has_metric) throw SpecError(path + ": geometry has no [metric] section");

    Json report = Json::object();
    report["geometry"] = geo.name;
    report["order"] = geo.order;
    report["spec_hash"] = source_hash(geo.source_text);
    Json suite = Json::object();
    bool ok = riemann_tables(geo, report, suite, geo.suite.samples, geo.suite.seed);
    report["suites"] = Json{{"riemann", std::move(suite)}};
    report["all_residuals_zero"] = ok;

    std::string text = serialize_report(report);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw SpecError(out_path + ": cannot open output file");
        out << text;
    }
    return ok ? 0 : 1;
}

int run_eval(const std::string& path, const std::string& expr) {
    Geometry geo = load_geometry(path);
    print_warnings(geo);
    std::vector<std::string> warnings;
    AlgebraElement v = parse_expression(expr, geo.ctx.alg, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << print_element(v) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact braided differential geometry toolkit"};
    app.require_subcommand(1);

    std::string path, suite_name = "all", out_path, expr;
    std::optional<std::uint64_t> seed;

    CLI::App* check = app.add_subcommand("check", "Run identity suites against a geometry file");
    check->add_option("spec", path, "geometry file")->required();
    check->add_option("--suite", suite_name, "cartan|connection|riemann|all")
        ->check(CLI::IsMember({"cartan", "connection", "riemann", "all"}));
    check->add_option("--seed", seed, "sampling seed (default: the file's suite seed)");

    CLI::App* lc = app.add_subcommand("levi-civita", "Solve for the Levi-Civita connection");
    lc->add_option("spec", path, "geometry file")->required();
    lc->add_option("--out", out_path, "write the report to this file instead of stdout");

    CLI::App* ev = app.add_subcommand("eval", "Evaluate an expression in the deformed algebra");
    ev->add_option("spec", path, "geometry file")->required();
    ev->add_option("--expr", expr, "expression to evaluate")->required();

    try {
        app.parse(argc, argv);
        if (check->parsed()) return run_check(path, suite_name, seed);
        if (lc->parsed()) return run_levi_civita(path, out_path);
        return run_eval(path, expr);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const braidgeo::SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const braidgeo::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
