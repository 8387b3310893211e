#include <catch2/catch_amalgamated.hpp>

#include <braidgeo/riemann.hpp>

#include <braidgeo/sampling.hpp>

using namespace braidgeo;
using namespace braidgeo::sampling;

namespace {

TwistSpec moyal_twist() {
    TwistSpec t;
    t.generators = 2;
    t.pairs = {{1, 2, GaussianRational(1)}, {2, 1, GaussianRational(-1)}};
    return t;
}

ModuleContext plane_context(int N) {
    AlgebraSpec a = AlgebraSpec::coordinate_derivations(2, N);
    FrameSpec f = FrameSpec::coordinate(a, N);
    return ModuleContext::make(AlgebraContext::make(a, moyal_twist(), N), f);
}

ModuleContext torus_ctx(int N) {
    AlgebraSpec a = AlgebraSpec::torus_phase_derivations(2);
    FrameSpec f = FrameSpec::coordinate(a, N);
    return ModuleContext::make(AlgebraContext::make(a, moyal_twist(), N), f);
}

ModuleContext commutative_context(int N) {
    AlgebraSpec a = AlgebraSpec::coordinate_derivations(2, N);
    TwistSpec t;
    t.generators = 2;
    return ModuleContext::make(AlgebraContext::make(a, t, N), FrameSpec::coordinate(a, N));
}

AlgebraElement x(const ModuleContext& ctx, int j) { return AlgebraElement::coordinate(j, ctx.dim(), ctx.order()); }

AlgebraElement mono(const ModuleContext& ctx, std::vector<int> e) {
    AlgebraElement a(ctx.kind(), ctx.dim(), ctx.order());
    a.add_term(BasisMonomial(ctx.kind(), std::move(e)), Series::one(ctx.order()));
    return a;
}

AlgebraElement h_times(const ModuleContext& ctx, const AlgebraElement& a) {
    return a.scaled(Series::h_power(ctx.order(), 1));
}

std::vector<std::vector<AlgebraElement>> identity_entries(const ModuleContext& ctx) {
    const auto n = static_cast<std::size_t>(ctx.rank());
    std::vector<std::vector<AlgebraElement>> e(n, std::vector<AlgebraElement>(n, ctx.zero_elem()));
    for (std::size_t i = 0; i < n; ++i) e[i][i] = ctx.unit_elem();
    return e;
}

TensorField vec_field(const ModuleContext& ctx, int j, const AlgebraElement& a) {
    TensorField f = ctx.zero_field(0, 1);
    f.add_term({vec_leg(j)}, a);
    return f;
}

// Classical Christoffel oracle on a coordinate frame: commutative products
// and partial derivatives only.  The metric inverse comes from a Neumann
// series on the constant part and is verified exactly before use.
std::vector<std::vector<std::vector<AlgebraElement>>> classical_christoffels(
    const ModuleContext& ctx, const std::vector<std::vector<AlgebraElement>>& g) {
    const int n = ctx.rank();
    const auto sz = static_cast<std::size_t>(n);
    std::vector<std::vector<GaussianRational>> g0(sz, std::vector<GaussianRational>(sz));
    for (std::size_t i = 0; i < sz; ++i)
        for (std::size_t j = 0; j < sz; ++j) g0[i][j] = detail::order_zero_constant(ctx, g[i][j]);
    auto c0 = detail::invert_matrix(g0);
    std::vector<std::vector<AlgebraElement>> ginv(sz, std::vector<AlgebraElement>(sz, ctx.zero_elem()));
    for (std::size_t i = 0; i < sz; ++i)
        for (std::size_t j = 0; j < sz; ++j) ginv[i][j] = ctx.unit_elem().scaled(c0[i][j]);
    for (int pass = 0; pass <= ctx.order(); ++pass) {
        // X <- C0 (I - (g - g0) X)
        std::vector<std::vector<AlgebraElement>> rhs(sz, std::vector<AlgebraElement>(sz, ctx.zero_elem()));
        for (std::size_t i = 0; i < sz; ++i) {
            rhs[i][i] = ctx.unit_elem();
            for (std::size_t j = 0; j < sz; ++j)
                for (std::size_t k = 0; k < sz; ++k) {
                    AlgebraElement gp = g[i][k] - ctx.unit_elem().scaled(g0[i][k]);
                    if (gp.is_zero()) continue;
                    rhs[i][j] -= classical_mul(gp, ginv[k][j]);
                }
        }
        std::vector<std::vector<AlgebraElement>> next(sz, std::vector<AlgebraElement>(sz, ctx.zero_elem()));
        for (std::size_t i = 0; i < sz; ++i)
            for (std::size_t j = 0; j < sz; ++j)
                for (std::size_t k = 0; k < sz; ++k) next[i][j] += rhs[k][j].scaled(c0[i][k]);
        ginv = std::move(next);
    }
    for (std::size_t i = 0; i < sz; ++i)
        for (std::size_t j = 0; j < sz; ++j) {
            AlgebraElement check = ctx.zero_elem();
            for (std::size_t k = 0; k < sz; ++k) check += classical_mul(g[i][k], ginv[k][j]);
            REQUIRE(check == (i == j ? ctx.unit_elem() : ctx.zero_elem()));
        }
    std::vector<std::vector<std::vector<AlgebraElement>>> gamma(
        sz, std::vector<std::vector<AlgebraElement>>(sz, std::vector<AlgebraElement>(sz, ctx.zero_elem())));
    const GaussianRational half(1, 2);
    for (int k = 1; k <= n; ++k)
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) {
                AlgebraElement acc = ctx.zero_elem();
                for (int l = 1; l <= n; ++l) {
                    AlgebraElement inner_sum =
                        partial_derivative(g[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1], i) +
                        partial_derivative(g[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(l) - 1], j) -
                        partial_derivative(g[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1], l);
                    if (inner_sum.is_zero()) continue;
                    acc += classical_mul(ginv[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(l) - 1],
                                         inner_sum);
                }
                gamma[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(i) - 1]
                     [static_cast<std::size_t>(j) - 1] = acc.scaled(half);
            }
    return gamma;
}

Connection from_classical(const ModuleContext& ctx,
                          const std::vector<std::vector<std::vector<AlgebraElement>>>& gamma) {
    Connection c = Connection::zero(ctx);
    for (int i = 1; i <= ctx.rank(); ++i)
        for (int j = 1; j <= ctx.rank(); ++j) {
            TensorField s = ctx.zero_field(0, 1);
            for (int k = 1; k <= ctx.rank(); ++k) {
                const auto& co = gamma[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(i) - 1]
                                      [static_cast<std::size_t>(j) - 1];
                if (!co.is_zero()) s.add_term({vec_leg(k)}, co);
            }
            c.set(i, j, std::move(s));
        }
    return c;
}

} // namespace

TEST_CASE("metric validation and musical maps") {
    SECTION("flat metric") {
        auto ctx = plane_context(2);
        Metric m = Metric::make(ctx, metric_from_entries(ctx, identity_entries(ctx)));
        REQUIRE(metric_flat(ctx, m, ctx.basis_vector(1)) == ctx.basis_form(1));
        REQUIRE(metric_sharp(ctx, m, ctx.basis_form(1)) == ctx.basis_vector(1));
    }

    SECTION("first-order perturbed metric inverts by a geometric series") {
        auto ctx = plane_context(1);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1));
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        REQUIRE(m.matrix[0][0] == entries[0][0]);
        REQUIRE(metric_flat(ctx, m, ctx.basis_vector(1)) == module_scale(ctx, entries[0][0], ctx.basis_form(1)));
        REQUIRE(metric_sharp(ctx, m, ctx.basis_form(1)) ==
                vec_field(ctx, 1, ctx.unit_elem() - h_times(ctx, x(ctx, 1))));
    }

    SECTION("sharp inverts flat on random fields") {
        auto rng = make_rng(501);
        auto ctx = plane_context(2);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1));
        entries[0][1] = h_times(ctx, x(ctx, 2));
        entries[1][0] = entries[0][1];
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        for (int trial = 0; trial < 3; ++trial) {
            TensorField v = random_tensor_field(rng, ctx, 0, 1);
            REQUIRE(metric_sharp(ctx, m, metric_flat(ctx, m, v)) == v);
        }
    }

    SECTION("torus metric") {
        auto ctx = torus_ctx(1);
        auto entries = identity_entries(ctx);
        entries[1][1] = ctx.unit_elem() + h_times(ctx, mono(ctx, {1, 0}) + mono(ctx, {-1, 0}));
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        TensorField v = vec_field(ctx, 2, mono(ctx, {0, 1}));
        REQUIRE(metric_sharp(ctx, m, metric_flat(ctx, m, v)) == v);
    }

    SECTION("rejects bad metrics") {
        auto ctx = plane_context(1);
        TensorField asym = tensor(ctx, ctx.basis_form(1), ctx.basis_form(2));
        REQUIRE_THROWS_AS(Metric::make(ctx, asym), std::invalid_argument);

        auto nonconst = identity_entries(ctx);
        nonconst[0][0] = ctx.unit_elem() + x(ctx, 1);
        REQUIRE_THROWS_AS(Metric::make(ctx, metric_from_entries(ctx, nonconst)), std::invalid_argument);

        auto singular = identity_entries(ctx);
        singular[1][1] = ctx.zero_elem();
        REQUIRE_THROWS_AS(Metric::make(ctx, metric_from_entries(ctx, singular)), std::invalid_argument);
    }
}

TEST_CASE("Koszul map") {
    SECTION("flat metric annihilates the table") {
        auto ctx = plane_context(2);
        Metric m = Metric::make(ctx, metric_from_entries(ctx, identity_entries(ctx)));
        for (int i = 1; i <= 2; ++i)
            for (int j = 1; j <= 2; ++j)
                for (int k = 1; k <= 2; ++k)
                    REQUIRE(koszul(ctx, m, ctx.basis_vector(i), ctx.basis_vector(j), ctx.basis_vector(k)).is_zero());
    }

    SECTION("frozen values for the perturbed metric") {
        auto ctx = plane_context(1);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1));
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        REQUIRE(koszul(ctx, m, ctx.basis_vector(1), ctx.basis_vector(1), ctx.basis_vector(1)) ==
                ctx.unit_elem().scaled(Series::h_power(1, 1)));
        REQUIRE(koszul(ctx, m, ctx.basis_vector(1), ctx.basis_vector(2), ctx.basis_vector(2)).is_zero());
    }

    SECTION("left linearity in the first slot") {
        auto rng = make_rng(511);
        auto ctx = plane_context(2);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1));
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        AlgebraElement a = random_element(rng, ctx, 2);
        TensorField u = random_tensor_field(rng, ctx, 0, 1);
        TensorField v = random_tensor_field(rng, ctx, 0, 1);
        TensorField z = random_tensor_field(rng, ctx, 0, 1);
        REQUIRE(koszul(ctx, m, module_scale(ctx, a, u), v, z) == star(ctx.alg, a, koszul(ctx, m, u, v, z)));
    }

    SECTION("derivation property in the last slot") {
        auto rng = make_rng(512);
        auto ctx = plane_context(2);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1));
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        AlgebraElement a = random_element(rng, ctx, 2);
        TensorField u = random_tensor_field(rng, ctx, 0, 1);
        TensorField v = random_tensor_field(rng, ctx, 0, 1);
        TensorField z = random_tensor_field(rng, ctx, 0, 1);
        AlgebraElement lhs = koszul(ctx, m, u, v, module_scale(ctx, a, z));
        AlgebraElement rhs = koszul(ctx, m, u, right_scale(ctx, v, a), z);
        for (const auto& [words, w] : ctx.alg.R_inv.terms) {
            TensorField v2 = word_symmetry_act(ctx, words[0], v);
            if (v2.is_zero()) continue;
            TensorField u2 = word_symmetry_act(ctx, words[1], u);
            if (u2.is_zero()) continue;
            AlgebraElement lu_a = vf_apply(ctx, u2, a);
            if (lu_a.is_zero()) continue;
            rhs += pair(ctx, tensor(ctx, right_scale(ctx, v2, lu_a), z), m.g)
                       .as_scalar()
                       .scaled(w * Series::one(ctx.order()).scaled(GaussianRational(2)));
        }
        REQUIRE(lhs == rhs);
    }
}

TEST_CASE("Levi-Civita connection") {
    SECTION("flat metric gives the zero connection") {
        auto ctx = plane_context(2);
        Metric m = Metric::make(ctx, metric_from_entries(ctx, identity_entries(ctx)));
        LCResult lc = levi_civita(ctx, m);
        REQUIRE(lc.ok());
        for (int i = 1; i <= 2; ++i)
            for (int j = 1; j <= 2; ++j) REQUIRE(lc.connection.christoffel(i, j).is_zero());
        CurvatureData data = curvature_sq(ctx, lc.connection);
        for (const auto& row : data.two_form)
            for (const auto& tf : row) REQUIRE(tf.is_zero());
    }

    SECTION("perturbed metric matches the classical solution") {
        for (int N = 1; N <= 2; ++N) {
            auto ctx = plane_context(N);
            auto entries = identity_entries(ctx);
            entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1));
            Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
            LCResult lc = levi_civita(ctx, m);
            REQUIRE(lc.ok());
            REQUIRE(lc.connection == from_classical(ctx, classical_christoffels(ctx, entries)));
            if (N == 1) {
                AlgebraElement half_h = ctx.unit_elem().scaled(Series::h_power(1, 1).scaled(GaussianRational(1, 2)));
                REQUIRE(lc.connection.christoffel(1, 1) == vec_field(ctx, 1, half_h));
                REQUIRE(lc.connection.christoffel(1, 2).is_zero());
                REQUIRE(lc.connection.christoffel(2, 1).is_zero());
                REQUIRE(lc.connection.christoffel(2, 2).is_zero());
            }
        }
    }

    SECTION("classical limit equals the classical oracle at every order") {
        auto ctx = commutative_context(2);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1) + x(ctx, 2));
        entries[0][1] = h_times(ctx, classical_mul(x(ctx, 1), x(ctx, 2)));
        entries[1][0] = entries[0][1];
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        LCResult lc = levi_civita(ctx, m);
        REQUIRE(lc.ok());
        REQUIRE(lc.connection == from_classical(ctx, classical_christoffels(ctx, entries)));
    }

    SECTION("solved connection satisfies the defining identity") {
        auto rng = make_rng(521);
        auto ctx = plane_context(2);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1));
        entries[0][1] = h_times(ctx, x(ctx, 2));
        entries[1][0] = entries[0][1];
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        LCResult lc = levi_civita(ctx, m);
        REQUIRE(lc.ok());
        TensorField u = random_tensor_field(rng, ctx, 0, 1);
        TensorField v = random_tensor_field(rng, ctx, 0, 1);
        TensorField z = random_tensor_field(rng, ctx, 0, 1);
        AlgebraElement lhs = ctx.zero_elem();
        for (const auto& [words, w] : ctx.alg.R_inv.terms) {
            TensorField v2 = word_symmetry_act(ctx, words[0], v);
            if (v2.is_zero()) continue;
            TensorField u2 = word_symmetry_act(ctx, words[1], u);
            if (u2.is_zero()) continue;
            lhs += pair(ctx, tensor(ctx, v2, cov_deriv(ctx, lc.connection, u2, z)), m.g).as_scalar().scaled(w);
        }
        REQUIRE(lhs.scaled(GaussianRational(2)) == koszul(ctx, m, u, v, z));
    }

    SECTION("torus metric solves with exact residuals") {
        auto ctx = torus_ctx(1);
        auto entries = identity_entries(ctx);
        entries[1][1] = ctx.unit_elem() + h_times(ctx, mono(ctx, {1, 0}) + mono(ctx, {-1, 0}));
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        REQUIRE(levi_civita(ctx, m).ok());
    }

    SECTION("perturbations break the defining residuals") {
        auto ctx = plane_context(1);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1));
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        LCResult lc = levi_civita(ctx, m);
        REQUIRE(lc.ok());

        Connection skew = lc.connection;
        skew.set(1, 2, skew.christoffel(1, 2) + vec_field(ctx, 1, x(ctx, 2)));
        bool torsion_broken = false;
        TorsionData td = torsion(ctx, skew);
        for (const auto& bi : td.coeff)
            for (const auto& bj : bi)
                for (const auto& co : bj) torsion_broken = torsion_broken || !co.is_zero();
        REQUIRE(torsion_broken);

        Connection sym = lc.connection;
        sym.set(1, 2, sym.christoffel(1, 2) + vec_field(ctx, 1, ctx.unit_elem()));
        sym.set(2, 1, sym.christoffel(2, 1) + vec_field(ctx, 1, ctx.unit_elem()));
        TorsionData td2 = torsion(ctx, sym);
        bool still_torsion_free = true;
        for (const auto& bi : td2.coeff)
            for (const auto& bj : bi)
                for (const auto& co : bj) still_torsion_free = still_torsion_free && co.is_zero();
        REQUIRE(still_torsion_free);
        REQUIRE(!right_conn_apply(ctx, lift_covariant(ctx, sym, 2), m.g).is_zero());
    }
}

TEST_CASE("Ricci tensor and Einstein proportionality") {
    SECTION("flat Levi-Civita has vanishing Ricci and lambda zero") {
        auto ctx = plane_context(2);
        Metric m = Metric::make(ctx, metric_from_entries(ctx, identity_entries(ctx)));
        LCResult lc = levi_civita(ctx, m);
        auto ric = ricci(ctx, lc.connection);
        for (const auto& row : ric)
            for (const auto& e : row) REQUIRE(e.is_zero());
        EinsteinResult res = einstein_check(ctx, m, ric);
        REQUIRE(res.proportional);
        REQUIRE(res.lambda.is_zero());
    }

    SECTION("trace matches a direct computation from the commutator curvature") {
        auto ctx = plane_context(2);
        Connection c = Connection::zero(ctx);
        c.set(1, 1, vec_field(ctx, 1, x(ctx, 2)));
        auto ric = ricci(ctx, c);
        for (int a = 1; a <= 2; ++a)
            for (int b = 1; b <= 2; ++b) {
                AlgebraElement direct = ctx.zero_elem();
                for (int i = 1; i <= 2; ++i)
                    direct += primed_eval(ctx, ctx.basis_form(i),
                                          curvature_comm(ctx, c, ctx.basis_vector(i), ctx.basis_vector(a),
                                                         ctx.basis_vector(b)));
                REQUIRE(ric[static_cast<std::size_t>(a) - 1][static_cast<std::size_t>(b) - 1] == direct);
            }
    }

    SECTION("first-order perturbed metric is Ricci flat at this order") {
        auto ctx = plane_context(1);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, x(ctx, 1));
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        LCResult lc = levi_civita(ctx, m);
        auto ric = ricci(ctx, lc.connection);
        for (const auto& row : ric)
            for (const auto& e : row) REQUIRE(e.is_zero());
        REQUIRE(einstein_check(ctx, m, ric).proportional);
    }

    SECTION("constant classical metric reports lambda zero") {
        auto ctx = commutative_context(1);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem().scaled(GaussianRational(2));
        entries[0][1] = ctx.unit_elem();
        entries[1][0] = ctx.unit_elem();
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        LCResult lc = levi_civita(ctx, m);
        REQUIRE(lc.ok());
        for (int i = 1; i <= 2; ++i)
            for (int j = 1; j <= 2; ++j) REQUIRE(lc.connection.christoffel(i, j).is_zero());
        EinsteinResult res = einstein_check(ctx, m, ricci(ctx, lc.connection));
        REQUIRE(res.proportional);
        REQUIRE(res.lambda.is_zero());
    }

    SECTION("verdict is self-consistent on a curved metric") {
        auto ctx = plane_context(2);
        auto entries = identity_entries(ctx);
        entries[0][0] = ctx.unit_elem() + h_times(ctx, classical_mul(x(ctx, 2), x(ctx, 2)));
        Metric m = Metric::make(ctx, metric_from_entries(ctx, entries));
        LCResult lc = levi_civita(ctx, m);
        REQUIRE(lc.ok());
        auto ric = ricci(ctx, lc.connection);
        EinsteinResult res = einstein_check(ctx, m, ric);
        if (res.proportional) {
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    REQUIRE(ric[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
                            m.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].scaled(res.lambda));
        } else {
            REQUIRE(res.bad_i >= 1);
            REQUIRE(res.bad_j >= 1);
            const auto bi = static_cast<std::size_t>(res.bad_i) - 1;
            const auto bj = static_cast<std::size_t>(res.bad_j) - 1;
            REQUIRE(!(ric[bi][bj] == m.matrix[bi][bj].scaled(res.lambda)));
        }
    }
}
