#include <catch2/catch_amalgamated.hpp>

#include <braidgeo/connections.hpp>

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

ModuleContext commutative3_context(int N) {
    AlgebraSpec a = AlgebraSpec::coordinate_derivations(3, N);
    TwistSpec t;
    t.generators = 3;
    return ModuleContext::make(AlgebraContext::make(a, t, N), FrameSpec::coordinate(a, N));
}

// e_1 = d/dx_1 and e_2 = x_1 d/dx_1 + d/dx_2: unimodular frame with
// Z_1 |> e_2 = e_1 and [e_1, e_2] = e_1.
ModuleContext tilted_context(int N) {
    AlgebraSpec a = AlgebraSpec::coordinate_derivations(2, N);
    FrameSpec f = FrameSpec::coordinate(a, N);
    AlgebraElement one = AlgebraElement::unit(a.kind, a.dim, N);
    f.frame_action[1][0] = AlgebraElement::coordinate(1, a.dim, N);
    f.sym_vec[0][1][0] = one;
    f.structure[0][1][0] = one;
    f.structure[1][0][0] = one.scaled(GaussianRational(-1));
    return ModuleContext::make(AlgebraContext::make(a, moyal_twist(), N), f);
}

AlgebraElement x(const ModuleContext& ctx, int j) { return AlgebraElement::coordinate(j, ctx.dim(), ctx.order()); }

TensorField vec_field(const ModuleContext& ctx, int j, const AlgebraElement& a) {
    TensorField f = ctx.zero_field(0, 1);
    f.add_term({vec_leg(j)}, a);
    return f;
}

Connection random_connection(std::mt19937_64& rng, const ModuleContext& ctx, int coeff_size = 1, int nterms = 1) {
    Connection c = Connection::zero(ctx);
    for (int i = 1; i <= ctx.rank(); ++i)
        for (int j = 1; j <= ctx.rank(); ++j)
            c.set(i, j, random_tensor_field(rng, ctx, 0, 1, coeff_size, nterms));
    return c;
}

// Braided flip of a two-argument frame operation, for antisymmetry checks.
template <class Op>
TensorField braided_flip(const ModuleContext& ctx, const Op& op, const TensorField& u, const TensorField& v) {
    TensorField out;
    bool first = true;
    for (const auto& [words, w] : ctx.alg.R_inv.terms) {
        TensorField v2 = word_symmetry_act(ctx, words[0], v);
        if (v2.is_zero()) continue;
        TensorField u2 = word_symmetry_act(ctx, words[1], u);
        if (u2.is_zero()) continue;
        TensorField piece = op(v2, u2).scaled(w);
        if (first) {
            out = std::move(piece);
            first = false;
        } else {
            out += piece;
        }
    }
    return out;
}

} // namespace

TEST_CASE("covariant derivative basics") {
    auto ctx = plane_context(2);
    Connection zero = Connection::zero(ctx);

    SECTION("zero connection reduces to the frame derivative") {
        TensorField t = module_scale(ctx, x(ctx, 1), ctx.basis_vector(2));
        REQUIRE(cov_deriv(ctx, zero, ctx.basis_vector(1), t) == ctx.basis_vector(2));
        REQUIRE(cov_deriv(ctx, zero, ctx.basis_vector(2), t).is_zero());
    }

    SECTION("scalars see the vector field action") {
        auto rng = make_rng(401);
        TensorField u = random_tensor_field(rng, ctx, 0, 1);
        AlgebraElement a = random_element(rng, ctx, 2);
        REQUIRE(cov_deriv(ctx, zero, u, ctx.scalar_field(a)) == ctx.scalar_field(vf_apply(ctx, u, a)));
    }

    SECTION("frame values reproduce the stored table") {
        auto rng = make_rng(402);
        for (int trial = 0; trial < 2; ++trial) {
            auto tctx = trial == 0 ? tilted_context(1) : torus_ctx(1);
            Connection c = random_connection(rng, tctx);
            for (int i = 1; i <= tctx.rank(); ++i)
                for (int j = 1; j <= tctx.rank(); ++j)
                    REQUIRE(cov_deriv(tctx, c, tctx.basis_vector(i), tctx.basis_vector(j)) == c.christoffel(i, j));
        }
    }

    SECTION("half-h diagonal entry") {
        Connection c = Connection::zero(ctx);
        AlgebraElement half_h = ctx.unit_elem().scaled(Series::h_power(ctx.order(), 1).scaled(GaussianRational(1, 2)));
        c.set(1, 1, vec_field(ctx, 1, half_h));
        REQUIRE(cov_deriv(ctx, c, ctx.basis_vector(1), ctx.basis_vector(1)) == vec_field(ctx, 1, half_h));
    }

    SECTION("left linearity in the direction") {
        auto rng = make_rng(403);
        Connection c = random_connection(rng, ctx);
        TensorField u = random_tensor_field(rng, ctx, 0, 1);
        TensorField s = random_tensor_field(rng, ctx, 0, 1);
        AlgebraElement a = random_element(rng, ctx, 2);
        REQUIRE(cov_deriv(ctx, c, module_scale(ctx, a, u), s) == module_scale(ctx, a, cov_deriv(ctx, c, u, s)));
    }

    SECTION("braided Leibniz rule in the argument") {
        auto rng = make_rng(404);
        Connection c = random_connection(rng, ctx);
        TensorField u = random_tensor_field(rng, ctx, 0, 1);
        TensorField s = random_tensor_field(rng, ctx, 0, 1);
        AlgebraElement a = random_element(rng, ctx, 2);
        TensorField lhs = cov_deriv(ctx, c, u, module_scale(ctx, a, s));
        TensorField rhs = module_scale(ctx, vf_apply(ctx, u, a), s);
        for (const auto& [words, w] : ctx.alg.R_inv.terms) {
            AlgebraElement a2 = h_act(ctx.alg.spec, words[0], a);
            if (a2.is_zero()) continue;
            TensorField u2 = word_symmetry_act(ctx, words[1], u);
            if (u2.is_zero()) continue;
            rhs += module_scale(ctx, a2, cov_deriv(ctx, c, u2, s)).scaled(w);
        }
        REQUIRE(lhs == rhs);
    }

    SECTION("pure forms are rejected") {
        REQUIRE_THROWS_AS(cov_deriv(ctx, zero, ctx.basis_vector(1), ctx.basis_form(1)), std::invalid_argument);
    }
}

TEST_CASE("interchange of covariant derivative and insertion") {
    SECTION("coordinate frame, zero connection") {
        auto ctx = plane_context(2);
        Connection zero = Connection::zero(ctx);
        std::vector<TensorField> samples = {
            tensor(ctx, ctx.basis_form(1), ctx.basis_vector(1)),
            tensor(ctx, module_scale(ctx, x(ctx, 2), ctx.basis_form(2)), ctx.basis_vector(1))};
        for (const auto& r :
             cartan_relation_check(ctx, zero, ctx.basis_vector(1), ctx.basis_vector(2), samples))
            REQUIRE(r.is_zero());
    }

    SECTION("nonzero connection and non-invariant direction") {
        auto ctx = plane_context(2);
        auto rng = make_rng(411);
        Connection c = Connection::zero(ctx);
        c.set(1, 1, vec_field(ctx, 1, x(ctx, 2)));
        TensorField u = module_scale(ctx, x(ctx, 2), ctx.basis_vector(1));
        TensorField v = ctx.basis_vector(2);
        REQUIRE(bracket(ctx, u, v) == -ctx.basis_vector(1));
        std::vector<TensorField> samples = {
            tensor(ctx, random_tensor_field(rng, ctx, 1, 0), ctx.basis_vector(2)),
            tensor(ctx, wedge(ctx, ctx.basis_form(1), ctx.basis_form(2)), ctx.basis_vector(1))};
        for (const auto& r : cartan_relation_check(ctx, c, u, v, samples)) REQUIRE(r.is_zero());
    }

    SECTION("random connections on structured frames") {
        auto rng = make_rng(412);
        for (int trial = 0; trial < 2; ++trial) {
            auto ctx = trial == 0 ? tilted_context(1) : torus_ctx(1);
            Connection c = random_connection(rng, ctx);
            TensorField u = random_tensor_field(rng, ctx, 0, 1);
            TensorField v = random_tensor_field(rng, ctx, 0, 1);
            TensorField sigma = tensor(ctx, random_tensor_field(rng, ctx, 1, 0), ctx.basis_vector(1));
            REQUIRE(cartan_relation_residual(ctx, c, u, v, sigma).is_zero());
        }
    }
}

TEST_CASE("curvature") {
    auto ctx = plane_context(2);

    SECTION("zero connection is flat") {
        Connection zero = Connection::zero(ctx);
        CurvatureData data = curvature_sq(ctx, zero);
        for (const auto& bi : data.coeff)
            for (const auto& bj : bi)
                for (const auto& bk : bj)
                    for (const auto& co : bk) REQUIRE(co.is_zero());
        for (const auto& row : data.two_form)
            for (const auto& tf : row) REQUIRE(tf.is_zero());
        REQUIRE(curvature_comm(ctx, zero, ctx.basis_vector(1), ctx.basis_vector(2), ctx.basis_vector(1)).is_zero());
    }

    Connection c = Connection::zero(ctx);
    c.set(1, 1, vec_field(ctx, 1, x(ctx, 2)));

    SECTION("frozen components of a curved connection") {
        REQUIRE(curvature_comm(ctx, c, ctx.basis_vector(2), ctx.basis_vector(1), ctx.basis_vector(1)) ==
                ctx.basis_vector(1));
        CurvatureData data = curvature_sq(ctx, c);
        REQUIRE(data.coeff[1][0][0][0] == ctx.unit_elem());
        REQUIRE(data.coeff[0][1][0][0] == ctx.unit_elem().scaled(GaussianRational(-1)));
        REQUIRE(data.two_form[0][0] == -wedge(ctx, ctx.basis_form(1), ctx.basis_form(2)));
    }

    SECTION("square of the extension matches the commutator formula") {
        auto rng = make_rng(421);
        for (int trial = 0; trial < 3; ++trial) {
            ModuleContext tctx = trial == 0 ? plane_context(2) : trial == 1 ? tilted_context(1) : torus_ctx(1);
            Connection tc = trial == 0 ? [&] {
                Connection k = Connection::zero(tctx);
                k.set(1, 1, vec_field(tctx, 1, AlgebraElement::coordinate(2, tctx.dim(), tctx.order())));
                return k;
            }()
                                       : random_connection(rng, tctx);
            CurvatureData data = curvature_sq(tctx, tc);
            for (int i = 1; i <= tctx.rank(); ++i)
                for (int j = 1; j <= tctx.rank(); ++j)
                    for (int k = 1; k <= tctx.rank(); ++k) {
                        TensorField expect = tctx.zero_field(0, 1);
                        for (int l = 1; l <= tctx.rank(); ++l) {
                            const auto& co = data.coeff[static_cast<std::size_t>(i) - 1]
                                                       [static_cast<std::size_t>(j) - 1]
                                                       [static_cast<std::size_t>(k) - 1]
                                                       [static_cast<std::size_t>(l) - 1];
                            if (!co.is_zero()) expect += vec_field(tctx, l, co);
                        }
                        REQUIRE(curvature_comm(tctx, tc, tctx.basis_vector(i), tctx.basis_vector(j),
                                               tctx.basis_vector(k)) == expect);
                    }
        }
    }

    SECTION("braided antisymmetry in the first two slots") {
        auto rng = make_rng(422);
        TensorField u = random_tensor_field(rng, ctx, 0, 1);
        TensorField v = random_tensor_field(rng, ctx, 0, 1);
        TensorField s = random_tensor_field(rng, ctx, 0, 1);
        TensorField flipped = braided_flip(
            ctx, [&](const TensorField& a, const TensorField& b) { return curvature_comm(ctx, c, a, b, s); }, u, v);
        REQUIRE((curvature_comm(ctx, c, u, v, s) + flipped).is_zero());
    }

    SECTION("left linearity in the first slot") {
        auto rng = make_rng(423);
        AlgebraElement a = random_element(rng, ctx, 2);
        TensorField scaled_arg = module_scale(ctx, a, ctx.basis_vector(1));
        REQUIRE(curvature_comm(ctx, c, scaled_arg, ctx.basis_vector(2), ctx.basis_vector(1)) ==
                module_scale(ctx, a,
                             curvature_comm(ctx, c, ctx.basis_vector(1), ctx.basis_vector(2), ctx.basis_vector(1))));
    }
}

TEST_CASE("torsion") {
    auto ctx = plane_context(2);

    SECTION("zero connection on the coordinate frame") {
        TorsionData data = torsion(ctx, Connection::zero(ctx));
        for (const auto& bi : data.coeff)
            for (const auto& bj : bi)
                for (const auto& co : bj) REQUIRE(co.is_zero());
        for (const auto& tf : data.two_form) REQUIRE(tf.is_zero());
    }

    SECTION("constant off-diagonal entry") {
        Connection c = Connection::zero(ctx);
        AlgebraElement ch = ctx.unit_elem().scaled(GaussianRational(3, 2));
        c.set(1, 2, vec_field(ctx, 1, ch));
        TorsionData data = torsion(ctx, c);
        REQUIRE(torsion_pointwise(ctx, c, ctx.basis_vector(1), ctx.basis_vector(2)) == vec_field(ctx, 1, ch));
        REQUIRE(data.coeff[0][1][0] == ch);
        REQUIRE(data.coeff[1][0][0] == -ch);
        REQUIRE(data.two_form[0] == wedge(ctx, ctx.basis_form(1), ctx.basis_form(2)).scaled(GaussianRational(3, 2)));
        REQUIRE(data.two_form[1].is_zero());
    }

    SECTION("zero connection with frame structure sees minus the bracket") {
        auto tctx = tilted_context(1);
        auto rng = make_rng(431);
        Connection zero = Connection::zero(tctx);
        TorsionData data = torsion(tctx, zero);
        REQUIRE(data.coeff[0][1][0] == tctx.unit_elem().scaled(GaussianRational(-1)));
        // On constant-coefficient fields the derivative parts cancel and only
        // the tensorial structure part survives.
        TensorField u = vec_field(tctx, 1, tctx.unit_elem().scaled(random_rational(rng))) +
                        vec_field(tctx, 2, tctx.unit_elem().scaled(random_rational(rng)));
        TensorField v = vec_field(tctx, 1, tctx.unit_elem().scaled(random_rational(rng))) +
                        vec_field(tctx, 2, tctx.unit_elem().scaled(random_rational(rng)));
        REQUIRE(torsion_pointwise(tctx, zero, u, v) == -bracket(tctx, u, v));
    }

    SECTION("left linearity in the first slot") {
        auto rng = make_rng(433);
        Connection c = random_connection(rng, ctx);
        AlgebraElement a = random_element(rng, ctx, 2);
        REQUIRE(torsion_pointwise(ctx, c, module_scale(ctx, a, ctx.basis_vector(1)), ctx.basis_vector(2)) ==
                module_scale(ctx, a, torsion_pointwise(ctx, c, ctx.basis_vector(1), ctx.basis_vector(2))));
    }

    SECTION("braided antisymmetry") {
        auto rng = make_rng(432);
        Connection c = random_connection(rng, ctx);
        TensorField u = random_tensor_field(rng, ctx, 0, 1);
        TensorField v = random_tensor_field(rng, ctx, 0, 1);
        TensorField flipped = braided_flip(
            ctx, [&](const TensorField& a, const TensorField& b) { return torsion_pointwise(ctx, c, a, b); }, u, v);
        REQUIRE((torsion_pointwise(ctx, c, u, v) + flipped).is_zero());
    }
}

TEST_CASE("dual connection") {
    auto ctx = plane_context(2);

    SECTION("zero connection dualizes to zero") {
        auto om = dual_connection(ctx, Connection::zero(ctx));
        for (const auto& row : om)
            for (const auto& tf : row) REQUIRE(tf.is_zero());
    }

    SECTION("half-h diagonal entry") {
        Connection c = Connection::zero(ctx);
        AlgebraElement half_h = ctx.unit_elem().scaled(Series::h_power(ctx.order(), 1).scaled(GaussianRational(1, 2)));
        c.set(1, 1, vec_field(ctx, 1, half_h));
        auto om = dual_connection(ctx, c);
        TensorField expect = ctx.zero_field(1, 0);
        expect.add_term({form_leg(1)}, -half_h);
        REQUIRE(om[0][0] == expect);
        REQUIRE(om[0][1].is_zero());
        REQUIRE(om[1][0].is_zero());
        REQUIRE(om[1][1].is_zero());
    }

    SECTION("double dual restores the table") {
        auto rng = make_rng(441);
        for (int trial = 0; trial < 3; ++trial) {
            ModuleContext tctx = trial == 0 ? plane_context(2) : trial == 1 ? tilted_context(1) : torus_ctx(1);
            Connection c = random_connection(rng, tctx, 2, 2);
            REQUIRE(dual_to_connection(tctx, dual_connection(tctx, c)) == c);
        }
    }

    SECTION("dual is affine in the table") {
        auto rng = make_rng(442);
        Connection c = random_connection(rng, ctx);
        Connection shift = random_connection(rng, ctx);
        auto lhs = dual_connection(ctx, c + shift);
        auto a = dual_connection(ctx, c);
        auto b = dual_connection(ctx, shift);
        for (std::size_t j = 0; j < lhs.size(); ++j)
            for (std::size_t l = 0; l < lhs.size(); ++l) REQUIRE(lhs[j][l] == a[j][l] + b[j][l]);
    }
}

TEST_CASE("sums and lifts of connections") {
    SECTION("sum of zeros is zero") {
        auto ctx = plane_context(1);
        LeftConnection z = as_left(ctx, Connection::zero(ctx));
        REQUIRE(z.gamma.empty());
        LeftConnection s = sum_left(ctx, z, z);
        REQUIRE(s.gp == 0);
        REQUIRE(s.gq == 2);
        REQUIRE(s.gamma.empty());
    }

    SECTION("dual of the frame lift matches the one-form table") {
        auto rng = make_rng(451);
        for (int trial = 0; trial < 2; ++trial) {
            ModuleContext ctx = trial == 0 ? plane_context(1) : tilted_context(1);
            Connection c = random_connection(rng, ctx);
            RightConnection via_field = dual_left(ctx, as_left(ctx, c));
            RightConnection via_table = as_right(ctx, dual_connection(ctx, c));
            REQUIRE(via_field.gp == via_table.gp);
            REQUIRE(via_field.gamma == via_table.gamma);
        }
    }

    SECTION("dual of a sum is the reversed sum of duals") {
        auto rng = make_rng(452);
        for (int trial = 0; trial < 2; ++trial) {
            ModuleContext ctx = trial == 0 ? plane_context(1) : torus_ctx(1);
            Connection a = random_connection(rng, ctx);
            Connection b = random_connection(rng, ctx);
            RightConnection lhs = dual_left(ctx, sum_left(ctx, as_left(ctx, a), as_left(ctx, b)));
            RightConnection rhs = sum_right(ctx, as_right(ctx, dual_connection(ctx, b)),
                                            as_right(ctx, dual_connection(ctx, a)));
            REQUIRE(lhs.gp == rhs.gp);
            REQUIRE(lhs.gamma == rhs.gamma);
        }
    }

    SECTION("sum is associative") {
        auto ctx = plane_context(1);
        auto rng = make_rng(453);
        LeftConnection a = as_left(ctx, random_connection(rng, ctx));
        LeftConnection b = as_left(ctx, random_connection(rng, ctx));
        LeftConnection c = as_left(ctx, random_connection(rng, ctx));
        LeftConnection lhs = sum_left(ctx, a, sum_left(ctx, b, c));
        LeftConnection rhs = sum_left(ctx, sum_left(ctx, a, b), c);
        REQUIRE(lhs.gp == rhs.gp);
        REQUIRE(lhs.gq == rhs.gq);
        REQUIRE(lhs.gamma == rhs.gamma);
    }

    SECTION("covariant derivative on pairs agrees with the lifted connection") {
        auto rng = make_rng(454);
        for (int trial = 0; trial < 2; ++trial) {
            ModuleContext ctx = trial == 0 ? plane_context(1) : tilted_context(1);
            Connection c = random_connection(rng, ctx);
            LeftConnection lift = lift_contravariant(ctx, c, 2);
            TensorField u = random_tensor_field(rng, ctx, 0, 1);
            TensorField t = random_tensor_field(rng, ctx, 0, 2);
            REQUIRE(cov_deriv(ctx, c, u, t) == inner(ctx, u, left_conn_apply(ctx, lift, t)));
        }
    }
}

TEST_CASE("structure equations") {
    SECTION("coordinate frame cases") {
        auto ctx = plane_context(2);
        REQUIRE(cartan_structure_check(ctx, Connection::zero(ctx)).all_zero());

        Connection torsional = Connection::zero(ctx);
        torsional.set(1, 2, vec_field(ctx, 1, ctx.unit_elem().scaled(GaussianRational(3, 2))));
        REQUIRE(cartan_structure_check(ctx, torsional).all_zero());

        Connection curved = Connection::zero(ctx);
        curved.set(1, 1, vec_field(ctx, 1, x(ctx, 2)));
        REQUIRE(cartan_structure_check(ctx, curved).all_zero());
    }

    SECTION("random connections on structured frames") {
        auto rng = make_rng(461);
        for (int trial = 0; trial < 2; ++trial) {
            ModuleContext ctx = trial == 0 ? tilted_context(1) : torus_ctx(1);
            REQUIRE(cartan_structure_check(ctx, random_connection(rng, ctx)).all_zero());
        }
    }

    SECTION("rank three commutative frame") {
        auto ctx = commutative3_context(1);
        auto rng = make_rng(462);
        REQUIRE(cartan_structure_check(ctx, random_connection(rng, ctx)).all_zero());
    }
}

TEST_CASE("differential consequences of the structure equations") {
    SECTION("coordinate frame cases") {
        auto ctx = plane_context(2);
        REQUIRE(bianchi_check(ctx, Connection::zero(ctx)).all_zero());

        Connection curved = Connection::zero(ctx);
        curved.set(1, 1, vec_field(ctx, 1, x(ctx, 2)));
        REQUIRE(bianchi_check(ctx, curved).all_zero());
    }

    SECTION("random connection") {
        auto ctx = plane_context(1);
        auto rng = make_rng(471);
        REQUIRE(bianchi_check(ctx, random_connection(rng, ctx)).all_zero());
    }

    SECTION("rank three commutative frame with nonzero three-forms") {
        auto ctx = commutative3_context(1);
        auto rng = make_rng(472);
        Connection c = random_connection(rng, ctx);
        CurvatureData data = curvature_sq(ctx, c);
        bool saw_nonzero = false;
        for (const auto& row : data.two_form)
            for (const auto& tf : row) saw_nonzero = saw_nonzero || !tf.is_zero();
        REQUIRE(saw_nonzero);
        REQUIRE(bianchi_check(ctx, c).all_zero());
    }
}
