#pragma once

#include <braidgeo/connections.hpp>

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace braidgeo {

namespace detail {

/// Constant part of an algebra element; throws unless the h-order-zero part
/// is a multiple of the unit monomial.
inline GaussianRational order_zero_constant(const ModuleContext& ctx, const AlgebraElement& a) {
    GaussianRational out;
    const BasisMonomial unit(ctx.kind(), std::vector<int>(static_cast<std::size_t>(ctx.dim()), 0));
    for (const auto& [mo, s] : a.terms) {
        if (s.c[0].is_zero()) continue;
        if (!(mo == unit)) throw std::invalid_argument("metric order-zero part is not constant");
        out = s.c[0];
    }
    return out;
}

/// Exact inverse of a small matrix over the coefficient field.
inline std::vector<std::vector<GaussianRational>> invert_matrix(std::vector<std::vector<GaussianRational>> mat) {
    const std::size_t n = mat.size();
    std::vector<std::vector<GaussianRational>> inv(n, std::vector<GaussianRational>(n));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = GaussianRational(1);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && mat[piv][col].is_zero()) ++piv;
        if (piv == n) throw std::invalid_argument("metric order-zero matrix is singular");
        std::swap(mat[piv], mat[col]);
        std::swap(inv[piv], inv[col]);
        const GaussianRational d = GaussianRational(1) / mat[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            mat[col][j] = mat[col][j] * d;
            inv[col][j] = inv[col][j] * d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || mat[r][col].is_zero()) continue;
            const GaussianRational f = mat[r][col];
            for (std::size_t j = 0; j < n; ++j) {
                mat[r][j] = mat[r][j] - f * mat[col][j];
                inv[r][j] = inv[r][j] - f * inv[col][j];
            }
        }
    }
    return inv;
}

} // namespace detail

/**
 * Pseudo-Riemannian metric: a braided symmetric two-form-valued element
 * whose frame matrix has a constant invertible h-order-zero part.  The
 * noncommutativity enters through positive h-orders, which keeps the
 * musical isomorphisms solvable by a geometric series inside the algebra.
 */
struct Metric {
    TensorField g;                                         // (2,0), g = tau(g)
    std::vector<std::vector<AlgebraElement>> matrix;       // <e_i (x) e_j, g>
    std::vector<std::vector<GaussianRational>> classical_inverse; // of order-0 matrix
    std::vector<std::vector<AlgebraElement>> flat_coeff;   // flat(e_j) = sum_l flat_coeff[j][l] . w^l
    std::vector<std::vector<GaussianRational>> flat0_inv;  // inverse of its order-0 part

    static Metric make(const ModuleContext& ctx, TensorField g_in) {
        if (g_in.p != 2 || g_in.q != 0) throw std::invalid_argument("metric must be a two-form-slot tensor");
        if (!(g_in - braid(ctx, g_in, 0)).is_zero())
            throw std::invalid_argument("metric is not braided symmetric");
        const int n = ctx.rank();
        const auto sz = static_cast<std::size_t>(n);
        Metric m;
        m.g = std::move(g_in);
        m.matrix.assign(sz, std::vector<AlgebraElement>(sz, ctx.zero_elem()));
        m.flat_coeff.assign(sz, std::vector<AlgebraElement>(sz, ctx.zero_elem()));
        std::vector<std::vector<GaussianRational>> m0(sz, std::vector<GaussianRational>(sz));
        std::vector<std::vector<GaussianRational>> f0(sz, std::vector<GaussianRational>(sz));
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) {
                m.matrix[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1] =
                    pair(ctx, tensor(ctx, ctx.basis_vector(i), ctx.basis_vector(j)), m.g).as_scalar();
                m0[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1] = detail::order_zero_constant(
                    ctx, m.matrix[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1]);
            }
        for (int j = 1; j <= n; ++j) {
            TensorField fl = inner(ctx, ctx.basis_vector(j), m.g);
            for (int l = 1; l <= n; ++l) {
                auto it = fl.terms.find({form_leg(l)});
                if (it != fl.terms.end())
                    m.flat_coeff[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1] = it->second;
                f0[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1] = detail::order_zero_constant(
                    ctx, m.flat_coeff[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1]);
            }
        }
        m.classical_inverse = detail::invert_matrix(std::move(m0));
        m.flat0_inv = detail::invert_matrix(std::move(f0));
        return m;
    }
};

/// Convenience builder from a frame matrix of entries: the tensor
/// sum_{i,j} entries[i-1][j-1] . (w^j (x) w^i), whose pairing against
/// e_i (x) e_j reproduces the entries on invariant frames.
inline TensorField metric_from_entries(const ModuleContext& ctx,
                                       const std::vector<std::vector<AlgebraElement>>& entries) {
    TensorField g = ctx.zero_field(2, 0);
    for (int i = 1; i <= ctx.rank(); ++i)
        for (int j = 1; j <= ctx.rank(); ++j) {
            const auto& e = entries[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1];
            if (e.is_zero()) continue;
            g += module_scale(ctx, e, tensor(ctx, ctx.basis_form(j), ctx.basis_form(i)));
        }
    return g;
}

/// Musical flat: v -> <v, first slot of g> . second slot, a one-form.
inline TensorField metric_flat(const ModuleContext& ctx, const Metric& m, const TensorField& v) {
    if (v.p != 0 || v.q != 1) throw std::invalid_argument("flat expects a vector field");
    return inner(ctx, v, m.g);
}

/// Musical sharp, the inverse of flat: solves a . flat_coeff = theta for the
/// left coefficients order by h-order via the constant inverse, then checks
/// the solution exactly.
inline TensorField metric_sharp(const ModuleContext& ctx, const Metric& m, const TensorField& theta) {
    if (theta.p != 1 || theta.q != 0) throw std::invalid_argument("sharp expects a one-form");
    const int n = ctx.rank();
    std::vector<AlgebraElement> t(static_cast<std::size_t>(n), ctx.zero_elem());
    for (int l = 1; l <= n; ++l) {
        auto it = theta.terms.find({form_leg(l)});
        if (it != theta.terms.end()) t[static_cast<std::size_t>(l) - 1] = it->second;
    }
    std::vector<std::vector<AlgebraElement>> bplus(static_cast<std::size_t>(n),
                                                   std::vector<AlgebraElement>(static_cast<std::size_t>(n),
                                                                               ctx.zero_elem()));
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
            AlgebraElement b0 = ctx.unit_elem().scaled(detail::order_zero_constant(ctx, m.flat_coeff
                [static_cast<std::size_t>(j)][static_cast<std::size_t>(l)]));
            bplus[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] =
                m.flat_coeff[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] - b0;
        }
    std::vector<AlgebraElement> a(static_cast<std::size_t>(n), ctx.zero_elem());
    for (int pass = 0; pass <= ctx.order(); ++pass) {
        std::vector<AlgebraElement> next(static_cast<std::size_t>(n), ctx.zero_elem());
        for (int l = 0; l < n; ++l) {
            AlgebraElement rhs = t[static_cast<std::size_t>(l)];
            for (int k = 0; k < n; ++k) {
                const auto& bp = bplus[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
                if (bp.is_zero() || a[static_cast<std::size_t>(k)].is_zero()) continue;
                rhs -= star(ctx.alg, a[static_cast<std::size_t>(k)], bp);
            }
            for (int j = 0; j < n; ++j)
                next[static_cast<std::size_t>(j)] +=
                    rhs.scaled(m.flat0_inv[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)]);
        }
        a = std::move(next);
    }
    for (int l = 0; l < n; ++l) {
        AlgebraElement check = ctx.zero_elem();
        for (int j = 0; j < n; ++j) {
            const auto& b = m.flat_coeff[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
            if (b.is_zero() || a[static_cast<std::size_t>(j)].is_zero()) continue;
            check += star(ctx.alg, a[static_cast<std::size_t>(j)], b);
        }
        if (!(check == t[static_cast<std::size_t>(l)]))
            throw std::logic_error("sharp solve failed to invert flat exactly");
    }
    TensorField out = ctx.zero_field(0, 1);
    for (int j = 1; j <= n; ++j)
        if (!a[static_cast<std::size_t>(j) - 1].is_zero())
            out.add_term({vec_leg(j)}, a[static_cast<std::size_t>(j) - 1]);
    return out;
}

/**
 * The six-term Koszul map fixing the Levi-Civita connection:
 *
 *   K(u, v, z) = L_u<v (x) z, g> - L_{^a v}<_a u (x) z, g>
 *                + L_{^{ab} z}<_a u (x) _b v, g>
 *                - <[u, v] (x) z, g> + <u (x) [v, z], g>
 *                + <[u, ^b z] (x) _b v, g>,
 *
 * with ^a/_a the two legs of the braiding.
 */
inline AlgebraElement koszul(const ModuleContext& ctx, const Metric& m, const TensorField& u, const TensorField& v,
                             const TensorField& z) {
    const auto ev = [&](const TensorField& x, const TensorField& y) {
        return pair(ctx, tensor(ctx, x, y), m.g).as_scalar();
    };
    AlgebraElement out = vf_apply(ctx, u, ev(v, z));
    for (const auto& [words, w] : ctx.alg.R_inv.terms) {
        TensorField v2 = word_symmetry_act(ctx, words[0], v);
        if (!v2.is_zero()) {
            TensorField u2 = word_symmetry_act(ctx, words[1], u);
            if (!u2.is_zero()) out -= vf_apply(ctx, v2, ev(u2, z)).scaled(w);
        }
        TensorField z2 = word_symmetry_act(ctx, words[0], z);
        if (!z2.is_zero()) {
            TensorField vb = word_symmetry_act(ctx, words[1], v);
            if (!vb.is_zero()) out += ev(bracket(ctx, u, z2), vb).scaled(w);
        }
    }
    for (const auto& [wa, ca] : ctx.alg.R_inv.terms) {
        TensorField ua = word_symmetry_act(ctx, wa[1], u);
        if (ua.is_zero()) continue;
        for (const auto& [wb, cb] : ctx.alg.R_inv.terms) {
            TensorField vb = word_symmetry_act(ctx, wb[1], v);
            if (vb.is_zero()) continue;
            TensorField zz = word_symmetry_act(ctx, wa[0] * wb[0], z);
            if (zz.is_zero()) continue;
            out += vf_apply(ctx, zz, ev(ua, vb)).scaled(ca * cb);
        }
    }
    out -= ev(bracket(ctx, u, v), z);
    out += ev(u, bracket(ctx, v, z));
    return out;
}

/**
 * Levi-Civita solve: connection, its exact torsion and metric-compatibility
 * residuals, and the Koszul table on frame triples as a diagnostic.  Both
 * residuals vanish identically for a consistent metric.
 */
struct LCResult {
    Connection connection;
    TorsionData torsion_data;
    TensorField metric_residual; // lifted dual connection applied to g
    std::vector<std::vector<std::vector<AlgebraElement>>> koszul_table;

    bool ok() const {
        for (const auto& bi : torsion_data.coeff)
            for (const auto& bj : bi)
                for (const auto& co : bj)
                    if (!co.is_zero()) return false;
        return metric_residual.is_zero();
    }
};

/// Solves 2 <^a v (x) nabla_{_a u} z, g> = K(u, v, z) for the frame table:
/// nabla_{e_a} e_c = sharp(1/2 sum_i w^i . K(^b e_a (x) _b e_i (x) e_c)).
inline LCResult levi_civita(const ModuleContext& ctx, const Metric& m) {
    const int n = ctx.rank();
    const GaussianRational half(1, 2);
    Connection conn = Connection::zero(ctx);
    for (int a = 1; a <= n; ++a)
        for (int c = 1; c <= n; ++c) {
            std::map<std::vector<Leg>, AlgebraElement> rows;
            for (int i = 1; i <= n; ++i) {
                AlgebraElement k = ctx.zero_elem();
                for (const auto& [words, w] : ctx.alg.R_inv.terms) {
                    TensorField ua = word_symmetry_act(ctx, words[0], ctx.basis_vector(a));
                    if (ua.is_zero()) continue;
                    TensorField ei = word_symmetry_act(ctx, words[1], ctx.basis_vector(i));
                    if (ei.is_zero()) continue;
                    k += koszul(ctx, m, ua, ei, ctx.basis_vector(c)).scaled(w);
                }
                k = k.scaled(half);
                if (!k.is_zero()) rows[{form_leg(i)}] = k;
            }
            if (!rows.empty()) conn.set(a, c, metric_sharp(ctx, m, from_right_coefficients(ctx, rows)));
        }
    LCResult res;
    res.connection = conn;
    res.torsion_data = torsion(ctx, conn);
    res.metric_residual = right_conn_apply(ctx, lift_covariant(ctx, conn, 2), m.g);
    const auto sz = static_cast<std::size_t>(n);
    res.koszul_table.assign(sz, std::vector<std::vector<AlgebraElement>>(sz, std::vector<AlgebraElement>(sz, ctx.zero_elem())));
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            for (int k = 1; k <= n; ++k)
                res.koszul_table[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1]
                                [static_cast<std::size_t>(k) - 1] =
                    koszul(ctx, m, ctx.basis_vector(i), ctx.basis_vector(j), ctx.basis_vector(k));
    return res;
}

/// Braided evaluation <theta, s>' : evaluate after braiding the pair.
inline AlgebraElement primed_eval(const ModuleContext& ctx, const TensorField& theta, const TensorField& s) {
    AlgebraElement out = ctx.zero_elem();
    for (const auto& [words, w] : ctx.alg.R_inv.terms) {
        TensorField s2 = word_symmetry_act(ctx, words[0], s);
        if (s2.is_zero()) continue;
        TensorField th2 = word_symmetry_act(ctx, words[1], theta);
        if (th2.is_zero()) continue;
        out += pair(ctx, s2, th2).as_scalar().scaled(w);
    }
    return out;
}

/// Ricci table: the braided trace of the curvature,
/// Ric(e_a, e_b) = sum_i <w^i, R(e_i, e_a, e_b)>'.
inline std::vector<std::vector<AlgebraElement>> ricci(const ModuleContext& ctx, const Connection& c) {
    const int n = ctx.rank();
    const auto sz = static_cast<std::size_t>(n);
    CurvatureData data = curvature_sq(ctx, c);
    std::vector<std::vector<AlgebraElement>> out(sz, std::vector<AlgebraElement>(sz, ctx.zero_elem()));
    for (int a = 1; a <= n; ++a)
        for (int b = 1; b <= n; ++b)
            for (int i = 1; i <= n; ++i) {
                TensorField rf = ctx.zero_field(0, 1);
                for (int l = 1; l <= n; ++l) {
                    const auto& co = data.coeff[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(a) - 1]
                                               [static_cast<std::size_t>(b) - 1][static_cast<std::size_t>(l) - 1];
                    if (!co.is_zero()) rf.add_term({vec_leg(l)}, co);
                }
                if (rf.is_zero()) continue;
                out[static_cast<std::size_t>(a) - 1][static_cast<std::size_t>(b) - 1] +=
                    primed_eval(ctx, ctx.basis_form(i), rf);
            }
    return out;
}

/// Result of the proportionality test Ric = lambda . <- (x) -, g>.
struct EinsteinResult {
    bool proportional = false;
    Series lambda;     // valid when proportional (and reported otherwise as the candidate)
    int bad_i = 0, bad_j = 0; // 1-based first violating pair when not proportional
};

inline EinsteinResult einstein_check(const ModuleContext& ctx, const Metric& m,
                                     const std::vector<std::vector<AlgebraElement>>& ric) {
    const int n = ctx.rank();
    const BasisMonomial unit(ctx.kind(), std::vector<int>(static_cast<std::size_t>(ctx.dim()), 0));
    EinsteinResult res;
    res.lambda = Series::zero(ctx.order());
    bool found = false;
    for (int i = 0; i < n && !found; ++i)
        for (int j = 0; j < n && !found; ++j) {
            auto it = m.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].terms.find(unit);
            if (it == m.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].terms.end() ||
                !it->second.is_unit())
                continue;
            Series r = Series::zero(ctx.order());
            auto rit = ric[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].terms.find(unit);
            if (rit != ric[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].terms.end()) r = rit->second;
            res.lambda = r * series_invert(it->second);
            found = true;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (ric[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
                m.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].scaled(res.lambda))
                continue;
            res.proportional = false;
            res.bad_i = i + 1;
            res.bad_j = j + 1;
            return res;
        }
    res.proportional = true;
    return res;
}

} // namespace braidgeo
