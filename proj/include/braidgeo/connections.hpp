#pragma once

#include <braidgeo/calculus.hpp>

#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace braidgeo {

/**
 * Left connection on vector fields, stored through its values on the frame:
 * entry (i, j) holds the vector field appearing in
 *
 *   nabla e_j = sum_i w^i (x) s_ij,
 *
 * equivalently s_ij = nabla_{e_i} e_j.  Everything else (the degree-one
 * extension to form-valued fields, duals, lifts to tensor powers, curvature
 * and torsion) is derived from this table.  The space of connections is
 * affine: adding a frame table of vector fields to an existing connection
 * yields another connection.
 */
struct Connection {
    std::vector<std::vector<TensorField>> s; // [i-1][j-1], each a (0,1) field

    static Connection zero(const ModuleContext& ctx) {
        Connection c;
        c.s.assign(static_cast<std::size_t>(ctx.rank()),
                   std::vector<TensorField>(static_cast<std::size_t>(ctx.rank()), ctx.zero_field(0, 1)));
        return c;
    }

    const TensorField& christoffel(int i, int j) const {
        return s[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1];
    }

    void set(int i, int j, TensorField v) {
        if (v.p != 0 || v.q != 1) throw std::invalid_argument("connection entries must be vector fields");
        s[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1] = std::move(v);
    }

    friend Connection operator+(const Connection& a, const Connection& b) {
        Connection r = a;
        for (std::size_t i = 0; i < r.s.size(); ++i)
            for (std::size_t j = 0; j < r.s[i].size(); ++j) r.s[i][j] += b.s[i][j];
        return r;
    }

    friend Connection operator-(const Connection& a, const Connection& b) {
        Connection r = a;
        for (std::size_t i = 0; i < r.s.size(); ++i)
            for (std::size_t j = 0; j < r.s[i].size(); ++j) r.s[i][j] -= b.s[i][j];
        return r;
    }

    friend bool operator==(const Connection& a, const Connection& b) { return a.s == b.s; }
};

/// nabla e_j in its one-form expansion, a (1,1) field.
inline TensorField connection_form(const ModuleContext& ctx, const Connection& c, int j) {
    TensorField out = ctx.zero_field(1, 1);
    for (int i = 1; i <= ctx.rank(); ++i) {
        const TensorField& sij = c.christoffel(i, j);
        if (sij.is_zero()) continue;
        out += tensor(ctx, ctx.basis_form(i), sij);
    }
    return out;
}

namespace detail {

/// theta ^ sigma for a form theta and a vector-valued form sigma: the wedge
/// acts on the form block while the vector legs of sigma ride along on the
/// right (they sit outside every braiding the wedge performs).
inline TensorField wedge_vector(const ModuleContext& ctx, const TensorField& th, const TensorField& sig) {
    if (th.q != 0) throw std::invalid_argument("left wedge factor must be a pure form");
    TensorField out = ctx.zero_field(th.p + sig.p, sig.q);
    out.antisym = false;
    for (const auto& [key, c] : sig.terms) {
        TensorField front = ctx.zero_field(sig.p, 0);
        front.antisym = true;
        std::vector<Leg> fkey(key.begin(), key.begin() + sig.p);
        front.add_term(std::move(fkey), c);
        TensorField w = wedge(ctx, th, front);
        std::vector<Leg> tail(key.begin() + sig.p, key.end());
        for (const auto& [wk, wc] : w.terms) {
            std::vector<Leg> full = wk;
            full.insert(full.end(), tail.begin(), tail.end());
            out.add_term(std::move(full), wc);
        }
    }
    return out;
}

} // namespace detail

/**
 * Degree-one extension of the connection to vector-valued forms:
 * on Vect the Leibniz rule nabla(a . e_j) = da (x) e_j + a . nabla e_j, and on
 * Omega^k (x) Vect the rule nabla(theta (x) s) = dtheta (x) s
 * + (-1)^k theta ^ nabla s applied to the wedge presentation of every stored
 * term (with the 1/k! normalization that presentation carries).
 */
inline TensorField nabla_tilde(const ModuleContext& ctx, const Connection& c, const TensorField& t) {
    if (t.q != 1) throw std::invalid_argument("connection acts on vector-valued forms");
    if (t.p > ctx.rank()) throw std::invalid_argument("form degree exceeds the frame rank");
    TensorField out = ctx.zero_field(t.p + 1, 1);
    if (t.p == 0) {
        for (const auto& [key, a] : t.terms) {
            const int j = key[0].idx;
            out += tensor(ctx, ext_d(ctx, ctx.scalar_field(a)), ctx.basis_vector(j));
            out += module_scale(ctx, a, connection_form(ctx, c, j));
        }
        return out;
    }
    const GaussianRational norm(1, detail::factorial(t.p));
    for (const auto& [key, a] : t.terms) {
        const int j = key.back().idx;
        TensorField theta = ctx.scalar_field(a);
        for (int m = 0; m < t.p; ++m) theta = wedge(ctx, theta, ctx.basis_form(key[static_cast<std::size_t>(m)].idx));
        TensorField piece = tensor(ctx, ext_d(ctx, theta), ctx.basis_vector(j));
        TensorField hooked = detail::wedge_vector(ctx, theta, connection_form(ctx, c, j));
        piece += (t.p % 2 == 0) ? hooked : -hooked;
        out += piece.scaled(norm);
    }
    return out;
}

namespace detail {

/**
 * Adjoint action of a symmetry word on an operator, evaluated on a field:
 * for a single primitive generator ad_Z(L) = Z |> . L - L . Z |>, and a word
 * acts by iterating one letter at a time (the generators commute, so the
 * order does not matter and the two one-sided adjoint actions agree).
 */
template <class Base>
inline TensorField word_adjoint(const ModuleContext& ctx, const SymmetryWord& w, const Base& base,
                                const TensorField& t) {
    for (int a = 0; a < w.gens(); ++a)
        if (w.e[static_cast<std::size_t>(a)] > 0) {
            SymmetryWord w2 = w;
            --w2.e[static_cast<std::size_t>(a)];
            return symmetry_act(ctx, a + 1, word_adjoint(ctx, w2, base, t)) -
                   word_adjoint(ctx, w2, base, symmetry_act(ctx, a + 1, t));
        }
    return base(t);
}

} // namespace detail

/**
 * Covariant derivative along a vector field u.  On scalars it is the vector
 * field action, on Vect it is i_u nabla, on Omega (x) Vect it is
 * i_u nabla + nabla i_u, and on higher contravariant powers the braided
 * Leibniz rule over the leading tensor factor:
 *
 *   nabla_u (v (x) z) = sum over the braiding of
 *       i_u (adj nabla)(v) (x) (acted z)  +  (acted v) (x) nabla_{acted u} z.
 */
inline TensorField cov_deriv(const ModuleContext& ctx, const Connection& c, const TensorField& u,
                             const TensorField& t) {
    if (u.p != 0 || u.q != 1) throw std::invalid_argument("derivative direction must be a vector field");
    if (t.p == 0 && t.q == 0) return ctx.scalar_field(vf_apply(ctx, u, t.as_scalar()));
    if (t.q == 0) throw std::invalid_argument("covariant slots present: use the dual connection instead");
    if (t.q == 1) {
        TensorField r = inner(ctx, u, nabla_tilde(ctx, c, t));
        if (t.p > 0) r += nabla_tilde(ctx, c, inner(ctx, u, t));
        return r;
    }
    if (t.p != 0) throw std::invalid_argument("covariant slots present: use the dual connection instead");
    TensorField out = ctx.zero_field(0, t.q);
    const auto base = [&](const TensorField& x) { return nabla_tilde(ctx, c, x); };
    for (const auto& [key, a] : t.terms) {
        TensorField v = ctx.zero_field(0, 1);
        v.add_term({key[0]}, a);
        TensorField z = ctx.zero_field(0, t.q - 1);
        z.add_term(std::vector<Leg>(key.begin() + 1, key.end()), ctx.unit_elem());
        for (const auto& [words, w] : ctx.alg.R_inv.terms) {
            TensorField z2 = word_symmetry_act(ctx, words[1], z);
            if (!z2.is_zero()) {
                TensorField dv = detail::word_adjoint(ctx, words[0], base, v);
                if (!dv.is_zero()) out += tensor(ctx, inner(ctx, u, dv), z2).scaled(w);
            }
            TensorField v2 = word_symmetry_act(ctx, words[0], v);
            if (v2.is_zero()) continue;
            TensorField u2 = word_symmetry_act(ctx, words[1], u);
            if (u2.is_zero()) continue;
            out += tensor(ctx, v2, cov_deriv(ctx, c, u2, z)).scaled(w);
        }
    }
    return out;
}

/**
 * Residual of the braided interchange of covariant derivative and insertion,
 *
 *   nabla_u i_v - sum i_{acted v} nabla_{acted u} - i_{[u, v]},
 *
 * evaluated on one vector-valued form sample; identically zero for every
 * connection.
 */
inline TensorField cartan_relation_residual(const ModuleContext& ctx, const Connection& c, const TensorField& u,
                                            const TensorField& v, const TensorField& sigma) {
    if (sigma.p < 1 || sigma.q != 1)
        throw std::invalid_argument("sample must be a vector-valued form of positive degree");
    TensorField r = cov_deriv(ctx, c, u, inner(ctx, v, sigma));
    for (const auto& [words, w] : ctx.alg.R_inv.terms) {
        TensorField v2 = word_symmetry_act(ctx, words[0], v);
        if (v2.is_zero()) continue;
        TensorField u2 = word_symmetry_act(ctx, words[1], u);
        if (u2.is_zero()) continue;
        r -= inner(ctx, v2, cov_deriv(ctx, c, u2, sigma)).scaled(w);
    }
    r -= inner(ctx, bracket(ctx, u, v), sigma);
    return r;
}

inline std::vector<TensorField> cartan_relation_check(const ModuleContext& ctx, const Connection& c,
                                                      const TensorField& u, const TensorField& v,
                                                      const std::vector<TensorField>& samples) {
    std::vector<TensorField> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(cartan_relation_residual(ctx, c, u, v, s));
    return out;
}

/// Right module action t . a: the coefficient merges from the right and is
/// then carried back to the left through the braiding.
inline TensorField right_scale(const ModuleContext& ctx, const TensorField& t, const AlgebraElement& a) {
    TensorField out = ctx.zero_field(t.p, t.q);
    out.antisym = t.antisym;
    for (const auto& [key, c] : t.terms) {
        std::vector<RawFactor> raw;
        raw.reserve(key.size() + 2);
        raw.push_back(RawFactor::c(c));
        for (const Leg& l : key) raw.push_back(RawFactor::l(l));
        raw.push_back(RawFactor::c(a));
        out += left_normalize(ctx, raw);
    }
    return out;
}

/**
 * Curvature in frame components.  coeff[i-1][j-1][k-1][l-1] is the l-th frame
 * coefficient of R(e_i, e_j, e_k), and
 *
 *   two_form[k-1][l-1] = -1/2 sum_{i,j} (w^j ^ w^i) . coeff(i, j, k, l)
 *
 * packages the same data as a matrix of two-forms.
 */
struct CurvatureData {
    std::vector<std::vector<std::vector<std::vector<AlgebraElement>>>> coeff;
    std::vector<std::vector<TensorField>> two_form;
};

/// R(u, v, s) as the braided commutator of covariant derivatives minus the
/// derivative along the bracket.
inline TensorField curvature_comm(const ModuleContext& ctx, const Connection& c, const TensorField& u,
                                  const TensorField& v, const TensorField& s) {
    TensorField r = cov_deriv(ctx, c, u, cov_deriv(ctx, c, v, s));
    for (const auto& [words, w] : ctx.alg.R_inv.terms) {
        TensorField v2 = word_symmetry_act(ctx, words[0], v);
        if (v2.is_zero()) continue;
        TensorField u2 = word_symmetry_act(ctx, words[1], u);
        if (u2.is_zero()) continue;
        r -= cov_deriv(ctx, c, v2, cov_deriv(ctx, c, u2, s)).scaled(w);
    }
    r -= cov_deriv(ctx, c, bracket(ctx, u, v), s);
    return r;
}

/// Curvature from the square of the degree-one extension: the components are
/// read off by hooking frame pairs into nabla(nabla e_k) and flipping sign.
inline CurvatureData curvature_sq(const ModuleContext& ctx, const Connection& c) {
    const int n = ctx.rank();
    const auto sz = static_cast<std::size_t>(n);
    CurvatureData data;
    data.coeff.assign(sz, std::vector<std::vector<std::vector<AlgebraElement>>>(
                              sz, std::vector<std::vector<AlgebraElement>>(
                                      sz, std::vector<AlgebraElement>(sz, ctx.zero_elem()))));
    TensorField zf2 = ctx.zero_field(2, 0);
    zf2.antisym = true;
    data.two_form.assign(sz, std::vector<TensorField>(sz, zf2));
    const GaussianRational half(1, 2);
    for (int k = 1; k <= n; ++k) {
        TensorField sq = nabla_tilde(ctx, c, nabla_tilde(ctx, c, ctx.basis_vector(k)));
        for (int j = 1; j <= n; ++j) {
            TensorField hooked = inner(ctx, ctx.basis_vector(j), sq);
            for (int i = 1; i <= n; ++i) {
                TensorField rf = -inner(ctx, ctx.basis_vector(i), hooked);
                for (int l = 1; l <= n; ++l) {
                    auto it = rf.terms.find({vec_leg(l)});
                    if (it != rf.terms.end())
                        data.coeff[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1]
                                  [static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(l) - 1] = it->second;
                }
            }
        }
        for (int l = 1; l <= n; ++l) {
            TensorField tf = zf2;
            for (int i = 1; i <= n; ++i)
                for (int j = 1; j <= n; ++j) {
                    const AlgebraElement& co = data.coeff[static_cast<std::size_t>(i) - 1]
                                                          [static_cast<std::size_t>(j) - 1]
                                                          [static_cast<std::size_t>(k) - 1]
                                                          [static_cast<std::size_t>(l) - 1];
                    if (co.is_zero()) continue;
                    TensorField wji = wedge(ctx, ctx.basis_form(j), ctx.basis_form(i));
                    tf -= right_scale(ctx, wji, co).scaled(half);
                }
            data.two_form[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(l) - 1] = tf;
        }
    }
    return data;
}

/// T(u, v) as the braided-antisymmetrized covariant derivative minus the
/// bracket.
inline TensorField torsion_pointwise(const ModuleContext& ctx, const Connection& c, const TensorField& u,
                                     const TensorField& v) {
    TensorField r = cov_deriv(ctx, c, u, v);
    for (const auto& [words, w] : ctx.alg.R_inv.terms) {
        TensorField v2 = word_symmetry_act(ctx, words[0], v);
        if (v2.is_zero()) continue;
        TensorField u2 = word_symmetry_act(ctx, words[1], u);
        if (u2.is_zero()) continue;
        r -= cov_deriv(ctx, c, v2, u2).scaled(w);
    }
    r -= bracket(ctx, u, v);
    return r;
}

/// Torsion in frame components, packaged like the curvature:
/// coeff[i-1][j-1][l-1] is the l-th frame coefficient of T(e_i, e_j) and
/// two_form[l-1] = -1/2 sum (w^j ^ w^i) . coeff(i, j, l).
struct TorsionData {
    std::vector<std::vector<std::vector<AlgebraElement>>> coeff;
    std::vector<TensorField> two_form;
};

/// Torsion extracted from nabla applied to the canonical invariant element;
/// each frame pair is cross-checked against the pointwise formula and a
/// disagreement throws.
inline TorsionData torsion(const ModuleContext& ctx, const Connection& c) {
    const int n = ctx.rank();
    const auto sz = static_cast<std::size_t>(n);
    TensorField nI = nabla_tilde(ctx, c, coevaluation(ctx));
    TorsionData data;
    data.coeff.assign(sz, std::vector<std::vector<AlgebraElement>>(sz, std::vector<AlgebraElement>(sz, ctx.zero_elem())));
    TensorField zf2 = ctx.zero_field(2, 0);
    zf2.antisym = true;
    data.two_form.assign(sz, zf2);
    for (int j = 1; j <= n; ++j) {
        TensorField hooked = inner(ctx, ctx.basis_vector(j), nI);
        for (int i = 1; i <= n; ++i) {
            TensorField tf = -inner(ctx, ctx.basis_vector(i), hooked);
            if (!(tf == torsion_pointwise(ctx, c, ctx.basis_vector(i), ctx.basis_vector(j))))
                throw std::logic_error("torsion extraction disagrees with the pointwise formula");
            for (int l = 1; l <= n; ++l) {
                auto it = tf.terms.find({vec_leg(l)});
                if (it != tf.terms.end())
                    data.coeff[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1]
                              [static_cast<std::size_t>(l) - 1] = it->second;
            }
        }
    }
    const GaussianRational half(1, 2);
    for (int l = 1; l <= n; ++l) {
        TensorField tf = zf2;
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) {
                const AlgebraElement& co = data.coeff[static_cast<std::size_t>(i) - 1]
                                                      [static_cast<std::size_t>(j) - 1]
                                                      [static_cast<std::size_t>(l) - 1];
                if (co.is_zero()) continue;
                tf -= right_scale(ctx, wedge(ctx, ctx.basis_form(j), ctx.basis_form(i)), co).scaled(half);
            }
        data.two_form[static_cast<std::size_t>(l) - 1] = tf;
    }
    return data;
}

/**
 * Connection one-forms of the dual right connection on forms, fixed by
 * d<e_j, w^l> = 0:  nabla w^l = w^k (x) (result[k-1][l-1]) with
 * result[j-1][l-1] = - sum_i w^i . <s_ij, w^l>.
 */
inline std::vector<std::vector<TensorField>> dual_connection(const ModuleContext& ctx, const Connection& c) {
    const int n = ctx.rank();
    std::vector<std::vector<TensorField>> out(static_cast<std::size_t>(n),
                                              std::vector<TensorField>(static_cast<std::size_t>(n),
                                                                       ctx.zero_field(1, 0)));
    for (int j = 1; j <= n; ++j)
        for (int l = 1; l <= n; ++l) {
            std::map<std::vector<Leg>, AlgebraElement> rows;
            for (int i = 1; i <= n; ++i) {
                const TensorField& sij = c.christoffel(i, j);
                auto it = sij.terms.find({vec_leg(l)});
                if (it == sij.terms.end() || it->second.is_zero()) continue;
                rows[{form_leg(i)}] = -it->second;
            }
            if (!rows.empty())
                out[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1] =
                    from_right_coefficients(ctx, rows);
        }
    return out;
}

/// Rebuilds the connection on vector fields from dual one-forms by reading
/// d<e_j, w^l> = 0 the other way; composing with dual_connection round-trips
/// to the original table exactly.
inline Connection dual_to_connection(const ModuleContext& ctx, const std::vector<std::vector<TensorField>>& oneforms) {
    const int n = ctx.rank();
    Connection c = Connection::zero(ctx);
    for (int j = 1; j <= n; ++j)
        for (int l = 1; l <= n; ++l) {
            const TensorField& om = oneforms[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1];
            if (om.is_zero()) continue;
            auto rows = right_coefficient_form(ctx, om);
            for (int i = 1; i <= n; ++i) {
                auto it = rows.find({form_leg(i)});
                if (it == rows.end() || it->second.is_zero()) continue;
                TensorField add = ctx.zero_field(0, 1);
                add.add_term({vec_leg(l)}, -it->second);
                c.s[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1] += add;
            }
        }
    return c;
}

/**
 * Connection on a module of tensor words, stored through its values on the
 * basis words.  A left connection inserts the new form slot in front
 * (value shape (gp + 1, gq)); a right connection appends it at the back and
 * is kept for all-form modules only, where it arises as a dual.  Zero values
 * are never stored, so equal connections have equal tables.
 */
struct LeftConnection {
    int gp = 0, gq = 0;
    std::map<std::vector<Leg>, TensorField> gamma;
};

struct RightConnection {
    int gp = 0;
    std::map<std::vector<Leg>, TensorField> gamma;
};

inline LeftConnection as_left(const ModuleContext& ctx, const Connection& c) {
    LeftConnection lc;
    lc.gp = 0;
    lc.gq = 1;
    for (int j = 1; j <= ctx.rank(); ++j) {
        TensorField g = connection_form(ctx, c, j);
        if (!g.is_zero()) lc.gamma[{vec_leg(j)}] = std::move(g);
    }
    return lc;
}

/// Packages dual one-forms as a right connection on the form module:
/// nabla w^l = sum_k w^k (x) oneforms[k-1][l-1].
inline RightConnection as_right(const ModuleContext& ctx, const std::vector<std::vector<TensorField>>& oneforms) {
    RightConnection rc;
    rc.gp = 1;
    for (int l = 1; l <= ctx.rank(); ++l) {
        TensorField val = ctx.zero_field(2, 0);
        for (int k = 1; k <= ctx.rank(); ++k) {
            const TensorField& om = oneforms[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(l) - 1];
            if (om.is_zero()) continue;
            val += tensor(ctx, ctx.basis_form(k), om);
        }
        if (!val.is_zero()) rc.gamma[{form_leg(l)}] = std::move(val);
    }
    return rc;
}

/// Left Leibniz application: nabla(sum a_J . b_J) = sum da_J (x) b_J + a_J . nabla b_J.
inline TensorField left_conn_apply(const ModuleContext& ctx, const LeftConnection& c, const TensorField& t) {
    if (t.p != c.gp || t.q != c.gq) throw std::invalid_argument("field does not live in the connection's module");
    TensorField out = ctx.zero_field(c.gp + 1, c.gq);
    for (const auto& [key, a] : t.terms) {
        TensorField word = ctx.zero_field(c.gp, c.gq);
        word.add_term(key, ctx.unit_elem());
        out += tensor(ctx, ext_d(ctx, ctx.scalar_field(a)), word);
        auto it = c.gamma.find(key);
        if (it != c.gamma.end()) out += module_scale(ctx, a, it->second);
    }
    return out;
}

/// Right Leibniz application through the right-coefficient presentation:
/// nabla(sum b_J . a_J) = sum nabla(b_J) . a_J + b_J (x) da_J.
inline TensorField right_conn_apply(const ModuleContext& ctx, const RightConnection& c, const TensorField& t) {
    if (t.p != c.gp || t.q != 0) throw std::invalid_argument("field does not live in the connection's module");
    TensorField out = ctx.zero_field(c.gp + 1, 0);
    for (const auto& [key, a] : right_coefficient_form(ctx, t)) {
        auto it = c.gamma.find(key);
        if (it != c.gamma.end()) out += right_scale(ctx, it->second, a);
        TensorField da = ext_d(ctx, ctx.scalar_field(a));
        for (const auto& [dk, dc] : da.terms) {
            std::vector<RawFactor> raw;
            raw.reserve(key.size() + 2);
            for (const Leg& l : key) raw.push_back(RawFactor::l(l));
            raw.push_back(RawFactor::c(dc));
            raw.push_back(RawFactor::l(dk[0]));
            out += left_normalize(ctx, raw);
        }
    }
    return out;
}

namespace detail {

/// All basis words of a tensor module with gp form legs followed by gq vector
/// legs.
inline std::vector<std::vector<Leg>> module_words(const ModuleContext& ctx, int gp, int gq) {
    std::vector<std::vector<Leg>> out = {{}};
    for (int t = 0; t < gp + gq; ++t) {
        std::vector<std::vector<Leg>> next;
        for (const auto& w : out)
            for (int i = 1; i <= ctx.rank(); ++i) {
                auto w2 = w;
                w2.push_back(t < gp ? form_leg(i) : vec_leg(i));
                next.push_back(std::move(w2));
            }
        out = std::move(next);
    }
    return out;
}

/// tau_12 on b (x) (Omega (x) module'): braids the basis word b past the
/// leading one-form factor of each stored term; the remaining legs stay put.
inline TensorField braid_first_past(const ModuleContext& ctx, const std::vector<Leg>& word, int wp, int wq,
                                    const TensorField& sig) {
    TensorField out = ctx.zero_field(wp + sig.p, wq + sig.q);
    TensorField x = ctx.zero_field(wp, wq);
    x.add_term(word, ctx.unit_elem());
    for (const auto& [key, c] : sig.terms) {
        const std::vector<Leg> rest(key.begin() + 1, key.end());
        for (const auto& [words, w] : ctx.alg.R_inv.terms) {
            TensorField x2 = word_symmetry_act(ctx, words[1], x);
            if (x2.is_zero()) continue;
            std::vector<std::pair<AlgebraElement, Leg>> ys = {{c, key[0]}};
            for (int a = 0; a < words[0].gens() && !ys.empty(); ++a)
                for (int t = 0; t < words[0].e[static_cast<std::size_t>(a)] && !ys.empty(); ++t)
                    ys = ctx.gen_act_pairs(a + 1, ys);
            for (const auto& [cy, ly] : ys) {
                if (cy.is_zero()) continue;
                for (const auto& [kx, cx] : x2.terms) {
                    std::vector<RawFactor> raw;
                    raw.reserve(kx.size() + rest.size() + 3);
                    raw.push_back(RawFactor::c(cy));
                    raw.push_back(RawFactor::l(ly));
                    raw.push_back(RawFactor::c(cx));
                    for (const Leg& l : kx) raw.push_back(RawFactor::l(l));
                    for (const Leg& l : rest) raw.push_back(RawFactor::l(l));
                    out += left_normalize(ctx, raw).scaled(w);
                }
            }
        }
    }
    return out;
}

} // namespace detail

/**
 * Sum of two left connections, a left connection on the tensor product of
 * their modules:
 *
 *   nabla(b (x) b') = sum over the braiding of
 *       (adj nabla)(b) (x) (acted b')  +  tau_12(b (x) nabla' b').
 *
 * Both modules must be all-vector or all-form so the product module keeps the
 * block leg order.
 */
inline LeftConnection sum_left(const ModuleContext& ctx, const LeftConnection& A, const LeftConnection& B) {
    if (!((A.gp == 0 && B.gp == 0) || (A.gq == 0 && B.gq == 0)))
        throw std::invalid_argument("summands must be modules of the same block type");
    LeftConnection out;
    out.gp = A.gp + B.gp;
    out.gq = A.gq + B.gq;
    const auto wordsA = detail::module_words(ctx, A.gp, A.gq);
    const auto wordsB = detail::module_words(ctx, B.gp, B.gq);
    const auto baseA = [&](const TensorField& x) { return left_conn_apply(ctx, A, x); };
    for (const auto& I : wordsA) {
        TensorField bI = ctx.zero_field(A.gp, A.gq);
        bI.add_term(I, ctx.unit_elem());
        for (const auto& J : wordsB) {
            TensorField bJ = ctx.zero_field(B.gp, B.gq);
            bJ.add_term(J, ctx.unit_elem());
            TensorField val = ctx.zero_field(out.gp + 1, out.gq);
            for (const auto& [words, w] : ctx.alg.R_inv.terms) {
                TensorField bJ2 = word_symmetry_act(ctx, words[1], bJ);
                if (bJ2.is_zero()) continue;
                TensorField dA = detail::word_adjoint(ctx, words[0], baseA, bI);
                if (dA.is_zero()) continue;
                val += tensor(ctx, dA, bJ2).scaled(w);
            }
            auto itJ = B.gamma.find(J);
            if (itJ != B.gamma.end()) val += detail::braid_first_past(ctx, I, A.gp, A.gq, itJ->second);
            std::vector<Leg> keyIJ = I;
            keyIJ.insert(keyIJ.end(), J.begin(), J.end());
            if (!val.is_zero()) out.gamma[std::move(keyIJ)] = std::move(val);
        }
    }
    return out;
}

/**
 * Sum of two right connections on form modules:
 *
 *   nabla(b (x) b') = tau_23(nabla(b) (x) b') + sum over the braiding of
 *       (acted b) (x) (adj nabla')(b').
 */
inline RightConnection sum_right(const ModuleContext& ctx, const RightConnection& A, const RightConnection& B) {
    RightConnection out;
    out.gp = A.gp + B.gp;
    const auto wordsA = detail::module_words(ctx, A.gp, 0);
    const auto wordsB = detail::module_words(ctx, B.gp, 0);
    const auto baseB = [&](const TensorField& x) { return right_conn_apply(ctx, B, x); };
    for (const auto& I : wordsA) {
        TensorField bI = ctx.zero_field(A.gp, 0);
        bI.add_term(I, ctx.unit_elem());
        for (const auto& J : wordsB) {
            TensorField bJ = ctx.zero_field(B.gp, 0);
            bJ.add_term(J, ctx.unit_elem());
            TensorField val = ctx.zero_field(out.gp + 1, 0);
            auto itI = A.gamma.find(I);
            if (itI != A.gamma.end()) {
                TensorField t = tensor(ctx, itI->second, bJ);
                for (int s = A.gp; s < A.gp + B.gp; ++s) t = braid(ctx, t, s);
                val += t;
            }
            for (const auto& [words, w] : ctx.alg.R_inv.terms) {
                TensorField bI2 = word_symmetry_act(ctx, words[0], bI);
                if (bI2.is_zero()) continue;
                TensorField dB = detail::word_adjoint(ctx, words[1], baseB, bJ);
                if (dB.is_zero()) continue;
                val += tensor(ctx, bI2, dB).scaled(w);
            }
            std::vector<Leg> keyIJ = I;
            keyIJ.insert(keyIJ.end(), J.begin(), J.end());
            if (!val.is_zero()) out.gamma[std::move(keyIJ)] = std::move(val);
        }
    }
    return out;
}

/**
 * Dual of a left connection on a contravariant tensor module: the right
 * connection on the reversed dual form words fixed by d<b_I, W> = 0, namely
 * dual(W) = - sum_I (dual word of I) (x) <nabla b_I, W>.
 */
inline RightConnection dual_left(const ModuleContext& ctx, const LeftConnection& c) {
    if (c.gp != 0) throw std::invalid_argument("dual lift expects a contravariant module");
    const int q = c.gq;
    RightConnection out;
    out.gp = q;
    for (const auto& W : detail::module_words(ctx, q, 0)) {
        TensorField val = ctx.zero_field(q + 1, 0);
        for (const auto& [I, g] : c.gamma) {
            for (const auto& [key, cc] : g.terms) {
                bool hit = true;
                for (int u = 0; u < q && hit; ++u)
                    hit = key[static_cast<std::size_t>(q - u)].idx == W[static_cast<std::size_t>(u)].idx;
                if (!hit) continue;
                std::vector<RawFactor> raw;
                raw.reserve(static_cast<std::size_t>(q) + 2);
                for (int u = q - 1; u >= 0; --u) raw.push_back(RawFactor::l(form_leg(I[static_cast<std::size_t>(u)].idx)));
                raw.push_back(RawFactor::c(-cc));
                raw.push_back(RawFactor::l(key[0]));
                val += left_normalize(ctx, raw);
            }
        }
        if (!val.is_zero()) out.gamma[W] = std::move(val);
    }
    return out;
}

/// Lift of the connection to contravariant tensor powers by iterated sums.
inline LeftConnection lift_contravariant(const ModuleContext& ctx, const Connection& c, int q) {
    LeftConnection cur = as_left(ctx, c);
    for (int t = 1; t < q; ++t) cur = sum_left(ctx, as_left(ctx, c), cur);
    return cur;
}

/// Lift of the dual connection to covariant tensor powers by iterated sums.
inline RightConnection lift_covariant(const ModuleContext& ctx, const Connection& c, int k) {
    RightConnection base = as_right(ctx, dual_connection(ctx, c));
    RightConnection cur = base;
    for (int t = 1; t < k; ++t) cur = sum_right(ctx, base, cur);
    return cur;
}

/**
 * Residuals of the two structure equations in the frame components,
 *
 *   d w^l    + w^j ^ (omega_j^l)   - (torsion two-form)^l     per l,
 *   d omega_k^l + omega_k^j ^ omega_j^l + (curvature two-form)_k^l   per (k, l),
 *
 * all identically zero.
 */
struct StructureReport {
    std::vector<TensorField> torsion_eq;   // indexed by l
    std::vector<TensorField> curvature_eq; // row-major (k, l)

    bool all_zero() const {
        for (const auto& t : torsion_eq)
            if (!t.is_zero()) return false;
        for (const auto& t : curvature_eq)
            if (!t.is_zero()) return false;
        return true;
    }
};

inline StructureReport cartan_structure_check(const ModuleContext& ctx, const Connection& c) {
    const int n = ctx.rank();
    const auto om = dual_connection(ctx, c);
    const TorsionData T = torsion(ctx, c);
    const CurvatureData R = curvature_sq(ctx, c);
    StructureReport rep;
    for (int l = 1; l <= n; ++l) {
        TensorField res = ext_d(ctx, ctx.basis_form(l));
        for (int j = 1; j <= n; ++j)
            res += wedge(ctx, ctx.basis_form(j), om[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1]);
        res -= T.two_form[static_cast<std::size_t>(l) - 1];
        rep.torsion_eq.push_back(std::move(res));
    }
    for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) {
            TensorField res = ext_d(ctx, om[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(l) - 1]);
            for (int j = 1; j <= n; ++j)
                res += wedge(ctx, om[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(j) - 1],
                             om[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1]);
            res += R.two_form[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(l) - 1];
            rep.curvature_eq.push_back(std::move(res));
        }
    return rep;
}

/**
 * Residuals of the two differential consequences of the structure equations,
 *
 *   d R_k^l + omega_k^j ^ R_j^l - R_k^j ^ omega_j^l          per (k, l),
 *   d T^l - T^j ^ omega_j^l - w^j ^ R_j^l                    per l,
 *
 * all identically zero.
 */
struct BianchiReport {
    std::vector<TensorField> curvature_eq; // row-major (k, l)
    std::vector<TensorField> torsion_eq;   // indexed by l

    bool all_zero() const {
        for (const auto& t : curvature_eq)
            if (!t.is_zero()) return false;
        for (const auto& t : torsion_eq)
            if (!t.is_zero()) return false;
        return true;
    }
};

inline BianchiReport bianchi_check(const ModuleContext& ctx, const Connection& c) {
    const int n = ctx.rank();
    const auto om = dual_connection(ctx, c);
    const TorsionData T = torsion(ctx, c);
    const CurvatureData R = curvature_sq(ctx, c);
    BianchiReport rep;
    for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) {
            TensorField res = ext_d(ctx, R.two_form[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(l) - 1]);
            for (int j = 1; j <= n; ++j) {
                res += wedge(ctx, om[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(j) - 1],
                             R.two_form[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1]);
                res -= wedge(ctx, R.two_form[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(j) - 1],
                             om[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1]);
            }
            rep.curvature_eq.push_back(std::move(res));
        }
    for (int l = 1; l <= n; ++l) {
        TensorField res = ext_d(ctx, T.two_form[static_cast<std::size_t>(l) - 1]);
        for (int j = 1; j <= n; ++j) {
            res -= wedge(ctx, T.two_form[static_cast<std::size_t>(j) - 1],
                         om[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1]);
            res -= wedge(ctx, ctx.basis_form(j), R.two_form[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(l) - 1]);
        }
        rep.torsion_eq.push_back(std::move(res));
    }
    return rep;
}

} // namespace braidgeo
