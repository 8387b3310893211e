#pragma once

#include <braidgeo/symmetry.hpp>

#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace braidgeo {

enum class AlgebraKind { polynomial, torus };

/**
 * Classical basis element: a monomial x^e (exponents >= 0) or a torus mode
 * U_k (k integer).  The all-zero index is the unit in both presentations.
 */
struct BasisMonomial {
    AlgebraKind kind = AlgebraKind::polynomial;
    std::vector<int> index;

    BasisMonomial() = default;
    BasisMonomial(AlgebraKind k, std::vector<int> idx) : kind(k), index(std::move(idx)) {
        if (kind == AlgebraKind::polynomial)
            for (int e : index)
                if (e < 0) throw std::invalid_argument("polynomial exponent must be nonnegative");
    }

    static BasisMonomial unit(AlgebraKind k, int dim) {
        return BasisMonomial(k, std::vector<int>(static_cast<std::size_t>(dim)));
    }

    bool is_unit() const {
        for (int e : index)
            if (e != 0) return false;
        return true;
    }
    int total_weight() const {
        int d = 0;
        for (int e : index) d += e < 0 ? -e : e;
        return d;
    }

    friend bool operator==(const BasisMonomial& a, const BasisMonomial& b) {
        return a.kind == b.kind && a.index == b.index;
    }
    friend bool operator<(const BasisMonomial& a, const BasisMonomial& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.index < b.index;
    }

    std::string to_string() const {
        if (kind == AlgebraKind::torus) {
            if (is_unit()) return "1";
            std::ostringstream os;
            os << "U[";
            for (std::size_t j = 0; j < index.size(); ++j) {
                if (j) os << ",";
                os << index[j];
            }
            os << "]";
            return os.str();
        }
        std::string s;
        for (std::size_t j = 0; j < index.size(); ++j) {
            if (index[j] == 0) continue;
            if (!s.empty()) s += "*";
            s += "x" + std::to_string(j + 1);
            if (index[j] > 1) s += "^" + std::to_string(index[j]);
        }
        return s.empty() ? "1" : s;
    }
};

/// Finite sum of basis monomials with truncated-series coefficients.
struct AlgebraElement {
    AlgebraKind kind = AlgebraKind::polynomial;
    int dim = 0;
    int order = 0;
    std::map<BasisMonomial, Series> terms;

    AlgebraElement() = default;
    AlgebraElement(AlgebraKind k, int d, int N) : kind(k), dim(d), order(N) {}

    static AlgebraElement zero(AlgebraKind k, int d, int N) { return AlgebraElement(k, d, N); }
    static AlgebraElement from_series(AlgebraKind k, int d, const Series& s) {
        AlgebraElement r(k, d, s.order);
        r.add_term(BasisMonomial::unit(k, d), s);
        return r;
    }
    static AlgebraElement unit(AlgebraKind k, int d, int N) {
        return from_series(k, d, Series::one(N));
    }
    static AlgebraElement coordinate(int j, int d, int N) { // 1-based x_j
        if (j < 1 || j > d) throw std::invalid_argument("coordinate index out of range");
        std::vector<int> e(static_cast<std::size_t>(d));
        e[static_cast<std::size_t>(j) - 1] = 1;
        AlgebraElement r(AlgebraKind::polynomial, d, N);
        r.add_term(BasisMonomial(AlgebraKind::polynomial, std::move(e)), Series::one(N));
        return r;
    }
    static AlgebraElement mode(std::vector<int> k, int N) {
        int d = static_cast<int>(k.size());
        AlgebraElement r(AlgebraKind::torus, d, N);
        r.add_term(BasisMonomial(AlgebraKind::torus, std::move(k)), Series::one(N));
        return r;
    }

    void add_term(BasisMonomial m, const Series& s) {
        if (s.is_zero()) return;
        auto [it, fresh] = terms.emplace(std::move(m), s);
        if (!fresh) {
            it->second += s;
            if (it->second.is_zero()) terms.erase(it);
        }
    }

    bool is_zero() const { return terms.empty(); }

    friend bool operator==(const AlgebraElement& a, const AlgebraElement& b) {
        return a.kind == b.kind && a.dim == b.dim && a.order == b.order && a.terms == b.terms;
    }

    static void check_shape(const AlgebraElement& a, const AlgebraElement& b) {
        if (a.kind != b.kind || a.dim != b.dim)
            throw std::invalid_argument("algebra elements belong to different algebras");
        if (a.order != b.order)
            throw std::invalid_argument("algebra elements have different truncation orders");
    }

    friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
        check_shape(a, b);
        AlgebraElement r = a;
        for (const auto& [m, s] : b.terms) r.add_term(m, s);
        return r;
    }
    friend AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
        check_shape(a, b);
        AlgebraElement r = a;
        for (const auto& [m, s] : b.terms) r.add_term(m, -s);
        return r;
    }
    AlgebraElement operator-() const {
        AlgebraElement r(kind, dim, order);
        for (const auto& [m, s] : terms) r.add_term(m, -s);
        return r;
    }
    AlgebraElement& operator+=(const AlgebraElement& b) { return *this = *this + b; }
    AlgebraElement& operator-=(const AlgebraElement& b) { return *this = *this - b; }

    AlgebraElement scaled(const GaussianRational& c) const {
        AlgebraElement r(kind, dim, order);
        for (const auto& [m, s] : terms) r.add_term(m, s.scaled(c));
        return r;
    }
    AlgebraElement scaled(const Series& w) const {
        AlgebraElement r(kind, dim, order);
        for (const auto& [m, s] : terms) r.add_term(m, s * w);
        return r;
    }

    /// Lowest power of h dividing every coefficient (order+1 for zero).
    int h_valuation() const {
        int v = order + 1;
        for (const auto& [m, s] : terms)
            for (int k = 0; k <= order && k < v; ++k)
                if (!s.c[static_cast<std::size_t>(k)].is_zero()) v = k;
        return v;
    }

    std::string to_string() const {
        if (terms.empty()) return "0";
        std::vector<const std::pair<const BasisMonomial, Series>*> rows;
        rows.reserve(terms.size());
        for (const auto& t : terms) rows.push_back(&t);
        std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) {
            int wa = a->first.total_weight(), wb = b->first.total_weight();
            if (wa != wb) return wa > wb;
            return a->first.index < b->first.index;
        });
        std::string out;
        for (auto* row : rows) {
            if (!out.empty()) out += " + ";
            std::string mono = row->first.to_string();
            std::string coef = braidgeo::to_string(row->second);
            if (mono == "1") {
                out += coef;
            } else if (coef == "1") {
                out += mono;
            } else {
                bool wrap = coef.find(" + ") != std::string::npos;
                out += (wrap ? "(" + coef + ")" : coef) + "*" + mono;
            }
        }
        return out;
    }
};

/**
 * Presentation of the algebra together with the symmetry action: each Z_a
 * acts as a derivation.  Polynomial algebras record the value of Z_a on each
 * coordinate; torus algebras record the coefficients of the linear mode
 * eigenvalue Z_a |> U_k = (sum_j eigen[a][j] k_j) U_k.
 */
struct AlgebraSpec {
    AlgebraKind kind = AlgebraKind::polynomial;
    int dim = 0;
    int sym = 0;
    std::vector<std::vector<AlgebraElement>> derivation_values; // [sym][dim], polynomial
    std::vector<std::vector<GaussianRational>> eigen;           // [sym][dim], torus

    static AlgebraSpec coordinate_derivations(int dim, int order) {
        AlgebraSpec s;
        s.kind = AlgebraKind::polynomial;
        s.dim = dim;
        s.sym = dim;
        s.derivation_values.resize(static_cast<std::size_t>(dim));
        for (int a = 0; a < dim; ++a) {
            s.derivation_values[static_cast<std::size_t>(a)].reserve(static_cast<std::size_t>(dim));
            for (int j = 0; j < dim; ++j)
                s.derivation_values[static_cast<std::size_t>(a)].push_back(
                    a == j ? AlgebraElement::unit(AlgebraKind::polynomial, dim, order)
                           : AlgebraElement::zero(AlgebraKind::polynomial, dim, order));
        }
        return s;
    }

    static AlgebraSpec torus_phase_derivations(int dim) {
        AlgebraSpec s;
        s.kind = AlgebraKind::torus;
        s.dim = dim;
        s.sym = dim;
        s.eigen.assign(static_cast<std::size_t>(dim),
                       std::vector<GaussianRational>(static_cast<std::size_t>(dim)));
        for (int a = 0; a < dim; ++a) s.eigen[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = GaussianRational::i();
        return s;
    }
};

inline AlgebraElement classical_mul(const AlgebraElement& a, const AlgebraElement& b) {
    AlgebraElement::check_shape(a, b);
    AlgebraElement r(a.kind, a.dim, a.order);
    for (const auto& [ma, sa] : a.terms)
        for (const auto& [mb, sb] : b.terms) {
            Series s = sa * sb;
            if (s.is_zero()) continue;
            std::vector<int> idx(ma.index.size());
            for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = ma.index[j] + mb.index[j];
            r.add_term(BasisMonomial(a.kind, std::move(idx)), s);
        }
    return r;
}

/// Action of a single symmetry generator (1-based) as a derivation.
inline AlgebraElement generator_act(const AlgebraSpec& spec, int a, const AlgebraElement& x) {
    if (a < 1 || a > spec.sym) throw std::invalid_argument("symmetry generator index out of range");
    AlgebraElement out(x.kind, x.dim, x.order);
    if (spec.kind == AlgebraKind::torus) {
        for (const auto& [m, s] : x.terms) {
            GaussianRational lam;
            for (std::size_t j = 0; j < m.index.size(); ++j)
                lam += spec.eigen[static_cast<std::size_t>(a) - 1][j] * GaussianRational(m.index[j]);
            out.add_term(m, s.scaled(lam));
        }
        return out;
    }
    for (const auto& [m, s] : x.terms) {
        for (std::size_t j = 0; j < m.index.size(); ++j) {
            if (m.index[j] == 0) continue;
            BasisMonomial lower = m;
            lower.index[j] -= 1;
            AlgebraElement factor(x.kind, x.dim, x.order);
            factor.add_term(std::move(lower), s.scaled(GaussianRational(m.index[static_cast<std::size_t>(j)])));
            out += classical_mul(factor, spec.derivation_values[static_cast<std::size_t>(a) - 1][j]);
        }
    }
    return out;
}

inline AlgebraElement h_act(const AlgebraSpec& spec, const SymmetryWord& w, const AlgebraElement& x) {
    return apply_word(w, x, [&](int a, const AlgebraElement& y) { return generator_act(spec, a, y); });
}

/// Partial derivative with respect to x_j (1-based); polynomial algebras only.
inline AlgebraElement partial_derivative(const AlgebraElement& x, int j) {
    if (x.kind != AlgebraKind::polynomial)
        throw std::invalid_argument("partial derivatives require a polynomial algebra");
    if (j < 1 || j > x.dim) throw std::invalid_argument("coordinate index out of range");
    AlgebraElement out(x.kind, x.dim, x.order);
    for (const auto& [m, s] : x.terms) {
        int e = m.index[static_cast<std::size_t>(j) - 1];
        if (e == 0) continue;
        BasisMonomial lower = m;
        lower.index[static_cast<std::size_t>(j) - 1] -= 1;
        out.add_term(std::move(lower), s.scaled(GaussianRational(e)));
    }
    return out;
}

/// Sampled check that the generator actions pairwise commute.
inline bool actions_commute(const AlgebraSpec& spec, int order, int degree_bound) {
    if (spec.kind == AlgebraKind::torus) return true;
    std::vector<AlgebraElement> probes;
    probes.push_back(AlgebraElement::unit(spec.kind, spec.dim, order));
    for (int j = 1; j <= spec.dim; ++j) probes.push_back(AlgebraElement::coordinate(j, spec.dim, order));
    for (int d = 2; d <= degree_bound; ++d) {
        std::size_t base = probes.size();
        for (std::size_t t = base - static_cast<std::size_t>(spec.dim); t < base; ++t)
            for (int j = 1; j <= spec.dim; ++j)
                probes.push_back(classical_mul(probes[t], AlgebraElement::coordinate(j, spec.dim, order)));
    }
    for (int a = 1; a <= spec.sym; ++a)
        for (int b = a + 1; b <= spec.sym; ++b)
            for (const auto& p : probes)
                if (!(generator_act(spec, a, generator_act(spec, b, p)) -
                      generator_act(spec, b, generator_act(spec, a, p)))
                         .is_zero())
                    return false;
    return true;
}

/// Algebra, twist, and braiding bundled at a fixed truncation order.
struct AlgebraContext {
    AlgebraSpec spec;
    TwistSpec twist;
    int order = 0;
    OpTensor F, F_inv, R, R_inv;

    static AlgebraContext make(AlgebraSpec spec, TwistSpec twist, int order) {
        if (twist.generators != spec.sym)
            throw std::invalid_argument("twist and algebra disagree on the symmetry generator count");
        AlgebraContext c;
        c.spec = std::move(spec);
        c.twist = std::move(twist);
        c.order = order;
        auto [F, F_inv] = build_twist(c.twist, order);
        c.F = std::move(F);
        c.F_inv = std::move(F_inv);
        auto [R, R_inv] = build_r_matrix(c.F, c.F_inv);
        c.R = std::move(R);
        c.R_inv = std::move(R_inv);
        return c;
    }
};

/// Deformed product: classical multiplication precomposed with the inverse twist.
/// Torus modes are joint eigenvectors of the symmetry, so there the whole twist
/// sum collapses termwise to multiplication by exp(h * mu) with mu the pairing
/// of the two eigenvalue tuples through the twist matrix.
inline AlgebraElement star(const AlgebraContext& ctx, const AlgebraElement& a, const AlgebraElement& b) {
    AlgebraElement::check_shape(a, b);
    if (a.order != ctx.order) throw std::invalid_argument("element order differs from context order");
    AlgebraElement r(a.kind, a.dim, a.order);
    if (a.kind == AlgebraKind::torus) {
        for (const auto& [ma, sa] : a.terms)
            for (const auto& [mb, sb] : b.terms) {
                Series s = sa * sb;
                if (s.is_zero()) continue;
                GaussianRational mu;
                for (const auto& [ga, gb, c] : ctx.twist.pairs) {
                    GaussianRational la, lb;
                    for (std::size_t j = 0; j < ma.index.size(); ++j) {
                        la += ctx.spec.eigen[static_cast<std::size_t>(ga) - 1][j] * GaussianRational(ma.index[j]);
                        lb += ctx.spec.eigen[static_cast<std::size_t>(gb) - 1][j] * GaussianRational(mb.index[j]);
                    }
                    mu += c * la * lb;
                }
                if (!mu.is_zero()) {
                    Series e = Series::one(a.order);
                    GaussianRational acc(1);
                    for (int n = 1; n <= a.order; ++n) {
                        acc = acc * mu * GaussianRational(1, n);
                        e.c[static_cast<std::size_t>(n)] = acc;
                    }
                    s *= e;
                    if (s.is_zero()) continue;
                }
                std::vector<int> idx(ma.index.size());
                for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = ma.index[j] + mb.index[j];
                r.add_term(BasisMonomial(a.kind, std::move(idx)), s);
            }
        return r;
    }
    for (const auto& [key, w] : ctx.F_inv.terms)
        r += classical_mul(h_act(ctx.spec, key[0], a), h_act(ctx.spec, key[1], b)).scaled(w);
    return r;
}

/**
 * star(a,b) minus the braided flip star(R_inv_1 |> b, R_inv_2 |> a); the
 * residual vanishes identically on braided-commutative instances.
 */
inline AlgebraElement check_braided_commutativity(const AlgebraContext& ctx, const AlgebraElement& a,
                                                  const AlgebraElement& b) {
    AlgebraElement r = star(ctx, a, b);
    for (const auto& [key, w] : ctx.R_inv.terms)
        r -= star(ctx, h_act(ctx.spec, key[0], b), h_act(ctx.spec, key[1], a)).scaled(w);
    return r;
}

} // namespace braidgeo
