#pragma once

#include <braidgeo/scalars.hpp>

#include <algorithm>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

namespace braidgeo {

/**
 * Commutative monomial Z_1^{e_1} ... Z_m^{e_m} in the symmetry generators.
 * The generators span an abelian Lie algebra, so a word is just its exponent
 * vector; each generator is primitive.
 */
struct SymmetryWord {
    std::vector<int> e;

    SymmetryWord() = default;
    explicit SymmetryWord(int gens) : e(static_cast<std::size_t>(gens)) {}

    static SymmetryWord identity(int gens) { return SymmetryWord(gens); }
    static SymmetryWord generator(int gens, int a) { // a is 1-based
        SymmetryWord w(gens);
        w.e.at(static_cast<std::size_t>(a) - 1) = 1;
        return w;
    }

    int gens() const { return static_cast<int>(e.size()); }
    int degree() const {
        int d = 0;
        for (int x : e) d += x;
        return d;
    }
    bool is_identity() const { return degree() == 0; }

    friend SymmetryWord operator*(const SymmetryWord& a, const SymmetryWord& b) {
        if (a.e.size() != b.e.size()) throw std::invalid_argument("symmetry word generator count mismatch");
        SymmetryWord r(a.gens());
        for (std::size_t k = 0; k < a.e.size(); ++k) r.e[k] = a.e[k] + b.e[k];
        return r;
    }
    friend bool operator==(const SymmetryWord& a, const SymmetryWord& b) { return a.e == b.e; }
    friend bool operator!=(const SymmetryWord& a, const SymmetryWord& b) { return !(a == b); }
    friend bool operator<(const SymmetryWord& a, const SymmetryWord& b) { return a.e < b.e; }
};

namespace detail {

inline Int binomial(int n, int k) {
    Int r = 1;
    for (int j = 1; j <= k; ++j) {
        r *= (n - k + j);
        r /= j;
    }
    return r;
}

// Iterates all multi-indices 0 <= j <= w componentwise; f(j, prod binom(w_a, j_a)).
template <class F>
void for_each_split(const SymmetryWord& w, F&& f) {
    SymmetryWord j(w.gens());
    while (true) {
        Int b = 1;
        for (int a = 0; a < w.gens(); ++a) b *= binomial(w.e[a], j.e[a]);
        f(j, b);
        int a = 0;
        for (; a < w.gens(); ++a) {
            if (j.e[a] < w.e[a]) {
                ++j.e[a];
                break;
            }
            j.e[a] = 0;
        }
        if (a == w.gens()) break;
    }
}

} // namespace detail

/**
 * Expansion of the adjoint action of a word on operators: acting with Z^w on
 * an operator L gives sum c * (pre |>) o L o (post |>).  The coproduct splits
 * Z^w binomially and the antipode S(Z^k) = (-Z)^k supplies the sign on the
 * post factor.  Cocommutativity plus S^2 = id make the right-handed variant
 * of the action expand to the same list, so one table serves both.
 */
inline std::vector<std::tuple<SymmetryWord, SymmetryWord, GaussianRational>>
adjoint_coefficients(const SymmetryWord& w) {
    std::vector<std::tuple<SymmetryWord, SymmetryWord, GaussianRational>> out;
    detail::for_each_split(w, [&](const SymmetryWord& j, const Int& b) {
        SymmetryWord rest(w.gens());
        for (int a = 0; a < w.gens(); ++a) rest.e[a] = w.e[a] - j.e[a];
        Int c = b;
        if (rest.degree() % 2 == 1) c = -c;
        out.emplace_back(j, rest, GaussianRational(Rat(c)));
    });
    return out;
}

/// F^{-1} = exp(h * sum c Z_a (x) Z_b); indices are 1-based generator labels.
struct TwistSpec {
    int generators = 0;
    std::vector<std::tuple<int, int, GaussianRational>> pairs;
};

/**
 * Truncated-series weighted formal sum of pure tensors of symmetry words.
 * Houses the twist, its inverse, and the R-matrix (two legs) as well as the
 * three-leg products appearing in the cocycle identity.  Legs multiply
 * independently: the generators commute, so the product of two pure tensors
 * concatenates exponents legwise.
 */
struct OpTensor {
    int legs = 2;
    int gens = 0;
    int order = 0;
    std::map<std::vector<SymmetryWord>, Series> terms;

    OpTensor() = default;
    OpTensor(int legs_, int gens_, int order_) : legs(legs_), gens(gens_), order(order_) {}

    static OpTensor identity(int legs, int gens, int order) {
        OpTensor t(legs, gens, order);
        std::vector<SymmetryWord> key(static_cast<std::size_t>(legs), SymmetryWord::identity(gens));
        t.terms.emplace(std::move(key), Series::one(order));
        return t;
    }

    void add_term(std::vector<SymmetryWord> key, const Series& s) {
        if (s.is_zero()) return;
        auto [it, fresh] = terms.emplace(std::move(key), s);
        if (!fresh) {
            it->second += s;
            if (it->second.is_zero()) terms.erase(it);
        }
    }

    bool is_zero() const { return terms.empty(); }

    friend bool operator==(const OpTensor& a, const OpTensor& b) {
        return a.legs == b.legs && a.gens == b.gens && a.order == b.order && a.terms == b.terms;
    }

    friend OpTensor operator+(const OpTensor& a, const OpTensor& b) {
        check_shape(a, b);
        OpTensor r = a;
        for (const auto& [k, s] : b.terms) r.add_term(k, s);
        return r;
    }
    friend OpTensor operator-(const OpTensor& a, const OpTensor& b) {
        check_shape(a, b);
        OpTensor r = a;
        for (const auto& [k, s] : b.terms) r.add_term(k, -s);
        return r;
    }
    friend OpTensor operator*(const OpTensor& a, const OpTensor& b) {
        check_shape(a, b);
        OpTensor r(a.legs, a.gens, a.order);
        for (const auto& [ka, sa] : a.terms)
            for (const auto& [kb, sb] : b.terms) {
                Series s = sa * sb;
                if (s.is_zero()) continue;
                std::vector<SymmetryWord> k(ka.size());
                for (std::size_t l = 0; l < ka.size(); ++l) k[l] = ka[l] * kb[l];
                r.add_term(std::move(k), s);
            }
        return r;
    }

    OpTensor scaled(const Series& s) const {
        OpTensor r(legs, gens, order);
        for (const auto& [k, v] : terms) r.add_term(k, v * s);
        return r;
    }
    OpTensor scaled(const GaussianRational& g) const {
        OpTensor r(legs, gens, order);
        for (const auto& [k, v] : terms) r.add_term(k, v.scaled(g));
        return r;
    }

    /// Swap two legs (for two-leg tensors this is the usual flip T_21).
    OpTensor flipped(int i = 0, int j = 1) const {
        OpTensor r(legs, gens, order);
        for (const auto& [k, v] : terms) {
            auto key = k;
            std::swap(key[static_cast<std::size_t>(i)], key[static_cast<std::size_t>(j)]);
            r.add_term(std::move(key), v);
        }
        return r;
    }

    /// Apply the coproduct to leg `pos`: Z^w -> sum binom(w,j) Z^j (x) Z^{w-j}.
    OpTensor coproduct_on_leg(int pos) const {
        OpTensor r(legs + 1, gens, order);
        for (const auto& [k, v] : terms) {
            detail::for_each_split(k[static_cast<std::size_t>(pos)], [&](const SymmetryWord& j, const Int& b) {
                std::vector<SymmetryWord> key;
                key.reserve(k.size() + 1);
                for (int l = 0; l < static_cast<int>(k.size()); ++l) {
                    if (l == pos) {
                        key.push_back(j);
                        SymmetryWord rest(gens);
                        for (int a = 0; a < gens; ++a) rest.e[a] = k[static_cast<std::size_t>(pos)].e[a] - j.e[a];
                        key.push_back(rest);
                    } else {
                        key.push_back(k[static_cast<std::size_t>(l)]);
                    }
                }
                r.add_term(std::move(key), v.scaled(GaussianRational(Rat(b))));
            });
        }
        return r;
    }

    /// Apply the counit to leg `pos` (keeps only identity words there).
    OpTensor counit_on_leg(int pos) const {
        OpTensor r(legs - 1, gens, order);
        for (const auto& [k, v] : terms) {
            if (!k[static_cast<std::size_t>(pos)].is_identity()) continue;
            std::vector<SymmetryWord> key;
            for (int l = 0; l < static_cast<int>(k.size()); ++l)
                if (l != pos) key.push_back(k[static_cast<std::size_t>(l)]);
            r.add_term(std::move(key), v);
        }
        return r;
    }

    /// Tensor an identity leg at position `pos` (0 = front, legs = back).
    OpTensor with_identity_leg(int pos) const {
        OpTensor r(legs + 1, gens, order);
        for (const auto& [k, v] : terms) {
            std::vector<SymmetryWord> key = k;
            key.insert(key.begin() + pos, SymmetryWord::identity(gens));
            r.add_term(std::move(key), v);
        }
        return r;
    }

private:
    static void check_shape(const OpTensor& a, const OpTensor& b) {
        if (a.legs != b.legs || a.gens != b.gens || a.order != b.order)
            throw std::invalid_argument("operator tensor shape mismatch");
    }
};

/// exp of a two-leg exponent already carrying its power of h, truncated at N.
inline OpTensor optensor_exp(const OpTensor& hB) {
    OpTensor r = OpTensor::identity(hB.legs, hB.gens, hB.order);
    OpTensor inc = r;
    for (int k = 1; k <= hB.order; ++k) {
        inc = inc * hB;
        inc = inc.scaled(GaussianRational(1, k));
        if (inc.is_zero()) break;
        r = r + inc;
    }
    return r;
}

struct TwistPair {
    OpTensor F;
    OpTensor F_inv;
};

inline TwistPair build_twist(const TwistSpec& spec, int N) {
    OpTensor hB(2, spec.generators, N);
    for (const auto& [a, b, c] : spec.pairs) {
        if (a < 1 || a > spec.generators || b < 1 || b > spec.generators)
            throw std::invalid_argument("twist references generator outside Z_1..Z_" +
                                        std::to_string(spec.generators));
        hB.add_term({SymmetryWord::generator(spec.generators, a), SymmetryWord::generator(spec.generators, b)},
                    Series::h_power(N, 1).scaled(c));
    }
    // F^{-1} = exp(+hB); the exponent is bilinear in commuting generators, so
    // the inverse is exp(-hB) and the cocycle identity holds term by term.
    return {optensor_exp(hB.scaled(GaussianRational(-1))), optensor_exp(hB)};
}

struct RMatrixPair {
    OpTensor R;
    OpTensor R_inv;
};

/// R = F_21 F^{-1} (undeformed R-matrix is trivial); triangular: R_21 = R^{-1}.
inline RMatrixPair build_r_matrix(const OpTensor& F, const OpTensor& F_inv) {
    OpTensor R = F.flipped() * F_inv;
    return {R, R.flipped()};
}

/// (F (x) 1)(Delta (x) id)F - (1 (x) F)(id (x) Delta)F, a three-leg tensor.
inline OpTensor cocycle_residual(const OpTensor& F) {
    OpTensor lhs = F.with_identity_leg(2) * F.coproduct_on_leg(0);
    OpTensor rhs = F.with_identity_leg(0) * F.coproduct_on_leg(1);
    return lhs - rhs;
}

/// Checks (eps (x) id)F = (id (x) eps)F = 1.
inline bool twist_is_normalized(const OpTensor& F) {
    OpTensor unit = OpTensor::identity(1, F.gens, F.order);
    return F.counit_on_leg(0) == unit && F.counit_on_leg(1) == unit;
}

/// Apply a word to a carrier by iterating a single-generator action
/// act(a, x) with 1-based generator label a.
template <class X, class Act>
X apply_word(const SymmetryWord& w, X x, Act&& act) {
    for (int a = 0; a < w.gens(); ++a)
        for (int t = 0; t < w.e[static_cast<std::size_t>(a)]; ++t) x = act(a + 1, x);
    return x;
}

/**
 * Legwise action of a two-leg tensor on a pair of carriers: the result is the
 * formal sum over terms  weight * (word_L |> x) (x) (word_R |> y).  Combining
 * the pairs (multiplying, tensoring) is the caller's business.
 */
template <class X, class Y, class ActX, class ActY>
std::vector<std::tuple<Series, X, Y>>
act_legwise(const OpTensor& T, const X& x, const Y& y, ActX&& actx, ActY&& acty) {
    if (T.legs != 2) throw std::invalid_argument("legwise action expects a two-leg tensor");
    std::vector<std::tuple<Series, X, Y>> out;
    out.reserve(T.terms.size());
    for (const auto& [k, s] : T.terms)
        out.emplace_back(s, apply_word(k[0], x, actx), apply_word(k[1], y, acty));
    return out;
}

} // namespace braidgeo
