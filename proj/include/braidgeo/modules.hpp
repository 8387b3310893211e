#pragma once

#include <braidgeo/algebra.hpp>

#include <deque>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace braidgeo {

/// One tensor slot: a dual-frame one-form (form=true) or a frame vector field.
struct Leg {
    bool form = false;
    int idx = 1; // 1-based frame index

    friend bool operator==(const Leg& a, const Leg& b) { return a.form == b.form && a.idx == b.idx; }
    friend bool operator!=(const Leg& a, const Leg& b) { return !(a == b); }
    friend bool operator<(const Leg& a, const Leg& b) {
        if (a.form != b.form) return a.form && !b.form; // form slots sort first
        return a.idx < b.idx;
    }
    std::string to_string() const { return (form ? "w" : "e") + std::to_string(idx); }
};

inline Leg form_leg(int i) { return Leg{true, i}; }
inline Leg vec_leg(int i) { return Leg{false, i}; }

/**
 * Frame data for a free module of rank n: the values e_i(x_j) defining the
 * frame as derivations, the symmetry action on frame vectors as frame
 * combinations, and the structure functions [e_i, e_j] = C_ij^k e_k.
 * For torus algebras frame_action[i][j] holds the coefficient c_ij of the
 * eigenvalue rule e_i(U_k) = (sum_j c_ij k_j) U_k.
 */
struct FrameSpec {
    int rank = 0;
    std::vector<std::vector<AlgebraElement>> frame_action;           // [rank][dim]
    std::vector<std::vector<std::vector<AlgebraElement>>> sym_vec;   // [sym][rank][rank]
    std::vector<std::vector<std::vector<AlgebraElement>>> structure; // [rank][rank][rank]

    static FrameSpec coordinate(const AlgebraSpec& alg, int order) {
        FrameSpec f;
        f.rank = alg.dim;
        AlgebraElement zero = AlgebraElement::zero(alg.kind, alg.dim, order);
        AlgebraElement one = alg.kind == AlgebraKind::torus
                                 ? AlgebraElement::unit(alg.kind, alg.dim, order).scaled(GaussianRational::i())
                                 : AlgebraElement::unit(alg.kind, alg.dim, order);
        f.frame_action.assign(static_cast<std::size_t>(f.rank),
                              std::vector<AlgebraElement>(static_cast<std::size_t>(alg.dim), zero));
        for (int i = 0; i < f.rank; ++i) f.frame_action[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = one;
        f.sym_vec.assign(static_cast<std::size_t>(alg.sym),
                         std::vector<std::vector<AlgebraElement>>(
                             static_cast<std::size_t>(f.rank),
                             std::vector<AlgebraElement>(static_cast<std::size_t>(f.rank), zero)));
        f.structure.assign(static_cast<std::size_t>(f.rank),
                           std::vector<std::vector<AlgebraElement>>(
                               static_cast<std::size_t>(f.rank),
                               std::vector<AlgebraElement>(static_cast<std::size_t>(f.rank), zero)));
        return f;
    }
};

/**
 * Tensor field of type (p,q) in left-normal form: a finite sum of
 * coefficient * (p one-form legs) (x) (q vector legs), coefficients stored
 * only on the far left.  The antisym flag marks exterior-calculus elements;
 * it is bookkeeping and does not enter equality.
 */
struct TensorField {
    int p = 0, q = 0;
    bool antisym = false;
    AlgebraKind kind = AlgebraKind::polynomial;
    int dim = 0;
    int order = 0;
    int rank = 0;
    std::map<std::vector<Leg>, AlgebraElement> terms;

    TensorField() = default;
    TensorField(int p_, int q_, AlgebraKind k, int d, int N, int r)
        : p(p_), q(q_), kind(k), dim(d), order(N), rank(r) {}

    bool key_fits(const std::vector<Leg>& key) const {
        if (static_cast<int>(key.size()) != p + q) return false;
        for (int t = 0; t < p; ++t)
            if (!key[static_cast<std::size_t>(t)].form) return false;
        for (int t = p; t < p + q; ++t)
            if (key[static_cast<std::size_t>(t)].form) return false;
        for (const Leg& l : key)
            if (l.idx < 1 || l.idx > rank) return false;
        return true;
    }

    void add_term(std::vector<Leg> key, const AlgebraElement& c) {
        if (c.is_zero()) return;
        if (!key_fits(key)) throw std::invalid_argument("tensor index word does not match the (p,q) block shape");
        if (c.kind != kind || c.dim != dim || c.order != order)
            throw std::invalid_argument("coefficient does not belong to this context");
        auto [it, fresh] = terms.emplace(std::move(key), c);
        if (!fresh) {
            it->second += c;
            if (it->second.is_zero()) terms.erase(it);
        }
    }

    bool is_zero() const { return terms.empty(); }

    static void check_shape(const TensorField& a, const TensorField& b) {
        if (a.p != b.p || a.q != b.q || a.kind != b.kind || a.dim != b.dim || a.order != b.order ||
            a.rank != b.rank)
            throw std::invalid_argument("tensor fields have different shapes");
    }

    friend bool operator==(const TensorField& a, const TensorField& b) {
        return a.p == b.p && a.q == b.q && a.kind == b.kind && a.dim == b.dim && a.order == b.order &&
               a.rank == b.rank && a.terms == b.terms;
    }

    friend TensorField operator+(const TensorField& a, const TensorField& b) {
        check_shape(a, b);
        TensorField r = a;
        for (const auto& [k, c] : b.terms) r.add_term(k, c);
        return r;
    }
    friend TensorField operator-(const TensorField& a, const TensorField& b) {
        check_shape(a, b);
        TensorField r = a;
        for (const auto& [k, c] : b.terms) r.add_term(k, -c);
        return r;
    }
    TensorField operator-() const {
        TensorField r(p, q, kind, dim, order, rank);
        r.antisym = antisym;
        for (const auto& [k, c] : terms) r.add_term(k, -c);
        return r;
    }
    TensorField& operator+=(const TensorField& b) { return *this = *this + b; }
    TensorField& operator-=(const TensorField& b) { return *this = *this - b; }

    TensorField scaled(const GaussianRational& g) const {
        TensorField r(p, q, kind, dim, order, rank);
        r.antisym = antisym;
        for (const auto& [k, c] : terms) r.add_term(k, c.scaled(g));
        return r;
    }
    TensorField scaled(const Series& s) const {
        TensorField r(p, q, kind, dim, order, rank);
        r.antisym = antisym;
        for (const auto& [k, c] : terms) r.add_term(k, c.scaled(s));
        return r;
    }

    /// The (0,0) case carries one coefficient on the empty index word.
    AlgebraElement as_scalar() const {
        if (p != 0 || q != 0) throw std::invalid_argument("tensor field is not a scalar");
        if (terms.empty()) return AlgebraElement::zero(kind, dim, order);
        return terms.begin()->second;
    }

    std::string to_string() const {
        if (terms.empty()) return "0";
        std::string out;
        for (const auto& [k, c] : terms) {
            if (!out.empty()) out += " + ";
            std::string cs = c.to_string();
            bool wrap = cs.find(" + ") != std::string::npos;
            std::string legs;
            for (const Leg& l : k) {
                if (!legs.empty()) legs += "*";
                legs += l.to_string();
            }
            if (legs.empty()) {
                out += cs;
            } else if (cs == "1") {
                out += legs;
            } else {
                out += (wrap ? "(" + cs + ")" : cs) + "*" + legs;
            }
        }
        return out;
    }
};

/// One factor of a raw (not yet normalized) tensor expression.
struct RawFactor {
    bool is_leg = false;
    AlgebraElement coeff;
    Leg leg;

    static RawFactor c(AlgebraElement a) {
        RawFactor f;
        f.coeff = std::move(a);
        return f;
    }
    static RawFactor l(Leg lg) {
        RawFactor f;
        f.is_leg = true;
        f.leg = lg;
        return f;
    }
};

/**
 * Everything one geometry shares: the algebra with its twist, the frame, and
 * the derived symmetry action on the dual frame.  The dual action is fixed by
 * demanding the dual-basis pairing be invariant, which for the frame part
 * Z_a |> e_i = M_ik e_k forces Z_a |> w^i = -M_ki w^k up to braided
 * corrections; the constructor checks the invariance and rejects frames where
 * it fails.
 */
struct ModuleContext {
    AlgebraContext alg;
    FrameSpec frame;
    std::vector<std::vector<std::vector<AlgebraElement>>> sym_form; // [sym][rank][rank]

    int rank() const { return frame.rank; }
    int order() const { return alg.order; }
    int dim() const { return alg.spec.dim; }
    AlgebraKind kind() const { return alg.spec.kind; }

    AlgebraElement zero_elem() const { return AlgebraElement::zero(kind(), dim(), order()); }
    AlgebraElement unit_elem() const { return AlgebraElement::unit(kind(), dim(), order()); }

    TensorField zero_field(int p, int q) const { return TensorField(p, q, kind(), dim(), order(), rank()); }
    TensorField scalar_field(const AlgebraElement& a) const {
        TensorField t = zero_field(0, 0);
        t.add_term({}, a);
        return t;
    }
    TensorField basis_vector(int i) const {
        TensorField t = zero_field(0, 1);
        t.add_term({vec_leg(i)}, unit_elem());
        return t;
    }
    TensorField basis_form(int i) const {
        TensorField t = zero_field(1, 0);
        t.add_term({form_leg(i)}, unit_elem());
        return t;
    }

    /// Z_a on a bare leg, as a coefficient-weighted frame combination.
    std::vector<std::pair<AlgebraElement, Leg>> gen_act_leg(int a, const Leg& l) const {
        std::vector<std::pair<AlgebraElement, Leg>> out;
        const auto& table = l.form ? sym_form : frame.sym_vec;
        const auto& row = table[static_cast<std::size_t>(a) - 1][static_cast<std::size_t>(l.idx) - 1];
        for (int k = 0; k < rank(); ++k)
            if (!row[static_cast<std::size_t>(k)].is_zero())
                out.emplace_back(row[static_cast<std::size_t>(k)], Leg{l.form, k + 1});
        return out;
    }

    /// Z_a on a coefficient-weighted leg combination (Leibniz, Z primitive).
    /// With classical = true the coefficients merge with the undeformed product,
    /// the presentation used when transporting evaluation through the twist.
    std::vector<std::pair<AlgebraElement, Leg>> gen_act_pairs(
        int a, const std::vector<std::pair<AlgebraElement, Leg>>& in, bool classical = false) const {
        std::map<Leg, AlgebraElement> acc;
        auto put = [&](const Leg& l, const AlgebraElement& c) {
            if (c.is_zero()) return;
            auto [it, fresh] = acc.emplace(l, c);
            if (!fresh) it->second += c;
        };
        for (const auto& [c, l] : in) {
            put(l, generator_act(alg.spec, a, c));
            for (const auto& [b, l2] : gen_act_leg(a, l))
                put(l2, classical ? classical_mul(c, b) : star(alg, c, b));
        }
        std::vector<std::pair<AlgebraElement, Leg>> out;
        for (auto& [l, c] : acc)
            if (!c.is_zero()) out.emplace_back(std::move(c), l);
        return out;
    }

    std::vector<std::pair<AlgebraElement, Leg>> word_act_leg(const SymmetryWord& w, const Leg& l,
                                                             bool classical = false) const {
        std::vector<std::pair<AlgebraElement, Leg>> cur = {{unit_elem(), l}};
        for (int a = 0; a < w.gens(); ++a)
            for (int t = 0; t < w.e[static_cast<std::size_t>(a)]; ++t) cur = gen_act_pairs(a + 1, cur, classical);
        return cur;
    }

    static ModuleContext make(AlgebraContext a, FrameSpec f, bool validate = true);
};

namespace detail {

/**
 * Rewrites a raw factor list into left-normal form, accumulating into `out`.
 * The only rewrite moves a coefficient left across one leg via the braided
 * rule  leg * c -> sum over R_inv terms of (w_L |> c) * (w_R |> leg); every
 * step moves one coefficient one slot left, so the rewriting terminates.
 */
inline void normalize_raw(const ModuleContext& ctx, std::vector<RawFactor> start,
                          std::map<std::vector<Leg>, AlgebraElement>& out) {
    std::deque<std::vector<RawFactor>> work;
    work.push_back(std::move(start));
    while (!work.empty()) {
        std::vector<RawFactor> items = std::move(work.front());
        work.pop_front();

        // Merge adjacent coefficients (nested left actions compose by star).
        std::vector<RawFactor> merged;
        for (auto& f : items) {
            if (!f.is_leg && !merged.empty() && !merged.back().is_leg)
                merged.back().coeff = star(ctx.alg, merged.back().coeff, f.coeff);
            else
                merged.push_back(std::move(f));
        }
        items = std::move(merged);

        std::size_t viol = items.size();
        for (std::size_t t = 1; t < items.size(); ++t)
            if (!items[t].is_leg && items[t - 1].is_leg) {
                viol = t;
                break;
            }

        if (viol == items.size()) {
            AlgebraElement coeff = ctx.unit_elem();
            std::size_t t = 0;
            if (!items.empty() && !items[0].is_leg) {
                coeff = items[0].coeff;
                t = 1;
            }
            std::vector<Leg> key;
            for (; t < items.size(); ++t) key.push_back(items[t].leg);
            if (coeff.is_zero()) continue;
            auto [it, fresh] = out.emplace(std::move(key), coeff);
            if (!fresh) it->second += coeff;
            continue;
        }

        const AlgebraElement c = items[viol].coeff;
        const Leg lg = items[viol - 1].leg;
        for (const auto& [words, w] : ctx.alg.R_inv.terms) {
            AlgebraElement moved = h_act(ctx.alg.spec, words[0], c).scaled(w);
            if (moved.is_zero()) continue;
            for (const auto& [b, lg2] : ctx.word_act_leg(words[1], lg)) {
                AlgebraElement cc = star(ctx.alg, moved, b);
                if (cc.is_zero()) continue;
                std::vector<RawFactor> next(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(viol) - 1);
                next.push_back(RawFactor::c(cc));
                next.push_back(RawFactor::l(lg2));
                next.insert(next.end(), items.begin() + static_cast<std::ptrdiff_t>(viol) + 1, items.end());
                work.push_back(std::move(next));
            }
        }
    }
    for (auto it = out.begin(); it != out.end();)
        it = it->second.is_zero() ? out.erase(it) : std::next(it);
}

inline std::pair<int, int> block_shape(const std::vector<Leg>& key) {
    int p = 0;
    std::size_t t = 0;
    while (t < key.size() && key[t].form) {
        ++p;
        ++t;
    }
    int q = 0;
    while (t < key.size() && !key[t].form) {
        ++q;
        ++t;
    }
    if (t != key.size()) throw std::invalid_argument("tensor legs are not in form-then-vector block order");
    return {p, q};
}

} // namespace detail

/// Moves every coefficient to the far left; the leg pattern must already be
/// in form-then-vector block order.
inline TensorField left_normalize(const ModuleContext& ctx, const std::vector<RawFactor>& items) {
    std::vector<Leg> pattern;
    for (const auto& f : items)
        if (f.is_leg) pattern.push_back(f.leg);
    auto [p, q] = detail::block_shape(pattern);
    std::map<std::vector<Leg>, AlgebraElement> out;
    detail::normalize_raw(ctx, items, out);
    TensorField t = ctx.zero_field(p, q);
    for (auto& [k, c] : out) t.add_term(k, c);
    return t;
}

/// Left module action a . t (coefficients multiply by star from the left).
inline TensorField module_scale(const ModuleContext& ctx, const AlgebraElement& a, const TensorField& t) {
    TensorField r = ctx.zero_field(t.p, t.q);
    r.antisym = t.antisym;
    for (const auto& [k, c] : t.terms) r.add_term(k, star(ctx.alg, a, c));
    return r;
}

/**
 * Braiding of adjacent slots (slot, slot+1):
 * tau(s (x) t) = (R_inv_1 |> t) (x) (R_inv_2 |> s), with the extra sign -1
 * when `graded` is set and both slots are one-form legs.  Braiding across the
 * form/vector block boundary would leave canonical shape and is rejected.
 */
inline TensorField braid(const ModuleContext& ctx, const TensorField& t, int slot, bool graded = false) {
    if (slot < 0 || slot + 1 >= t.p + t.q) throw std::invalid_argument("braid slot out of range");
    if (t.p > 0 && t.q > 0 && slot == t.p - 1)
        throw std::invalid_argument("braiding across the form/vector block boundary leaves canonical shape");
    TensorField r = ctx.zero_field(t.p, t.q);
    r.antisym = t.antisym;
    std::map<std::vector<Leg>, AlgebraElement> out;
    for (const auto& [key, c] : t.terms) {
        const Leg first = key[static_cast<std::size_t>(slot)];
        const Leg second = key[static_cast<std::size_t>(slot) + 1];
        bool sign = graded && first.form && second.form;
        for (const auto& [words, w] : ctx.alg.R_inv.terms) {
            Series weight = sign ? -w : w;
            for (const auto& [b1, l1] : ctx.word_act_leg(words[0], second))
                for (const auto& [b2, l2] : ctx.word_act_leg(words[1], first)) {
                    std::vector<RawFactor> raw;
                    raw.push_back(RawFactor::c(c.scaled(weight)));
                    for (int u = 0; u < slot; ++u) raw.push_back(RawFactor::l(key[static_cast<std::size_t>(u)]));
                    raw.push_back(RawFactor::c(b1));
                    raw.push_back(RawFactor::l(l1));
                    raw.push_back(RawFactor::c(b2));
                    raw.push_back(RawFactor::l(l2));
                    for (int u = slot + 2; u < t.p + t.q; ++u)
                        raw.push_back(RawFactor::l(key[static_cast<std::size_t>(u)]));
                    detail::normalize_raw(ctx, std::move(raw), out);
                }
        }
    }
    for (auto& [k, c] : out) r.add_term(k, c);
    return r;
}

/// Formal sum in A (x) A with exact coefficients, for braiding algebra pairs.
struct AlgebraPairTensor {
    AlgebraKind kind = AlgebraKind::polynomial;
    int dim = 0;
    int order = 0;
    std::map<std::pair<BasisMonomial, BasisMonomial>, Series> terms;

    void add_term(const BasisMonomial& a, const BasisMonomial& b, const Series& s) {
        if (s.is_zero()) return;
        auto [it, fresh] = terms.emplace(std::make_pair(a, b), s);
        if (!fresh) {
            it->second += s;
            if (it->second.is_zero()) terms.erase(it);
        }
    }
    void add_product(const AlgebraElement& a, const AlgebraElement& b, const Series& w) {
        for (const auto& [ma, sa] : a.terms)
            for (const auto& [mb, sb] : b.terms) add_term(ma, mb, sa * sb * w);
    }
    static AlgebraPairTensor from(const AlgebraElement& a, const AlgebraElement& b) {
        AlgebraElement::check_shape(a, b);
        AlgebraPairTensor t;
        t.kind = a.kind;
        t.dim = a.dim;
        t.order = a.order;
        t.add_product(a, b, Series::one(a.order));
        return t;
    }
    friend bool operator==(const AlgebraPairTensor& x, const AlgebraPairTensor& y) {
        return x.kind == y.kind && x.dim == y.dim && x.order == y.order && x.terms == y.terms;
    }
};

/// tau on A (x) A: sum over R_inv terms of (w_L |> b) (x) (w_R |> a).
inline AlgebraPairTensor braid_algebra(const AlgebraContext& ctx, const AlgebraPairTensor& t) {
    AlgebraPairTensor r;
    r.kind = t.kind;
    r.dim = t.dim;
    r.order = t.order;
    for (const auto& [mono, s] : t.terms) {
        AlgebraElement a(t.kind, t.dim, t.order), b(t.kind, t.dim, t.order);
        a.add_term(mono.first, Series::one(t.order));
        b.add_term(mono.second, Series::one(t.order));
        for (const auto& [words, w] : ctx.R_inv.terms)
            r.add_product(h_act(ctx.spec, words[0], b), h_act(ctx.spec, words[1], a), w * s);
    }
    return r;
}

inline AlgebraPairTensor braid_algebra(const AlgebraContext& ctx, const AlgebraElement& a,
                                       const AlgebraElement& b) {
    return braid_algebra(ctx, AlgebraPairTensor::from(a, b));
}

/**
 * Graded product of tensor fields: concatenation with the interchange
 * braiding that carries the vector block of the first factor past the form
 * block of the second, then left normalization.
 */
inline TensorField tensor(const ModuleContext& ctx, const TensorField& s, const TensorField& t) {
    if (s.kind != t.kind || s.dim != t.dim || s.order != t.order || s.rank != t.rank)
        throw std::invalid_argument("tensor fields from different contexts");
    std::map<std::vector<Leg>, AlgebraElement> flat;
    for (const auto& [ks, cs] : s.terms)
        for (const auto& [kt, ct] : t.terms) {
            std::vector<RawFactor> raw;
            raw.push_back(RawFactor::c(cs));
            for (const Leg& l : ks) raw.push_back(RawFactor::l(l));
            raw.push_back(RawFactor::c(ct));
            for (const Leg& l : kt) raw.push_back(RawFactor::l(l));
            detail::normalize_raw(ctx, std::move(raw), flat);
        }

    // Sort legs into form-then-vector order with adjacent tau swaps.
    std::map<std::vector<Leg>, AlgebraElement> sorted;
    std::deque<std::pair<std::vector<Leg>, AlgebraElement>> work(flat.begin(), flat.end());
    while (!work.empty()) {
        auto [key, c] = std::move(work.front());
        work.pop_front();
        if (c.is_zero()) continue;
        std::size_t inv = key.size();
        for (std::size_t u = 0; u + 1 < key.size(); ++u)
            if (!key[u].form && key[u + 1].form) {
                inv = u;
                break;
            }
        if (inv == key.size()) {
            auto [it, fresh] = sorted.emplace(std::move(key), c);
            if (!fresh) it->second += c;
            continue;
        }
        const Leg first = key[inv], second = key[inv + 1];
        for (const auto& [words, w] : ctx.alg.R_inv.terms)
            for (const auto& [b1, l1] : ctx.word_act_leg(words[0], second))
                for (const auto& [b2, l2] : ctx.word_act_leg(words[1], first)) {
                    std::vector<RawFactor> raw;
                    raw.push_back(RawFactor::c(c.scaled(w)));
                    for (std::size_t u = 0; u < inv; ++u) raw.push_back(RawFactor::l(key[u]));
                    raw.push_back(RawFactor::c(b1));
                    raw.push_back(RawFactor::l(l1));
                    raw.push_back(RawFactor::c(b2));
                    raw.push_back(RawFactor::l(l2));
                    for (std::size_t u = inv + 2; u < key.size(); ++u) raw.push_back(RawFactor::l(key[u]));
                    std::map<std::vector<Leg>, AlgebraElement> step;
                    detail::normalize_raw(ctx, std::move(raw), step);
                    for (auto& [k2, c2] : step) work.emplace_back(std::move(k2), std::move(c2));
                }
    }

    TensorField r = ctx.zero_field(s.p + t.p, s.q + t.q);
    for (auto& [k, c] : sorted) r.add_term(k, c);
    return r;
}

/**
 * Nested evaluation of an all-vector tensor against the leading form block:
 * the innermost pairing contracts the LAST vector leg with the FIRST form
 * leg, and the dual-basis pairing of bare legs is the Kronecker delta.
 */
inline TensorField pair(const ModuleContext& ctx, const TensorField& contra, const TensorField& mixed) {
    if (contra.p != 0) throw std::invalid_argument("first pairing argument must be all-vector");
    if (contra.kind != mixed.kind || contra.dim != mixed.dim || contra.order != mixed.order ||
        contra.rank != mixed.rank)
        throw std::invalid_argument("tensor fields from different contexts");
    const int r = contra.q;
    if (r > mixed.p) return ctx.zero_field(0, mixed.q);
    TensorField out = ctx.zero_field(mixed.p - r, mixed.q);
    for (const auto& [kc, a] : contra.terms)
        for (const auto& [km, b] : mixed.terms) {
            // slide the mixed coefficient through the vector legs
            std::vector<RawFactor> raw;
            raw.push_back(RawFactor::c(a));
            for (const Leg& l : kc) raw.push_back(RawFactor::l(l));
            raw.push_back(RawFactor::c(b));
            std::map<std::vector<Leg>, AlgebraElement> moved;
            detail::normalize_raw(ctx, std::move(raw), moved);
            for (const auto& [kv, c] : moved) {
                bool hit = true;
                for (int u = 0; u < r && hit; ++u)
                    hit = kv[static_cast<std::size_t>(r - 1 - u)].idx == km[static_cast<std::size_t>(u)].idx;
                if (!hit) continue;
                std::vector<Leg> rest(km.begin() + r, km.end());
                out.add_term(std::move(rest), c);
            }
        }
    return out;
}

/// H-action of one symmetry generator on a tensor field (Leibniz over slots).
inline TensorField symmetry_act(const ModuleContext& ctx, int a, const TensorField& t) {
    std::map<std::vector<Leg>, AlgebraElement> out;
    for (const auto& [key, c] : t.terms) {
        {
            std::vector<RawFactor> raw;
            raw.push_back(RawFactor::c(generator_act(ctx.alg.spec, a, c)));
            for (const Leg& l : key) raw.push_back(RawFactor::l(l));
            detail::normalize_raw(ctx, std::move(raw), out);
        }
        for (std::size_t slot = 0; slot < key.size(); ++slot) {
            for (const auto& [b, l2] : ctx.gen_act_leg(a, key[slot])) {
                std::vector<RawFactor> raw;
                raw.push_back(RawFactor::c(c));
                for (std::size_t u = 0; u < slot; ++u) raw.push_back(RawFactor::l(key[u]));
                raw.push_back(RawFactor::c(b));
                raw.push_back(RawFactor::l(l2));
                for (std::size_t u = slot + 1; u < key.size(); ++u) raw.push_back(RawFactor::l(key[u]));
                detail::normalize_raw(ctx, std::move(raw), out);
            }
        }
    }
    TensorField r = ctx.zero_field(t.p, t.q);
    r.antisym = t.antisym;
    for (auto& [k, c] : out) r.add_term(k, c);
    return r;
}

inline TensorField word_symmetry_act(const ModuleContext& ctx, const SymmetryWord& w, const TensorField& t) {
    return apply_word(w, t, [&](int a, const TensorField& x) { return symmetry_act(ctx, a, x); });
}

/// I = sum_i w^i (x) e_i; checked to be annihilated by every generator.
inline TensorField coevaluation(const ModuleContext& ctx) {
    TensorField I = ctx.zero_field(1, 1);
    for (int i = 1; i <= ctx.rank(); ++i) I.add_term({form_leg(i), vec_leg(i)}, ctx.unit_elem());
    for (int a = 1; a <= ctx.alg.spec.sym; ++a)
        if (!symmetry_act(ctx, a, I).is_zero())
            throw std::invalid_argument("frame fails invariance check: the canonical element is not invariant");
    return I;
}

/**
 * Right-coefficient presentation: each term is (basis word) . a_I.  Moves
 * every coefficient right one leg at a time with
 * c . leg = sum over R_inv of (w_L |> leg) . (w_R |> c); corrections carry
 * positive powers of h, so the rewriting terminates within the truncation.
 */
inline std::map<std::vector<Leg>, AlgebraElement> right_coefficient_form(const ModuleContext& ctx,
                                                                         const TensorField& t) {
    std::map<std::vector<Leg>, AlgebraElement> out;
    struct Item {
        std::vector<RawFactor> items;
        int val = 0; // accumulated h-valuation floor from braiding corrections
    };
    std::deque<Item> work;
    for (const auto& [key, c] : t.terms) {
        Item it;
        it.items.push_back(RawFactor::c(c));
        for (const Leg& l : key) it.items.push_back(RawFactor::l(l));
        work.push_back(std::move(it));
    }
    while (!work.empty()) {
        Item cur = std::move(work.front());
        work.pop_front();
        if (cur.val > ctx.order()) continue;
        auto& items = cur.items;

        std::vector<RawFactor> merged;
        for (auto& f : items) {
            if (!f.is_leg && !merged.empty() && !merged.back().is_leg)
                merged.back().coeff = star(ctx.alg, merged.back().coeff, f.coeff);
            else
                merged.push_back(std::move(f));
        }
        items = std::move(merged);

        std::size_t viol = items.size();
        for (std::size_t u = 0; u + 1 < items.size(); ++u)
            if (!items[u].is_leg && items[u + 1].is_leg) {
                viol = u;
                break;
            }

        if (viol == items.size()) {
            std::vector<Leg> key;
            AlgebraElement coeff = ctx.unit_elem();
            for (auto& f : items) {
                if (f.is_leg)
                    key.push_back(f.leg);
                else
                    coeff = f.coeff;
            }
            if (coeff.is_zero()) continue;
            auto [it, fresh] = out.emplace(std::move(key), coeff);
            if (!fresh) {
                it->second += coeff;
                if (it->second.is_zero()) out.erase(it);
            }
            continue;
        }

        const AlgebraElement c = items[viol].coeff;
        const Leg lg = items[viol + 1].leg;
        for (const auto& [words, w] : ctx.alg.R_inv.terms) {
            AlgebraElement moved = h_act(ctx.alg.spec, words[1], c).scaled(w);
            if (moved.is_zero()) continue;
            for (const auto& [b, lg2] : ctx.word_act_leg(words[0], lg)) {
                Item next;
                next.val = cur.val + words[0].degree();
                next.items.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(viol));
                if (!b.is_zero() && !(b == ctx.unit_elem())) next.items.push_back(RawFactor::c(b));
                next.items.push_back(RawFactor::l(lg2));
                next.items.push_back(RawFactor::c(moved));
                next.items.insert(next.items.end(), items.begin() + static_cast<std::ptrdiff_t>(viol) + 2,
                                  items.end());
                work.push_back(std::move(next));
            }
        }
    }
    return out;
}

/// Inverse of right_coefficient_form: rebuilds the left-normal field.
inline TensorField from_right_coefficients(const ModuleContext& ctx,
                                           const std::map<std::vector<Leg>, AlgebraElement>& rows) {
    TensorField r = ctx.zero_field(0, 0);
    bool first = true;
    for (const auto& [key, c] : rows) {
        std::vector<RawFactor> raw;
        for (const Leg& l : key) raw.push_back(RawFactor::l(l));
        raw.push_back(RawFactor::c(c));
        TensorField piece = left_normalize(ctx, raw);
        if (first) {
            r = piece;
            first = false;
        } else {
            r += piece;
        }
    }
    return r;
}

inline ModuleContext ModuleContext::make(AlgebraContext a, FrameSpec f, bool validate) {
    ModuleContext ctx;
    ctx.alg = std::move(a);
    ctx.frame = std::move(f);
    const int n = ctx.frame.rank;
    const int m = ctx.alg.spec.sym;
    ctx.sym_form.assign(static_cast<std::size_t>(m),
                        std::vector<std::vector<AlgebraElement>>(
                            static_cast<std::size_t>(n),
                            std::vector<AlgebraElement>(static_cast<std::size_t>(n), ctx.zero_elem())));
    for (int g = 0; g < m; ++g)
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                ctx.sym_form[static_cast<std::size_t>(g)][static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                    -ctx.frame.sym_vec[static_cast<std::size_t>(g)][static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
    if (validate) {
        if (!actions_commute(ctx.alg.spec, ctx.order(), 3))
            throw std::invalid_argument("symmetry generator actions on the algebra do not commute");
        for (int g1 = 1; g1 <= m; ++g1)
            for (int g2 = g1 + 1; g2 <= m; ++g2)
                for (int i = 1; i <= n; ++i) {
                    TensorField e = ctx.basis_vector(i);
                    if (!(symmetry_act(ctx, g1, symmetry_act(ctx, g2, e)) -
                          symmetry_act(ctx, g2, symmetry_act(ctx, g1, e)))
                             .is_zero())
                        throw std::invalid_argument("symmetry actions on the frame do not commute");
                }
        coevaluation(ctx); // throws if the dual pairing is not invariant
    }
    return ctx;
}

/// Derivative part of the frame: e_i applied to an algebra element.
inline AlgebraElement frame_apply(const ModuleContext& ctx, int i, const AlgebraElement& b) {
    if (i < 1 || i > ctx.rank()) throw std::invalid_argument("frame index out of range");
    AlgebraElement out = ctx.zero_elem();
    const auto& row = ctx.frame.frame_action[static_cast<std::size_t>(i) - 1];
    if (ctx.kind() == AlgebraKind::torus) {
        for (const auto& [mono, s] : b.terms) {
            AlgebraElement lam = ctx.zero_elem();
            for (std::size_t j = 0; j < mono.index.size(); ++j)
                lam += row[j].scaled(GaussianRational(mono.index[j]));
            AlgebraElement term(ctx.kind(), ctx.dim(), ctx.order());
            term.add_term(mono, s);
            out += classical_mul(lam, term);
        }
        return out;
    }
    for (int j = 1; j <= ctx.dim(); ++j)
        out += classical_mul(row[static_cast<std::size_t>(j) - 1], partial_derivative(b, j));
    return out;
}

/// Frame evaluation transported through the twist: e_i acts as the composite
/// of the inverse twist legs, one moving the frame, one moving the argument.
/// For frames fixed by the symmetry only the identity term survives and this
/// reduces to the plain derivative rule; in general the correction is what
/// makes evaluation a braided derivation of the deformed product.
inline AlgebraElement frame_eval(const ModuleContext& ctx, int i, const AlgebraElement& b) {
    AlgebraElement out = ctx.zero_elem();
    for (const auto& [words, w] : ctx.alg.F_inv.terms) {
        auto parts = ctx.word_act_leg(words[0], vec_leg(i), true);
        if (parts.empty()) continue;
        AlgebraElement rb = h_act(ctx.alg.spec, words[1], b);
        if (rb.is_zero()) continue;
        for (const auto& [m, l] : parts)
            out += classical_mul(m, frame_apply(ctx, l.idx, rb)).scaled(w);
    }
    return out;
}

/// Vector field applied to an algebra element: (a . e_i)(b) = a star e_i(b).
inline AlgebraElement vf_apply(const ModuleContext& ctx, const TensorField& v, const AlgebraElement& b) {
    if (v.p != 0 || v.q != 1) throw std::invalid_argument("vector field expected");
    AlgebraElement out = ctx.zero_elem();
    for (const auto& [key, c] : v.terms) out += star(ctx.alg, c, frame_eval(ctx, key[0].idx, b));
    return out;
}

/// Evaluation intertwines the symmetry action: Z_a(e_i(b)) = (Z_a e_i)(b) + e_i(Z_a b).
/// Frame data that fails this cannot carry the deformed calculus even when it
/// forms a perfectly good module; probes run over low-degree monomials.
inline bool frame_evaluation_equivariant(const ModuleContext& ctx, int degree_bound = 3) {
    std::vector<AlgebraElement> probes;
    if (ctx.kind() == AlgebraKind::torus) {
        std::vector<int> k(static_cast<std::size_t>(ctx.dim()), 0);
        for (int j = 0; j < ctx.dim(); ++j)
            for (int s : {1, -1}) {
                k[static_cast<std::size_t>(j)] = s;
                probes.push_back(AlgebraElement::mode(k, ctx.order()));
                k[static_cast<std::size_t>(j)] = 0;
            }
    } else {
        std::vector<int> e(static_cast<std::size_t>(ctx.dim()), 0);
        std::function<void(int, int)> walk = [&](int j, int left) {
            if (j == ctx.dim()) {
                AlgebraElement p(AlgebraKind::polynomial, ctx.dim(), ctx.order());
                p.add_term(BasisMonomial(AlgebraKind::polynomial, e), Series::one(ctx.order()));
                probes.push_back(std::move(p));
                return;
            }
            for (int d = 0; d <= left; ++d) {
                e[static_cast<std::size_t>(j)] = d;
                walk(j + 1, left - d);
            }
            e[static_cast<std::size_t>(j)] = 0;
        };
        walk(0, degree_bound);
    }
    for (int a = 1; a <= ctx.alg.spec.sym; ++a)
        for (int i = 1; i <= ctx.rank(); ++i)
            for (const auto& b : probes) {
                AlgebraElement lhs = generator_act(ctx.alg.spec, a, frame_apply(ctx, i, b));
                AlgebraElement rhs = frame_apply(ctx, i, generator_act(ctx.alg.spec, a, b));
                for (const auto& [m, l] : ctx.gen_act_leg(a, vec_leg(i)))
                    rhs += classical_mul(m, frame_apply(ctx, l.idx, b));
                if (!(lhs - rhs).is_zero()) return false;
            }
    return true;
}

} // namespace braidgeo
