#pragma once

#include <braidgeo/modules.hpp>

#include <random>

namespace braidgeo::sampling {

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline GaussianRational random_rational(std::mt19937_64& rng, bool allow_imaginary = true) {
    std::uniform_int_distribution<int> num(-4, 4);
    std::uniform_int_distribution<int> den(1, 3);
    std::uniform_int_distribution<int> coin(0, 3);
    GaussianRational g(num(rng), den(rng));
    if (allow_imaginary && coin(rng) == 0) g += GaussianRational::i() * GaussianRational(num(rng), den(rng));
    return g;
}

inline Series random_series(std::mt19937_64& rng, int order, bool allow_imaginary = true) {
    Series s = Series::zero(order);
    for (int k = 0; k <= order; ++k)
        s += Series::h_power(order, k).scaled(random_rational(rng, allow_imaginary));
    return s;
}

inline AlgebraElement random_poly_element(std::mt19937_64& rng, int dim, int max_degree, int order,
                                          int terms = 3, bool allow_imaginary = true) {
    AlgebraElement out(AlgebraKind::polynomial, dim, order);
    std::uniform_int_distribution<int> deg(0, max_degree);
    std::uniform_int_distribution<int> slot(0, dim - 1);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> e(static_cast<std::size_t>(dim));
        int d = deg(rng);
        for (int p = 0; p < d; ++p) ++e[static_cast<std::size_t>(slot(rng))];
        out.add_term(BasisMonomial(AlgebraKind::polynomial, std::move(e)), random_series(rng, order, allow_imaginary));
    }
    return out;
}

inline AlgebraElement random_torus_element(std::mt19937_64& rng, int dim, int max_mode, int order,
                                           int terms = 3, bool allow_imaginary = true) {
    AlgebraElement out(AlgebraKind::torus, dim, order);
    std::uniform_int_distribution<int> mode(-max_mode, max_mode);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> k(static_cast<std::size_t>(dim));
        for (auto& v : k) v = mode(rng);
        out.add_term(BasisMonomial(AlgebraKind::torus, std::move(k)), random_series(rng, order, allow_imaginary));
    }
    return out;
}

inline AlgebraElement random_element(std::mt19937_64& rng, const ModuleContext& ctx, int size,
                                     int terms = 2, bool allow_imaginary = true) {
    return ctx.kind() == AlgebraKind::torus
               ? random_torus_element(rng, ctx.dim(), size, ctx.order(), terms, allow_imaginary)
               : random_poly_element(rng, ctx.dim(), size, ctx.order(), terms, allow_imaginary);
}

inline TensorField random_tensor_field(std::mt19937_64& rng, const ModuleContext& ctx, int p, int q,
                                       int coeff_size = 2, int nterms = 2) {
    TensorField t = ctx.zero_field(p, q);
    std::uniform_int_distribution<int> pick(1, ctx.rank());
    for (int n = 0; n < nterms; ++n) {
        std::vector<Leg> key;
        for (int u = 0; u < p; ++u) key.push_back(form_leg(pick(rng)));
        for (int u = 0; u < q; ++u) key.push_back(vec_leg(pick(rng)));
        t.add_term(std::move(key), random_element(rng, ctx, coeff_size));
    }
    return t;
}

} // namespace braidgeo::sampling
