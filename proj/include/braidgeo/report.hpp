#pragma once

// Deterministic report assembly: canonical JSON trees with lexicographically
// sorted keys and the exact textual scalar forms.  Identical geometry text
// and seed produce byte-identical serializations; timing data therefore
// never enters the tree and is reported on stderr by the driver instead.

#include <braidgeo/parse.hpp>

#include <json.hpp>

namespace braidgeo {

using Json = nlohmann::json;

inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string source_hash(std::string_view bytes) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a(bytes);
    std::string s(16, '0');
    for (int k = 15; k >= 0; --k) {
        s[static_cast<std::size_t>(k)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

namespace detail {

inline std::string idx_key(const char* name, std::initializer_list<int> idx) {
    std::string s = name;
    s += '[';
    bool first = true;
    for (int v : idx) {
        if (!first) s += ',';
        s += std::to_string(v);
        first = false;
    }
    s += ']';
    return s;
}

inline AlgebraElement vector_coeff(const ModuleContext& ctx, const TensorField& t, int l) {
    auto it = t.terms.find({vec_leg(l)});
    return it == t.terms.end() ? ctx.zero_elem() : it->second;
}

} // namespace detail

inline Json christoffel_json(const ModuleContext& ctx, const Connection& c) {
    Json out = Json::object();
    for (int i = 1; i <= ctx.rank(); ++i)
        for (int j = 1; j <= ctx.rank(); ++j) {
            Json row = Json::object();
            for (int l = 1; l <= ctx.rank(); ++l)
                row[detail::idx_key("e", {l})] =
                    print_element(detail::vector_coeff(ctx, c.christoffel(i, j), l));
            out[detail::idx_key("s", {i, j})] = std::move(row);
        }
    return out;
}

inline Json curvature_json(const ModuleContext& ctx, const CurvatureData& data) {
    Json out = Json::object();
    for (int i = 1; i <= ctx.rank(); ++i)
        for (int j = 1; j <= ctx.rank(); ++j)
            for (int k = 1; k <= ctx.rank(); ++k)
                for (int l = 1; l <= ctx.rank(); ++l)
                    out[detail::idx_key("R", {i, j, k, l})] = print_element(
                        data.coeff[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1]
                                  [static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(l) - 1]);
    return out;
}

inline Json torsion_json(const ModuleContext& ctx, const TorsionData& data) {
    Json out = Json::object();
    for (int i = 1; i <= ctx.rank(); ++i)
        for (int j = 1; j <= ctx.rank(); ++j)
            for (int l = 1; l <= ctx.rank(); ++l)
                out[detail::idx_key("T", {i, j, l})] =
                    print_element(data.coeff[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1]
                                            [static_cast<std::size_t>(l) - 1]);
    return out;
}

inline Json structure_json(const ModuleContext& ctx, const StructureReport& rep) {
    Json out = Json::object();
    const int n = ctx.rank();
    for (int l = 1; l <= n; ++l)
        out[detail::idx_key("torsion_eq", {l})] = print_field(rep.torsion_eq[static_cast<std::size_t>(l) - 1]);
    for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l)
            out[detail::idx_key("curvature_eq", {k, l})] =
                print_field(rep.curvature_eq[static_cast<std::size_t>((k - 1) * n + (l - 1))]);
    return out;
}

inline Json bianchi_json(const ModuleContext& ctx, const BianchiReport& rep) {
    Json out = Json::object();
    const int n = ctx.rank();
    for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l)
            out[detail::idx_key("curvature_eq", {k, l})] =
                print_field(rep.curvature_eq[static_cast<std::size_t>((k - 1) * n + (l - 1))]);
    for (int l = 1; l <= n; ++l)
        out[detail::idx_key("torsion_eq", {l})] = print_field(rep.torsion_eq[static_cast<std::size_t>(l) - 1]);
    return out;
}

inline Json metric_json(const ModuleContext& ctx, const Metric& m) {
    Json out = Json::object();
    for (int i = 1; i <= ctx.rank(); ++i)
        for (int j = 1; j <= ctx.rank(); ++j)
            out[detail::idx_key("g", {i, j})] =
                print_element(m.matrix[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1]);
    return out;
}

inline Json ricci_json(const ModuleContext& ctx, const std::vector<std::vector<AlgebraElement>>& ric) {
    Json out = Json::object();
    for (int a = 1; a <= ctx.rank(); ++a)
        for (int b = 1; b <= ctx.rank(); ++b)
            out[detail::idx_key("Ric", {a, b})] =
                print_element(ric[static_cast<std::size_t>(a) - 1][static_cast<std::size_t>(b) - 1]);
    return out;
}

inline Json einstein_json(const EinsteinResult& res) {
    Json out = Json::object();
    out["proportional"] = res.proportional;
    out["lambda"] = to_string(res.lambda);
    if (!res.proportional) out["violating_entry"] = detail::idx_key("g", {res.bad_i, res.bad_j});
    return out;
}

inline std::string serialize_report(const Json& j) { return j.dump(2) + "\n"; }

} // namespace braidgeo
