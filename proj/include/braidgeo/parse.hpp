#pragma once

// Text front end: a recursive descent expression parser producing exact
// algebra elements, printers whose output re-parses to the same element, and
// a sectioned geometry-file reader that assembles a validated module context
// with an optional metric.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <braidgeo/riemann.hpp>

namespace braidgeo {

struct ParseError : std::runtime_error {
    int line = 0, col = 0;
    ParseError(const std::string& msg, int line_, int col_)
        : std::runtime_error("line " + std::to_string(line_) + ", col " + std::to_string(col_) + ": " + msg),
          line(line_), col(col_) {}
};

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

enum class TokKind { number, ident, punct, end };

struct Token {
    TokKind kind = TokKind::end;
    std::string text;
    int line = 1, col = 1;
};

/// Splits the source into numbers, identifier runs, and single punctuation
/// characters, tracking line and column for diagnostics.
class Lexer {
public:
    Lexer(std::string_view src, int line0 = 1) : src_(src), line_(line0) { advance(); }

    const Token& peek() const { return tok_; }

    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                      src_[pos_] == '\r')) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
        tok_.line = line_;
        tok_.col = col_;
        tok_.text.clear();
        if (pos_ >= src_.size()) {
            tok_.kind = TokKind::end;
            return;
        }
        char c = src_[pos_];
        if (c >= '0' && c <= '9') {
            tok_.kind = TokKind::number;
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
                tok_.text += src_[pos_++];
                ++col_;
            }
            return;
        }
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
            // A digit run closes the identifier, so "x1x2" is two tokens.
            tok_.kind = TokKind::ident;
            while (pos_ < src_.size() &&
                   ((src_[pos_] >= 'a' && src_[pos_] <= 'z') || (src_[pos_] >= 'A' && src_[pos_] <= 'Z') ||
                    src_[pos_] == '_')) {
                tok_.text += src_[pos_++];
                ++col_;
            }
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
                tok_.text += src_[pos_++];
                ++col_;
            }
            return;
        }
        tok_.kind = TokKind::punct;
        tok_.text += c;
        ++pos_;
        ++col_;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_;
    int line_ = 1, col_ = 1;
};

/// Recursive descent over: expr := ['-'|'+'] term (('+'|'-') term)*;
/// term := factor (factor | '*' factor)*; factor := atom ('^' nat)?;
/// atom := rational | 'i' | 'h' | coordinate | mode | '(' expr ')' |
/// 'star' '(' expr ',' expr ')'.  Adjacent factors multiply classically.
class ExpressionParser {
public:
    ExpressionParser(std::string_view src, const AlgebraContext& actx, std::vector<std::string>* warnings,
                     int line0 = 1)
        : lex_(src, line0), actx_(actx), warnings_(warnings) {}

    AlgebraElement run() {
        AlgebraElement v = expr();
        const Token& t = lex_.peek();
        if (t.kind != TokKind::end) throw ParseError("unexpected trailing input \"" + t.text + "\"", t.line, t.col);
        return v;
    }

    AlgebraElement expr() {
        bool neg = false;
        if (is_punct("+") || is_punct("-")) neg = lex_.next().text == "-";
        AlgebraElement v = term();
        if (neg) v = -v;
        while (is_punct("+") || is_punct("-")) {
            bool minus = lex_.next().text == "-";
            AlgebraElement rhs = term();
            if (minus)
                v -= rhs;
            else
                v += rhs;
        }
        return v;
    }

private:
    AlgebraElement term() {
        AlgebraElement v = factor();
        for (;;) {
            if (is_punct("*")) {
                lex_.next();
                v = classical_mul(v, factor());
            } else if (starts_atom()) {
                v = classical_mul(v, factor());
            } else {
                return v;
            }
        }
    }

    AlgebraElement factor() {
        // Powers of h short-circuit so the truncation warning can fire.
        if (lex_.peek().kind == TokKind::ident && lex_.peek().text == "h") {
            lex_.next();
            if (!is_punct("^")) return h_element(1);
            lex_.next();
            Token n = lex_.next();
            if (n.kind != TokKind::number) throw ParseError("expected an exponent after '^'", n.line, n.col);
            return h_element(std::stoi(n.text));
        }
        AlgebraElement v = atom();
        if (is_punct("^")) {
            Token n0 = lex_.next();
            Token n = lex_.next();
            if (n.kind != TokKind::number) throw ParseError("expected an exponent after '^'", n.line, n.col);
            long k = std::stol(n.text);
            AlgebraElement r = AlgebraElement::unit(v.kind, v.dim, v.order);
            for (long t = 0; t < k; ++t) r = classical_mul(r, v);
            (void)n0;
            return r;
        }
        return v;
    }

    AlgebraElement atom() {
        Token t = lex_.peek();
        if (t.kind == TokKind::number) {
            lex_.next();
            GaussianRational c(Rat(t.text));
            if (is_punct("/")) {
                lex_.next();
                Token d = lex_.next();
                if (d.kind != TokKind::number) throw ParseError("expected a denominator after '/'", d.line, d.col);
                if (Rat(d.text) == 0) throw ParseError("zero denominator", d.line, d.col);
                c = c / GaussianRational(Rat(d.text));
            }
            return unit().scaled(c);
        }
        if (t.kind == TokKind::ident) {
            if (t.text == "i") {
                lex_.next();
                return unit().scaled(GaussianRational::i());
            }
            if (t.text == "star") {
                lex_.next();
                expect("(");
                AlgebraElement a = expr();
                expect(",");
                AlgebraElement b = expr();
                expect(")");
                return star(actx_, a, b);
            }
            if (t.text.size() > 1 && t.text[0] == 'x' && all_digits(t.text.substr(1))) {
                lex_.next();
                if (kind() != AlgebraKind::polynomial)
                    throw ParseError("coordinate generators exist only on the polynomial algebra", t.line, t.col);
                int j = std::stoi(t.text.substr(1));
                if (j < 1 || j > dim())
                    throw ParseError("unknown generator \"" + t.text + "\" (dim = " + std::to_string(dim()) + ")",
                                     t.line, t.col);
                return AlgebraElement::coordinate(j, dim(), order());
            }
            if (t.text == "U") {
                lex_.next();
                if (kind() != AlgebraKind::torus)
                    throw ParseError("mode generators exist only on the torus algebra", t.line, t.col);
                expect("[");
                std::vector<int> e;
                for (;;) {
                    bool neg = false;
                    if (is_punct("-")) {
                        lex_.next();
                        neg = true;
                    }
                    Token n = lex_.next();
                    if (n.kind != TokKind::number)
                        throw ParseError("expected an integer mode exponent", n.line, n.col);
                    e.push_back(neg ? -std::stoi(n.text) : std::stoi(n.text));
                    if (is_punct(",")) {
                        lex_.next();
                        continue;
                    }
                    break;
                }
                expect("]");
                if (static_cast<int>(e.size()) != dim())
                    throw ParseError("mode needs " + std::to_string(dim()) + " exponents", t.line, t.col);
                AlgebraElement a = AlgebraElement::zero(kind(), dim(), order());
                a.add_term(BasisMonomial(kind(), std::move(e)), Series::one(order()));
                return a;
            }
            throw ParseError("unknown generator \"" + t.text + "\"", t.line, t.col);
        }
        if (is_punct("(")) {
            lex_.next();
            AlgebraElement v = expr();
            expect(")");
            return v;
        }
        throw ParseError(t.kind == TokKind::end ? "unexpected end of input" : "unexpected \"" + t.text + "\"",
                         t.line, t.col);
    }

    // 'h' carries the truncation order with it: a power beyond the order is
    // silently zero in the ring, so it only warrants a warning.
    AlgebraElement h_element(int k) {
        if (k > order() && warnings_)
            warnings_->push_back("h^" + std::to_string(k) + " exceeds the truncation order " +
                                 std::to_string(order()) + " and is dropped");
        return unit().scaled(Series::h_power(order(), k));
    }

    AlgebraElement unit() const { return AlgebraElement::unit(kind(), dim(), order()); }
    AlgebraKind kind() const { return actx_.spec.kind; }
    int dim() const { return actx_.spec.dim; }
    int order() const { return actx_.order; }

    bool is_punct(const char* s) const {
        return lex_.peek().kind == TokKind::punct && lex_.peek().text == s;
    }

    bool starts_atom() const {
        const Token& t = lex_.peek();
        if (t.kind == TokKind::number) return true;
        if (t.kind == TokKind::ident) return true;
        return t.kind == TokKind::punct && t.text == "(";
    }

    void expect(const char* s) {
        Token t = lex_.next();
        if (t.kind == TokKind::end || t.text != s)
            throw ParseError("expected \"" + std::string(s) + "\"" +
                                 (t.kind == TokKind::end ? "" : ", found \"" + t.text + "\""),
                             t.line, t.col);
    }

    static bool all_digits(std::string_view s) {
        if (s.empty()) return false;
        for (char c : s)
            if (c < '0' || c > '9') return false;
        return true;
    }

    Lexer lex_;
    const AlgebraContext& actx_;
    std::vector<std::string>* warnings_;

    friend std::vector<AlgebraElement> parse_frame_combination(std::string_view, const AlgebraContext&, int, int);
};

} // namespace detail

inline AlgebraElement parse_expression(std::string_view src, const AlgebraContext& actx,
                                       std::vector<std::string>* warnings = nullptr) {
    return detail::ExpressionParser(src, actx, warnings).run();
}

namespace detail {

/// frame combination := ['-'] cterm (('+'|'-') cterm)*;
/// cterm := (factor ('*'? factor)*)? 'e' '[' nat ']'.  Returns the rank-long
/// coefficient vector of the combination.
inline std::vector<AlgebraElement> parse_frame_combination(std::string_view src, const AlgebraContext& actx,
                                                           int rank, int line0) {
    ExpressionParser p(src, actx, nullptr, line0);
    std::vector<AlgebraElement> out(static_cast<std::size_t>(rank),
                                    AlgebraElement::zero(actx.spec.kind, actx.spec.dim, actx.order));
    auto cterm = [&]() -> std::pair<int, AlgebraElement> {
        AlgebraElement coeff = AlgebraElement::unit(actx.spec.kind, actx.spec.dim, actx.order);
        for (;;) {
            const Token& t = p.lex_.peek();
            if (t.kind == TokKind::ident && t.text == "e") {
                p.lex_.next();
                p.expect("[");
                Token n = p.lex_.next();
                if (n.kind != TokKind::number) throw ParseError("expected a frame index", n.line, n.col);
                int k = std::stoi(n.text);
                if (k < 1 || k > rank)
                    throw ParseError("frame index " + n.text + " out of range (rank = " + std::to_string(rank) + ")",
                                     n.line, n.col);
                p.expect("]");
                return {k, coeff};
            }
            if (t.kind == TokKind::punct && t.text == "*") {
                p.lex_.next();
                continue;
            }
            coeff = classical_mul(coeff, p.factor());
        }
    };
    bool neg = false;
    if (p.is_punct("-") || p.is_punct("+")) neg = p.lex_.next().text == "-";
    for (;;) {
        auto [k, coeff] = cterm();
        if (neg) coeff = -coeff;
        out[static_cast<std::size_t>(k) - 1] += coeff;
        const Token& t = p.lex_.peek();
        if (t.kind == TokKind::end) break;
        if (t.kind == TokKind::punct && (t.text == "+" || t.text == "-")) {
            neg = t.text == "-";
            p.lex_.next();
            continue;
        }
        throw ParseError("unexpected \"" + t.text + "\" in frame combination", t.line, t.col);
    }
    return out;
}

inline std::string monomial_text(const BasisMonomial& m) {
    if (m.kind == AlgebraKind::torus) {
        bool trivial = true;
        for (int e : m.index) trivial = trivial && e == 0;
        if (trivial) return "";
        std::string s = "U[";
        for (std::size_t j = 0; j < m.index.size(); ++j) {
            if (j) s += ",";
            s += std::to_string(m.index[j]);
        }
        return s + "]";
    }
    std::string s;
    for (std::size_t j = 0; j < m.index.size(); ++j) {
        if (m.index[j] == 0) continue;
        if (!s.empty()) s += "*";
        s += "x" + std::to_string(j + 1);
        if (m.index[j] > 1) s += "^" + std::to_string(m.index[j]);
    }
    return s;
}

} // namespace detail

/// Canonical text form of an element, ordered by deformation degree and then
/// by monomial.  The output re-parses to the same element.
inline std::string print_element(const AlgebraElement& a) {
    std::string out;
    for (int k = 0; k <= a.order; ++k) {
        for (const auto& [m, s] : a.terms) {
            GaussianRational c = s.c[static_cast<std::size_t>(k)];
            if (c.is_zero()) continue;
            bool neg = (c.im == 0 && c.re < 0) || (c.re == 0 && c.im < 0);
            if (neg) c = -c;
            std::vector<std::string> parts;
            std::string cs = to_string(c);
            std::string mono = detail::monomial_text(m);
            if (cs != "1" || (k == 0 && mono.empty())) {
                bool wrap = cs.find('+') != std::string::npos || cs.find('-', 1) != std::string::npos;
                parts.push_back(wrap ? "(" + cs + ")" : cs);
            }
            if (k == 1) parts.push_back("h");
            if (k > 1) parts.push_back("h^" + std::to_string(k));
            if (!mono.empty()) parts.push_back(mono);
            std::string term;
            for (std::size_t t = 0; t < parts.size(); ++t) {
                if (t) term += "*";
                term += parts[t];
            }
            if (out.empty())
                out = neg ? "-" + term : term;
            else
                out += (neg ? " - " : " + ") + term;
        }
    }
    return out.empty() ? "0" : out;
}

/// Readable text form of a tensor field: one coefficient * leg-product term
/// per normal-form entry, form legs as w[i], vector legs as e[j].
inline std::string print_field(const TensorField& t) {
    if (t.is_zero()) return "0";
    std::string out;
    for (const auto& [key, c] : t.terms) {
        std::string term;
        std::string cs = print_element(c);
        bool wrap = cs.find(' ') != std::string::npos;
        term = wrap ? "(" + cs + ")" : cs;
        for (const Leg& l : key)
            term += std::string("*") + (l.form ? "w[" : "e[") + std::to_string(l.idx) + "]";
        if (!out.empty()) out += " + ";
        out += term;
    }
    return out;
}

struct SuiteConfig {
    std::uint64_t seed = 0;
    int samples = 25;
};

/// A fully validated geometry: module context, optional metric, suite
/// defaults, and the raw file text for hashing.
struct Geometry {
    std::string name = "geometry";
    int order = 0;
    ModuleContext ctx;
    bool has_metric = false;
    Metric metric;
    SuiteConfig suite;
    std::string source_text;
    std::string origin;
    std::vector<std::string> warnings;
};

namespace detail {

struct RawEntry {
    int line = 0;
    std::string key;
    std::string value;
};

struct RawGeometry {
    std::string origin;
    std::string text;
    std::map<std::string, std::vector<RawEntry>> sections;
};

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return std::string(s.substr(a, b - a));
}

[[noreturn]] inline void spec_fail(const std::string& origin, int line, const std::string& msg) {
    throw SpecError(origin + ":" + std::to_string(line) + ": " + msg);
}

inline RawGeometry read_raw_geometry(std::string text, std::string origin) {
    RawGeometry raw;
    raw.origin = std::move(origin);
    raw.text = std::move(text);
    std::istringstream in(raw.text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::string body = trim(line);
        if (body.empty()) continue;
        if (body.front() == '[' && body.back() == ']') {
            section = trim(std::string_view(body).substr(1, body.size() - 2));
            static const char* known[] = {"algebra", "twist", "frame", "metric", "suite"};
            bool ok = false;
            for (const char* k : known) ok = ok || section == k;
            if (!ok) spec_fail(raw.origin, lineno, "unknown section [" + section + "]");
            raw.sections[section];
            continue;
        }
        RawEntry e;
        e.line = lineno;
        if (section == "twist") {
            e.value = body;
        } else {
            auto eq = body.find('=');
            if (eq == std::string::npos) spec_fail(raw.origin, lineno, "expected key = value");
            e.key = trim(std::string_view(body).substr(0, eq));
            e.value = trim(std::string_view(body).substr(eq + 1));
            if (e.key.empty()) spec_fail(raw.origin, lineno, "empty key");
        }
        raw.sections[section].push_back(std::move(e));
    }
    return raw;
}

/// Parses an indexed key like "g[1,2]" or "e[1](x[2])" into its name and the
/// integer arguments; returns false when the shape does not match.
inline bool indexed_key(const std::string& key, const std::string& name, int nargs, std::vector<int>& out) {
    if (key.size() < name.size() + 2 || key.compare(0, name.size(), name) != 0) return false;
    std::size_t pos = name.size();
    if (key[pos] != '[') return false;
    ++pos;
    out.clear();
    for (int k = 0; k < nargs; ++k) {
        bool neg = pos < key.size() && key[pos] == '-';
        if (neg) ++pos;
        std::size_t start = pos;
        while (pos < key.size() && key[pos] >= '0' && key[pos] <= '9') ++pos;
        if (pos == start) return false;
        out.push_back((neg ? -1 : 1) * std::stoi(key.substr(start, pos - start)));
        if (k + 1 < nargs) {
            if (pos >= key.size() || key[pos] != ',') return false;
            ++pos;
        }
    }
    if (pos >= key.size() || key[pos] != ']') return false;
    return pos + 1 == key.size();
}

inline std::vector<std::vector<GaussianRational>> parse_constant_matrix(const std::string& src,
                                                                        const std::string& origin, int line) {
    std::vector<std::vector<GaussianRational>> rows;
    std::size_t pos = 0;
    auto skip = [&]() {
        while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t')) ++pos;
    };
    auto expect = [&](char c) {
        skip();
        if (pos >= src.size() || src[pos] != c)
            spec_fail(origin, line, std::string("expected '") + c + "' in constant matrix");
        ++pos;
    };
    expect('[');
    for (;;) {
        expect('[');
        std::vector<GaussianRational> row;
        for (;;) {
            skip();
            std::size_t start = pos;
            while (pos < src.size() && src[pos] != ',' && src[pos] != ']') ++pos;
            if (pos >= src.size()) spec_fail(origin, line, "unterminated constant matrix row");
            row.push_back(parse_gaussian_rational(trim(std::string_view(src).substr(start, pos - start))));
            if (src[pos] == ',') {
                ++pos;
                continue;
            }
            ++pos; // ']'
            break;
        }
        rows.push_back(std::move(row));
        skip();
        if (pos < src.size() && src[pos] == ',') {
            ++pos;
            continue;
        }
        expect(']');
        break;
    }
    skip();
    if (pos != src.size()) spec_fail(origin, line, "trailing input after constant matrix");
    return rows;
}

inline GaussianRational constant_value(const AlgebraElement& a, const std::string& origin, int line,
                                       const std::string& what) {
    GaussianRational out;
    for (const auto& [m, s] : a.terms) {
        bool unit_mono = true;
        for (int e : m.index) unit_mono = unit_mono && e == 0;
        for (int k = 0; k <= a.order; ++k) {
            const GaussianRational& c = s.c[static_cast<std::size_t>(k)];
            if (c.is_zero()) continue;
            if (!unit_mono || k != 0) spec_fail(origin, line, what + " must be a constant");
            out = c;
        }
    }
    return out;
}

} // namespace detail

/// Parses and validates a geometry file.  Every cross-reference is resolved
/// and every structural invariant of the referenced layers (commuting
/// actions, invariant dual pairing, braided symmetry and order-zero
/// invertibility of the metric) is checked before the geometry is returned.
inline Geometry parse_geometry(std::string text, std::string origin) {
    detail::RawGeometry raw = detail::read_raw_geometry(std::move(text), std::move(origin));
    const std::string& org = raw.origin;
    auto fail = [&](int line, const std::string& msg) { detail::spec_fail(org, line, msg); };

    Geometry geo;
    geo.origin = org;
    geo.source_text = raw.text;

    // Top-level scalars.
    int order = -1;
    for (const auto& e : raw.sections[""]) {
        if (e.key == "name")
            geo.name = e.value;
        else if (e.key == "order")
            order = std::stoi(e.value);
        else
            fail(e.line, "unknown top-level key \"" + e.key + "\"");
    }
    if (order < 0) throw SpecError(org + ": missing top-level \"order = N\"");
    geo.order = order;

    // Algebra section.
    if (!raw.sections.count("algebra")) throw SpecError(org + ": missing [algebra] section");
    AlgebraKind kind = AlgebraKind::polynomial;
    bool kind_seen = false;
    int dim = 0, sym = 0;
    std::vector<detail::RawEntry> actions;
    for (const auto& e : raw.sections["algebra"]) {
        if (e.key == "kind") {
            kind_seen = true;
            if (e.value == "polynomial")
                kind = AlgebraKind::polynomial;
            else if (e.value == "torus")
                kind = AlgebraKind::torus;
            else
                fail(e.line, "kind must be polynomial or torus");
        } else if (e.key == "dim") {
            dim = std::stoi(e.value);
        } else if (e.key == "sym") {
            sym = std::stoi(e.value);
        } else {
            actions.push_back(e);
        }
    }
    if (!kind_seen) throw SpecError(org + ": [algebra] needs \"kind = polynomial|torus\"");
    if (dim < 1) throw SpecError(org + ": [algebra] needs \"dim = n\" with n >= 1");
    if (sym == 0) sym = dim;

    AlgebraSpec aspec;
    if (sym == dim) {
        aspec = kind == AlgebraKind::polynomial ? AlgebraSpec::coordinate_derivations(dim, order)
                                                : AlgebraSpec::torus_phase_derivations(dim);
    } else {
        aspec.kind = kind;
        aspec.dim = dim;
        aspec.sym = sym;
        if (kind == AlgebraKind::polynomial)
            aspec.derivation_values.assign(
                static_cast<std::size_t>(sym),
                std::vector<AlgebraElement>(static_cast<std::size_t>(dim),
                                            AlgebraElement::zero(kind, dim, order)));
        else
            aspec.eigen.assign(static_cast<std::size_t>(sym),
                               std::vector<GaussianRational>(static_cast<std::size_t>(dim)));
    }

    // Action lines need an expression context; the deformed product is not
    // defined until the twist is fixed, so star() is rejected here by parsing
    // against a trivial twist.
    TwistSpec trivial;
    trivial.generators = sym;
    AlgebraContext plain = AlgebraContext::make(aspec, trivial, order);
    for (const auto& e : actions) {
        std::vector<int> zi, gi;
        auto bar = e.key.find("|>");
        if (bar == std::string::npos) fail(e.line, "unknown [algebra] key \"" + e.key + "\"");
        std::string lhs = detail::trim(std::string_view(e.key).substr(0, bar));
        std::string rhs = detail::trim(std::string_view(e.key).substr(bar + 2));
        if (!detail::indexed_key(lhs, "Z", 1, zi)) fail(e.line, "expected Z[a] on the left of |>");
        if (zi[0] < 1 || zi[0] > sym) fail(e.line, "symmetry generator index out of range");
        if (kind == AlgebraKind::polynomial) {
            if (!detail::indexed_key(rhs, "x", 1, gi)) fail(e.line, "expected x[j] after |>");
            if (gi[0] < 1 || gi[0] > dim) fail(e.line, "coordinate index out of range");
            try {
                aspec.derivation_values[static_cast<std::size_t>(zi[0]) - 1][static_cast<std::size_t>(gi[0]) - 1] =
                    parse_expression(e.value, plain, &geo.warnings);
            } catch (const ParseError& pe) {
                fail(e.line, pe.what());
            }
        } else {
            if (!detail::indexed_key(rhs, "U", 1, gi)) fail(e.line, "expected U[j] after |>");
            if (gi[0] < 1 || gi[0] > dim) fail(e.line, "mode index out of range");
            try {
                AlgebraElement v = parse_expression(e.value, plain, &geo.warnings);
                aspec.eigen[static_cast<std::size_t>(zi[0]) - 1][static_cast<std::size_t>(gi[0]) - 1] =
                    detail::constant_value(v, org, e.line, "a torus eigenvalue");
            } catch (const ParseError& pe) {
                fail(e.line, pe.what());
            }
        }
    }

    // Twist section.
    TwistSpec twist;
    twist.generators = sym;
    for (const auto& e : raw.sections["twist"]) {
        const std::string& s = e.value;
        std::size_t pos = 0;
        auto expect = [&](char c) {
            while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
            if (pos >= s.size() || s[pos] != c)
                fail(e.line, std::string("expected '") + c + "' in twist pair");
            ++pos;
        };
        auto integer = [&]() {
            while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
            std::size_t start = pos;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
            if (pos == start) fail(e.line, "expected a generator index in twist pair");
            return std::stoi(s.substr(start, pos - start));
        };
        expect('(');
        int a = integer();
        expect(',');
        int b = integer();
        expect(',');
        expect('"');
        std::size_t start = pos;
        while (pos < s.size() && s[pos] != '"') ++pos;
        if (pos >= s.size()) fail(e.line, "unterminated weight string in twist pair");
        std::string weight = s.substr(start, pos - start);
        ++pos;
        expect(')');
        if (a < 1 || a > sym || b < 1 || b > sym) fail(e.line, "twist generator index out of range");
        try {
            twist.pairs.emplace_back(a, b, parse_gaussian_rational(weight));
        } catch (const std::exception& ex) {
            fail(e.line, std::string("bad twist weight: ") + ex.what());
        }
    }

    AlgebraContext actx = AlgebraContext::make(aspec, twist, order);

    // Frame section.
    int rank = dim;
    std::vector<detail::RawEntry> frame_lines;
    for (const auto& e : raw.sections["frame"]) {
        if (e.key == "rank")
            rank = std::stoi(e.value);
        else
            frame_lines.push_back(e);
    }
    if (rank < 1) throw SpecError(org + ": frame rank must be >= 1");

    bool any_action_line = false;
    for (const auto& e : frame_lines) any_action_line = any_action_line || e.key.compare(0, 2, "e[") == 0;

    FrameSpec frame;
    if (!any_action_line && rank == dim) {
        frame = FrameSpec::coordinate(aspec, order);
    } else {
        frame.rank = rank;
        AlgebraElement zero = AlgebraElement::zero(kind, dim, order);
        frame.frame_action.assign(static_cast<std::size_t>(rank),
                                  std::vector<AlgebraElement>(static_cast<std::size_t>(dim), zero));
        frame.sym_vec.assign(static_cast<std::size_t>(sym),
                             std::vector<std::vector<AlgebraElement>>(
                                 static_cast<std::size_t>(rank),
                                 std::vector<AlgebraElement>(static_cast<std::size_t>(rank), zero)));
        frame.structure.assign(static_cast<std::size_t>(rank),
                               std::vector<std::vector<AlgebraElement>>(
                                   static_cast<std::size_t>(rank),
                                   std::vector<AlgebraElement>(static_cast<std::size_t>(rank), zero)));
    }

    const char* coord_name = kind == AlgebraKind::polynomial ? "x" : "U";
    for (const auto& e : frame_lines) {
        std::vector<int> fi, gi, ci;
        auto bar = e.key.find("|>");
        if (bar != std::string::npos) {
            std::string lhs = detail::trim(std::string_view(e.key).substr(0, bar));
            std::string rhs = detail::trim(std::string_view(e.key).substr(bar + 2));
            if (!detail::indexed_key(lhs, "Z", 1, fi)) fail(e.line, "expected Z[a] on the left of |>");
            if (!detail::indexed_key(rhs, "e", 1, gi)) fail(e.line, "expected e[i] after |>");
            if (fi[0] < 1 || fi[0] > sym) fail(e.line, "symmetry generator index out of range");
            if (gi[0] < 1 || gi[0] > rank) fail(e.line, "frame index out of range");
            try {
                frame.sym_vec[static_cast<std::size_t>(fi[0]) - 1][static_cast<std::size_t>(gi[0]) - 1] =
                    detail::parse_frame_combination(e.value, actx, rank, 1);
            } catch (const ParseError& pe) {
                fail(e.line, pe.what());
            }
            continue;
        }
        if (detail::indexed_key(e.key, "C", 3, ci)) {
            for (int v : ci)
                if (v < 1 || v > rank) fail(e.line, "structure constant index out of range");
            try {
                frame.structure[static_cast<std::size_t>(ci[0]) - 1][static_cast<std::size_t>(ci[1]) - 1]
                               [static_cast<std::size_t>(ci[2]) - 1] =
                    parse_expression(e.value, actx, &geo.warnings);
            } catch (const ParseError& pe) {
                fail(e.line, pe.what());
            }
            continue;
        }
        // e[i](x[j]) = expr  or  e[i](U[j]) = expr
        auto paren = e.key.find('(');
        if (paren == std::string::npos || e.key.back() != ')')
            fail(e.line, "unknown [frame] key \"" + e.key + "\"");
        std::string head = detail::trim(std::string_view(e.key).substr(0, paren));
        std::string arg = detail::trim(std::string_view(e.key).substr(paren + 1, e.key.size() - paren - 2));
        if (!detail::indexed_key(head, "e", 1, fi)) fail(e.line, "expected e[i] before the argument");
        if (!detail::indexed_key(arg, coord_name, 1, gi))
            fail(e.line, std::string("expected ") + coord_name + "[j] as the argument");
        if (fi[0] < 1 || fi[0] > rank) fail(e.line, "frame index out of range");
        if (gi[0] < 1 || gi[0] > dim) fail(e.line, "generator index out of range");
        try {
            frame.frame_action[static_cast<std::size_t>(fi[0]) - 1][static_cast<std::size_t>(gi[0]) - 1] =
                parse_expression(e.value, actx, &geo.warnings);
        } catch (const ParseError& pe) {
            fail(e.line, pe.what());
        }
    }

    // The dual basis exists iff the frame derivation matrix is invertible;
    // order zero decides because corrections are nilpotent.
    {
        std::vector<std::vector<GaussianRational>> m0(
            static_cast<std::size_t>(rank), std::vector<GaussianRational>(static_cast<std::size_t>(dim)));
        if (rank != dim) throw SpecError(org + ": frame rank must match the algebra dimension");
        for (int i = 0; i < rank; ++i)
            for (int j = 0; j < dim; ++j) {
                const AlgebraElement& a = frame.frame_action[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                for (const auto& [mm, s] : a.terms) {
                    bool unit_mono = true;
                    for (int ee : mm.index) unit_mono = unit_mono && ee == 0;
                    if (unit_mono) m0[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s.c[0];
                }
            }
        try {
            detail::invert_matrix(m0);
        } catch (const std::invalid_argument&) {
            throw SpecError(org + ": dual-basis error: the frame derivation matrix is singular at order zero, "
                                  "so <e_i, w^j> = delta_ij has no solution");
        }
    }

    try {
        geo.ctx = ModuleContext::make(actx, frame);
    } catch (const std::invalid_argument& ex) {
        throw SpecError(org + ": " + ex.what());
    }

    // Metric section.
    bool any_metric = false;
    std::vector<std::vector<AlgebraElement>> entries(
        static_cast<std::size_t>(rank),
        std::vector<AlgebraElement>(static_cast<std::size_t>(rank), AlgebraElement::zero(kind, dim, order)));
    std::optional<std::vector<std::vector<GaussianRational>>> g0_inverse;
    int g0_line = 0;
    for (const auto& e : raw.sections["metric"]) {
        std::vector<int> gi;
        if (e.key == "g0_inverse") {
            g0_inverse = detail::parse_constant_matrix(e.value, org, e.line);
            g0_line = e.line;
            continue;
        }
        if (!detail::indexed_key(e.key, "g", 2, gi)) fail(e.line, "unknown [metric] key \"" + e.key + "\"");
        if (gi[0] < 1 || gi[0] > rank || gi[1] < 1 || gi[1] > rank) fail(e.line, "metric index out of range");
        any_metric = true;
        try {
            entries[static_cast<std::size_t>(gi[0]) - 1][static_cast<std::size_t>(gi[1]) - 1] =
                parse_expression(e.value, actx, &geo.warnings);
        } catch (const ParseError& pe) {
            fail(e.line, pe.what());
        }
    }
    if (any_metric) {
        try {
            geo.metric = Metric::make(geo.ctx, metric_from_entries(geo.ctx, entries));
        } catch (const std::invalid_argument& ex) {
            std::string msg = ex.what();
            if (msg.find("braided symmetric") != std::string::npos)
                throw SpecError(org + ": metric not braided symmetric: g != tau(g)");
            throw SpecError(org + ": " + msg);
        }
        geo.has_metric = true;
        if (g0_inverse) {
            const auto& given = *g0_inverse;
            const auto& computed = geo.metric.classical_inverse;
            bool match = given.size() == computed.size();
            for (std::size_t i = 0; match && i < given.size(); ++i) {
                match = given[i].size() == computed[i].size();
                for (std::size_t j = 0; match && j < given[i].size(); ++j)
                    match = given[i][j] == computed[i][j];
            }
            if (!match)
                detail::spec_fail(org, g0_line,
                                  "g0_inverse does not invert the order-zero metric matrix exactly");
        }
    } else if (g0_inverse) {
        detail::spec_fail(org, g0_line, "g0_inverse given without metric entries");
    }

    // Suite section.
    for (const auto& e : raw.sections["suite"]) {
        if (e.key == "seed")
            geo.suite.seed = std::stoull(e.value);
        else if (e.key == "samples")
            geo.suite.samples = std::stoi(e.value);
        else
            fail(e.line, "unknown [suite] key \"" + e.key + "\"");
    }
    if (geo.suite.samples < 1) throw SpecError(org + ": suite samples must be >= 1");

    return geo;
}

inline Geometry load_geometry(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError(path + ": cannot open geometry file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_geometry(buf.str(), path);
}

} // namespace braidgeo
