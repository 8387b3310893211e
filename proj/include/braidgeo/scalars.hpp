#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace braidgeo {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

/**
 * Exact element of Q(i): re + im*i with both parts exact rationals.
 * Boost keeps each part in lowest terms with a positive denominator.
 */
struct GaussianRational {
    Rat re;
    Rat im;

    GaussianRational() = default;
    GaussianRational(long long n) : re(n) {}
    GaussianRational(Rat r) : re(std::move(r)) {}
    GaussianRational(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}
    GaussianRational(long long num, long long den) {
        if (den == 0) throw std::domain_error("rational with zero denominator");
        re = Rat(Int(num)) / Rat(Int(den));
    }

    static GaussianRational i() { return GaussianRational(Rat(0), Rat(1)); }

    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    bool is_real() const { return im.is_zero(); }

    friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
        return a.re == b.re && a.im == b.im;
    }
    friend bool operator!=(const GaussianRational& a, const GaussianRational& b) { return !(a == b); }

    GaussianRational operator-() const { return {-re, -im}; }

    // The zero and real-only shortcuts below skip the gcd renormalization boost
    // performs on every rational operation; the bulk of the arithmetic in deformed
    // products runs through them.
    friend GaussianRational operator+(const GaussianRational& a, const GaussianRational& b) {
        if (b.is_zero()) return a;
        if (a.is_zero()) return b;
        return {a.re + b.re, a.im + b.im};
    }
    friend GaussianRational operator-(const GaussianRational& a, const GaussianRational& b) {
        if (b.is_zero()) return a;
        if (a.is_zero()) return -b;
        return {a.re - b.re, a.im - b.im};
    }
    friend GaussianRational operator*(const GaussianRational& a, const GaussianRational& b) {
        if (a.is_zero() || b.is_zero()) return {};
        if (a.is_real()) {
            if (b.is_real()) return {a.re * b.re, Rat()};
            return {a.re * b.re, a.re * b.im};
        }
        if (b.is_real()) return {a.re * b.re, a.im * b.re};
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend GaussianRational operator/(const GaussianRational& a, const GaussianRational& b) {
        Rat n = b.re * b.re + b.im * b.im;
        if (n == 0) throw std::domain_error("division by zero");
        return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
    }

    GaussianRational& operator+=(const GaussianRational& b) { return *this = *this + b; }
    GaussianRational& operator-=(const GaussianRational& b) { return *this = *this - b; }
    GaussianRational& operator*=(const GaussianRational& b) { return *this = *this * b; }
    GaussianRational& operator/=(const GaussianRational& b) { return *this = *this / b; }
};

namespace detail {

inline std::string rat_str(const Rat& r) {
    std::string s = numerator(r).str();
    if (denominator(r) != 1) s += "/" + denominator(r).str();
    return s;
}

// Scans "p" or "p/q" (optional leading sign) starting at pos; advances pos.
inline Rat scan_rational(std::string_view s, std::size_t& pos) {
    std::size_t start = pos;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
    std::size_t d0 = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == d0) throw std::invalid_argument("expected rational in \"" + std::string(s) + "\"");
    Int num(std::string(s.substr(start, pos - start)));
    Int den = 1;
    if (pos < s.size() && s[pos] == '/') {
        ++pos;
        std::size_t d1 = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == d1) throw std::invalid_argument("expected denominator in \"" + std::string(s) + "\"");
        den = Int(std::string(s.substr(d1, pos - d1)));
        if (den == 0) throw std::domain_error("rational with zero denominator");
    }
    return Rat(num) / Rat(den);
}

} // namespace detail

/// Canonical text form: "0", "p/q", "r/s i", or "p/q+r/s i" (unit imaginary part elides the "1").
inline std::string to_string(const GaussianRational& g) {
    using detail::rat_str;
    if (g.im == 0) return rat_str(g.re);
    std::string s;
    if (g.re != 0) {
        s = rat_str(g.re);
        s += (g.im > 0) ? "+" : "-";
    } else if (g.im < 0) {
        s = "-";
    }
    Rat a = abs(g.im);
    if (a != 1) s += rat_str(a) + " ";
    s += "i";
    return s;
}

/// Inverse of to_string; also accepts forms like "2i" and surrounding spaces.
inline GaussianRational parse_gaussian_rational(std::string_view src) {
    std::string s;
    for (char ch : src)
        if (ch != ' ' && ch != '\t') s += ch;
    if (s.empty()) throw std::invalid_argument("empty scalar");
    std::size_t pos = 0;
    GaussianRational out;
    bool first = true;
    while (pos < s.size()) {
        int sign = 1;
        if (s[pos] == '+' || s[pos] == '-') {
            if (s[pos] == '-') sign = -1;
            if (!first || pos + 1 >= s.size()) {
                if (pos + 1 >= s.size()) throw std::invalid_argument("dangling sign in scalar");
            }
            ++pos;
        } else if (!first) {
            throw std::invalid_argument("expected '+' or '-' in scalar \"" + std::string(src) + "\"");
        }
        first = false;
        if (s[pos] == 'i') {
            ++pos;
            out.im += sign;
            continue;
        }
        Rat r = detail::scan_rational(s, pos);
        if (pos < s.size() && s[pos] == 'i') {
            ++pos;
            out.im += Rat(sign) * r;
        } else {
            out.re += Rat(sign) * r;
        }
    }
    if (pos != s.size()) throw std::invalid_argument("trailing characters in scalar \"" + std::string(src) + "\"");
    return out;
}

/**
 * Truncated formal power series in the deformation parameter h, exact
 * coefficients, hard truncation at a fixed order N.  Operations on series of
 * different orders are a usage error, never a silent coercion.
 */
struct Series {
    int order = 0;
    std::vector<GaussianRational> c; // indexed by degree, size order+1

    Series() : c(1) {}
    explicit Series(int N) : order(N), c(static_cast<std::size_t>(N) + 1) {
        if (N < 0) throw std::invalid_argument("negative truncation order");
    }

    static Series zero(int N) { return Series(N); }
    static Series constant(int N, GaussianRational v) {
        Series s(N);
        s.c[0] = std::move(v);
        return s;
    }
    static Series one(int N) { return constant(N, 1); }
    /// h^k, truncated to zero when k > N.
    static Series h_power(int N, int k) {
        Series s(N);
        if (k <= N) s.c[static_cast<std::size_t>(k)] = 1;
        return s;
    }

    bool is_zero() const {
        for (const auto& v : c)
            if (!v.is_zero()) return false;
        return true;
    }
    bool is_unit() const { return !c[0].is_zero(); }

    friend bool operator==(const Series& a, const Series& b) {
        return a.order == b.order && a.c == b.c;
    }
    friend bool operator!=(const Series& a, const Series& b) { return !(a == b); }

    static void check_orders(const Series& a, const Series& b) {
        if (a.order != b.order) throw std::invalid_argument("series truncation order mismatch");
    }

    friend Series operator+(const Series& a, const Series& b) {
        check_orders(a, b);
        Series r(a.order);
        for (int k = 0; k <= a.order; ++k) r.c[k] = a.c[k] + b.c[k];
        return r;
    }
    friend Series operator-(const Series& a, const Series& b) {
        check_orders(a, b);
        Series r(a.order);
        for (int k = 0; k <= a.order; ++k) r.c[k] = a.c[k] - b.c[k];
        return r;
    }
    Series operator-() const {
        Series r(order);
        for (int k = 0; k <= order; ++k) r.c[k] = -c[k];
        return r;
    }
    friend Series operator*(const Series& a, const Series& b) {
        check_orders(a, b);
        Series r(a.order);
        for (int j = 0; j <= a.order; ++j) {
            if (a.c[j].is_zero()) continue;
            for (int k = 0; j + k <= a.order; ++k) {
                if (b.c[k].is_zero()) continue;
                r.c[j + k] += a.c[j] * b.c[k];
            }
        }
        return r;
    }
    Series& operator+=(const Series& b) { return *this = *this + b; }
    Series& operator-=(const Series& b) { return *this = *this - b; }
    Series& operator*=(const Series& b) { return *this = *this * b; }

    Series scaled(const GaussianRational& v) const {
        Series r(order);
        for (int k = 0; k <= order; ++k) r.c[k] = c[k] * v;
        return r;
    }
    /// Multiply by h^k (degrees above N fall off).
    Series shifted(int k) const {
        Series r(order);
        for (int j = 0; j + k <= order; ++j) r.c[j + k] = c[j];
        return r;
    }
};

/// Multiplicative inverse up to the truncation order; geometric-series
/// recursion on the positive-degree part.  Requires a unit (nonzero constant term).
inline Series series_invert(const Series& a) {
    if (!a.is_unit()) throw std::domain_error("series is not a unit (zero constant term)");
    Series r(a.order);
    GaussianRational inv0 = GaussianRational(1) / a.c[0];
    r.c[0] = inv0;
    for (int k = 1; k <= a.order; ++k) {
        GaussianRational acc;
        for (int j = 1; j <= k; ++j) acc += a.c[j] * r.c[k - j];
        r.c[k] = -inv0 * acc;
    }
    return r;
}

inline std::string to_string(const Series& s) {
    std::string out;
    for (int k = 0; k <= s.order; ++k) {
        if (s.c[k].is_zero()) continue;
        if (!out.empty()) out += " + ";
        std::string coeff = to_string(s.c[k]);
        if (k == 0) {
            out += coeff;
        } else {
            std::string hp = (k == 1) ? "h" : "h^" + std::to_string(k);
            if (coeff == "1") out += hp;
            else if (coeff == "-1") out += "-" + hp;
            else if (coeff.find('+') != std::string::npos || coeff.find('-', 1) != std::string::npos ||
                     coeff.find(' ') != std::string::npos)
                out += "(" + coeff + ")*" + hp;
            else out += coeff + "*" + hp;
        }
    }
    return out.empty() ? "0" : out;
}

} // namespace braidgeo
