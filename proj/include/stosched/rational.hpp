#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stosched {

/// Arbitrary-precision integer.
using BigInt = boost::multiprecision::cpp_int;

/// Exact rational number, always kept in lowest terms with positive
/// denominator. All core computations use this type; floating point is
/// reserved for clearly-flagged approximate outputs (Monte-Carlo errors).
using Rational = boost::multiprecision::cpp_rational;

inline BigInt numerator(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt denominator(const Rational& r) { return boost::multiprecision::denominator(r); }

inline bool is_integer(const Rational& r) { return denominator(r) == 1; }

/// Formats as "p/q", or plain "p" when the denominator is 1. This is the
/// wire format used in all JSON/CSV reports; no decimals ever appear.
inline std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

/// Parses "p/q" or "p" (meaning p/1). The numerator may be signed; the
/// denominator must be a positive integer. Whitespace is not accepted.
inline Rational parse_rational(std::string_view text) {
    const auto fail = [&] {
        throw std::invalid_argument("malformed rational: '" + std::string(text) + "'");
    };
    if (text.empty()) fail();
    const auto slash = text.find('/');
    const auto is_int = [](std::string_view s) {
        if (!s.empty() && (s[0] == '+' || s[0] == '-')) s.remove_prefix(1);
        if (s.empty()) return false;
        for (char c : s)
            if (c < '0' || c > '9') return false;
        return true;
    };
    try {
        if (slash == std::string_view::npos) {
            if (!is_int(text)) fail();
            return Rational(BigInt(std::string(text)));
        }
        const auto num = text.substr(0, slash);
        const auto den = text.substr(slash + 1);
        if (!is_int(num) || !is_int(den) || den[0] == '+' || den[0] == '-') fail();
        BigInt d{std::string(den)};
        if (d == 0) fail();
        return Rational(BigInt(std::string(num)), d);
    } catch (const std::runtime_error&) {
        fail();
    }
    return Rational();  // unreachable
}

/// floor(r) as a big integer.
inline BigInt floor_int(const Rational& r) {
    BigInt q = numerator(r) / denominator(r);
    if (numerator(r) < 0 && q * denominator(r) != numerator(r)) --q;
    return q;
}

/// ceil(r) as a big integer.
inline BigInt ceil_int(const Rational& r) {
    BigInt q = numerator(r) / denominator(r);
    if (numerator(r) > 0 && q * denominator(r) != numerator(r)) ++q;
    return q;
}

inline BigInt lcm_big(const BigInt& a, const BigInt& b) {
    if (a == 0 || b == 0) return 0;
    return a / boost::multiprecision::gcd(a, b) * b;
}

}  // namespace stosched
