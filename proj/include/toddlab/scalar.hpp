#pragma once

// Scalar: the shared numeric abstraction. Two precision modes:
//
//   Exact   - reduced big rational (boost::multiprecision::cpp_rational).
//             Arithmetic is mathematically exact; results whose numerator
//             plus denominator exceed the ambient bit limit raise
//             BitLimitExceeded instead of rounding.
//   Float64 - plain binary64.
//
// Mixing modes in one operation raises ModeMismatch. Operations are pure;
// exact results additionally depend on the ambient bit limit (thread-local,
// see BitLimitGuard).

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "toddlab/errors.hpp"

namespace toddlab {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

enum class Mode { Exact, Float64 };

inline const char* mode_name(Mode m) { return m == Mode::Exact ? "exact" : "f64"; }

inline constexpr std::uint64_t kDefaultBitLimit = 1'000'000;
inline constexpr double kDefaultRelTolerance = 1e-9;

struct PrecisionConfig {
    Mode mode = Mode::Float64;
    std::uint64_t bit_limit = kDefaultBitLimit;
    double relative_tolerance = kDefaultRelTolerance;

    void validate() const {
        if (bit_limit < 64) raise(Errc::InvalidArgument, "bit_limit must be >= 64");
        if (!(relative_tolerance >= 0.0 && relative_tolerance < 1.0))
            raise(Errc::InvalidArgument, "relative_tolerance must be in [0, 1)");
    }
};

namespace detail {
inline thread_local std::uint64_t ambient_bit_limit = kDefaultBitLimit;

// Bits needed for |n|; zero counts as one bit.
inline std::uint64_t int_bits(const BigInt& n) {
    if (n == 0) return 1;
    return static_cast<std::uint64_t>(boost::multiprecision::msb(boost::multiprecision::abs(n))) + 1;
}

inline std::uint64_t rational_bits(const BigRational& q) {
    return int_bits(numerator(q)) + int_bits(denominator(q));
}

inline void enforce_bit_limit(const BigRational& q) {
    const std::uint64_t bits = rational_bits(q);
    if (bits > ambient_bit_limit)
        raise(Errc::BitLimitExceeded, "exact result needs " + std::to_string(bits) +
                                          " bits, limit is " + std::to_string(ambient_bit_limit));
}
}  // namespace detail

/// Scopes the exact-mode bit limit for the current thread.
class BitLimitGuard {
public:
    explicit BitLimitGuard(std::uint64_t limit) : previous_(detail::ambient_bit_limit) {
        if (limit < 64) raise(Errc::InvalidArgument, "bit_limit must be >= 64");
        detail::ambient_bit_limit = limit;
    }
    ~BitLimitGuard() { detail::ambient_bit_limit = previous_; }
    BitLimitGuard(const BitLimitGuard&) = delete;
    BitLimitGuard& operator=(const BitLimitGuard&) = delete;

private:
    std::uint64_t previous_;
};

// Square root of an exact rational when it is itself rational.
inline std::optional<BigRational> exact_sqrt(const BigRational& q) {
    if (q < 0) return std::nullopt;
    if (q == 0) return BigRational(0);
    const BigInt num = numerator(q), den = denominator(q);
    const BigInt sn = boost::multiprecision::sqrt(num);
    const BigInt sd = boost::multiprecision::sqrt(den);
    if (sn * sn != num || sd * sd != den) return std::nullopt;
    return BigRational(sn, sd);
}

class Scalar {
public:
    Scalar() : value_(0.0) {}

    static Scalar exact(long long v) { return Scalar(BigRational(v)); }
    static Scalar exact(long long num, long long den) {
        if (den == 0) raise(Errc::DivisionByZero, "rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        return Scalar(BigRational(num, den));
    }
    static Scalar exact(BigRational q) { return Scalar(std::move(q)); }
    static Scalar f64(double v) { return Scalar(v); }

    /// Integer literal in the requested mode.
    static Scalar of(long long v, Mode m) {
        return m == Mode::Exact ? exact(v) : f64(static_cast<double>(v));
    }

    Mode mode() const { return std::holds_alternative<BigRational>(value_) ? Mode::Exact : Mode::Float64; }
    bool is_exact() const { return mode() == Mode::Exact; }

    const BigRational& rational() const {
        if (!is_exact()) raise(Errc::ModeMismatch, "scalar is not in exact mode");
        return std::get<BigRational>(value_);
    }
    double as_f64() const {
        if (is_exact()) return std::get<BigRational>(value_).convert_to<double>();
        return std::get<double>(value_);
    }

    /// Same-mode integer literal, for mixed expressions like x + 1.
    Scalar same_mode(long long v) const { return of(v, mode()); }

    bool is_zero() const {
        return is_exact() ? rational() == 0 : std::get<double>(value_) == 0.0;
    }
    bool is_positive() const {
        if (is_exact()) return rational() > 0;
        const double d = std::get<double>(value_);
        return d > 0.0 && std::isfinite(d);
    }
    bool is_negative() const {
        return is_exact() ? rational() < 0 : std::get<double>(value_) < 0.0;
    }
    bool is_finite() const { return is_exact() ? true : std::isfinite(std::get<double>(value_)); }

    friend Scalar operator+(const Scalar& a, const Scalar& b) {
        check_modes(a, b);
        if (a.is_exact()) return checked(a.rational() + b.rational());
        return Scalar(a.as_f64() + b.as_f64());
    }
    friend Scalar operator-(const Scalar& a, const Scalar& b) {
        check_modes(a, b);
        if (a.is_exact()) return checked(a.rational() - b.rational());
        return Scalar(a.as_f64() - b.as_f64());
    }
    friend Scalar operator*(const Scalar& a, const Scalar& b) {
        check_modes(a, b);
        if (a.is_exact()) return checked(a.rational() * b.rational());
        return Scalar(a.as_f64() * b.as_f64());
    }
    friend Scalar operator/(const Scalar& a, const Scalar& b) {
        check_modes(a, b);
        if (b.is_zero()) raise(Errc::DivisionByZero, "division by zero scalar");
        if (a.is_exact()) return checked(a.rational() / b.rational());
        return Scalar(a.as_f64() / b.as_f64());
    }
    Scalar operator-() const {
        if (is_exact()) return Scalar(BigRational(-rational()));
        return Scalar(-std::get<double>(value_));
    }

    friend bool operator==(const Scalar& a, const Scalar& b) {
        check_modes(a, b);
        if (a.is_exact()) return a.rational() == b.rational();
        return a.as_f64() == b.as_f64();
    }
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }
    friend bool operator<(const Scalar& a, const Scalar& b) {
        check_modes(a, b);
        if (a.is_exact()) return a.rational() < b.rational();
        return a.as_f64() < b.as_f64();
    }
    friend bool operator>(const Scalar& a, const Scalar& b) { return b < a; }
    friend bool operator<=(const Scalar& a, const Scalar& b) { return !(b < a); }
    friend bool operator>=(const Scalar& a, const Scalar& b) { return !(a < b); }

    Scalar abs() const {
        if (is_exact()) return Scalar(BigRational(boost::multiprecision::abs(rational())));
        return Scalar(std::fabs(std::get<double>(value_)));
    }

private:
    explicit Scalar(BigRational q) : value_(std::move(q)) {}
    explicit Scalar(double d) : value_(d) {}

    static void check_modes(const Scalar& a, const Scalar& b) {
        if (a.mode() != b.mode())
            raise(Errc::ModeMismatch, std::string("operands are ") + mode_name(a.mode()) + " and " +
                                          mode_name(b.mode()));
    }
    static Scalar checked(BigRational q) {
        detail::enforce_bit_limit(q);
        return Scalar(std::move(q));
    }

    std::variant<double, BigRational> value_;
};

enum class ArithOp { Add, Sub, Mul, Div };

inline Scalar scalar_arith(const Scalar& a, const Scalar& b, ArithOp op) {
    switch (op) {
        case ArithOp::Add: return a + b;
        case ArithOp::Sub: return a - b;
        case ArithOp::Mul: return a * b;
        case ArithOp::Div: return a / b;
    }
    raise(Errc::InvalidArgument, "unknown arithmetic op");
}

/// Converts to the requested mode. Float64 -> Exact keeps the exact dyadic
/// value of the double; Exact -> Float64 rounds.
inline Scalar coerce_mode(const Scalar& s, Mode m) {
    if (s.mode() == m) return s;
    if (m == Mode::Float64) return Scalar::f64(s.as_f64());
    const double d = s.as_f64();
    if (!std::isfinite(d)) raise(Errc::InvalidArgument, "cannot convert non-finite value to exact mode");
    return Scalar::exact(BigRational(d));
}

// Exact mode: equality (tol ignored). Float mode: |a-b| <= tol*max(1,|a|,|b|).
inline bool scalar_close(const Scalar& a, const Scalar& b, double tol) {
    if (a.mode() != b.mode()) raise(Errc::ModeMismatch, "scalar_close on mixed modes");
    if (a.is_exact()) return a.rational() == b.rational();
    const double x = a.as_f64(), y = b.as_f64();
    const double scale = std::max(1.0, std::max(std::fabs(x), std::fabs(y)));
    return std::fabs(x - y) <= tol * scale;
}

// ---------------------------------------------------------------------------
// Parsing and rendering.
//
// Accepted forms: "p/q", integers, decimals, scientific notation. Exact mode
// converts decimals and exponents without rounding ("1e-3" -> 1/1000).
// Rendering is round-trip faithful: exact scalars print as "p/q" (plain "p"
// for integers), floats print the shortest digit string that re-parses to the
// identical binary64.
// ---------------------------------------------------------------------------

namespace detail {

inline BigRational parse_exact_decimal(std::string_view text) {
    const std::string input(text);
    std::size_t pos = 0;
    bool negative = false;
    if (pos < input.size() && (input[pos] == '+' || input[pos] == '-')) {
        negative = input[pos] == '-';
        ++pos;
    }
    std::string digits;
    long long frac_digits = 0;
    bool seen_digit = false, seen_dot = false;
    for (; pos < input.size(); ++pos) {
        const char ch = input[pos];
        if (ch >= '0' && ch <= '9') {
            digits.push_back(ch);
            seen_digit = true;
            if (seen_dot) ++frac_digits;
        } else if (ch == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!seen_digit) raise(Errc::InvalidArgument, "malformed number '" + input + "'");
    long long exponent = 0;
    if (pos < input.size() && (input[pos] == 'e' || input[pos] == 'E')) {
        ++pos;
        bool exp_neg = false;
        if (pos < input.size() && (input[pos] == '+' || input[pos] == '-')) {
            exp_neg = input[pos] == '-';
            ++pos;
        }
        if (pos >= input.size()) raise(Errc::InvalidArgument, "malformed exponent in '" + input + "'");
        long long e = 0;
        for (; pos < input.size(); ++pos) {
            if (input[pos] < '0' || input[pos] > '9')
                raise(Errc::InvalidArgument, "malformed exponent in '" + input + "'");
            e = e * 10 + (input[pos] - '0');
            if (e > 1'000'000) raise(Errc::InvalidArgument, "exponent out of range in '" + input + "'");
        }
        exponent = exp_neg ? -e : e;
    }
    if (pos != input.size()) raise(Errc::InvalidArgument, "malformed number '" + input + "'");

    BigInt mantissa(digits.empty() ? "0" : digits);
    if (negative) mantissa = -mantissa;
    const long long net = exponent - frac_digits;
    BigRational value(mantissa);
    if (net > 0) {
        value *= BigRational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(net)));
    } else if (net < 0) {
        value /= BigRational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(-net)));
    }
    return value;
}

inline double parse_double(std::string_view text) {
    const std::string input(text);
    double out = 0.0;
    const char* begin = input.data();
    const char* end = begin + input.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc() || res.ptr != end)
        raise(Errc::InvalidArgument, "malformed number '" + input + "'");
    return out;
}

}  // namespace detail

inline Scalar parse_scalar(std::string_view text, Mode mode) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) raise(Errc::InvalidArgument, "empty number");
    const std::size_t slash = text.find('/');
    if (slash != std::string_view::npos) {
        const auto num = text.substr(0, slash);
        const auto den = text.substr(slash + 1);
        if (mode == Mode::Exact) {
            const BigRational n = detail::parse_exact_decimal(num);
            const BigRational d = detail::parse_exact_decimal(den);
            if (d == 0) raise(Errc::DivisionByZero, "zero denominator in '" + std::string(text) + "'");
            return Scalar::exact(n / d);
        }
        const double d = detail::parse_double(den);
        if (d == 0.0) raise(Errc::DivisionByZero, "zero denominator in '" + std::string(text) + "'");
        return Scalar::f64(detail::parse_double(num) / d);
    }
    if (mode == Mode::Exact) return Scalar::exact(detail::parse_exact_decimal(text));
    return Scalar::f64(detail::parse_double(text));
}

inline std::string format_f64(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::string to_string(const Scalar& s) {
    if (s.is_exact()) return s.rational().str();
    return format_f64(s.as_f64());
}

}  // namespace toddlab
