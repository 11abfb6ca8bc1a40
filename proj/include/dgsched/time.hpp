#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dgsched {

// Time is an exact integer count of a global resolution unit. Schedule
// logic never touches floating point; utilizations and averaged bounds
// use Rational below.
using Time = std::int64_t;

class overflow_error : public std::runtime_error {
public:
    explicit overflow_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline Time checked_add(Time a, Time b) {
    Time r;
    if (__builtin_add_overflow(a, b, &r))
        throw overflow_error("time overflow in " + std::to_string(a) + " + " + std::to_string(b));
    return r;
}

inline Time checked_mul(Time a, Time b) {
    Time r;
    if (__builtin_mul_overflow(a, b, &r))
        throw overflow_error("time overflow in " + std::to_string(a) + " * " + std::to_string(b));
    return r;
}

// lcm with explicit overflow reporting, used for hyper-periods.
inline Time checked_lcm(Time a, Time b) {
    if (a <= 0 || b <= 0)
        throw std::invalid_argument("lcm arguments must be positive");
    const Time g = std::gcd(a, b);
    return checked_mul(a / g, b);
}

// Exact rational, gcd-reduced, denominator always positive.
struct Rational {
    std::int64_t num{0};
    std::int64_t den{1};

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }
    explicit Rational(std::int64_t n) : num(n), den(1) {}

    void normalize() {
        if (den == 0)
            throw std::invalid_argument("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        const __int128 n = static_cast<__int128>(a.num) * b.den +
                           static_cast<__int128>(b.num) * a.den;
        const __int128 d = static_cast<__int128>(a.den) * b.den;
        return from_wide(n, d);
    }

    friend Rational operator-(const Rational& a, const Rational& b) {
        const __int128 n = static_cast<__int128>(a.num) * b.den -
                           static_cast<__int128>(b.num) * a.den;
        const __int128 d = static_cast<__int128>(a.den) * b.den;
        return from_wide(n, d);
    }

    // three-way compare via cross multiplication, exact
    static int compare(const Rational& a, const Rational& b) {
        const __int128 lhs = static_cast<__int128>(a.num) * b.den;
        const __int128 rhs = static_cast<__int128>(b.num) * a.den;
        if (lhs < rhs) return -1;
        if (lhs > rhs) return 1;
        return 0;
    }

    friend bool operator==(const Rational& a, const Rational& b) { return compare(a, b) == 0; }
    friend bool operator!=(const Rational& a, const Rational& b) { return compare(a, b) != 0; }
    friend bool operator<(const Rational& a, const Rational& b) { return compare(a, b) < 0; }
    friend bool operator<=(const Rational& a, const Rational& b) { return compare(a, b) <= 0; }
    friend bool operator>(const Rational& a, const Rational& b) { return compare(a, b) > 0; }
    friend bool operator>=(const Rational& a, const Rational& b) { return compare(a, b) >= 0; }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

private:
    static Rational from_wide(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        __int128 an = n < 0 ? -n : n;
        __int128 g = gcd_wide(an, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw overflow_error("rational overflow");
        Rational r;
        r.num = static_cast<std::int64_t>(n);
        r.den = static_cast<std::int64_t>(d);
        return r;
    }

    static __int128 gcd_wide(__int128 a, __int128 b) {
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        return a;
    }
};

}  // namespace dgsched
