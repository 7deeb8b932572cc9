#pragma once

#include <cstdint>
#include <string>

namespace ergo {

// Exact dyadic rational num / 2^exp with exp >= 0. Kept normalized (num odd
// or exp == 0). Used wherever tower bookkeeping must be free of rounding.
struct Dyadic {
    std::int64_t num = 0;
    int exp = 0;

    Dyadic() = default;
    Dyadic(std::int64_t n, int e);

    static Dyadic zero() { return Dyadic(); }
    static Dyadic one() { return Dyadic(1, 0); }

    Dyadic operator+(const Dyadic& o) const;
    Dyadic operator-(const Dyadic& o) const;
    Dyadic operator-() const;
    // Multiply by 2^k; k may be negative.
    Dyadic times_pow2(int k) const;

    bool operator==(const Dyadic& o) const { return num == o.num && exp == o.exp; }
    bool operator!=(const Dyadic& o) const { return !(*this == o); }
    bool operator<(const Dyadic& o) const;
    bool operator<=(const Dyadic& o) const;
    bool operator>(const Dyadic& o) const { return o < *this; }
    bool operator>=(const Dyadic& o) const { return o <= *this; }

    double to_double() const;
    // "p" when exp == 0, otherwise "p/2^k".
    std::string to_string() const;

    // Accepts "p", "p/q" with q a power of two, or "p/2^k".
    static Dyadic parse(const std::string& text);
};

}  // namespace ergo
