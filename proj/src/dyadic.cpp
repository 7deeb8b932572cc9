#include "ergolab/dyadic.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "ergolab/errors.hpp"

namespace ergo {

namespace {

constexpr int kMaxExp = 62;

void check_exp(int e) {
    if (e < 0 || e > kMaxExp)
        throw parameter_error("dyadic exponent out of exact range: 2^-" + std::to_string(e));
}

std::int64_t narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) throw parameter_error("dyadic numerator overflow");
    return static_cast<std::int64_t>(v);
}

}  // namespace

Dyadic::Dyadic(std::int64_t n, int e) : num(n), exp(e) {
    check_exp(e);
    while (exp > 0 && (num & 1) == 0) {
        num >>= 1;
        --exp;
    }
    if (num == 0) exp = 0;
}

Dyadic Dyadic::operator+(const Dyadic& o) const {
    int e = exp > o.exp ? exp : o.exp;
    check_exp(e);
    __int128 a = static_cast<__int128>(num) << (e - exp);
    __int128 b = static_cast<__int128>(o.num) << (e - o.exp);
    return Dyadic(narrow(a + b), e);
}

Dyadic Dyadic::operator-(const Dyadic& o) const { return *this + (-o); }

Dyadic Dyadic::operator-() const {
    Dyadic r;
    r.num = -num;
    r.exp = exp;
    return r;
}

Dyadic Dyadic::times_pow2(int k) const {
    if (num == 0) return Dyadic();
    if (k >= 0) {
        int drop = k < exp ? k : exp;
        int rest = k - drop;
        if (rest > kMaxExp) throw parameter_error("dyadic shift overflow");
        return Dyadic(narrow(static_cast<__int128>(num) << rest), exp - drop);
    }
    return Dyadic(num, exp - k);
}

bool Dyadic::operator<(const Dyadic& o) const {
    int e = exp > o.exp ? exp : o.exp;
    return (static_cast<__int128>(num) << (e - exp)) <
           (static_cast<__int128>(o.num) << (e - o.exp));
}

bool Dyadic::operator<=(const Dyadic& o) const {
    int e = exp > o.exp ? exp : o.exp;
    return (static_cast<__int128>(num) << (e - exp)) <=
           (static_cast<__int128>(o.num) << (e - o.exp));
}

double Dyadic::to_double() const {
    return std::ldexp(static_cast<double>(num), -exp);
}

std::string Dyadic::to_string() const {
    if (exp == 0) return std::to_string(num);
    return std::to_string(num) + "/2^" + std::to_string(exp);
}

Dyadic Dyadic::parse(const std::string& text) {
    auto bad = [&] { return parameter_error("not a dyadic rational: \"" + text + "\""); };
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) {
            return Dyadic(std::stoll(text), 0);
        }
        std::int64_t p = std::stoll(text.substr(0, slash));
        std::string den = text.substr(slash + 1);
        if (den.rfind("2^", 0) == 0) {
            int k = std::stoi(den.substr(2));
            check_exp(k);
            return Dyadic(p, k);
        }
        std::int64_t q = std::stoll(den);
        if (q <= 0 || (q & (q - 1)) != 0) throw bad();
        int k = 0;
        while ((std::int64_t{1} << k) != q) ++k;
        return Dyadic(p, k);
    } catch (const std::invalid_argument&) {
        throw bad();
    } catch (const std::out_of_range&) {
        throw bad();
    }
}

}  // namespace ergo
