#ifndef DIFFLOG_DUAL_HPP
#define DIFFLOG_DUAL_HPP

#include <cmath>

// Forward-mode dual numbers. Arithmetic carries a tangent alongside the
// value: (a + eps a')(b + eps b') = ab + eps(ab' + a'b), with exp/log/division
// propagating by the chain rule. Comparisons act on the value, so max picks a
// subgradient at ties.

namespace difflog {

struct Dual {
    double val = 0.0;
    double tan = 0.0;

    Dual() = default;
    Dual(double v) : val(v) {}  // NOLINT: implicit plain-real promotion
    Dual(double v, double t) : val(v), tan(t) {}

    Dual& operator+=(const Dual& o) { val += o.val; tan += o.tan; return *this; }
    Dual& operator-=(const Dual& o) { val -= o.val; tan -= o.tan; return *this; }
    Dual& operator*=(const Dual& o) {
        tan = val * o.tan + tan * o.val;
        val *= o.val;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        tan = (tan * o.val - val * o.tan) / (o.val * o.val);
        val /= o.val;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(Dual a, const Dual& b) { return a /= b; }
    friend Dual operator-(const Dual& a) { return Dual(-a.val, -a.tan); }

    friend bool operator<(const Dual& a, const Dual& b) { return a.val < b.val; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.val > b.val; }
    friend bool operator<=(const Dual& a, const Dual& b) { return a.val <= b.val; }
    friend bool operator>=(const Dual& a, const Dual& b) { return a.val >= b.val; }
    friend bool operator==(const Dual& a, const Dual& b) { return a.val == b.val; }
};

inline Dual exp(const Dual& x) {
    double e = std::exp(x.val);
    return Dual(e, e * x.tan);
}

inline Dual log(const Dual& x) { return Dual(std::log(x.val), x.tan / x.val); }

inline Dual sqrt(const Dual& x) {
    double r = std::sqrt(x.val);
    return Dual(r, r > 0.0 ? x.tan / (2.0 * r) : 0.0);
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.val; }

}  // namespace difflog

#endif
