#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <utility>

namespace msl {

/// Polynomial in the two local coordinates of a jet sample, a = phi_atom and
/// b = phi_face. Closed under sums, products and partial derivatives, which
/// is all the current algebra needs.
class LocalPoly {
public:
    using Exponent = std::pair<int, int>;

    LocalPoly() = default;
    LocalPoly(double constant) {  // NOLINT(google-explicit-constructor)
        if (constant != 0.0) terms_[{0, 0}] = constant;
    }

    static LocalPoly monomial(double coef, int i, int j) {
        LocalPoly p;
        if (coef != 0.0) p.terms_[{i, j}] = coef;
        return p;
    }
    static LocalPoly atom() { return monomial(1.0, 1, 0); }
    static LocalPoly face() { return monomial(1.0, 0, 1); }

    const std::map<Exponent, double>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.count({0, 0})); }

    double operator()(double a, double b) const {
        double s = 0.0;
        for (const auto& [e, c] : terms_) s += c * ipow(a, e.first) * ipow(b, e.second);
        return s;
    }

    LocalPoly d_atom() const {
        LocalPoly p;
        for (const auto& [e, c] : terms_)
            if (e.first > 0) p.add({e.first - 1, e.second}, c * e.first);
        return p;
    }
    LocalPoly d_face() const {
        LocalPoly p;
        for (const auto& [e, c] : terms_)
            if (e.second > 0) p.add({e.first, e.second - 1}, c * e.second);
        return p;
    }

    LocalPoly& operator+=(const LocalPoly& o) {
        for (const auto& [e, c] : o.terms_) add(e, c);
        return *this;
    }
    LocalPoly& operator-=(const LocalPoly& o) {
        for (const auto& [e, c] : o.terms_) add(e, -c);
        return *this;
    }
    LocalPoly& operator*=(double s) {
        if (s == 0.0) {
            terms_.clear();
            return *this;
        }
        for (auto& [e, c] : terms_) c *= s;
        return *this;
    }

    friend LocalPoly operator+(LocalPoly x, const LocalPoly& y) { return x += y; }
    friend LocalPoly operator-(LocalPoly x, const LocalPoly& y) { return x -= y; }
    friend LocalPoly operator-(LocalPoly x) { return x *= -1.0; }
    friend LocalPoly operator*(double s, LocalPoly x) { return x *= s; }
    friend LocalPoly operator*(LocalPoly x, double s) { return x *= s; }
    friend LocalPoly operator*(const LocalPoly& x, const LocalPoly& y) {
        LocalPoly p;
        for (const auto& [ex, cx] : x.terms_)
            for (const auto& [ey, cy] : y.terms_) p.add({ex.first + ey.first, ex.second + ey.second}, cx * cy);
        return p;
    }

    bool operator==(const LocalPoly&) const = default;

private:
    static double ipow(double x, int n) {
        double r = 1.0;
        for (int i = 0; i < n; ++i) r *= x;
        return r;
    }
    void add(Exponent e, double c) {
        const double v = (terms_[e] += c);
        if (v == 0.0) terms_.erase(e);
    }

    std::map<Exponent, double> terms_;
};

}  // namespace msl
