#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace msl {

/// Polynomial nonlinear term N(phi) = sum_m lambda_m phi^m. N enters the
/// Lagrangian with a plus sign, so a potential energy V corresponds to N = -V.
class Potential {
public:
    Potential() = default;
    explicit Potential(std::vector<double> coefficients) : c_(std::move(coefficients)) {}

    static Potential free() { return Potential{}; }
    /// N = -V for the potential energy V = mass_term phi^2 + lambda phi^4.
    static Potential phi4(double lambda, double mass_term) {
        return Potential({0.0, 0.0, -mass_term, 0.0, -lambda});
    }

    const std::vector<double>& coefficients() const { return c_; }

    double value(double phi) const { return horner(c_, phi); }

    double derivative(double phi) const {
        double acc = 0.0;
        for (std::size_t m = c_.size(); m-- > 1;) acc = acc * phi + static_cast<double>(m) * c_[m];
        return acc;
    }

    double second_derivative(double phi) const {
        double acc = 0.0;
        for (std::size_t m = c_.size(); m-- > 2;)
            acc = acc * phi + static_cast<double>(m * (m - 1)) * c_[m];
        return acc;
    }

    /// True when N' vanishes identically, i.e. the Lagrangian is invariant
    /// under constant shifts of the field.
    bool shift_symmetric() const {
        for (std::size_t m = 1; m < c_.size(); ++m)
            if (c_[m] != 0.0) return false;
        return true;
    }

    /// N'' identically zero: the linearised equations do not depend on the field.
    bool linear_field_equations() const {
        for (std::size_t m = 3; m < c_.size(); ++m)
            if (c_[m] != 0.0) return false;
        return true;
    }

private:
    static double horner(const std::vector<double>& c, double x) {
        double acc = 0.0;
        for (std::size_t m = c.size(); m-- > 0;) acc = acc * x + c[m];
        return acc;
    }

    std::vector<double> c_;
};

}  // namespace msl
