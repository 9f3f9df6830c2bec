#pragma once

// Observable currents: per-face functions of the jet sample (phi_atom,
// phi_face), their Hamiltonian vector fields, and the bracket algebra.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "msl/dynamics.hpp"
#include "msl/errors.hpp"
#include "msl/field.hpp"
#include "msl/lattice.hpp"
#include "msl/local_poly.hpp"
#include "msl/potential.hpp"
#include "msl/solver.hpp"

namespace msl {

using FacePolyRule = std::function<LocalPoly(const RectLattice&, const OrientedFace&)>;
using DomainRule = std::function<bool(const JetSample&)>;

/// A cochain on first-order data: a polynomial of (phi_atom, phi_face) per
/// oriented face, defined where `domain` holds.
class Current {
public:
    Current() : rule_([](const RectLattice&, const OrientedFace&) { return LocalPoly{}; }) {}
    explicit Current(FacePolyRule rule, DomainRule domain = {}, std::string name = {})
        : rule_(std::move(rule)), domain_(std::move(domain)), name_(std::move(name)) {}

    LocalPoly poly(const RectLattice& lat, const OrientedFace& of) const { return rule_(lat, of); }

    bool in_domain(const JetSample& j) const { return !domain_ || domain_(j); }

    double evaluate(const RectLattice& lat, const JetSample& j) const {
        require(j);
        return poly(lat, j.oriented_face)(j.phi_atom, j.phi_face);
    }
    double d_phi_atom(const RectLattice& lat, const JetSample& j) const {
        require(j);
        return poly(lat, j.oriented_face).d_atom()(j.phi_atom, j.phi_face);
    }
    double d_phi_face(const RectLattice& lat, const JetSample& j) const {
        require(j);
        return poly(lat, j.oriented_face).d_face()(j.phi_atom, j.phi_face);
    }

    const std::string& name() const { return name_; }
    const DomainRule& domain() const { return domain_; }
    const FacePolyRule& rule() const { return rule_; }

private:
    void require(const JetSample& j) const {
        if (!in_domain(j))
            throw DomainError("jet sample on face " + std::to_string(j.oriented_face.face) +
                              " lies outside the domain of current '" + name_ + "'");
    }

    FacePolyRule rule_;
    DomainRule domain_;
    std::string name_;
};

namespace detail {
inline DomainRule both(const DomainRule& a, const DomainRule& b) {
    if (!a) return b;
    if (!b) return a;
    return [a, b](const JetSample& j) { return a(j) && b(j); };
}
}  // namespace detail

inline Current operator+(const Current& f, const Current& g) {
    auto rf = f.rule();
    auto rg = g.rule();
    return Current([rf, rg](const RectLattice& lat, const OrientedFace& of) { return rf(lat, of) + rg(lat, of); },
                   detail::both(f.domain(), g.domain()), f.name() + "+" + g.name());
}

inline Current operator*(double s, const Current& f) {
    auto rf = f.rule();
    return Current([rf, s](const RectLattice& lat, const OrientedFace& of) { return s * rf(lat, of); },
                   f.domain(), f.name());
}

/// Pointwise product per face.
inline Current product(const Current& f, const Current& g) {
    auto rf = f.rule();
    auto rg = g.rule();
    return Current([rf, rg](const RectLattice& lat, const OrientedFace& of) { return rf(lat, of) * rg(lat, of); },
                   detail::both(f.domain(), g.domain()), f.name() + "*" + g.name());
}

/// Vertical vector on the local phase space of a face: (v_atom, v_face) as
/// polynomials of the jet sample.
struct FaceVector {
    LocalPoly atom;
    LocalPoly face;
};

using FaceVectorRule = std::function<FaceVector(const RectLattice&, const OrientedFace&)>;

/// Lie bracket [v, w] = (v . grad) w - (w . grad) v on the (phi_atom, phi_face) plane.
inline FaceVector commutator(const FaceVector& v, const FaceVector& w) {
    auto dir = [](const FaceVector& x, const LocalPoly& p) { return x.atom * p.d_atom() + x.face * p.d_face(); };
    return {dir(v, w.atom) - dir(w, v.atom), dir(v, w.face) - dir(w, v.face)};
}

/// Current F with a per-face vector field v satisfying dF = -i_v Omega_L,
/// i.e. dF/dphi_atom = c v_face and dF/dphi_face = -c v_atom.
class HamiltonianCurrent {
public:
    HamiltonianCurrent(Current current, FaceVectorRule vf) : current_(std::move(current)), vf_(std::move(vf)) {}

    /// Hamiltonian vector field read off from the derivatives of F.
    static HamiltonianCurrent from_current(Current current) {
        auto rule = current.rule();
        return HamiltonianCurrent(std::move(current), [rule](const RectLattice& lat, const OrientedFace& of) {
            const LocalPoly f = rule(lat, of);
            const double c = multisymplectic_coefficient(lat, of);
            return FaceVector{(-1.0 / c) * f.d_face(), (1.0 / c) * f.d_atom()};
        });
    }

    const Current& current() const { return current_; }
    FaceVector vector_field(const RectLattice& lat, const OrientedFace& of) const { return vf_(lat, of); }
    const FaceVectorRule& vf_rule() const { return vf_; }

    /// (v_atom, v_face) at a jet sample.
    std::pair<double, double> vf_at(const RectLattice& lat, const JetSample& j) const {
        const FaceVector v = vf_(lat, j.oriented_face);
        return {v.atom(j.phi_atom, j.phi_face), v.face(j.phi_atom, j.phi_face)};
    }

    /// Largest coefficient mismatch in dF = -i_v Omega_L at a jet sample.
    double hamiltonian_defect(const RectLattice& lat, const JetSample& j) const {
        const double c = multisymplectic_coefficient(lat, j.oriented_face);
        const auto [va, vf] = vf_at(lat, j);
        return std::max(std::abs(current_.d_phi_atom(lat, j) - c * vf),
                        std::abs(current_.d_phi_face(lat, j) + c * va));
    }

private:
    Current current_;
    FaceVectorRule vf_;
};

/// f_Sigma(phi) = sum over the oriented faces of F at the jet samples. The
/// orientation enters through the side atom of each face.
inline double integrate(const RectLattice& lat, const Current& f, const OrientedSurface& sigma, const History& phi) {
    double s = 0.0;
    for (const auto& of : sigma.faces) s += f.evaluate(lat, jet(phi, of));
    return s;
}

/// Integral together with the sum of absolute per-face terms.
inline SurfacePairing integrate_with_scale(const RectLattice& lat, const Current& f, const OrientedSurface& sigma,
                                           const History& phi) {
    SurfacePairing p;
    for (const auto& of : sigma.faces) {
        const double t = f.evaluate(lat, jet(phi, of));
        p.value += t;
        p.scale += std::abs(t);
    }
    return p;
}

/// Cartan coefficient c (phi_face - phi_atom) as a current.
inline Current cartan_current() {
    return Current(
        [](const RectLattice& lat, const OrientedFace& of) {
            return multisymplectic_coefficient(lat, of) * (LocalPoly::face() - LocalPoly::atom());
        },
        {}, "cartan");
}

/// Noether current of the constant shift phi -> phi + xi.
inline HamiltonianCurrent noether(double xi, const Potential& pot) {
    if (!pot.shift_symmetric())
        throw SymmetryError("the potential is not invariant under constant shifts of the field");
    Current n(
        [xi](const RectLattice& lat, const OrientedFace& of) {
            return (-xi * multisymplectic_coefficient(lat, of)) * (LocalPoly::face() - LocalPoly::atom());
        },
        {}, "noether");
    return HamiltonianCurrent(std::move(n), [xi](const RectLattice&, const OrientedFace&) {
        return FaceVector{LocalPoly(xi), LocalPoly(xi)};
    });
}

/// Constant closed cochain counting signed time crossings: kappa/n_x on time
/// faces with the sign of their time orientation, zero on space faces.
inline Current flux_cochain(double kappa) {
    return Current(
        [kappa](const RectLattice& lat, const OrientedFace& of) {
            if (lat.axis(of.face) == Axis::Space) return LocalPoly{};
            return LocalPoly(kappa / lat.n_x() * of.sign);
        },
        {}, "flux");
}

/// Omega_L(v, w) per face for two first variations of `phi`, frozen at those
/// vectors (constant on each face).
inline Current symplectic_product(const RectLattice& lat, const Potential& pot, const History& phi,
                                  const VerticalVector& v, const VerticalVector& w, double tol = 1e-9) {
    const auto op = linearize(lat, phi, pot);
    if (!op.in_kernel(v, tol) || !op.in_kernel(w, tol))
        throw PreconditionError("symplectic product needs first variations of the history");
    return Current(
        [v, w](const RectLattice& l, const OrientedFace& of) {
            const double c = multisymplectic_coefficient(l, of);
            return LocalPoly(c * (v.atom[of.side] * w.face[of.face] - v.face[of.face] * w.atom[of.side]));
        },
        {}, "symplectic_product");
}

/// {F, G} = Omega_L(w, v) per face, v and w the Hamiltonian fields of F and
/// G. Its Hamiltonian field is the Lie bracket [w, v].
inline HamiltonianCurrent poisson_bracket(const HamiltonianCurrent& f, const HamiltonianCurrent& g) {
    auto vf = f.vf_rule();
    auto wf = g.vf_rule();
    Current b(
        [vf, wf](const RectLattice& lat, const OrientedFace& of) {
            const double c = multisymplectic_coefficient(lat, of);
            const FaceVector v = vf(lat, of);
            const FaceVector w = wf(lat, of);
            return c * (w.atom * v.face - w.face * v.atom);
        },
        detail::both(f.current().domain(), g.current().domain()),
        "{" + f.current().name() + "," + g.current().name() + "}");
    return HamiltonianCurrent(std::move(b), [vf, wf](const RectLattice& lat, const OrientedFace& of) {
        return commutator(wf(lat, of), vf(lat, of));
    });
}

/// Outcome of the three observable-current conditions on a set of solutions.
struct OcReport {
    bool antisymmetry = true;      ///< (i) F(tau_nu) = -F(tau_nu') on interior faces
    bool closedness = true;        ///< (ii) vanishing integral over every boundary(U')
    bool null_independence = true; ///< (iii) dF annihilates null directions of omega
    bool null_space_empty = true;
    double max_antisymmetry = 0.0;
    double max_closedness = 0.0;
    double max_null = 0.0;

    bool all() const { return antisymmetry && closedness && null_independence; }
};

/// Checks (i) on interior faces, (ii) on all rectangular sub-regions with
/// tolerance tol * max(1, sum |terms|), and (iii) against the kernel of the
/// presymplectic matrix of every horizontal cut.
inline OcReport check_oc_conditions(const RectLattice& lat, const Current& f, const std::vector<History>& solutions,
                                    double tol = 1e-10) {
    OcReport rep;
    const auto regions = all_rect_regions(lat);
    for (const History& phi : solutions) {
        for (FaceId face : lat.interior_faces()) {
            const double a = f.evaluate(lat, jet(phi, orient(lat, face, *lat.lower(face))));
            const double b = f.evaluate(lat, jet(phi, orient(lat, face, *lat.upper(face))));
            const double r = std::abs(a + b) / std::max(1.0, std::abs(a) + std::abs(b));
            rep.max_antisymmetry = std::max(rep.max_antisymmetry, r);
        }
        for (const auto& region : regions) {
            const auto p = integrate_with_scale(lat, f, boundary(lat, region), phi);
            rep.max_closedness = std::max(rep.max_closedness, std::abs(p.value) / std::max(1.0, p.scale));
        }
        for (int row = 1; row <= lat.n_t(); ++row) {
            const auto sigma = horizontal_cut(lat, row);
            const auto pm = presymplectic_matrix(lat, sigma, phi);
            if (pm.null_basis.cols() == 0) continue;
            rep.null_space_empty = false;
            for (Eigen::Index col = 0; col < pm.null_basis.cols(); ++col) {
                double s = 0.0;
                for (std::size_t n = 0; n < sigma.faces.size(); ++n) {
                    const JetSample j = jet(phi, sigma.faces[n]);
                    s += f.d_phi_atom(lat, j) * pm.null_basis(static_cast<Eigen::Index>(2 * n), col) +
                         f.d_phi_face(lat, j) * pm.null_basis(static_cast<Eigen::Index>(2 * n + 1), col);
                }
                rep.max_null = std::max(rep.max_null, std::abs(s));
            }
        }
    }
    rep.antisymmetry = rep.max_antisymmetry <= tol;
    rep.closedness = rep.max_closedness <= tol;
    rep.null_independence = rep.max_null <= tol;
    return rep;
}

}  // namespace msl
