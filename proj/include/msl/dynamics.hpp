#pragma once

// Discrete Lagrangian of the 1+1 nonlinear scalar field on rectangles, its
// action, the two families of field equations and the per-face Cartan and
// multisymplectic coefficients.
//
// Per atom the Lagrangian is a sum of four corner terms,
//   L^{++} = { 1/2 [ ((phi_0+ - phi)/h)^2 - ((phi_1+ - phi)/k)^2 ] + N(phi) } h k
// and the analogous ones for the other corners. Summing the corners gives
//   L = sum_faces c_f/2 (phi_f - phi)^2 + 4 h k N(phi),
// with c = 2k/h on 0± faces and c = -2h/k on 1± faces. The same c is the
// coefficient of the multisymplectic form on the face.

#include <cmath>
#include <vector>

#include <Eigen/Sparse>

#include "msl/field.hpp"
#include "msl/lattice.hpp"
#include "msl/potential.hpp"

namespace msl {

enum class Corner { PlusPlus, PlusMinus, MinusPlus, MinusMinus };

inline constexpr std::array<Corner, 4> kCorners{Corner::PlusPlus, Corner::PlusMinus, Corner::MinusPlus,
                                                Corner::MinusMinus};

inline double corner_lagrangian(const RectLattice& lat, AtomId a, Corner corner, const History& phi,
                                const Potential& pot) {
    lat.check_atom(a);
    const bool tp = corner == Corner::PlusPlus || corner == Corner::PlusMinus;
    const bool xp = corner == Corner::PlusPlus || corner == Corner::MinusPlus;
    const double p = phi.atom[a];
    const double pt = phi.face[lat.face_of(a, tp ? Slot::TimePlus : Slot::TimeMinus)];
    const double px = phi.face[lat.face_of(a, xp ? Slot::SpacePlus : Slot::SpaceMinus)];
    const double h = lat.h();
    const double k = lat.k();
    const double dt = (pt - p) / h;
    const double dx = (px - p) / k;
    return (0.5 * (dt * dt - dx * dx) + pot.value(p)) * h * k;
}

inline double atom_lagrangian(const RectLattice& lat, AtomId a, const History& phi, const Potential& pot) {
    double sum = 0.0;
    for (Corner c : kCorners) sum += corner_lagrangian(lat, a, c, phi, pot);
    return sum;
}

inline double action(const RectLattice& lat, const AtomRegion& region, const History& phi,
                     const Potential& pot) {
    double s = 0.0;
    for (AtomId a : region.atoms) s += atom_lagrangian(lat, a, phi, pot);
    return s;
}

inline double action(const RectLattice& lat, const History& phi, const Potential& pot) {
    double s = 0.0;
    for (AtomId a = 0; a < lat.atom_count(); ++a) s += atom_lagrangian(lat, a, phi, pot);
    return s;
}

/// Coefficient of dphi_atom in E_L: the internal field equation.
inline double internal_residual(const RectLattice& lat, AtomId a, const History& phi, const Potential& pot) {
    lat.check_atom(a);
    const double p = phi.atom[a];
    const double tp = phi.face[lat.face_of(a, Slot::TimePlus)];
    const double tm = phi.face[lat.face_of(a, Slot::TimeMinus)];
    const double xp = phi.face[lat.face_of(a, Slot::SpacePlus)];
    const double xm = phi.face[lat.face_of(a, Slot::SpaceMinus)];
    const double h = lat.h();
    const double k = lat.k();
    return 2.0 * h * k *
           (-(tp - 2.0 * p + tm) / (h * h) + (xp - 2.0 * p + xm) / (k * k) + 2.0 * pot.derivative(p));
}

/// Coefficient of dphi_face in the Cartan form evaluated from the side atom.
/// Independent of the potential.
inline double cartan_coefficient(const RectLattice& lat, const JetSample& j) {
    const double h = lat.h();
    const double k = lat.k();
    const double p = j.phi_atom;
    const double f = j.phi_face;
    switch (lat.slot_of(j.oriented_face.face, j.oriented_face.side)) {
        case Slot::TimePlus: return 2.0 * k * (f - p) / h;
        case Slot::TimeMinus: return -2.0 * k * (p - f) / h;
        case Slot::SpacePlus: return -2.0 * h * (f - p) / k;
        case Slot::SpaceMinus: return 2.0 * h * (p - f) / k;
    }
    return 0.0;
}

/// Momentum matching on an interior face: sum of the Cartan coefficients
/// seen from both incident atoms.
inline double gluing_residual(const RectLattice& lat, FaceId f, const History& phi) {
    const auto lo = lat.lower(f);
    const auto up = lat.upper(f);
    if (!lo || !up) throw DomainError("gluing residual requested on boundary face " + std::to_string(f));
    return cartan_coefficient(lat, jet(phi, orient(lat, f, *lo))) +
           cartan_coefficient(lat, jet(phi, orient(lat, f, *up)));
}

/// c in Omega_L(., ., face_side) = c dphi_atom ^ dphi_face.
inline double multisymplectic_coefficient(const RectLattice& lat, const OrientedFace& of) {
    return lat.ms_coefficient_of(of.face);
}

/// Field-equation defects: J0 per atom, J1 per face (zero on boundary faces,
/// where no gluing equation is imposed).
struct JResiduals {
    std::vector<double> j0;
    std::vector<double> j1;

    double max_abs() const {
        double m = 0.0;
        for (double v : j0) m = std::max(m, std::abs(v));
        for (double v : j1) m = std::max(m, std::abs(v));
        return m;
    }
};

inline JResiduals j_residuals(const RectLattice& lat, const History& phi, const Potential& pot) {
    JResiduals r;
    r.j0.resize(static_cast<std::size_t>(lat.atom_count()));
    r.j1.assign(static_cast<std::size_t>(lat.face_count()), 0.0);
    for (AtomId a = 0; a < lat.atom_count(); ++a) r.j0[a] = internal_residual(lat, a, phi, pot);
    for (FaceId f = 0; f < lat.face_count(); ++f)
        if (!lat.is_boundary(f)) r.j1[f] = gluing_residual(lat, f, phi);
    return r;
}

/// Gradient of the total action over all degrees of freedom (atoms first,
/// then faces). Boundary faces carry the one-sided Cartan coefficient.
inline Eigen::VectorXd action_gradient(const RectLattice& lat, const History& phi, const Potential& pot) {
    const int na = lat.atom_count();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(na + lat.face_count());
    for (AtomId a = 0; a < na; ++a) {
        g[a] = internal_residual(lat, a, phi, pot);
        for (Slot s : kSlots) {
            const FaceId f = lat.face_of(a, s);
            g[na + f] += cartan_coefficient(lat, jet(phi, orient(lat, f, a)));
        }
    }
    return g;
}

/// Hessian of the total action (symmetric, sparse).
inline Eigen::SparseMatrix<double> action_hessian(const RectLattice& lat, const History& phi,
                                                  const Potential& pot) {
    const int na = lat.atom_count();
    const int n = na + lat.face_count();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(na) * 13);
    const double hk4 = 4.0 * lat.h() * lat.k();
    for (AtomId a = 0; a < na; ++a) {
        double diag = hk4 * pot.second_derivative(phi.atom[a]);
        for (Slot s : kSlots) {
            const FaceId f = lat.face_of(a, s);
            const double c = lat.ms_coefficient(axis_of(s));
            diag += c;
            trip.emplace_back(na + f, na + f, c);
            trip.emplace_back(a, na + f, -c);
            trip.emplace_back(na + f, a, -c);
        }
        trip.emplace_back(a, a, diag);
    }
    Eigen::SparseMatrix<double> H(n, n);
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

}  // namespace msl
