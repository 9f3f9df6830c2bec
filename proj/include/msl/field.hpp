#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "msl/lattice.hpp"

namespace msl {

/// Values attached to every atom and every face of a lattice. Tagged so that
/// histories and vertical vectors cannot be mixed up.
template <class Tag>
struct NodalValues {
    std::vector<double> atom;
    std::vector<double> face;

    NodalValues() = default;
    explicit NodalValues(const RectLattice& lat, double fill = 0.0)
        : atom(static_cast<std::size_t>(lat.atom_count()), fill),
          face(static_cast<std::size_t>(lat.face_count()), fill) {}

    bool fits(const RectLattice& lat) const {
        return static_cast<int>(atom.size()) == lat.atom_count() &&
               static_cast<int>(face.size()) == lat.face_count();
    }

    std::size_t dof_count() const { return atom.size() + face.size(); }

    /// Flat layout: atoms first, then faces.
    Eigen::VectorXd flat() const {
        Eigen::VectorXd v(static_cast<Eigen::Index>(dof_count()));
        for (std::size_t i = 0; i < atom.size(); ++i) v[static_cast<Eigen::Index>(i)] = atom[i];
        for (std::size_t i = 0; i < face.size(); ++i)
            v[static_cast<Eigen::Index>(atom.size() + i)] = face[i];
        return v;
    }

    static NodalValues from_flat(const RectLattice& lat, const Eigen::VectorXd& v) {
        NodalValues out(lat);
        for (std::size_t i = 0; i < out.atom.size(); ++i) out.atom[i] = v[static_cast<Eigen::Index>(i)];
        for (std::size_t i = 0; i < out.face.size(); ++i)
            out.face[i] = v[static_cast<Eigen::Index>(out.atom.size() + i)];
        return out;
    }

    double& dof(std::size_t i) { return i < atom.size() ? atom[i] : face[i - atom.size()]; }
    double dof(std::size_t i) const { return i < atom.size() ? atom[i] : face[i - atom.size()]; }

    NodalValues& operator+=(const NodalValues& o) {
        for (std::size_t i = 0; i < atom.size(); ++i) atom[i] += o.atom[i];
        for (std::size_t i = 0; i < face.size(); ++i) face[i] += o.face[i];
        return *this;
    }
    NodalValues& operator*=(double s) {
        for (double& a : atom) a *= s;
        for (double& f : face) f *= s;
        return *this;
    }
    friend NodalValues operator+(NodalValues a, const NodalValues& b) { return a += b; }
    friend NodalValues operator*(double s, NodalValues a) { return a *= s; }
    friend NodalValues operator-(NodalValues a, const NodalValues& b) {
        for (std::size_t i = 0; i < a.atom.size(); ++i) a.atom[i] -= b.atom[i];
        for (std::size_t i = 0; i < a.face.size(); ++i) a.face[i] -= b.face[i];
        return a;
    }

    double max_abs() const {
        double m = 0.0;
        for (double a : atom) m = std::max(m, std::abs(a));
        for (double f : face) m = std::max(m, std::abs(f));
        return m;
    }

    bool operator==(const NodalValues&) const = default;
};

struct HistoryTag {};
struct VariationTag {};

/// Field values phi_atom, phi_face: a section over the lattice.
using History = NodalValues<HistoryTag>;
/// A variation (v_atom, v_face) of a history.
using VerticalVector = NodalValues<VariationTag>;

/// First-order datum over an oriented face: the face value and the value at
/// the side atom.
struct JetSample {
    OrientedFace oriented_face;
    double phi_atom = 0.0;
    double phi_face = 0.0;
};

inline JetSample jet(const History& phi, const OrientedFace& of) {
    return {of, phi.atom[static_cast<std::size_t>(of.side)], phi.face[static_cast<std::size_t>(of.face)]};
}

}  // namespace msl
