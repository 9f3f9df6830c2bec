#pragma once

// Solutions of the discrete field equations, first variations, and the
// presymplectic form on surface data.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "msl/dynamics.hpp"
#include "msl/errors.hpp"
#include "msl/field.hpp"
#include "msl/lattice.hpp"
#include "msl/potential.hpp"

namespace msl {

struct NewtonOptions {
    double tolerance = 1e-12;  ///< max |residual| at convergence
    int max_iter = 50;
};

namespace detail {

inline Eigen::SparseMatrix<double> restrict_square(const Eigen::SparseMatrix<double>& m,
                                                   const std::vector<int>& idx) {
    std::vector<int> pos(static_cast<std::size_t>(m.rows()), -1);
    for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = static_cast<int>(i);
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < m.outerSize(); ++col) {
        if (pos[col] < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it)
            if (pos[it.row()] >= 0) trip.emplace_back(pos[it.row()], pos[col], it.value());
    }
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::SparseMatrix<double> out(n, n);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
}

inline double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace detail

/// Newton iteration on the action gradient restricted to the degrees of
/// freedom not marked `fixed` (flat dof layout: atoms, then faces). Uses the
/// exact Hessian; a step that increases the residual is halved.
inline History newton_stationary(const RectLattice& lat, const Potential& pot, History phi,
                                 const std::vector<char>& fixed, const NewtonOptions& opt = {}) {
    std::vector<int> free_idx;
    for (int i = 0; i < static_cast<int>(fixed.size()); ++i)
        if (!fixed[i]) free_idx.push_back(i);
    if (free_idx.empty()) return phi;

    auto residual = [&](const History& p) { return detail::gather(action_gradient(lat, p, pot), free_idx); };
    Eigen::VectorXd r = residual(phi);
    double rnorm = detail::max_abs(r);
    for (int iter = 0; iter < opt.max_iter && rnorm > opt.tolerance; ++iter) {
        const Eigen::SparseMatrix<double> J = detail::restrict_square(action_hessian(lat, phi, pot), free_idx);
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) throw SolverError("singular Jacobian in Newton iteration", rnorm);
        const Eigen::VectorXd dx = lu.solve(-r);
        double step = 1.0;
        for (int tries = 0;; ++tries) {
            History trial = phi;
            for (std::size_t i = 0; i < free_idx.size(); ++i)
                trial.dof(static_cast<std::size_t>(free_idx[i])) += step * dx[static_cast<Eigen::Index>(i)];
            const Eigen::VectorXd rt = residual(trial);
            const double tn = detail::max_abs(rt);
            if (tn <= rnorm || tries >= 10) {
                phi = std::move(trial);
                r = rt;
                rnorm = tn;
                break;
            }
            step *= 0.5;
        }
    }
    if (!(rnorm <= opt.tolerance)) throw SolverError("Newton iteration did not converge", rnorm);
    return phi;
}

/// Solves internal and gluing equations with all boundary face values held
/// at those of `boundary_and_guess`; its remaining values seed Newton.
inline History solve_dirichlet(const RectLattice& lat, const Potential& pot, const History& boundary_and_guess,
                               const NewtonOptions& opt = {}) {
    if (!boundary_and_guess.fits(lat)) throw DomainError("history does not match lattice");
    std::vector<char> fixed(boundary_and_guess.dof_count(), 0);
    for (FaceId f : lat.boundary_faces()) fixed[static_cast<std::size_t>(lat.atom_count() + f)] = 1;
    return newton_stationary(lat, pot, boundary_and_guess, fixed, opt);
}

inline bool is_solution(const RectLattice& lat, const History& phi, const Potential& pot, double tol = 1e-10) {
    return j_residuals(lat, phi, pot).max_abs() <= tol;
}

/// First-order data on a future-oriented horizontal cut at `row`: for every
/// column j the side-atom value (atom (row-1, j)) and the face value T(row, j).
struct CauchyData {
    int row = 1;
    std::vector<double> atom;
    std::vector<double> face;

    int size() const { return static_cast<int>(atom.size()); }

    /// Interleaved (atom_j, face_j) coordinates, matching the presymplectic
    /// matrix layout of the cut.
    Eigen::VectorXd to_vector() const {
        Eigen::VectorXd z(2 * atom.size());
        for (std::size_t j = 0; j < atom.size(); ++j) {
            z[static_cast<Eigen::Index>(2 * j)] = atom[j];
            z[static_cast<Eigen::Index>(2 * j + 1)] = face[j];
        }
        return z;
    }
    static CauchyData from_vector(int row, const Eigen::VectorXd& z) {
        CauchyData c;
        c.row = row;
        const auto n = static_cast<std::size_t>(z.size() / 2);
        c.atom.resize(n);
        c.face.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            c.atom[j] = z[static_cast<Eigen::Index>(2 * j)];
            c.face[j] = z[static_cast<Eigen::Index>(2 * j + 1)];
        }
        return c;
    }
};

/// Values on the spatial boundary faces S(i, 0) and S(i, n_x), per time row.
struct LateralData {
    std::vector<double> left;
    std::vector<double> right;

    static LateralData zeros(const RectLattice& lat) {
        return {std::vector<double>(static_cast<std::size_t>(lat.n_t()), 0.0),
                std::vector<double>(static_cast<std::size_t>(lat.n_t()), 0.0)};
    }
};

template <class Tag>
CauchyData read_cauchy(const RectLattice& lat, const NodalValues<Tag>& v, int row) {
    if (row < 1 || row > lat.n_t()) throw DomainError("Cauchy cut row must be in [1, n_t]");
    CauchyData c;
    c.row = row;
    for (int j = 0; j < lat.n_x(); ++j) {
        c.atom.push_back(v.atom[lat.atom(row - 1, j)]);
        c.face.push_back(v.face[lat.time_face(row, j)]);
    }
    return c;
}

template <class Tag>
LateralData read_lateral(const RectLattice& lat, const NodalValues<Tag>& v) {
    LateralData d;
    for (int i = 0; i < lat.n_t(); ++i) {
        d.left.push_back(v.face[lat.space_face(i, 0)]);
        d.right.push_back(v.face[lat.space_face(i, lat.n_x())]);
    }
    return d;
}

namespace detail {

/// Explicit march from data on a future-oriented cut, both forwards and
/// backwards in time. Interior gluing equations fix face values as the mean
/// of the two atom values (uniform spacing); each internal equation is
/// solved for the single unknown time face. `source(atom, value)` is the
/// term 4hk N'(value) of the internal equation, or its linearisation.
template <class Tag, class Source>
NodalValues<Tag> march(const RectLattice& lat, const CauchyData& data, const LateralData& lateral,
                       Source&& source) {
    const int nt = lat.n_t();
    const int nx = lat.n_x();
    const int r = data.row;
    if (r < 1 || r > nt) throw DomainError("Cauchy cut row must be in [1, n_t]");
    if (data.size() != nx) throw DomainError("insufficient Cauchy data: expected one pair per column");
    if (static_cast<int>(lateral.left.size()) != nt || static_cast<int>(lateral.right.size()) != nt)
        throw DomainError("insufficient lateral boundary data for the march");

    const double ct = lat.ms_coefficient(Axis::Time);
    const double cx = lat.ms_coefficient(Axis::Space);
    NodalValues<Tag> out(lat);
    for (int j = 0; j < nx; ++j) {
        out.atom[lat.atom(r - 1, j)] = data.atom[j];
        out.face[lat.time_face(r, j)] = data.face[j];
    }
    auto fill_space_faces = [&](int i) {
        out.face[lat.space_face(i, 0)] = lateral.left[i];
        out.face[lat.space_face(i, nx)] = lateral.right[i];
        for (int j = 1; j < nx; ++j)
            out.face[lat.space_face(i, j)] =
                0.5 * (out.atom[lat.atom(i, j - 1)] + out.atom[lat.atom(i, j)]);
    };
    // Unknown time face of atom (i, j) from its internal equation
    //   ct (T+ - p) + ct (T- - p) + cx (S+ - p) + cx (S- - p) = source.
    auto solve_time_face = [&](int i, int j, double known) {
        const AtomId a = lat.atom(i, j);
        const double p = out.atom[a];
        const double sp = out.face[lat.space_face(i, j + 1)];
        const double sm = out.face[lat.space_face(i, j)];
        return p + (source(a, p) - ct * (known - p) - cx * (sp + sm - 2.0 * p)) / ct;
    };

    // backwards: rows r-1 .. 0
    for (int i = r - 1; i >= 0; --i) {
        fill_space_faces(i);
        for (int j = 0; j < nx; ++j)
            out.face[lat.time_face(i, j)] = solve_time_face(i, j, out.face[lat.time_face(i + 1, j)]);
        if (i >= 1)
            for (int j = 0; j < nx; ++j)
                out.atom[lat.atom(i - 1, j)] = 2.0 * out.face[lat.time_face(i, j)] - out.atom[lat.atom(i, j)];
    }
    // forwards: rows r .. n_t-1
    for (int i = r; i < nt; ++i) {
        for (int j = 0; j < nx; ++j)
            out.atom[lat.atom(i, j)] = 2.0 * out.face[lat.time_face(i, j)] - out.atom[lat.atom(i - 1, j)];
        fill_space_faces(i);
        for (int j = 0; j < nx; ++j)
            out.face[lat.time_face(i + 1, j)] = solve_time_face(i, j, out.face[lat.time_face(i, j)]);
    }
    return out;
}

}  // namespace detail

/// Solution determined by Cauchy data on a horizontal cut and the lateral
/// boundary values; the whole lattice is filled by marching forwards and
/// backwards from the cut.
inline History evolve(const RectLattice& lat, const Potential& pot, const CauchyData& cauchy,
                      const LateralData& lateral) {
    const double hk4 = 4.0 * lat.h() * lat.k();
    return detail::march<HistoryTag>(lat, cauchy, lateral,
                                     [&](AtomId, double p) { return hk4 * pot.derivative(p); });
}

/// Jacobian of the stacked residual (internal per atom, gluing per interior
/// face) with respect to all degrees of freedom.
class LinearizedOperator {
public:
    LinearizedOperator(const RectLattice& lat, const History& phi, const Potential& pot)
        : lat_(lat), hessian_(action_hessian(lat, phi, pot)) {}

    /// First-order change of (J0, J1) along v.
    JResiduals apply(const VerticalVector& v) const {
        const Eigen::VectorXd hv = hessian_ * v.flat();
        JResiduals out;
        const int na = lat_.atom_count();
        out.j0.assign(hv.data(), hv.data() + na);
        out.j1.assign(static_cast<std::size_t>(lat_.face_count()), 0.0);
        for (FaceId f = 0; f < lat_.face_count(); ++f)
            if (!lat_.is_boundary(f)) out.j1[f] = hv[na + f];
        return out;
    }

    bool in_kernel(const VerticalVector& v, double tol) const {
        return apply(v).max_abs() <= tol * std::max(1.0, v.max_abs());
    }

    const Eigen::SparseMatrix<double>& hessian() const { return hessian_; }

private:
    RectLattice lat_;
    Eigen::SparseMatrix<double> hessian_;
};

inline LinearizedOperator linearize(const RectLattice& lat, const History& phi, const Potential& pot) {
    return LinearizedOperator(lat, phi, pot);
}

inline void require_solution(const RectLattice& lat, const History& phi, const Potential& pot,
                             double tol = 1e-10) {
    const double r = j_residuals(lat, phi, pot).max_abs();
    if (!(r <= tol))
        throw PreconditionError("history is not a solution (max residual " + std::to_string(r) + ")");
}

/// First variation of `phi` with the given data on a horizontal cut and the
/// given lateral variation (zero by default), built by the linearised march.
inline VerticalVector first_variation(const RectLattice& lat, const Potential& pot, const History& phi,
                                      const CauchyData& data,
                                      const std::optional<LateralData>& lateral = std::nullopt) {
    require_solution(lat, phi, pot);
    const double hk4 = 4.0 * lat.h() * lat.k();
    return detail::march<VariationTag>(lat, data, lateral ? *lateral : LateralData::zeros(lat),
                                       [&](AtomId a, double v) {
                                           return hk4 * pot.second_derivative(phi.atom[a]) * v;
                                       });
}

/// Surface form of first_variation: data given per face of `sigma` as
/// interleaved (atom, face) pairs. Only horizontal cuts are supported.
inline VerticalVector first_variation(const RectLattice& lat, const Potential& pot, const History& phi,
                                      const OrientedSurface& sigma, const Eigen::VectorXd& data) {
    const auto cut = as_horizontal_cut(lat, sigma);
    if (!cut) throw DomainError("first variations are only supported from horizontal-cut data");
    if (data.size() != 2 * lat.n_x()) throw DomainError("surface data has the wrong size");
    Eigen::VectorXd ordered(data.size());
    for (std::size_t n = 0; n < sigma.faces.size(); ++n) {
        const int j = lat.face_index(sigma.faces[n].face).second;
        ordered[2 * j] = data[static_cast<Eigen::Index>(2 * n)];
        ordered[2 * j + 1] = data[static_cast<Eigen::Index>(2 * n + 1)];
    }
    if (!cut->future) {
        // Side atoms sit above the cut; the gluing relation gives the atom below.
        if (cut->row < 1) throw DomainError("past-oriented cut on the initial boundary has no data below it");
        for (int j = 0; j < lat.n_x(); ++j) ordered[2 * j] = 2.0 * ordered[2 * j + 1] - ordered[2 * j];
    }
    return first_variation(lat, pot, phi, CauchyData::from_vector(cut->row, ordered));
}

/// First variation with prescribed values on every boundary face; the
/// interior is fixed by the linearised field equations.
inline VerticalVector first_variation_dirichlet(const RectLattice& lat, const Potential& pot,
                                                const History& phi, const VerticalVector& boundary) {
    require_solution(lat, phi, pot);
    const int na = lat.atom_count();
    std::vector<int> free_idx, fixed_idx;
    std::vector<char> is_fixed(static_cast<std::size_t>(na + lat.face_count()), 0);
    for (FaceId f : lat.boundary_faces()) is_fixed[static_cast<std::size_t>(na + f)] = 1;
    for (int i = 0; i < na + lat.face_count(); ++i) (is_fixed[i] ? fixed_idx : free_idx).push_back(i);

    const Eigen::SparseMatrix<double> H = action_hessian(lat, phi, pot);
    const Eigen::VectorXd vb = boundary.flat();
    Eigen::VectorXd vfixed = Eigen::VectorXd::Zero(vb.size());
    for (int i : fixed_idx) vfixed[i] = vb[i];
    const Eigen::VectorXd rhs = detail::gather(-(H * vfixed), free_idx);
    const Eigen::SparseMatrix<double> Hff = detail::restrict_square(H, free_idx);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(Hff);
    if (lu.info() != Eigen::Success) throw SolverError("singular linearised Dirichlet problem", 0.0);
    Eigen::VectorXd x = lu.solve(rhs);
    x += lu.solve(rhs - Hff * x);  // one step of iterative refinement
    Eigen::VectorXd full = vfixed;
    for (std::size_t i = 0; i < free_idx.size(); ++i) full[free_idx[i]] = x[static_cast<Eigen::Index>(i)];
    return VerticalVector::from_flat(lat, full);
}

/// Per-face coordinates (v_side_atom, v_face) of a vertical vector on a surface.
inline Eigen::VectorXd surface_coordinates(const OrientedSurface& sigma, const VerticalVector& v) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(2 * sigma.faces.size()));
    for (std::size_t n = 0; n < sigma.faces.size(); ++n) {
        z[static_cast<Eigen::Index>(2 * n)] = v.atom[sigma.faces[n].side];
        z[static_cast<Eigen::Index>(2 * n + 1)] = v.face[sigma.faces[n].face];
    }
    return z;
}

/// omega_{L,Sigma}(v, w) summed face by face, with the sum of absolute
/// per-face terms as a scale for relative comparisons.
struct SurfacePairing {
    double value = 0.0;
    double scale = 0.0;
};

inline SurfacePairing omega(const RectLattice& lat, const OrientedSurface& sigma, const VerticalVector& v,
                            const VerticalVector& w) {
    SurfacePairing p;
    for (const auto& of : sigma.faces) {
        const double c = multisymplectic_coefficient(lat, of);
        const double t = c * (v.atom[of.side] * w.face[of.face] - v.face[of.face] * w.atom[of.side]);
        p.value += t;
        p.scale += std::abs(t);
    }
    return p;
}

struct PresymplecticMatrix {
    OrientedSurface surface;
    Eigen::MatrixXd matrix;      ///< antisymmetric, coordinates as in surface_coordinates
    Eigen::MatrixXd null_basis;  ///< orthonormal columns spanning the numerical kernel
    double tol = 0.0;            ///< absolute singular-value threshold used
    double largest_singular_value = 0.0;
};

inline PresymplecticMatrix presymplectic_matrix(const RectLattice& lat, const OrientedSurface& sigma,
                                                const History& /*phi: the form is field independent*/,
                                                double relative_tol = 1e-10) {
    validate(lat, sigma);
    const auto n = static_cast<Eigen::Index>(2 * sigma.faces.size());
    PresymplecticMatrix pm;
    pm.surface = sigma;
    pm.matrix = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t f = 0; f < sigma.faces.size(); ++f) {
        const double c = multisymplectic_coefficient(lat, sigma.faces[f]);
        const auto i = static_cast<Eigen::Index>(2 * f);
        pm.matrix(i, i + 1) = c;
        pm.matrix(i + 1, i) = -c;
    }
    if (n == 0) return pm;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pm.matrix, Eigen::ComputeFullV);
    const Eigen::VectorXd s = svd.singularValues();
    pm.largest_singular_value = s[0];
    pm.tol = relative_tol * s[0];
    Eigen::Index rank = 0;
    while (rank < s.size() && s[rank] > pm.tol) ++rank;
    pm.null_basis = svd.matrixV().rightCols(n - rank);
    return pm;
}

}  // namespace msl
