#pragma once

// Weak observable currents: functions on a family of solutions fixed by a
// differential -i_v omega_Sigma and an integration constant, evaluated by
// line integrals through the space of solutions.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "msl/currents.hpp"
#include "msl/errors.hpp"
#include "msl/lattice.hpp"
#include "msl/solver.hpp"

namespace msl {

/// Solutions on a lattice with fixed lateral boundary values, parametrised by
/// Cauchy data z on the future-oriented cut at `row` (interleaved atom/face
/// values, 2 n_x coordinates).
class CauchyFamily {
public:
    CauchyFamily(RectLattice lat, Potential pot, int row, std::optional<LateralData> lateral = std::nullopt)
        : lat_(std::move(lat)), pot_(std::move(pot)), row_(row),
          lateral_(lateral ? *lateral : LateralData::zeros(lat_)) {
        if (row < 1 || row > lat_.n_t()) throw DomainError("family cut row must be in [1, n_t]");
    }

    const RectLattice& lattice() const { return lat_; }
    const Potential& potential() const { return pot_; }
    int row() const { return row_; }
    int dim() const { return 2 * lat_.n_x(); }
    const LateralData& lateral() const { return lateral_; }
    OrientedSurface cut() const { return horizontal_cut(lat_, row_); }

    History solution(const Eigen::VectorXd& z) const {
        return evolve(lat_, pot_, CauchyData::from_vector(row_, z), lateral_);
    }

    Eigen::VectorXd coordinates(const History& phi) const { return read_cauchy(lat_, phi, row_).to_vector(); }
    Eigen::VectorXd coordinates(const VerticalVector& v) const { return read_cauchy(lat_, v, row_).to_vector(); }

    /// First variation at phi with Cauchy data dz and no lateral variation.
    VerticalVector variation(const History& phi, const Eigen::VectorXd& dz) const {
        return first_variation(lat_, pot_, phi, CauchyData::from_vector(row_, dz));
    }

    /// Whether phi is a solution of this family (its lateral values and field equations).
    bool contains(const History& phi, double tol = 1e-10) const {
        const LateralData l = read_lateral(lat_, phi);
        for (int i = 0; i < lat_.n_t(); ++i)
            if (std::abs(l.left[i] - lateral_.left[i]) > tol || std::abs(l.right[i] - lateral_.right[i]) > tol)
                return false;
        return is_solution(lat_, phi, pot_, tol);
    }

private:
    RectLattice lat_;
    Potential pot_;
    int row_;
    LateralData lateral_;
};

/// Vector field on the family: the first variation assigned to the solution
/// phi with Cauchy coordinates z.
using VfRule = std::function<VerticalVector(const History& phi, const Eigen::VectorXd& z)>;

/// Rule that re-solves the linearised equations with fixed data on a
/// horizontal cut at every solution.
inline VfRule fixed_data_rule(const CauchyFamily& fam, const OrientedSurface& sigma, const Eigen::VectorXd& data) {
    if (!as_horizontal_cut(fam.lattice(), sigma))
        throw DomainError("fixed-data rules need a horizontal cut");
    return [fam, sigma, data](const History& phi, const Eigen::VectorXd&) {
        return first_variation(fam.lattice(), fam.potential(), phi, sigma, data);
    };
}

/// Rule z -> variation with Cauchy data A z.
inline VfRule linear_rule(const CauchyFamily& fam, const Eigen::MatrixXd& A) {
    return [fam, A](const History& phi, const Eigen::VectorXd& z) { return fam.variation(phi, A * z); };
}

/// Lie bracket [x, y] = Dy[x] - Dx[y] in Cauchy coordinates, with the
/// directional derivatives taken by central differences of step eps.
inline VfRule commutator_rule(const CauchyFamily& fam, VfRule x, VfRule y, double eps = 1e-6) {
    return [fam, x = std::move(x), y = std::move(y), eps](const History& phi, const Eigen::VectorXd& z) {
        auto coords = [&](const VfRule& r, const Eigen::VectorXd& p) {
            return fam.coordinates(r(fam.solution(p), p));
        };
        const Eigen::VectorXd xz = fam.coordinates(x(phi, z));
        const Eigen::VectorXd yz = fam.coordinates(y(phi, z));
        const Eigen::VectorXd dy_x = (coords(y, z + eps * xz) - coords(y, z - eps * xz)) / (2 * eps);
        const Eigen::VectorXd dx_y = (coords(x, z + eps * yz) - coords(x, z - eps * yz)) / (2 * eps);
        return fam.variation(phi, dy_x - dx_y);
    };
}

/// Solution-space path from phi0 to phi: a polyline through Cauchy coordinates.
struct SolutionPath {
    std::vector<Eigen::VectorXd> waypoints;  ///< strictly between the end points
};

struct QuadratureOptions {
    double tolerance = 1e-8;  ///< stop when successive Simpson estimates differ by less
    int min_intervals = 4;
    int max_intervals = 1024;
};

/// A Sigma-weak observable current: f_Sigma(phi0) = k and
/// d f_Sigma(phi)[u] = -omega_Sigma(v(phi), u).
struct WeakCurrent {
    CauchyFamily family;
    VfRule vf;
    OrientedSurface homology_class;
    Eigen::VectorXd z0;
    double k = 0.0;
    QuadratureOptions quadrature;
};

inline WeakCurrent construct_weak(const CauchyFamily& fam, VfRule vf, double k, const History& phi0,
                                  const OrientedSurface& homology_class, double tol = 1e-9) {
    validate(fam.lattice(), homology_class);
    if (!fam.contains(phi0)) throw PreconditionError("reference history is not a solution of the family");
    const Eigen::VectorXd z0 = fam.coordinates(phi0);
    const VerticalVector v = vf(phi0, z0);
    if (!v.fits(fam.lattice()) || !linearize(fam.lattice(), phi0, fam.potential()).in_kernel(v, tol))
        throw PreconditionError("vector-field rule does not produce a first variation at the reference solution");
    return WeakCurrent{fam, std::move(vf), homology_class, z0, k, {}};
}

namespace detail {

/// Composite Simpson with interval doubling; returns the Richardson-corrected
/// estimate once two successive estimates agree to tol.
template <class F>
double simpson(F&& f, const QuadratureOptions& q) {
    int n = q.min_intervals;
    std::vector<double> values(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) values[i] = f(static_cast<double>(i) / n);
    auto estimate = [&] {
        double s = values.front() + values.back();
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * values[i];
        return s / (3.0 * n);
    };
    double prev = estimate();
    while (n < q.max_intervals) {
        std::vector<double> next(static_cast<std::size_t>(2 * n + 1));
        for (int i = 0; i <= n; ++i) next[2 * i] = values[i];
        for (int i = 0; i < n; ++i) next[2 * i + 1] = f((2.0 * i + 1.0) / (2.0 * n));
        values = std::move(next);
        n *= 2;
        const double cur = estimate();
        if (std::abs(cur - prev) < q.tolerance) return cur + (cur - prev) / 15.0;
        prev = cur;
    }
    throw SolverError("line integral did not converge", 0.0);
}

}  // namespace detail

/// +1 if sigma is homologous to the class, -1 if to its reverse; throws otherwise.
inline int orientation_relative_to(const RectLattice& lat, const OrientedSurface& cls, const OrientedSurface& sigma) {
    if (homologous(lat, cls, sigma)) return +1;
    OrientedSurface rev;
    try {
        rev = reverse(lat, cls);
    } catch (const DomainError&) {
        throw DomainError("surface is not homologous to the current's class");
    }
    if (homologous(lat, rev, sigma)) return -1;
    throw DomainError("surface is not homologous to the current's class or its reverse");
}

/// f_Sigma(phi) = +-k + integral over the path of -omega_Sigma(v, gamma').
inline double evaluate_weak(const WeakCurrent& w, const OrientedSurface& sigma, const History& phi,
                            const SolutionPath& path = {}) {
    const auto& fam = w.family;
    const auto& lat = fam.lattice();
    const int orientation = orientation_relative_to(lat, w.homology_class, sigma);
    if (!fam.contains(phi)) throw PreconditionError("history is not a solution of the current's family");

    std::vector<Eigen::VectorXd> nodes{w.z0};
    for (const auto& p : path.waypoints) nodes.push_back(p);
    nodes.push_back(fam.coordinates(phi));

    double total = orientation * w.k;
    for (std::size_t seg = 0; seg + 1 < nodes.size(); ++seg) {
        const Eigen::VectorXd a = nodes[seg];
        const Eigen::VectorXd dz = nodes[seg + 1] - a;
        if (dz.cwiseAbs().maxCoeff() == 0.0) continue;
        auto integrand = [&](double s) {
            const Eigen::VectorXd z = a + s * dz;
            const History g = fam.solution(z);
            if (!std::isfinite(g.max_abs()))
                throw SolverError("path solve failed at s = " + std::to_string(s), g.max_abs());
            const VerticalVector tangent = fam.variation(g, dz);
            return -omega(lat, sigma, w.vf(g, z), tangent).value;
        };
        total += detail::simpson(integrand, w.quadrature);
    }
    return total;
}

/// A per-face function supported on some faces of a designated surface.
struct SeedCochain {
    std::vector<FaceId> support;
    Current local;

    bool supports(FaceId f) const { return std::find(support.begin(), support.end(), f) != support.end(); }
};

/// Localized measurement: the seed's Hamiltonian data on sigma at phi0,
/// extended by the linearised equations at every solution, with constant
/// k = sum of the seed over sigma at phi0.
struct LocalizedMeasurement {
    WeakCurrent current;
    Eigen::VectorXd seed_data;  ///< (v_atom, v_face) per face of sigma
};

inline LocalizedMeasurement localized_measurement(const CauchyFamily& fam, const SeedCochain& seed,
                                                  const OrientedSurface& sigma, const History& phi0) {
    const auto& lat = fam.lattice();
    if (!as_horizontal_cut(lat, sigma)) throw DomainError("localized measurements need a horizontal cut");
    for (FaceId f : seed.support) {
        const bool on_sigma = std::any_of(sigma.faces.begin(), sigma.faces.end(),
                                          [f](const OrientedFace& of) { return of.face == f; });
        if (!on_sigma) throw DomainError("seed support leaves the surface");
    }
    Eigen::VectorXd data = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * sigma.faces.size()));
    double k = 0.0;
    for (std::size_t n = 0; n < sigma.faces.size(); ++n) {
        const auto& of = sigma.faces[n];
        if (!seed.supports(of.face)) continue;
        const double c = multisymplectic_coefficient(lat, of);
        if (c == 0.0) throw DomainError("degenerate face in the seed support");
        const JetSample j = jet(phi0, of);
        data[static_cast<Eigen::Index>(2 * n)] = -seed.local.d_phi_face(lat, j) / c;
        data[static_cast<Eigen::Index>(2 * n + 1)] = seed.local.d_phi_atom(lat, j) / c;
        k += seed.local.evaluate(lat, j);
    }
    return {construct_weak(fam, fixed_data_rule(fam, sigma, data), k, phi0, sigma), data};
}

/// Weak Poisson bracket {F, G} on sigma at phi: Omega(w, v) summed over sigma
/// for the vector fields v of F and w of G.
inline double weak_bracket(const WeakCurrent& f, const WeakCurrent& g, const OrientedSurface& sigma,
                           const History& phi) {
    const auto& fam = f.family;
    const Eigen::VectorXd z = fam.coordinates(phi);
    return omega(fam.lattice(), sigma, g.vf(phi, z), f.vf(phi, z)).value;
}

/// Whether -i_v omega_Sigma is closed on the family near phi: the exterior
/// derivative of sigma_v(.) = omega_Sigma(v, .) on the coordinate fields
/// of the Cauchy parametrisation, by central differences.
struct LocallyHamiltonianReport {
    bool ok = true;
    double max_defect = 0.0;
};

inline LocallyHamiltonianReport locally_hamiltonian_check(const CauchyFamily& fam, const VfRule& vf,
                                                          const OrientedSurface& sigma, const History& phi,
                                                          double tol = 1e-6, double eps = 1e-4) {
    require_solution(fam.lattice(), phi, fam.potential());
    const Eigen::VectorXd z = fam.coordinates(phi);
    const int n = fam.dim();
    auto sigma_v = [&](const Eigen::VectorXd& y) {
        const History g = fam.solution(y);
        const VerticalVector v = vf(g, y);
        Eigen::VectorXd out(n);
        for (int b = 0; b < n; ++b)
            out[b] = omega(fam.lattice(), sigma, v, fam.variation(g, Eigen::VectorXd::Unit(n, b))).value;
        return out;
    };
    Eigen::MatrixXd d(n, n);  // d(a, b) = partial_a sigma_v(e_b)
    for (int a = 0; a < n; ++a) {
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, a);
        d.row(a) = ((sigma_v(z + eps * e) - sigma_v(z - eps * e)) / (2 * eps)).transpose();
    }
    LocallyHamiltonianReport rep;
    rep.max_defect = (d - d.transpose()).cwiseAbs().maxCoeff();
    rep.ok = rep.max_defect <= tol;
    return rep;
}

/// Local improvement of a weak current generated by the Lie bracket of two
/// locally Hamiltonian rules: omega(x, y) per face plus a flux cochain fixing
/// the constant on the reference class at phi0.
struct ImprovedCurrent {
    CauchyFamily family;
    VfRule x;
    VfRule y;
    double kappa = 0.0;

    /// The local current attached to the solution phi.
    Current at(const History& phi) const {
        const Eigen::VectorXd z = family.coordinates(phi);
        return symplectic_product(family.lattice(), family.potential(), phi, x(phi, z), y(phi, z)) +
               flux_cochain(kappa);
    }

    double integrate(const OrientedSurface& sigma, const History& phi) const {
        return msl::integrate(family.lattice(), at(phi), sigma, phi);
    }
};

inline ImprovedCurrent improve_to_local(const CauchyFamily& fam, VfRule x, VfRule y, double k, const History& phi0,
                                        const OrientedSurface& homology_class, double lh_tol = 1e-6) {
    for (const VfRule* r : {&x, &y}) {
        const auto rep = locally_hamiltonian_check(fam, *r, homology_class, phi0, lh_tol);
        if (!rep.ok)
            throw PreconditionError("rule is not locally Hamiltonian (defect " + std::to_string(rep.max_defect) + ")");
    }
    ImprovedCurrent out{fam, std::move(x), std::move(y), 0.0};
    const double base = out.integrate(homology_class, phi0);
    // The flux cochain integrates to +-kappa on the class.
    const double unit = msl::integrate(fam.lattice(), flux_cochain(1.0), homology_class, phi0);
    out.kappa = (k - base) / unit;
    return out;
}

/// A first variation v with omega_Sigma(v, w) = 1, certifying that w is not
/// a null direction of the presymplectic form on sigma.
struct SeparationWitness {
    VerticalVector v;
    double pairing = 0.0;
    double normalized = 0.0;  ///< |pairing| / (|v_Sigma| |w_Sigma| sigma_max)
};

inline SeparationWitness separation_witness(const RectLattice& lat, const Potential& pot, const History& phi,
                                            const VerticalVector& w, const OrientedSurface& sigma,
                                            double min_normalized = 1e-6) {
    require_solution(lat, phi, pot);
    if (!linearize(lat, phi, pot).in_kernel(w, 1e-9)) throw PreconditionError("w is not a first variation");
    if (!as_horizontal_cut(lat, sigma)) throw DomainError("separation witnesses are built on horizontal cuts");
    const auto pm = presymplectic_matrix(lat, sigma, phi);
    const Eigen::VectorXd ws = surface_coordinates(sigma, w);
    Eigen::VectorXd wp = ws;
    if (pm.null_basis.cols() > 0) wp -= pm.null_basis * (pm.null_basis.transpose() * ws);
    if (wp.norm() <= 1e-12 * std::max(1.0, ws.norm()))
        throw PreconditionError("w lies in the null space of the presymplectic form");
    // Covector eta with eta(w) = 1 on the complement, then v = pinv(M^T) eta.
    const Eigen::VectorXd eta = wp / wp.squaredNorm();
    const Eigen::MatrixXd Mt = pm.matrix.transpose();
    const Eigen::VectorXd vs = Mt.completeOrthogonalDecomposition().solve(eta);
    SeparationWitness out;
    out.v = first_variation(lat, pot, phi, sigma, vs);
    out.pairing = omega(lat, sigma, out.v, w).value;
    out.normalized = std::abs(out.pairing) / (vs.norm() * ws.norm() * pm.largest_singular_value);
    if (!(out.normalized >= min_normalized))
        throw PreconditionError("separation pairing below threshold: " + std::to_string(out.normalized));
    return out;
}

}  // namespace msl
