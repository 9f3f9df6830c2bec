#pragma once

// Factor-3 refinement between a coarse and a fine rectangular lattice, the
// corrected coarse action obtained by extremizing the fine action over the
// histories with prescribed anchor values, and the transfer of coarse
// currents to weak currents of the fine dynamics.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "msl/currents.hpp"
#include "msl/dynamics.hpp"
#include "msl/errors.hpp"
#include "msl/lattice.hpp"
#include "msl/solver.hpp"
#include "msl/weakoc.hpp"

namespace msl {

/// Coarse lattice together with its threefold refinement. Coarse atom
/// (i, j) is anchored at the central fine atom (3i+1, 3j+1); coarse faces at
/// the central fine face of the matching triple, T(i, j) -> T(3i, 3j+1) and
/// S(i, j) -> S(3i+1, 3j).
class RefinementMap {
public:
    static constexpr int kFactor = 3;

    explicit RefinementMap(RectLattice coarse)
        : coarse_(coarse),
          fine_(kFactor * coarse.n_t(), kFactor * coarse.n_x(), coarse.h() / kFactor, coarse.k() / kFactor) {}

    const RectLattice& coarse() const { return coarse_; }
    const RectLattice& fine() const { return fine_; }

    AtomId anchor_atom(AtomId a) const {
        coarse_.check_atom(a);
        const int i = a / coarse_.n_x();
        const int j = a % coarse_.n_x();
        return fine_.atom(kFactor * i + 1, kFactor * j + 1);
    }

    FaceId anchor_face(FaceId f) const {
        coarse_.check_face(f);
        const auto [i, j] = coarse_.face_index(f);
        if (coarse_.axis(f) == Axis::Time) return fine_.time_face(kFactor * i, kFactor * j + 1);
        return fine_.space_face(kFactor * i + 1, kFactor * j);
    }

    /// Flat fine dof index of every coarse dof (atoms first, then faces).
    std::vector<int> anchor_dofs() const {
        std::vector<int> idx;
        idx.reserve(static_cast<std::size_t>(coarse_.atom_count() + coarse_.face_count()));
        for (AtomId a = 0; a < coarse_.atom_count(); ++a) idx.push_back(anchor_atom(a));
        for (FaceId f = 0; f < coarse_.face_count(); ++f) idx.push_back(fine_.atom_count() + anchor_face(f));
        return idx;
    }

    /// Reads fine values at the anchors.
    template <class Tag>
    NodalValues<Tag> decimate(const NodalValues<Tag>& fine) const {
        if (!fine.fits(fine_)) throw DomainError("history does not match the fine lattice");
        NodalValues<Tag> c(coarse_);
        for (AtomId a = 0; a < coarse_.atom_count(); ++a) c.atom[a] = fine.atom[anchor_atom(a)];
        for (FaceId f = 0; f < coarse_.face_count(); ++f) c.face[f] = fine.face[anchor_face(f)];
        return c;
    }

    /// A fine history with the given anchor values: atoms copy their coarse
    /// atom, non-anchor faces average their fine neighbours.
    History prolong(const History& coarse) const {
        if (!coarse.fits(coarse_)) throw DomainError("history does not match the coarse lattice");
        History p(fine_);
        for (AtomId a = 0; a < fine_.atom_count(); ++a) {
            const int i = a / fine_.n_x();
            const int j = a % fine_.n_x();
            p.atom[a] = coarse.atom[coarse_.atom(i / kFactor, j / kFactor)];
        }
        for (FaceId f = 0; f < fine_.face_count(); ++f) {
            const auto lo = fine_.lower(f);
            const auto up = fine_.upper(f);
            p.face[f] = lo && up ? 0.5 * (p.atom[*lo] + p.atom[*up]) : p.atom[lo ? *lo : *up];
        }
        for (FaceId f = 0; f < coarse_.face_count(); ++f) p.face[anchor_face(f)] = coarse.face[f];
        return p;
    }

    /// Fine horizontal cut carrying the anchors of a coarse horizontal cut,
    /// with the same orientation.
    OrientedSurface anchor_surface(const OrientedSurface& sigma) const {
        const auto cut = as_horizontal_cut(coarse_, sigma);
        if (!cut) throw DomainError("only horizontal coarse cuts have an anchor surface");
        return horizontal_cut(fine_, kFactor * cut->row, cut->future);
    }

private:
    RectLattice coarse_;
    RectLattice fine_;
};

namespace detail {

// Newton start: the free-field extremizer with the same constraints.
inline History free_guess(const RefinementMap& map, const History& coarse, const std::vector<char>& fixed) {
    return newton_stationary(map.fine(), Potential::free(), map.prolong(coarse), fixed);
}

}  // namespace detail

/// Extremum of the fine action over the fine histories whose anchor values
/// are the given coarse history. All other fine values are free, boundary
/// faces included, so the extremizer obeys natural boundary conditions
/// there. The last extremizer is cached.
class CorrectedAction {
public:
    CorrectedAction(RefinementMap map, Potential pot, NewtonOptions opt = {})
        : map_(std::move(map)), pot_(std::move(pot)), opt_(opt) {
        const auto& fine = map_.fine();
        fixed_.assign(static_cast<std::size_t>(fine.atom_count() + fine.face_count()), 0);
        for (int i : map_.anchor_dofs()) fixed_[static_cast<std::size_t>(i)] = 1;
    }

    const RefinementMap& map() const { return map_; }
    const Potential& potential() const { return pot_; }
    const std::vector<char>& anchor_mask() const { return fixed_; }

    const History& extremizer(const History& coarse) const {
        if (!coarse.fits(map_.coarse())) throw DomainError("history does not match the coarse lattice");
        if (cached_coarse_ && cached_coarse_->flat() == coarse.flat()) return *cached_fine_;
        History fine = newton_stationary(map_.fine(), pot_, detail::free_guess(map_, coarse, fixed_), fixed_, opt_);
        cached_coarse_ = coarse;
        cached_fine_ = std::move(fine);
        return *cached_fine_;
    }

    double value(const History& coarse) const { return action(map_.fine(), extremizer(coarse), pot_); }

    /// Gradient over the coarse dofs (atoms, then faces). By stationarity in
    /// the free directions it is the fine gradient read at the anchors.
    Eigen::VectorXd gradient(const History& coarse) const {
        const Eigen::VectorXd g = action_gradient(map_.fine(), extremizer(coarse), pot_);
        return detail::gather(g, map_.anchor_dofs());
    }

    /// Gradient restricted to coarse atoms and interior coarse faces, the
    /// directions a coarse solution must be stationary in.
    Eigen::VectorXd interior_gradient(const History& coarse) const {
        const Eigen::VectorXd g = gradient(coarse);
        const auto& c = map_.coarse();
        std::vector<int> idx;
        for (AtomId a = 0; a < c.atom_count(); ++a) idx.push_back(a);
        for (FaceId f : c.interior_faces()) idx.push_back(c.atom_count() + f);
        return detail::gather(g, idx);
    }

private:
    RefinementMap map_;
    Potential pot_;
    NewtonOptions opt_;
    std::vector<char> fixed_;
    mutable std::optional<History> cached_coarse_;
    mutable std::optional<History> cached_fine_;
};

inline double corrected_action(const RefinementMap& map, const History& coarse, const Potential& pot) {
    return CorrectedAction(map, pot).value(coarse);
}

/// Fine solution of the corrected problem: stationary in every fine dof
/// except the anchors of coarse boundary faces, which take the boundary
/// values of `coarse`. Its decimation is a solution of the corrected coarse
/// dynamics.
inline History corrected_dirichlet(const CorrectedAction& ca, const History& coarse, const NewtonOptions& opt = {}) {
    const auto& map = ca.map();
    const auto& fine = map.fine();
    std::vector<char> fixed(static_cast<std::size_t>(fine.atom_count() + fine.face_count()), 0);
    for (FaceId f : map.coarse().boundary_faces())
        fixed[static_cast<std::size_t>(fine.atom_count() + map.anchor_face(f))] = 1;
    return newton_stationary(fine, ca.potential(), detail::free_guess(map, coarse, fixed), fixed, opt);
}

struct TransferOptions {
    int samples = 3;                      ///< corrected solutions used by the precondition check
    double sample_amplitude = 0.02;       ///< range of the random coarse boundary data
    std::uint64_t seed = 7;
    double tolerance = 1e-8;              ///< for check_oc_conditions on the samples
    bool enforce_precondition = true;     ///< reject currents that fail the check
};

/// A coarse current carried to the fine scale as a weak current on the
/// fine solutions, together with the pulled-back function it integrates.
struct TransferredCurrent {
    WeakCurrent weak;
    OrientedSurface fine_surface;
    OcReport precondition;
    std::function<double(const History&)> pulled_back;  ///< fine solution -> f_Sigma(decimate(.))
};

namespace detail {

/// Differential of phi' -> f_Sigma(decimate(phi')) in the family coordinates.
inline Eigen::VectorXd pulled_back_gradient(const RefinementMap& map, const CauchyFamily& fam, const Current& f,
                                            const OrientedSurface& sigma, const History& fine) {
    const auto& coarse = map.coarse();
    const History phi = map.decimate(fine);
    Eigen::VectorXd g(fam.dim());
    for (int i = 0; i < fam.dim(); ++i) {
        const VerticalVector dv = map.decimate(fam.variation(fine, Eigen::VectorXd::Unit(fam.dim(), i)));
        double s = 0.0;
        for (const auto& of : sigma.faces) {
            const JetSample j = jet(phi, of);
            s += f.d_phi_atom(coarse, j) * dv.atom[of.side] + f.d_phi_face(coarse, j) * dv.face[of.face];
        }
        g[i] = s;
    }
    return g;
}

}  // namespace detail

/// Carries a coarse current to the fine scale: pulls f_Sigma back through
/// decimation, turns its differential into a Hamiltonian vector field with
/// the fine presymplectic form on the anchor surface, and builds the weak
/// current through phi0_fine. The current must be an observable current of
/// the corrected dynamics; this is checked on corrected solutions.
inline TransferredCurrent transfer_coarse_oc(const CorrectedAction& ca, const Current& coarse_current,
                                             const OrientedSurface& sigma_coarse, const History& phi0_fine,
                                             const TransferOptions& opt = {}) {
    const RefinementMap& map = ca.map();
    const auto& coarse = map.coarse();
    const auto& fine = map.fine();
    validate(coarse, sigma_coarse);
    const OrientedSurface sigma_fine = map.anchor_surface(sigma_coarse);

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unif(-opt.sample_amplitude, opt.sample_amplitude);
    std::vector<History> samples;
    for (int n = 0; n < opt.samples; ++n) {
        History c(coarse);
        for (FaceId f : coarse.boundary_faces()) c.face[f] = unif(rng);
        samples.push_back(map.decimate(corrected_dirichlet(ca, c)));
    }
    const OcReport rep = check_oc_conditions(coarse, coarse_current, samples, opt.tolerance);
    if (opt.enforce_precondition && !rep.all())
        throw PreconditionError("transfer rejected: '" + coarse_current.name() +
                                "' is not an observable current of the corrected dynamics (antisymmetry " +
                                std::to_string(rep.max_antisymmetry) + ", closedness " +
                                std::to_string(rep.max_closedness) + ", null directions " +
                                std::to_string(rep.max_null) + ")");

    const auto cut = as_horizontal_cut(fine, sigma_fine);
    CauchyFamily fam(fine, ca.potential(), cut->row, read_lateral(fine, phi0_fine));

    auto pulled_back = [map, coarse_current, sigma_coarse](const History& phi) {
        return integrate(map.coarse(), coarse_current, sigma_coarse, map.decimate(phi));
    };
    // -omega(v, u) = dg(u) for every u, with omega in family coordinates.
    VfRule vf = [map, fam, coarse_current, sigma_coarse, sigma_fine](const History& phi, const Eigen::VectorXd&) {
        const int n = fam.dim();
        std::vector<VerticalVector> basis;
        for (int i = 0; i < n; ++i) basis.push_back(fam.variation(phi, Eigen::VectorXd::Unit(n, i)));
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = omega(fam.lattice(), sigma_fine, basis[i], basis[j]).value;
        const Eigen::VectorXd dg = detail::pulled_back_gradient(map, fam, coarse_current, sigma_coarse, phi);
        const Eigen::VectorXd vz = m.transpose().fullPivLu().solve(-dg);
        return fam.variation(phi, vz);
    };
    WeakCurrent weak = construct_weak(fam, std::move(vf), pulled_back(phi0_fine), phi0_fine, sigma_fine);
    return TransferredCurrent{std::move(weak), sigma_fine, rep, std::move(pulled_back)};
}

}  // namespace msl
