#include <gtest/gtest.h>

#include <random>

#include "msl/solver.hpp"
#include "test_util.hpp"

using namespace msl;

namespace {

const Potential kPhi4 = Potential::phi4(0.1, 0.5);

// Stacked residual (internal per atom, gluing per interior face) as a vector.
Eigen::VectorXd stacked(const RectLattice& lat, const History& phi, const Potential& pot) {
    const auto r = j_residuals(lat, phi, pot);
    const auto interior = lat.interior_faces();
    Eigen::VectorXd out(static_cast<Eigen::Index>(r.j0.size() + interior.size()));
    Eigen::Index n = 0;
    for (double v : r.j0) out[n++] = v;
    for (FaceId f : interior) out[n++] = r.j1[f];
    return out;
}

// Independent dense solve of the linear Dirichlet problem: unknowns are
// atoms plus interior faces, the system matrix is probed column by column.
History dense_free_solve(const RectLattice& lat, const History& boundary) {
    const Potential free;
    std::vector<std::size_t> unknowns;
    for (AtomId a = 0; a < lat.atom_count(); ++a) unknowns.push_back(static_cast<std::size_t>(a));
    for (FaceId f : lat.interior_faces()) unknowns.push_back(static_cast<std::size_t>(lat.atom_count() + f));
    History base = boundary;
    for (std::size_t u : unknowns) base.dof(u) = 0.0;
    const Eigen::VectorXd r0 = stacked(lat, base, free);
    Eigen::MatrixXd A(r0.size(), static_cast<Eigen::Index>(unknowns.size()));
    for (std::size_t c = 0; c < unknowns.size(); ++c) {
        History p = base;
        p.dof(unknowns[c]) = 1.0;
        A.col(static_cast<Eigen::Index>(c)) = stacked(lat, p, free) - r0;
    }
    const Eigen::VectorXd x = A.fullPivLu().solve(-r0);
    History out = base;
    for (std::size_t c = 0; c < unknowns.size(); ++c) out.dof(unknowns[c]) = x[static_cast<Eigen::Index>(c)];
    return out;
}

History random_boundary(const RectLattice& lat, std::mt19937_64& rng, double amp) {
    std::uniform_real_distribution<double> u(-amp, amp);
    History b(lat);
    for (FaceId f : lat.boundary_faces()) b.face[f] = u(rng);
    return b;
}

CauchyData random_cauchy(const RectLattice& lat, int row, std::mt19937_64& rng, double amp = 1.0) {
    std::uniform_real_distribution<double> u(-amp, amp);
    CauchyData c;
    c.row = row;
    for (int j = 0; j < lat.n_x(); ++j) {
        c.atom.push_back(u(rng));
        c.face.push_back(u(rng));
    }
    return c;
}

}  // namespace

TEST(Solver, ZeroBoundaryGivesZeroField) {
    const RectLattice lat(4, 4, 0.5, 0.7);
    const History sol = solve_dirichlet(lat, kPhi4, History(lat));
    EXPECT_EQ(sol.max_abs(), 0.0);
}

TEST(Solver, FreeFieldMatchesDenseSolve) {
    const RectLattice lat(3, 3, 0.5, 0.7);
    std::mt19937_64 rng(1);
    const History b = random_boundary(lat, rng, 1.0);
    const History newton = solve_dirichlet(lat, Potential::free(), b);
    const History dense = dense_free_solve(lat, b);
    EXPECT_LT((newton - dense).max_abs(), 1e-12);
    EXPECT_LE(j_residuals(lat, newton, Potential::free()).max_abs(), 1e-12);
}

TEST(Solver, WeakCouplingIsSecondOrderInLambda) {
    const RectLattice lat(4, 4, 0.5, 0.7);
    std::mt19937_64 rng(2);
    const History b = fixtures::smooth_boundary(lat, Potential::free(), rng, 0.5);
    const History phi0 = solve_dirichlet(lat, Potential::free(), b);
    // First-order correction: H0 phi1 = -d(gradient)/d(lambda) at phi0, boundary held.
    const Potential quartic({0, 0, 0, 0, 1.0});
    const Eigen::VectorXd g1 = action_gradient(lat, phi0, quartic) - action_gradient(lat, phi0, Potential::free());
    std::vector<int> free_idx;
    std::vector<char> fixed(phi0.dof_count(), 0);
    for (FaceId f : lat.boundary_faces()) fixed[static_cast<std::size_t>(lat.atom_count() + f)] = 1;
    for (int i = 0; i < static_cast<int>(fixed.size()); ++i)
        if (!fixed[i]) free_idx.push_back(i);
    const Eigen::MatrixXd H(action_hessian(lat, phi0, Potential::free()));
    Eigen::MatrixXd Hff(free_idx.size(), free_idx.size());
    Eigen::VectorXd rhs(free_idx.size());
    for (std::size_t i = 0; i < free_idx.size(); ++i) {
        rhs[i] = -g1[free_idx[i]];
        for (std::size_t j = 0; j < free_idx.size(); ++j) Hff(i, j) = H(free_idx[i], free_idx[j]);
    }
    const Eigen::VectorXd x = Hff.fullPivLu().solve(rhs);
    History phi1(lat);
    for (std::size_t i = 0; i < free_idx.size(); ++i) phi1.dof(static_cast<std::size_t>(free_idx[i])) = x[i];

    double prev = 0.0;
    for (double lambda : {2e-3, 1e-3}) {
        const History sol = solve_dirichlet(lat, Potential({0, 0, 0, 0, lambda}), b);
        const double err = (sol - phi0 - lambda * phi1).max_abs();
        if (prev > 0.0) {
            EXPECT_NEAR(prev / err, 4.0, 0.4);
        }
        prev = err;
        EXPECT_LT(err, 0.05 * lambda * phi1.max_abs());
    }
}

TEST(Solver, NonConvergenceCarriesResidual) {
    const RectLattice lat(4, 4, 0.5, 0.7);
    std::mt19937_64 rng(3);
    NewtonOptions opt;
    opt.max_iter = 0;
    try {
        solve_dirichlet(lat, kPhi4, random_boundary(lat, rng, 0.3), opt);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_GT(e.residual(), 1e-6);
    }
}

TEST(Solver, PhiFourNewtonConverges) {
    const RectLattice lat(12, 12, 0.5, 0.7);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 3; ++i) {
        const History sol = fixtures::random_solution(lat, kPhi4, rng);
        EXPECT_LE(j_residuals(lat, sol, kPhi4).max_abs(), 1e-12);
    }
}

TEST(Solver, EvolveConstantData) {
    const RectLattice lat(5, 4, 0.5, 0.7);
    CauchyData c;
    c.row = 2;
    c.atom.assign(4, 0.6);
    c.face.assign(4, 0.6);
    LateralData lateral{std::vector<double>(5, 0.6), std::vector<double>(5, 0.6)};
    const History h = evolve(lat, Potential::free(), c, lateral);
    EXPECT_LT((h - History(lat, 0.6)).max_abs(), 1e-15);
}

TEST(Solver, EvolveSatisfiesFieldEquations) {
    const RectLattice lat(8, 6, 0.5, 0.7);
    std::mt19937_64 rng(5);
    for (int row : {1, 4, 8}) {
        const CauchyData c = random_cauchy(lat, row, rng, 0.2);
        LateralData lateral = LateralData::zeros(lat);
        for (auto& v : lateral.left) v = 0.1;
        const History h = evolve(lat, kPhi4, c, lateral);
        EXPECT_LE(j_residuals(lat, h, kPhi4).max_abs(), 1e-12);
        const CauchyData back = read_cauchy(lat, h, row);
        EXPECT_EQ(back.atom, c.atom);
        EXPECT_EQ(back.face, c.face);
    }
}

TEST(Solver, EvolveMatchesDirichletSolve) {
    const RectLattice lat(10, 10, 0.5, 0.7);
    std::mt19937_64 rng(6);
    const CauchyData c = random_cauchy(lat, 5, rng);
    LateralData lateral = LateralData::zeros(lat);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& v : lateral.left) v = u(rng);
    for (auto& v : lateral.right) v = u(rng);
    const History ev = evolve(lat, Potential::free(), c, lateral);
    History b(lat);
    for (FaceId f : lat.boundary_faces()) b.face[f] = ev.face[f];
    const History dir = solve_dirichlet(lat, Potential::free(), b);
    EXPECT_LT((ev - dir).max_abs(), 1e-10);
}

TEST(Solver, EvolveRejectsIncompleteData) {
    const RectLattice lat(4, 4, 0.5, 0.7);
    CauchyData c;
    c.row = 2;
    c.atom.assign(3, 0.0);
    c.face.assign(3, 0.0);
    EXPECT_THROW(evolve(lat, Potential::free(), c, LateralData::zeros(lat)), DomainError);
    c.atom.assign(4, 0.0);
    c.face.assign(4, 0.0);
    EXPECT_THROW(evolve(lat, Potential::free(), c, LateralData{{0.0}, {0.0}}), DomainError);
    c.row = 0;
    EXPECT_THROW(evolve(lat, Potential::free(), c, LateralData::zeros(lat)), DomainError);
}

TEST(Solver, DiscreteCausality) {
    const RectLattice lat(6, 15, 0.5, 0.7);
    CauchyData c;
    c.row = 1;
    c.atom.assign(15, 0.0);
    c.face.assign(15, 0.0);
    c.atom[7] = 1.0;
    c.face[7] = 1.0;
    const History h = evolve(lat, Potential::free(), c, LateralData::zeros(lat));
    for (int t = 0; t < lat.n_t(); ++t) {
        int lo = lat.n_x(), hi = -1;
        for (int x = 0; x < lat.n_x(); ++x)
            if (h.atom[lat.atom(t, x)] != 0.0) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        // row 0 holds the seed; each further row widens the support by one column per side
        const int w = std::max(0, t - 1);
        EXPECT_EQ(lo, 7 - w) << "row " << t;
        EXPECT_EQ(hi, 7 + w) << "row " << t;
    }
}

TEST(Solver, LinearizationMatchesFiniteDifferences) {
    const RectLattice lat(4, 4, 0.5, 0.7);
    std::mt19937_64 rng(7);
    const History phi = fixtures::random_history(lat, rng, 0.5);
    const VerticalVector v = fixtures::random_vector(lat, rng);
    const auto op = linearize(lat, phi, kPhi4);
    const auto lin = op.apply(v);
    const double eps = 1e-6;
    const auto rp = j_residuals(lat, phi + eps * History(History::from_flat(lat, v.flat())), kPhi4);
    const auto rm = j_residuals(lat, phi - eps * History(History::from_flat(lat, v.flat())), kPhi4);
    for (std::size_t a = 0; a < rp.j0.size(); ++a) {
        const double fd = (rp.j0[a] - rm.j0[a]) / (2 * eps);
        EXPECT_NEAR(lin.j0[a], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
    for (std::size_t f = 0; f < rp.j1.size(); ++f) {
        const double fd = (rp.j1[f] - rm.j1[f]) / (2 * eps);
        EXPECT_NEAR(lin.j1[f], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Solver, FreeLinearizationIsFieldIndependent) {
    const RectLattice lat(3, 4, 0.5, 0.7);
    std::mt19937_64 rng(8);
    const auto a = linearize(lat, fixtures::random_history(lat, rng), Potential({0.0, 1.0, 0.3}));
    const auto b = linearize(lat, fixtures::random_history(lat, rng), Potential({0.0, 1.0, 0.3}));
    EXPECT_EQ(Eigen::MatrixXd(a.hessian()), Eigen::MatrixXd(b.hessian()));
}

TEST(Solver, FirstVariationZeroData) {
    const RectLattice lat(5, 5, 0.5, 0.7);
    std::mt19937_64 rng(9);
    const History phi = fixtures::random_solution(lat, kPhi4, rng);
    CauchyData c;
    c.row = 3;
    c.atom.assign(5, 0.0);
    c.face.assign(5, 0.0);
    EXPECT_EQ(first_variation(lat, kPhi4, phi, c).max_abs(), 0.0);
}

TEST(Solver, FirstVariationIsInKernel) {
    const RectLattice lat(8, 8, 0.5, 0.7);
    std::mt19937_64 rng(10);
    const History phi = fixtures::random_solution(lat, kPhi4, rng);
    const auto op = linearize(lat, phi, kPhi4);
    for (int row = 1; row <= lat.n_t(); ++row) {
        const auto v = first_variation(lat, kPhi4, phi, random_cauchy(lat, row, rng));
        EXPECT_LE(op.apply(v).max_abs(), 1e-11);
    }
}

TEST(Solver, FirstVariationFromDeltaIsFundamentalSolution) {
    const RectLattice lat(6, 9, 0.5, 0.7);
    const History phi(lat);
    CauchyData c;
    c.row = 3;
    c.atom.assign(9, 0.0);
    c.face.assign(9, 0.0);
    c.face[4] = 1.0;
    const auto v = first_variation(lat, Potential::free(), phi, c);
    EXPECT_LE(linearize(lat, phi, Potential::free()).apply(v).max_abs(), 1e-12);
    EXPECT_GT(v.max_abs(), 0.5);
}

TEST(Solver, FirstVariationExtensionIsUnique) {
    const RectLattice lat(6, 6, 0.5, 0.7);
    std::mt19937_64 rng(11);
    const History phi = fixtures::random_solution(lat, kPhi4, rng);
    const auto v = first_variation(lat, kPhi4, phi, random_cauchy(lat, 2, rng));
    // Extend the same boundary data by a linear Dirichlet solve instead of the march.
    VerticalVector b(lat);
    for (FaceId f : lat.boundary_faces()) b.face[f] = v.face[f];
    const auto w = first_variation_dirichlet(lat, kPhi4, phi, b);
    EXPECT_LT((v - w).max_abs(), 1e-10);
}

TEST(Solver, FirstVariationSurfaceForm) {
    const RectLattice lat(5, 5, 0.5, 0.7);
    std::mt19937_64 rng(12);
    const History phi = fixtures::random_solution(lat, kPhi4, rng);
    const auto v = first_variation(lat, kPhi4, phi, random_cauchy(lat, 3, rng));
    for (bool future : {true, false}) {
        const auto sigma = horizontal_cut(lat, 3, future);
        const auto w = first_variation(lat, kPhi4, phi, sigma, surface_coordinates(sigma, v));
        EXPECT_LT((v - w).max_abs(), 1e-11);
    }
    const auto box = boundary(lat, rect_region(lat, 1, 3, 1, 3));
    EXPECT_THROW(first_variation(lat, kPhi4, phi, box, Eigen::VectorXd::Zero(16)), DomainError);
}

TEST(Solver, FirstVariationRequiresSolution) {
    const RectLattice lat(4, 4, 0.5, 0.7);
    std::mt19937_64 rng(13);
    EXPECT_THROW(first_variation(lat, kPhi4, fixtures::random_history(lat, rng), random_cauchy(lat, 2, rng)),
                 PreconditionError);
}

TEST(Solver, PresymplecticMatrixOnUnitCut) {
    const RectLattice lat(3, 4, 1, 1);
    const History phi(lat);
    const auto pm = presymplectic_matrix(lat, horizontal_cut(lat, 2), phi);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(8, 8);
    for (int f = 0; f < 4; ++f) {
        expected(2 * f, 2 * f + 1) = 2.0;
        expected(2 * f + 1, 2 * f) = -2.0;
    }
    EXPECT_EQ(pm.matrix, expected);
    EXPECT_EQ(pm.null_basis.cols(), 0);
    // The reversed cut reads the atoms above; on first variations the gluing
    // relation v_above = 2 v_face - v_below maps its coordinates to ours.
    const auto rev = presymplectic_matrix(lat, horizontal_cut(lat, 2, false), phi);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(8, 8);
    for (int f = 0; f < 4; ++f) {
        T(2 * f, 2 * f) = -1.0;
        T(2 * f, 2 * f + 1) = 2.0;
        T(2 * f + 1, 2 * f + 1) = 1.0;
    }
    EXPECT_EQ(T.transpose() * rev.matrix * T, -expected);
    EXPECT_LT((pm.matrix + pm.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Solver, PresymplecticPairingMatchesDirectSum) {
    const RectLattice lat(6, 6, 0.5, 0.7);
    std::mt19937_64 rng(14);
    const History phi = fixtures::random_solution(lat, kPhi4, rng);
    const auto sigma = add_boundary(lat, horizontal_cut(lat, 2), rect_region(lat, 2, 4, 1, 4));
    const auto pm = presymplectic_matrix(lat, sigma, phi);
    for (int trial = 0; trial < 10; ++trial) {
        const auto v = fixtures::random_vector(lat, rng);
        const auto w = fixtures::random_vector(lat, rng);
        double direct = 0.0;
        for (const auto& of : sigma.faces) {
            const double c = lat.ms_coefficient_of(of.face);
            direct += c * (v.atom[of.side] * w.face[of.face] - v.face[of.face] * w.atom[of.side]);
        }
        const double mat = surface_coordinates(sigma, v).dot(pm.matrix * surface_coordinates(sigma, w));
        EXPECT_NEAR(mat, direct, 1e-12 * std::max(1.0, std::abs(direct)));
        EXPECT_NEAR(omega(lat, sigma, v, w).value, direct, 1e-12 * std::max(1.0, std::abs(direct)));
    }
}

TEST(Solver, MultisymplecticFormula) {
    const RectLattice lat(6, 6, 0.5, 0.7);
    std::mt19937_64 rng(15);
    const History phi = fixtures::random_solution(lat, kPhi4, rng);
    const auto v = fixtures::random_variation(lat, kPhi4, phi, rng);
    const auto w = fixtures::random_variation(lat, kPhi4, phi, rng);
    for (const auto& r : all_rect_regions(lat)) {
        const auto p = omega(lat, boundary(lat, r), v, w);
        EXPECT_LE(std::abs(p.value), 1e-8 * p.scale);
    }
}

TEST(Solver, ThinFormulaAndSurfaceIndependence) {
    const RectLattice lat(6, 6, 0.5, 0.7);
    std::mt19937_64 rng(16);
    const History phi = fixtures::random_solution(lat, kPhi4, rng);
    const auto v = fixtures::random_variation(lat, kPhi4, phi, rng);
    const auto w = fixtures::random_variation(lat, kPhi4, phi, rng);
    const auto cut = horizontal_cut(lat, 2);
    const auto deformed = add_boundary(lat, cut, rect_region(lat, 2, 5, 1, 4));
    EXPECT_LE(std::abs(omega(lat, cut, v, w).value + omega(lat, reverse(lat, cut), v, w).value), 1e-13);
    EXPECT_LE(std::abs(omega(lat, deformed, v, w).value + omega(lat, reverse(lat, deformed), v, w).value), 1e-13);
    const auto a = omega(lat, cut, v, w);
    const auto b = omega(lat, deformed, v, w);
    EXPECT_LE(std::abs(a.value - b.value), 1e-8 * std::max(a.scale, b.scale));
    for (int row = 1; row <= lat.n_t(); ++row) {
        const auto c = omega(lat, horizontal_cut(lat, row), v, w);
        EXPECT_LE(std::abs(a.value - c.value), 1e-8 * std::max(a.scale, c.scale));
    }
}
