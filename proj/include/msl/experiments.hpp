#pragma once

// Verification experiments behind the command-line runner. Each experiment
// measures one structural property on a configured lattice and reports the
// largest residual found, plus per-surface or per-region rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msl/coarse.hpp"
#include "msl/currents.hpp"
#include "msl/dynamics.hpp"
#include "msl/errors.hpp"
#include "msl/lattice.hpp"
#include "msl/potential.hpp"
#include "msl/solver.hpp"
#include "msl/weakoc.hpp"

namespace msl::experiments {

inline std::string report_schema_version() { return "1"; }

struct LatticeSpec {
    int n_t = 8;
    int n_x = 8;
    double h = 0.5;
    double k = 0.7;
};

enum class DataKind { Constant, Random, Explicit };
enum class DataMethod { Dirichlet, Evolve };

/// How the solutions an experiment runs on are produced. Dirichlet data are
/// boundary face values (random: boundary of a field evolved from random
/// Cauchy and lateral data); evolve data are Cauchy data on row n_t/2 + 1.
struct DataSpec {
    DataKind kind = DataKind::Random;
    DataMethod method = DataMethod::Dirichlet;
    double value = 0.0;
    double amplitude = 0.1;
    int count = 3;
    std::vector<std::vector<double>> values;
    double perturbation = 0.0;  ///< added to interior face values after solving
};

struct ExperimentConfig {
    LatticeSpec lattice;
    std::vector<double> potential;  ///< coefficients of N(phi) = sum c_n phi^n
    DataSpec data;
    std::vector<std::string> experiments;
    std::map<std::string, double> tolerances;
    std::uint64_t seed = 1;
    std::string coarse_current = "noether";
};

struct Row {
    std::string id;
    double value = 0.0;
    double residual = 0.0;
};

struct ExperimentResult {
    std::string name;
    std::string paper_tag;
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
    std::vector<Row> rows;
};

struct Setup {
    RectLattice lattice;
    Potential potential;
    std::vector<History> solutions;
    std::uint64_t seed;
    double amplitude;
};

struct ExperimentInfo {
    std::string name;
    std::string paper_tag;
    double default_tolerance;
};

inline const std::vector<ExperimentInfo>& catalogue() {
    static const std::vector<ExperimentInfo> list{
        {"multisymplectic_check", "multisymplectic formula", 1e-8},
        {"noether", "Noether current conservation", 1e-10},
        {"oc_conditions", "observable current conditions (i)-(iii)", 1e-10},
        {"bracket_identities", "Poisson bracket: Jacobi and Leibniz identities", 1e-10},
        {"weak_construction", "weak observable currents", 1e-7},
        {"localized_measurement", "localized measurement", 1e-7},
        {"separation", "separability of first variations", 1e-8},
        {"coarse_transfer", "coarse-grained observable current transfer", 1e-6},
    };
    return list;
}

inline const ExperimentInfo* find_experiment(const std::string& name) {
    for (const auto& e : catalogue())
        if (e.name == name) return &e;
    return nullptr;
}

namespace detail {

inline double uniform(std::mt19937_64& rng, double amp) { return std::uniform_real_distribution<double>(-amp, amp)(rng); }

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double amp = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(rng, amp);
    return v;
}

inline std::string region_id(int t0, int t1, int x0, int x1) {
    std::ostringstream s;
    s << "U[" << t0 << "," << t1 << ")x[" << x0 << "," << x1 << ")";
    return s.str();
}

inline std::string cut_id(int row, bool future = true) {
    return (future ? "cut+" : "cut-") + std::to_string(row);
}

/// Random first variation from Cauchy data on a random row.
inline VerticalVector random_variation(const RectLattice& lat, const Potential& pot, const History& phi,
                                       std::mt19937_64& rng) {
    const int row = std::uniform_int_distribution<int>(1, lat.n_t())(rng);
    return first_variation(lat, pot, phi, CauchyData::from_vector(row, random_vector(2 * lat.n_x(), rng)));
}

inline CauchyFamily family_through(const Setup& s, const History& phi0) {
    return CauchyFamily(s.lattice, s.potential, std::max(1, s.lattice.n_t() / 2), read_lateral(s.lattice, phi0));
}

inline Eigen::VectorXd near(const CauchyFamily& fam, const Eigen::VectorXd& z0, std::mt19937_64& rng, double amp) {
    return z0 + random_vector(fam.dim(), rng, amp);
}

/// Random per-face polynomial currents of degree 3, different on time and space faces.
inline LocalPoly random_poly(std::mt19937_64& rng, int degree = 3) {
    LocalPoly p;
    for (int i = 0; i <= degree; ++i)
        for (int j = 0; i + j <= degree; ++j) p += LocalPoly::monomial(uniform(rng, 1.0), i, j);
    return p;
}

inline HamiltonianCurrent random_current(std::mt19937_64& rng) {
    const LocalPoly pt = random_poly(rng), px = random_poly(rng);
    return HamiltonianCurrent::from_current(Current([pt, px](const RectLattice& lat, const OrientedFace& of) {
        return lat.axis(of.face) == Axis::Time ? pt : px;
    }));
}

inline JetSample random_jet(const RectLattice& lat, std::mt19937_64& rng) {
    const FaceId f = std::uniform_int_distribution<int>(0, lat.face_count() - 1)(rng);
    const AtomId side = lat.lower(f) ? *lat.lower(f) : *lat.upper(f);
    return {orient(lat, f, side), uniform(rng, 1.0), uniform(rng, 1.0)};
}

/// Linear Hamiltonian generator M^{-1} S on the family cut, S symmetric.
inline Eigen::MatrixXd hamiltonian_generator(const CauchyFamily& fam, std::mt19937_64& rng) {
    const Eigen::MatrixXd M = presymplectic_matrix(fam.lattice(), fam.cut(), History(fam.lattice())).matrix;
    Eigen::MatrixXd S(M.rows(), M.cols());
    for (Eigen::Index i = 0; i < S.cols(); ++i) S.col(i) = random_vector(static_cast<int>(S.rows()), rng);
    S = (S + S.transpose()).eval();
    return M.fullPivLu().solve(S);
}

inline ExperimentResult start(const std::string& name, double tol) {
    ExperimentResult r;
    r.name = name;
    r.paper_tag = find_experiment(name)->paper_tag;
    r.tolerance = tol;
    return r;
}

inline void finish(ExperimentResult& r) { r.pass = std::isfinite(r.max_residual) && r.max_residual <= r.tolerance; }

inline void track(ExperimentResult& r, const std::string& id, double value, double residual) {
    r.rows.push_back({id, value, residual});
    r.max_residual = std::max(r.max_residual, residual);
}

}  // namespace detail

/// Solutions described by the data spec, with the optional perturbation.
inline std::vector<History> make_solutions(const RectLattice& lat, const Potential& pot, const DataSpec& d,
                                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int row = lat.n_t() / 2 + 1;
    const std::size_t n = d.kind == DataKind::Explicit ? d.values.size() : static_cast<std::size_t>(d.count);
    std::vector<History> out;
    for (std::size_t s = 0; s < n; ++s) {
        History phi;
        if (d.method == DataMethod::Evolve) {
            Eigen::VectorXd z(2 * lat.n_x());
            LateralData lateral = LateralData::zeros(lat);
            if (d.kind == DataKind::Constant) {
                z.setConstant(d.value);
                std::fill(lateral.left.begin(), lateral.left.end(), d.value);
                std::fill(lateral.right.begin(), lateral.right.end(), d.value);
            } else if (d.kind == DataKind::Random) {
                z = detail::random_vector(static_cast<int>(z.size()), rng, d.amplitude);
            } else {
                if (d.values[s].size() != static_cast<std::size_t>(z.size()))
                    throw DomainError("explicit Cauchy data needs 2 n_x values");
                z = Eigen::Map<const Eigen::VectorXd>(d.values[s].data(), z.size());
            }
            phi = evolve(lat, pot, CauchyData::from_vector(row, z), lateral);
        } else {
            History b(lat);
            const auto faces = lat.boundary_faces();
            if (d.kind == DataKind::Constant) {
                for (FaceId f : faces) b.face[f] = d.value;
            } else if (d.kind == DataKind::Random) {
                LateralData lateral = LateralData::zeros(lat);
                for (auto& v : lateral.left) v = detail::uniform(rng, d.amplitude);
                for (auto& v : lateral.right) v = detail::uniform(rng, d.amplitude);
                const Eigen::VectorXd z = detail::random_vector(2 * lat.n_x(), rng, d.amplitude);
                const History ev = evolve(lat, pot, CauchyData::from_vector(row, z), lateral);
                for (FaceId f : faces) b.face[f] = ev.face[f];
            } else {
                if (d.values[s].size() != faces.size())
                    throw DomainError("explicit boundary data needs one value per boundary face");
                for (std::size_t i = 0; i < faces.size(); ++i) b.face[faces[i]] = d.values[s][i];
            }
            phi = solve_dirichlet(lat, pot, b);
        }
        if (d.perturbation != 0.0)
            for (FaceId f : lat.interior_faces()) phi.face[f] += detail::uniform(rng, d.perturbation);
        out.push_back(std::move(phi));
    }
    return out;
}

/// max |omega_{boundary U}(v, w)| / sum |terms| over all rectangular regions and
/// pairs of first variations.
inline ExperimentResult multisymplectic_check(const Setup& s, double tol, int pairs = 2) {
    ExperimentResult r = detail::start("multisymplectic_check", tol);
    std::mt19937_64 rng(s.seed);
    const auto& lat = s.lattice;
    std::map<std::string, Row> worst;
    for (const History& phi : s.solutions) {
        for (int p = 0; p < pairs; ++p) {
            const VerticalVector v = detail::random_variation(lat, s.potential, phi, rng);
            const VerticalVector w = detail::random_variation(lat, s.potential, phi, rng);
            for (int t0 = 0; t0 < lat.n_t(); ++t0)
                for (int t1 = t0 + 1; t1 <= lat.n_t(); ++t1)
                    for (int x0 = 0; x0 < lat.n_x(); ++x0)
                        for (int x1 = x0 + 1; x1 <= lat.n_x(); ++x1) {
                            const auto pr = omega(lat, boundary(lat, rect_region(lat, t0, t1, x0, x1)), v, w);
                            const double rel = pr.scale > 0.0 ? std::abs(pr.value) / pr.scale : 0.0;
                            Row& row = worst[detail::region_id(t0, t1, x0, x1)];
                            if (rel >= row.residual) row = {detail::region_id(t0, t1, x0, x1), pr.value, rel};
                        }
        }
    }
    for (auto& [id, row] : worst) detail::track(r, id, row.value, row.residual);
    detail::finish(r);
    return r;
}

/// Boundary sums of the shift Noether current over every rectangular region.
inline ExperimentResult noether_check(const Setup& s, double tol) {
    ExperimentResult r = detail::start("noether", tol);
    const auto& lat = s.lattice;
    const Current n = noether(1.0, s.potential).current();
    std::map<std::string, Row> worst;
    for (const History& phi : s.solutions)
        for (int t0 = 0; t0 < lat.n_t(); ++t0)
            for (int t1 = t0 + 1; t1 <= lat.n_t(); ++t1)
                for (int x0 = 0; x0 < lat.n_x(); ++x0)
                    for (int x1 = x0 + 1; x1 <= lat.n_x(); ++x1) {
                        const double v = integrate(lat, n, boundary(lat, rect_region(lat, t0, t1, x0, x1)), phi);
                        Row& row = worst[detail::region_id(t0, t1, x0, x1)];
                        if (std::abs(v) >= row.residual) row = {detail::region_id(t0, t1, x0, x1), v, std::abs(v)};
                    }
    for (auto& [id, row] : worst) detail::track(r, id, row.value, row.residual);
    detail::finish(r);
    return r;
}

/// Conditions (i)-(iii) for the Noether current (shift-symmetric potentials)
/// and for symplectic products of random first variations.
inline ExperimentResult oc_conditions(const Setup& s, double tol) {
    ExperimentResult r = detail::start("oc_conditions", tol);
    std::mt19937_64 rng(s.seed);
    const auto& lat = s.lattice;
    auto add = [&](const std::string& name, const OcReport& rep) {
        detail::track(r, name + ":antisymmetry", rep.max_antisymmetry, rep.max_antisymmetry);
        detail::track(r, name + ":closedness", rep.max_closedness, rep.max_closedness);
        detail::track(r, name + ":null_directions", rep.max_null, rep.max_null);
    };
    if (s.potential.shift_symmetric())
        add("noether", check_oc_conditions(lat, noether(1.0, s.potential).current(), s.solutions, tol));
    else
        r.note = "potential is not shift symmetric; Noether current skipped";
    for (std::size_t i = 0; i < s.solutions.size(); ++i) {
        const History& phi = s.solutions[i];
        const auto v = detail::random_variation(lat, s.potential, phi, rng);
        const auto w = detail::random_variation(lat, s.potential, phi, rng);
        add("symplectic_product#" + std::to_string(i),
            check_oc_conditions(lat, symplectic_product(lat, s.potential, phi, v, w), {phi}, tol));
    }
    detail::finish(r);
    return r;
}

/// Jacobi and Leibniz identities on random Hamiltonian current triples, and
/// the bracket vector field against a finite-difference commutator.
inline ExperimentResult bracket_identities(const Setup& s, double tol, int triples = 100) {
    ExperimentResult r = detail::start("bracket_identities", tol);
    std::mt19937_64 rng(s.seed);
    const auto& lat = s.lattice;
    double jacobi = 0.0, leibniz = 0.0, commut = 0.0;
    const double eps = 1e-5;
    for (int i = 0; i < triples; ++i) {
        const auto F = detail::random_current(rng), G = detail::random_current(rng), H = detail::random_current(rng);
        const JetSample j = detail::random_jet(lat, rng);
        const double jac = poisson_bracket(poisson_bracket(F, G), H).current().evaluate(lat, j) +
                           poisson_bracket(poisson_bracket(H, F), G).current().evaluate(lat, j) +
                           poisson_bracket(poisson_bracket(G, H), F).current().evaluate(lat, j);
        const auto GH = HamiltonianCurrent::from_current(product(G.current(), H.current()));
        const double lei = poisson_bracket(F, GH).current().evaluate(lat, j) -
                           (product(poisson_bracket(F, G).current(), H.current()) +
                            product(G.current(), poisson_bracket(F, H).current()))
                               .evaluate(lat, j);
        jacobi = std::max(jacobi, std::abs(jac));
        leibniz = std::max(leibniz, std::abs(lei));

        auto field = [&](const HamiltonianCurrent& h, double da, double df) {
            JetSample t = j;
            t.phi_atom += da;
            t.phi_face += df;
            return h.vf_at(lat, t);
        };
        auto directional = [&](const HamiltonianCurrent& h, std::pair<double, double> d) {
            const auto p = field(h, eps * d.first, eps * d.second);
            const auto m = field(h, -eps * d.first, -eps * d.second);
            return std::pair<double, double>{(p.first - m.first) / (2 * eps), (p.second - m.second) / (2 * eps)};
        };
        const auto v = F.vf_at(lat, j), w = G.vf_at(lat, j);
        const auto dw_v = directional(G, v), dv_w = directional(F, w);
        const auto got = poisson_bracket(F, G).vf_at(lat, j);
        commut = std::max({commut, std::abs(got.first - (dv_w.first - dw_v.first)) / std::max(1.0, std::abs(got.first)),
                           std::abs(got.second - (dv_w.second - dw_v.second)) / std::max(1.0, std::abs(got.second))});
    }
    detail::track(r, "jacobi", jacobi, jacobi);
    detail::track(r, "leibniz", leibniz, leibniz);
    r.rows.push_back({"commutator_fd", commut, commut});
    detail::finish(r);
    if (commut > 1e-5) {
        r.pass = false;
        r.note = "bracket vector field differs from the finite-difference commutator by more than 1e-5";
    }
    return r;
}

/// Path independence over two homotopies, homology invariance over every
/// horizontal cut and its reverse, and agreement of the commutator weak
/// current with its local improvement.
inline ExperimentResult weak_construction(const Setup& s, double tol) {
    ExperimentResult r = detail::start("weak_construction", tol);
    std::mt19937_64 rng(s.seed);
    const auto& lat = s.lattice;
    const History& phi0 = s.solutions.front();
    const auto fam = detail::family_through(s, phi0);
    const Eigen::VectorXd z0 = fam.coordinates(phi0);
    const auto w = construct_weak(fam, fixed_data_rule(fam, fam.cut(), detail::random_vector(fam.dim(), rng)), 0.5,
                                  phi0, fam.cut());
    const auto x = linear_rule(fam, detail::hamiltonian_generator(fam, rng));
    const auto y = linear_rule(fam, detail::hamiltonian_generator(fam, rng));
    const auto imp = improve_to_local(fam, x, y, 0.3, phi0, fam.cut());
    const auto wc = construct_weak(fam, commutator_rule(fam, x, y), 0.3, phi0, fam.cut());
    for (int n = 0; n < 2; ++n) {
        const History phi = fam.solution(detail::near(fam, z0, rng, s.amplitude));
        const double ref = evaluate_weak(w, fam.cut(), phi);
        const double bent1 = evaluate_weak(w, fam.cut(), phi, {{detail::near(fam, z0, rng, s.amplitude)}});
        const double bent2 = evaluate_weak(
            w, fam.cut(), phi,
            {{detail::near(fam, z0, rng, s.amplitude), detail::near(fam, z0, rng, s.amplitude)}});
        detail::track(r, "path#" + std::to_string(n), bent1, std::abs(bent1 - ref));
        detail::track(r, "path2#" + std::to_string(n), bent2, std::abs(bent2 - ref));
        for (int row = 1; row <= lat.n_t(); ++row) {
            const double v = evaluate_weak(w, horizontal_cut(lat, row), phi);
            detail::track(r, detail::cut_id(row), v, std::abs(v - ref));
            const double rv = evaluate_weak(w, horizontal_cut(lat, row - 1, false), phi);
            detail::track(r, detail::cut_id(row - 1, false), rv, std::abs(rv + ref));
        }
        for (int row : {fam.row(), lat.n_t()}) {
            const double a = evaluate_weak(wc, horizontal_cut(lat, row), phi);
            const double b = imp.integrate(horizontal_cut(lat, row), phi);
            detail::track(r, "improvement:" + detail::cut_id(row), a, std::abs(a - b));
        }
    }
    detail::finish(r);
    return r;
}

/// Two measurements seeded on disjoint faces of a cut commute, and each is
/// recovered on every later cut.
inline ExperimentResult localized_measurement_check(const Setup& s, double tol) {
    ExperimentResult r = detail::start("localized_measurement", tol);
    std::mt19937_64 rng(s.seed);
    const auto& lat = s.lattice;
    const History& phi0 = s.solutions.front();
    const auto fam = detail::family_through(s, phi0);
    const Eigen::VectorXd z0 = fam.coordinates(phi0);
    const int row = fam.row();
    const Current quad([](const RectLattice&, const OrientedFace&) {
        return LocalPoly::face() * LocalPoly::face() + LocalPoly::atom();
    });
    const Current value([](const RectLattice&, const OrientedFace&) { return LocalPoly::face(); });
    const auto a = localized_measurement(fam, SeedCochain{{lat.time_face(row, 0)}, quad}, fam.cut(), phi0);
    const auto b = localized_measurement(fam, SeedCochain{{lat.time_face(row, lat.n_x() - 1)}, value}, fam.cut(), phi0);
    for (int n = 0; n < 2; ++n) {
        const History phi = fam.solution(detail::near(fam, z0, rng, s.amplitude));
        const double br = weak_bracket(a.current, b.current, fam.cut(), phi);
        detail::track(r, "bracket#" + std::to_string(n), br, std::abs(br));
        const double early = evaluate_weak(a.current, fam.cut(), phi);
        for (int later = row + 1; later <= lat.n_t(); ++later) {
            const double v = evaluate_weak(a.current, horizontal_cut(lat, later), phi);
            detail::track(r, detail::cut_id(later), v, std::abs(v - early));
        }
    }
    detail::finish(r);
    return r;
}

/// For every cut and every coordinate basis vector of first-variation data,
/// a witness with omega(v, w) = 1 and normalized pairing at least 1e-6.
inline ExperimentResult separation_check(const Setup& s, double tol) {
    ExperimentResult r = detail::start("separation", tol);
    const auto& lat = s.lattice;
    const int n = 2 * lat.n_x();
    for (const History& phi : s.solutions)
        for (int row = 1; row <= lat.n_t(); ++row) {
            const auto sigma = horizontal_cut(lat, row);
            double worst = 0.0, smallest = 1.0;
            for (int b = 0; b < n; ++b) {
                const auto w = first_variation(lat, s.potential, phi, sigma, Eigen::VectorXd::Unit(n, b));
                const auto wit = separation_witness(lat, s.potential, phi, w, sigma);
                worst = std::max(worst, std::abs(wit.pairing - 1.0));
                smallest = std::min(smallest, wit.normalized);
            }
            detail::track(r, detail::cut_id(row), smallest, worst);
        }
    detail::finish(r);
    return r;
}

inline Current named_coarse_current(const std::string& name, const Potential& pot) {
    if (name == "noether") return noether(1.0, pot).current();
    if (name == "flux") return flux_cochain(1.0);
    if (name == "zero") return Current{};
    throw DomainError("unknown coarse current '" + name + "'");
}

/// The configured lattice is the coarse one. Checks that decimated corrected
/// solutions are critical for the corrected action, then transfers the
/// named coarse current and compares the fine weak current with the coarse
/// charge of decimated fine solutions on several fine cuts.
inline ExperimentResult coarse_transfer(const Setup& s, double tol, const std::string& current_name) {
    ExperimentResult r = detail::start("coarse_transfer", tol);
    std::mt19937_64 rng(s.seed);
    const RefinementMap map(s.lattice);
    const CorrectedAction ca(map, s.potential);
    for (int n = 0; n < 2; ++n) {
        History c(map.coarse());
        for (FaceId f : map.coarse().boundary_faces()) c.face[f] = detail::uniform(rng, s.amplitude);
        const History d = map.decimate(corrected_dirichlet(ca, c));
        const double g = ca.interior_gradient(d).cwiseAbs().maxCoeff();
        detail::track(r, "critical#" + std::to_string(n), g, g);
    }
    const Current current = named_coarse_current(current_name, s.potential);
    const auto sigma = horizontal_cut(map.coarse(), std::max(1, map.coarse().n_t() / 2));
    const OrientedSurface fine_sigma = map.anchor_surface(sigma);
    CauchyFamily fam(map.fine(), s.potential, as_horizontal_cut(map.fine(), fine_sigma)->row);
    const History phi0 = fam.solution(detail::random_vector(fam.dim(), rng, s.amplitude));
    TransferOptions opt;
    opt.seed = s.seed;
    opt.tolerance = tol;
    try {
        const auto t = transfer_coarse_oc(ca, current, sigma, phi0, opt);
        for (int n = 0; n < 2; ++n) {
            const History phi = fam.solution(detail::random_vector(fam.dim(), rng, s.amplitude));
            const double coarse_charge = t.pulled_back(phi);
            for (int row = 1; row <= map.fine().n_t(); ++row) {
                const double v = evaluate_weak(t.weak, horizontal_cut(map.fine(), row), phi);
                detail::track(r, "fine:" + detail::cut_id(row), v, std::abs(v - coarse_charge));
            }
        }
    } catch (const PreconditionError& e) {
        r.note = e.what();
        r.max_residual = std::max(r.max_residual, 1.0);
        r.rows.push_back({"precondition", 0.0, 1.0});
    }
    detail::finish(r);
    return r;
}

/// Throws DomainError on an invalid configuration.
inline void validate(const ExperimentConfig& c) {
    if (c.lattice.n_t < 2 || c.lattice.n_x < 2) throw DomainError("lattice needs n_t, n_x >= 2");
    if (!(c.lattice.h > 0.0) || !(c.lattice.k > 0.0)) throw DomainError("lattice spacings must be positive");
    if (c.experiments.empty()) throw DomainError("experiment list is empty");
    for (const auto& name : c.experiments)
        if (!find_experiment(name)) throw DomainError("unknown experiment '" + name + "'");
    for (const auto& [name, tol] : c.tolerances) {
        if (!find_experiment(name)) throw DomainError("tolerance given for unknown experiment '" + name + "'");
        if (!(tol > 0.0)) throw DomainError("tolerance for '" + name + "' must be positive");
    }
    if (c.data.kind != DataKind::Explicit && c.data.count < 1) throw DomainError("data count must be positive");
    if (c.data.kind == DataKind::Explicit && c.data.values.empty()) throw DomainError("explicit data list is empty");
    if (!(c.data.amplitude >= 0.0)) throw DomainError("data amplitude must be non-negative");
    named_coarse_current(c.coarse_current, Potential::free());
}

/// Runs one experiment. Library errors (a history that is not a solution, a
/// failed solve, a missing symmetry) fail the experiment with the message as
/// note and the field-equation residual of the inputs as residual.
inline ExperimentResult run_experiment(const std::string& name, const Setup& s, double tol,
                                       const std::string& coarse_current = "noether") {
    const ExperimentInfo* info = find_experiment(name);
    if (!info) throw DomainError("unknown experiment '" + name + "'");
    try {
        if (name == "multisymplectic_check") return multisymplectic_check(s, tol);
        if (name == "noether") return noether_check(s, tol);
        if (name == "oc_conditions") return oc_conditions(s, tol);
        if (name == "bracket_identities") return bracket_identities(s, tol);
        if (name == "weak_construction") return weak_construction(s, tol);
        if (name == "localized_measurement") return localized_measurement_check(s, tol);
        if (name == "separation") return separation_check(s, tol);
        return coarse_transfer(s, tol, coarse_current);
    } catch (const std::exception& e) {
        ExperimentResult r = detail::start(name, tol);
        r.note = e.what();
        for (std::size_t i = 0; i < s.solutions.size(); ++i) {
            const double j = j_residuals(s.lattice, s.solutions[i], s.potential).max_abs();
            r.rows.push_back({"solution#" + std::to_string(i), j, j});
            r.max_residual = std::max(r.max_residual, j);
        }
        return r;
    }
}

inline std::vector<ExperimentResult> run(const ExperimentConfig& c) {
    validate(c);
    const RectLattice lat(c.lattice.n_t, c.lattice.n_x, c.lattice.h, c.lattice.k);
    const Potential pot(c.potential);
    const bool coarse_only = std::all_of(c.experiments.begin(), c.experiments.end(),
                                         [](const std::string& n) { return n == "coarse_transfer"; });
    Setup s{lat, pot, coarse_only ? std::vector<History>{} : make_solutions(lat, pot, c.data, c.seed), c.seed,
            c.data.amplitude};
    std::vector<ExperimentResult> out;
    for (const auto& name : c.experiments) {
        const auto it = c.tolerances.find(name);
        const double tol = it != c.tolerances.end() ? it->second : find_experiment(name)->default_tolerance;
        out.push_back(run_experiment(name, s, tol, c.coarse_current));
    }
    return out;
}

}  // namespace msl::experiments
