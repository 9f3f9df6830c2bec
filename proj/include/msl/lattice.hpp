#pragma once

// Rectangular cell complex in 1+1 dimensions: atoms (2-cells), faces
// (1-cells), oriented faces with side selection, signed 1-chains and the
// homology bookkeeping used to compare codimension-one surfaces.

#include <algorithm>
#include <array>
#include <cstdlib>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "msl/errors.hpp"

namespace msl {

using AtomId = int;
using FaceId = int;

/// Direction of a face's normal. Time faces separate atoms stacked in time
/// (the 0± faces of an atom), space faces separate spatial neighbours (1±).
enum class Axis { Time, Space };

/// Position of a face relative to an atom: 0+, 0-, 1+, 1-.
enum class Slot { TimePlus, TimeMinus, SpacePlus, SpaceMinus };

inline constexpr std::array<Slot, 4> kSlots{Slot::TimePlus, Slot::TimeMinus, Slot::SpacePlus,
                                             Slot::SpaceMinus};

inline Axis axis_of(Slot s) {
    return (s == Slot::TimePlus || s == Slot::TimeMinus) ? Axis::Time : Axis::Space;
}

inline const char* slot_name(Slot s) {
    switch (s) {
        case Slot::TimePlus: return "0+";
        case Slot::TimeMinus: return "0-";
        case Slot::SpacePlus: return "1+";
        case Slot::SpaceMinus: return "1-";
    }
    return "?";
}

struct AtomIndex {
    int t;
    int x;
};

/// Finite n_t x n_x grid of rectangles with boundary. `h` is the distance
/// from an atom centre to its 0± faces, `k` the distance to its 1± faces.
///
/// Face numbering: time faces T(i, j), i in [0, n_t], j in [0, n_x), come
/// first with id i*n_x + j; T(i, j) lies between atoms (i-1, j) and (i, j).
/// Space faces S(i, j), i in [0, n_t), j in [0, n_x], follow; S(i, j) lies
/// between atoms (i, j-1) and (i, j).
class RectLattice {
public:
    RectLattice(int n_t, int n_x, double h, double k) : n_t_(n_t), n_x_(n_x), h_(h), k_(k) {
        if (n_t < 2 || n_x < 2) throw DomainError("lattice needs n_t >= 2 and n_x >= 2");
        if (!(h > 0.0) || !(k > 0.0)) throw DomainError("lattice spacings must be positive");
    }

    int n_t() const { return n_t_; }
    int n_x() const { return n_x_; }
    double h() const { return h_; }
    double k() const { return k_; }

    int atom_count() const { return n_t_ * n_x_; }
    int time_face_count() const { return (n_t_ + 1) * n_x_; }
    int space_face_count() const { return n_t_ * (n_x_ + 1); }
    int face_count() const { return time_face_count() + space_face_count(); }

    bool valid_atom(AtomId a) const { return a >= 0 && a < atom_count(); }
    bool valid_face(FaceId f) const { return f >= 0 && f < face_count(); }

    void check_atom(AtomId a) const {
        if (!valid_atom(a)) throw DomainError("unknown atom id " + std::to_string(a));
    }
    void check_face(FaceId f) const {
        if (!valid_face(f)) throw DomainError("unknown face id " + std::to_string(f));
    }

    AtomId atom(int t, int x) const {
        if (t < 0 || t >= n_t_ || x < 0 || x >= n_x_)
            throw DomainError("atom index out of range");
        return t * n_x_ + x;
    }
    AtomIndex atom_index(AtomId a) const {
        check_atom(a);
        return {a / n_x_, a % n_x_};
    }

    FaceId time_face(int i, int j) const {
        if (i < 0 || i > n_t_ || j < 0 || j >= n_x_)
            throw DomainError("time face index out of range");
        return i * n_x_ + j;
    }
    FaceId space_face(int i, int j) const {
        if (i < 0 || i >= n_t_ || j < 0 || j > n_x_)
            throw DomainError("space face index out of range");
        return time_face_count() + i * (n_x_ + 1) + j;
    }

    Axis axis(FaceId f) const {
        check_face(f);
        return f < time_face_count() ? Axis::Time : Axis::Space;
    }

    /// (i, j) grid index of a face within its family.
    std::pair<int, int> face_index(FaceId f) const {
        check_face(f);
        if (f < time_face_count()) return {f / n_x_, f % n_x_};
        const int g = f - time_face_count();
        return {g / (n_x_ + 1), g % (n_x_ + 1)};
    }

    /// Atom on the negative side of the face normal (below / left).
    std::optional<AtomId> lower(FaceId f) const {
        auto [i, j] = face_index(f);
        if (axis(f) == Axis::Time) return i >= 1 ? std::optional<AtomId>(atom(i - 1, j)) : std::nullopt;
        return j >= 1 ? std::optional<AtomId>(atom(i, j - 1)) : std::nullopt;
    }
    /// Atom on the positive side of the face normal (above / right).
    std::optional<AtomId> upper(FaceId f) const {
        auto [i, j] = face_index(f);
        if (axis(f) == Axis::Time) return i < n_t_ ? std::optional<AtomId>(atom(i, j)) : std::nullopt;
        return j < n_x_ ? std::optional<AtomId>(atom(i, j)) : std::nullopt;
    }

    bool is_boundary(FaceId f) const { return !lower(f) || !upper(f); }

    std::optional<AtomId> other_side(FaceId f, AtomId side) const {
        const auto lo = lower(f);
        const auto up = upper(f);
        if (lo && *lo == side) return up;
        if (up && *up == side) return lo;
        throw DomainError("atom is not incident to face");
    }

    FaceId face_of(AtomId a, Slot s) const {
        const auto [t, x] = atom_index(a);
        switch (s) {
            case Slot::TimePlus: return time_face(t + 1, x);
            case Slot::TimeMinus: return time_face(t, x);
            case Slot::SpacePlus: return space_face(t, x + 1);
            case Slot::SpaceMinus: return space_face(t, x);
        }
        return -1;
    }

    std::array<FaceId, 4> faces_of(AtomId a) const {
        return {face_of(a, Slot::TimePlus), face_of(a, Slot::TimeMinus), face_of(a, Slot::SpacePlus),
                face_of(a, Slot::SpaceMinus)};
    }

    Slot slot_of(FaceId f, AtomId side) const {
        const bool time = axis(f) == Axis::Time;
        const auto lo = lower(f);
        const auto up = upper(f);
        if (lo && *lo == side) return time ? Slot::TimePlus : Slot::SpacePlus;
        if (up && *up == side) return time ? Slot::TimeMinus : Slot::SpaceMinus;
        throw DomainError("atom is not incident to face");
    }

    std::vector<FaceId> boundary_faces() const {
        std::vector<FaceId> out;
        for (FaceId f = 0; f < face_count(); ++f)
            if (is_boundary(f)) out.push_back(f);
        return out;
    }
    std::vector<FaceId> interior_faces() const {
        std::vector<FaceId> out;
        for (FaceId f = 0; f < face_count(); ++f)
            if (!is_boundary(f)) out.push_back(f);
        return out;
    }

    /// Coefficient c of the per-face multisymplectic two-form c dphi_atom ^ dphi_face.
    double ms_coefficient(Axis a) const { return a == Axis::Time ? 2.0 * k_ / h_ : -2.0 * h_ / k_; }
    double ms_coefficient_of(FaceId f) const { return ms_coefficient(axis(f)); }

    bool operator==(const RectLattice& o) const {
        return n_t_ == o.n_t_ && n_x_ == o.n_x_ && h_ == o.h_ && k_ == o.k_;
    }

private:
    int n_t_;
    int n_x_;
    double h_;
    double k_;
};

/// A face together with the atom used for evaluation. The orientation
/// normal points away from `side`; `sign` is +1 when that normal points
/// along the positive axis direction and -1 otherwise.
struct OrientedFace {
    FaceId face = 0;
    AtomId side = 0;
    int sign = 1;

    bool operator==(const OrientedFace&) const = default;
};

inline OrientedFace orient(const RectLattice& lat, FaceId f, AtomId side) {
    const auto lo = lat.lower(f);
    const auto up = lat.upper(f);
    if (lo && *lo == side) return {f, side, +1};
    if (up && *up == side) return {f, side, -1};
    throw DomainError("atom " + std::to_string(side) + " is not incident to face " + std::to_string(f));
}

/// Oriented face with chain coefficient `sign` (+1: side is the lower atom).
inline OrientedFace orient_by_sign(const RectLattice& lat, FaceId f, int sign) {
    const auto side = sign > 0 ? lat.lower(f) : lat.upper(f);
    if (!side)
        throw DomainError("face " + std::to_string(f) + " has no atom on the requested side");
    return {f, *side, sign > 0 ? +1 : -1};
}

inline OrientedFace reversed(const RectLattice& lat, const OrientedFace& of) {
    const auto other = lat.other_side(of.face, of.side);
    if (!other) throw DomainError("boundary face " + std::to_string(of.face) + " cannot be reversed");
    return {of.face, *other, -of.sign};
}

struct OrientedSurface {
    std::vector<OrientedFace> faces;

    bool operator==(const OrientedSurface&) const = default;
};

struct AtomRegion {
    std::vector<AtomId> atoms;  // sorted, unique

    bool contains(AtomId a) const { return std::binary_search(atoms.begin(), atoms.end(), a); }
    bool empty() const { return atoms.empty(); }
    bool operator==(const AtomRegion&) const = default;
};

inline AtomRegion make_region(const RectLattice& lat, std::vector<AtomId> atoms) {
    for (AtomId a : atoms) lat.check_atom(a);
    std::sort(atoms.begin(), atoms.end());
    atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
    return {std::move(atoms)};
}

/// Atoms with t in [t0, t1) and x in [x0, x1).
inline AtomRegion rect_region(const RectLattice& lat, int t0, int t1, int x0, int x1) {
    std::vector<AtomId> atoms;
    for (int t = t0; t < t1; ++t)
        for (int x = x0; x < x1; ++x) atoms.push_back(lat.atom(t, x));
    return make_region(lat, std::move(atoms));
}

/// Signed 1-chain: coefficient per face id.
using Chain = std::vector<int>;

inline Chain to_chain(const RectLattice& lat, const OrientedSurface& s) {
    Chain c(static_cast<std::size_t>(lat.face_count()), 0);
    for (const auto& of : s.faces) {
        lat.check_face(of.face);
        if (c[of.face] != 0) throw DomainError("surface repeats face " + std::to_string(of.face));
        c[of.face] = of.sign;
    }
    return c;
}

inline OrientedSurface from_chain(const RectLattice& lat, const Chain& c) {
    OrientedSurface s;
    for (FaceId f = 0; f < lat.face_count(); ++f) {
        if (c[f] == 0) continue;
        if (std::abs(c[f]) > 1)
            throw UnsupportedChainError("chain coefficient " + std::to_string(c[f]) + " on face " +
                                        std::to_string(f) + " (multiplicity not modeled)");
        s.faces.push_back(orient_by_sign(lat, f, c[f]));
    }
    return s;
}

/// Checks that the surface is well formed: known faces, incident sides, no
/// repeated geometric face.
inline void validate(const RectLattice& lat, const OrientedSurface& s) {
    std::vector<char> seen(static_cast<std::size_t>(lat.face_count()), 0);
    for (const auto& of : s.faces) {
        lat.check_face(of.face);
        if (seen[of.face]) throw DomainError("surface repeats face " + std::to_string(of.face));
        seen[of.face] = 1;
        if (orient(lat, of.face, of.side).sign != of.sign)
            throw DomainError("inconsistent sign on face " + std::to_string(of.face));
    }
}

inline OrientedSurface reverse(const RectLattice& lat, const OrientedSurface& s) {
    OrientedSurface r;
    r.faces.reserve(s.faces.size());
    for (const auto& of : s.faces) r.faces.push_back(reversed(lat, of));
    return r;
}

/// Boundary of a region with the outer-normal orientation: every frontier
/// face once, evaluated from the atom inside the region.
inline OrientedSurface boundary(const RectLattice& lat, const AtomRegion& region) {
    if (region.empty()) throw DomainError("boundary of an empty region");
    for (AtomId a : region.atoms) lat.check_atom(a);
    OrientedSurface s;
    for (AtomId a : region.atoms) {
        for (Slot slot : kSlots) {
            const FaceId f = lat.face_of(a, slot);
            const auto other = lat.other_side(f, a);
            if (other && region.contains(*other)) continue;
            s.faces.push_back(orient(lat, f, a));
        }
    }
    std::sort(s.faces.begin(), s.faces.end(),
              [](const OrientedFace& x, const OrientedFace& y) { return x.face < y.face; });
    return s;
}

/// Formal chain sum sigma + boundary(region); cancelled faces drop out.
inline OrientedSurface add_boundary(const RectLattice& lat, const OrientedSurface& sigma,
                                    const AtomRegion& region) {
    if (region.empty()) return sigma;
    Chain c = to_chain(lat, sigma);
    for (const auto& of : boundary(lat, region).faces) c[of.face] += of.sign;
    return from_chain(lat, c);
}

enum class HomologyMode {
    Absolute,         ///< sigma2 == sigma1 + boundary(U') exactly
    RelativeLateral,  ///< equality required except on the lateral boundary faces S(i, 0), S(i, n_x)
};

/// Spatial boundary faces at x = 0 and x = n_x.
inline bool is_lateral(const RectLattice& lat, FaceId f) {
    if (lat.axis(f) != Axis::Space) return false;
    const int j = lat.face_index(f).second;
    return j == 0 || j == lat.n_x();
}

/// Finds U' with sigma2 = sigma1 +- boundary(U'), or nullopt. The region is
/// recovered from the gradient equation x(lower) - x(upper) = (sigma2 -
/// sigma1)(face) on interior faces, propagated over the atom adjacency
/// graph; the integer solution must take values in {m, m + 1}. The default
/// mode ignores the lateral boundary, so that horizontal cuts at different
/// rows are homologous.
inline std::optional<AtomRegion> homologous(const RectLattice& lat, const OrientedSurface& sigma1,
                                            const OrientedSurface& sigma2,
                                            HomologyMode mode = HomologyMode::RelativeLateral) {
    const Chain c1 = to_chain(lat, sigma1);
    const Chain c2 = to_chain(lat, sigma2);
    Chain d(c1.size());
    for (std::size_t f = 0; f < d.size(); ++f) d[f] = c2[f] - c1[f];

    const int n = lat.atom_count();
    std::vector<long> x(static_cast<std::size_t>(n), 0);
    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    std::queue<AtomId> q;
    q.push(0);
    visited[0] = 1;
    while (!q.empty()) {
        const AtomId a = q.front();
        q.pop();
        for (Slot slot : kSlots) {
            const FaceId f = lat.face_of(a, slot);
            const auto other = lat.other_side(f, a);
            if (!other) continue;
            // boundary(U') has coefficient x(lower) - x(upper) on face f.
            const bool a_is_lower = lat.lower(f) && *lat.lower(f) == a;
            const long expect = a_is_lower ? x[a] - d[f] : x[a] + d[f];
            if (!visited[*other]) {
                visited[*other] = 1;
                x[*other] = expect;
                q.push(*other);
            } else if (x[*other] != expect) {
                return std::nullopt;
            }
        }
    }
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (*mx - *mn > 1) return std::nullopt;

    // x is fixed up to a constant, and U' may enter with either sign: +{x = max}
    // or -{x = min}. A constant x leaves the empty region and the whole lattice.
    auto level = [&](long v) {
        std::vector<AtomId> atoms;
        for (AtomId a = 0; a < n; ++a)
            if (x[a] == v) atoms.push_back(a);
        return AtomRegion{std::move(atoms)};
    };
    std::vector<std::pair<int, AtomRegion>> candidates;
    if (*mx > *mn) {
        candidates.emplace_back(1, level(*mx));
        candidates.emplace_back(-1, level(*mn));
    } else {
        candidates.emplace_back(1, AtomRegion{});
        candidates.emplace_back(1, level(*mx));
        candidates.emplace_back(-1, level(*mx));
    }
    for (auto& [sign, region] : candidates) {
        Chain lhs = c1;
        if (!region.empty())
            for (const auto& of : boundary(lat, region).faces) lhs[of.face] += sign * of.sign;
        bool match = true;
        for (FaceId f = 0; f < lat.face_count() && match; ++f) {
            if (mode == HomologyMode::RelativeLateral && is_lateral(lat, f)) continue;
            match = lhs[f] == c2[f];
        }
        if (match) return std::move(region);
    }
    return std::nullopt;
}

/// Horizontal cut through the time faces T(row, .). With `future` set the
/// normal points towards increasing time and the side atoms are in row - 1.
inline OrientedSurface horizontal_cut(const RectLattice& lat, int row, bool future = true) {
    if (row < 0 || row > lat.n_t()) throw DomainError("cut row out of range");
    OrientedSurface s;
    for (int j = 0; j < lat.n_x(); ++j)
        s.faces.push_back(orient_by_sign(lat, lat.time_face(row, j), future ? +1 : -1));
    return s;
}

struct CutInfo {
    int row;
    bool future;
};

/// Recognises a full horizontal cut (in face order or not).
inline std::optional<CutInfo> as_horizontal_cut(const RectLattice& lat, const OrientedSurface& s) {
    if (static_cast<int>(s.faces.size()) != lat.n_x() || s.faces.empty()) return std::nullopt;
    if (lat.axis(s.faces.front().face) != Axis::Time) return std::nullopt;
    const int row = lat.face_index(s.faces.front().face).first;
    const int sign = s.faces.front().sign;
    std::vector<char> seen(static_cast<std::size_t>(lat.n_x()), 0);
    for (const auto& of : s.faces) {
        if (lat.axis(of.face) != Axis::Time) return std::nullopt;
        const auto [i, j] = lat.face_index(of.face);
        if (i != row || of.sign != sign || seen[j]) return std::nullopt;
        seen[j] = 1;
    }
    return CutInfo{row, sign > 0};
}

/// All rectangular sub-regions [t0,t1) x [x0,x1) of the lattice.
inline std::vector<AtomRegion> all_rect_regions(const RectLattice& lat) {
    std::vector<AtomRegion> out;
    for (int t0 = 0; t0 < lat.n_t(); ++t0)
        for (int t1 = t0 + 1; t1 <= lat.n_t(); ++t1)
            for (int x0 = 0; x0 < lat.n_x(); ++x0)
                for (int x1 = x0 + 1; x1 <= lat.n_x(); ++x1)
                    out.push_back(rect_region(lat, t0, t1, x0, x1));
    return out;
}

}  // namespace msl
