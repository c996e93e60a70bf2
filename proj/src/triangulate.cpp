#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "foldgen/garment.hpp"

namespace foldgen {
namespace {

inline std::uint64_t ekey(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

inline double area2(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b - a).cross(c - a);
}

// > 0 when d lies inside the circumcircle of CCW triangle (a,b,c)
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    double ax = a.x - d.x, ay = a.y - d.y;
    double bx = b.x - d.x, by = b.y - d.y;
    double cx = c.x - d.x, cy = c.y - d.y;
    double a2 = ax * ax + ay * ay;
    double b2 = bx * bx + by * by;
    double c2 = cx * cx + cy * cy;
    return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

struct Tri {
    std::array<int, 3> v;
};

std::vector<Tri> ear_clip(const std::vector<Vec2>& pts) {
    const int n = static_cast<int>(pts.size());
    if (n < 3) throw std::runtime_error("ear_clip: fewer than 3 points");

    double dx = 0, dy = 0;
    {
        Vec2 lo = pts[0], hi = pts[0];
        for (const auto& p : pts) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
        }
        dx = hi.x - lo.x;
        dy = hi.y - lo.y;
    }
    const double eps_area = 1e-12 * (dx * dx + dy * dy);

    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;

    // closed-triangle containment: a vertex sitting exactly on the new
    // diagonal must block the ear, otherwise collinear boundary runs get
    // stranded as zero-area leftovers
    auto blocks_ear = [&](const Vec2& p, const Vec2& a, const Vec2& b,
                          const Vec2& c) {
        double w0 = area2(a, b, p);
        double w1 = area2(b, c, p);
        double w2 = area2(c, a, p);
        return w0 >= -eps_area && w1 >= -eps_area && w2 >= -eps_area;
    };

    std::vector<Tri> out;
    out.reserve(n - 2);
    int guard = 0;
    while (idx.size() > 3) {
        if (++guard > 4 * n + 16)
            throw std::runtime_error("ear_clip: no ear found (non-simple polygon?)");
        const int m = static_cast<int>(idx.size());
        int clipped = -1;
        double best_fallback = -1;
        int fallback = -1;
        for (int k = 0; k < m; ++k) {
            int ia = idx[(k + m - 1) % m], ib = idx[k], ic = idx[(k + 1) % m];
            double ar = area2(pts[ia], pts[ib], pts[ic]);
            if (ar <= eps_area) continue;
            bool blocked = false;
            for (int j = 0; j < m; ++j) {
                int iv = idx[j];
                if (iv == ia || iv == ib || iv == ic) continue;
                if (blocks_ear(pts[iv], pts[ia], pts[ib], pts[ic])) {
                    blocked = true;
                    break;
                }
            }
            if (!blocked) {
                clipped = k;
                break;
            }
            if (ar > best_fallback) {
                best_fallback = ar;
                fallback = k;
            }
        }
        if (clipped < 0) {
            if (fallback < 0)
                throw std::runtime_error("ear_clip: polygon degenerate");
            clipped = fallback;  // numerically wedged; take least-bad convex corner
        }
        const int m2 = static_cast<int>(idx.size());
        int ia = idx[(clipped + m2 - 1) % m2], ib = idx[clipped],
            ic = idx[(clipped + 1) % m2];
        out.push_back({{ia, ib, ic}});
        idx.erase(idx.begin() + clipped);
    }
    out.push_back({{idx[0], idx[1], idx[2]}});
    return out;
}

struct Mesh2D {
    std::vector<Vec2> verts;
    std::vector<Tri> tris;
    int nb = 0;  // verts[0..nb) are the boundary polyline
    std::vector<std::uint64_t> constrained_sorted;  // boundary edge keys, sorted

    bool is_constrained(std::uint64_t k) const {
        return std::binary_search(constrained_sorted.begin(), constrained_sorted.end(), k);
    }

    // edge key -> up to two incident triangle ids
    std::unordered_map<std::uint64_t, std::array<int, 2>> edge_map() const {
        std::unordered_map<std::uint64_t, std::array<int, 2>> em;
        em.reserve(tris.size() * 2);
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            for (int e = 0; e < 3; ++e) {
                std::uint64_t k = ekey(tris[t].v[e], tris[t].v[(e + 1) % 3]);
                auto it = em.find(k);
                if (it == em.end())
                    em[k] = {t, -1};
                else
                    it->second[1] = t;
            }
        }
        return em;
    }

    int third_vertex(int t, int a, int b) const {
        for (int e = 0; e < 3; ++e) {
            int v = tris[t].v[e];
            if (v != a && v != b) return v;
        }
        return -1;
    }

    void replace(int t, int a, int b, int c) { tris[t].v = {a, b, c}; }

    // Lawson flips to the Delaunay criterion, boundary edges pinned.
    // With no_chords, a flip whose new diagonal would join two boundary
    // vertices is refused (used after chord elimination so none reappear).
    void delaunay_flips(bool no_chords = false) {
        for (int pass = 0; pass < 300; ++pass) {
            auto em = edge_map();
            std::vector<std::uint64_t> keys;
            keys.reserve(em.size());
            for (const auto& [k, ts] : em)
                if (ts[1] >= 0 && !is_constrained(k)) keys.push_back(k);
            std::sort(keys.begin(), keys.end());

            int flips = 0;
            for (std::uint64_t k : keys) {
                auto it = em.find(k);
                if (it == em.end()) continue;
                int t1 = it->second[0], t2 = it->second[1];
                int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
                // confirm both still hold this edge (earlier flips this pass may
                // have restructured them)
                auto has_edge = [&](int t) {
                    int hits = 0;
                    for (int e = 0; e < 3; ++e)
                        if (tris[t].v[e] == a || tris[t].v[e] == b) ++hits;
                    return hits == 2;
                };
                if (!has_edge(t1) || !has_edge(t2)) continue;
                int c = third_vertex(t1, a, b);
                int d = third_vertex(t2, a, b);
                if (c < 0 || d < 0 || c == d) continue;
                if (no_chords && c < nb && d < nb) continue;

                // orient t1 as (a,b,c) CCW
                if (area2(verts[a], verts[b], verts[c]) < 0) std::swap(a, b);
                if (incircle(verts[a], verts[b], verts[c], verts[d]) <= 1e-18) continue;
                // flip only if the quad a-d-b-c is convex (both new tris CCW)
                if (area2(verts[c], verts[d], verts[b]) <= 0) continue;
                if (area2(verts[d], verts[c], verts[a]) <= 0) continue;

                replace(t1, c, d, b);
                replace(t2, d, c, a);
                em.erase(it);
                em[ekey(c, d)] = {t1, t2};
                auto fix = [&](int x, int y, int from, int to) {
                    auto jt = em.find(ekey(x, y));
                    if (jt == em.end()) return;
                    if (jt->second[0] == from) jt->second[0] = to;
                    else if (jt->second[1] == from) jt->second[1] = to;
                };
                fix(c, a, t1, t2);
                fix(d, b, t2, t1);
                ++flips;
            }
            if (flips == 0) return;
        }
    }

    // Midpoints inside the diametral circle of a constrained edge would
    // start a sliver cascade against it (the constrained edge itself can
    // never be split), so those splits are skipped.
    bool encroaches(const Vec2& m) const {
        for (std::uint64_t k : constrained_sorted) {
            const Vec2& p = verts[static_cast<int>(k >> 32)];
            const Vec2& q = verts[static_cast<int>(k & 0xffffffffu)];
            if ((p - m).dot(q - m) < 0) return true;
        }
        return false;
    }

    // An unconstrained edge between two boundary vertices is a chord: both
    // cloth layers would share it after stitching, so it must always go.
    bool is_chord(std::uint64_t k) const {
        int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
        return a < nb && b < nb && !is_constrained(k);
    }

    // split every unconstrained edge longer than 4/3 * target, longest
    // first; with chords_only, instead split exactly the interior edges
    // joining two boundary vertices regardless of length
    int refine_pass(double target, bool chords_only = false) {
        auto em = edge_map();
        struct Cand {
            double len;
            std::uint64_t key;
        };
        std::vector<Cand> cands;
        for (const auto& [k, ts] : em) {
            if (is_constrained(k)) continue;
            int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
            double len = (verts[a] - verts[b]).norm();
            bool want = chords_only ? is_chord(k) : len > target * (4.0 / 3.0);
            if (want) cands.push_back({len, k});
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
            if (x.len != y.len) return x.len > y.len;
            return x.key < y.key;
        });

        int splits = 0;
        for (const auto& cand : cands) {
            auto it = em.find(cand.key);
            if (it == em.end()) continue;
            int t1 = it->second[0], t2 = it->second[1];
            if (t2 < 0) continue;
            int a = static_cast<int>(cand.key >> 32),
                b = static_cast<int>(cand.key & 0xffffffffu);
            auto holds = [&](int t) {
                int hits = 0;
                for (int e = 0; e < 3; ++e)
                    if (tris[t].v[e] == a || tris[t].v[e] == b) ++hits;
                return hits == 2;
            };
            if (!holds(t1) || !holds(t2)) continue;
            int c = third_vertex(t1, a, b);
            int d = third_vertex(t2, a, b);
            if (c < 0 || d < 0) continue;
            if (area2(verts[a], verts[b], verts[c]) < 0) std::swap(a, b);

            Vec2 mid = (verts[a] + verts[b]) * 0.5;
            if (!is_chord(cand.key) && encroaches(mid)) continue;
            int m = static_cast<int>(verts.size());
            verts.push_back(mid);

            // t1 = (a,b,c) CCW; t2 holds (b,a,d) CCW
            replace(t1, a, m, c);
            int t3 = static_cast<int>(tris.size());
            tris.push_back({{m, b, c}});
            replace(t2, m, a, d);
            int t4 = static_cast<int>(tris.size());
            tris.push_back({{b, m, d}});

            em.erase(it);
            em[ekey(a, m)] = {t1, t2};
            em[ekey(m, b)] = {t3, t4};
            em[ekey(m, c)] = {t1, t3};
            em[ekey(m, d)] = {t2, t4};
            auto fix = [&](int x, int y, int from, int to) {
                auto jt = em.find(ekey(x, y));
                if (jt == em.end()) return;
                if (jt->second[0] == from) jt->second[0] = to;
                else if (jt->second[1] == from) jt->second[1] = to;
            };
            fix(b, c, t1, t3);
            fix(b, d, t2, t4);
            ++splits;
        }
        return splits;
    }

    void smooth(int boundary_count, int iters) {
        std::vector<std::vector<int>> nbrs(verts.size());
        std::vector<std::vector<int>> vtris(verts.size());
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            for (int e = 0; e < 3; ++e) {
                int a = tris[t].v[e], b = tris[t].v[(e + 1) % 3];
                nbrs[a].push_back(b);
                nbrs[b].push_back(a);
                vtris[a].push_back(t);
            }
        }
        for (auto& v : nbrs) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
        for (int it = 0; it < iters; ++it) {
            for (int v = boundary_count; v < static_cast<int>(verts.size()); ++v) {
                if (nbrs[v].empty()) continue;
                Vec2 avg{0, 0};
                for (int u : nbrs[v]) avg = avg + verts[u];
                avg = avg * (1.0 / static_cast<double>(nbrs[v].size()));
                Vec2 old = verts[v];
                std::vector<double> before;
                before.reserve(vtris[v].size());
                for (int t : vtris[v])
                    before.push_back(area2(verts[tris[t].v[0]], verts[tris[t].v[1]],
                                           verts[tris[t].v[2]]));
                verts[v] = avg;
                bool ok = true;
                for (size_t k = 0; k < vtris[v].size(); ++k) {
                    int t = vtris[v][k];
                    double after = area2(verts[tris[t].v[0]], verts[tris[t].v[1]],
                                         verts[tris[t].v[2]]);
                    if (after < 1e-14 || after < 0.25 * before[k]) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) verts[v] = old;
            }
        }
    }
};

}  // namespace

double PanelMesh::total_area() const {
    double a = 0;
    for (const auto& f : faces)
        a += 0.5 * area2(vertices[f[0]], vertices[f[1]], vertices[f[2]]);
    return a;
}

double PanelMesh::mean_edge_length() const {
    std::vector<std::uint64_t> seen;
    seen.reserve(faces.size() * 3);
    for (const auto& f : faces)
        for (int e = 0; e < 3; ++e) seen.push_back(ekey(f[e], f[(e + 1) % 3]));
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    double sum = 0;
    for (std::uint64_t k : seen) {
        int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
        sum += (vertices[a] - vertices[b]).norm();
    }
    return seen.empty() ? 0.0 : sum / static_cast<double>(seen.size());
}

PanelMesh triangulate_panel(const BoundaryPolyline& boundary,
                            double target_edge_length) {
    if (target_edge_length <= 0)
        throw std::invalid_argument("triangulate_panel: target_edge_length <= 0");
    if (boundary.points.size() < 3)
        throw std::runtime_error("triangulate_panel: boundary too short");
    if (boundary.signed_area() <= 0)
        throw std::runtime_error("triangulate_panel: boundary must be CCW with positive area");

    Mesh2D mesh;
    mesh.verts = boundary.points;
    const int nb = static_cast<int>(boundary.points.size());
    mesh.nb = nb;
    mesh.constrained_sorted.reserve(nb);
    for (int i = 0; i < nb; ++i)
        mesh.constrained_sorted.push_back(ekey(i, (i + 1) % nb));
    std::sort(mesh.constrained_sorted.begin(), mesh.constrained_sorted.end());

    mesh.tris = ear_clip(boundary.points);
    mesh.delaunay_flips();
    for (int pass = 0; pass < 64; ++pass) {
        if (mesh.refine_pass(target_edge_length) == 0) break;
        mesh.delaunay_flips();
    }
    mesh.smooth(nb, 3);
    mesh.delaunay_flips();
    // split any surviving chord so no interior edge joins two boundary
    // vertices (layer stitching would otherwise double such an edge up)
    for (int pass = 0; pass < 4; ++pass) {
        if (mesh.refine_pass(target_edge_length, true) == 0) break;
        mesh.delaunay_flips(true);
    }

    PanelMesh out;
    out.vertices = std::move(mesh.verts);
    out.boundary_count = nb;
    out.boundary_edge_opening = boundary.edge_opening;
    out.boundary_edge_labels = boundary.edge_labels;
    out.faces.reserve(mesh.tris.size());
    for (const auto& t : mesh.tris) {
        if (area2(out.vertices[t.v[0]], out.vertices[t.v[1]], out.vertices[t.v[2]]) <= 0)
            throw std::runtime_error("triangulate_panel: produced non-CCW face");
        out.faces.push_back({t.v[0], t.v[1], t.v[2]});
    }

    double tri_area = out.total_area();
    double poly_area = boundary.signed_area();
    if (std::abs(tri_area - poly_area) > 1e-9 * std::abs(poly_area))
        throw std::runtime_error("triangulate_panel: area not conserved");
    return out;
}

}  // namespace foldgen
