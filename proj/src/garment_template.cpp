#include "foldgen/garment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "foldgen/rng.hpp"

namespace foldgen {

const char* category_name(Category c) {
    switch (c) {
        case Category::TShirt: return "tshirt";
        case Category::Vest: return "vest";
        case Category::Hoodie: return "hoodie";
        case Category::Trousers: return "trousers";
    }
    return "unknown";
}

std::optional<Category> category_from_name(const std::string& name) {
    if (name == "tshirt") return Category::TShirt;
    if (name == "vest") return Category::Vest;
    if (name == "hoodie") return Category::Hoodie;
    if (name == "trousers") return Category::Trousers;
    return std::nullopt;
}

const TemplateKeypoint* KeypointTemplate::find_keypoint(const std::string& name) const {
    for (const auto& kp : keypoints)
        if (kp.name == name) return &kp;
    return nullptr;
}

bool KeypointTemplate::is_opening(const std::string& label) const {
    return std::find(openings.begin(), openings.end(), label) != openings.end();
}

namespace {

// Proper crossing only. Orientation magnitudes below eps are treated as
// collinear: on straight sampled runs the cross products of far-apart
// collinear segments are pure rounding noise, and the sign test alone
// would read that noise as a crossing. Collinear overlap is caught by the
// repeated-vertex / vertex-on-segment checks instead.
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    constexpr double eps = 1e-12;
    auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        return (q - p).cross(r - p);
    };
    double o1 = orient(a, b, c), o2 = orient(a, b, d);
    double o3 = orient(c, d, a), o4 = orient(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) &&
           std::abs(o1) > eps && std::abs(o2) > eps && std::abs(o3) > eps &&
           std::abs(o4) > eps;
}

// Rejects proper crossings, repeated vertices, and vertices within
// `clearance` of non-incident segments (touch points count as
// self-intersection; a positive clearance also rejects near-tangencies so
// finer resamplings of the same curves stay simple too).
bool polyline_is_simple(const std::vector<Vec2>& pts, double clearance = 1e-9) {
    const int n = static_cast<int>(pts.size());
    if (n < 3) return false;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]))
                return false;
        }
    }
    for (int i = 0; i < n; ++i) {
        int prev = (i + n - 1) % n, next = (i + 1) % n;
        for (int j = i + 1; j < n; ++j) {
            if (j == prev || j == next) {
                if ((pts[i] - pts[j]).norm() < 1e-9) return false;
                continue;
            }
            if ((pts[i] - pts[j]).norm() < clearance) return false;
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i || (j + 1) % n == i) continue;  // segment incident to vertex i
            const Vec2& a = pts[j];
            const Vec2& b = pts[(j + 1) % n];
            Vec2 ab = b - a;
            double len2 = ab.norm2();
            if (len2 <= 0) return false;  // repeated consecutive vertex
            double t = (pts[i] - a).dot(ab) / len2;
            if (t <= 1e-9 || t >= 1.0 - 1e-9) continue;
            Vec2 closest = a + ab * t;
            if ((pts[i] - closest).norm() < clearance) return false;
        }
    }
    return true;
}

double shoelace(const std::vector<Vec2>& pts) {
    double a = 0.0;
    const int n = static_cast<int>(pts.size());
    for (int i = 0; i < n; ++i) {
        const Vec2& p = pts[i];
        const Vec2& q = pts[(i + 1) % n];
        a += p.cross(q);
    }
    return 0.5 * a;
}

std::vector<Vec2> curve_controls(const KeypointTemplate& tmpl, const TemplateCurve& c,
                                 const std::map<std::string, Vec2>& kp_xy,
                                 double geom_scale) {
    (void)tmpl;
    const Vec2 p0 = kp_xy.at(c.start_kp);
    const Vec2 p1 = kp_xy.at(c.end_kp);
    std::vector<Vec2> ctrl;
    ctrl.push_back(p0);
    const int m = static_cast<int>(c.control_offsets.size());
    for (int k = 0; k < m; ++k) {
        double t = static_cast<double>(k + 1) / static_cast<double>(m + 1);
        Vec2 base = p0 + (p1 - p0) * t;
        ctrl.push_back(base + c.control_offsets[k] * geom_scale);
    }
    ctrl.push_back(p1);
    return ctrl;
}

// sampled probe loop used for validation and span measurement; same
// parametrization as boundary_polyline (t=1 point comes from the next curve)
std::vector<Vec2> probe_loop(const KeypointTemplate& tmpl,
                             const std::map<std::string, Vec2>& kp_xy,
                             double geom_scale, int samples) {
    std::vector<Vec2> pts;
    for (const auto& c : tmpl.curves) {
        auto ctrl = curve_controls(tmpl, c, kp_xy, geom_scale);
        for (int k = 0; k + 1 < samples; ++k) {
            double t = static_cast<double>(k) / static_cast<double>(samples - 1);
            pts.push_back(bezier_eval(ctrl, t));
        }
    }
    return pts;
}

}  // namespace

void KeypointTemplate::validate() const {
    std::set<std::string> names;
    for (const auto& kp : keypoints) {
        if (!names.insert(kp.name).second)
            throw std::invalid_argument("duplicate keypoint name: " + kp.name);
        if (kp.range.x < 0 || kp.range.y < 0)
            throw std::invalid_argument("negative keypoint range: " + kp.name);
    }
    if (curves.empty()) throw std::invalid_argument("template has no curves");
    for (size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        if (!names.count(c.start_kp) || !names.count(c.end_kp))
            throw std::invalid_argument("curve references unknown keypoint");
        if (c.control_offsets.size() > 2)
            throw std::invalid_argument("curve has more than 2 control offsets");
        const auto& next = curves[(i + 1) % curves.size()];
        if (c.end_kp != next.start_kp)
            throw std::invalid_argument("curves do not form a closed loop");
    }
    if (scale_min <= 0 || scale_max < scale_min)
        throw std::invalid_argument("bad scale range");
    // paper intervals are hard bounds for the two categories they cover
    if (category == Category::TShirt && (scale_min < 0.40 - 1e-9 || scale_max > 0.50 + 1e-9))
        throw std::invalid_argument("tshirt scale range outside [0.40, 0.50]");
    if (category == Category::Trousers && (scale_min < 0.45 - 1e-9 || scale_max > 0.65 + 1e-9))
        throw std::invalid_argument("trousers scale range outside [0.45, 0.65]");

    std::map<std::string, Vec2> nominal;
    for (const auto& kp : keypoints) nominal[kp.name] = kp.nominal;
    auto pts = probe_loop(*this, nominal, 1.0, 8);
    if (!polyline_is_simple(pts))
        throw std::invalid_argument("nominal boundary self-intersects");
}

Vec2 bezier_eval(const std::vector<Vec2>& control_points, double t) {
    const size_t n = control_points.size();
    if (n < 2 || n > 4)
        throw std::invalid_argument("bezier_eval: need 2..4 control points");
    if (t < 0.0 || t > 1.0)
        throw std::domain_error("bezier_eval: t outside [0,1]");
    std::array<Vec2, 4> work;
    std::copy(control_points.begin(), control_points.end(), work.begin());
    for (size_t level = n - 1; level > 0; --level)
        for (size_t i = 0; i < level; ++i)
            work[i] = work[i] + (work[i + 1] - work[i]) * t;
    return work[0];
}

TemplateInstance sample_instance(const KeypointTemplate& tmpl, std::uint64_t seed) {
    tmpl.validate();
    for (int attempt = 0; attempt < 100; ++attempt) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));

        std::map<std::string, Vec2> kp_xy;
        for (const auto& kp : tmpl.keypoints) {
            double dx = rng.uniform(-1.0, 1.0) * kp.range.x;
            double dy = rng.uniform(-1.0, 1.0) * kp.range.y;
            kp_xy[kp.name] = kp.nominal + Vec2{dx, dy};
        }
        double scale = rng.uniform(tmpl.scale_min, tmpl.scale_max);

        // margin rejects near-tangent instances that would self-intersect
        // when resampled at a different rate downstream
        auto probe = probe_loop(tmpl, kp_xy, 1.0, 16);
        if (std::abs(shoelace(probe)) < 1e-8) continue;
        if (!polyline_is_simple(probe, 0.004)) continue;

        Vec2 lo = probe[0], hi = probe[0];
        for (const auto& p : probe) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
        }
        double span_x = hi.x - lo.x, span_y = hi.y - lo.y;
        double g = std::sqrt(span_x * span_y);
        if (g <= 0) continue;
        double factor = scale / g;
        Vec2 center{(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5};

        TemplateInstance inst;
        inst.category = tmpl.category;
        inst.seed = seed;
        inst.scale = scale;
        inst.geom_scale = factor;
        for (auto& [name, p] : kp_xy)
            inst.keypoint_xy[name] = (p - center) * factor;
        return inst;
    }
    throw NonSimpleBoundary("sample_instance: no simple boundary in 100 attempts; "
                            "template ranges too wide");
}

double BoundaryPolyline::signed_area() const { return shoelace(points); }

BoundaryPolyline boundary_polyline(const KeypointTemplate& tmpl,
                                   const TemplateInstance& inst,
                                   int samples_per_curve) {
    if (samples_per_curve < 2)
        throw std::invalid_argument("boundary_polyline: samples_per_curve must be >= 2");

    BoundaryPolyline poly;
    std::vector<int> kp_index_of_point;  // -1 or index into tmpl.keypoints
    // samples_per_curve counts both curve endpoints; the t=1 point is the
    // next curve's t=0, so it is skipped here
    for (const auto& c : tmpl.curves) {
        auto ctrl = curve_controls(tmpl, c, inst.keypoint_xy, inst.geom_scale);
        for (int k = 0; k + 1 < samples_per_curve; ++k) {
            double t = static_cast<double>(k) / static_cast<double>(samples_per_curve - 1);
            Vec2 p = bezier_eval(ctrl, t);
            if (!poly.points.empty() && (p - poly.points.back()).norm() < 1e-12)
                continue;  // consecutive duplicate
            poly.points.push_back(p);
            poly.edge_labels.push_back(c.label);
            kp_index_of_point.push_back(k == 0 ? 1 : 0);
        }
    }
    // wrap-around duplicate
    if (poly.points.size() > 1 &&
        (poly.points.front() - poly.points.back()).norm() < 1e-12) {
        poly.points.pop_back();
        poly.edge_labels.pop_back();
        kp_index_of_point.pop_back();
    }

    double area = poly.signed_area();
    if (std::abs(area) < 1e-6)
        throw std::runtime_error("boundary_polyline: degenerate loop (area < 1e-6)");
    if (area < 0) {
        const int n = static_cast<int>(poly.points.size());
        std::vector<Vec2> rp(n);
        std::vector<std::string> rl(n);
        std::vector<int> rk(n);
        for (int j = 0; j < n; ++j) {
            rp[j] = poly.points[n - 1 - j];
            rl[j] = poly.edge_labels[(2 * n - 2 - j) % n];
            rk[j] = kp_index_of_point[n - 1 - j];
        }
        poly.points = std::move(rp);
        poly.edge_labels = std::move(rl);
        kp_index_of_point = std::move(rk);
    }

    if (!polyline_is_simple(poly.points))
        throw NonSimpleBoundary("boundary_polyline: loop self-intersects");

    poly.edge_opening.resize(poly.edge_labels.size());
    for (size_t i = 0; i < poly.edge_labels.size(); ++i)
        poly.edge_opening[i] = tmpl.is_opening(poly.edge_labels[i]);

    // recover keypoint -> point indices (curve start points survive dedup;
    // match by position to stay robust to the reversal above)
    for (const auto& [name, p] : inst.keypoint_xy) {
        int best = -1;
        double best_d = 1e300;
        for (size_t i = 0; i < poly.points.size(); ++i) {
            double d = (poly.points[i] - p).norm2();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        if (best >= 0 && best_d < 1e-18) poly.keypoint_points[name] = best;
    }
    return poly;
}

}  // namespace foldgen
