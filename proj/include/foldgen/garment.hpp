#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "foldgen/vec.hpp"

namespace foldgen {

enum class Category { TShirt, Vest, Hoodie, Trousers };

const char* category_name(Category c);                 // "tshirt", ...
std::optional<Category> category_from_name(const std::string& name);

struct TemplateKeypoint {
    std::string name;
    Vec2 nominal;  // meters
    Vec2 range;    // axis-aligned half-extents, meters
};

// Boundary curve between two keypoints. control_offsets are displacements
// (in template units) from evenly spaced points on the chord; 0 offsets is
// a straight segment, 1 gives a quadratic Bezier, 2 a cubic.
struct TemplateCurve {
    std::string start_kp;
    std::string end_kp;
    std::vector<Vec2> control_offsets;
    std::string label;  // boundary segment label (neck, sleeve_end, ...)
};

struct KeypointTemplate {
    Category category = Category::TShirt;
    std::vector<TemplateKeypoint> keypoints;
    std::vector<TemplateCurve> curves;        // in boundary order, closed loop
    std::vector<std::string> openings;        // labels left unstitched
    double scale_min = 1.0, scale_max = 1.0;  // meters

    const TemplateKeypoint* find_keypoint(const std::string& name) const;
    bool is_opening(const std::string& label) const;
    // Throws std::invalid_argument on a malformed template (duplicate
    // keypoint names, dangling curve endpoints, non-closed or
    // self-intersecting nominal loop, scale range outside the known
    // per-category intervals).
    void validate() const;
};

struct TemplateInstance {
    Category category = Category::TShirt;
    std::map<std::string, Vec2> keypoint_xy;  // meters, post-scale
    std::uint64_t seed = 0;
    double scale = 1.0;       // geometric mean of boundary x/y spans, meters
    double geom_scale = 1.0;  // multiplier applied to template space
};

struct NonSimpleBoundary : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Closed boundary loop. points.front() connects to points.back(); edge i
// runs points[i] -> points[(i+1) % n].
struct BoundaryPolyline {
    std::vector<Vec2> points;
    std::vector<std::string> edge_labels;
    std::vector<bool> edge_opening;
    // indices of points that coincide with template keypoints
    std::map<std::string, int> keypoint_points;

    double signed_area() const;
    size_t size() const { return points.size(); }
};

// 2D triangulated panel. Vertices [0, boundary_count) are the input
// polyline in order; the rest are interior Steiner points.
struct PanelMesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> faces;  // CCW
    int boundary_count = 0;
    std::vector<bool> boundary_edge_opening;  // per boundary edge i: i -> (i+1)%nb
    std::vector<std::string> boundary_edge_labels;

    double total_area() const;
    double mean_edge_length() const;
};

enum class Layer : std::uint8_t { Front = 0, Back = 1 };

struct GarmentMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<Vec2> uv;  // per vertex, in [0,1]^2
    std::map<std::string, int> keypoint_vertices;       // front layer
    std::map<std::string, int> back_keypoint_vertices;  // mirrored, metadata
    Category category = Category::TShirt;
    std::vector<Layer> layer_of_vertex;
    std::string texture_ref;  // relative path, optional
    std::uint64_t seed = 0;
    double scale = 0.0;

    double mean_edge_length() const;
    size_t vertex_count() const { return vertices.size(); }
};

struct MeshValidationReport {
    bool is_valid = false;
    size_t vertex_count = 0;
    size_t face_count = 0;
    size_t boundary_loop_count = 0;
    double min_edge = 0.0, mean_edge = 0.0, max_edge = 0.0;
    std::vector<std::string> defects;
};

// --- operations ---------------------------------------------------------

// Deterministic per (template, seed). Keypoints jittered inside their
// ranges, the whole set rescaled so the geometric mean of the boundary
// spans equals the sampled scale, and recentered on the boundary bbox.
// Throws NonSimpleBoundary after 100 resample attempts.
TemplateInstance sample_instance(const KeypointTemplate& tmpl, std::uint64_t seed);

// de Casteljau, 2..4 control points, t in [0,1].
Vec2 bezier_eval(const std::vector<Vec2>& control_points, double t);

BoundaryPolyline boundary_polyline(const KeypointTemplate& tmpl,
                                   const TemplateInstance& inst,
                                   int samples_per_curve);

// Constrained Delaunay refinement. Boundary vertices are preserved;
// interior points are inserted until no interior edge exceeds 4/3 of
// target_edge_length.
PanelMesh triangulate_panel(const BoundaryPolyline& polyline, double target_edge_length);

GarmentMesh lift_and_stitch(const PanelMesh& panel, double layer_gap);

void assign_uv(GarmentMesh& mesh);

// Throws std::runtime_error if a keypoint lands farther than one mean
// edge length from its sampled 2D position.
void annotate_keypoints(GarmentMesh& mesh, const TemplateInstance& inst);

MeshValidationReport validate_mesh(const GarmentMesh& mesh);

// --- template / mesh files ----------------------------------------------

KeypointTemplate template_from_json(const std::string& text);
std::string template_to_json(const KeypointTemplate& tmpl);
KeypointTemplate load_template(const std::string& path);

// Built-in canonical templates (also shipped as assets/templates/*.json).
KeypointTemplate builtin_template(Category category);

void save_obj(const std::string& path, const GarmentMesh& mesh);
void save_mesh_metadata(const std::string& path, const GarmentMesh& mesh);
GarmentMesh load_obj_with_metadata(const std::string& obj_path,
                                   const std::string& meta_path);

}  // namespace foldgen
