#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "foldgen/garment.hpp"
#include "foldgen/rng.hpp"
#include "foldgen/vec.hpp"

namespace foldgen {

struct Interval {
    double lo = 0;
    double hi = 0;
    double sample(Rng& rng) const { return rng.uniform(lo, hi); }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

// Time stepping, grasping, and material parameters. The interval-valued
// fields are sampled once per cloth instance in init_sim.
struct SimConfig {
    double step_dt = 0.2;      // seconds between policy actions
    double physics_dt = 0.0025;
    int num_solver_iter = 20;
    double grasp_th = 0.02;  // meters
    Interval stiff_stretch{1.5, 2.5};
    Interval stiff_bend{0.015, 0.025};
    Interval cloth_table_fric{0.75, 1.25};
    Interval cloth_cloth_fric{0.75, 1.25};
    Interval tshirt_scale{0.40, 0.50};
    Interval trousers_scale{0.45, 0.65};
    double table_height = 0.0;
    double gravity = 9.8;
    double velocity_damping = 0.999;  // per substep
    // stretch stiffness k maps to a per-projection factor min(1, k / stretch_k_ref).
    // The reference is set so the factor stays below ~0.5: full-gain projections
    // alternating with the collision pass never converge on stacked layers (the
    // two passes fight, leaving a standing jiggle that slowly drags folds open)
    double stretch_k_ref = 5.0;
    // caps particle speed at max_speed_factor * particle_radius / physics_dt
    // so positional corrections cannot inject runaway kinetic energy; 0 = off
    double max_speed_factor = 0.5;
    // per-substep viscous damping of relative velocity along stretch edges.
    // The global damping factor leaves in-plane compression waves ringing in
    // stacked piles (constraint corrections re-excite them every substep);
    // damping the along-edge relative component kills those waves while
    // leaving rigid translation, falling, and dragging untouched
    double internal_damping = 0.2;
    // fabric crease memory: bend rest distances flow toward the current
    // shape at this rate (1/s) once the deviation exceeds a third of rest.
    // Without it a folded crease keeps its flat rest state and pushes the
    // fold back open for the rest of the episode; drape-scale deviations
    // stay below the threshold and behave elastically. 0 disables
    double bend_plasticity = 1.0;
    // fraction of relative tangential velocity removed per substep at each
    // contact (cloth-cloth pairs and the table band), on top of the Coulomb
    // budgets. Pressed layers grip each other; without this the solver's
    // residual jitter in stacks rides over the Coulomb budgets and folded
    // flaps ratchet themselves open
    double contact_damping = 0.5;
    bool enable_table_collision = true;
    bool enable_self_collision = true;

    int substeps() const;
    void validate() const;
};

SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const SimConfig& config);
SimConfig load_sim_config(const std::filesystem::path& path);

struct GripperState {
    Vec3 position{0, 0, 0.25};
    bool closed = false;
};

struct Attachment {
    int particle = -1;
    Vec3 offset;      // world-frame offset from gripper at grasp time
    double saved_w = 1.0;
};

struct Action {
    Vec3 left_target;
    Vec3 right_target;
    bool left_closed = false;
    bool right_closed = false;

    // [lx, ly, lz, lclosed, rx, ry, rz, rclosed] -- 8 scalars, bools as 0/1
    std::array<float, 8> serialize() const;
    static Action deserialize(const std::array<float, 8>& v);
};

struct StretchConstraint {
    int i, j;
    double rest;
};

// j,k span the shared edge; i and l are the opposite vertices whose
// distance is constrained.
struct BendConstraint {
    int i, j, k, l;
    double rest;
};

struct ClothState {
    std::vector<Vec3> positions;
    std::vector<Vec3> prev_positions;
    std::vector<Vec3> velocities;
    std::vector<double> inverse_masses;
    std::array<std::vector<Attachment>, 2> attachments;  // left, right
    std::array<GripperState, 2> grippers;
    long step_count = 0;

    std::vector<StretchConstraint> stretch;
    std::vector<BendConstraint> bend;
    // particle pairs never self-collided: rest-pose neighbors (the flat
    // garment sits far inside the collision distance) plus constrained pairs
    std::unordered_set<std::uint64_t> collision_exempt;
    // contact pairs found by the latest self-collision pass; scratch consumed
    // by the end-of-substep velocity update
    std::vector<std::pair<int, int>> active_contacts;

    // per-instance sampled values
    double particle_radius = 0.01;
    double k_stretch_eff = 1.0;
    double k_bend_eff = 0.02;
    double table_fric = 1.0;
    double cloth_fric = 1.0;

    Vec3 center_of_mass() const;
};

constexpr int kGripperLeft = 0;
constexpr int kGripperRight = 1;

// One particle per mesh vertex, stretch constraints on unique edges, bend
// constraints across interior edges, particle_radius = 1.5 x mean edge.
ClothState init_sim(const GarmentMesh& mesh, const SimConfig& config, std::uint64_t seed);

// PBD distance projection; returns the corrections for p_i and p_j.
std::pair<Vec3, Vec3> project_stretch(const Vec3& p_i, const Vec3& p_j, double w_i,
                                      double w_j, double rest_length, double k_eff);

// Distance-style bend between the two opposite vertices of an edge quad.
std::pair<Vec3, Vec3> project_bend(const Vec3& p_i, const Vec3& p_l, double w_i, double w_l,
                                   double rest_distance, double k_eff);

void collide_table(ClothState& state, const SimConfig& config);
void self_collide(ClothState& state, const SimConfig& config);

// Attaches every particle within grasp_th of the gripper. Empty result is a
// failed grasp, not an error.
void grasp_close(ClothState& state, int gripper, const SimConfig& config);
void grasp_open(ClothState& state, int gripper);

// Runs one action step: gripper interpolation across substeps()
// substeps, each running gravity integration, constraint iterations, table
// and self collision, and attachment pinning.
void apply_action(ClothState& state, const Action& action, const SimConfig& config);

// Rigid transforms used by randomize_initial_state, exposed for direct use.
void rotate_state_z(ClothState& state, double angle);
void flip_state(ClothState& state);  // pi about a horizontal axis through the centroid

// Random z-rotation, 50% flip, 5..15 wrinkle displacements, then 25 settle
// steps of no-op simulation.
ClothState randomize_initial_state(ClothState state, const SimConfig& config,
                                   std::uint64_t seed);

std::map<std::string, Vec3> keypoint_positions(const ClothState& state,
                                               const GarmentMesh& mesh);
Vec3 keypoint_position(const ClothState& state, const GarmentMesh& mesh,
                       const std::string& name);

}  // namespace foldgen
