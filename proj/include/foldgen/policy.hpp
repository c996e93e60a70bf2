#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "foldgen/garment.hpp"
#include "foldgen/rng.hpp"
#include "foldgen/sim.hpp"

namespace foldgen {

// target point = sum(weight_i * keypoint_i) + offset, weights summing to 1
struct TargetExpr {
    std::vector<std::pair<std::string, double>> terms;
    Vec3 offset{0, 0, 0};

    Vec3 eval(const std::map<std::string, Vec3>& keypoints) const;
    double weight_sum() const;
};

struct GripperPlan {
    std::string grasp_kp;  // empty = this gripper sits out the stage
    TargetExpr target;
    bool active() const { return !grasp_kp.empty(); }
};

struct Stage {
    GripperPlan left;
    GripperPlan right;
    double lift_height = 0.10;
    double release_height = 0.0;  // stop the descend this far above the target
    bool release_at_end = true;
};

struct FoldProgram {
    Category category = Category::TShirt;
    std::string variant;
    std::vector<Stage> stages;

    // >= 1 stage, each stage has an active gripper, weights sum to 1,
    // every keypoint name exists in the template
    void validate(const KeypointTemplate& tmpl) const;
};

// Built-in folding patterns. TShirt-1: sleeves inward then bottom up to the
// shoulders; TShirt-2: sleeves inward then left-to-right fold; Trousers-1:
// left leg onto right then hems up to the waist. Vest-1 and Hoodie-1 follow
// the same style. Throws on an unknown (category, variant) pair.
FoldProgram make_program(Category category, const std::string& variant);
std::vector<std::string> builtin_program_variants(Category category);

FoldProgram program_from_json(const std::string& text);
std::string program_to_json(const FoldProgram& program);
FoldProgram load_program(const std::filesystem::path& path);

// Positional waypoints for one stage, per gripper: grasp point, lift,
// straight transport to the evaluated target, descend. Every consecutive
// pair is at most max_step apart. Approach to the grasp point is not part
// of the plan; the policy walks there first.
struct StagePlan {
    std::array<std::vector<Vec3>, 2> path;
    std::array<bool, 2> active{false, false};
};

StagePlan plan_stage_waypoints(const Stage& stage,
                               const std::map<std::string, Vec3>& keypoints,
                               double max_step);

enum class PolicyPhase { MoveToGrasp, Grasp, Transport, Release, Settle, Done };

const char* policy_phase_name(PolicyPhase p);

// Phase machine executing a FoldProgram stage by stage. Targets are
// replanned from the observed keypoints at each stage boundary.
class ScriptedPolicy {
  public:
    explicit ScriptedPolicy(FoldProgram program, double max_step = 0.04);

    Action step(const ClothState& state, const GarmentMesh& mesh);

    bool done() const { return phase_ == PolicyPhase::Done; }
    PolicyPhase phase() const { return phase_; }
    int stage_index() const { return stage_; }
    double max_step() const { return max_step_; }
    const FoldProgram& program() const { return program_; }

    // keypoint this gripper is meant to be holding in the current stage
    std::string intended_keypoint(int gripper) const;

    // re-enter the current stage just after a (recovered) grasp: replan the
    // lift/transport/descend from the current keypoint positions and carry
    // on with grippers closed
    void resume_after_recovery(const ClothState& state, const GarmentMesh& mesh);

  private:
    void enter_stage(const ClothState& state, const GarmentMesh& mesh);
    Action hold_action(const ClothState& state) const;

    FoldProgram program_;
    double max_step_;
    int stage_ = -1;
    PolicyPhase phase_ = PolicyPhase::MoveToGrasp;
    StagePlan plan_;
    std::size_t cursor_ = 0;  // index into the padded transport path
    int settle_left_ = 0;     // hold steps remaining after a release
};

// Scripted policy plus zero-mean Gaussian noise on the six position
// dimensions; grip booleans pass through. Deterministic per (seed, step).
class NoisedPolicy {
  public:
    NoisedPolicy(ScriptedPolicy inner, double noise_sigma, std::uint64_t seed);

    Action step(const ClothState& state, const GarmentMesh& mesh);

    bool done() const { return inner_.done(); }
    ScriptedPolicy& inner() { return inner_; }
    const ScriptedPolicy& inner() const { return inner_; }

  private:
    ScriptedPolicy inner_;
    double sigma_;
    std::uint64_t seed_;
    long step_index_ = 0;
};

}  // namespace foldgen
