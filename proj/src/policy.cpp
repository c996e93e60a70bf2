#include "foldgen/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace foldgen {

using json = nlohmann::json;

Vec3 TargetExpr::eval(const std::map<std::string, Vec3>& keypoints) const {
    Vec3 out = offset;
    for (const auto& [name, w] : terms) {
        auto it = keypoints.find(name);
        if (it == keypoints.end())
            throw std::out_of_range("target expression references unknown keypoint '" + name + "'");
        out = out + it->second * w;
    }
    return out;
}

double TargetExpr::weight_sum() const {
    double s = 0;
    for (const auto& [name, w] : terms) s += w;
    return s;
}

namespace {

void validate_plan(const GripperPlan& plan, const std::set<std::string>& names,
                   const char* side, int stage_idx) {
    auto where = [&] {
        std::ostringstream os;
        os << "stage " << stage_idx << " (" << side << " gripper): ";
        return os.str();
    };
    if (!plan.active()) return;
    if (!names.count(plan.grasp_kp))
        throw std::invalid_argument(where() + "grasp keypoint '" + plan.grasp_kp +
                                    "' not in template");
    if (plan.target.terms.empty())
        throw std::invalid_argument(where() + "empty target expression");
    for (const auto& [name, w] : plan.target.terms) {
        if (!names.count(name))
            throw std::invalid_argument(where() + "target keypoint '" + name +
                                        "' not in template");
    }
    double s = plan.target.weight_sum();
    if (std::abs(s - 1.0) > 1e-9)
        throw std::invalid_argument(where() + "target weights sum to " + std::to_string(s) +
                                    ", expected 1");
}

}  // namespace

void FoldProgram::validate(const KeypointTemplate& tmpl) const {
    if (tmpl.category != category)
        throw std::invalid_argument("program category does not match template");
    if (stages.empty()) throw std::invalid_argument("program has no stages");
    std::set<std::string> names;
    for (const auto& kp : tmpl.keypoints) names.insert(kp.name);
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const Stage& st = stages[s];
        if (!st.left.active() && !st.right.active())
            throw std::invalid_argument("stage " + std::to_string(s) + " has no active gripper");
        if (st.lift_height < 0)
            throw std::invalid_argument("stage " + std::to_string(s) + " has negative lift");
        validate_plan(st.left, names, "left", static_cast<int>(s));
        validate_plan(st.right, names, "right", static_cast<int>(s));
    }
}

namespace {

TargetExpr combo(std::initializer_list<std::pair<std::string, double>> terms) {
    TargetExpr e;
    e.terms.assign(terms.begin(), terms.end());
    return e;
}

// Fold targets mirror the grasped point through its anchor keypoint so the
// travel distance equals the cloth between them; anything farther drags the
// whole garment across the table instead of folding.
TargetExpr mirror_through(const std::string& anchor, const std::string& grasped) {
    return combo({{anchor, 2.0}, {grasped, -1.0}});
}

FoldProgram tshirt_sleeves_then_bottom(Category cat, const std::string& variant) {
    FoldProgram p;
    p.category = cat;
    p.variant = variant;
    Stage s1;
    s1.left = {"sleeve_left_outer", mirror_through("armpit_left", "sleeve_left_outer")};
    s1.lift_height = 0.11;
    Stage s2;
    s2.right = {"sleeve_right_outer", mirror_through("armpit_right", "sleeve_right_outer")};
    s2.lift_height = 0.11;
    Stage s3;
    s3.left = {"bottom_left", combo({{"shoulder_left", 1.0}})};
    s3.right = {"bottom_right", combo({{"shoulder_right", 1.0}})};
    s3.lift_height = 0.12;
    p.stages = {s1, s2, s3};
    return p;
}

FoldProgram tshirt_sleeves_then_sideways() {
    FoldProgram p;
    p.category = Category::TShirt;
    p.variant = "TShirt-2";
    Stage s1;
    s1.left = {"sleeve_left_outer", mirror_through("armpit_left", "sleeve_left_outer")};
    s1.lift_height = 0.11;
    Stage s2;
    s2.right = {"sleeve_right_outer", mirror_through("armpit_right", "sleeve_right_outer")};
    s2.lift_height = 0.11;
    Stage s3;  // left edge across onto the right half
    s3.left = {"shoulder_left", combo({{"shoulder_right", 1.0}})};
    s3.right = {"bottom_left", combo({{"bottom_right", 1.0}})};
    s3.lift_height = 0.12;
    p.stages = {s1, s2, s3};
    return p;
}

FoldProgram trousers_leg_then_hems() {
    FoldProgram p;
    p.category = Category::Trousers;
    p.variant = "Trousers-1";
    Stage s1;  // left leg over onto the right leg
    s1.left = {"leg_left_outer", combo({{"leg_right_outer", 1.0}})};
    s1.right = {"waist_left", combo({{"waist_right", 1.0}})};
    s1.lift_height = 0.11;
    Stage s2;  // hems up to the waistband
    s2.left = {"leg_right_inner", combo({{"waist_center", 1.0}})};
    s2.right = {"leg_right_outer", combo({{"waist_right", 1.0}})};
    s2.lift_height = 0.12;
    p.stages = {s1, s2};
    return p;
}

FoldProgram vest_sides_then_bottom() {
    FoldProgram p;
    p.category = Category::Vest;
    p.variant = "Vest-1";
    Stage s1;  // left panel onto the centerline
    s1.left = {"shoulder_left", combo({{"neck_center", 1.0}})};
    s1.right = {"bottom_left", combo({{"bottom_center", 1.0}})};
    s1.lift_height = 0.10;
    Stage s2;
    s2.left = {"bottom_right", combo({{"bottom_center", 1.0}})};
    s2.right = {"shoulder_right", combo({{"neck_center", 1.0}})};
    s2.lift_height = 0.10;
    Stage s3;
    s3.left = {"bottom_left", combo({{"shoulder_left", 1.0}})};
    s3.right = {"bottom_right", combo({{"shoulder_right", 1.0}})};
    s3.lift_height = 0.12;
    p.stages = {s1, s2, s3};
    return p;
}

FoldProgram hoodie_hood_then_tshirt() {
    FoldProgram p = tshirt_sleeves_then_bottom(Category::Hoodie, "Hoodie-1");
    Stage hood;  // hood down onto the chest first
    hood.left = {"hood_left", mirror_through("neck_left", "hood_left")};
    hood.right = {"hood_right", mirror_through("neck_right", "hood_right")};
    hood.lift_height = 0.11;
    p.stages.insert(p.stages.begin(), hood);
    return p;
}

}  // namespace

FoldProgram make_program(Category category, const std::string& variant) {
    FoldProgram p;
    if (category == Category::TShirt && variant == "TShirt-1")
        p = tshirt_sleeves_then_bottom(Category::TShirt, "TShirt-1");
    else if (category == Category::TShirt && variant == "TShirt-2")
        p = tshirt_sleeves_then_sideways();
    else if (category == Category::Trousers && variant == "Trousers-1")
        p = trousers_leg_then_hems();
    else if (category == Category::Vest && variant == "Vest-1")
        p = vest_sides_then_bottom();
    else if (category == Category::Hoodie && variant == "Hoodie-1")
        p = hoodie_hood_then_tshirt();
    else
        throw std::invalid_argument(std::string("unknown fold variant '") + variant + "' for " +
                                    category_name(category));
    p.validate(builtin_template(category));
    return p;
}

std::vector<std::string> builtin_program_variants(Category category) {
    switch (category) {
        case Category::TShirt: return {"TShirt-1", "TShirt-2"};
        case Category::Vest: return {"Vest-1"};
        case Category::Hoodie: return {"Hoodie-1"};
        case Category::Trousers: return {"Trousers-1"};
    }
    return {};
}

namespace {

json expr_to_json(const TargetExpr& e) {
    json terms = json::array();
    for (const auto& [name, w] : e.terms) terms.push_back(json::array({name, w}));
    return json{{"terms", std::move(terms)}, {"offset", {e.offset.x, e.offset.y, e.offset.z}}};
}

TargetExpr expr_from_json(const json& j) {
    TargetExpr e;
    for (const auto& t : j.at("terms"))
        e.terms.emplace_back(t.at(0).get<std::string>(), t.at(1).get<double>());
    if (j.contains("offset")) {
        const auto& o = j.at("offset");
        e.offset = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
    }
    return e;
}

json plan_to_json(const GripperPlan& p) {
    if (!p.active()) return nullptr;
    return json{{"grasp", p.grasp_kp}, {"target", expr_to_json(p.target)}};
}

GripperPlan plan_from_json(const json& j) {
    GripperPlan p;
    if (j.is_null()) return p;
    p.grasp_kp = j.at("grasp").get<std::string>();
    p.target = expr_from_json(j.at("target"));
    return p;
}

}  // namespace

std::string program_to_json(const FoldProgram& program) {
    json stages = json::array();
    for (const Stage& s : program.stages) {
        stages.push_back(json{{"left", plan_to_json(s.left)},
                              {"right", plan_to_json(s.right)},
                              {"lift_height", s.lift_height},
                              {"release_height", s.release_height},
                              {"release_at_end", s.release_at_end}});
    }
    json j{{"category", category_name(program.category)},
           {"variant", program.variant},
           {"stages", std::move(stages)}};
    return j.dump(2);
}

FoldProgram program_from_json(const std::string& text) {
    json j = json::parse(text);
    FoldProgram p;
    auto cat = category_from_name(j.at("category").get<std::string>());
    if (!cat) throw std::invalid_argument("unknown category in fold program");
    p.category = *cat;
    p.variant = j.at("variant").get<std::string>();
    for (const auto& js : j.at("stages")) {
        Stage s;
        s.left = plan_from_json(js.at("left"));
        s.right = plan_from_json(js.at("right"));
        s.lift_height = js.value("lift_height", 0.10);
        s.release_height = js.value("release_height", 0.0);
        s.release_at_end = js.value("release_at_end", true);
        p.stages.push_back(std::move(s));
    }
    return p;
}

FoldProgram load_program(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open fold program: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return program_from_json(buf.str());
}

namespace {

// points strictly after `from` up to and including `to`, spaced <= max_step
void append_segment(std::vector<Vec3>& path, const Vec3& from, const Vec3& to, double max_step) {
    double dist = (to - from).norm();
    if (dist <= 1e-12) return;
    int n = std::max(1, static_cast<int>(std::ceil(dist / max_step - 1e-9)));
    for (int k = 1; k <= n; ++k)
        path.push_back(lerp(from, to, static_cast<double>(k) / n));
}

}  // namespace

StagePlan plan_stage_waypoints(const Stage& stage,
                               const std::map<std::string, Vec3>& keypoints,
                               double max_step) {
    if (!(max_step > 0)) throw std::invalid_argument("max_step must be positive");
    StagePlan plan;
    const Vec3 lift{0, 0, std::max(stage.lift_height, stage.release_height)};
    const Vec3 release{0, 0, stage.release_height};
    const GripperPlan* plans[2] = {&stage.left, &stage.right};
    for (int g = 0; g < 2; ++g) {
        if (!plans[g]->active()) continue;
        plan.active[g] = true;
        auto it = keypoints.find(plans[g]->grasp_kp);
        if (it == keypoints.end())
            throw std::out_of_range("grasp keypoint '" + plans[g]->grasp_kp +
                                    "' missing from observation");
        const Vec3 grasp = it->second;
        const Vec3 target = plans[g]->target.eval(keypoints);
        auto& path = plan.path[g];
        path.push_back(grasp);
        append_segment(path, grasp, grasp + lift, max_step);
        append_segment(path, grasp + lift, target + lift, max_step);
        append_segment(path, target + lift, target + release, max_step);
    }
    return plan;
}

const char* policy_phase_name(PolicyPhase p) {
    switch (p) {
        case PolicyPhase::MoveToGrasp: return "move_to_grasp";
        case PolicyPhase::Grasp: return "grasp";
        case PolicyPhase::Transport: return "transport";
        case PolicyPhase::Release: return "release";
        case PolicyPhase::Settle: return "settle";
        case PolicyPhase::Done: return "done";
    }
    return "?";
}

ScriptedPolicy::ScriptedPolicy(FoldProgram program, double max_step)
    : program_(std::move(program)), max_step_(max_step) {
    if (!(max_step_ > 0)) throw std::invalid_argument("max_step must be positive");
    if (program_.stages.empty()) phase_ = PolicyPhase::Done;
}

Action ScriptedPolicy::hold_action(const ClothState& state) const {
    Action a;
    a.left_target = state.grippers[0].position;
    a.right_target = state.grippers[1].position;
    a.left_closed = state.grippers[0].closed;
    a.right_closed = state.grippers[1].closed;
    return a;
}

void ScriptedPolicy::enter_stage(const ClothState& state, const GarmentMesh& mesh) {
    Stage stage = program_.stages[stage_];
    auto keypoints = keypoint_positions(state, mesh);
    const double r = state.particle_radius;
    double clearance = 1.5 * r;
    GripperPlan* plans[2] = {&stage.left, &stage.right};
    for (auto* plan : plans) {
        if (!plan->active()) continue;
        Vec3 target = plan->target.eval(keypoints);
        // land short of the commanded point by the crease cost: cloth folding
        // over spends roughly a particle diameter of length turning the crease
        // and climbing its own thickness, and a fold driven all the way to the
        // flat-cloth point touches down stretched taut, then pulls itself back
        // open after release. Shortening much more is no better: it moves the
        // crease inward and leaves a stub flap that slides right back off
        auto it = keypoints.find(plan->grasp_kp);
        if (it != keypoints.end()) {
            const Vec3 travel = target - it->second;
            const double len = travel.norm();
            if (len > 0) {
                const double shorten = std::min(1.2 * r, 0.25 * len);
                target -= travel * (shorten / len);
            }
        }
        // release at the height the landed cloth will actually rest: one
        // collision diameter above whatever is piled there now. Lower pops the
        // landing layer back up out of the pile; higher drops it with a snap
        double top = target.z;
        for (const Vec3& p : state.positions) {
            const double dx = p.x - target.x, dy = p.y - target.y;
            if (dx * dx + dy * dy <= 9.0 * r * r) top = std::max(top, p.z);
        }
        clearance = std::max(clearance, top + 2.2 * r - target.z);
        plan->target = TargetExpr{{}, target};
    }
    stage.release_height = std::max(stage.release_height, clearance);
    plan_ = plan_stage_waypoints(stage, keypoints, max_step_);
    phase_ = PolicyPhase::MoveToGrasp;
    cursor_ = 0;
}

std::string ScriptedPolicy::intended_keypoint(int gripper) const {
    if (stage_ < 0 || stage_ >= static_cast<int>(program_.stages.size())) return {};
    if (phase_ == PolicyPhase::Done) return {};
    const Stage& st = program_.stages[stage_];
    const GripperPlan& p = gripper == kGripperLeft ? st.left : st.right;
    return p.grasp_kp;
}

void ScriptedPolicy::resume_after_recovery(const ClothState& state, const GarmentMesh& mesh) {
    if (stage_ < 0 || phase_ == PolicyPhase::Done) return;
    enter_stage(state, mesh);
    phase_ = PolicyPhase::Transport;
    cursor_ = 1;
}

Action ScriptedPolicy::step(const ClothState& state, const GarmentMesh& mesh) {
    if (phase_ == PolicyPhase::Done) return hold_action(state);
    if (stage_ < 0) {
        stage_ = 0;
        enter_stage(state, mesh);
    }

    Action a = hold_action(state);
    Vec3* targets[2] = {&a.left_target, &a.right_target};
    bool* grips[2] = {&a.left_closed, &a.right_closed};

    if (phase_ == PolicyPhase::MoveToGrasp) {
        // chase the live keypoint: the cloth keeps settling while we approach
        const Stage& st = program_.stages[stage_];
        const GripperPlan* plans[2] = {&st.left, &st.right};
        Vec3 grasp_now[2];
        bool all_there = true;
        for (int g = 0; g < 2; ++g) {
            if (!plan_.active[g]) continue;
            grasp_now[g] = keypoint_position(state, mesh, plans[g]->grasp_kp);
            if ((state.grippers[g].position - grasp_now[g]).norm() > 5e-4) all_there = false;
        }
        if (!all_there) {
            for (int g = 0; g < 2; ++g) {
                if (!plan_.active[g]) continue;
                const Vec3 cur = state.grippers[g].position;
                const Vec3 diff = grasp_now[g] - cur;
                const double d = diff.norm();
                *targets[g] = d <= max_step_ ? grasp_now[g] : cur + diff * (max_step_ / d);
                *grips[g] = false;
            }
            return a;
        }
        enter_stage(state, mesh);  // refresh the whole plan off the settled cloth
        phase_ = PolicyPhase::Grasp;
    }

    if (phase_ == PolicyPhase::Grasp) {
        for (int g = 0; g < 2; ++g) {
            if (!plan_.active[g]) continue;
            *targets[g] = plan_.path[g].front();
            *grips[g] = true;
        }
        phase_ = PolicyPhase::Transport;
        cursor_ = 1;
        return a;
    }

    const std::size_t len = std::max(plan_.active[0] ? plan_.path[0].size() : 0,
                                     plan_.active[1] ? plan_.path[1].size() : 0);

    if (phase_ == PolicyPhase::Transport) {
        if (cursor_ < len) {
            for (int g = 0; g < 2; ++g) {
                if (!plan_.active[g]) continue;
                const auto& path = plan_.path[g];
                *targets[g] = path[std::min(cursor_, path.size() - 1)];
                *grips[g] = true;
            }
            ++cursor_;
            return a;
        }
        phase_ = PolicyPhase::Release;
        settle_left_ = 3;
    }

    if (phase_ == PolicyPhase::Release) {
        // park at the final waypoint with the grip still closed so the pin
        // drains the transport swing, then open and let the cloth calm down
        // before the next stage grasps anything
        const bool park = --settle_left_ > 0;
        for (int g = 0; g < 2; ++g) {
            if (!plan_.active[g]) continue;
            *targets[g] = plan_.path[g].back();
            *grips[g] = park || !program_.stages[stage_].release_at_end;
        }
        if (park) return a;
        phase_ = PolicyPhase::Settle;
        settle_left_ = 6;
        return a;
    }

    // Settle: hold until the cloth is quiet (bounded wait)
    double vmax = 0;
    for (const auto& v : state.velocities) vmax = std::max(vmax, v.norm());
    --settle_left_;
    if (settle_left_ > 0 && !(vmax < 0.12 && settle_left_ <= 4)) return a;
    ++stage_;
    if (stage_ >= static_cast<int>(program_.stages.size())) {
        phase_ = PolicyPhase::Done;
    } else {
        enter_stage(state, mesh);
    }
    return a;
}

NoisedPolicy::NoisedPolicy(ScriptedPolicy inner, double noise_sigma, std::uint64_t seed)
    : inner_(std::move(inner)), sigma_(noise_sigma), seed_(seed) {
    if (sigma_ < 0) throw std::invalid_argument("noise sigma must be >= 0");
}

Action NoisedPolicy::step(const ClothState& state, const GarmentMesh& mesh) {
    Action a = inner_.step(state, mesh);
    const long idx = step_index_++;
    if (sigma_ == 0) return a;
    Rng rng(derive_seed(seed_, {0x706e6f697365ULL, static_cast<std::uint64_t>(idx)}));
    Vec3* pos[2] = {&a.left_target, &a.right_target};
    for (int g = 0; g < 2; ++g) {
        pos[g]->x += sigma_ * rng.normal();
        pos[g]->y += sigma_ * rng.normal();
        pos[g]->z += sigma_ * rng.normal();
    }
    return a;
}

}  // namespace foldgen
