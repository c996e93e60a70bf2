#include "foldgen/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace foldgen {

namespace {

using nlohmann::json;

std::uint64_t pair_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

struct CellKey {
    int x, y, z;
    bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct CellHash {
    std::size_t operator()(const CellKey& c) const {
        std::uint64_t h = static_cast<std::uint64_t>(c.x) * 0x8da6b343ull;
        h ^= static_cast<std::uint64_t>(c.y) * 0xd8163841ull;
        h ^= static_cast<std::uint64_t>(c.z) * 0xcb1ab31full;
        h *= 0x9e3779b97f4a7c15ull;
        return static_cast<std::size_t>(h ^ (h >> 31));
    }
};

int cell_of(double v, double size) { return static_cast<int>(std::floor(v / size)); }

// deterministic pair collection: lexicographically sorted (i, j) pairs
std::vector<std::pair<int, int>> collision_pairs(const ClothState& state, double dist) {
    const auto& pos = state.positions;
    const int n = static_cast<int>(pos.size());
    const double cell = dist;
    std::unordered_map<CellKey, std::vector<int>, CellHash> grid;
    grid.reserve(static_cast<std::size_t>(n) * 2);
    for (int i = 0; i < n; ++i)
        grid[{cell_of(pos[i].x, cell), cell_of(pos[i].y, cell), cell_of(pos[i].z, cell)}]
            .push_back(i);

    std::vector<std::pair<int, int>> out;
    const double dist2 = dist * dist;
    for (int i = 0; i < n; ++i) {
        CellKey base{cell_of(pos[i].x, cell), cell_of(pos[i].y, cell),
                     cell_of(pos[i].z, cell)};
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = grid.find({base.x + dx, base.y + dy, base.z + dz});
                    if (it == grid.end()) continue;
                    for (int j : it->second) {
                        if (j <= i) continue;
                        if (state.collision_exempt.count(pair_key(i, j))) continue;
                        Vec3 d = pos[i] - pos[j];
                        if (d.norm2() < dist2) out.emplace_back(i, j);
                    }
                }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void integrate(ClothState& state, const SimConfig& config, double dt) {
    const Vec3 g{0, 0, -config.gravity};
    for (std::size_t i = 0; i < state.positions.size(); ++i) {
        state.prev_positions[i] = state.positions[i];
        if (state.inverse_masses[i] <= 0) continue;
        state.velocities[i] = (state.velocities[i] + g * dt) * config.velocity_damping;
        state.positions[i] = state.positions[i] + state.velocities[i] * dt;
    }
}

void solve_constraints(ClothState& state, const SimConfig& config) {
    for (int iter = 0; iter < config.num_solver_iter; ++iter) {
        for (const auto& c : state.stretch) {
            auto [di, dj] = project_stretch(state.positions[c.i], state.positions[c.j],
                                            state.inverse_masses[c.i],
                                            state.inverse_masses[c.j], c.rest,
                                            state.k_stretch_eff);
            state.positions[c.i] += di;
            state.positions[c.j] += dj;
        }
        for (const auto& c : state.bend) {
            auto [di, dl] = project_bend(state.positions[c.i], state.positions[c.l],
                                         state.inverse_masses[c.i],
                                         state.inverse_masses[c.l], c.rest,
                                         state.k_bend_eff);
            state.positions[c.i] += di;
            state.positions[c.l] += dl;
        }
    }
}

void pin_attachments(ClothState& state) {
    for (int g = 0; g < 2; ++g)
        for (const auto& a : state.attachments[g])
            state.positions[a.particle] = state.grippers[g].position + a.offset;
}

void finish_substep(ClothState& state, const SimConfig& config, double dt) {
    const double inv_dt = 1.0 / dt;
    const double cap = config.max_speed_factor > 0
                           ? config.max_speed_factor * state.particle_radius * inv_dt
                           : 0.0;
    // Table contacts are inelastic and get Coulomb friction at the velocity
    // level: positional pushes otherwise convert into persistent gliding, and
    // resting stacks would accumulate gravity forever.
    const double contact_z = config.table_height + state.particle_radius * 1.05;
    const double dv_fric = state.table_fric * config.gravity * dt;
    for (std::size_t i = 0; i < state.positions.size(); ++i) {
        Vec3 v = (state.positions[i] - state.prev_positions[i]) * inv_dt;
        if (cap > 0) {
            double speed = v.norm();
            if (speed > cap) v = v * (cap / speed);
        }
        if (config.enable_table_collision && state.inverse_masses[i] > 0 &&
            state.positions[i].z <= contact_z) {
            if (v.z < 0) v.z = 0;
            const double vt = std::sqrt(v.x * v.x + v.y * v.y);
            if (vt <= dv_fric) {
                v.x = 0;
                v.y = 0;
            } else {
                const double f = (vt - dv_fric) / vt * (1.0 - config.contact_damping);
                v.x *= f;
                v.y *= f;
            }
        }
        state.velocities[i] = v;
    }

    if (config.bend_plasticity > 0) {
        const double flow = std::min(1.0, config.bend_plasticity * dt);
        for (auto& c : state.bend) {
            const double cur = (state.positions[c.i] - state.positions[c.l]).norm();
            if (std::abs(cur - c.rest) > 0.3 * c.rest) c.rest += (cur - c.rest) * flow;
        }
    }

    if (config.internal_damping > 0) {
        const double lambda = config.internal_damping;
        for (const auto& c : state.stretch) {
            const double w_i = state.inverse_masses[c.i], w_j = state.inverse_masses[c.j];
            const double w = w_i + w_j;
            if (w <= 0) continue;
            Vec3 d = state.positions[c.i] - state.positions[c.j];
            const double len = d.norm();
            if (len <= 0) continue;
            const Vec3 n = d * (1.0 / len);
            const double u = (state.velocities[c.i] - state.velocities[c.j]).dot(n);
            const Vec3 dv = n * (lambda * u);
            state.velocities[c.i] -= dv * (w_i / w);
            state.velocities[c.j] += dv * (w_j / w);
        }
    }

    // cloth-cloth contacts: remove approaching relative velocity (inelastic)
    // and apply Coulomb friction against the relative tangential velocity
    for (auto [i, j] : state.active_contacts) {
        const double w_i = state.inverse_masses[i], w_j = state.inverse_masses[j];
        const double w = w_i + w_j;
        if (w <= 0) continue;
        Vec3 d = state.positions[i] - state.positions[j];
        const double len = d.norm();
        if (len <= 0) continue;
        const Vec3 n = d * (1.0 / len);
        Vec3 v_rel = state.velocities[i] - state.velocities[j];
        const double v_n = v_rel.dot(n);
        Vec3 dv{0, 0, 0};
        if (v_n < 0) dv = n * (-v_n);
        Vec3 v_t = v_rel - n * v_n;
        const double t_speed = v_t.norm();
        if (t_speed > 0) {
            const double f_budget = state.cloth_fric * std::max(0.0, -v_n) +
                                    config.contact_damping * t_speed;
            dv += v_t * (-std::min(1.0, f_budget / t_speed));
        }
        state.velocities[i] += dv * (w_i / w);
        state.velocities[j] -= dv * (w_j / w);
    }
}

json interval_to_json(const Interval& v) { return json::array({v.lo, v.hi}); }

Interval interval_from_json(const json& j, const char* key) {
    if (!j.is_array() || j.size() != 2)
        throw std::invalid_argument(std::string("sim config: ") + key +
                                    " must be a [lo, hi] pair");
    Interval v{j[0].get<double>(), j[1].get<double>()};
    if (v.lo > v.hi)
        throw std::invalid_argument(std::string("sim config: ") + key + " has lo > hi");
    return v;
}

}  // namespace

int SimConfig::substeps() const {
    double ratio = step_dt / physics_dt;
    int n = static_cast<int>(std::lround(ratio));
    if (n < 1 || std::abs(ratio - n) > 1e-9 * ratio)
        throw std::invalid_argument("sim config: step_dt must be an integer multiple of physics_dt");
    return n;
}

void SimConfig::validate() const {
    substeps();
    if (num_solver_iter < 1)
        throw std::invalid_argument("sim config: num_solver_iter must be >= 1");
    if (grasp_th <= 0) throw std::invalid_argument("sim config: grasp_th must be > 0");
    if (physics_dt <= 0) throw std::invalid_argument("sim config: physics_dt must be > 0");
    for (const auto* iv : {&stiff_stretch, &stiff_bend, &cloth_table_fric,
                           &cloth_cloth_fric, &tshirt_scale, &trousers_scale})
        if (iv->lo > iv->hi || iv->lo < 0)
            throw std::invalid_argument("sim config: malformed sampling interval");
    if (velocity_damping <= 0 || velocity_damping > 1)
        throw std::invalid_argument("sim config: velocity_damping must be in (0, 1]");
    if (stretch_k_ref <= 0)
        throw std::invalid_argument("sim config: stretch_k_ref must be > 0");
    if (max_speed_factor < 0)
        throw std::invalid_argument("sim config: max_speed_factor must be >= 0");
    if (internal_damping < 0 || internal_damping > 1)
        throw std::invalid_argument("sim config: internal_damping must be in [0, 1]");
    if (contact_damping < 0 || contact_damping > 1)
        throw std::invalid_argument("sim config: contact_damping must be in [0, 1]");
    if (bend_plasticity < 0)
        throw std::invalid_argument("sim config: bend_plasticity must be >= 0");
}

SimConfig sim_config_from_json(const std::string& text) {
    json j = json::parse(text);
    SimConfig c;
    c.step_dt = j.value("step_dt", c.step_dt);
    c.physics_dt = j.value("physics_dt", c.physics_dt);
    c.num_solver_iter = j.value("num_solver_iter", c.num_solver_iter);
    c.grasp_th = j.value("grasp_th", c.grasp_th);
    if (j.contains("stiff_stretch"))
        c.stiff_stretch = interval_from_json(j["stiff_stretch"], "stiff_stretch");
    if (j.contains("stiff_bend"))
        c.stiff_bend = interval_from_json(j["stiff_bend"], "stiff_bend");
    if (j.contains("cloth_table_fric"))
        c.cloth_table_fric = interval_from_json(j["cloth_table_fric"], "cloth_table_fric");
    if (j.contains("cloth_cloth_fric"))
        c.cloth_cloth_fric = interval_from_json(j["cloth_cloth_fric"], "cloth_cloth_fric");
    if (j.contains("tshirt_scale"))
        c.tshirt_scale = interval_from_json(j["tshirt_scale"], "tshirt_scale");
    if (j.contains("trousers_scale"))
        c.trousers_scale = interval_from_json(j["trousers_scale"], "trousers_scale");
    c.table_height = j.value("table_height", c.table_height);
    c.gravity = j.value("gravity", c.gravity);
    c.velocity_damping = j.value("velocity_damping", c.velocity_damping);
    c.stretch_k_ref = j.value("stretch_k_ref", c.stretch_k_ref);
    c.max_speed_factor = j.value("max_speed_factor", c.max_speed_factor);
    c.internal_damping = j.value("internal_damping", c.internal_damping);
    c.bend_plasticity = j.value("bend_plasticity", c.bend_plasticity);
    c.contact_damping = j.value("contact_damping", c.contact_damping);
    c.validate();
    return c;
}

std::string sim_config_to_json(const SimConfig& c) {
    json j;
    j["step_dt"] = c.step_dt;
    j["physics_dt"] = c.physics_dt;
    j["num_solver_iter"] = c.num_solver_iter;
    j["grasp_th"] = c.grasp_th;
    j["stiff_stretch"] = interval_to_json(c.stiff_stretch);
    j["stiff_bend"] = interval_to_json(c.stiff_bend);
    j["cloth_table_fric"] = interval_to_json(c.cloth_table_fric);
    j["cloth_cloth_fric"] = interval_to_json(c.cloth_cloth_fric);
    j["tshirt_scale"] = interval_to_json(c.tshirt_scale);
    j["trousers_scale"] = interval_to_json(c.trousers_scale);
    j["table_height"] = c.table_height;
    j["gravity"] = c.gravity;
    j["velocity_damping"] = c.velocity_damping;
    j["stretch_k_ref"] = c.stretch_k_ref;
    j["max_speed_factor"] = c.max_speed_factor;
    j["internal_damping"] = c.internal_damping;
    j["bend_plasticity"] = c.bend_plasticity;
    j["contact_damping"] = c.contact_damping;
    return j.dump(2);
}

SimConfig load_sim_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open sim config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return sim_config_from_json(ss.str());
}

std::array<float, 8> Action::serialize() const {
    return {static_cast<float>(left_target.x),  static_cast<float>(left_target.y),
            static_cast<float>(left_target.z),  left_closed ? 1.0f : 0.0f,
            static_cast<float>(right_target.x), static_cast<float>(right_target.y),
            static_cast<float>(right_target.z), right_closed ? 1.0f : 0.0f};
}

Action Action::deserialize(const std::array<float, 8>& v) {
    Action a;
    a.left_target = {v[0], v[1], v[2]};
    a.left_closed = v[3] > 0.5f;
    a.right_target = {v[4], v[5], v[6]};
    a.right_closed = v[7] > 0.5f;
    return a;
}

Vec3 ClothState::center_of_mass() const {
    Vec3 c{0, 0, 0};
    for (const auto& p : positions) c += p;
    return positions.empty() ? c : c * (1.0 / static_cast<double>(positions.size()));
}

ClothState init_sim(const GarmentMesh& mesh, const SimConfig& config, std::uint64_t seed) {
    config.validate();
    auto report = validate_mesh(mesh);
    if (!report.defects.empty())
        throw std::invalid_argument("init_sim: invalid mesh: " + report.defects.front());

    ClothState s;
    s.positions = mesh.vertices;
    s.prev_positions = mesh.vertices;
    s.velocities.assign(mesh.vertices.size(), Vec3{0, 0, 0});
    s.inverse_masses.assign(mesh.vertices.size(), 1.0);

    // stretch constraints on unique edges, sorted for a fixed solver order
    std::vector<std::uint64_t> edges;
    edges.reserve(mesh.faces.size() * 3);
    for (const auto& f : mesh.faces)
        for (int e = 0; e < 3; ++e) edges.push_back(pair_key(f[e], f[(e + 1) % 3]));
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    double edge_sum = 0;
    s.stretch.reserve(edges.size());
    for (std::uint64_t k : edges) {
        int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
        double rest = (mesh.vertices[a] - mesh.vertices[b]).norm();
        s.stretch.push_back({a, b, rest});
        edge_sum += rest;
    }
    double mean_edge = edges.empty() ? 0.0 : edge_sum / static_cast<double>(edges.size());
    s.particle_radius = 1.5 * mean_edge;

    // bend constraints across every edge shared by two faces
    std::unordered_map<std::uint64_t, std::array<int, 2>> apex;
    apex.reserve(edges.size());
    for (const auto& f : mesh.faces)
        for (int e = 0; e < 3; ++e) {
            std::uint64_t k = pair_key(f[e], f[(e + 1) % 3]);
            int opposite = f[(e + 2) % 3];
            auto it = apex.find(k);
            if (it == apex.end()) apex[k] = {opposite, -1};
            else if (it->second[1] < 0) it->second[1] = opposite;
        }
    for (std::uint64_t k : edges) {
        auto it = apex.find(k);
        if (it == apex.end() || it->second[1] < 0) continue;
        int i = it->second[0], l = it->second[1];
        int j = static_cast<int>(k >> 32), kk = static_cast<int>(k & 0xffffffffu);
        double rest = (mesh.vertices[i] - mesh.vertices[l]).norm();
        if (rest <= 0) continue;
        s.bend.push_back({i, j, kk, l, rest});
    }

    // rest-pose proximity exemption: the flat garment (two layers a hair
    // apart, neighbors one edge apart) sits far inside the collision
    // distance, so only pairs that started separated ever collide. The
    // radius clears the two-ring neighborhood: pairs two edges apart sit
    // just past the collision distance at rest, and across a crease they
    // cannot reach it without tearing the vertex between them, so keeping
    // them collidable pits the separation push against the stretch solve
    // in a standing oscillation
    const double exempt_dist = 2.0 * s.particle_radius * 1.25;
    {
        ClothState rest = s;
        rest.collision_exempt.clear();
        for (auto [i, j] : collision_pairs(rest, exempt_dist))
            s.collision_exempt.insert(pair_key(i, j));
    }
    for (const auto& c : s.stretch) s.collision_exempt.insert(pair_key(c.i, c.j));

    Rng rng(derive_seed(seed, {0x73696d}));
    double raw_stretch = config.stiff_stretch.sample(rng);
    double raw_bend = config.stiff_bend.sample(rng);
    s.k_stretch_eff = std::min(1.0, raw_stretch / config.stretch_k_ref);
    // per-iteration factor chosen so the compounded correction over a solver
    // pass equals the sampled stiffness regardless of iteration count
    s.k_bend_eff = 1.0 - std::pow(1.0 - std::min(1.0, raw_bend),
                                  1.0 / std::max(1, config.num_solver_iter));
    s.table_fric = config.cloth_table_fric.sample(rng);
    s.cloth_fric = config.cloth_cloth_fric.sample(rng);

    s.grippers[kGripperLeft] = {Vec3{-0.3, 0, 0.3}, false};
    s.grippers[kGripperRight] = {Vec3{0.3, 0, 0.3}, false};

    // set the garment down on the table: mesh coordinates straddle z = 0, and
    // starting below the resting plane turns the first substep into a launch
    if (config.enable_table_collision) {
        double min_z = 1e300;
        for (const auto& p : s.positions) min_z = std::min(min_z, p.z);
        const double lift = (config.table_height + s.particle_radius) - min_z;
        if (lift > 0) {
            for (auto& p : s.positions) p.z += lift;
            for (auto& p : s.prev_positions) p.z += lift;
        }
    }
    return s;
}

std::pair<Vec3, Vec3> project_stretch(const Vec3& p_i, const Vec3& p_j, double w_i,
                                      double w_j, double rest_length, double k_eff) {
    double w = w_i + w_j;
    if (w <= 0) return {Vec3{0, 0, 0}, Vec3{0, 0, 0}};
    Vec3 d = p_i - p_j;
    double len = d.norm();
    if (len <= 0) return {Vec3{0, 0, 0}, Vec3{0, 0, 0}};
    Vec3 dir = d * (1.0 / len);
    double c = len - rest_length;
    Vec3 base = dir * (k_eff * c / w);
    return {base * -w_i, base * w_j};
}

std::pair<Vec3, Vec3> project_bend(const Vec3& p_i, const Vec3& p_l, double w_i, double w_l,
                                   double rest_distance, double k_eff) {
    return project_stretch(p_i, p_l, w_i, w_l, rest_distance, k_eff);
}

void collide_table(ClothState& state, const SimConfig& config) {
    const double floor_z = config.table_height + state.particle_radius;
    for (std::size_t i = 0; i < state.positions.size(); ++i) {
        Vec3& p = state.positions[i];
        if (p.z >= floor_z) continue;
        double lift = floor_z - p.z;
        p.z = floor_z;
        // the projection stabilizes position only; mirroring it into prev
        // keeps it out of the derived velocity (no upward kick)
        state.prev_positions[i].z += lift;
        // Coulomb friction against the substep's tangential slide
        double tx = p.x - state.prev_positions[i].x;
        double ty = p.y - state.prev_positions[i].y;
        double t_len = std::sqrt(tx * tx + ty * ty);
        if (t_len > 0) {
            double scale = std::min(1.0, state.table_fric * lift / t_len);
            p.x -= tx * scale;
            p.y -= ty * scale;
        }
    }
}

void self_collide(ClothState& state, const SimConfig& config) {
    (void)config;
    state.active_contacts.clear();
    const double dist = 2.0 * state.particle_radius;
    auto pairs = collision_pairs(state, dist);
    if (pairs.empty()) return;

    // accumulate (Jacobi) so the outcome is independent of traversal details;
    // separation pushes mirror into prev so they carry no momentum, friction
    // deltas do not (slowing the slide is their whole point)
    std::vector<Vec3> push(state.positions.size(), Vec3{0, 0, 0});
    std::vector<Vec3> fric(state.positions.size(), Vec3{0, 0, 0});
    std::vector<int> touches(state.positions.size(), 0);
    for (auto [i, j] : pairs) {
        double w_i = state.inverse_masses[i], w_j = state.inverse_masses[j];
        double w = w_i + w_j;
        if (w <= 0) continue;
        Vec3 d = state.positions[i] - state.positions[j];
        double len = d.norm();
        if (len <= 0 || len >= dist) continue;
        Vec3 n = d * (1.0 / len);
        double pen = dist - len;
        push[i] += n * (pen * w_i / w);
        push[j] -= n * (pen * w_j / w);
        ++touches[i];
        ++touches[j];
        state.active_contacts.emplace_back(i, j);

        // friction against relative tangential motion this substep
        Vec3 rel = (state.positions[i] - state.prev_positions[i]) -
                   (state.positions[j] - state.prev_positions[j]);
        Vec3 tangent = rel - n * rel.dot(n);
        double t_len = tangent.norm();
        if (t_len > 0) {
            double scale = std::min(1.0, state.cloth_fric * pen / t_len);
            Vec3 f = tangent * scale;
            fric[i] -= f * (w_i / w);
            fric[j] += f * (w_j / w);
        }
    }
    // average over a particle's contacts: summing full corrections overshoots
    // in multi-contact squeezes and the overshoot compounds across substeps
    for (std::size_t i = 0; i < push.size(); ++i) {
        if (touches[i] == 0) continue;
        const double s = 1.0 / touches[i];
        state.positions[i] += (push[i] + fric[i]) * s;
        state.prev_positions[i] += push[i] * s;
    }
}

void grasp_close(ClothState& state, int gripper, const SimConfig& config) {
    auto& g = state.grippers[gripper];
    g.closed = true;
    auto& list = state.attachments[gripper];
    const double th2 = config.grasp_th * config.grasp_th;
    for (std::size_t i = 0; i < state.positions.size(); ++i) {
        if ((state.positions[i] - g.position).norm2() > th2) continue;
        Attachment a;
        a.particle = static_cast<int>(i);
        a.offset = state.positions[i] - g.position;
        a.saved_w = state.inverse_masses[i];
        state.inverse_masses[i] = 0.0;
        list.push_back(a);
    }
}

void grasp_open(ClothState& state, int gripper) {
    auto& list = state.attachments[gripper];
    for (const auto& a : list) state.inverse_masses[a.particle] = a.saved_w;
    list.clear();
    state.grippers[gripper].closed = false;
}

void apply_action(ClothState& state, const Action& action, const SimConfig& config) {
    if (!action.left_target.finite() || !action.right_target.finite())
        throw std::invalid_argument("apply_action: non-finite action target");

    const int n = config.substeps();
    const double dt = config.physics_dt;

    // open/close transitions take effect at step start, before any motion
    if (action.left_closed && !state.grippers[kGripperLeft].closed)
        grasp_close(state, kGripperLeft, config);
    else if (!action.left_closed && state.grippers[kGripperLeft].closed)
        grasp_open(state, kGripperLeft);
    if (action.right_closed && !state.grippers[kGripperRight].closed)
        grasp_close(state, kGripperRight, config);
    else if (!action.right_closed && state.grippers[kGripperRight].closed)
        grasp_open(state, kGripperRight);

    const Vec3 start[2] = {state.grippers[0].position, state.grippers[1].position};
    const Vec3 target[2] = {action.left_target, action.right_target};

    for (int s = 0; s < n; ++s) {
        double t = static_cast<double>(s + 1) / n;
        state.grippers[0].position = lerp(start[0], target[0], t);
        state.grippers[1].position = lerp(start[1], target[1], t);

        integrate(state, config, dt);
        solve_constraints(state, config);
        if (config.enable_table_collision) collide_table(state, config);
        if (config.enable_self_collision) self_collide(state, config);
        pin_attachments(state);
        finish_substep(state, config, dt);
    }
    ++state.step_count;
}

void rotate_state_z(ClothState& state, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    for (auto& p : state.positions) p = {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
    for (auto& p : state.prev_positions) p = {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
    for (auto& v : state.velocities) v = {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

void flip_state(ClothState& state) {
    Vec3 c = state.center_of_mass();
    for (auto& p : state.positions) p = {p.x, 2 * c.y - p.y, 2 * c.z - p.z};
    for (auto& p : state.prev_positions) p = {p.x, 2 * c.y - p.y, 2 * c.z - p.z};
    for (auto& v : state.velocities) v = {v.x, -v.y, -v.z};
}

ClothState randomize_initial_state(ClothState state, const SimConfig& config,
                                   std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x72616e64}));

    rotate_state_z(state, rng.uniform(0.0, 2.0 * M_PI));
    if (rng.bernoulli(0.5)) flip_state(state);

    // place the cloth on the table before disturbing it; dropping it through
    // the plane would hand the first substep a violent projection
    double min_z = 1e300;
    for (const auto& p : state.positions) min_z = std::min(min_z, p.z);
    double lift = (config.table_height + state.particle_radius) - min_z;
    if (lift > 0) {
        for (auto& p : state.positions) p.z += lift;
        for (auto& p : state.prev_positions) p.z += lift;
    }

    int wrinkles = rng.uniform_int(5, 15);
    const double sigma = 2.0 * state.particle_radius;
    const int n = static_cast<int>(state.positions.size());
    for (int w = 0; w < wrinkles; ++w) {
        int i = rng.uniform_int(0, n - 1);
        state.positions[i] += Vec3{rng.normal() * sigma, rng.normal() * sigma,
                                   rng.normal() * sigma};
    }

    Action settle;
    settle.left_target = state.grippers[kGripperLeft].position;
    settle.right_target = state.grippers[kGripperRight].position;
    settle.left_closed = state.grippers[kGripperLeft].closed;
    settle.right_closed = state.grippers[kGripperRight].closed;
    long saved_steps = state.step_count;
    for (int s = 0; s < 25; ++s) apply_action(state, settle, config);
    state.step_count = saved_steps;
    return state;
}

std::map<std::string, Vec3> keypoint_positions(const ClothState& state,
                                               const GarmentMesh& mesh) {
    std::map<std::string, Vec3> out;
    for (const auto& [name, idx] : mesh.keypoint_vertices)
        out[name] = state.positions[idx];
    return out;
}

Vec3 keypoint_position(const ClothState& state, const GarmentMesh& mesh,
                       const std::string& name) {
    return state.positions[mesh.keypoint_vertices.at(name)];
}

}  // namespace foldgen
