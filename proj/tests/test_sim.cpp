#include <cmath>
#include <limits>
#include <cstring>
#include <set>

#include "doctest.h"
#include "foldgen/sim.hpp"

using namespace foldgen;

namespace {

// regular hexagon fan: 12 edges, all exactly `radius` long, one 6-edge
// boundary loop, so it passes mesh validation
GarmentMesh hexagon_mesh(double radius) {
    GarmentMesh m;
    m.category = Category::Vest;
    m.vertices.push_back({0, 0, 0});
    for (int k = 0; k < 6; ++k) {
        double a = M_PI / 3.0 * k;
        m.vertices.push_back({radius * std::cos(a), radius * std::sin(a), 0});
    }
    for (int k = 0; k < 6; ++k) m.faces.push_back({0, 1 + k, 1 + (k + 1) % 6});
    m.uv.assign(m.vertices.size(), {0.25, 0.5});
    m.layer_of_vertex.assign(m.vertices.size(), Layer::Front);
    m.scale = 2 * radius;
    return m;
}

GarmentMesh tshirt_fixture() {
    auto tmpl = builtin_template(Category::TShirt);
    auto inst = sample_instance(tmpl, 21);
    auto poly = boundary_polyline(tmpl, inst, 10);
    auto panel = triangulate_panel(poly, 0.035);
    auto mesh = lift_and_stitch(panel, 0.004);
    mesh.category = Category::TShirt;
    assign_uv(mesh);
    annotate_keypoints(mesh, inst);
    return mesh;
}

SimConfig midpoint_config() {
    SimConfig c;
    c.stiff_stretch = {2.0, 2.0};
    c.stiff_bend = {0.02, 0.02};
    c.cloth_table_fric = {1.0, 1.0};
    c.cloth_cloth_fric = {1.0, 1.0};
    return c;
}

// bare state for constraint-free particle tests
ClothState free_particles(std::vector<Vec3> positions, double radius) {
    ClothState s;
    s.positions = positions;
    s.prev_positions = positions;
    s.velocities.assign(positions.size(), Vec3{0, 0, 0});
    s.inverse_masses.assign(positions.size(), 1.0);
    s.particle_radius = radius;
    s.table_fric = 1.0;
    s.cloth_fric = 1.0;
    return s;
}

double max_stretch_violation_ratio(const ClothState& s) {
    double worst = 0;
    for (const auto& c : s.stretch) {
        double len = (s.positions[c.i] - s.positions[c.j]).norm();
        worst = std::max(worst, std::abs(len - c.rest) / c.rest);
    }
    return worst;
}

double mean_stretch_violation(const ClothState& s) {
    double sum = 0;
    for (const auto& c : s.stretch)
        sum += std::abs((s.positions[c.i] - s.positions[c.j]).norm() - c.rest);
    return sum / static_cast<double>(s.stretch.size());
}

Action noop_action(const ClothState& s) {
    Action a;
    a.left_target = s.grippers[kGripperLeft].position;
    a.right_target = s.grippers[kGripperRight].position;
    a.left_closed = s.grippers[kGripperLeft].closed;
    a.right_closed = s.grippers[kGripperRight].closed;
    return a;
}

}  // namespace

TEST_SUITE_BEGIN("sim");

TEST_CASE("project_stretch matches the worked examples") {
    auto [di, dj] = project_stretch({0, 0, 0}, {3, 0, 0}, 1, 1, 2, 1);
    CHECK(di.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(di.y == 0);
    CHECK(dj.x == doctest::Approx(-0.5).epsilon(1e-12));

    auto [pi, pj] = project_stretch({0, 0, 0}, {3, 0, 0}, 0, 1, 2, 1);
    CHECK(pi.norm() == 0);
    CHECK(pj.x == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pj.y == 0);

    auto [si, sj] = project_stretch({0, 0, 0}, {2, 0, 0}, 1, 1, 2, 1);
    CHECK(si.norm() == 0);
    CHECK(sj.norm() == 0);

    auto [ci, cj] = project_stretch({1, 1, 1}, {1, 1, 1}, 1, 1, 2, 1);
    CHECK(ci.norm() == 0);
    CHECK(cj.norm() == 0);
}

TEST_CASE("project_bend pushes near vertices apart and respects k_eff") {
    auto [ri, rl] = project_bend({0, 0, 0}, {1, 0, 0}, 1, 1, 1, 1);
    CHECK(ri.norm() == 0);
    CHECK(rl.norm() == 0);

    auto [zi, zl] = project_bend({0, 0, 0}, {0.5, 0, 0}, 1, 1, 1, 0);
    CHECK(zi.norm() == 0);
    CHECK(zl.norm() == 0);

    auto [ni, nl] = project_bend({0, 0, 0}, {0.5, 0, 0}, 1, 1, 1, 0.5);
    CHECK(ni.x < 0);       // i pushed away from l
    CHECK(nl.x > 0);       // l pushed away from i
    CHECK(ni.x == doctest::Approx(-nl.x).epsilon(1e-12));
    CHECK(std::abs(ni.y) + std::abs(ni.z) == 0);
}

TEST_CASE("init_sim derives radius, constraints and substeps from the config") {
    auto mesh = hexagon_mesh(0.01);
    auto s = init_sim(mesh, midpoint_config(), 3);
    CHECK(s.particle_radius == doctest::Approx(0.015).epsilon(1e-12));
    CHECK(s.stretch.size() == 12);  // 6 spokes + 6 rim edges
    CHECK(s.bend.size() == 6);      // one per interior (spoke) edge
    CHECK(midpoint_config().substeps() == 80);
    CHECK(s.positions == mesh.vertices);

    for (const auto& c : s.stretch) CHECK(c.rest == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("init_sim rejects an invalid mesh") {
    GarmentMesh bad;
    CHECK_THROWS_AS(init_sim(bad, midpoint_config(), 1), std::invalid_argument);
}

TEST_CASE("init_sim samples material parameters inside the config intervals") {
    auto mesh = hexagon_mesh(0.01);
    SimConfig c;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto s = init_sim(mesh, c, seed);
        CHECK(s.k_stretch_eff >= 1.5 / 5.0 - 1e-12);
        CHECK(s.k_stretch_eff <= 2.5 / 5.0 + 1e-12);
        // bend factor is the per-iteration equivalent of a sample in [0.015, 0.025]
        CHECK(s.k_bend_eff >= 1.0 - std::pow(1.0 - 0.015, 1.0 / 20) - 1e-12);
        CHECK(s.k_bend_eff <= 1.0 - std::pow(1.0 - 0.025, 1.0 / 20) + 1e-12);
        CHECK(c.cloth_table_fric.contains(s.table_fric));
        CHECK(c.cloth_cloth_fric.contains(s.cloth_fric));
    }
}

TEST_CASE("collide_table projects penetrating particles and applies friction") {
    SimConfig c = midpoint_config();
    c.table_height = 0.0;

    auto s = free_particles({{0.2, 0.1, -0.01}}, 0.015);
    collide_table(s, c);
    CHECK(s.positions[0].z == doctest::Approx(0.015).epsilon(1e-12));

    // resting particle with zero tangential motion stays put
    auto r = free_particles({{0.2, 0.1, 0.015}}, 0.015);
    collide_table(r, c);
    CHECK(r.positions[0].x == 0.2);
    CHECK(r.positions[0].y == 0.1);
    CHECK(r.positions[0].z == 0.015);

    // higher friction never allows more slide
    auto slide = [&](double fric) {
        auto t = free_particles({{0.0, 0.0, 0.0}}, 0.015);
        t.prev_positions[0] = {-0.004, 0, 0.016};
        t.table_fric = fric;
        collide_table(t, c);
        return t.positions[0].x - t.prev_positions[0].x;
    };
    CHECK(slide(1.25) <= slide(0.75) + 1e-15);
}

TEST_CASE("self_collide separates close pairs symmetrically") {
    double r = 0.01;

    auto boundary = free_particles({{0, 0, 0}, {2 * r, 0, 0}}, r);
    self_collide(boundary, midpoint_config());
    CHECK(boundary.positions[0].x == 0);
    CHECK(boundary.positions[1].x == 2 * r);

    auto close_pair = free_particles({{0, 0, 0}, {r, 0, 0}}, r);
    self_collide(close_pair, midpoint_config());
    CHECK(close_pair.positions[0].x == doctest::Approx(-r / 2).epsilon(1e-12));
    CHECK(close_pair.positions[1].x == doctest::Approx(1.5 * r).epsilon(1e-12));
}

TEST_CASE("self_collide spatial hash matches the all-pairs oracle") {
    Rng rng(404);
    std::vector<Vec3> pts;
    for (int i = 0; i < 500; ++i)
        pts.push_back({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                       rng.uniform(0.0, 0.05)});
    double radius = 0.008;

    auto hashed = free_particles(pts, radius);
    self_collide(hashed, midpoint_config());

    // oracle: same projection math over brute-force pairs
    auto brute = free_particles(pts, radius);
    const double dist = 2 * radius;
    std::vector<Vec3> delta(pts.size(), Vec3{0, 0, 0});
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
        for (int j = i + 1; j < static_cast<int>(pts.size()); ++j) {
            Vec3 d = brute.positions[i] - brute.positions[j];
            double len = d.norm();
            if (len <= 0 || len >= dist) continue;
            Vec3 n = d * (1.0 / len);
            double pen = dist - len;
            delta[i] += n * (pen * 0.5);
            delta[j] -= n * (pen * 0.5);
        }
    for (std::size_t i = 0; i < pts.size(); ++i) brute.positions[i] += delta[i];

    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(hashed.positions[i].x == brute.positions[i].x);
        CHECK(hashed.positions[i].y == brute.positions[i].y);
        CHECK(hashed.positions[i].z == brute.positions[i].z);
    }
}

TEST_CASE("grasp_close attaches exactly the particles inside the threshold") {
    SimConfig c = midpoint_config();
    auto s = free_particles({{0.03, 0, 0}, {0.01, 0, 0}, {0, 0.015, 0},
                             {0, 0, 0.019}, {0.05, 0, 0}},
                            0.01);
    s.grippers[kGripperLeft].position = {0, 0, 0};

    grasp_close(s, kGripperLeft, c);
    std::set<int> attached;
    for (const auto& a : s.attachments[kGripperLeft]) attached.insert(a.particle);
    CHECK(attached == std::set<int>{1, 2, 3});
    for (int p : attached) CHECK(s.inverse_masses[p] == 0);

    grasp_open(s, kGripperLeft);
    CHECK(s.attachments[kGripperLeft].empty());
    for (int p : {1, 2, 3}) CHECK(s.inverse_masses[p] == 1.0);
}

TEST_CASE("grasp_close with nothing in range attaches nothing") {
    SimConfig c = midpoint_config();  // grasp_th = 0.02
    auto s = free_particles({{0.03, 0, 0}}, 0.01);
    s.grippers[kGripperRight].position = {0, 0, 0};
    grasp_close(s, kGripperRight, c);
    CHECK(s.attachments[kGripperRight].empty());
}

TEST_CASE("a no-op action leaves resting cloth still") {
    SimConfig c = midpoint_config();
    auto mesh = hexagon_mesh(0.01);
    auto s = init_sim(mesh, c, 7);
    for (auto& p : s.positions) p.z = c.table_height + s.particle_radius;
    s.prev_positions = s.positions;

    auto before = s.positions;
    apply_action(s, noop_action(s), c);
    double worst = 0;
    for (std::size_t i = 0; i < s.positions.size(); ++i)
        worst = std::max(worst, (s.positions[i] - before[i]).norm());
    CHECK(worst < s.particle_radius / 10);
    CHECK(s.step_count == 1);
}

TEST_CASE("gravity pulls an unsupported cloth downward") {
    SimConfig c = midpoint_config();
    auto mesh = hexagon_mesh(0.01);
    auto s = init_sim(mesh, c, 7);
    for (auto& p : s.positions) p.z += 0.5;
    s.prev_positions = s.positions;

    double before = s.center_of_mass().z;
    apply_action(s, noop_action(s), c);
    CHECK(s.center_of_mass().z < before);
}

TEST_CASE("free fall matches the semi-implicit closed form") {
    SimConfig c = midpoint_config();
    c.enable_table_collision = false;
    c.enable_self_collision = false;
    c.max_speed_factor = 0;

    auto s = free_particles({{0, 0, 1.0}}, 0.01);
    s.grippers[0].position = {0, 0, 2};
    s.grippers[1].position = {0, 0, 2};
    apply_action(s, noop_action(s), c);

    double v = 0, z = 1.0;
    for (int k = 0; k < 80; ++k) {
        v = (v - c.gravity * c.physics_dt) * c.velocity_damping;
        z += v * c.physics_dt;
    }
    CHECK(std::abs(s.positions[0].z - z) < 1e-9);
    CHECK(std::abs(s.velocities[0].z - v) < 1e-9);
}

TEST_CASE("attached particles track the gripper exactly") {
    SimConfig c = midpoint_config();
    auto mesh = tshirt_fixture();
    auto s = init_sim(mesh, c, 11);
    for (auto& p : s.positions) p.z += s.particle_radius;
    s.prev_positions = s.positions;

    // settle, then grab whatever sits under the left gripper
    apply_action(s, noop_action(s), c);
    int target = 0;
    s.grippers[kGripperLeft].position = s.positions[target] + Vec3{0, 0, 0.005};

    Action grab = noop_action(s);
    grab.left_closed = true;
    grab.left_target = s.grippers[kGripperLeft].position + Vec3{0.05, 0.02, 0.08};
    apply_action(s, grab, c);

    REQUIRE(!s.attachments[kGripperLeft].empty());
    for (const auto& a : s.attachments[kGripperLeft]) {
        Vec3 expect = s.grippers[kGripperLeft].position + a.offset;
        CHECK((s.positions[a.particle] - expect).norm() < 1e-9);
    }
    CHECK((s.grippers[kGripperLeft].position - grab.left_target).norm() < 1e-12);

    Action drop = noop_action(s);
    drop.left_closed = false;
    apply_action(s, drop, c);
    CHECK(s.attachments[kGripperLeft].empty());
}

TEST_CASE("no particle ends an action step below the table") {
    SimConfig c = midpoint_config();
    auto mesh = tshirt_fixture();
    auto s = init_sim(mesh, c, 13);
    for (int step = 0; step < 3; ++step) {
        apply_action(s, noop_action(s), c);
        double min_z = 1e9;
        for (const auto& p : s.positions) min_z = std::min(min_z, p.z);
        CHECK(min_z >= c.table_height - 1e-6);
    }
}

TEST_CASE("solver iterations monotonically improve constraint satisfaction") {
    auto run = [&](int iters) {
        SimConfig c = midpoint_config();
        c.num_solver_iter = iters;
        c.enable_self_collision = false;
        auto mesh = hexagon_mesh(0.02);
        auto s = init_sim(mesh, c, 5);
        // hang from the rim: pin one vertex, let the rest dangle
        s.inverse_masses[1] = 0;
        for (auto& p : s.positions) p.z += 0.3;
        s.prev_positions = s.positions;
        for (int k = 0; k < 3; ++k) apply_action(s, noop_action(s), c);
        return mean_stretch_violation(s);
    };
    double v1 = run(1), v5 = run(5), v20 = run(20);
    CHECK(v5 <= v1 + 1e-12);
    CHECK(v20 <= v5 + 1e-12);
}

TEST_CASE("identical inputs give bit-identical states") {
    SimConfig c = midpoint_config();
    auto mesh = tshirt_fixture();

    auto run = [&] {
        auto s = init_sim(mesh, c, 17);
        auto act = noop_action(s);
        apply_action(s, act, c);
        act.left_closed = true;
        act.left_target = act.left_target + Vec3{0.02, -0.01, 0.0};
        apply_action(s, act, c);
        return s;
    };
    auto a = run(), b = run();
    REQUIRE(a.positions.size() == b.positions.size());
    CHECK(std::memcmp(a.positions.data(), b.positions.data(),
                      a.positions.size() * sizeof(Vec3)) == 0);
    CHECK(std::memcmp(a.velocities.data(), b.velocities.data(),
                      b.velocities.size() * sizeof(Vec3)) == 0);
}

TEST_CASE("randomize_initial_state is deterministic and settles cleanly") {
    SimConfig c = midpoint_config();
    auto mesh = tshirt_fixture();
    auto base = init_sim(mesh, c, 19);

    auto a = randomize_initial_state(base, c, 99);
    auto b = randomize_initial_state(base, c, 99);
    CHECK(std::memcmp(a.positions.data(), b.positions.data(),
                      a.positions.size() * sizeof(Vec3)) == 0);

    double min_z = 1e9;
    for (const auto& p : a.positions) min_z = std::min(min_z, p.z);
    CHECK(min_z >= c.table_height - 1e-6);
    CHECK(max_stretch_violation_ratio(a) < 0.10);
    CHECK(a.step_count == 0);

    auto other = randomize_initial_state(base, c, 100);
    CHECK(std::memcmp(a.positions.data(), other.positions.data(),
                      a.positions.size() * sizeof(Vec3)) != 0);
}

TEST_CASE("zero-angle rotation is the identity transform") {
    SimConfig c = midpoint_config();
    auto mesh = hexagon_mesh(0.01);
    auto s = init_sim(mesh, c, 23);
    auto before = s.positions;
    rotate_state_z(s, 0.0);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK((s.positions[i] - before[i]).norm() == 0);
}

TEST_CASE("keypoints read current particle positions") {
    SimConfig c = midpoint_config();
    auto mesh = tshirt_fixture();
    auto s = init_sim(mesh, c, 29);

    auto kp = keypoint_positions(s, mesh);
    REQUIRE(!kp.empty());
    for (const auto& [name, pos] : kp) {
        Vec3 v = mesh.vertices[mesh.keypoint_vertices.at(name)];
        CHECK((pos - v).norm() == 0);
    }

    double theta = 0.7;
    rotate_state_z(s, theta);
    auto rotated = keypoint_positions(s, mesh);
    for (const auto& [name, pos] : kp) {
        Vec3 expect{std::cos(theta) * pos.x - std::sin(theta) * pos.y,
                    std::sin(theta) * pos.x + std::cos(theta) * pos.y, pos.z};
        CHECK((rotated[name] - expect).norm() < 1e-12);
    }

    CHECK_THROWS_AS(keypoint_position(s, mesh, "no_such_keypoint"), std::out_of_range);
}

TEST_CASE("flip swaps the layers top to bottom") {
    SimConfig c = midpoint_config();
    auto mesh = tshirt_fixture();
    auto s = init_sim(mesh, c, 31);
    double front_z_before = 0, back_z_before = 0;
    int nf = 0, nb = 0;
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
        if (mesh.layer_of_vertex[i] == Layer::Front) front_z_before += s.positions[i].z, ++nf;
        else back_z_before += s.positions[i].z, ++nb;
    }
    flip_state(s);
    double front_z = 0, back_z = 0;
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
        if (mesh.layer_of_vertex[i] == Layer::Front) front_z += s.positions[i].z;
        else back_z += s.positions[i].z;
    }
    CHECK(front_z_before / nf > back_z_before / nb);
    CHECK(front_z / nf < back_z / nb);
}

TEST_CASE("action serialization round-trips through 8 floats") {
    Action a;
    a.left_target = {0.1, -0.2, 0.3};
    a.right_target = {-0.4, 0.5, 0.05};
    a.left_closed = true;
    a.right_closed = false;
    auto v = a.serialize();
    CHECK(v[3] == 1.0f);
    CHECK(v[7] == 0.0f);
    Action b = Action::deserialize(v);
    CHECK(b.left_closed);
    CHECK(!b.right_closed);
    CHECK((b.left_target - Vec3{double(float(0.1)), double(float(-0.2)),
                                double(float(0.3))}).norm() == 0);
}

TEST_CASE("apply_action rejects non-finite targets") {
    SimConfig c = midpoint_config();
    auto mesh = hexagon_mesh(0.01);
    auto s = init_sim(mesh, c, 37);
    Action a = noop_action(s);
    a.left_target.z = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(apply_action(s, a, c), std::invalid_argument);
}

TEST_CASE("sim config round-trips through json and validates") {
    SimConfig c;
    c.step_dt = 0.1;
    c.physics_dt = 0.0025;
    c.num_solver_iter = 10;
    c.stiff_stretch = {1.7, 2.2};
    auto text = sim_config_to_json(c);
    auto back = sim_config_from_json(text);
    CHECK(back.step_dt == c.step_dt);
    CHECK(back.physics_dt == c.physics_dt);
    CHECK(back.num_solver_iter == 10);
    CHECK(back.stiff_stretch.lo == 1.7);
    CHECK(back.stiff_stretch.hi == 2.2);
    CHECK(back.substeps() == 40);

    CHECK_THROWS_AS(sim_config_from_json(R"({"step_dt": 0.2, "physics_dt": 0.003})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(sim_config_from_json(R"({"num_solver_iter": 0})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(sim_config_from_json(R"({"stiff_stretch": [2.5, 1.5]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(sim_config_from_json(R"({"grasp_th": -1})"), std::invalid_argument);
}

TEST_SUITE_END();
