#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "foldgen/garment.hpp"
#include "json.hpp"

namespace foldgen {

namespace {

inline std::uint64_t ekey(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

std::vector<std::uint64_t> unique_edges(const std::vector<std::array<int, 3>>& faces) {
    std::vector<std::uint64_t> es;
    es.reserve(faces.size() * 3);
    for (const auto& f : faces)
        for (int e = 0; e < 3; ++e) es.push_back(ekey(f[e], f[(e + 1) % 3]));
    std::sort(es.begin(), es.end());
    es.erase(std::unique(es.begin(), es.end()), es.end());
    return es;
}

}  // namespace

double GarmentMesh::mean_edge_length() const {
    auto es = unique_edges(faces);
    if (es.empty()) return 0.0;
    double sum = 0;
    for (std::uint64_t k : es) {
        int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
        sum += (vertices[a] - vertices[b]).norm();
    }
    return sum / static_cast<double>(es.size());
}

GarmentMesh lift_and_stitch(const PanelMesh& panel, double layer_gap) {
    if (layer_gap < 0) throw std::invalid_argument("lift_and_stitch: negative gap");
    const int n = static_cast<int>(panel.vertices.size());
    const int nb = panel.boundary_count;
    if (nb < 3 || nb > n) throw std::invalid_argument("lift_and_stitch: bad panel");

    // a boundary vertex is stitched unless both incident boundary edges
    // belong to openings; stitched vertices are shared between layers
    std::vector<bool> merged(n, false);
    for (int i = 0; i < nb; ++i) {
        bool prev_open = panel.boundary_edge_opening[(i + nb - 1) % nb];
        bool cur_open = panel.boundary_edge_opening[i];
        merged[i] = !(prev_open && cur_open);
    }

    GarmentMesh mesh;
    const double hz = layer_gap * 0.5;
    mesh.vertices.reserve(2 * n);
    mesh.layer_of_vertex.reserve(2 * n);
    for (int i = 0; i < n; ++i) {
        double z = (i < nb && merged[i]) ? 0.0 : hz;
        mesh.vertices.push_back({panel.vertices[i].x, panel.vertices[i].y, z});
        mesh.layer_of_vertex.push_back(Layer::Front);
    }
    std::vector<int> back_index(n, -1);
    for (int i = 0; i < n; ++i) {
        if (i < nb && merged[i]) {
            back_index[i] = i;
            continue;
        }
        back_index[i] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back({panel.vertices[i].x, panel.vertices[i].y, -hz});
        mesh.layer_of_vertex.push_back(Layer::Back);
    }

    mesh.faces.reserve(2 * panel.faces.size());
    for (const auto& f : panel.faces) mesh.faces.push_back(f);
    for (const auto& f : panel.faces)
        mesh.faces.push_back({back_index[f[0]], back_index[f[2]], back_index[f[1]]});

    mesh.uv.assign(mesh.vertices.size(), Vec2{0, 0});
    return mesh;
}

void assign_uv(GarmentMesh& mesh) {
    if (mesh.vertices.empty()) return;
    Vec2 lo{mesh.vertices[0].x, mesh.vertices[0].y}, hi = lo;
    for (const auto& v : mesh.vertices) {
        lo.x = std::min(lo.x, v.x);
        lo.y = std::min(lo.y, v.y);
        hi.x = std::max(hi.x, v.x);
        hi.y = std::max(hi.y, v.y);
    }
    double sx = hi.x - lo.x, sy = hi.y - lo.y;
    if (sx <= 0) sx = 1.0;
    if (sy <= 0) sy = 1.0;
    mesh.uv.resize(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        double u = (mesh.vertices[i].x - lo.x) / sx * 0.5;
        double v = (mesh.vertices[i].y - lo.y) / sy;
        if (mesh.layer_of_vertex[i] == Layer::Back) u += 0.5;
        mesh.uv[i] = {u, v};
    }
}

void annotate_keypoints(GarmentMesh& mesh, const TemplateInstance& inst) {
    mesh.category = inst.category;
    mesh.seed = inst.seed;
    mesh.scale = inst.scale;
    double mel = mesh.mean_edge_length();
    for (const auto& [name, p] : inst.keypoint_xy) {
        int best = -1;
        double best_d = 1e300;
        for (size_t i = 0; i < mesh.vertices.size(); ++i) {
            if (mesh.layer_of_vertex[i] != Layer::Front) continue;
            double dx = mesh.vertices[i].x - p.x, dy = mesh.vertices[i].y - p.y;
            double d = dx * dx + dy * dy;
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        if (best < 0 || std::sqrt(best_d) > mel)
            throw std::runtime_error("annotate_keypoints: no vertex near keypoint " + name);
        mesh.keypoint_vertices[name] = best;

        // back twin: the Back-layer vertex at the same planar position, or
        // the vertex itself when it sits on a stitched seam
        int back = best;
        for (size_t i = 0; i < mesh.vertices.size(); ++i) {
            if (mesh.layer_of_vertex[i] != Layer::Back) continue;
            double dx = mesh.vertices[i].x - mesh.vertices[best].x;
            double dy = mesh.vertices[i].y - mesh.vertices[best].y;
            if (dx * dx + dy * dy < 1e-24) {
                back = static_cast<int>(i);
                break;
            }
        }
        mesh.back_keypoint_vertices[name] = back;
    }
}

MeshValidationReport validate_mesh(const GarmentMesh& mesh) {
    MeshValidationReport rep;
    rep.vertex_count = mesh.vertices.size();
    rep.face_count = mesh.faces.size();
    if (mesh.faces.empty()) {
        rep.defects.push_back("no faces");
        return rep;
    }

    const int n = static_cast<int>(mesh.vertices.size());
    for (const auto& v : mesh.vertices) {
        if (!v.finite()) {
            rep.defects.push_back("non-finite vertex");
            break;
        }
    }
    for (const auto& f : mesh.faces) {
        if (f[0] < 0 || f[0] >= n || f[1] < 0 || f[1] >= n || f[2] < 0 || f[2] >= n) {
            rep.defects.push_back("face index out of range");
            return rep;
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            rep.defects.push_back("degenerate face");
            return rep;
        }
    }
    if (mesh.layer_of_vertex.size() != mesh.vertices.size())
        rep.defects.push_back("layer table size mismatch");
    if (mesh.uv.size() != mesh.vertices.size())
        rep.defects.push_back("uv table size mismatch");

    // edge incidence
    std::map<std::uint64_t, int> edge_faces;
    for (const auto& f : mesh.faces)
        for (int e = 0; e < 3; ++e) edge_faces[ekey(f[e], f[(e + 1) % 3])]++;
    double min_e = 1e300, max_e = 0, sum_e = 0;
    std::vector<std::uint64_t> boundary_edges;
    for (const auto& [k, cnt] : edge_faces) {
        if (cnt > 2) rep.defects.push_back("non-manifold edge");
        if (cnt == 1) boundary_edges.push_back(k);
        int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
        double len = (mesh.vertices[a] - mesh.vertices[b]).norm();
        min_e = std::min(min_e, len);
        max_e = std::max(max_e, len);
        sum_e += len;
        if (len < 1e-12) rep.defects.push_back("zero-length edge");
    }
    if (!edge_faces.empty()) {
        rep.min_edge = min_e;
        rep.max_edge = max_e;
        rep.mean_edge = sum_e / static_cast<double>(edge_faces.size());
    }

    // boundary loop count via union-find on boundary edge endpoints
    std::map<int, int> parent;
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::uint64_t k : boundary_edges) {
        int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
        if (!parent.count(a)) parent[a] = a;
        if (!parent.count(b)) parent[b] = b;
        parent[find(a)] = find(b);
    }
    std::set<int> roots;
    for (auto& [v, p] : parent) roots.insert(find(v));
    rep.boundary_loop_count = roots.size();

    // a tiny boundary loop is an interior hole, not a garment opening
    std::map<int, int> loop_edges;
    for (std::uint64_t k : boundary_edges) loop_edges[find(static_cast<int>(k >> 32))]++;
    for (auto& [root, cnt] : loop_edges)
        if (cnt < 6) {
            rep.defects.push_back("non-manifold or hole (boundary loop with " +
                                  std::to_string(cnt) + " edges)");
            break;
        }

    // every boundary vertex should touch exactly two boundary edges
    std::map<int, int> bdeg;
    for (std::uint64_t k : boundary_edges) {
        bdeg[static_cast<int>(k >> 32)]++;
        bdeg[static_cast<int>(k & 0xffffffffu)]++;
    }
    for (auto& [v, d] : bdeg)
        if (d != 2) {
            rep.defects.push_back("boundary vertex with degree != 2");
            break;
        }

    for (const auto& [name, vi] : mesh.keypoint_vertices)
        if (vi < 0 || vi >= n) rep.defects.push_back("keypoint vertex out of range");

    rep.is_valid = rep.defects.empty();
    return rep;
}

// --- template json -------------------------------------------------------

KeypointTemplate template_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    KeypointTemplate t;
    auto cat = category_from_name(j.at("category").get<std::string>());
    if (!cat) throw std::invalid_argument("unknown category in template");
    t.category = *cat;
    for (const auto& k : j.at("keypoints")) {
        TemplateKeypoint kp;
        kp.name = k.at("name").get<std::string>();
        kp.nominal = {k.at("xy")[0].get<double>(), k.at("xy")[1].get<double>()};
        kp.range = {k.at("range")[0].get<double>(), k.at("range")[1].get<double>()};
        t.keypoints.push_back(std::move(kp));
    }
    for (const auto& c : j.at("curves")) {
        TemplateCurve cv;
        cv.start_kp = c.at("from").get<std::string>();
        cv.end_kp = c.at("to").get<std::string>();
        cv.label = c.at("label").get<std::string>();
        if (c.contains("controls"))
            for (const auto& o : c.at("controls"))
                cv.control_offsets.push_back({o[0].get<double>(), o[1].get<double>()});
        t.curves.push_back(std::move(cv));
    }
    for (const auto& o : j.at("openings")) t.openings.push_back(o.get<std::string>());
    t.scale_min = j.at("scale_range")[0].get<double>();
    t.scale_max = j.at("scale_range")[1].get<double>();
    t.validate();
    return t;
}

std::string template_to_json(const KeypointTemplate& t) {
    nlohmann::json j;
    j["category"] = category_name(t.category);
    j["keypoints"] = nlohmann::json::array();
    for (const auto& kp : t.keypoints)
        j["keypoints"].push_back({{"name", kp.name},
                                  {"xy", {kp.nominal.x, kp.nominal.y}},
                                  {"range", {kp.range.x, kp.range.y}}});
    j["curves"] = nlohmann::json::array();
    for (const auto& c : t.curves) {
        nlohmann::json cv = {{"from", c.start_kp}, {"to", c.end_kp}, {"label", c.label}};
        if (!c.control_offsets.empty()) {
            cv["controls"] = nlohmann::json::array();
            for (const auto& o : c.control_offsets) cv["controls"].push_back({o.x, o.y});
        }
        j["curves"].push_back(std::move(cv));
    }
    j["openings"] = t.openings;
    j["scale_range"] = {t.scale_min, t.scale_max};
    return j.dump(2) + "\n";
}

KeypointTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open template: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return template_from_json(ss.str());
}

// --- obj + metadata ------------------------------------------------------

void save_obj(const std::string& path, const GarmentMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write obj: " + path);
    out.precision(17);
    for (const auto& v : mesh.vertices)
        out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& t : mesh.uv) out << "vt " << t.x << " " << t.y << "\n";
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << "/" << f[0] + 1 << " " << f[1] + 1 << "/" << f[1] + 1
            << " " << f[2] + 1 << "/" << f[2] + 1 << "\n";
    if (!out) throw std::runtime_error("short write: " + path);
}

void save_mesh_metadata(const std::string& path, const GarmentMesh& mesh) {
    nlohmann::json j;
    j["category"] = category_name(mesh.category);
    j["seed"] = mesh.seed;
    j["scale"] = mesh.scale;
    j["texture"] = mesh.texture_ref;
    j["keypoints"] = nlohmann::json::object();
    for (const auto& [name, vi] : mesh.keypoint_vertices) {
        int back = vi;
        auto it = mesh.back_keypoint_vertices.find(name);
        if (it != mesh.back_keypoint_vertices.end()) back = it->second;
        j["keypoints"][name] = {vi, back};
    }
    std::string layers;
    layers.reserve(mesh.layer_of_vertex.size());
    for (Layer l : mesh.layer_of_vertex) layers.push_back(l == Layer::Front ? 'F' : 'B');
    j["layers"] = layers;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metadata: " + path);
    out << j.dump(2) << "\n";
}

GarmentMesh load_obj_with_metadata(const std::string& obj_path,
                                   const std::string& meta_path) {
    GarmentMesh mesh;
    std::ifstream in(obj_path);
    if (!in) throw std::runtime_error("cannot open obj: " + obj_path);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 v;
            ls >> v.x >> v.y >> v.z;
            mesh.vertices.push_back(v);
        } else if (tag == "vt") {
            Vec2 t;
            ls >> t.x >> t.y;
            mesh.uv.push_back(t);
        } else if (tag == "f") {
            std::array<int, 3> f{};
            for (int k = 0; k < 3; ++k) {
                std::string tok;
                ls >> tok;
                f[k] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
            }
            mesh.faces.push_back(f);
        }
    }

    std::ifstream min(meta_path);
    if (!min) throw std::runtime_error("cannot open metadata: " + meta_path);
    nlohmann::json j = nlohmann::json::parse(min);
    auto cat = category_from_name(j.at("category").get<std::string>());
    if (!cat) throw std::runtime_error("bad category in metadata");
    mesh.category = *cat;
    mesh.seed = j.at("seed").get<std::uint64_t>();
    mesh.scale = j.at("scale").get<double>();
    mesh.texture_ref = j.value("texture", std::string{});
    for (auto it = j.at("keypoints").begin(); it != j.at("keypoints").end(); ++it) {
        mesh.keypoint_vertices[it.key()] = it.value()[0].get<int>();
        mesh.back_keypoint_vertices[it.key()] = it.value()[1].get<int>();
    }
    std::string layers = j.at("layers").get<std::string>();
    if (layers.size() != mesh.vertices.size())
        throw std::runtime_error("metadata layer table does not match obj");
    for (char c : layers)
        mesh.layer_of_vertex.push_back(c == 'F' ? Layer::Front : Layer::Back);
    return mesh;
}

}  // namespace foldgen
