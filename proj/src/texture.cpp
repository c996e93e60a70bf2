#include "foldgen/texture.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "foldgen/rng.hpp"

namespace foldgen {

namespace {

const char* kStyleNames[] = {"solid", "stripes", "checker", "noise"};

const char* kPromptStyles[] = {"plaid",     "striped",   "floral",    "denim",
                               "heather",   "marled",    "tie-dye",   "geometric",
                               "polka dot", "camouflage", "paisley",  "herringbone"};
const char* kPromptColors[] = {"red",  "blue", "green", "yellow", "purple",
                               "orange", "teal", "gray", "navy",  "maroon"};

struct Rgb {
    std::uint8_t r, g, b;
    bool operator==(const Rgb& o) const { return r == o.r && g == o.g && b == o.b; }
};

Rgb draw_color(Rng& rng) {
    return {static_cast<std::uint8_t>(rng.uniform_int(32, 224)),
            static_cast<std::uint8_t>(rng.uniform_int(32, 224)),
            static_cast<std::uint8_t>(rng.uniform_int(32, 224))};
}

Rgb draw_distinct(Rng& rng, const Rgb& avoid) {
    for (int i = 0; i < 8; ++i) {
        Rgb c = draw_color(rng);
        if (!(c == avoid)) return c;
    }
    return {static_cast<std::uint8_t>(avoid.r ^ 0x80), avoid.g, avoid.b};
}

void put(Image& img, int x, int y, const Rgb& c) {
    img.at(x, y, 0) = c.r;
    img.at(x, y, 1) = c.g;
    img.at(x, y, 2) = c.b;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

const char* texture_style_name(TextureStyle s) {
    return kStyleNames[static_cast<int>(s)];
}

TextureStyle texture_style_from_name(const std::string& name) {
    for (int i = 0; i < 4; ++i)
        if (name == kStyleNames[i]) return static_cast<TextureStyle>(i);
    throw std::invalid_argument("unknown texture style: " + name);
}

std::string compose_prompt(Category category, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x7078, static_cast<std::uint64_t>(category)}));
    const char* style = kPromptStyles[rng.uniform_int(0, std::size(kPromptStyles) - 1)];
    const char* color = kPromptColors[rng.uniform_int(0, std::size(kPromptColors) - 1)];
    std::string out = "a flat ";
    out += color;
    out += " ";
    out += style;
    out += " fabric texture for a ";
    out += category_name(category);
    out += ", plain weave, evenly lit";
    return out;
}

TextureImage procedural_texture(TextureStyle style, std::uint64_t seed, int size) {
    if (size < 8) throw std::invalid_argument("procedural_texture: size must be >= 8");
    Rng rng(derive_seed(seed, {0x746578, static_cast<std::uint64_t>(style),
                               static_cast<std::uint64_t>(size)}));
    TextureImage tex;
    tex.provenance = TextureProvenance::Procedural;
    Image& img = tex.image;
    img.width = size;
    img.height = size;
    img.channels = 3;
    img.pixels.resize(static_cast<std::size_t>(size) * size * 3);

    switch (style) {
        case TextureStyle::Solid: {
            Rgb c = draw_color(rng);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) put(img, x, y, c);
            break;
        }
        case TextureStyle::Stripes: {
            Rgb a = draw_color(rng);
            Rgb b = draw_distinct(rng, a);
            int thick = std::max(1, size / 8);
            bool vertical = rng.bernoulli(0.5);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) {
                    int band = (vertical ? x : y) / thick;
                    put(img, x, y, band % 2 == 0 ? a : b);
                }
            break;
        }
        case TextureStyle::Checker: {
            Rgb a = draw_color(rng);
            Rgb b = draw_distinct(rng, a);
            int cell = std::max(1, size / 8);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    put(img, x, y, (x / cell + y / cell) % 2 == 0 ? a : b);
            break;
        }
        case TextureStyle::Noise: {
            Rgb a = draw_color(rng);
            Rgb b = draw_distinct(rng, a);
            constexpr int kLattice = 5;
            std::array<double, kLattice * kLattice> lattice;
            for (auto& v : lattice) v = rng.uniform();
            auto lat = [&](int i, int j) {
                return lattice[static_cast<std::size_t>(j % kLattice) * kLattice +
                               (i % kLattice)];
            };
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) {
                    double fx = static_cast<double>(x) / size * (kLattice - 1);
                    double fy = static_cast<double>(y) / size * (kLattice - 1);
                    int i = static_cast<int>(fx), j = static_cast<int>(fy);
                    double tx = smoothstep(fx - i), ty = smoothstep(fy - j);
                    double v0 = lat(i, j) + (lat(i + 1, j) - lat(i, j)) * tx;
                    double v1 = lat(i, j + 1) + (lat(i + 1, j + 1) - lat(i, j + 1)) * tx;
                    double t = v0 + (v1 - v0) * ty;
                    Rgb c{static_cast<std::uint8_t>(a.r + (b.r - a.r) * t),
                          static_cast<std::uint8_t>(a.g + (b.g - a.g) * t),
                          static_cast<std::uint8_t>(a.b + (b.b - a.b) * t)};
                    put(img, x, y, c);
                }
            break;
        }
    }
    return tex;
}

FilterDecision filter_textures(const std::vector<TextureImage>& renders,
                               const TextureScorer& scorer) {
    if (renders.empty())
        throw std::invalid_argument("filter_textures: empty candidate list");
    FilterDecision d;
    d.scorer_id = scorer.id;
    d.scores.reserve(renders.size());
    for (const auto& r : renders) d.scores.push_back(scorer.fn(r));
    d.chosen_index = 0;
    for (int i = 1; i < static_cast<int>(d.scores.size()); ++i)
        if (d.scores[i] > d.scores[d.chosen_index]) d.chosen_index = i;
    return d;
}

TextureScorer builtin_contrast_scorer() {
    TextureScorer s;
    s.id = "histogram-contrast-v1";
    s.fn = [](const TextureImage& tex) {
        const Image& img = tex.image;
        if (img.pixels.empty() || img.channels < 3) return 0.0;
        std::array<std::uint32_t, 256> hist{};
        std::size_t n = static_cast<std::size_t>(img.width) * img.height;
        for (std::size_t p = 0; p < n; ++p) {
            const std::uint8_t* px = img.pixels.data() + p * img.channels;
            int luma = (299 * px[0] + 587 * px[1] + 114 * px[2]) / 1000;
            ++hist[luma];
        }
        auto percentile = [&](double q) {
            std::size_t want = static_cast<std::size_t>(q * (n - 1));
            std::size_t seen = 0;
            for (int v = 0; v < 256; ++v) {
                seen += hist[v];
                if (seen > want) return v;
            }
            return 255;
        };
        double spread = (percentile(0.95) - percentile(0.05)) / 255.0;
        constexpr double lo = 0.15, hi = 0.70;
        if (spread < lo) return 1.0 - (lo - spread);
        if (spread > hi) return 1.0 - (spread - hi);
        return 1.0;
    };
    return s;
}

}  // namespace foldgen
