#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "foldgen/garment.hpp"
#include "foldgen/png_io.hpp"

namespace foldgen {

enum class TextureStyle { Solid, Stripes, Checker, Noise };
enum class TextureProvenance { Procedural, ExternalService };

const char* texture_style_name(TextureStyle s);
TextureStyle texture_style_from_name(const std::string& name);

struct TextureImage {
    Image image;
    TextureProvenance provenance = TextureProvenance::Procedural;
    std::string prompt;
};

struct GenerativeClientConfig {
    std::string base_url;
    double timeout = 5.0;  // seconds
    int retries = 2;
    std::string model_name = "default";
};

struct FilterDecision {
    int chosen_index = 0;
    std::vector<double> scores;
    std::string scorer_id;
};

struct TextureScorer {
    std::string id;
    std::function<double(const TextureImage&)> fn;
};

struct TextureTimeout : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TextureBadResponse : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TextureServiceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic prompt naming the garment category and a sampled style.
std::string compose_prompt(Category category, std::uint64_t seed);

// Deterministic full-coverage RGB texture. size >= 8.
TextureImage procedural_texture(TextureStyle style, std::uint64_t seed, int size);

// Highest score wins, ties to the lowest index. Throws on an empty list.
FilterDecision filter_textures(const std::vector<TextureImage>& renders,
                               const TextureScorer& scorer);

// Luminance-histogram contrast scored against a preferred band.
TextureScorer builtin_contrast_scorer();

// POST {prompt, width, height} to <base_url>/generate, PNG bytes back.
// Connection failures and timeouts retry with exponential backoff, as do
// HTTP >= 500. Throws TextureTimeout / TextureServiceError once attempts
// run out and TextureBadResponse for a payload that does not decode.
TextureImage request_texture(const GenerativeClientConfig& config, const std::string& prompt,
                             int width = 256, int height = 256);

// Local stand-in for the generative service, same wire contract. Serves a
// procedural texture derived from the prompt unless a canned response is
// installed. Listens on 127.0.0.1 at an ephemeral port.
class MockTextureServer {
  public:
    MockTextureServer();
    ~MockTextureServer();
    MockTextureServer(const MockTextureServer&) = delete;
    MockTextureServer& operator=(const MockTextureServer&) = delete;

    void start();
    void stop();
    int port() const;
    std::string base_url() const;
    int request_count() const;

    // canned behaviors for exercising client error handling
    void set_fixed_png(std::vector<std::uint8_t> bytes);
    void set_text_response(std::string body);
    void fail_next(int count);  // HTTP 503 for the next count requests

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace foldgen
