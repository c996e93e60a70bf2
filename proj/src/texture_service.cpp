#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "foldgen/texture.hpp"
#include "httplib.h"
#include "json.hpp"

namespace foldgen {

namespace {

using nlohmann::json;

Image to_rgb(const Image& in) {
    if (in.channels == 3) return in;
    Image out;
    out.width = in.width;
    out.height = in.height;
    out.channels = 3;
    out.pixels.resize(static_cast<std::size_t>(in.width) * in.height * 3);
    std::size_t n = static_cast<std::size_t>(in.width) * in.height;
    for (std::size_t p = 0; p < n; ++p) {
        const std::uint8_t* src = in.pixels.data() + p * in.channels;
        std::uint8_t* dst = out.pixels.data() + p * 3;
        if (in.channels == 1) {
            dst[0] = dst[1] = dst[2] = src[0];
        } else {
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
        }
    }
    return out;
}

void set_seconds(httplib::Client& cli, double seconds) {
    auto sec = static_cast<time_t>(seconds);
    auto usec = static_cast<time_t>((seconds - static_cast<double>(sec)) * 1e6);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
}

}  // namespace

TextureImage request_texture(const GenerativeClientConfig& config, const std::string& prompt,
                             int width, int height) {
    if (config.retries < 0)
        throw std::invalid_argument("request_texture: retries must be >= 0");
    if (config.timeout <= 0)
        throw std::invalid_argument("request_texture: timeout must be > 0");

    json body = {{"prompt", prompt}, {"width", width}, {"height", height}};
    const std::string payload = body.dump();
    const int attempts = config.retries + 1;

    httplib::Client cli(config.base_url);
    set_seconds(cli, config.timeout);

    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            int ms = std::min(1000, 50 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        }
        auto res = cli.Post("/generate", payload, "application/json");
        if (!res) {
            if (attempt + 1 == attempts)
                throw TextureTimeout("texture service unreachable after " +
                                     std::to_string(attempts) + " attempts");
            continue;
        }
        if (res->status >= 500) {
            if (attempt + 1 == attempts)
                throw TextureServiceError("texture service HTTP " +
                                          std::to_string(res->status) + " after " +
                                          std::to_string(attempts) + " attempts");
            continue;
        }
        if (res->status != 200)
            throw TextureServiceError("texture service HTTP " + std::to_string(res->status));

        TextureImage tex;
        try {
            tex.image = to_rgb(decode_png(
                reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size()));
        } catch (const std::exception&) {
            throw TextureBadResponse("texture service returned a non-image payload");
        }
        tex.provenance = TextureProvenance::ExternalService;
        tex.prompt = prompt;
        return tex;
    }
    throw TextureTimeout("texture service unreachable");
}

struct MockTextureServer::Impl {
    httplib::Server server;
    std::thread thread;
    int port = -1;
    std::atomic<int> requests{0};
    std::atomic<int> fail_count{0};

    std::mutex mu;
    std::vector<std::uint8_t> fixed_png;
    std::string text_body;
    bool has_fixed = false;
    bool has_text = false;
};

MockTextureServer::MockTextureServer() : impl_(std::make_unique<Impl>()) {
    impl_->server.Post("/generate", [this](const httplib::Request& req,
                                           httplib::Response& res) {
        impl_->requests.fetch_add(1);
        int pending = impl_->fail_count.load();
        while (pending > 0 &&
               !impl_->fail_count.compare_exchange_weak(pending, pending - 1)) {
        }
        if (pending > 0) {
            res.status = 503;
            return;
        }
        {
            std::lock_guard<std::mutex> lock(impl_->mu);
            if (impl_->has_text) {
                res.set_content(impl_->text_body, "text/plain");
                return;
            }
            if (impl_->has_fixed) {
                res.set_content(reinterpret_cast<const char*>(impl_->fixed_png.data()),
                                impl_->fixed_png.size(), "image/png");
                return;
            }
        }
        std::string prompt;
        int width = 256, height = 256;
        try {
            auto body = json::parse(req.body);
            prompt = body.at("prompt").get<std::string>();
            width = body.value("width", 256);
            height = body.value("height", 256);
        } catch (const std::exception&) {
            res.status = 400;
            return;
        }
        if (width <= 0 || height <= 0 || width > 4096 || height > 4096) {
            res.status = 400;
            return;
        }
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char ch : prompt) h = (h ^ ch) * 1099511628211ull;
        auto style = static_cast<TextureStyle>(h % 4);
        int size = std::max({8, width, height});
        TextureImage tex = procedural_texture(style, h, size);
        Image out;
        out.width = width;
        out.height = height;
        out.channels = 3;
        out.pixels.resize(static_cast<std::size_t>(width) * height * 3);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = tex.image.at(x, y, c);
        auto bytes = encode_png(out);
        res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                        "image/png");
    });
}

MockTextureServer::~MockTextureServer() { stop(); }

void MockTextureServer::start() {
    if (impl_->thread.joinable()) return;
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) throw std::runtime_error("mock texture server: bind failed");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    for (int i = 0; i < 2000 && !impl_->server.is_running(); ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    if (!impl_->server.is_running())
        throw std::runtime_error("mock texture server: failed to start");
}

void MockTextureServer::stop() {
    if (!impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

int MockTextureServer::port() const { return impl_->port; }

std::string MockTextureServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(impl_->port);
}

int MockTextureServer::request_count() const { return impl_->requests.load(); }

void MockTextureServer::set_fixed_png(std::vector<std::uint8_t> bytes) {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->fixed_png = std::move(bytes);
    impl_->has_fixed = true;
    impl_->has_text = false;
}

void MockTextureServer::set_text_response(std::string body) {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->text_body = std::move(body);
    impl_->has_text = true;
    impl_->has_fixed = false;
}

void MockTextureServer::fail_next(int count) { impl_->fail_count.store(count); }

}  // namespace foldgen
