#include "foldgen/png_io.hpp"

#include <zlib.h>

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace foldgen {

namespace {

constexpr std::array<std::uint8_t, 8> kSignature = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void write_chunk(std::vector<std::uint8_t>& out, const char type[4],
                 const std::uint8_t* data, std::size_t len) {
    put_u32be(out, static_cast<std::uint32_t>(len));
    std::size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, out.data() + type_at, static_cast<uInt>(4 + len)));
    put_u32be(out, crc);
}

std::uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
    if (pb <= pc) return static_cast<std::uint8_t>(b);
    return static_cast<std::uint8_t>(c);
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.width <= 0 || img.height <= 0)
        throw std::invalid_argument("encode_png: empty image");
    if (img.channels != 1 && img.channels != 3 && img.channels != 4)
        throw std::invalid_argument("encode_png: unsupported channel count");
    const std::size_t row = static_cast<std::size_t>(img.width) * img.channels;
    if (img.pixels.size() != row * img.height)
        throw std::invalid_argument("encode_png: pixel buffer size mismatch");

    std::vector<std::uint8_t> raw;
    raw.reserve((row + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        const std::uint8_t* src = img.pixels.data() + row * y;
        raw.insert(raw.end(), src, src + row);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> z(bound);
    if (compress2(z.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                  Z_DEFAULT_COMPRESSION) != Z_OK)
        throw std::runtime_error("encode_png: deflate failed");
    z.resize(bound);

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kSignature.begin(), kSignature.end());
    std::uint8_t ihdr[13];
    ihdr[0] = static_cast<std::uint8_t>(img.width >> 24);
    ihdr[1] = static_cast<std::uint8_t>(img.width >> 16);
    ihdr[2] = static_cast<std::uint8_t>(img.width >> 8);
    ihdr[3] = static_cast<std::uint8_t>(img.width);
    ihdr[4] = static_cast<std::uint8_t>(img.height >> 24);
    ihdr[5] = static_cast<std::uint8_t>(img.height >> 16);
    ihdr[6] = static_cast<std::uint8_t>(img.height >> 8);
    ihdr[7] = static_cast<std::uint8_t>(img.height);
    ihdr[8] = 8;
    ihdr[9] = img.channels == 1 ? 0 : (img.channels == 3 ? 2 : 6);
    ihdr[10] = 0;
    ihdr[11] = 0;
    ihdr[12] = 0;
    write_chunk(out, "IHDR", ihdr, sizeof ihdr);
    write_chunk(out, "IDAT", z.data(), z.size());
    write_chunk(out, "IEND", nullptr, 0);
    return out;
}

Image decode_png(const std::uint8_t* data, std::size_t size) {
    if (size < 8 || std::memcmp(data, kSignature.data(), 8) != 0)
        throw std::runtime_error("decode_png: bad signature");

    Image img;
    int color_type = -1;
    std::vector<std::uint8_t> idat;
    bool saw_ihdr = false, saw_iend = false;

    std::size_t pos = 8;
    while (pos + 12 <= size && !saw_iend) {
        std::uint32_t len = get_u32be(data + pos);
        if (pos + 12 + len > size) throw std::runtime_error("decode_png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(data + pos + 4);
        const std::uint8_t* body = data + pos + 8;
        std::uint32_t want = get_u32be(data + pos + 8 + len);
        std::uint32_t got = static_cast<std::uint32_t>(
            crc32(0, data + pos + 4, static_cast<uInt>(4 + len)));
        if (want != got) throw std::runtime_error("decode_png: chunk crc mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("decode_png: bad IHDR");
            img.width = static_cast<int>(get_u32be(body));
            img.height = static_cast<int>(get_u32be(body + 4));
            int bit_depth = body[8];
            color_type = body[9];
            int interlace = body[12];
            if (img.width <= 0 || img.height <= 0)
                throw std::runtime_error("decode_png: bad dimensions");
            if (bit_depth != 8)
                throw std::runtime_error("decode_png: unsupported bit depth " +
                                         std::to_string(bit_depth));
            if (color_type != 0 && color_type != 2 && color_type != 6)
                throw std::runtime_error("decode_png: unsupported color type " +
                                         std::to_string(color_type));
            if (interlace != 0) throw std::runtime_error("decode_png: interlaced");
            img.channels = color_type == 0 ? 1 : (color_type == 2 ? 3 : 4);
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            if (!saw_ihdr) throw std::runtime_error("decode_png: IDAT before IHDR");
            idat.insert(idat.end(), body, body + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        // ancillary chunks skipped
        pos += 12 + len;
    }
    if (!saw_ihdr) throw std::runtime_error("decode_png: missing IHDR");
    if (!saw_iend) throw std::runtime_error("decode_png: missing IEND");
    if (idat.empty()) throw std::runtime_error("decode_png: missing IDAT");

    const std::size_t row = static_cast<std::size_t>(img.width) * img.channels;
    const std::size_t raw_size = (row + 1) * img.height;
    std::vector<std::uint8_t> raw(raw_size);
    uLongf dest_len = static_cast<uLongf>(raw_size);
    int rc = uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size()));
    if (rc != Z_OK || dest_len != raw_size)
        throw std::runtime_error("decode_png: inflate failed");

    img.pixels.assign(row * img.height, 0);
    const int bpp = img.channels;
    std::vector<std::uint8_t> prior(row, 0);
    for (int y = 0; y < img.height; ++y) {
        const std::uint8_t* src = raw.data() + (row + 1) * y;
        std::uint8_t filter = src[0];
        std::uint8_t* dst = img.pixels.data() + row * y;
        switch (filter) {
            case 0:
                std::memcpy(dst, src + 1, row);
                break;
            case 1:
                for (std::size_t x = 0; x < row; ++x) {
                    int left = x >= static_cast<std::size_t>(bpp) ? dst[x - bpp] : 0;
                    dst[x] = static_cast<std::uint8_t>(src[1 + x] + left);
                }
                break;
            case 2:
                for (std::size_t x = 0; x < row; ++x)
                    dst[x] = static_cast<std::uint8_t>(src[1 + x] + prior[x]);
                break;
            case 3:
                for (std::size_t x = 0; x < row; ++x) {
                    int left = x >= static_cast<std::size_t>(bpp) ? dst[x - bpp] : 0;
                    dst[x] = static_cast<std::uint8_t>(src[1 + x] + ((left + prior[x]) >> 1));
                }
                break;
            case 4:
                for (std::size_t x = 0; x < row; ++x) {
                    int left = x >= static_cast<std::size_t>(bpp) ? dst[x - bpp] : 0;
                    int up_left = x >= static_cast<std::size_t>(bpp) ? prior[x - bpp] : 0;
                    dst[x] = static_cast<std::uint8_t>(src[1 + x] +
                                                       paeth(left, prior[x], up_left));
                }
                break;
            default:
                throw std::runtime_error("decode_png: bad filter type " +
                                         std::to_string(filter));
        }
        std::memcpy(prior.data(), dst, row);
    }
    return img;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
    return decode_png(bytes.data(), bytes.size());
}

void save_png(const std::filesystem::path& path, const Image& img) {
    auto bytes = encode_png(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_png: cannot open " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("save_png: write failed for " + path.string());
}

Image load_png(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_png: cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

}  // namespace foldgen
