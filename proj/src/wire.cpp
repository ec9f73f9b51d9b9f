#include "tilefuse/wire.hpp"

#include <cmath>
#include <cstring>

namespace tilefuse {
namespace wire {

namespace {

// The protocol is explicitly little-endian; this codec assumes an LE host
// with IEEE-754 floats, which covers every platform the engine targets.
void put_f32_array(std::vector<uint8_t>& out, const float* v, size_t n) {
    const size_t off = out.size();
    out.resize(off + n * 4);
    std::memcpy(out.data() + off, v, n * 4);
}

void header(std::vector<uint8_t>& out, uint32_t h, uint32_t w) {
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u32(out, h);
    put_u32(out, w);
}

}  // namespace

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    const size_t off = out.size();
    out.resize(off + 4);
    std::memcpy(out.data() + off, &v, 4);
}

uint32_t get_u32(const uint8_t* p) {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

void put_f64(std::vector<uint8_t>& out, double v) {
    const size_t off = out.size();
    out.resize(off + 8);
    std::memcpy(out.data() + off, &v, 8);
}

double get_f64(const uint8_t* p) {
    double v;
    std::memcpy(&v, p, 8);
    return v;
}

std::vector<uint8_t> encode_request(uint32_t height, uint32_t width,
                                    uint32_t channels, double gamma,
                                    const float* condition,
                                    const float* latent) {
    const size_t plane = static_cast<size_t>(height) * width * channels;
    std::vector<uint8_t> out;
    out.reserve(kHeaderBytes + 12 + plane * 8);
    header(out, height, width);
    put_u32(out, channels);
    put_f64(out, gamma);
    put_f32_array(out, condition, plane);
    put_f32_array(out, latent, plane);
    return out;
}

Request decode_request(const uint8_t* data, size_t size) {
    if (size < kHeaderBytes + 12)
        throw ProtocolError("request truncated: " + std::to_string(size) +
                            " bytes, need at least " +
                            std::to_string(kHeaderBytes + 12));
    if (std::memcmp(data, kMagic, 4) != 0)
        throw ProtocolError("bad request magic");
    const uint32_t version = get_u32(data + 4);
    if (version != kVersion)
        throw ProtocolError("unsupported protocol version " +
                            std::to_string(version) + ", expected " +
                            std::to_string(kVersion));
    Request r;
    r.height = get_u32(data + 8);
    r.width = get_u32(data + 12);
    r.channels = get_u32(data + 16);
    r.gamma = get_f64(data + 20);
    if (r.height == 0 || r.width == 0 || r.channels == 0)
        throw ProtocolError("request with zero dimension");
    const size_t plane = static_cast<size_t>(r.height) * r.width * r.channels;
    const size_t want = kHeaderBytes + 12 + plane * 8;
    if (size != want)
        throw ProtocolError("request size " + std::to_string(size) +
                            " does not match declared shape (expected " +
                            std::to_string(want) + ")");
    r.condition = GridF(r.height, r.width, r.channels);
    r.latent = GridF(r.height, r.width, r.channels);
    std::memcpy(r.condition.data(), data + 28, plane * 4);
    std::memcpy(r.latent.data(), data + 28 + plane * 4, plane * 4);
    return r;
}

std::vector<uint8_t> encode_response(uint32_t height, uint32_t width,
                                     const float* epsilon, size_t count) {
    std::vector<uint8_t> out;
    out.reserve(kHeaderBytes + count * 4);
    header(out, height, width);
    put_f32_array(out, epsilon, count);
    return out;
}

size_t parse_response_header(const uint8_t header[kHeaderBytes],
                             uint32_t height, uint32_t width,
                             uint32_t channels) {
    if (std::memcmp(header, kMagic, 4) != 0)
        throw ProtocolError("bad response magic");
    const uint32_t version = get_u32(header + 4);
    if (version != kVersion)
        throw ProtocolError("unsupported response version " +
                            std::to_string(version));
    const uint32_t h = get_u32(header + 8);
    const uint32_t w = get_u32(header + 12);
    if (h != height || w != width)
        throw ProtocolError("response shape " + std::to_string(h) + "x" +
                            std::to_string(w) + " does not match request " +
                            std::to_string(height) + "x" +
                            std::to_string(width));
    return static_cast<size_t>(height) * width * channels;
}

}  // namespace wire
}  // namespace tilefuse
