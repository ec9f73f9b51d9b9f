#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilefuse/grid.hpp"

namespace tilefuse {

/// Any violation of the denoiser wire protocol: bad magic or version, shape
/// mismatch, truncated stream, non-finite payload, dead peer, timeout.
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& what)
        : std::runtime_error(what) {}
};

namespace wire {

inline constexpr char kMagic[4] = {'T', 'F', 'D', '1'};
inline constexpr uint32_t kVersion = 1;
inline constexpr size_t kHeaderBytes = 16;  // magic, version, height, width

/// One denoise request: little-endian 16-byte header, then channel count
/// (u32), noise level gamma (f64), then condition and noisy latent as
/// row-major channel-last f32 planes of height*width*channels each.
std::vector<uint8_t> encode_request(uint32_t height, uint32_t width,
                                    uint32_t channels, double gamma,
                                    const float* condition,
                                    const float* latent);

struct Request {
    uint32_t height = 0;
    uint32_t width = 0;
    uint32_t channels = 0;
    double gamma = 0.0;
    GridF condition;
    GridF latent;
};

/// Parses a full request buffer (server side / tests). Throws ProtocolError.
Request decode_request(const uint8_t* data, size_t size);

/// Response: the same 16-byte header followed by the noise estimate as
/// row-major channel-last f32, height*width*channels values.
std::vector<uint8_t> encode_response(uint32_t height, uint32_t width,
                                     const float* epsilon, size_t count);

/// Validates a response header against the requested shape. Returns the
/// payload float count the caller must then read.
size_t parse_response_header(const uint8_t header[kHeaderBytes],
                             uint32_t height, uint32_t width,
                             uint32_t channels);

void put_u32(std::vector<uint8_t>& out, uint32_t v);
uint32_t get_u32(const uint8_t* p);
void put_f64(std::vector<uint8_t>& out, double v);
double get_f64(const uint8_t* p);

}  // namespace wire
}  // namespace tilefuse
