#include "tilefuse/noise.hpp"

#include <cmath>

namespace tilefuse {

namespace {

constexpr uint64_t kPatchStream = 0x7061746368u;   // noise added each step
constexpr uint64_t kCanvasStream = 0x696e6974u;    // initial latent field

inline uint64_t mix64(uint64_t x) {
    // splitmix64 finaliser; full avalanche per absorbed word
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline double normal_from_words(uint64_t* words, int count) {
    // Box-Muller on two decorrelated uniforms; the last word selects the pair
    words[count] = 0;
    const double u1 = hash_to_unit(hash_words(words, count + 1));
    words[count] = 1;
    const double u2 = hash_to_unit(hash_words(words, count + 1));
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

uint64_t hash_words(const uint64_t* words, int count) {
    uint64_t h = 0x243f6a8885a308d3ull;  // arbitrary non-zero start
    for (int i = 0; i < count; ++i) h = mix64(h ^ words[i]);
    return h;
}

double hash_to_unit(uint64_t h) {
    // top 53 bits, shifted into (0, 1]
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

double NoiseSource::patch_normal(int patch_index, int timestep,
                                 long index) const {
    uint64_t words[6] = {seed_, kPatchStream,
                         static_cast<uint64_t>(patch_index),
                         static_cast<uint64_t>(timestep),
                         static_cast<uint64_t>(index), 0};
    return normal_from_words(words, 5);
}

double NoiseSource::canvas_normal(int row, int col, int channel) const {
    uint64_t words[6] = {seed_, kCanvasStream, static_cast<uint64_t>(row),
                         static_cast<uint64_t>(col),
                         static_cast<uint64_t>(channel), 0};
    return normal_from_words(words, 5);
}

}  // namespace tilefuse
