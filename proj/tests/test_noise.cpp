#include "doctest.h"

#include "tilefuse/noise.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

using namespace tilefuse;

TEST_CASE("draws are pure functions of the key") {
    NoiseSource a(42), b(42), c(43);
    CHECK(a.patch_normal(3, 17, 5) == b.patch_normal(3, 17, 5));
    CHECK(a.canvas_normal(10, 20, 1) == b.canvas_normal(10, 20, 1));
    CHECK(a.patch_normal(3, 17, 5) != c.patch_normal(3, 17, 5));

    // order of evaluation is irrelevant: interleave two keys
    const double x1 = a.patch_normal(0, 1, 0);
    const double y1 = a.patch_normal(1, 1, 0);
    const double y2 = b.patch_normal(1, 1, 0);
    const double x2 = b.patch_normal(0, 1, 0);
    CHECK(x1 == x2);
    CHECK(y1 == y2);
}

TEST_CASE("distinct key coordinates decorrelate") {
    NoiseSource src(7);
    CHECK(src.patch_normal(0, 1, 0) != src.patch_normal(1, 1, 0));
    CHECK(src.patch_normal(0, 1, 0) != src.patch_normal(0, 2, 0));
    CHECK(src.patch_normal(0, 1, 0) != src.patch_normal(0, 1, 1));
    CHECK(src.canvas_normal(0, 0, 0) != src.canvas_normal(0, 1, 0));
    // patch and canvas streams use different tags
    CHECK(src.patch_normal(0, 0, 0) != src.canvas_normal(0, 0, 0));
}

TEST_CASE("patch stream has standard normal moments") {
    NoiseSource src(20250817);
    const long n = 200000;
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0;
    long inside1 = 0;
    for (long i = 0; i < n; ++i) {
        const double z = src.patch_normal(0, 1, i);
        sum += z;
        sum2 += z * z;
        sum3 += z * z * z;
        if (std::abs(z) < 1.0) ++inside1;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double skew = sum3 / n;
    // three-sigma bands for n = 2e5 draws
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(skew) < 0.05);
    // P(|Z| < 1) = 0.6827
    CHECK(static_cast<double>(inside1) / n == doctest::Approx(0.6827).epsilon(0.01));
}

TEST_CASE("canvas stream has standard normal moments") {
    NoiseSource src(99);
    double sum = 0.0, sum2 = 0.0;
    long n = 0;
    for (int r = 0; r < 300; ++r)
        for (int c = 0; c < 300; ++c) {
            const double z = src.canvas_normal(r, c, 0);
            sum += z;
            sum2 += z * z;
            ++n;
        }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(sum2 / n - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("fill_canvas_window agrees with per-pixel draws") {
    NoiseSource src(5);
    GridD win(8, 8, 2);
    src.fill_canvas_window(win, 10, 20);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            for (int ch = 0; ch < 2; ++ch)
                CHECK(win.at(r, c, ch) == src.canvas_normal(10 + r, 20 + c, ch));

    // overlapping windows agree on the intersection: the field is global,
    // not a per-window stream
    GridD big(8, 8, 2), small(4, 4, 2);
    src.fill_canvas_window(big, 0, 0);
    src.fill_canvas_window(small, 4, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            for (int ch = 0; ch < 2; ++ch)
                CHECK(small.at(r, c, ch) == big.at(4 + r, 4 + c, ch));
}

TEST_CASE("fill_patch matches per-element draws in float and double") {
    NoiseSource src(11);
    GridF f(6, 5, 3);
    GridD d(6, 5, 3);
    src.fill_patch(f, 2, 9);
    src.fill_patch(d, 2, 9);
    for (long i = 0; i < static_cast<long>(f.size()); ++i) {
        const double z = src.patch_normal(2, 9, i);
        CHECK(f.data()[i] == static_cast<float>(z));
        CHECK(d.data()[i] == z);
    }
}

TEST_CASE("hash_to_unit maps into half-open (0, 1]") {
    CHECK(hash_to_unit(0) > 0.0);
    CHECK(hash_to_unit(~0ull) <= 1.0);
    const uint64_t probes[] = {0ull, 1ull, 0x8000000000000000ull,
                               0xffffffffffffffffull, 0xdeadbeefcafebabeull};
    for (uint64_t h : probes) {
        const double u = hash_to_unit(h);
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}

TEST_CASE("hash_words mixes every word") {
    const uint64_t a[] = {1, 2, 3};
    const uint64_t b[] = {1, 2, 4};
    const uint64_t c[] = {2, 2, 3};
    CHECK(hash_words(a, 3) != hash_words(b, 3));
    CHECK(hash_words(a, 3) != hash_words(c, 3));
    CHECK(hash_words(a, 3) != hash_words(a, 2));
    CHECK(hash_words(a, 3) == hash_words(a, 3));
}
