#include "doctest.h"

#include "tilefuse/stitcher.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

using namespace tilefuse;

TEST_CASE("gaussian blend window values") {
    auto w = gaussian_blend_window(32);
    // default sigma 8: corner exponent -(16^2 + 16^2) / 128 = -4
    CHECK(w.at(0, 0, 0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
    for (int i = 1; i < 32; ++i)
        CHECK(w.at(i, 3, 0) == doctest::Approx(w.at(32 - i, 3, 0)));
    // explicit sigma
    auto tight = gaussian_blend_window(32, 4.0);
    CHECK(tight.at(0, 0, 0) < w.at(0, 0, 0));
}

TEST_CASE("single patch blends to itself") {
    auto w = gaussian_blend_window(8);
    PatchPrediction p;
    p.row = 0;
    p.col = 0;
    p.values = GridF(8, 8, 3);
    for (size_t i = 0; i < p.values.size(); ++i)
        p.values.data()[i] = 0.01f * static_cast<float>(i);

    auto out = blend_predictions({p}, 8, 8, w);
    CHECK(out.same_shape(p.values));
    // w v / w = v up to one rounding
    CHECK(max_abs_diff(out, p.values) < 1e-6);
}

TEST_CASE("two overlapping patches form the exact weighted mean") {
    // 4x6 canvas, two 4x4 patches at cols 0 and 2
    auto w = gaussian_blend_window(4, 2.0);
    PatchPrediction a, b;
    a.row = a.col = 0;
    a.values = GridF(4, 4, 1, 1.0f);
    b.row = 0;
    b.col = 2;
    b.values = GridF(4, 4, 1, 3.0f);

    auto out = blend_predictions({a, b}, 4, 6, w);
    for (int r = 0; r < 4; ++r) {
        // exclusive columns take their patch's value
        CHECK(out.at(r, 0, 0) == doctest::Approx(1.0));
        CHECK(out.at(r, 5, 0) == doctest::Approx(3.0));
        // overlap columns 2..3: weights w(r, 2+j) for a, w(r, j) for b.
        // The blend runs in double; only the final float store rounds.
        for (int c = 2; c <= 3; ++c) {
            const double wa = w.at(r, c, 0);
            const double wb = w.at(r, c - 2, 0);
            const double expect = (wa * 1.0 + wb * 3.0) / (wa + wb);
            CHECK(out.at(r, c, 0) == static_cast<float>(expect));
        }
    }
}

TEST_CASE("order of addition does not matter") {
    auto w = gaussian_blend_window(4);
    std::vector<PatchPrediction> ps;
    for (int i = 0; i < 3; ++i) {
        PatchPrediction p;
        p.row = 0;
        p.col = i;
        p.values = GridF(4, 4, 2, static_cast<float>(i) - 1.0f);
        ps.push_back(p);
    }
    auto fwd = blend_predictions(ps, 4, 6, w);
    std::vector<PatchPrediction> rev(ps.rbegin(), ps.rend());
    auto bwd = blend_predictions(rev, 4, 6, w);
    CHECK(max_abs_diff(fwd, bwd) < 1e-6);
}

TEST_CASE("uncovered pixels are an error naming the gap") {
    auto w = gaussian_blend_window(4);
    PatchPrediction p;
    p.row = 0;
    p.col = 0;
    p.values = GridF(4, 4, 1, 1.0f);
    BlendAccumulator acc(6, 6, 1, w);
    acc.add(p);
    try {
        (void)acc.finalize();
        FAIL("expected missing-coverage error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("uncovered") != std::string::npos);
    }
}

TEST_CASE("accumulator rejects bad shapes and double finalize") {
    auto w = gaussian_blend_window(4);
    BlendAccumulator acc(8, 8, 2, w);
    PatchPrediction wrong_k;
    wrong_k.values = GridF(4, 4, 1);
    CHECK_THROWS_AS(acc.add(wrong_k), std::invalid_argument);

    PatchPrediction off;
    off.row = 6;
    off.col = 0;
    off.values = GridF(4, 4, 2);  // sticks out of the canvas
    CHECK_THROWS_AS(acc.add(off), std::out_of_range);

    PatchPrediction ok;
    ok.values = GridF(4, 4, 2, 0.5f);
    for (int r = 0; r < 8; r += 4)
        for (int c = 0; c < 8; c += 4) {
            PatchPrediction p = ok;
            p.row = r;
            p.col = c;
            acc.add(p);
        }
    (void)acc.finalize();
    CHECK_THROWS(acc.finalize());
}

TEST_CASE("threshold mask maps probabilities to {0, 255}") {
    GridF prob(1, 3, 1);
    prob.at(0, 0, 0) = 0.4f;
    prob.at(0, 1, 0) = 0.5f;
    prob.at(0, 2, 0) = 0.6f;
    auto mask = threshold_mask(prob, 0.5f);
    CHECK(mask.at(0, 0, 0) == 0);
    CHECK(mask.at(0, 1, 0) == 255);  // threshold is inclusive
    CHECK(mask.at(0, 2, 0) == 255);

    GridF multi(1, 3, 2);
    CHECK_THROWS_AS(threshold_mask(multi, 0.5f), std::invalid_argument);
}
