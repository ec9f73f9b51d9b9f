#include "doctest.h"

#include "tilefuse/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

using namespace tilefuse;

TEST_CASE("96x96 canvas, 32 patch, 16 stride tiles exactly") {
    CanvasSpec cv{96, 96, 3};
    auto g = build_grid(cv, 32, 32, 16, 16, BorderPolicy::ExactTiling);
    const std::vector<int> expect{0, 16, 32, 48, 64};
    CHECK(g.row_origins() == expect);
    CHECK(g.col_origins() == expect);
    CHECK(g.rows() == 5);
    CHECK(g.cols() == 5);
    CHECK(g.count() == 25);

    // patch 7 sits at lattice cell (1, 2)
    CHECK(g.cell(7) == std::pair<int, int>{1, 2});
    Rect r = g.patch_rect(7);
    CHECK(r.row == 16);
    CHECK(r.col == 32);
    CHECK(r.height == 32);
    CHECK(r.width == 32);
}

TEST_CASE("exact tiling refuses a canvas the stride cannot tile") {
    CanvasSpec cv{100, 100, 1};
    CHECK_THROWS_AS(build_grid(cv, 32, 32, 16, 16, BorderPolicy::ExactTiling),
                    std::invalid_argument);
}

TEST_CASE("clamp-last shifts the final origin inward") {
    CanvasSpec cv{100, 100, 1};
    auto g = build_grid(cv, 32, 32, 16, 16, BorderPolicy::ClampLast);
    const std::vector<int> expect{0, 16, 32, 48, 64, 68};
    CHECK(g.row_origins() == expect);
    CHECK(g.col_origins() == expect);
    // the clamped patch still ends exactly at the canvas edge
    Rect last = g.patch_rect(g.count() - 1);
    CHECK(last.row + last.height == 100);
    CHECK(last.col + last.width == 100);
}

TEST_CASE("clamp-last collapses to exact tiling when strides divide") {
    CanvasSpec cv{96, 96, 1};
    auto a = build_grid(cv, 32, 32, 16, 16, BorderPolicy::ExactTiling);
    auto b = build_grid(cv, 32, 32, 16, 16, BorderPolicy::ClampLast);
    CHECK(a.row_origins() == b.row_origins());
    CHECK(a.col_origins() == b.col_origins());
}

TEST_CASE("covering returns ascending patch ids") {
    CanvasSpec cv{96, 96, 1};
    auto g = build_grid(cv, 32, 32, 16, 16, BorderPolicy::ExactTiling);

    CHECK(g.covering(0, 0) == std::vector<int>{0});
    // (16,16) lies in row patches {0,1} and col patches {0,1}
    CHECK(g.covering(16, 16) == std::vector<int>{0, 1, 5, 6});
    // the final pixel belongs only to the corner patch
    CHECK(g.covering(95, 95) == std::vector<int>{24});

    // interior pixels away from edges see the full 2x2 overlap
    CHECK(g.covering(40, 40).size() == 4);
}

TEST_CASE("every pixel is covered, exact and clamped") {
    auto check_coverage = [](const PatchGrid& g) {
        const CanvasSpec& cv = g.canvas();
        for (int r = 0; r < cv.height; ++r) {
            auto rows = PatchGrid::covering_axis(g.row_origins(),
                                                 g.patch_height(), r);
            REQUIRE(!rows.empty());
        }
        for (int c = 0; c < cv.width; ++c) {
            auto cols = PatchGrid::covering_axis(g.col_origins(),
                                                 g.patch_width(), c);
            REQUIRE(!cols.empty());
        }
    };
    check_coverage(build_grid({96, 96, 1}, 32, 32, 16, 16,
                              BorderPolicy::ExactTiling));
    check_coverage(build_grid({100, 70, 1}, 32, 32, 16, 16,
                              BorderPolicy::ClampLast));
    check_coverage(build_grid({33, 47, 1}, 32, 32, 16, 16,
                              BorderPolicy::ClampLast));
}

TEST_CASE("degenerate single-patch grid") {
    CanvasSpec cv{32, 32, 1};
    for (auto pol : {BorderPolicy::ExactTiling, BorderPolicy::ClampLast}) {
        auto g = build_grid(cv, 32, 32, 32, 32, pol);
        CHECK(g.count() == 1);
        CHECK(g.patch_rect(0) == Rect{0, 0, 32, 32});
        CHECK(g.covering(31, 0) == std::vector<int>{0});
    }
}

TEST_CASE("non-square patches and strides") {
    CanvasSpec cv{48, 96, 2};
    auto g = build_grid(cv, 16, 32, 8, 16, BorderPolicy::ExactTiling);
    CHECK(g.rows() == 5);
    CHECK(g.cols() == 5);
    Rect r = g.patch_rect(6);
    CHECK(r.height == 16);
    CHECK(r.width == 32);
    CHECK(r.row == 8);
    CHECK(r.col == 16);
}

TEST_CASE("grid construction rejects bad arguments") {
    CanvasSpec cv{64, 64, 1};
    // stride above the patch extent would leave uncovered gaps
    CHECK_THROWS_AS(build_grid(cv, 16, 16, 17, 16, BorderPolicy::ExactTiling),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_grid(cv, 16, 16, 0, 16, BorderPolicy::ExactTiling),
                    std::invalid_argument);
    // patch larger than the canvas
    CHECK_THROWS_AS(build_grid(cv, 65, 16, 16, 16, BorderPolicy::ClampLast),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_grid(cv, 0, 16, 16, 16, BorderPolicy::ClampLast),
                    std::invalid_argument);
    CanvasSpec bad{0, 64, 1};
    CHECK_THROWS_AS(build_grid(bad, 16, 16, 16, 16, BorderPolicy::ExactTiling),
                    std::invalid_argument);
}

TEST_CASE("border policy names round-trip") {
    CHECK(border_policy_from_name("exact") == BorderPolicy::ExactTiling);
    CHECK(border_policy_from_name("clamp-last") == BorderPolicy::ClampLast);
    CHECK(border_policy_from_name(border_policy_name(
              BorderPolicy::ClampLast)) == BorderPolicy::ClampLast);
    CHECK_THROWS_AS(border_policy_from_name("mirror"), std::invalid_argument);
}
