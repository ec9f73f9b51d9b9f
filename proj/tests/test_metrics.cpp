#include "doctest.h"

#include "tilefuse/metrics.hpp"
#include "tilefuse/verify.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

using namespace tilefuse;
namespace fs = std::filesystem;

TEST_CASE("rmse and psnr on hand-computable images") {
    GridF ref(1, 2, 1), cand(1, 2, 1);
    ref.at(0, 0, 0) = 0.0f;
    ref.at(0, 1, 0) = 2.0f;
    cand.at(0, 0, 0) = 1.0f;
    cand.at(0, 1, 0) = 1.0f;
    auto r = rmse_psnr(ref, cand, 255.0);
    CHECK(r.rmse == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.psnr == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-12));

    // constant offset d gives rmse |d|
    GridF a(5, 7, 3, 0.25f), b(5, 7, 3, 0.45f);
    auto r2 = rmse_psnr(a, b, 2.0);
    CHECK(r2.rmse == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(r2.psnr == doctest::Approx(20.0 * std::log10(2.0 / 0.2)).epsilon(1e-5));
}

TEST_CASE("identical images have zero rmse and infinite psnr") {
    auto img = make_toy_scene(16, 16, 2);
    auto r = rmse_psnr(img, img, 2.0);
    CHECK(r.rmse == 0.0);
    CHECK(std::isinf(r.psnr));
    CHECK(r.psnr > 0.0);
    GridF small(4, 4, 1);
    CHECK_THROWS_AS(rmse_psnr(img, small, 2.0), std::invalid_argument);
}

TEST_CASE("ssim is 1 for identical images") {
    auto img = make_toy_scene(32, 32, 1);
    CHECK(ssim(img, img, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim of two constant images matches the closed form") {
    // constant images make every window identical, so mean SSIM equals the
    // global formula (2 mu_x mu_y + c1) / (mu_x^2 + mu_y^2 + c1)
    GridF a(16, 16, 1, 100.0f), b(16, 16, 1, 110.0f);
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double expect =
        (2.0 * 100.0 * 110.0 + c1) / (100.0 * 100.0 + 110.0 * 110.0 + c1);
    CHECK(ssim(a, b, 255.0) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("ssim is symmetric and decreases with distortion") {
    auto clean = make_toy_scene(48, 48, 1);
    GridF mild = clean, strong = clean;
    NoiseSource noise(3);
    for (size_t i = 0; i < mild.size(); ++i) {
        const double z = noise.patch_normal(0, 1, static_cast<long>(i));
        mild.data()[i] += static_cast<float>(0.02 * z);
        strong.data()[i] += static_cast<float>(0.15 * z);
    }
    const double s_mild = ssim(clean, mild, 2.0);
    const double s_strong = ssim(clean, strong, 2.0);
    CHECK(s_mild < 1.0);
    CHECK(s_strong < s_mild);
    CHECK(ssim(clean, mild, 2.0) ==
          doctest::Approx(ssim(mild, clean, 2.0)).epsilon(1e-12));

    GridF tiny(8, 8, 1);
    CHECK_THROWS_AS(ssim(tiny, tiny, 2.0), std::invalid_argument);
}

TEST_CASE("seam index isolates discontinuities on patch boundaries") {
    // smooth ramp (constant first difference 0.01 both axes) plus a jump of
    // 0.05 exactly at the col-32 patch boundary
    auto grid = build_grid({64, 64, 1}, 32, 32, 32, 32,
                           BorderPolicy::ExactTiling);
    GridF img(64, 64, 1);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c)
            img.at(r, c, 0) =
                0.01f * (r + c) + (c >= 32 ? 0.05f : 0.0f);

    // boundary pairs: (31,32) across cols with diff 0.06, (31,32) across
    // rows with diff 0.01; everything else 0.01
    const double expect = ((0.06 + 0.01) / 2.0) / 0.01;
    CHECK(seam_index(img, grid) == doctest::Approx(expect).epsilon(1e-3));
}

TEST_CASE("seam index degenerates to 1") {
    auto grid = build_grid({64, 64, 1}, 32, 32, 32, 32,
                           BorderPolicy::ExactTiling);
    // constant image: both statistics are zero
    GridF flat(64, 64, 1, 0.5f);
    CHECK(seam_index(flat, grid) == 1.0);

    // single patch: no interior boundaries at all
    auto solo = build_grid({64, 64, 1}, 64, 64, 64, 64,
                           BorderPolicy::ExactTiling);
    auto img = make_toy_scene(64, 64, 1);
    CHECK(seam_index(img, solo) == 1.0);
}

TEST_CASE("seam index sees overlap-grid boundaries too") {
    auto grid = build_grid({64, 64, 1}, 32, 32, 16, 16,
                           BorderPolicy::ExactTiling);
    GridF img(64, 64, 1);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) {
            img.at(r, c, 0) = 0.01f * (r + c);
            // jumps on two of the overlap boundaries
            if (c >= 16) img.at(r, c, 0) += 0.04f;
            if (c >= 48) img.at(r, c, 0) += 0.04f;
        }
    CHECK(seam_index(img, grid) > 1.5);
}

TEST_CASE("segmentation scores on a hand-counted mask pair") {
    // 4x4: tp = 2, fp = 1, fn = 1, tn = 12
    Grid<uint8_t> pred(4, 4, 1, 0), truth(4, 4, 1, 0);
    pred.at(0, 0, 0) = 255;
    truth.at(0, 0, 0) = 255;  // tp
    pred.at(1, 1, 0) = 255;
    truth.at(1, 1, 0) = 255;  // tp
    pred.at(2, 2, 0) = 255;   // fp
    truth.at(3, 3, 0) = 255;  // fn

    auto s = segmentation_scores(pred, truth);
    CHECK(s.accuracy == doctest::Approx(14.0 / 16.0));
    CHECK(s.precision == doctest::Approx(2.0 / 3.0));
    CHECK(s.recall == doctest::Approx(2.0 / 3.0));
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(s.iou == doctest::Approx(0.5));
    // IoU and F1 are linked: iou = f1 / (2 - f1)
    CHECK(s.iou == doctest::Approx(s.f1 / (2.0 - s.f1)).epsilon(1e-12));
}

TEST_CASE("segmentation accepts {0,1} masks identically to {0,255}") {
    Grid<uint8_t> p255(3, 3, 1, 0), t255(3, 3, 1, 0);
    Grid<uint8_t> p1(3, 3, 1, 0), t1(3, 3, 1, 0);
    p255.at(0, 0, 0) = 255;
    p1.at(0, 0, 0) = 1;
    t255.at(0, 1, 0) = 255;
    t1.at(0, 1, 0) = 1;
    auto a = segmentation_scores(p255, t255);
    auto b = segmentation_scores(p1, t1);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.f1 == b.f1);
    CHECK(a.iou == b.iou);
}

TEST_CASE("segmentation sentinels and validation") {
    Grid<uint8_t> empty(4, 4, 1, 0), full(4, 4, 1, 255);

    auto both = segmentation_scores(empty, empty);
    CHECK(both.accuracy == 1.0);
    CHECK(both.precision == 1.0);
    CHECK(both.recall == 1.0);
    CHECK(both.f1 == 1.0);
    CHECK(both.iou == 1.0);

    auto miss = segmentation_scores(empty, full);
    CHECK(miss.accuracy == 0.0);
    CHECK(miss.precision == 0.0);
    CHECK(miss.recall == 0.0);
    CHECK(miss.f1 == 0.0);
    CHECK(miss.iou == 0.0);

    Grid<uint8_t> bad(4, 4, 1, 7);
    CHECK_THROWS_AS(segmentation_scores(bad, empty), std::invalid_argument);
    // mixing value conventions inside one mask is also rejected
    Grid<uint8_t> mixed(4, 4, 1, 0);
    mixed.at(0, 0, 0) = 1;
    mixed.at(0, 1, 0) = 255;
    CHECK_THROWS_AS(segmentation_scores(mixed, empty), std::invalid_argument);
    Grid<uint8_t> other(4, 5, 1, 0);
    CHECK_THROWS_AS(segmentation_scores(other, empty), std::invalid_argument);
}

TEST_CASE("fid export cuts a clamped stride-74 lattice of 299 crops") {
    // 400x380: row origins {0, 74, 101}, col origins {0, 74, 81}
    ImageU8 img;
    img.height = 400;
    img.width = 380;
    img.channels = 1;
    img.data.resize(400 * 380);
    for (int r = 0; r < 400; ++r)
        for (int c = 0; c < 380; ++c)
            img.data[static_cast<size_t>(r) * 380 + c] =
                static_cast<uint8_t>((r * 7 + c * 13) % 251);

    check::ScratchDir scratch("fid");
    auto patches = export_fid_patches(img, scratch.path());
    REQUIRE(patches.size() == 9);
    CHECK(patches[0].row == 0);
    CHECK(patches[0].col == 0);
    CHECK(patches.back().row == 101);
    CHECK(patches.back().col == 81);

    // files exist, have the right size, and crops carry the source pixels
    int lines = 0;
    std::ifstream manifest(fs::path(scratch.path()) / "patches.txt");
    std::string line;
    while (std::getline(manifest, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 9);

    for (const auto& p : patches) {
        const auto path = fs::path(scratch.path()) / p.file;
        REQUIRE(fs::exists(path));
        auto crop = read_png(path.string());
        REQUIRE(crop.height == 299);
        REQUIRE(crop.width == 299);
        CHECK(crop.data[0] ==
              img.data[static_cast<size_t>(p.row) * 380 + p.col]);
    }

    ImageU8 tiny;
    tiny.height = 100;
    tiny.width = 400;
    tiny.channels = 1;
    tiny.data.resize(100 * 400, 0);
    check::ScratchDir s2("fid2");
    CHECK_THROWS_AS(export_fid_patches(tiny, s2.path()), std::invalid_argument);
}
