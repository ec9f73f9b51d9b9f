#include "doctest.h"

#include "tilefuse/denoiser.hpp"
#include "tilefuse/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

using namespace tilefuse;

namespace {

// compile-time path to the reference protocol worker built alongside tests
const char* worker_path() { return WIRE_WORKER_PATH; }

template <typename S>
DenoiseRequest<S> make_request(const Grid<S>& cond, const Grid<S>& latent,
                               double gamma, int r = 0, int c = 0) {
    DenoiseRequest<S> req;
    req.condition = &cond;
    req.latent = &latent;
    req.gamma = gamma;
    req.origin_row = r;
    req.origin_col = c;
    return req;
}

}  // namespace

TEST_CASE("zero denoiser returns zeros of the latent shape") {
    ZeroDenoiser<float> d;
    GridF cond(4, 6, 2), latent(4, 6, 2, 3.5f);
    auto out = d.denoise(make_request(cond, latent, 0.5));
    CHECK(out.same_shape(latent));
    for (size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0f);
}

TEST_CASE("exact oracle inverts the forward corruption") {
    const GridD truth = make_toy_scene(16, 16, 1).cast<double>();
    ExactNoiseOracle<double> oracle(truth);

    const double gamma = 0.37;
    NoiseSource noise(123);
    GridD eps(8, 8, 1);
    noise.fill_patch(eps, 0, 1);

    // forward-corrupt the patch at origin (4, 4)
    const Rect r{4, 4, 8, 8};
    GridD latent(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            latent.at(y, x, 0) = std::sqrt(gamma) * truth.at(4 + y, 4 + x, 0) +
                                 std::sqrt(1.0 - gamma) * eps.at(y, x, 0);

    GridD cond(8, 8, 1);
    auto got = oracle.denoise(make_request(cond, latent, gamma, 4, 4));
    CHECK(max_abs_diff(got, eps) < 1e-12);
}

TEST_CASE("exact oracle rejects bad gamma and out-of-range origins") {
    const GridD truth(16, 16, 1, 0.0);
    ExactNoiseOracle<double> oracle(truth);
    GridD cond(8, 8, 1), latent(8, 8, 1);
    CHECK_THROWS(oracle.denoise(make_request(cond, latent, 0.0)));
    CHECK_THROWS(oracle.denoise(make_request(cond, latent, 1.0)));
    // patch sticking out of the truth canvas
    CHECK_THROWS(oracle.denoise(make_request(cond, latent, 0.5, 12, 0)));
}

TEST_CASE("drifted oracle bias is constant per origin and bounded") {
    const GridD truth = make_toy_scene(32, 32, 1).cast<double>();
    DriftedOracle<double> oracle(truth, 0.05, 99);
    const double b1 = oracle.bias_at(0, 16);
    const double b2 = oracle.bias_at(0, 16);
    const double b3 = oracle.bias_at(16, 0);
    CHECK(b1 == b2);
    CHECK(b1 != b3);
    CHECK(std::abs(b1) <= 0.05);
    CHECK(std::abs(b3) <= 0.05);

    DriftedOracle<double> other(truth, 0.05, 100);
    CHECK(other.bias_at(0, 16) != b1);
}

TEST_CASE("request codec round-trips") {
    GridF cond(3, 5, 2), latent(3, 5, 2);
    for (size_t i = 0; i < cond.size(); ++i) {
        cond.data()[i] = static_cast<float>(i) * 0.25f - 1.0f;
        latent.data()[i] = -static_cast<float>(i) * 0.5f + 2.0f;
    }
    auto buf = wire::encode_request(3, 5, 2, 0.625, cond.data(), latent.data());
    auto req = wire::decode_request(buf.data(), buf.size());
    CHECK(req.height == 3);
    CHECK(req.width == 5);
    CHECK(req.channels == 2);
    CHECK(req.gamma == 0.625);
    CHECK(max_abs_diff(req.condition, cond) == 0.0);
    CHECK(max_abs_diff(req.latent, latent) == 0.0);
}

TEST_CASE("request decoding rejects malformed buffers") {
    GridF cond(2, 2, 1), latent(2, 2, 1);
    auto buf = wire::encode_request(2, 2, 1, 0.5, cond.data(), latent.data());

    auto corrupted = buf;
    corrupted[0] = 'X';
    CHECK_THROWS_AS(wire::decode_request(corrupted.data(), corrupted.size()),
                    ProtocolError);

    corrupted = buf;
    corrupted[4] = 9;  // unsupported version
    CHECK_THROWS_AS(wire::decode_request(corrupted.data(), corrupted.size()),
                    ProtocolError);

    CHECK_THROWS_AS(wire::decode_request(buf.data(), buf.size() - 1),
                    ProtocolError);
    CHECK_THROWS_AS(wire::decode_request(buf.data(), wire::kHeaderBytes - 2),
                    ProtocolError);
}

TEST_CASE("response header validation names both shapes") {
    std::vector<float> eps(16 * 16, 0.0f);
    auto buf = wire::encode_response(16, 16, eps.data(), eps.size());
    REQUIRE(buf.size() >= wire::kHeaderBytes);

    CHECK(wire::parse_response_header(buf.data(), 16, 16, 1) == 256);
    CHECK(wire::parse_response_header(buf.data(), 16, 16, 2) == 512);

    try {
        wire::parse_response_header(buf.data(), 16, 32, 1);
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("16x16") != std::string::npos);
        CHECK(msg.find("16x32") != std::string::npos);
    }
}

TEST_CASE("external worker in zero mode matches the zero denoiser") {
    ExternalDenoiser<float>::Options opts;
    opts.command = {worker_path(), "--respond", "zero"};
    opts.timeout_seconds = 20.0;
    ExternalDenoiser<float> ext(opts);
    ZeroDenoiser<float> ref;

    GridF cond = make_toy_scene(24, 16, 2);
    GridF latent(24, 16, 2, 0.75f);
    auto a = ext.denoise(make_request(cond, latent, 0.5));
    auto b = ref.denoise(make_request(cond, latent, 0.5));
    CHECK(a.same_shape(b));
    CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("external worker in echo mode returns the latent") {
    ExternalDenoiser<float>::Options opts;
    opts.command = {worker_path(), "--respond", "echo"};
    opts.timeout_seconds = 20.0;
    ExternalDenoiser<float> ext(opts);

    GridF cond(8, 8, 1);
    GridF latent = make_toy_scene(8, 8, 1);
    auto out = ext.denoise(make_request(cond, latent, 0.25));
    CHECK(max_abs_diff(out, latent) == 0.0);
}

TEST_CASE("external worker serves concurrent callers") {
    ExternalDenoiser<float>::Options opts;
    opts.command = {worker_path(), "--respond", "echo"};
    opts.timeout_seconds = 30.0;
    opts.max_channels = 2;
    ExternalDenoiser<float> ext(opts);

    std::vector<std::thread> threads;
    std::vector<int> failures(8, 1);
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&, i] {
            GridF cond(6, 6, 1);
            GridF latent(6, 6, 1, static_cast<float>(i));
            for (int rep = 0; rep < 4; ++rep) {
                auto out = ext.denoise(make_request(cond, latent, 0.5));
                if (max_abs_diff(out, latent) != 0.0) return;
            }
            failures[i] = 0;
        });
    for (auto& t : threads) t.join();
    for (int i = 0; i < 8; ++i) CHECK(failures[i] == 0);
}

TEST_CASE("slow worker trips the deadline") {
    ExternalDenoiser<float>::Options opts;
    opts.command = {worker_path(), "--respond", "zero", "--sleep-ms", "30000"};
    opts.timeout_seconds = 0.25;
    ExternalDenoiser<float> ext(opts);

    GridF cond(4, 4, 1), latent(4, 4, 1);
    const auto start = std::chrono::steady_clock::now();
    try {
        ext.denoise(make_request(cond, latent, 0.5));
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("timeout") != std::string::npos);
    }
    const double waited =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    // the deadline must cut the wait far below the worker's sleep
    CHECK(waited < 5.0);
}

TEST_CASE("corrupted response magic is rejected") {
    ExternalDenoiser<float>::Options opts;
    opts.command = {worker_path(), "--respond", "zero", "--corrupt", "magic"};
    opts.timeout_seconds = 20.0;
    ExternalDenoiser<float> ext(opts);
    GridF cond(4, 4, 1), latent(4, 4, 1);
    try {
        ext.denoise(make_request(cond, latent, 0.5));
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }
}

TEST_CASE("response with the wrong shape is rejected") {
    ExternalDenoiser<float>::Options opts;
    opts.command = {worker_path(), "--respond", "zero", "--corrupt", "shape"};
    opts.timeout_seconds = 20.0;
    ExternalDenoiser<float> ext(opts);
    GridF cond(4, 4, 1), latent(4, 4, 1);
    try {
        ext.denoise(make_request(cond, latent, 0.5));
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("does not match") !=
              std::string::npos);
    }
}

TEST_CASE("worker death mid-stream is reported, then recovered") {
    ExternalDenoiser<float>::Options opts;
    opts.command = {worker_path(), "--respond", "zero", "--die-after", "1"};
    opts.timeout_seconds = 20.0;
    opts.max_channels = 1;
    ExternalDenoiser<float> ext(opts);
    GridF cond(4, 4, 1), latent(4, 4, 1);

    // first call succeeds, then the worker exits; the next call must fail
    // with a protocol error, and the one after that gets a fresh channel
    CHECK_NOTHROW(ext.denoise(make_request(cond, latent, 0.5)));
    CHECK_THROWS_AS(ext.denoise(make_request(cond, latent, 0.5)),
                    ProtocolError);
    CHECK_NOTHROW(ext.denoise(make_request(cond, latent, 0.5)));
}

TEST_CASE("external denoiser carries double grids over the f32 wire") {
    ExternalDenoiser<double>::Options opts;
    opts.command = {worker_path(), "--respond", "echo"};
    opts.timeout_seconds = 20.0;
    ExternalDenoiser<double> ext(opts);

    GridD cond(4, 4, 1);
    GridD latent(4, 4, 1);
    for (size_t i = 0; i < latent.size(); ++i)
        latent.data()[i] = 0.125 * static_cast<double>(i) - 0.875;
    auto out = ext.denoise(make_request(cond, latent, 0.5));
    // values chosen to be exactly representable in f32
    CHECK(max_abs_diff(out, latent) == 0.0);
}
