// Reference implementation of the denoiser wire protocol, used as an
// integration test double and as a working example of a model worker.
// Reads requests from stdin, answers on stdout, exits cleanly on EOF.
//
//   --respond zero|echo   noise estimate: zeros (default) or the latent back
//   --sleep-ms N          delay before each response (deadline tests)
//   --corrupt magic|shape one deliberately broken response field
//   --die-after N         exit abruptly after N responses
//
// Anything written to stderr is diagnostic only.

#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "tilefuse/wire.hpp"

using tilefuse::wire::get_f64;
using tilefuse::wire::get_u32;

namespace {

bool read_exact(uint8_t* buf, size_t n) {
    size_t off = 0;
    while (off < n) {
        const ssize_t r = read(STDIN_FILENO, buf + off, n - off);
        if (r == 0) return false;  // EOF
        if (r < 0) {
            perror("read");
            exit(1);
        }
        off += static_cast<size_t>(r);
    }
    return true;
}

void write_exact(const uint8_t* buf, size_t n) {
    size_t off = 0;
    while (off < n) {
        const ssize_t w = write(STDOUT_FILENO, buf + off, n - off);
        if (w < 0) {
            perror("write");
            exit(1);
        }
        off += static_cast<size_t>(w);
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::string respond = "zero";
    std::string corrupt;
    int sleep_ms = 0;
    long die_after = -1;

    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        auto next = [&]() -> std::string {
            if (i + 1 >= argc) {
                fprintf(stderr, "%s needs a value\n", arg.c_str());
                exit(2);
            }
            return argv[++i];
        };
        if (arg == "--respond") respond = next();
        else if (arg == "--sleep-ms") sleep_ms = std::stoi(next());
        else if (arg == "--corrupt") corrupt = next();
        else if (arg == "--die-after") die_after = std::stol(next());
        else {
            fprintf(stderr, "unknown flag %s\n", arg.c_str());
            return 2;
        }
    }

    long served = 0;
    for (;;) {
        uint8_t head[tilefuse::wire::kHeaderBytes];
        if (!read_exact(head, sizeof head)) return 0;
        if (std::memcmp(head, tilefuse::wire::kMagic, 4) != 0) {
            fprintf(stderr, "bad request magic\n");
            return 1;
        }
        if (get_u32(head + 4) != tilefuse::wire::kVersion) {
            fprintf(stderr, "unsupported version %u\n", get_u32(head + 4));
            return 1;
        }
        const uint32_t h = get_u32(head + 8);
        const uint32_t w = get_u32(head + 12);

        uint8_t meta[12];
        if (!read_exact(meta, sizeof meta)) {
            fprintf(stderr, "truncated request\n");
            return 1;
        }
        const uint32_t c = get_u32(meta);
        const double gamma = get_f64(meta + 4);
        (void)gamma;

        const size_t plane = static_cast<size_t>(h) * w * c;
        std::vector<uint8_t> payload(plane * 8);
        if (!read_exact(payload.data(), payload.size())) {
            fprintf(stderr, "truncated request payload\n");
            return 1;
        }

        if (sleep_ms > 0) usleep(static_cast<useconds_t>(sleep_ms) * 1000);

        std::vector<float> eps(plane, 0.0f);
        if (respond == "echo")
            std::memcpy(eps.data(), payload.data() + plane * 4, plane * 4);

        uint32_t rh = h, rw = w;
        if (corrupt == "shape") rw = w + 1;
        std::vector<uint8_t> response =
            tilefuse::wire::encode_response(rh, rw, eps.data(), eps.size());
        if (corrupt == "magic") response[0] = 'X';
        write_exact(response.data(), response.size());

        if (die_after >= 0 && ++served >= die_after) return 0;
    }
}
