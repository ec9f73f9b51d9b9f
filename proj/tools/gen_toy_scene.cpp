// Regenerates the bundled deterministic test scene PNG.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "tilefuse/image_io.hpp"
#include "tilefuse/verify.hpp"

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : "data/toy_scene_96.png";
    const int size = argc > 2 ? std::atoi(argv[2]) : 96;
    if (size < 1) {
        std::fprintf(stderr, "bad size\n");
        return 2;
    }
    tilefuse::write_png(
        path, tilefuse::from_unit_range(tilefuse::make_toy_scene(size, size, 1)));
    std::printf("%s (%dx%d)\n", path.c_str(), size, size);
    return 0;
}
