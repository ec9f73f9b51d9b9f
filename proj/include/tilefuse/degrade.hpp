#pragma once

#include "tilefuse/grid.hpp"

namespace tilefuse {

/// Block-mean downsampling by an integer factor. When the extent is not a
/// multiple of the factor, the image is padded by edge replication first so
/// every output pixel averages a full factor x factor block.
GridF area_downsample(const GridF& image, int factor);

/// Catmull-Rom style bicubic resampling (kernel parameter a = -0.75) to an
/// arbitrary target size, with half-pixel-centre source mapping and edge
/// clamping. Values are interpolated as-is; no range clamping here.
GridF bicubic_resample(const GridF& image, int out_height, int out_width);

struct DegradeResult {
    GridF low_res;    // block-mean downsample, size ceil(dim / factor)
    GridF condition;  // low_res upsampled back to the input size
};

/// Super-resolution conditioning pair: destroys detail by the given factor,
/// then brings the small image back up to the original grid.
DegradeResult degrade(const GridF& image, int factor);

}  // namespace tilefuse
