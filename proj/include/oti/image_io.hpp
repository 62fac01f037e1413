#pragma once

#include <filesystem>

#include "oti/tensor.hpp"

namespace oti {

// Supported on-disk formats:
//   - binary netpbm: PGM (P5) and PPM (P6), maxval <= 65535, two-byte samples
//     stored big-endian when maxval > 255; intensities are normalized by the
//     declared maxval.
//   - planar-raw: little-endian float32 in channel-then-row-major order, with
//     a JSON sidecar `<path>.json` holding {"c":C,"h":H,"w":W}.

ImageTensor load_image(const std::filesystem::path& path,
                       std::size_t element_cap = kDefaultElementCap);

/// Loads a single-channel image and binarizes it: 1 where intensity >= threshold.
/// threshold must lie in (0, 1). Multi-channel input raises MultiChannelMask.
ObjectMask load_mask(const std::filesystem::path& path, double threshold = 0.5,
                     std::size_t element_cap = kDefaultElementCap);

/// Writes the float32 planar-raw file plus its JSON sidecar.
void save_planar_raw(const ImageTensor& image, const std::filesystem::path& path);

/// Writes PGM (C=1) or PPM (C=3); intensities are quantized to maxval steps.
void save_netpbm(const ImageTensor& image, const std::filesystem::path& path,
                 int maxval = 255);

/// Binarizes an already-loaded single-channel image; threshold in (0, 1].
ObjectMask binarize(const ImageTensor& image, double threshold);

}  // namespace oti
