#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "oti/tensor.hpp"

namespace oti {

/// How the two directional responses are reduced to one per-pixel value.
enum class Combine { l2_magnitude, l1_sum };

const char* to_string(Combine combine);
Combine combine_from_string(std::string_view name);

/// A pair of 3x3 kernels applied as true convolutions with replicate padding.
struct TextureOperator {
  std::string name;
  std::array<double, 9> kernel_x{};  // row-major 3x3
  std::array<double, 9> kernel_y{};
  Combine combine = Combine::l2_magnitude;

  static TextureOperator sobel(Combine combine = Combine::l2_magnitude);
  static TextureOperator scharr(Combine combine = Combine::l2_magnitude);
  static TextureOperator laplacian(Combine combine = Combine::l2_magnitude);

  /// Lookup by CLI name: "sobel", "scharr", or "laplacian".
  static TextureOperator by_name(std::string_view name,
                                 Combine combine = Combine::l2_magnitude);
};

/// Per-pixel nonnegative texture response, same shape as the source image.
struct TextureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  double at(int c, int y, int x) const {
    return data[static_cast<std::size_t>((c * height + y)) * width + x];
  }
};

/// Same-size convolution of each channel with kernel_x and kernel_y
/// (replicate padding), combined per pixel according to op.combine.
TextureMap convolve_texture(const ImageTensor& image, const TextureOperator& op);

/// Mean texture response over all C*H*W elements.
double iti(const ImageTensor& image, const TextureOperator& op);

}  // namespace oti
