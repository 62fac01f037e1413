#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace oti {

/// Upper bound on C*H*W accepted by loaders and validators; guards against
/// malformed dimension headers.
inline constexpr std::size_t kDefaultElementCap = std::size_t{1} << 28;

/// Planar C x H x W intensity tensor, every value in [0, 1].
struct ImageTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;  // channel-major, then row-major

  std::size_t size() const { return data.size(); }

  double at(int c, int y, int x) const {
    return data[static_cast<std::size_t>((c * height + y)) * width + x];
  }
  double& at(int c, int y, int x) {
    return data[static_cast<std::size_t>((c * height + y)) * width + x];
  }

  static ImageTensor filled(int channels, int height, int width, double value);
};

/// H x W binary map; 1 marks object pixels.
struct ObjectMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> data;  // row-major, values 0 or 1

  uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t ones() const;

  static ObjectMask filled(int height, int width, uint8_t value);
};

void validate_image(const ImageTensor& image, std::size_t element_cap = kDefaultElementCap);
void validate_mask(const ObjectMask& mask, std::size_t element_cap = kDefaultElementCap);

/// True if channels*height*width exceeds the cap; safe against overflow.
bool exceeds_element_cap(long long channels, long long height, long long width,
                         std::size_t element_cap = kDefaultElementCap);

/// Throws ShapeMismatch unless mask is H x W for the image's H, W.
void require_shape_match(const ImageTensor& image, const ObjectMask& mask);

}  // namespace oti
