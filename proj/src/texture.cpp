#include "oti/texture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oti/error.hpp"

namespace oti {

const char* to_string(Combine combine) {
  return combine == Combine::l2_magnitude ? "l2" : "l1";
}

Combine combine_from_string(std::string_view name) {
  if (name == "l2" || name == "l2_magnitude") return Combine::l2_magnitude;
  if (name == "l1" || name == "l1_sum") return Combine::l1_sum;
  throw Error(ErrorKind::InvalidArgument, "unknown combine mode '" + std::string(name) + "'");
}

TextureOperator TextureOperator::sobel(Combine combine) {
  TextureOperator op;
  op.name = "sobel";
  op.kernel_x = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
  op.kernel_y = {-1, -2, -1, 0, 0, 0, 1, 2, 1};  // transpose of kernel_x
  op.combine = combine;
  return op;
}

TextureOperator TextureOperator::scharr(Combine combine) {
  TextureOperator op;
  op.name = "scharr";
  op.kernel_x = {-3, 0, 3, -10, 0, 10, -3, 0, 3};
  op.kernel_y = {-3, -10, -3, 0, 0, 0, 3, 10, 3};
  op.combine = combine;
  return op;
}

TextureOperator TextureOperator::laplacian(Combine combine) {
  TextureOperator op;
  op.name = "laplacian";
  op.kernel_x = {0, 1, 0, 1, -4, 1, 0, 1, 0};
  op.kernel_y = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  op.combine = combine;
  return op;
}

TextureOperator TextureOperator::by_name(std::string_view name, Combine combine) {
  if (name == "sobel") return sobel(combine);
  if (name == "scharr") return scharr(combine);
  if (name == "laplacian") return laplacian(combine);
  throw Error(ErrorKind::InvalidArgument,
              "unknown texture operator '" + std::string(name) + "'");
}

namespace {

// Correlates one channel with a pre-flipped kernel, replicate padding. Row and
// column index tables are clamped once up front instead of per tap. Taps are
// accumulated relative to the center pixel, so zero-sum kernels respond with
// an exact 0.0 on locally constant neighborhoods.
void correlate_channel(const double* in, double* out, int height, int width,
                       const std::array<double, 9>& flipped) {
  double kernel_sum = 0.0;
  for (double k : flipped) kernel_sum += k;
  std::vector<int> xm1(width), xp1(width);
  for (int x = 0; x < width; ++x) {
    xm1[x] = std::max(x - 1, 0);
    xp1[x] = std::min(x + 1, width - 1);
  }
  for (int y = 0; y < height; ++y) {
    const double* rt = in + static_cast<std::size_t>(std::max(y - 1, 0)) * width;
    const double* rm = in + static_cast<std::size_t>(y) * width;
    const double* rb = in + static_cast<std::size_t>(std::min(y + 1, height - 1)) * width;
    double* orow = out + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      const int xl = xm1[x], xr = xp1[x];
      const double c = rm[x];
      orow[x] = flipped[0] * (rt[xl] - c) + flipped[1] * (rt[x] - c) +
                flipped[2] * (rt[xr] - c) + flipped[3] * (rm[xl] - c) +
                flipped[5] * (rm[xr] - c) + flipped[6] * (rb[xl] - c) +
                flipped[7] * (rb[x] - c) + flipped[8] * (rb[xr] - c) + kernel_sum * c;
    }
  }
}

std::array<double, 9> flip(const std::array<double, 9>& k) {
  std::array<double, 9> f;
  for (int i = 0; i < 9; ++i) f[i] = k[8 - i];
  return f;
}

void validate_operator(const TextureOperator& op) {
  for (double v : op.kernel_x) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite kernel_x");
  }
  for (double v : op.kernel_y) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite kernel_y");
  }
}

}  // namespace

TextureMap convolve_texture(const ImageTensor& image, const TextureOperator& op) {
  validate_image(image);
  validate_operator(op);

  TextureMap map;
  map.channels = image.channels;
  map.height = image.height;
  map.width = image.width;
  map.data.resize(image.data.size());

  const auto fx = flip(op.kernel_x);
  const auto fy = flip(op.kernel_y);
  const std::size_t plane = static_cast<std::size_t>(image.height) * image.width;
  std::vector<double> gx(plane), gy(plane);

  for (int c = 0; c < image.channels; ++c) {
    const double* in = image.data.data() + c * plane;
    correlate_channel(in, gx.data(), image.height, image.width, fx);
    correlate_channel(in, gy.data(), image.height, image.width, fy);
    double* out = map.data.data() + c * plane;
    if (op.combine == Combine::l2_magnitude) {
      for (std::size_t i = 0; i < plane; ++i) out[i] = std::hypot(gx[i], gy[i]);
    } else {
      for (std::size_t i = 0; i < plane; ++i) out[i] = std::abs(gx[i]) + std::abs(gy[i]);
    }
  }
  return map;
}

double iti(const ImageTensor& image, const TextureOperator& op) {
  const TextureMap map = convolve_texture(image, op);
  double sum = 0.0;
  for (double v : map.data) sum += v;
  return sum / static_cast<double>(map.data.size());
}

}  // namespace oti
