#include "oti/frequency.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "oti/error.hpp"

namespace oti {

namespace {

void validate_cutoffs(const BandCutoffs& cutoffs) {
  if (!(cutoffs.r_low > 0.0 && cutoffs.r_low < cutoffs.r_high && cutoffs.r_high < 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "cutoffs must satisfy 0 < r_low < r_high < 1, got (" +
                    std::to_string(cutoffs.r_low) + ", " + std::to_string(cutoffs.r_high) +
                    ")");
  }
}

// Unnormalized 1D DFT along one axis with precomputed twiddles. Applying it to
// rows then columns gives the 2D transform in O(H*W*(H+W)).
void dft_axis(std::vector<std::complex<double>>& buffer, int count, int length, int stride,
              int block) {
  std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(length) * length);
  for (int k = 0; k < length; ++k) {
    for (int n = 0; n < length; ++n) {
      const double angle =
          -2.0 * std::numbers::pi * static_cast<double>(k) * n / static_cast<double>(length);
      twiddle[static_cast<std::size_t>(k) * length + n] = {std::cos(angle), std::sin(angle)};
    }
  }
  std::vector<std::complex<double>> line(length);
  for (int b = 0; b < count; ++b) {
    std::complex<double>* base = buffer.data() + static_cast<std::size_t>(b) * block;
    for (int k = 0; k < length; ++k) {
      std::complex<double> acc{0.0, 0.0};
      const std::complex<double>* w = twiddle.data() + static_cast<std::size_t>(k) * length;
      for (int n = 0; n < length; ++n) acc += w[n] * base[static_cast<std::size_t>(n) * stride];
      line[k] = acc;
    }
    for (int k = 0; k < length; ++k) base[static_cast<std::size_t>(k) * stride] = line[k];
  }
}

}  // namespace

BandEnergy band_energy_raw(const double* data, int channels, int height, int width,
                           BandCutoffs cutoffs) {
  validate_cutoffs(cutoffs);
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw Error(ErrorKind::InvalidArgument, "non-positive dimensions");
  }

  BandEnergy energy;
  energy.cutoffs = cutoffs;
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  std::vector<std::complex<double>> spectrum(plane);

  for (int c = 0; c < channels; ++c) {
    const double* in = data + c * plane;
    double mean = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mean += in[i];
    mean /= static_cast<double>(plane);
    for (std::size_t i = 0; i < plane; ++i) spectrum[i] = {in[i] - mean, 0.0};

    // Rows (contiguous), then columns.
    dft_axis(spectrum, height, width, 1, width);
    std::vector<std::complex<double>> transposed(plane);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        transposed[static_cast<std::size_t>(x) * height + y] =
            spectrum[static_cast<std::size_t>(y) * width + x];
      }
    }
    dft_axis(transposed, width, height, 1, height);

    const double half_h = height / 2.0;
    const double half_w = width / 2.0;
    for (int u = 0; u < height; ++u) {
      const int cu = (u <= height - u) ? u : u - height;  // centered index
      for (int v = 0; v < width; ++v) {
        const int cv = (v <= width - v) ? v : v - width;
        const double r =
            std::sqrt((cu / half_h) * (cu / half_h) + (cv / half_w) * (cv / half_w)) /
            std::numbers::sqrt2;
        const auto f = transposed[static_cast<std::size_t>(v) * height + u];
        const double e = std::norm(f) / static_cast<double>(plane);
        if (r < cutoffs.r_low) {
          energy.low += e;
        } else if (r < cutoffs.r_high) {
          energy.mid += e;
        } else {
          energy.high += e;
        }
      }
    }
  }
  energy.total = energy.low + energy.mid + energy.high;
  return energy;
}

BandEnergy band_energy(const ImageTensor& image, BandCutoffs cutoffs) {
  validate_image(image);
  return band_energy_raw(image.data.data(), image.channels, image.height, image.width,
                         cutoffs);
}

BandEnergy perturbation_band_profile(const ImageTensor& benign,
                                     const ImageTensor& adversarial, BandCutoffs cutoffs) {
  validate_image(benign);
  validate_image(adversarial);
  if (benign.channels != adversarial.channels || benign.height != adversarial.height ||
      benign.width != adversarial.width) {
    throw Error(ErrorKind::ShapeMismatch, "benign and adversarial shapes differ");
  }
  std::vector<double> delta(benign.data.size());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = adversarial.data[i] - benign.data[i];
  }
  return band_energy_raw(delta.data(), benign.channels, benign.height, benign.width, cutoffs);
}

}  // namespace oti
