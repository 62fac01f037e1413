// Test-only reference implementations, written independently of the library
// code paths they check: direct-definition convolution, an O((HW)^2) DFT,
// hypergeometric enumeration, orthogonal projection, rank-then-Pearson
// correlation, and central finite differences.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <vector>

#include "oti/tensor.hpp"
#include "oti/texture.hpp"
#include "oti/toy.hpp"

namespace oracle {

// Direct nested-loop convolution with per-access edge clamping; no index
// tables, no kernel flipping trick (the flip lives in the arithmetic).
inline std::vector<double> texture_map(const oti::ImageTensor& image,
                                       const oti::TextureOperator& op) {
  const int channels = image.channels, height = image.height, width = image.width;
  std::vector<double> out(image.data.size());
  auto pixel = [&](int c, int y, int x) {
    y = std::clamp(y, 0, height - 1);
    x = std::clamp(x, 0, width - 1);
    return image.data[(static_cast<std::size_t>(c) * height + y) * width + x];
  };
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double gx = 0.0, gy = 0.0;
        for (int i = -1; i <= 1; ++i) {
          for (int j = -1; j <= 1; ++j) {
            // true convolution: kernel index (1+i, 1+j) pairs with (y-i, x-j)
            const double kx = op.kernel_x[static_cast<std::size_t>(1 + i) * 3 + (1 + j)];
            const double ky = op.kernel_y[static_cast<std::size_t>(1 + i) * 3 + (1 + j)];
            const double v = pixel(c, y - i, x - j);
            gx += kx * v;
            gy += ky * v;
          }
        }
        const double response = op.combine == oti::Combine::l2_magnitude
                                    ? std::sqrt(gx * gx + gy * gy)
                                    : std::abs(gx) + std::abs(gy);
        out[(static_cast<std::size_t>(c) * height + y) * width + x] = response;
      }
    }
  }
  return out;
}

inline double mean_of(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

inline double masked_mean(const std::vector<double>& map, const oti::ObjectMask& mask,
                          int channels) {
  const std::size_t plane = mask.data.size();
  double sum = 0.0;
  for (int c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask.data[i]) sum += map[static_cast<std::size_t>(c) * plane + i];
    }
  }
  return sum / static_cast<double>(map.size());
}

struct BandTriple {
  double low = 0.0, mid = 0.0, high = 0.0;
};

// O((HW)^2) DFT straight from the definition, one output bin at a time.
inline BandTriple band_energy(const std::vector<double>& data, int channels, int height,
                              int width, double r_low, double r_high) {
  BandTriple bands;
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < channels; ++c) {
    const double* in = data.data() + static_cast<std::size_t>(c) * plane;
    double mean = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mean += in[i];
    mean /= static_cast<double>(plane);
    for (int u = 0; u < height; ++u) {
      for (int v = 0; v < width; ++v) {
        std::complex<double> acc{0.0, 0.0};
        for (int y = 0; y < height; ++y) {
          for (int x = 0; x < width; ++x) {
            const double angle = -2.0 * M_PI * (static_cast<double>(u) * y / height +
                                                static_cast<double>(v) * x / width);
            acc += (in[static_cast<std::size_t>(y) * width + x] - mean) *
                   std::complex<double>(std::cos(angle), std::sin(angle));
          }
        }
        const double energy = std::norm(acc) / static_cast<double>(plane);
        const int cu = (u <= height - u) ? u : u - height;
        const int cv = (v <= width - v) ? v : v - width;
        const double r = std::sqrt((cu / (height / 2.0)) * (cu / (height / 2.0)) +
                                   (cv / (width / 2.0)) * (cv / (width / 2.0))) /
                         std::sqrt(2.0);
        if (r < r_low) {
          bands.low += energy;
        } else if (r < r_high) {
          bands.mid += energy;
        } else {
          bands.high += energy;
        }
      }
    }
  }
  return bands;
}

// E[ASR] of a uniform without-replacement sample of k from n with s successes,
// by enumerating the hypergeometric pmf.
inline double hypergeometric_expected_asr(std::size_t n, std::size_t s, std::size_t k) {
  auto log_choose = [](std::size_t a, std::size_t b) {
    if (b > a) return -std::numeric_limits<double>::infinity();
    return std::lgamma(static_cast<double>(a) + 1) - std::lgamma(static_cast<double>(b) + 1) -
           std::lgamma(static_cast<double>(a - b) + 1);
  };
  double expected = 0.0;
  for (std::size_t j = 0; j <= std::min(s, k); ++j) {
    if (k - j > n - s) continue;
    const double p = std::exp(log_choose(s, j) + log_choose(n - s, k - j) - log_choose(n, k));
    expected += (static_cast<double>(j) / static_cast<double>(k)) * p;
  }
  return expected;
}

// Euclidean boundary distance as the norm of the explicit orthogonal
// projection step onto the hyperplane w.x + b = 0.
inline double projection_distance(const std::vector<double>& w, double b,
                                  const std::vector<double>& x) {
  double dot = b, norm_sq = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    dot += w[i] * x[i];
    norm_sq += w[i] * w[i];
  }
  const double scale = dot / norm_sq;
  double dist_sq = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double step = scale * w[i];  // x - step lies on the hyperplane
    dist_sq += step * step;
  }
  return std::sqrt(dist_sq);
}

// Rank-then-Pearson Spearman, independent of the library implementation.
inline double spearman_reference(std::vector<double> x, std::vector<double> y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) {
        r[idx[k]] = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      }
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Central finite difference of the classifier loss along coordinate `d`.
inline double fd_loss_gradient(const oti::ToyClassifier& model, std::vector<double> x,
                               int label, std::size_t d, double step = 1e-4) {
  x[d] += step;
  const double up = model.loss(x, label);
  x[d] -= 2.0 * step;
  const double down = model.loss(x, label);
  return (up - down) / (2.0 * step);
}

}  // namespace oracle
