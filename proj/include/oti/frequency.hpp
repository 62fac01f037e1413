#pragma once

#include "oti/tensor.hpp"

namespace oti {

/// Radial band boundaries as fractions of the Nyquist radius, 0 < r_low < r_high < 1.
struct BandCutoffs {
  double r_low = 0.125;
  double r_high = 0.5;
};

struct BandEnergy {
  double low = 0.0;
  double mid = 0.0;
  double high = 0.0;
  double total = 0.0;
  BandCutoffs cutoffs;
};

/// Spectral energy of the mean-subtracted channels, split by normalized radius
/// r = sqrt((u'/(H/2))^2 + (v'/(W/2))^2) / sqrt(2) with centered indices u', v':
/// low r < r_low, mid r_low <= r < r_high, high r >= r_high. Per-bin energy is
/// |F|^2 / (H*W), so the total equals the spatial variance * H*W per channel.
BandEnergy band_energy(const ImageTensor& image, BandCutoffs cutoffs = {});

/// Same decomposition over an arbitrary (possibly negative) planar buffer.
BandEnergy band_energy_raw(const double* data, int channels, int height, int width,
                           BandCutoffs cutoffs = {});

/// Band energy of (adversarial - benign), computed without clamping.
BandEnergy perturbation_band_profile(const ImageTensor& benign,
                                     const ImageTensor& adversarial,
                                     BandCutoffs cutoffs = {});

}  // namespace oti
