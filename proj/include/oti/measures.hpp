#pragma once

#include <string>
#include <vector>

#include "oti/tensor.hpp"
#include "oti/texture.hpp"

namespace oti {

/// Per-image attackability measures plus the provenance needed to reproduce them.
struct MeasureRecord {
  std::string image_id;
  double oar = 0.0;
  double iti = 0.0;
  double oti = 0.0;
  std::string operator_name;
  std::string combine_mode;
  double mask_threshold = 0.5;
};

/// Fraction of the image area covered by the object mask; in [0, 1].
/// The mask is broadcast over channels, so the value is (sum mask) / (H*W).
double oar(const ImageTensor& image, const ObjectMask& mask);

/// Mean texture response restricted to mask==1 pixels (mask broadcast over
/// channels), averaged over all C*H*W elements.
double oti(const ImageTensor& image, const ObjectMask& mask, const TextureOperator& op);

struct CorpusEntry {
  std::string image_id;
  ImageTensor image;
  ObjectMask mask;
};

/// One record per entry, in input order, independent of thread count.
/// mask_threshold_used is provenance only (the threshold applied upstream).
std::vector<MeasureRecord> measure_corpus(const std::vector<CorpusEntry>& entries,
                                          const TextureOperator& op,
                                          double mask_threshold_used = 0.5,
                                          int threads = 1);

}  // namespace oti
