#include "oti/tensor.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "oti/error.hpp"

namespace oti {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnreadableFile: return "UnreadableFile";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::IntensityOutOfRange: return "IntensityOutOfRange";
    case ErrorKind::MultiChannelMask: return "MultiChannelMask";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::DuplicateImageId: return "DuplicateImageId";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::MissingOutcome: return "MissingOutcome";
    case ErrorKind::DuplicateOutcome: return "DuplicateOutcome";
    case ErrorKind::MissingScore: return "MissingScore";
    case ErrorKind::MissingPayload: return "MissingPayload";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::SpecInfeasible: return "SpecInfeasible";
    case ErrorKind::DegenerateCorpus: return "DegenerateCorpus";
    case ErrorKind::AlreadyMisclassified: return "AlreadyMisclassified";
    case ErrorKind::NotLinear: return "NotLinear";
    case ErrorKind::RefusingOverwrite: return "RefusingOverwrite";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

ImageTensor ImageTensor::filled(int channels, int height, int width, double value) {
  ImageTensor t;
  t.channels = channels;
  t.height = height;
  t.width = width;
  t.data.assign(static_cast<std::size_t>(channels) * height * width, value);
  return t;
}

std::size_t ObjectMask::ones() const {
  return std::accumulate(data.begin(), data.end(), std::size_t{0});
}

ObjectMask ObjectMask::filled(int height, int width, uint8_t value) {
  ObjectMask m;
  m.height = height;
  m.width = width;
  m.data.assign(static_cast<std::size_t>(height) * width, value);
  return m;
}

namespace {

void check_dims(long long channels, long long height, long long width,
                std::size_t element_cap) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw Error(ErrorKind::InvalidArgument, "dimensions must be positive, got " +
                                                std::to_string(channels) + "x" +
                                                std::to_string(height) + "x" +
                                                std::to_string(width));
  }
  if (exceeds_element_cap(channels, height, width, element_cap)) {
    throw Error(ErrorKind::InvalidArgument,
                "tensor of " + std::to_string(channels) + "x" + std::to_string(height) +
                    "x" + std::to_string(width) + " elements exceeds cap " +
                    std::to_string(element_cap));
  }
}

}  // namespace

// Division-based so absurd header dimensions cannot wrap the product.
bool exceeds_element_cap(long long channels, long long height, long long width,
                         std::size_t element_cap) {
  const auto cap = static_cast<unsigned long long>(element_cap);
  const auto c = static_cast<unsigned long long>(channels);
  const auto h = static_cast<unsigned long long>(height);
  const auto w = static_cast<unsigned long long>(width);
  if (c > cap || h > cap / c) return true;
  return w > cap / (c * h);
}

void validate_image(const ImageTensor& image, std::size_t element_cap) {
  check_dims(image.channels, image.height, image.width, element_cap);
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorKind::InvalidArgument,
                "channel count must be 1 or 3, got " + std::to_string(image.channels));
  }
  const std::size_t expected =
      static_cast<std::size_t>(image.channels) * image.height * image.width;
  if (image.data.size() != expected) {
    throw Error(ErrorKind::InvalidArgument,
                "data length " + std::to_string(image.data.size()) + " != C*H*W = " +
                    std::to_string(expected));
  }
  for (double v : image.data) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw Error(ErrorKind::IntensityOutOfRange,
                  "intensity " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

void validate_mask(const ObjectMask& mask, std::size_t element_cap) {
  check_dims(1, mask.height, mask.width, element_cap);
  const std::size_t expected = static_cast<std::size_t>(mask.height) * mask.width;
  if (mask.data.size() != expected) {
    throw Error(ErrorKind::InvalidArgument,
                "mask data length " + std::to_string(mask.data.size()) + " != H*W = " +
                    std::to_string(expected));
  }
  for (uint8_t v : mask.data) {
    if (v != 0 && v != 1) {
      throw Error(ErrorKind::InvalidArgument,
                  "mask element " + std::to_string(v) + " is not 0 or 1");
    }
  }
}

void require_shape_match(const ImageTensor& image, const ObjectMask& mask) {
  if (image.height != mask.height || image.width != mask.width) {
    throw Error(ErrorKind::ShapeMismatch,
                "image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                    " vs mask " + std::to_string(mask.height) + "x" +
                    std::to_string(mask.width));
  }
}

}  // namespace oti
