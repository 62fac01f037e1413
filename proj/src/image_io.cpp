#include "oti/image_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oti/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "planar-raw reader assumes a little-endian host");

namespace oti {

namespace {

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::UnreadableFile, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::UnreadableFile, "read failed on " + path.string());
  return bytes;
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

long long parse_header_int(const std::string& token, const char* what) {
  if (token.empty()) throw Error(ErrorKind::MalformedHeader, std::string("missing ") + what);
  try {
    std::size_t consumed = 0;
    long long v = std::stoll(token, &consumed);
    if (consumed != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::MalformedHeader,
                std::string("invalid ") + what + " '" + token + "'");
  }
}

ImageTensor load_netpbm(const std::string& bytes, const std::filesystem::path& path,
                        std::size_t element_cap) {
  std::size_t pos = 2;  // past magic
  const int channels = bytes[1] == '5' ? 1 : 3;
  const long long width = parse_header_int(next_token(bytes, pos), "width");
  const long long height = parse_header_int(next_token(bytes, pos), "height");
  const long long maxval = parse_header_int(next_token(bytes, pos), "maxval");
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::MalformedHeader, "non-positive dimensions in " + path.string());
  }
  if (maxval < 1 || maxval > 65535) {
    throw Error(ErrorKind::MalformedHeader,
                "maxval " + std::to_string(maxval) + " outside [1, 65535]");
  }
  if (exceeds_element_cap(channels, height, width, element_cap)) {
    throw Error(ErrorKind::MalformedHeader,
                "declared size exceeds element cap in " + path.string());
  }
  const auto elements = static_cast<unsigned long long>(channels) * height * width;
  // Exactly one whitespace byte separates the header from the payload.
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorKind::MalformedHeader, "missing payload separator in " + path.string());
  }
  ++pos;
  const int bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t payload = static_cast<std::size_t>(elements) * bytes_per_sample;
  if (bytes.size() - pos < payload) {
    throw Error(ErrorKind::MalformedHeader,
                "truncated payload in " + path.string() + ": expected " +
                    std::to_string(payload) + " bytes, found " +
                    std::to_string(bytes.size() - pos));
  }

  ImageTensor out;
  out.channels = channels;
  out.height = static_cast<int>(height);
  out.width = static_cast<int>(width);
  out.data.resize(static_cast<std::size_t>(elements));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
  const std::size_t pixels = static_cast<std::size_t>(height * width);
  // Netpbm payload is pixel-interleaved; our layout is planar.
  for (std::size_t i = 0; i < pixels; ++i) {
    for (int c = 0; c < channels; ++c) {
      long long v;
      if (bytes_per_sample == 1) {
        v = *p++;
      } else {
        v = (static_cast<long long>(p[0]) << 8) | p[1];  // big-endian
        p += 2;
      }
      if (v > maxval) {
        throw Error(ErrorKind::IntensityOutOfRange,
                    "sample " + std::to_string(v) + " exceeds maxval " +
                        std::to_string(maxval));
      }
      out.data[static_cast<std::size_t>(c) * pixels + i] =
          static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  return out;
}

ImageTensor load_planar_raw(const std::string& bytes, const std::filesystem::path& path,
                            std::size_t element_cap) {
  const auto sidecar = std::filesystem::path(path.string() + ".json");
  std::ifstream meta(sidecar);
  if (!meta) throw Error(ErrorKind::UnreadableFile, "cannot open sidecar " + sidecar.string());
  nlohmann::json header;
  try {
    meta >> header;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedHeader, "sidecar " + sidecar.string() + ": " + e.what());
  }
  if (!header.contains("c") || !header.contains("h") || !header.contains("w") ||
      !header["c"].is_number_integer() || !header["h"].is_number_integer() ||
      !header["w"].is_number_integer()) {
    throw Error(ErrorKind::MalformedHeader,
                "sidecar " + sidecar.string() + " must hold integer c, h, w");
  }
  const long long channels = header["c"].get<long long>();
  const long long height = header["h"].get<long long>();
  const long long width = header["w"].get<long long>();
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw Error(ErrorKind::MalformedHeader, "non-positive dimensions in " + sidecar.string());
  }
  if (exceeds_element_cap(channels, height, width, element_cap)) {
    throw Error(ErrorKind::MalformedHeader,
                "declared size exceeds element cap in " + sidecar.string());
  }
  const auto elements = static_cast<unsigned long long>(channels) * height * width;
  if (bytes.size() != elements * sizeof(float)) {
    throw Error(ErrorKind::MalformedHeader,
                "payload of " + path.string() + " is " + std::to_string(bytes.size()) +
                    " bytes, expected " + std::to_string(elements * sizeof(float)));
  }

  ImageTensor out;
  out.channels = static_cast<int>(channels);
  out.height = static_cast<int>(height);
  out.width = static_cast<int>(width);
  out.data.resize(static_cast<std::size_t>(elements));
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    float f;
    std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof(float));
    if (!std::isfinite(f) || f < 0.0f || f > 1.0f) {
      throw Error(ErrorKind::IntensityOutOfRange,
                  "element " + std::to_string(i) + " of " + path.string() +
                      " outside [0, 1]");
    }
    out.data[i] = static_cast<double>(f);
  }
  return out;
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path, std::size_t element_cap) {
  const std::string bytes = read_file_bytes(path);
  ImageTensor image;
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    image = load_netpbm(bytes, path, element_cap);
  } else if (std::filesystem::exists(path.string() + ".json")) {
    image = load_planar_raw(bytes, path, element_cap);
  } else {
    throw Error(ErrorKind::UnsupportedFormat,
                path.string() + " is neither binary netpbm nor planar-raw with sidecar");
  }
  validate_image(image, element_cap);
  return image;
}

ObjectMask binarize(const ImageTensor& image, double threshold) {
  if (image.channels != 1) {
    throw Error(ErrorKind::MultiChannelMask,
                "mask source has " + std::to_string(image.channels) + " channels");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "threshold " + std::to_string(threshold) + " outside (0, 1]");
  }
  ObjectMask mask;
  mask.height = image.height;
  mask.width = image.width;
  mask.data.resize(image.data.size());
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    mask.data[i] = image.data[i] >= threshold ? 1 : 0;
  }
  return mask;
}

ObjectMask load_mask(const std::filesystem::path& path, double threshold,
                     std::size_t element_cap) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "threshold " + std::to_string(threshold) + " outside (0, 1)");
  }
  return binarize(load_image(path, element_cap), threshold);
}

void save_planar_raw(const ImageTensor& image, const std::filesystem::path& path) {
  validate_image(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  std::vector<float> buffer(image.data.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    buffer[i] = static_cast<float>(image.data[i]);
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  if (!out) throw Error(ErrorKind::IoFailure, "write failed on " + path.string());
  out.close();

  nlohmann::json header = {{"c", image.channels}, {"h", image.height}, {"w", image.width}};
  std::ofstream meta(path.string() + ".json", std::ios::trunc);
  if (!meta) throw Error(ErrorKind::IoFailure, "cannot write sidecar of " + path.string());
  meta << header.dump() << "\n";
  if (!meta) throw Error(ErrorKind::IoFailure, "write failed on sidecar of " + path.string());
}

void save_netpbm(const ImageTensor& image, const std::filesystem::path& path, int maxval) {
  validate_image(image);
  if (maxval < 1 || maxval > 65535) {
    throw Error(ErrorKind::InvalidArgument, "maxval " + std::to_string(maxval));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << (image.channels == 1 ? "P5" : "P6") << "\n"
      << image.width << " " << image.height << "\n"
      << maxval << "\n";
  const std::size_t pixels = static_cast<std::size_t>(image.height) * image.width;
  for (std::size_t i = 0; i < pixels; ++i) {
    for (int c = 0; c < image.channels; ++c) {
      const double v = image.data[static_cast<std::size_t>(c) * pixels + i];
      const auto q = static_cast<long long>(std::lround(v * maxval));
      if (maxval > 255) {
        out.put(static_cast<char>((q >> 8) & 0xFF));
        out.put(static_cast<char>(q & 0xFF));
      } else {
        out.put(static_cast<char>(q & 0xFF));
      }
    }
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed on " + path.string());
}

}  // namespace oti
