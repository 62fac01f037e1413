#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oti/rng.hpp"
#include "oti/tensor.hpp"

namespace testing {

inline oti::ImageTensor make_image(int channels, int height, int width,
                                   std::vector<double> data) {
  oti::ImageTensor t;
  t.channels = channels;
  t.height = height;
  t.width = width;
  t.data = std::move(data);
  return t;
}

inline oti::ObjectMask make_mask(int height, int width, std::vector<uint8_t> data) {
  oti::ObjectMask m;
  m.height = height;
  m.width = width;
  m.data = std::move(data);
  return m;
}

inline oti::ImageTensor random_image(oti::Xoshiro256ss& rng, int channels, int height,
                                     int width) {
  oti::ImageTensor t = oti::ImageTensor::filled(channels, height, width, 0.0);
  for (auto& v : t.data) v = rng.next_unit();
  return t;
}

inline oti::ObjectMask random_mask(oti::Xoshiro256ss& rng, int height, int width) {
  oti::ObjectMask m = oti::ObjectMask::filled(height, width, 0);
  for (auto& v : m.data) v = static_cast<uint8_t>(rng.next_below(2));
  return m;
}

// Fresh directory under the build tree; reused names are wiped first.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::path("test_tmp") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
