#include "oti/measures.hpp"

#include <atomic>
#include <exception>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "oti/error.hpp"

namespace oti {

double oar(const ImageTensor& image, const ObjectMask& mask) {
  validate_image(image);
  validate_mask(mask);
  require_shape_match(image, mask);
  return static_cast<double>(mask.ones()) /
         (static_cast<double>(mask.height) * mask.width);
}

double oti(const ImageTensor& image, const ObjectMask& mask, const TextureOperator& op) {
  validate_mask(mask);
  require_shape_match(image, mask);
  const TextureMap map = convolve_texture(image, op);
  // Accumulation order matches iti() so that a full mask reproduces it exactly.
  double sum = 0.0;
  const std::size_t plane = static_cast<std::size_t>(map.height) * map.width;
  for (int c = 0; c < map.channels; ++c) {
    const double* v = map.data.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask.data[i]) sum += v[i];
    }
  }
  return sum / static_cast<double>(map.data.size());
}

namespace {

MeasureRecord measure_one(const CorpusEntry& entry, const TextureOperator& op,
                          double mask_threshold_used) {
  MeasureRecord record;
  record.image_id = entry.image_id;
  record.oar = oar(entry.image, entry.mask);
  const TextureMap map = convolve_texture(entry.image, op);
  double total = 0.0, masked = 0.0;
  const std::size_t plane = static_cast<std::size_t>(map.height) * map.width;
  for (int c = 0; c < map.channels; ++c) {
    const double* v = map.data.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      total += v[i];
      if (entry.mask.data[i]) masked += v[i];
    }
  }
  record.iti = total / static_cast<double>(map.data.size());
  record.oti = masked / static_cast<double>(map.data.size());
  record.operator_name = op.name;
  record.combine_mode = to_string(op.combine);
  record.mask_threshold = mask_threshold_used;
  return record;
}

}  // namespace

std::vector<MeasureRecord> measure_corpus(const std::vector<CorpusEntry>& entries,
                                          const TextureOperator& op,
                                          double mask_threshold_used, int threads) {
  std::unordered_set<std::string> seen;
  for (const auto& entry : entries) {
    if (!seen.insert(entry.image_id).second) {
      throw Error(ErrorKind::DuplicateImageId, "image_id '" + entry.image_id + "'");
    }
  }

  std::vector<MeasureRecord> records(entries.size());
  std::vector<std::exception_ptr> failures(entries.size());

  auto work = [&](std::size_t index) {
    try {
      records[index] = measure_one(entries[index], op, mask_threshold_used);
    } catch (const Error& e) {
      failures[index] = std::make_exception_ptr(
          Error(e.kind(), "image '" + entries[index].image_id + "': " + e.what()));
    } catch (...) {
      failures[index] = std::current_exception();
    }
  };

  const int workers = std::max(1, threads);
  if (workers == 1 || entries.size() < 2) {
    for (std::size_t i = 0; i < entries.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    const int n = std::min<std::size_t>(workers, entries.size());
    pool.reserve(n);
    for (int t = 0; t < n; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = cursor.fetch_add(1);
          if (i >= entries.size()) return;
          work(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return records;
}

}  // namespace oti
