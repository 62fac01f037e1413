#include "oti/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "oti/error.hpp"
#include "oti/rng.hpp"

namespace oti {

const char* to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::oar: return "oar";
    case MeasureKind::iti: return "iti";
    case MeasureKind::oti: return "oti";
  }
  return "?";
}

MeasureKind measure_from_string(std::string_view name) {
  if (name == "oar") return MeasureKind::oar;
  if (name == "iti") return MeasureKind::iti;
  if (name == "oti") return MeasureKind::oti;
  throw Error(ErrorKind::InvalidArgument, "unknown measure '" + std::string(name) + "'");
}

const char* to_string(SelectionStrategy strategy) {
  return strategy == SelectionStrategy::measure ? "measure" : "random";
}

SelectionStrategy strategy_from_string(std::string_view name) {
  if (name == "measure") return SelectionStrategy::measure;
  if (name == "random") return SelectionStrategy::random;
  throw Error(ErrorKind::InvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

RankedCorpus rank(const std::vector<MeasureRecord>& records, MeasureKind measure) {
  std::unordered_set<std::string> seen;
  RankedCorpus ranked;
  ranked.measure_name = to_string(measure);
  ranked.entries.reserve(records.size());
  for (const auto& record : records) {
    if (!seen.insert(record.image_id).second) {
      throw Error(ErrorKind::DuplicateImageId, "image_id '" + record.image_id + "'");
    }
    double value = 0.0;
    switch (measure) {
      case MeasureKind::oar: value = record.oar; break;
      case MeasureKind::iti: value = record.iti; break;
      case MeasureKind::oti: value = record.oti; break;
    }
    ranked.entries.emplace_back(record.image_id, value);
  }
  std::sort(ranked.entries.begin(), ranked.entries.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second < b.second;
              return a.first < b.first;
            });
  return ranked;
}

std::size_t selection_size(double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "alpha " + std::to_string(alpha) + " outside (0, 1]");
  }
  // Snap products within 1e-9 of an integer before ceil, so binary rounding of
  // e.g. 0.1 * 500 cannot inflate the subset by one.
  const double product = alpha * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::ceil(product - 1e-9));
  return std::min(k, n);
}

std::vector<std::string> select_top_alpha(const RankedCorpus& ranked,
                                          const SelectionSpec& spec) {
  const std::size_t k = selection_size(spec.alpha, ranked.size());
  std::vector<std::string> ids;
  if (spec.strategy == SelectionStrategy::measure) {
    ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) ids.push_back(ranked.entries[i].first);
    return ids;
  }
  // Partial Fisher-Yates over the ranked id list.
  ids.reserve(ranked.size());
  for (const auto& entry : ranked.entries) ids.push_back(entry.first);
  Xoshiro256ss rng(spec.seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.next_below(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  return ids;
}

void write_selection(const std::vector<std::string>& ids,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  for (const auto& id : ids) out << id << '\n';
  if (!out) throw Error(ErrorKind::IoFailure, "write failed on " + path.string());
}

}  // namespace oti
