#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oti/measures.hpp"

namespace oti {

enum class MeasureKind { oar, iti, oti };

const char* to_string(MeasureKind kind);
MeasureKind measure_from_string(std::string_view name);

/// Corpus sorted ascending by measure value (lower value = more attackable),
/// ties broken by ascending image_id.
struct RankedCorpus {
  std::vector<std::pair<std::string, double>> entries;
  std::string measure_name;

  std::size_t size() const { return entries.size(); }
};

enum class SelectionStrategy { measure, random };

const char* to_string(SelectionStrategy strategy);
SelectionStrategy strategy_from_string(std::string_view name);

struct SelectionSpec {
  double alpha = 0.1;  // in (0, 1]
  SelectionStrategy strategy = SelectionStrategy::measure;
  uint64_t seed = 0;  // consulted for strategy=random only
};

RankedCorpus rank(const std::vector<MeasureRecord>& records, MeasureKind measure);

/// ceil(alpha * n), with products within 1e-9 of an integer snapped to it so
/// that e.g. alpha=0.1, n=500 yields 50 despite binary rounding.
std::size_t selection_size(double alpha, std::size_t n);

/// strategy=measure: first ceil(alpha*N) ids of the ranking.
/// strategy=random:  ceil(alpha*N) ids sampled without replacement via a
/// splitmix64-seeded xoshiro256** Fisher-Yates partial shuffle of the ranked
/// id list; deterministic given (seed, ranking order).
std::vector<std::string> select_top_alpha(const RankedCorpus& ranked,
                                          const SelectionSpec& spec);

/// One image_id per line, LF-terminated.
void write_selection(const std::vector<std::string>& ids,
                     const std::filesystem::path& path);

}  // namespace oti
