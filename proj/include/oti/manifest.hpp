#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oti/measures.hpp"

namespace oti {

/// Shortest representation at 9 significant digits ("%.9g").
std::string format_g9(double value);

/// CSV with header `image_id,oar,iti,oti`, UTF-8, LF line endings, values
/// printed with 9 significant digits. image_ids must be unique and must not
/// contain ',' or line breaks.
void save_record_manifest(const std::vector<MeasureRecord>& records,
                          const std::filesystem::path& path);

/// Reads the CSV back; provenance fields of the returned records are empty.
std::vector<MeasureRecord> load_record_manifest(const std::filesystem::path& path);

}  // namespace oti
