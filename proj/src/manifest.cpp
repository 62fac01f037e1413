#include "oti/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "oti/error.hpp"

namespace oti {

std::string format_g9(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

namespace {

void check_id(const std::string& id) {
  if (id.empty() || id.find_first_of(",\r\n") != std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "image_id '" + id + "' not CSV-safe");
  }
}

}  // namespace

void save_record_manifest(const std::vector<MeasureRecord>& records,
                          const std::filesystem::path& path) {
  std::unordered_set<std::string> seen;
  for (const auto& record : records) {
    check_id(record.image_id);
    if (!seen.insert(record.image_id).second) {
      throw Error(ErrorKind::DuplicateImageId, "image_id '" + record.image_id + "'");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);  // binary keeps LF on all hosts
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << "image_id,oar,iti,oti\n";
  for (const auto& record : records) {
    out << record.image_id << ',' << format_g9(record.oar) << ',' << format_g9(record.iti)
        << ',' << format_g9(record.oti) << '\n';
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed on " + path.string());
}

std::vector<MeasureRecord> load_record_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::UnreadableFile, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::MalformedHeader, path.string() + " is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "image_id,oar,iti,oti") {
    throw Error(ErrorKind::MalformedHeader,
                "unexpected manifest header '" + line + "' in " + path.string());
  }

  std::vector<MeasureRecord> records;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string id, oar_s, iti_s, oti_s, excess;
    if (!std::getline(row, id, ',') || !std::getline(row, oar_s, ',') ||
        !std::getline(row, iti_s, ',') || !std::getline(row, oti_s, ',') ||
        std::getline(row, excess, ',')) {
      throw Error(ErrorKind::MalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    MeasureRecord record;
    record.image_id = id;
    try {
      record.oar = std::stod(oar_s);
      record.iti = std::stod(iti_s);
      record.oti = std::stod(oti_s);
    } catch (const std::exception&) {
      throw Error(ErrorKind::MalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": bad numeric field");
    }
    if (!seen.insert(record.image_id).second) {
      throw Error(ErrorKind::DuplicateImageId,
                  "image_id '" + record.image_id + "' in " + path.string());
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace oti
