#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "oti/image_io.hpp"
#include "oti/manifest.hpp"
#include "oti/texture.hpp"

namespace fs = std::filesystem;
using namespace oti;

namespace {

int cli(const std::string& args) {
  const char* path = std::getenv("OTI_CLI");
  REQUIRE_MESSAGE(path != nullptr, "OTI_CLI must point at the built binary");
  const int status = std::system((std::string(path) + " " + args).c_str());
  return WEXITSTATUS(status);
}

// Corpus of three tiny images with masks, written as planar-raw + PGM.
fs::path write_fixture_corpus(const fs::path& dir) {
  Xoshiro256ss rng(61);
  std::ofstream listing(dir / "corpus.tsv", std::ios::binary);
  for (int i = 0; i < 3; ++i) {
    const std::string id = "fix-" + std::to_string(i);
    const ImageTensor image = testing::random_image(rng, 1, 5, 5);
    save_planar_raw(image, dir / (id + ".raw"));
    ImageTensor mask_img = ImageTensor::filled(1, 5, 5, 0.0);
    for (std::size_t p = 0; p < mask_img.data.size(); ++p) {
      mask_img.data[p] = rng.next_below(2) ? 1.0 : 0.0;
    }
    save_netpbm(mask_img, dir / (id + ".pgm"));
    listing << id << '\t' << id << ".raw" << '\t' << id << ".pgm" << '\n';
  }
  return dir / "corpus.tsv";
}

}  // namespace

TEST_CASE("measure command reproduces oracle values to 9 digits") {
  const auto dir = testing::temp_dir("cli_measure");
  const auto listing = write_fixture_corpus(dir);
  const int rc = cli("measure --corpus " + listing.string() + " --output " +
                     (dir / "manifest.csv").string() + " 2>/dev/null");
  REQUIRE(rc == 0);

  const auto records = load_record_manifest(dir / "manifest.csv");
  REQUIRE(records.size() == 3);
  const auto op = TextureOperator::sobel();
  for (const auto& record : records) {
    const ImageTensor image = load_image(dir / (record.image_id + ".raw"));
    const ObjectMask mask = load_mask(dir / (record.image_id + ".pgm"), 0.5);
    const auto expected_map = oracle::texture_map(image, op);
    CHECK(format_g9(record.iti) == format_g9(oracle::mean_of(expected_map)));
    CHECK(format_g9(record.oti) == format_g9(oracle::masked_mean(expected_map, mask, 1)));
    CHECK(format_g9(record.oar) ==
          format_g9(static_cast<double>(mask.ones()) / (5.0 * 5.0)));
  }

  // provenance sidecar rides along
  CHECK(fs::exists(dir / "manifest.csv.meta.json"));
}

TEST_CASE("select --alpha 1.0 --strategy random emits every id") {
  const auto dir = testing::temp_dir("cli_select");
  std::vector<MeasureRecord> records;
  for (int i = 0; i < 7; ++i) {
    MeasureRecord r;
    r.image_id = "r" + std::to_string(i);
    r.oti = i * 0.01;
    records.push_back(r);
  }
  save_record_manifest(records, dir / "manifest.csv");
  const int rc = cli("select --manifest " + (dir / "manifest.csv").string() +
                     " --alpha 1.0 --strategy random --seed 7 --output " +
                     (dir / "sel.txt").string() + " 2>/dev/null");
  REQUIRE(rc == 0);
  std::ifstream in(dir / "sel.txt");
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) ids.insert(line);
  CHECK(ids.size() == 7);
}

TEST_CASE("eval exits 1 and names the id missing from the outcomes") {
  const auto dir = testing::temp_dir("cli_eval");
  std::vector<MeasureRecord> records;
  for (int i = 0; i < 4; ++i) {
    MeasureRecord r;
    r.image_id = "e" + std::to_string(i);
    r.oti = i * 0.1;
    records.push_back(r);
  }
  save_record_manifest(records, dir / "manifest.csv");
  std::ofstream jsonl(dir / "outcomes.jsonl", std::ios::binary);
  jsonl << R"({"image_id":"e0","target_model":"m","attack":"a","success":true})" << "\n";
  jsonl << R"({"image_id":"e1","target_model":"m","attack":"a","success":false})" << "\n";
  jsonl.close();  // e2, e3 have no rows

  const int rc = cli("eval --manifest " + (dir / "manifest.csv").string() + " --outcomes " +
                     (dir / "outcomes.jsonl").string() + " --alphas 1.0 --output-json " +
                     (dir / "r.json").string() + " --output-csv " + (dir / "r.csv").string() +
                     " 2> " + (dir / "err.txt").string());
  CHECK(rc == 1);
  const std::string err = testing::read_bytes(dir / "err.txt");
  CHECK(err.find("e2") != std::string::npos);
  CHECK(err.find("MissingOutcome") != std::string::npos);
}

TEST_CASE("report is byte-deterministic and its alpha=1 gain is exactly zero") {
  const auto dir = testing::temp_dir("cli_report");
  const std::string flags = " --count 40 --side 16 --seed 5 --epochs 120"
                            " --learning-rate 0.5 --alphas 0.1,0.5,1.0 --seeds 1,2,3";
  REQUIRE(cli("report" + flags + " --output-dir " + (dir / "a").string() + " 2>/dev/null") == 0);
  REQUIRE(cli("report" + flags + " --output-dir " + (dir / "b").string() + " 2>/dev/null") == 0);
  for (const char* name : {"manifest.csv", "ranking.csv", "outcomes.jsonl", "report.csv",
                           "summary.txt"}) {
    CAPTURE(name);
    const std::string a = testing::read_bytes(dir / "a" / name);
    CHECK(!a.empty());
    CHECK(a == testing::read_bytes(dir / "b" / name));
  }
  // report.json embeds the invocation hash, so byte-identity needs the exact
  // same invocation: wipe dir a and rerun the identical command
  const std::string first = testing::read_bytes(dir / "a" / "report.json");
  fs::remove_all(dir / "a");
  REQUIRE(cli("report" + flags + " --output-dir " + (dir / "a").string() + " 2>/dev/null") ==
          0);
  CHECK(testing::read_bytes(dir / "a" / "report.json") == first);

  std::ifstream in(dir / "a" / "report.json");
  nlohmann::json doc;
  in >> doc;
  bool saw_alpha_one = false;
  for (const auto& cell : doc["gain"]) {
    if (cell["alpha"] == 1.0) {
      saw_alpha_one = true;
      CHECK(cell["gain"] == 0.0);
    }
  }
  CHECK(saw_alpha_one);
}

TEST_CASE("listing order never changes measured values or rankings") {
  const auto dir = testing::temp_dir("cli_order");
  const auto listing = write_fixture_corpus(dir);

  // reversed copy of the listing
  std::vector<std::string> lines;
  {
    std::ifstream in(listing);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  std::ofstream reversed(dir / "reversed.tsv", std::ios::binary);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) reversed << *it << '\n';
  reversed.close();

  REQUIRE(cli("measure --corpus " + listing.string() + " --output " +
              (dir / "m1.csv").string() + " 2>/dev/null") == 0);
  REQUIRE(cli("measure --corpus " + (dir / "reversed.tsv").string() + " --output " +
              (dir / "m2.csv").string() + " 2>/dev/null") == 0);
  for (const char* manifest : {"m1.csv", "m2.csv"}) {
    REQUIRE(cli("rank --manifest " + (dir / manifest).string() + " --output " +
                (dir / (std::string("r_") + manifest)).string() + " 2>/dev/null") == 0);
  }
  // row order differs between manifests, but the ranked outputs are identical
  CHECK(testing::read_bytes(dir / "r_m1.csv") == testing::read_bytes(dir / "r_m2.csv"));
  CHECK(testing::read_bytes(dir / "m1.csv") != testing::read_bytes(dir / "m2.csv"));
}

TEST_CASE("missing input files exit with the I/O code") {
  const auto dir = testing::temp_dir("cli_io");
  const int rc = cli("rank --manifest " + (dir / "nope.csv").string() + " --output " +
                     (dir / "out.csv").string() + " 2>/dev/null");
  CHECK(rc == 2);
}

TEST_CASE("existing outputs are refused without --force") {
  const auto dir = testing::temp_dir("cli_force");
  std::vector<MeasureRecord> records(1);
  records[0].image_id = "only";
  records[0].oti = 0.5;
  save_record_manifest(records, dir / "manifest.csv");

  const std::string select = "select --manifest " + (dir / "manifest.csv").string() +
                             " --alpha 1.0 --output " + (dir / "sel.txt").string();
  REQUIRE(cli(select + " 2>/dev/null") == 0);
  CHECK(cli(select + " 2>/dev/null") == 1);             // refuses to overwrite
  CHECK(cli(select + " --force 2>/dev/null") == 0);     // explicit consent

  // bad flag values are validation errors
  CHECK(cli("select --manifest " + (dir / "manifest.csv").string() +
            " --alpha 1.7 --output " + (dir / "x.txt").string() + " 2>/dev/null") == 1);
  CHECK(cli("measure 2>/dev/null") == 1);  // missing required option
}
