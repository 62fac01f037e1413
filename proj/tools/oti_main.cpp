// otikit command-line front-end: measure, rank, select, eval, freq, synth,
// toy-train, toy-attack, report. All diagnostics go to stderr; data goes to
// the requested files. Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oti/error.hpp"
#include "oti/eval.hpp"
#include "oti/frequency.hpp"
#include "oti/image_io.hpp"
#include "oti/manifest.hpp"
#include "oti/measures.hpp"
#include "oti/ranking.hpp"
#include "oti/texture.hpp"
#include "oti/toy.hpp"
#include "oti/version.hpp"

namespace fs = std::filesystem;

namespace {

uint64_t fnv1a(const std::string& text) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

struct GlobalOpts {
  fs::path output_dir = ".";
  bool force = false;
  int threads = 1;
  std::string config_hash;
};

nlohmann::json provenance(const GlobalOpts& global, const std::string& command) {
  return {{"tool", "otikit"},
          {"version", oti::kVersion},
          {"command", command},
          {"config_hash", global.config_hash}};
}

void ensure_output_dir(const GlobalOpts& global) {
  std::error_code ec;
  fs::create_directories(global.output_dir, ec);
  if (ec) {
    throw oti::Error(oti::ErrorKind::IoFailure,
                     "cannot create " + global.output_dir.string() + ": " + ec.message());
  }
}

fs::path out_path(const GlobalOpts& global, const std::string& name,
                  const std::string& override_path) {
  fs::path path = override_path.empty() ? global.output_dir / name : fs::path(override_path);
  if (!global.force && fs::exists(path)) {
    throw oti::Error(oti::ErrorKind::RefusingOverwrite,
                     path.string() + " exists (pass --force to replace)");
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  return path;
}

void write_json_file(const nlohmann::json& doc, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw oti::Error(oti::ErrorKind::IoFailure, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw oti::Error(oti::ErrorKind::IoFailure, "write failed on " + path.string());
}

struct ListingRow {
  std::string image_id;
  fs::path image_path;
  std::optional<fs::path> mask_path;
};

// TSV columns: image_id <TAB> image_path [<TAB> mask_path].
// Relative paths are resolved against the listing's directory.
std::vector<ListingRow> load_listing(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw oti::Error(oti::ErrorKind::UnreadableFile, "cannot open " + path.string());
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::vector<ListingRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string id, image_field, mask_field;
    if (!std::getline(ss, id, '\t') || !std::getline(ss, image_field, '\t')) {
      throw oti::Error(oti::ErrorKind::MalformedHeader,
                       path.string() + ":" + std::to_string(line_no) +
                           ": expected image_id<TAB>image_path[<TAB>mask_path]");
    }
    std::getline(ss, mask_field, '\t');
    ListingRow row;
    row.image_id = id;
    fs::path image_path(image_field);
    row.image_path = image_path.is_absolute() ? image_path : base / image_path;
    if (!mask_field.empty()) {
      fs::path mask_path(mask_field);
      row.mask_path = mask_path.is_absolute() ? mask_path : base / mask_path;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// TSV columns: image_id <TAB> label (0 or 1).
std::map<std::string, int> load_labels(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw oti::Error(oti::ErrorKind::UnreadableFile, "cannot open " + path.string());
  std::map<std::string, int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string id, label_field;
    if (!std::getline(ss, id, '\t') || !std::getline(ss, label_field, '\t')) {
      throw oti::Error(oti::ErrorKind::MalformedHeader,
                       path.string() + ":" + std::to_string(line_no) +
                           ": expected image_id<TAB>label");
    }
    if (label_field != "0" && label_field != "1") {
      throw oti::Error(oti::ErrorKind::InvalidArgument,
                       path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    }
    if (!labels.emplace(id, label_field == "1" ? 1 : 0).second) {
      throw oti::Error(oti::ErrorKind::DuplicateImageId,
                       "image_id '" + id + "' in " + path.string());
    }
  }
  return labels;
}

std::vector<oti::CorpusEntry> load_corpus_entries(const std::vector<ListingRow>& rows,
                                                  double mask_threshold) {
  std::vector<oti::CorpusEntry> entries;
  entries.reserve(rows.size());
  for (const auto& row : rows) {
    oti::CorpusEntry entry;
    entry.image_id = row.image_id;
    try {
      entry.image = oti::load_image(row.image_path);
      if (row.mask_path) {
        entry.mask = oti::load_mask(*row.mask_path, mask_threshold);
      } else {
        // No mask listed: the whole image counts as the object.
        entry.mask = oti::ObjectMask::filled(entry.image.height, entry.image.width, 1);
      }
    } catch (const oti::Error& e) {
      throw oti::Error(e.kind(), "image '" + row.image_id + "': " + e.what());
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

void run_parallel(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, threads);
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> pool;
  const std::size_t n = std::min<std::size_t>(workers, count);
  std::vector<std::exception_ptr> failures(n);
  for (std::size_t t = 0; t < n; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (;;) {
          const std::size_t i = cursor.fetch_add(1);
          if (i >= count) return;
          fn(i);
        }
      } catch (...) {
        failures[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
}

std::map<std::string, double> norms_by_id(const oti::OutcomeTable& outcomes) {
  std::map<std::string, double> scores;
  for (const auto& row : outcomes.rows()) {
    if (row.perturbation_norm) scores[row.image_id] = *row.perturbation_norm;
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Subcommand payloads

struct MeasureArgs {
  std::string corpus;
  std::string texture_op = "sobel";
  std::string combine = "l2";
  double mask_threshold = 0.5;
  std::string output;
};

void cmd_measure(const GlobalOpts& global, const MeasureArgs& args) {
  const auto op = oti::TextureOperator::by_name(args.texture_op,
                                                oti::combine_from_string(args.combine));
  const auto rows = load_listing(args.corpus);
  const auto entries = load_corpus_entries(rows, args.mask_threshold);
  const auto records = oti::measure_corpus(entries, op, args.mask_threshold, global.threads);
  ensure_output_dir(global);
  const fs::path manifest = out_path(global, "manifest.csv", args.output);
  oti::save_record_manifest(records, manifest);
  nlohmann::json meta = provenance(global, "measure");
  meta["texture_op"] = op.name;
  meta["combine"] = oti::to_string(op.combine);
  meta["mask_threshold"] = args.mask_threshold;
  write_json_file(meta, manifest.string() + ".meta.json");
  std::cerr << "wrote " << manifest.string() << " (" << records.size() << " records)\n";
}

struct RankArgs {
  std::string manifest;
  std::string measure = "oti";
  std::string output;
};

void cmd_rank(const GlobalOpts& global, const RankArgs& args) {
  const auto records = oti::load_record_manifest(args.manifest);
  const auto ranked = oti::rank(records, oti::measure_from_string(args.measure));
  ensure_output_dir(global);
  const fs::path path = out_path(global, "ranking.csv", args.output);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw oti::Error(oti::ErrorKind::IoFailure, "cannot write " + path.string());
  out << "image_id,value\n";
  for (const auto& [id, value] : ranked.entries) {
    out << id << ',' << oti::format_g9(value) << '\n';
  }
  if (!out) throw oti::Error(oti::ErrorKind::IoFailure, "write failed on " + path.string());
  std::cerr << "wrote " << path.string() << " (" << ranked.size() << " rows, measure "
            << ranked.measure_name << ")\n";
}

struct SelectArgs {
  std::string manifest;
  std::string measure = "oti";
  double alpha = 0.1;
  std::string strategy = "measure";
  uint64_t seed = 0;
  std::string output;
};

void cmd_select(const GlobalOpts& global, const SelectArgs& args) {
  const auto records = oti::load_record_manifest(args.manifest);
  const auto ranked = oti::rank(records, oti::measure_from_string(args.measure));
  oti::SelectionSpec spec;
  spec.alpha = args.alpha;
  spec.strategy = oti::strategy_from_string(args.strategy);
  spec.seed = args.seed;
  const auto ids = oti::select_top_alpha(ranked, spec);
  ensure_output_dir(global);
  const fs::path path = out_path(global, "selection.txt", args.output);
  oti::write_selection(ids, path);
  std::cerr << "wrote " << path.string() << " (" << ids.size() << " of " << ranked.size()
            << " ids)\n";
}

struct EvalArgs {
  std::string manifest;
  std::string measure = "oti";
  std::string outcomes;
  std::vector<double> alphas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double eta = 0.05;
  std::string corpus;  // optional: truth masks for segmentation curves
  double mask_threshold = 0.5;
  std::string output_json;
  std::string output_csv;
};

void cmd_eval(const GlobalOpts& global, const EvalArgs& args) {
  const auto records = oti::load_record_manifest(args.manifest);
  const auto ranked = oti::rank(records, oti::measure_from_string(args.measure));
  const auto outcomes = oti::OutcomeTable::load_jsonl(args.outcomes);

  oti::EvalReport report =
      oti::asr_gain_curve(ranked, outcomes, args.alphas, args.seeds, args.eta);

  const auto scores = norms_by_id(outcomes);
  if (scores.size() == outcomes.rows().size() && !scores.empty() &&
      outcomes.target_attack_pairs().size() == 1) {
    for (auto kind : {oti::MeasureKind::oar, oti::MeasureKind::iti, oti::MeasureKind::oti}) {
      report.correlations[oti::to_string(kind)] = oti::spearman(records, scores, kind);
    }
    report.norm_cells = oti::norm_by_alpha(ranked, outcomes, args.alphas);
  }

  bool any_pred_mask = false;
  for (const auto& row : outcomes.rows()) any_pred_mask |= row.pred_mask_path.has_value();
  if (any_pred_mask && !args.corpus.empty()) {
    std::map<std::string, oti::ObjectMask> truth;
    for (const auto& row : load_listing(args.corpus)) {
      if (row.mask_path) truth.emplace(row.image_id, oti::load_mask(*row.mask_path,
                                                                    args.mask_threshold));
    }
    report.seg_cells =
        oti::seg_metrics_by_alpha(ranked, outcomes, args.alphas, truth, args.mask_threshold);
  }

  ensure_output_dir(global);
  const fs::path json_path = out_path(global, "report.json", args.output_json);
  const fs::path csv_path = out_path(global, "report.csv", args.output_csv);
  oti::write_report_json(report, outcomes, json_path, provenance(global, "eval"));
  oti::write_report_csv(report, outcomes, csv_path);
  std::cerr << "wrote " << json_path.string() << " and " << csv_path.string() << "\n";
}

struct FreqArgs {
  std::string corpus;
  double r_low = 0.125;
  double r_high = 0.5;
  std::string output;
};

void cmd_freq(const GlobalOpts& global, const FreqArgs& args) {
  const auto rows = load_listing(args.corpus);
  ensure_output_dir(global);
  const fs::path path = out_path(global, "freq.csv", args.output);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw oti::Error(oti::ErrorKind::IoFailure, "cannot write " + path.string());
  out << "image_id,low,mid,high,total\n";
  for (const auto& row : rows) {
    oti::BandEnergy energy;
    try {
      energy = oti::band_energy(oti::load_image(row.image_path), {args.r_low, args.r_high});
    } catch (const oti::Error& e) {
      throw oti::Error(e.kind(), "image '" + row.image_id + "': " + e.what());
    }
    out << row.image_id << ',' << oti::format_g9(energy.low) << ','
        << oti::format_g9(energy.mid) << ',' << oti::format_g9(energy.high) << ','
        << oti::format_g9(energy.total) << '\n';
  }
  if (!out) throw oti::Error(oti::ErrorKind::IoFailure, "write failed on " + path.string());
  std::cerr << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
}

struct SynthArgs {
  std::size_t count = 500;
  int side = 16;
  double radius_min = 2.0;
  double radius_max = 6.0;
  double amplitude_min = 0.02;
  double amplitude_max = 0.45;
  uint64_t seed = 1;
};

oti::SynthSpec to_spec(const SynthArgs& args) {
  oti::SynthSpec spec;
  spec.count = args.count;
  spec.side = args.side;
  spec.radius_min = args.radius_min;
  spec.radius_max = args.radius_max;
  spec.amplitude_min = args.amplitude_min;
  spec.amplitude_max = args.amplitude_max;
  spec.seed = args.seed;
  return spec;
}

void cmd_synth(const GlobalOpts& global, const SynthArgs& args) {
  const auto items = oti::generate_corpus(to_spec(args));
  ensure_output_dir(global);
  const fs::path listing_path = out_path(global, "corpus.tsv", "");
  const fs::path labels_path = out_path(global, "labels.tsv", "");
  fs::create_directories(global.output_dir / "images");
  fs::create_directories(global.output_dir / "masks");

  std::ofstream listing(listing_path, std::ios::binary | std::ios::trunc);
  std::ofstream labels(labels_path, std::ios::binary | std::ios::trunc);
  if (!listing || !labels) {
    throw oti::Error(oti::ErrorKind::IoFailure, "cannot write corpus listing");
  }
  for (const auto& item : items) {
    const std::string image_rel = "images/" + item.image_id + ".raw";
    const std::string mask_rel = "masks/" + item.image_id + ".pgm";
    oti::save_planar_raw(item.image, global.output_dir / image_rel);
    oti::ImageTensor mask_image = oti::ImageTensor::filled(1, item.mask.height,
                                                           item.mask.width, 0.0);
    for (std::size_t i = 0; i < item.mask.data.size(); ++i) {
      mask_image.data[i] = item.mask.data[i] ? 1.0 : 0.0;
    }
    oti::save_netpbm(mask_image, global.output_dir / mask_rel);
    listing << item.image_id << '\t' << image_rel << '\t' << mask_rel << '\n';
    labels << item.image_id << '\t' << item.label << '\n';
  }
  if (!listing || !labels) {
    throw oti::Error(oti::ErrorKind::IoFailure, "write failed on corpus listing");
  }
  std::cerr << "wrote " << items.size() << " images under " << global.output_dir.string()
            << "\n";
}

struct ToyTrainArgs {
  std::string corpus;
  std::string labels;
  std::string kind = "mlp1";
  int hidden_dim = 32;
  double learning_rate = 1.0;
  int epochs = 4000;
  uint64_t seed = 1;
  std::string output;
};

void cmd_toy_train(const GlobalOpts& global, const ToyTrainArgs& args) {
  const auto rows = load_listing(args.corpus);
  const auto labels = load_labels(args.labels);
  std::vector<oti::TrainExample> examples;
  examples.reserve(rows.size());
  for (const auto& row : rows) {
    const auto it = labels.find(row.image_id);
    if (it == labels.end()) {
      throw oti::Error(oti::ErrorKind::MissingScore,
                       "no label for image_id '" + row.image_id + "'");
    }
    oti::TrainExample example;
    example.x = oti::flatten(oti::load_image(row.image_path));
    example.label = it->second;
    examples.push_back(std::move(example));
  }
  oti::TrainConfig config;
  config.learning_rate = args.learning_rate;
  config.epochs = args.epochs;
  config.seed = args.seed;
  config.hidden_dim = args.hidden_dim;
  const auto result = oti::train(oti::toy_kind_from_string(args.kind), examples, config);
  ensure_output_dir(global);
  const fs::path path = out_path(global, "model.bin", args.output);
  oti::save_classifier(result.model, path);
  std::cerr << "trained " << args.kind << ": accuracy " << result.train_accuracy
            << ", final loss " << result.epoch_loss.back() << ", wrote " << path.string()
            << "\n";
}

struct ToyAttackArgs {
  std::string model;
  std::string corpus;
  std::string labels;
  double epsilon = -1.0;  // < 0 means "median of minimal epsilons"
  double tol = 1e-4;
  std::string target_name;
  std::string attack_name = "fgsm";
  std::string output;
};

struct AttackRow {
  std::string image_id;
  bool misclassified_clean = false;
  bool censored = false;  // not attackable at the eps=1 cap
  double minimal_epsilon = 0.0;
};

std::vector<AttackRow> attack_corpus(const oti::ToyClassifier& model,
                                     const std::vector<oti::CorpusEntry>& entries,
                                     const std::map<std::string, int>& labels, double tol,
                                     int threads) {
  std::vector<AttackRow> rows(entries.size());
  run_parallel(entries.size(), threads, [&](std::size_t i) {
    const auto& entry = entries[i];
    const auto it = labels.find(entry.image_id);
    if (it == labels.end()) {
      throw oti::Error(oti::ErrorKind::MissingScore,
                       "no label for image_id '" + entry.image_id + "'");
    }
    AttackRow row;
    row.image_id = entry.image_id;
    if (model.predict(entry.image.data) != it->second) {
      row.misclassified_clean = true;
      row.minimal_epsilon = 0.0;
    } else {
      const auto result = oti::minimal_epsilon(model, entry.image, it->second, tol);
      if (result.minimal_epsilon) {
        row.minimal_epsilon = *result.minimal_epsilon;
      } else {
        row.censored = true;
        row.minimal_epsilon = 1.0;  // censored at the budget cap
      }
    }
    rows[i] = std::move(row);
  });
  return rows;
}

double median_epsilon(const std::vector<AttackRow>& rows) {
  std::vector<double> eps;
  eps.reserve(rows.size());
  for (const auto& row : rows) eps.push_back(row.minimal_epsilon);
  std::sort(eps.begin(), eps.end());
  if (eps.empty()) throw oti::Error(oti::ErrorKind::InsufficientData, "no attack rows");
  const std::size_t n = eps.size();
  return n % 2 == 1 ? eps[n / 2] : 0.5 * (eps[n / 2 - 1] + eps[n / 2]);
}

oti::OutcomeTable rows_to_outcomes(const std::vector<AttackRow>& rows, double budget,
                                   const std::string& target_name,
                                   const std::string& attack_name) {
  std::vector<oti::AttackOutcome> outcomes;
  outcomes.reserve(rows.size());
  for (const auto& row : rows) {
    oti::AttackOutcome outcome;
    outcome.image_id = row.image_id;
    outcome.target_model = target_name;
    outcome.attack = attack_name;
    outcome.success = !row.censored && row.minimal_epsilon <= budget;
    outcome.perturbation_norm = row.minimal_epsilon;
    if (row.misclassified_clean) outcome.extra["misclassified_clean"] = true;
    if (row.censored) outcome.extra["censored"] = true;
    outcomes.push_back(std::move(outcome));
  }
  return oti::OutcomeTable::from_rows(std::move(outcomes));
}

void cmd_toy_attack(const GlobalOpts& global, const ToyAttackArgs& args) {
  const auto model = oti::load_classifier(args.model);
  const auto rows = load_listing(args.corpus);
  const auto labels = load_labels(args.labels);
  const auto entries = load_corpus_entries(rows, 0.5);
  const auto attack_rows = attack_corpus(model, entries, labels, args.tol, global.threads);
  const double budget = args.epsilon >= 0.0 ? args.epsilon : median_epsilon(attack_rows);
  const std::string target =
      args.target_name.empty() ? std::string("toy-") + oti::to_string(model.kind)
                               : args.target_name;
  const auto outcomes = rows_to_outcomes(attack_rows, budget, target, args.attack_name);
  ensure_output_dir(global);
  const fs::path path = out_path(global, "outcomes.jsonl", args.output);
  outcomes.save_jsonl(path);
  std::size_t successes = 0;
  for (const auto& row : outcomes.rows()) successes += row.success;
  std::cerr << "wrote " << path.string() << " (budget " << budget << ", ASR "
            << static_cast<double>(successes) / std::max<std::size_t>(1, outcomes.rows().size())
            << ")\n";
}

struct ReportArgs {
  SynthArgs synth;
  std::string kind = "mlp1";
  int hidden_dim = 32;
  double learning_rate = 1.0;
  int epochs = 4000;
  uint64_t train_seed = 1;
  double tol = 1e-4;
  double epsilon = -1.0;
  std::string texture_op = "sobel";
  std::string combine = "l2";
  std::string measure = "oti";
  std::vector<double> alphas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double eta = 0.05;
};

void cmd_report(const GlobalOpts& global, const ReportArgs& args) {
  // synth -> measure -> rank -> toy-train -> toy-attack -> eval, in memory.
  const auto items = oti::generate_corpus(to_spec(args.synth));

  std::vector<oti::CorpusEntry> entries;
  std::vector<oti::TrainExample> examples;
  std::map<std::string, int> labels;
  entries.reserve(items.size());
  examples.reserve(items.size());
  for (const auto& item : items) {
    entries.push_back({item.image_id, item.image, item.mask});
    examples.push_back({oti::flatten(item.image), item.label});
    labels[item.image_id] = item.label;
  }

  const auto op = oti::TextureOperator::by_name(args.texture_op,
                                                oti::combine_from_string(args.combine));
  const auto records = oti::measure_corpus(entries, op, 0.5, global.threads);

  oti::TrainConfig config;
  config.learning_rate = args.learning_rate;
  config.epochs = args.epochs;
  config.seed = args.train_seed;
  config.hidden_dim = args.hidden_dim;
  const auto trained = oti::train(oti::toy_kind_from_string(args.kind), examples, config);
  std::cerr << "train accuracy " << trained.train_accuracy << ", final loss "
            << trained.epoch_loss.back() << "\n";

  const auto attack_rows =
      attack_corpus(trained.model, entries, labels, args.tol, global.threads);
  const double budget = args.epsilon >= 0.0 ? args.epsilon : median_epsilon(attack_rows);
  const std::string target = std::string("toy-") + oti::to_string(trained.model.kind);
  const auto outcomes = rows_to_outcomes(attack_rows, budget, target, "fgsm");

  const auto ranked = oti::rank(records, oti::measure_from_string(args.measure));
  oti::EvalReport report =
      oti::asr_gain_curve(ranked, outcomes, args.alphas, args.seeds, args.eta);
  const auto scores = norms_by_id(outcomes);
  for (auto kind : {oti::MeasureKind::oar, oti::MeasureKind::iti, oti::MeasureKind::oti}) {
    report.correlations[oti::to_string(kind)] = oti::spearman(records, scores, kind);
  }
  report.norm_cells = oti::norm_by_alpha(ranked, outcomes, args.alphas);

  ensure_output_dir(global);
  const fs::path manifest_path = out_path(global, "manifest.csv", "");
  const fs::path ranking_path = out_path(global, "ranking.csv", "");
  const fs::path outcomes_path = out_path(global, "outcomes.jsonl", "");
  const fs::path report_json_path = out_path(global, "report.json", "");
  const fs::path report_csv_path = out_path(global, "report.csv", "");
  const fs::path summary_path = out_path(global, "summary.txt", "");

  oti::save_record_manifest(records, manifest_path);
  nlohmann::json meta = provenance(global, "report");
  meta["texture_op"] = op.name;
  meta["combine"] = oti::to_string(op.combine);
  meta["mask_threshold"] = 0.5;
  write_json_file(meta, manifest_path.string() + ".meta.json");

  {
    std::ofstream out(ranking_path, std::ios::binary | std::ios::trunc);
    if (!out) throw oti::Error(oti::ErrorKind::IoFailure, "cannot write ranking.csv");
    out << "image_id,value\n";
    for (const auto& [id, value] : ranked.entries) {
      out << id << ',' << oti::format_g9(value) << '\n';
    }
  }
  outcomes.save_jsonl(outcomes_path);
  oti::write_report_json(report, outcomes, report_json_path, provenance(global, "report"));
  oti::write_report_csv(report, outcomes, report_csv_path);

  // Summary: the alpha = 10% gain and the measure/minimal-epsilon correlations.
  double gain_at_01 = 0.0;
  bool have_01 = false;
  for (const auto& cell : report.cells) {
    if (std::abs(cell.alpha - 0.1) < 1e-12) {
      gain_at_01 = cell.gain;
      have_01 = true;
      break;
    }
  }
  std::ofstream summary(summary_path, std::ios::binary | std::ios::trunc);
  if (!summary) throw oti::Error(oti::ErrorKind::IoFailure, "cannot write summary.txt");
  summary << "corpus_count=" << items.size() << "\n"
          << "train_accuracy=" << oti::format_g9(trained.train_accuracy) << "\n"
          << "epsilon_budget=" << oti::format_g9(budget) << "\n"
          << "measure=" << args.measure << "\n";
  if (have_01) {
    summary << "asr_gain_alpha_0.1=" << oti::format_g9(gain_at_01) << "\n";
  }
  for (const auto& [name, rho] : report.correlations) {
    summary << "spearman_" << name << "_minimal_epsilon=" << oti::format_g9(rho) << "\n";
  }
  if (!summary) throw oti::Error(oti::ErrorKind::IoFailure, "write failed on summary.txt");
  std::cerr << "wrote report under " << global.output_dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object texture intensity toolkit"};
  app.require_subcommand(1);

  GlobalOpts global;
  {
    std::string joined;
    for (int i = 1; i < argc; ++i) {
      joined += argv[i];
      joined += ' ';
    }
    global.config_hash = hex64(fnv1a(joined));
  }

  auto add_global = [&](CLI::App* cmd) {
    cmd->add_option("--output-dir", global.output_dir, "Directory for output files");
    cmd->add_flag("--force", global.force, "Overwrite existing output files");
    cmd->add_option("--threads", global.threads, "Worker cap for per-image stages")
        ->check(CLI::Range(1, 1024));
  };

  MeasureArgs measure_args;
  auto* measure_cmd = app.add_subcommand("measure", "Compute OAR/ITI/OTI for a corpus");
  measure_cmd->add_option("--corpus", measure_args.corpus, "Corpus listing TSV")->required();
  measure_cmd->add_option("--texture-op", measure_args.texture_op, "sobel|scharr|laplacian");
  measure_cmd->add_option("--combine", measure_args.combine, "l2|l1");
  measure_cmd->add_option("--mask-threshold", measure_args.mask_threshold,
                          "Mask binarization threshold in (0,1)");
  measure_cmd->add_option("--output", measure_args.output, "Manifest CSV path");
  add_global(measure_cmd);

  RankArgs rank_args;
  auto* rank_cmd = app.add_subcommand("rank", "Sort a manifest by a measure (ascending)");
  rank_cmd->add_option("--manifest", rank_args.manifest, "Manifest CSV")->required();
  rank_cmd->add_option("--measure", rank_args.measure, "oar|iti|oti");
  rank_cmd->add_option("--output", rank_args.output, "Ranking CSV path");
  add_global(rank_cmd);

  SelectArgs select_args;
  auto* select_cmd = app.add_subcommand("select", "Materialize a top-alpha subset");
  select_cmd->add_option("--manifest", select_args.manifest, "Manifest CSV")->required();
  select_cmd->add_option("--measure", select_args.measure, "oar|iti|oti");
  select_cmd->add_option("--alpha", select_args.alpha, "Sampling rate in (0,1]")->required();
  select_cmd->add_option("--strategy", select_args.strategy, "measure|random");
  select_cmd->add_option("--seed", select_args.seed, "Seed for strategy=random");
  select_cmd->add_option("--output", select_args.output, "Selection file path");
  add_global(select_cmd);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "ASR curves and gains from an outcome table");
  eval_cmd->add_option("--manifest", eval_args.manifest, "Manifest CSV")->required();
  eval_cmd->add_option("--measure", eval_args.measure, "oar|iti|oti");
  eval_cmd->add_option("--outcomes", eval_args.outcomes, "Outcome JSONL")->required();
  eval_cmd->add_option("--alphas", eval_args.alphas, "Comma list of sampling rates")
      ->delimiter(',');
  eval_cmd->add_option("--seeds", eval_args.seeds, "Comma list of random-baseline seeds")
      ->delimiter(',');
  eval_cmd->add_option("--eta", eval_args.eta, "ASR gain threshold");
  eval_cmd->add_option("--corpus", eval_args.corpus, "Corpus TSV with truth masks (optional)");
  eval_cmd->add_option("--mask-threshold", eval_args.mask_threshold,
                       "Mask binarization threshold");
  eval_cmd->add_option("--output-json", eval_args.output_json, "Report JSON path");
  eval_cmd->add_option("--output-csv", eval_args.output_csv, "Report CSV path");
  add_global(eval_cmd);

  FreqArgs freq_args;
  auto* freq_cmd = app.add_subcommand("freq", "Radial frequency-band energies per image");
  freq_cmd->add_option("--corpus", freq_args.corpus, "Corpus listing TSV")->required();
  freq_cmd->add_option("--r-low", freq_args.r_low, "Low/mid cutoff in (0,1)");
  freq_cmd->add_option("--r-high", freq_args.r_high, "Mid/high cutoff in (0,1)");
  freq_cmd->add_option("--output", freq_args.output, "Band CSV path");
  add_global(freq_cmd);

  auto add_synth_options = [](CLI::App* cmd, SynthArgs& args) {
    cmd->add_option("--count", args.count, "Number of images");
    cmd->add_option("--side", args.side, "Image side length");
    cmd->add_option("--radius-min", args.radius_min, "Smallest object radius");
    cmd->add_option("--radius-max", args.radius_max, "Largest object radius");
    cmd->add_option("--amplitude-min", args.amplitude_min, "Weakest texture amplitude");
    cmd->add_option("--amplitude-max", args.amplitude_max, "Strongest texture amplitude");
    cmd->add_option("--seed", args.seed, "Corpus seed");
  };

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic disk/square corpus");
  add_synth_options(synth_cmd, synth_args);
  add_global(synth_cmd);

  ToyTrainArgs train_args;
  auto* train_cmd = app.add_subcommand("toy-train", "Train the toy classifier");
  train_cmd->add_option("--corpus", train_args.corpus, "Corpus listing TSV")->required();
  train_cmd->add_option("--labels", train_args.labels, "Labels TSV")->required();
  train_cmd->add_option("--kind", train_args.kind, "linear|mlp1");
  train_cmd->add_option("--hidden-dim", train_args.hidden_dim, "Hidden units (mlp1)");
  train_cmd->add_option("--learning-rate", train_args.learning_rate, "Step size");
  train_cmd->add_option("--epochs", train_args.epochs, "Full-batch epochs");
  train_cmd->add_option("--seed", train_args.seed, "Initialization seed");
  train_cmd->add_option("--output", train_args.output, "Model path");
  add_global(train_cmd);

  ToyAttackArgs attack_args;
  auto* attack_cmd = app.add_subcommand("toy-attack", "Minimal-epsilon FGSM over a corpus");
  attack_cmd->add_option("--model", attack_args.model, "Trained model path")->required();
  attack_cmd->add_option("--corpus", attack_args.corpus, "Corpus listing TSV")->required();
  attack_cmd->add_option("--labels", attack_args.labels, "Labels TSV")->required();
  attack_cmd->add_option("--epsilon", attack_args.epsilon,
                         "Success budget; omit to use the median minimal epsilon");
  attack_cmd->add_option("--tol", attack_args.tol, "Bisection tolerance");
  attack_cmd->add_option("--target-name", attack_args.target_name, "target_model label");
  attack_cmd->add_option("--attack-name", attack_args.attack_name, "attack label");
  attack_cmd->add_option("--output", attack_args.output, "Outcome JSONL path");
  add_global(attack_cmd);

  ReportArgs report_args;
  auto* report_cmd =
      app.add_subcommand("report", "End-to-end synth/measure/attack/eval pipeline");
  add_synth_options(report_cmd, report_args.synth);
  report_cmd->add_option("--kind", report_args.kind, "linear|mlp1");
  report_cmd->add_option("--hidden-dim", report_args.hidden_dim, "Hidden units (mlp1)");
  report_cmd->add_option("--learning-rate", report_args.learning_rate, "Step size");
  report_cmd->add_option("--epochs", report_args.epochs, "Full-batch epochs");
  report_cmd->add_option("--train-seed", report_args.train_seed, "Initialization seed");
  report_cmd->add_option("--tol", report_args.tol, "Bisection tolerance");
  report_cmd->add_option("--epsilon", report_args.epsilon,
                         "Success budget; omit to use the median minimal epsilon");
  report_cmd->add_option("--texture-op", report_args.texture_op, "sobel|scharr|laplacian");
  report_cmd->add_option("--combine", report_args.combine, "l2|l1");
  report_cmd->add_option("--measure", report_args.measure, "oar|iti|oti");
  report_cmd->add_option("--alphas", report_args.alphas, "Comma list of sampling rates")
      ->delimiter(',');
  report_cmd->add_option("--seeds", report_args.seeds, "Comma list of baseline seeds")
      ->delimiter(',');
  report_cmd->add_option("--eta", report_args.eta, "ASR gain threshold");
  add_global(report_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (measure_cmd->parsed()) cmd_measure(global, measure_args);
    if (rank_cmd->parsed()) cmd_rank(global, rank_args);
    if (select_cmd->parsed()) cmd_select(global, select_args);
    if (eval_cmd->parsed()) cmd_eval(global, eval_args);
    if (freq_cmd->parsed()) cmd_freq(global, freq_args);
    if (synth_cmd->parsed()) cmd_synth(global, synth_args);
    if (train_cmd->parsed()) cmd_toy_train(global, train_args);
    if (attack_cmd->parsed()) cmd_toy_attack(global, attack_args);
    if (report_cmd->parsed()) cmd_report(global, report_args);
  } catch (const oti::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_io() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
