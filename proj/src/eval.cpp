#include "oti/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "oti/error.hpp"
#include "oti/image_io.hpp"
#include "oti/manifest.hpp"

namespace oti {

namespace {

constexpr char kKeySep = '\x1f';

std::string row_key(const std::string& id, const std::string& target,
                    const std::string& attack) {
  return id + kKeySep + target + kKeySep + attack;
}

}  // namespace

OutcomeTable OutcomeTable::from_rows(std::vector<AttackOutcome> rows) {
  OutcomeTable table;
  table.rows_ = std::move(rows);
  std::set<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < table.rows_.size(); ++i) {
    const auto& row = table.rows_[i];
    const auto [it, inserted] =
        table.index_.emplace(row_key(row.image_id, row.target_model, row.attack), i);
    if (!inserted) {
      throw Error(ErrorKind::DuplicateOutcome,
                  "(" + row.image_id + ", " + row.target_model + ", " + row.attack + ")");
    }
    pairs.emplace(row.target_model, row.attack);
  }
  table.pairs_.assign(pairs.begin(), pairs.end());
  return table;
}

OutcomeTable OutcomeTable::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::UnreadableFile, "cannot open " + path.string());
  std::vector<AttackOutcome> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json object;
    try {
      object = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!object.is_object()) {
      throw Error(ErrorKind::MalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": row is not an object");
    }
    AttackOutcome row;
    try {
      row.image_id = object.at("image_id").get<std::string>();
      row.target_model = object.at("target_model").get<std::string>();
      row.attack = object.at("attack").get<std::string>();
      row.success = object.at("success").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (object.contains("perturbation_norm")) {
      if (!object["perturbation_norm"].is_number()) {
        throw Error(ErrorKind::MalformedHeader,
                    path.string() + ":" + std::to_string(line_no) +
                        ": perturbation_norm must be a number");
      }
      row.perturbation_norm = object["perturbation_norm"].get<double>();
    }
    if (object.contains("pred_mask_path")) {
      row.pred_mask_path = object["pred_mask_path"].get<std::string>();
    }
    for (auto it = object.begin(); it != object.end(); ++it) {
      if (it.key() == "image_id" || it.key() == "target_model" || it.key() == "attack" ||
          it.key() == "success" || it.key() == "perturbation_norm" ||
          it.key() == "pred_mask_path") {
        continue;
      }
      row.extra[it.key()] = it.value();
    }
    rows.push_back(std::move(row));
  }
  return from_rows(std::move(rows));
}

void OutcomeTable::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  for (const auto& row : rows_) {
    nlohmann::ordered_json object;
    object["image_id"] = row.image_id;
    object["target_model"] = row.target_model;
    object["attack"] = row.attack;
    object["success"] = row.success;
    if (row.perturbation_norm) object["perturbation_norm"] = *row.perturbation_norm;
    if (row.pred_mask_path) object["pred_mask_path"] = *row.pred_mask_path;
    for (auto it = row.extra.begin(); it != row.extra.end(); ++it) {
      object[it.key()] = it.value();
    }
    out << object.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed on " + path.string());
}

const AttackOutcome* OutcomeTable::find(const std::string& image_id,
                                        const std::string& target_model,
                                        const std::string& attack) const {
  const auto it = index_.find(row_key(image_id, target_model, attack));
  return it == index_.end() ? nullptr : &rows_[it->second];
}

bool OutcomeTable::single_attack() const {
  std::set<std::string> attacks;
  for (const auto& pair : pairs_) attacks.insert(pair.second);
  return attacks.size() <= 1;
}

std::string target_label(const OutcomeTable& outcomes, const std::string& target_model,
                         const std::string& attack) {
  return outcomes.single_attack() ? target_model : attack + ":" + target_model;
}

double asr(const std::vector<std::string>& selection, const OutcomeTable& outcomes,
           const std::string& target_model, const std::string& attack) {
  if (selection.empty()) {
    throw Error(ErrorKind::InsufficientData, "empty selection");
  }
  std::vector<std::string> missing;
  std::size_t successes = 0;
  for (const auto& id : selection) {
    const AttackOutcome* row = outcomes.find(id, target_model, attack);
    if (row == nullptr) {
      missing.push_back(id);
    } else if (row->success) {
      ++successes;
    }
  }
  if (!missing.empty()) {
    std::string joined;
    for (const auto& id : missing) {
      if (!joined.empty()) joined += ", ";
      joined += id;
    }
    throw Error(ErrorKind::MissingOutcome,
                "no outcome for (" + target_model + ", " + attack + "): " + joined);
  }
  return static_cast<double>(successes) / static_cast<double>(selection.size());
}

EvalReport asr_gain_curve(const RankedCorpus& ranked, const OutcomeTable& outcomes,
                          const std::vector<double>& alphas,
                          const std::vector<uint64_t>& seeds, double eta) {
  if (seeds.empty()) {
    throw Error(ErrorKind::InvalidArgument, "at least one seed is required");
  }
  if (alphas.empty()) {
    throw Error(ErrorKind::InvalidArgument, "at least one alpha is required");
  }
  EvalReport report;
  report.measure_name = ranked.measure_name;
  report.eta = eta;
  report.alphas = alphas;
  report.seeds = seeds;

  for (const auto& [target, attack] : outcomes.target_attack_pairs()) {
    for (double alpha : alphas) {
      GainCell cell;
      cell.target_model = target;
      cell.attack = attack;
      cell.alpha = alpha;

      SelectionSpec measure_spec{alpha, SelectionStrategy::measure, 0};
      cell.asr_measure = asr(select_top_alpha(ranked, measure_spec), outcomes, target, attack);

      double sum = 0.0;
      double first = 0.0;
      bool all_equal = true;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        SelectionSpec random_spec{alpha, SelectionStrategy::random, seeds[s]};
        const double value =
            asr(select_top_alpha(ranked, random_spec), outcomes, target, attack);
        if (s == 0) first = value;
        all_equal &= value == first;
        sum += value;
      }
      // the mean of identical values is that value; keeps the alpha=1 gain at
      // an exact 0 instead of a rounding residue
      cell.asr_random_mean = all_equal ? first : sum / static_cast<double>(seeds.size());
      cell.gain = cell.asr_measure - cell.asr_random_mean;
      cell.pass = cell.gain > eta;
      report.cells.push_back(std::move(cell));
    }
  }

  for (double alpha : alphas) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& cell : report.cells) {
      if (cell.alpha == alpha) {
        sum += cell.gain;
        ++count;
      }
    }
    if (count > 0) report.pooled_gain[alpha] = sum / static_cast<double>(count);
  }
  return report;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;  // mean 1-based rank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::InvalidArgument, "length mismatch in spearman inputs");
  }
  if (x.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "need at least 2 observations");
  }
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::InsufficientData, "zero rank variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<MeasureRecord>& records,
                const std::map<std::string, double>& per_image_score,
                MeasureKind measure) {
  if (records.size() < 2) {
    throw Error(ErrorKind::InsufficientData,
                "need at least 2 records, got " + std::to_string(records.size()));
  }
  std::vector<double> x, y;
  x.reserve(records.size());
  y.reserve(records.size());
  for (const auto& record : records) {
    const auto it = per_image_score.find(record.image_id);
    if (it == per_image_score.end()) {
      throw Error(ErrorKind::MissingScore, "no score for image_id '" + record.image_id + "'");
    }
    switch (measure) {
      case MeasureKind::oar: x.push_back(record.oar); break;
      case MeasureKind::iti: x.push_back(record.iti); break;
      case MeasureKind::oti: x.push_back(record.oti); break;
    }
    y.push_back(it->second);
  }
  return spearman_rho(x, y);
}

SegScores seg_metrics(const ObjectMask& pred, const ObjectMask& truth) {
  if (pred.height != truth.height || pred.width != truth.width) {
    throw Error(ErrorKind::ShapeMismatch,
                "pred " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                    " vs truth " + std::to_string(truth.height) + "x" +
                    std::to_string(truth.width));
  }
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0;
    const bool t = truth.data[i] != 0;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  const bool both_empty = (tp + fp + fn) == 0.0;
  auto safe = [both_empty](double numerator, double denominator) {
    if (denominator == 0.0) return both_empty ? 1.0 : 0.0;
    return numerator / denominator;
  };
  SegScores scores;
  scores.precision = safe(tp, tp + fp);
  scores.f1 = safe(2.0 * tp, 2.0 * tp + fp + fn);
  scores.iou = safe(tp, tp + fp + fn);
  return scores;
}

std::vector<NormCell> norm_by_alpha(const RankedCorpus& ranked, const OutcomeTable& outcomes,
                                    const std::vector<double>& alphas) {
  std::vector<NormCell> cells;
  for (const auto& [target, attack] : outcomes.target_attack_pairs()) {
    for (double alpha : alphas) {
      SelectionSpec spec{alpha, SelectionStrategy::measure, 0};
      const auto selection = select_top_alpha(ranked, spec);
      if (selection.empty()) {
        throw Error(ErrorKind::InsufficientData, "empty selection");
      }
      double sum = 0.0;
      for (const auto& id : selection) {
        const AttackOutcome* row = outcomes.find(id, target, attack);
        if (row == nullptr) {
          throw Error(ErrorKind::MissingOutcome,
                      "no outcome for (" + target + ", " + attack + "): " + id);
        }
        if (!row->perturbation_norm) {
          throw Error(ErrorKind::MissingPayload,
                      "row (" + id + ", " + target + ", " + attack +
                          ") lacks perturbation_norm");
        }
        sum += *row->perturbation_norm;
      }
      NormCell cell;
      cell.target_model = target;
      cell.attack = attack;
      cell.alpha = alpha;
      cell.mean_norm = sum / static_cast<double>(selection.size());
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::vector<SegCell> seg_metrics_by_alpha(const RankedCorpus& ranked,
                                          const OutcomeTable& outcomes,
                                          const std::vector<double>& alphas,
                                          const std::map<std::string, ObjectMask>& truth_masks,
                                          double pred_threshold) {
  std::vector<SegCell> cells;
  for (const auto& [target, attack] : outcomes.target_attack_pairs()) {
    for (double alpha : alphas) {
      SelectionSpec spec{alpha, SelectionStrategy::measure, 0};
      const auto selection = select_top_alpha(ranked, spec);
      if (selection.empty()) {
        throw Error(ErrorKind::InsufficientData, "empty selection");
      }
      SegScores sums;
      for (const auto& id : selection) {
        const AttackOutcome* row = outcomes.find(id, target, attack);
        if (row == nullptr) {
          throw Error(ErrorKind::MissingOutcome,
                      "no outcome for (" + target + ", " + attack + "): " + id);
        }
        if (!row->pred_mask_path) {
          throw Error(ErrorKind::MissingPayload,
                      "row (" + id + ", " + target + ", " + attack +
                          ") lacks pred_mask_path");
        }
        const auto truth = truth_masks.find(id);
        if (truth == truth_masks.end()) {
          throw Error(ErrorKind::MissingPayload, "no truth mask for image_id '" + id + "'");
        }
        const SegScores s =
            seg_metrics(load_mask(*row->pred_mask_path, pred_threshold), truth->second);
        sums.precision += s.precision;
        sums.f1 += s.f1;
        sums.iou += s.iou;
      }
      const double n = static_cast<double>(selection.size());
      SegCell cell;
      cell.target_model = target;
      cell.attack = attack;
      cell.alpha = alpha;
      cell.mean = {sums.precision / n, sums.f1 / n, sums.iou / n};
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

void write_report_json(const EvalReport& report, const OutcomeTable& outcomes,
                       const std::filesystem::path& path,
                       const nlohmann::json& provenance) {
  nlohmann::ordered_json doc;
  doc["provenance"] = provenance;
  doc["measure"] = report.measure_name;
  doc["eta"] = report.eta;
  doc["alphas"] = report.alphas;
  doc["seeds"] = report.seeds;

  doc["asr"] = nlohmann::json::array();
  doc["gain"] = nlohmann::json::array();
  for (const auto& cell : report.cells) {
    const std::string label = target_label(outcomes, cell.target_model, cell.attack);
    doc["asr"].push_back({{"strategy", "measure"},
                          {"alpha", cell.alpha},
                          {"target", label},
                          {"target_model", cell.target_model},
                          {"attack", cell.attack},
                          {"asr", cell.asr_measure}});
    doc["asr"].push_back({{"strategy", "random"},
                          {"alpha", cell.alpha},
                          {"target", label},
                          {"target_model", cell.target_model},
                          {"attack", cell.attack},
                          {"asr", cell.asr_random_mean}});
    doc["gain"].push_back({{"alpha", cell.alpha},
                           {"target", label},
                           {"target_model", cell.target_model},
                           {"attack", cell.attack},
                           {"gain", cell.gain},
                           {"pass", cell.pass}});
  }

  doc["pooled_gain"] = nlohmann::json::array();
  for (const auto& [alpha, gain] : report.pooled_gain) {
    doc["pooled_gain"].push_back({{"alpha", alpha}, {"gain", gain}});
  }

  doc["correlations"] = report.correlations;

  if (!report.seg_cells.empty()) {
    doc["seg_metrics"] = nlohmann::json::array();
    for (const auto& cell : report.seg_cells) {
      doc["seg_metrics"].push_back(
          {{"alpha", cell.alpha},
           {"target", target_label(outcomes, cell.target_model, cell.attack)},
           {"precision", cell.mean.precision},
           {"f1", cell.mean.f1},
           {"iou", cell.mean.iou}});
    }
  }
  if (!report.norm_cells.empty()) {
    doc["perturbation_norms"] = nlohmann::json::array();
    for (const auto& cell : report.norm_cells) {
      doc["perturbation_norms"].push_back(
          {{"alpha", cell.alpha},
           {"target", target_label(outcomes, cell.target_model, cell.attack)},
           {"mean_norm", cell.mean_norm}});
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::IoFailure, "write failed on " + path.string());
}

void write_report_csv(const EvalReport& report, const OutcomeTable& outcomes,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << "strategy,alpha,target,asr\n";
  for (const auto& cell : report.cells) {
    const std::string label = target_label(outcomes, cell.target_model, cell.attack);
    out << "measure," << format_g9(cell.alpha) << ',' << label << ','
        << format_g9(cell.asr_measure) << '\n';
    out << "random," << format_g9(cell.alpha) << ',' << label << ','
        << format_g9(cell.asr_random_mean) << '\n';
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed on " + path.string());
}

}  // namespace oti
