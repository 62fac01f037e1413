#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oti/ranking.hpp"
#include "oti/tensor.hpp"

namespace oti {

/// One attack outcome row; (image_id, target_model, attack) is unique per table.
struct AttackOutcome {
  std::string image_id;
  std::string target_model;
  std::string attack;
  bool success = false;
  std::optional<double> perturbation_norm;
  std::optional<std::string> pred_mask_path;
  nlohmann::json extra = nlohmann::json::object();  // unknown JSONL keys, preserved
};

class OutcomeTable {
 public:
  static OutcomeTable from_rows(std::vector<AttackOutcome> rows);
  static OutcomeTable load_jsonl(const std::filesystem::path& path);
  void save_jsonl(const std::filesystem::path& path) const;

  const AttackOutcome* find(const std::string& image_id, const std::string& target_model,
                            const std::string& attack) const;

  /// Distinct (target_model, attack) pairs, sorted.
  const std::vector<std::pair<std::string, std::string>>& target_attack_pairs() const {
    return pairs_;
  }
  const std::vector<AttackOutcome>& rows() const { return rows_; }
  bool single_attack() const;

 private:
  std::vector<AttackOutcome> rows_;
  std::map<std::string, std::size_t> index_;  // "id\x1ftarget\x1fattack" -> row
  std::vector<std::pair<std::string, std::string>> pairs_;
};

/// Fraction of selected ids whose outcome row for (target_model, attack) is a
/// success. Throws MissingOutcome listing ids without a row.
double asr(const std::vector<std::string>& selection, const OutcomeTable& outcomes,
           const std::string& target_model, const std::string& attack);

struct GainCell {
  std::string target_model;
  std::string attack;
  double alpha = 0.0;
  double asr_measure = 0.0;
  double asr_random_mean = 0.0;
  double gain = 0.0;
  bool pass = false;  // gain > eta
};

struct SegScores {
  double precision = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
};

struct SegCell {
  std::string target_model;
  std::string attack;
  double alpha = 0.0;
  SegScores mean;
};

struct NormCell {
  std::string target_model;
  std::string attack;
  double alpha = 0.0;
  double mean_norm = 0.0;
};

struct EvalReport {
  std::string measure_name;
  double eta = 0.05;
  std::vector<double> alphas;
  std::vector<uint64_t> seeds;
  std::vector<GainCell> cells;                 // per (target, attack, alpha)
  std::map<double, double> pooled_gain;        // alpha -> mean gain over pairs
  std::map<std::string, double> correlations;  // measure name -> Spearman rho
  std::vector<SegCell> seg_cells;
  std::vector<NormCell> norm_cells;
};

/// For every (target_model, attack) pair and every alpha: ASR of the measure
/// selection minus the mean ASR of the seeded random selections; a cell passes
/// iff its gain exceeds eta.
EvalReport asr_gain_curve(const RankedCorpus& ranked, const OutcomeTable& outcomes,
                          const std::vector<double>& alphas,
                          const std::vector<uint64_t>& seeds, double eta);

/// Spearman rank correlation (average ranks over ties) between the chosen
/// measure column and per_image_score. Requires N >= 2 and nonzero rank
/// variance on both sides.
double spearman(const std::vector<MeasureRecord>& records,
                const std::map<std::string, double>& per_image_score,
                MeasureKind measure);

/// Core on parallel value vectors.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

/// precision = TP/(TP+FP), f1 = 2TP/(2TP+FP+FN), iou = TP/(TP+FP+FN).
/// A zero denominator yields 1.0 when both masks are empty, else 0.0.
SegScores seg_metrics(const ObjectMask& pred, const ObjectMask& truth);

/// Mean perturbation_norm over the top-alpha subset, per (target, attack).
/// Rows lacking perturbation_norm raise MissingPayload.
std::vector<NormCell> norm_by_alpha(const RankedCorpus& ranked,
                                    const OutcomeTable& outcomes,
                                    const std::vector<double>& alphas);

/// Mean precision/F1/IoU over the top-alpha subset, per (target, attack).
/// Every selected row must carry pred_mask_path (loaded from disk and
/// binarized at pred_threshold); truth masks are looked up by image_id.
std::vector<SegCell> seg_metrics_by_alpha(const RankedCorpus& ranked,
                                          const OutcomeTable& outcomes,
                                          const std::vector<double>& alphas,
                                          const std::map<std::string, ObjectMask>& truth_masks,
                                          double pred_threshold = 0.5);

/// Label used in report rows: target_model alone when the table holds a single
/// attack, else "attack:target_model".
std::string target_label(const OutcomeTable& outcomes, const std::string& target_model,
                         const std::string& attack);

void write_report_json(const EvalReport& report, const OutcomeTable& outcomes,
                       const std::filesystem::path& path,
                       const nlohmann::json& provenance);

/// Flattened CSV `strategy,alpha,target,asr` for plotting.
void write_report_csv(const EvalReport& report, const OutcomeTable& outcomes,
                      const std::filesystem::path& path);

}  // namespace oti
