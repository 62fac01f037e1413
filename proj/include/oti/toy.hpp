#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oti/tensor.hpp"

namespace oti {

enum class ObjectShape { disk, square };

/// Parameters of the synthetic disk-vs-square corpus. Objects are visible only
/// through their sinusoidal interior texture (background and texture mean are
/// both 0.5), so amplitude directly controls how much signal an image carries.
struct SynthSpec {
  std::size_t count = 500;
  int side = 16;
  double radius_min = 2.0;
  double radius_max = 6.0;
  double amplitude_min = 0.02;
  double amplitude_max = 0.45;
  uint64_t seed = 1;
};

struct SynthItem {
  std::string image_id;
  ImageTensor image;  // single channel
  ObjectMask mask;    // exact object footprint
  int label = 0;      // 0 = disk, 1 = square
  ObjectShape shape = ObjectShape::disk;
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 0.0;
  double amplitude = 0.0;
};

/// Deterministic per seed; per image the draw order is label, radius,
/// amplitude, center_x, center_y (part of the reproducibility contract).
std::vector<SynthItem> generate_corpus(const SynthSpec& spec);

enum class ToyKind { linear, mlp1 };

const char* to_string(ToyKind kind);
ToyKind toy_kind_from_string(std::string_view name);

/// Tiny binary classifier over flattened pixels. A single logit decides the
/// class: label 1 iff logit > 0.
///   linear: params = [w (D), b]
///   mlp1:   params = [W1 (h x D row-major), b1 (h), w2 (h), b2], ReLU hidden
struct ToyClassifier {
  ToyKind kind = ToyKind::linear;
  int input_dim = 0;
  int hidden_dim = 0;  // 0 for linear
  std::vector<double> params;

  double logit(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return logit(x) > 0.0 ? 1 : 0; }

  /// Logistic loss log(1 + exp(-s * logit)) with s = label ? +1 : -1.
  double loss(std::span<const double> x, int label) const;

  /// d loss / d x by exact backpropagation.
  std::vector<double> input_gradient(std::span<const double> x, int label) const;

  std::size_t param_count() const;
};

struct TrainExample {
  std::vector<double> x;
  int label = 0;
};

struct TrainConfig {
  double learning_rate = 1.0;
  int epochs = 4000;
  uint64_t seed = 1;
  int hidden_dim = 32;  // mlp1 only
};

struct TrainResult {
  ToyClassifier model;
  std::vector<double> epoch_loss;  // mean loss before each update
  double train_accuracy = 0.0;
};

/// Full-batch gradient descent; weights initialized uniform in
/// [-1/sqrt(fan_in), 1/sqrt(fan_in)] from the seeded generator.
TrainResult train(ToyKind kind, const std::vector<TrainExample>& corpus,
                  const TrainConfig& config);

struct AttackResult {
  std::string image_id;
  bool success = false;
  double epsilon_used = 0.0;
  std::optional<double> minimal_epsilon;
  std::optional<std::vector<double>> perturbation;  // adversarial - benign
};

/// One-step sign attack: x' = clamp(x + eps * sign(grad_x loss), 0, 1).
/// Success means the prediction on x' differs from the given label.
AttackResult fgsm(const ToyClassifier& classifier, const ImageTensor& image, int label,
                  double epsilon);

/// Bisection over eps in [0, 1] on the FGSM success predicate; returns the
/// smallest successful eps within tol, or success=false if eps=1 fails.
/// Requires the image to be correctly classified at eps=0.
AttackResult minimal_epsilon(const ToyClassifier& classifier, const ImageTensor& image,
                             int label, double tol = 1e-4);

/// Euclidean distance |w.x + b| / ||w||_2 to the linear decision hyperplane.
double boundary_distance_linear(const ToyClassifier& classifier, const ImageTensor& image);

/// Parameters as little-endian float32 at `path`, metadata at `<path>.json`.
void save_classifier(const ToyClassifier& classifier, const std::filesystem::path& path);
ToyClassifier load_classifier(const std::filesystem::path& path);

std::vector<double> flatten(const ImageTensor& image);

}  // namespace oti
