#include "oti/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include <json.hpp>

#include "oti/error.hpp"
#include "oti/rng.hpp"

namespace oti {

namespace {

void validate_spec(const SynthSpec& spec) {
  if (spec.side < 4) {
    throw Error(ErrorKind::SpecInfeasible, "side must be >= 4, got " + std::to_string(spec.side));
  }
  if (!(spec.radius_min > 0.0 && spec.radius_min <= spec.radius_max)) {
    throw Error(ErrorKind::SpecInfeasible, "invalid radius range");
  }
  if (spec.radius_max > spec.side / 2.0 - 1.0) {
    throw Error(ErrorKind::SpecInfeasible,
                "radius_max " + std::to_string(spec.radius_max) + " cannot fit in side " +
                    std::to_string(spec.side));
  }
  if (!(spec.amplitude_min >= 0.0 && spec.amplitude_min <= spec.amplitude_max &&
        spec.amplitude_max <= 1.0)) {
    throw Error(ErrorKind::SpecInfeasible, "amplitude range must lie within [0, 1]");
  }
}

double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::vector<SynthItem> generate_corpus(const SynthSpec& spec) {
  validate_spec(spec);
  Xoshiro256ss rng(spec.seed);
  const int side = spec.side;
  const double cycles = side / 4.0;  // fixed spatial frequency of the texture
  std::vector<SynthItem> items;
  items.reserve(spec.count);

  for (std::size_t index = 0; index < spec.count; ++index) {
    SynthItem item;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%05zu", index);
    item.image_id = id;
    // Draw order is pinned: label, radius, amplitude, center_x, center_y.
    item.label = static_cast<int>(rng.next_below(2));
    item.shape = item.label == 0 ? ObjectShape::disk : ObjectShape::square;
    item.radius = rng.next_real(spec.radius_min, spec.radius_max);
    item.amplitude = rng.next_real(spec.amplitude_min, spec.amplitude_max);
    item.center_x = rng.next_real(item.radius, side - 1.0 - item.radius);
    item.center_y = rng.next_real(item.radius, side - 1.0 - item.radius);

    item.image = ImageTensor::filled(1, side, side, 0.5);
    item.mask = ObjectMask::filled(side, side, 0);
    for (int y = 0; y < side; ++y) {
      const double dy = y - item.center_y;
      for (int x = 0; x < side; ++x) {
        const double dx = x - item.center_x;
        const bool inside = item.shape == ObjectShape::disk
                                ? dx * dx + dy * dy <= item.radius * item.radius
                                : std::max(std::abs(dx), std::abs(dy)) <= item.radius;
        if (!inside) continue;
        // The object is visible only through this texture: background and
        // texture mean coincide at 0.5, so amplitude controls the signal.
        const double tx = std::sin(2.0 * std::numbers::pi * cycles * (x + 0.5) / side);
        const double ty = std::sin(2.0 * std::numbers::pi * cycles * (y + 0.5) / side);
        const double v = 0.5 + item.amplitude * tx * ty;
        item.image.at(0, y, x) = std::clamp(v, 0.0, 1.0);
        item.mask.data[static_cast<std::size_t>(y) * side + x] = 1;
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

const char* to_string(ToyKind kind) { return kind == ToyKind::linear ? "linear" : "mlp1"; }

ToyKind toy_kind_from_string(std::string_view name) {
  if (name == "linear") return ToyKind::linear;
  if (name == "mlp1") return ToyKind::mlp1;
  throw Error(ErrorKind::InvalidArgument, "unknown classifier kind '" + std::string(name) + "'");
}

std::size_t ToyClassifier::param_count() const {
  if (kind == ToyKind::linear) return static_cast<std::size_t>(input_dim) + 1;
  return static_cast<std::size_t>(hidden_dim) * input_dim + 2 * hidden_dim + 1;
}

double ToyClassifier::logit(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim) {
    throw Error(ErrorKind::ShapeMismatch,
                "input of " + std::to_string(x.size()) + " values, classifier expects " +
                    std::to_string(input_dim));
  }
  if (kind == ToyKind::linear) {
    double f = params[input_dim];  // bias
    for (int d = 0; d < input_dim; ++d) f += params[d] * x[d];
    return f;
  }
  const int d_in = input_dim, h = hidden_dim;
  const double* w1 = params.data();
  const double* b1 = params.data() + static_cast<std::size_t>(h) * d_in;
  const double* w2 = b1 + h;
  const double b2 = w2[h];
  double f = b2;
  for (int j = 0; j < h; ++j) {
    double pre = b1[j];
    const double* row = w1 + static_cast<std::size_t>(j) * d_in;
    // The hidden layer reads 0.5-centered pixels (fixed architectural offset;
    // removes the common-mode component that stalls plain gradient descent).
    for (int d = 0; d < d_in; ++d) pre += row[d] * (x[d] - 0.5);
    if (pre > 0.0) f += w2[j] * pre;
  }
  return f;
}

double ToyClassifier::loss(std::span<const double> x, int label) const {
  const double s = label ? 1.0 : -1.0;
  return softplus(-s * logit(x));
}

std::vector<double> ToyClassifier::input_gradient(std::span<const double> x, int label) const {
  const double s = label ? 1.0 : -1.0;
  std::vector<double> grad(input_dim, 0.0);
  if (kind == ToyKind::linear) {
    const double g = -s * sigmoid(-s * logit(x));
    for (int d = 0; d < input_dim; ++d) grad[d] = g * params[d];
    return grad;
  }
  const int d_in = input_dim, h = hidden_dim;
  const double* w1 = params.data();
  const double* b1 = params.data() + static_cast<std::size_t>(h) * d_in;
  const double* w2 = b1 + h;
  const double b2 = w2[h];
  double f = b2;
  std::vector<uint8_t> active(h, 0);
  for (int j = 0; j < h; ++j) {
    double pre = b1[j];
    const double* row = w1 + static_cast<std::size_t>(j) * d_in;
    for (int d = 0; d < d_in; ++d) pre += row[d] * (x[d] - 0.5);
    if (pre > 0.0) {  // ReLU subgradient 0 at the kink
      active[j] = 1;
      f += w2[j] * pre;
    }
  }
  const double g = -s * sigmoid(-s * f);
  for (int j = 0; j < h; ++j) {
    if (!active[j]) continue;
    const double gj = g * w2[j];
    const double* row = w1 + static_cast<std::size_t>(j) * d_in;
    for (int d = 0; d < d_in; ++d) grad[d] += gj * row[d];
  }
  return grad;
}

TrainResult train(ToyKind kind, const std::vector<TrainExample>& corpus,
                  const TrainConfig& config) {
  if (corpus.empty()) throw Error(ErrorKind::DegenerateCorpus, "empty corpus");
  const int d_in = static_cast<int>(corpus.front().x.size());
  bool saw[2] = {false, false};
  for (const auto& example : corpus) {
    if (static_cast<int>(example.x.size()) != d_in) {
      throw Error(ErrorKind::ShapeMismatch, "examples of differing dimension");
    }
    if (example.label != 0 && example.label != 1) {
      throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
    }
    saw[example.label] = true;
  }
  if (!saw[0] || !saw[1]) {
    throw Error(ErrorKind::DegenerateCorpus, "both classes must be present");
  }
  if (config.epochs < 1 || config.learning_rate <= 0.0 ||
      (kind == ToyKind::mlp1 && config.hidden_dim < 1)) {
    throw Error(ErrorKind::InvalidArgument, "bad training hyperparameters");
  }

  TrainResult result;
  ToyClassifier& model = result.model;
  model.kind = kind;
  model.input_dim = d_in;
  model.hidden_dim = kind == ToyKind::mlp1 ? config.hidden_dim : 0;
  model.params.resize(model.param_count());

  Xoshiro256ss rng(config.seed);
  auto init_range = [&](std::size_t begin, std::size_t end, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = begin; i < end; ++i) model.params[i] = rng.next_real(-bound, bound);
  };
  if (kind == ToyKind::linear) {
    init_range(0, model.params.size(), d_in);
  } else {
    const std::size_t h = model.hidden_dim;
    init_range(0, h * d_in + h, d_in);                          // W1, b1
    init_range(h * d_in + h, model.params.size(), model.hidden_dim);  // w2, b2
  }

  const double n = static_cast<double>(corpus.size());
  std::vector<double> grad(model.params.size());
  std::vector<double> hidden(std::max(model.hidden_dim, 1));
  std::vector<uint8_t> active(std::max(model.hidden_dim, 1));
  result.epoch_loss.reserve(config.epochs);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss_sum = 0.0;
    for (const auto& example : corpus) {
      const double s = example.label ? 1.0 : -1.0;
      if (kind == ToyKind::linear) {
        double f = model.params[d_in];
        for (int d = 0; d < d_in; ++d) f += model.params[d] * example.x[d];
        loss_sum += softplus(-s * f);
        const double g = -s * sigmoid(-s * f) / n;
        for (int d = 0; d < d_in; ++d) grad[d] += g * example.x[d];
        grad[d_in] += g;
      } else {
        const int h = model.hidden_dim;
        const double* w1 = model.params.data();
        const double* b1 = w1 + static_cast<std::size_t>(h) * d_in;
        const double* w2 = b1 + h;
        double f = w2[h];
        for (int j = 0; j < h; ++j) {
          double pre = b1[j];
          const double* row = w1 + static_cast<std::size_t>(j) * d_in;
          for (int d = 0; d < d_in; ++d) pre += row[d] * (example.x[d] - 0.5);
          active[j] = pre > 0.0;
          hidden[j] = pre > 0.0 ? pre : 0.0;
          f += w2[j] * hidden[j];
        }
        loss_sum += softplus(-s * f);
        const double g = -s * sigmoid(-s * f) / n;
        double* g_w1 = grad.data();
        double* g_b1 = g_w1 + static_cast<std::size_t>(h) * d_in;
        double* g_w2 = g_b1 + h;
        for (int j = 0; j < h; ++j) {
          g_w2[j] += g * hidden[j];
          if (!active[j]) continue;
          const double gj = g * w2[j];
          double* g_row = g_w1 + static_cast<std::size_t>(j) * d_in;
          for (int d = 0; d < d_in; ++d) g_row[d] += gj * (example.x[d] - 0.5);
          g_b1[j] += gj;
        }
        g_w2[h] += g;  // b2
      }
    }
    result.epoch_loss.push_back(loss_sum / n);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      model.params[i] -= config.learning_rate * grad[i];
    }
  }

  std::size_t correct = 0;
  for (const auto& example : corpus) {
    correct += model.predict(example.x) == example.label;
  }
  result.train_accuracy = static_cast<double>(correct) / n;
  return result;
}

std::vector<double> flatten(const ImageTensor& image) { return image.data; }

namespace {

void require_input_match(const ToyClassifier& classifier, const ImageTensor& image) {
  if (static_cast<std::size_t>(classifier.input_dim) != image.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                "image with " + std::to_string(image.size()) + " values, classifier expects " +
                    std::to_string(classifier.input_dim));
  }
}

}  // namespace

AttackResult fgsm(const ToyClassifier& classifier, const ImageTensor& image, int label,
                  double epsilon) {
  require_input_match(classifier, image);
  if (epsilon < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must be >= 0");
  }
  const std::vector<double> grad = classifier.input_gradient(image.data, label);
  std::vector<double> adversarial(image.data.size());
  std::vector<double> delta(image.data.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double sign = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
    adversarial[i] = std::clamp(image.data[i] + epsilon * sign, 0.0, 1.0);
    delta[i] = adversarial[i] - image.data[i];
  }
  AttackResult result;
  result.epsilon_used = epsilon;
  result.success = classifier.predict(adversarial) != label;
  result.perturbation = std::move(delta);
  return result;
}

AttackResult minimal_epsilon(const ToyClassifier& classifier, const ImageTensor& image,
                             int label, double tol) {
  require_input_match(classifier, image);
  if (tol <= 0.0) throw Error(ErrorKind::InvalidArgument, "tol must be > 0");
  if (classifier.predict(image.data) != label) {
    throw Error(ErrorKind::AlreadyMisclassified, "image is misclassified at epsilon = 0");
  }
  AttackResult at_one = fgsm(classifier, image, label, 1.0);
  if (!at_one.success) {
    at_one.minimal_epsilon = std::nullopt;
    return at_one;  // success == false: not attackable within the [0, 1] budget
  }
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (fgsm(classifier, image, label, mid).success) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  AttackResult result = fgsm(classifier, image, label, hi);
  result.minimal_epsilon = hi;
  return result;
}

double boundary_distance_linear(const ToyClassifier& classifier, const ImageTensor& image) {
  if (classifier.kind != ToyKind::linear) {
    throw Error(ErrorKind::NotLinear, "boundary distance requires a linear classifier");
  }
  require_input_match(classifier, image);
  double dot = classifier.params[classifier.input_dim];
  double norm_sq = 0.0;
  for (int d = 0; d < classifier.input_dim; ++d) {
    dot += classifier.params[d] * image.data[d];
    norm_sq += classifier.params[d] * classifier.params[d];
  }
  if (norm_sq == 0.0) {
    throw Error(ErrorKind::InvalidArgument, "zero weight vector has no decision boundary");
  }
  return std::abs(dot) / std::sqrt(norm_sq);
}

void save_classifier(const ToyClassifier& classifier, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  std::vector<float> buffer(classifier.params.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    buffer[i] = static_cast<float>(classifier.params[i]);
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  if (!out) throw Error(ErrorKind::IoFailure, "write failed on " + path.string());
  out.close();

  nlohmann::json header = {{"kind", to_string(classifier.kind)},
                           {"input_dim", classifier.input_dim},
                           {"hidden_dim", classifier.hidden_dim},
                           {"classes", 2},
                           {"param_count", classifier.params.size()}};
  std::ofstream meta(path.string() + ".json", std::ios::trunc);
  if (!meta) throw Error(ErrorKind::IoFailure, "cannot write sidecar of " + path.string());
  meta << header.dump() << "\n";
  if (!meta) throw Error(ErrorKind::IoFailure, "write failed on sidecar of " + path.string());
}

ToyClassifier load_classifier(const std::filesystem::path& path) {
  const auto sidecar = std::filesystem::path(path.string() + ".json");
  std::ifstream meta(sidecar);
  if (!meta) throw Error(ErrorKind::UnreadableFile, "cannot open " + sidecar.string());
  nlohmann::json header;
  try {
    meta >> header;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedHeader, "sidecar " + sidecar.string() + ": " + e.what());
  }
  ToyClassifier classifier;
  try {
    classifier.kind = toy_kind_from_string(header.at("kind").get<std::string>());
    classifier.input_dim = header.at("input_dim").get<int>();
    classifier.hidden_dim = header.at("hidden_dim").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedHeader, "sidecar " + sidecar.string() + ": " + e.what());
  }
  if (classifier.input_dim <= 0 ||
      (classifier.kind == ToyKind::mlp1 && classifier.hidden_dim <= 0)) {
    throw Error(ErrorKind::MalformedHeader, "bad dimensions in " + sidecar.string());
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::UnreadableFile, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = classifier.param_count() * sizeof(float);
  if (bytes.size() != expected) {
    throw Error(ErrorKind::MalformedHeader,
                path.string() + " holds " + std::to_string(bytes.size()) +
                    " bytes, expected " + std::to_string(expected));
  }
  classifier.params.resize(classifier.param_count());
  for (std::size_t i = 0; i < classifier.params.size(); ++i) {
    float f;
    std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof(float));
    if (!std::isfinite(f)) {
      throw Error(ErrorKind::MalformedHeader, "non-finite parameter in " + path.string());
    }
    classifier.params[i] = static_cast<double>(f);
  }
  return classifier;
}

}  // namespace oti
