#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "forgepipe/dataio.hpp"
#include "forgepipe/losses.hpp"

namespace forgepipe {

inline constexpr int kRealClass = 0;
inline constexpr int kFakeClass = 1;

// [zv | za] in that order; zv alone when audio is absent.
std::vector<float> concat_modalities(const ModalityEmbedding& zv,
                                     const std::optional<ModalityEmbedding>& za);

// Linear(d_in, h1) -> ReLU -> Linear(h1, h2) -> ReLU -> Linear(h2, 2).
// Weights are stored [out x in].
struct HeadParams {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  std::size_t d_in() const noexcept { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden1() const noexcept { return static_cast<std::size_t>(w1.rows()); }
  std::size_t hidden2() const noexcept { return static_cast<std::size_t>(w2.rows()); }

  static HeadParams zeros(std::size_t d_in, std::size_t h1, std::size_t h2);
  bool operator==(const HeadParams& other) const;
};

void validate(const HeadParams& params);

// He-style uniform init, U(-sqrt(6/fan_in), +sqrt(6/fan_in)); zero biases.
HeadParams init_head(std::size_t d_in, std::size_t h1, std::size_t h2, std::uint64_t seed);

struct HeadOutput {
  std::array<double, 2> logits{};
  std::array<double, 2> log_probs{};
  // Probability of the fake class.
  double score = 0.0;
};

HeadOutput forward(const HeadParams& params, std::span<const float> x);

struct BceValue {
  double loss = 0.0;
  double grad = 0.0;  // dL/dscore
};

// Standard (negated) binary cross-entropy of a probability.
BceValue bce_loss(double score, int label);

struct HeadBackward {
  double loss = 0.0;  // -log_softmax(logits)[label]
  HeadParams grad;
};

HeadBackward backward(const HeadParams& params, std::span<const float> x, int label);

struct OptimizerState {
  std::int64_t step = 0;
  HeadParams m;
  HeadParams v;
  double lr0 = 1e-5;
  double alpha = 0.95;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t total_steps = 1;
};

// lr0 * (alpha + (1 - alpha) * (1 + cos(pi * t / total_steps)) / 2), with t
// clamped to [0, total_steps].
double cosine_lr(const OptimizerState& opt, std::int64_t t);

// One Adam update with the learning rate of the current step.
void adam_step(HeadParams& params, const HeadParams& grad, OptimizerState& opt,
               bool last_layer_only = false);

struct LabeledExample {
  std::vector<float> x;
  int y = kRealClass;
};

struct HeadConfig {
  std::size_t hidden1 = 512;
  std::size_t hidden2 = 128;
  int epochs = 6;
  std::size_t batch_size = 4;
  double lr0 = 1e-5;
  double alpha = 0.95;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool balance_classes = true;
  // Freeze everything except the output layer.
  bool linear_probe = false;
  std::uint64_t seed = 0;
};

void validate(const HeadConfig& cfg);

// Example order for one epoch: the minority class is oversampled (whole
// copies plus a random remainder) until both classes have equal counts,
// then everything is shuffled.
std::vector<std::size_t> epoch_order(std::span<const LabeledExample> examples, bool balance,
                                     std::uint64_t seed, int epoch);

struct TrainResult {
  HeadParams params;
  OptimizerState optimizer;
  std::vector<double> lr_trace;     // learning rate used by each update
  std::vector<double> epoch_loss;   // mean batch loss per epoch
  double final_loss = 0.0;          // mean loss of the returned params on the training set
};

// Returned params are rounded to float precision so in-memory and saved
// heads score identically.
TrainResult train_head(std::span<const LabeledExample> examples, const HeadConfig& cfg);

double mean_loss(const HeadParams& params, std::span<const LabeledExample> examples);

// Rows with a known label, concatenated [visual | audio].
std::vector<LabeledExample> examples_from_embeddings(const EmbeddingSet& set);
std::vector<float> embedding_row(const EmbeddingSet& set, std::size_t row);

// Bundle directory: index.json plus one FOTENSR1 file per tensor.
void save_head(const std::filesystem::path& dir, const HeadParams& params);
HeadParams load_head(const std::filesystem::path& dir);

}  // namespace forgepipe
