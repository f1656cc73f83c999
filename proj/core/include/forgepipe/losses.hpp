#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace forgepipe {

using Vec = std::vector<double>;

enum class Modality { Visual, Audio, Text };
enum class SharedSpace { VA, VAT };

struct ModalityEmbedding {
  Modality modality = Modality::Visual;
  std::vector<float> vector;
};

struct SharedSpaceVector {
  SharedSpace space = SharedSpace::VA;
  Vec vector;
  bool normalized = false;
};

// y = W z + b, optionally L2-normalized. weight is row-major [d_out x d_in].
struct ProjectionHead {
  SharedSpace space = SharedSpace::VA;
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  Vec weight;
  Vec bias;
  bool l2_normalize_output = true;

  static ProjectionHead identity(std::size_t dim, SharedSpace space, bool normalize);
};

SharedSpaceVector project(const ProjectionHead& head, const ModalityEmbedding& z);

double dot(std::span<const double> a, std::span<const double> b);
Vec l2_normalized(std::span<const double> v);

// exp(z_v . z_a / tau). Both vectors must live in the VA space.
double va_score(const SharedSpaceVector& zv, const SharedSpaceVector& za, double tau);
// Same for the VAT space (visual vs. text).
double vt_score(const SharedSpaceVector& zv, const SharedSpaceVector& zt, double tau);

// -log(sum_pos e^l / (sum_pos e^l + sum_neg e^l)) evaluated with log-sum-exp.
double nce_from_logits(double positive, std::span<const double> negatives);
double milnce_from_logits(std::span<const double> positives, std::span<const double> negatives);

enum class NegativeMode {
  // (v_i, a_j) and (v_j, a_i) for every j != i: 2(K-1) terms per anchor.
  Symmetric,
  // (v_i, a_j) for j != i only.
  OneSided,
};

struct LossConfig {
  double tau = 0.07;
  double lambda_va = 1.0;
  double lambda_vt = 1.0;
  NegativeMode negatives = NegativeMode::Symmetric;
  // L2-normalize every vector inside the loss; gradients then flow through
  // the normalization. Off means raw dot products.
  bool normalize_inputs = true;
};

void validate(const LossConfig& cfg);

// One video of the batch, already projected into the shared spaces.
struct ContrastiveEntry {
  Vec visual_va;
  Vec audio_va;
  Vec visual_vat;         // empty when the batch carries no text
  std::vector<Vec> text;  // positive candidates P(x) in the VAT space
};

struct ContrastiveBatch {
  std::vector<ContrastiveEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool has_text() const noexcept;
};

double nce_va(const ContrastiveBatch& batch, std::size_t anchor, const LossConfig& cfg);
double milnce_vt(const ContrastiveBatch& batch, std::size_t anchor, const LossConfig& cfg);

struct CombinedLoss {
  double loss = 0.0;
  double nce_va = 0.0;     // mean over anchors
  double milnce_vt = 0.0;  // mean over anchors, 0 without text
  // dL/dz laid out like the batch.
  ContrastiveBatch gradient;
};

// mean_i(lambda_va NCE_va(i) + lambda_vt MILNCE_vt(i)) with analytic gradients.
CombinedLoss combined_loss(const ContrastiveBatch& batch, const LossConfig& cfg);

}  // namespace forgepipe
