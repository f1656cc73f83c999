#include "forgepipe/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forgepipe/error.hpp"

namespace forgepipe {
namespace {

enum class Role { VisualVA, AudioVA, VisualVAT, Text };

struct Ref {
  std::size_t entry;
  Role role;
  std::size_t text = 0;
};

struct Term {
  Ref a;
  Ref b;
};

template <typename Batch>
auto& get(Batch& batch, const Ref& r) {
  auto& e = batch.entries[r.entry];
  switch (r.role) {
    case Role::VisualVA: return e.visual_va;
    case Role::AudioVA: return e.audio_va;
    case Role::VisualVAT: return e.visual_vat;
    case Role::Text: return e.text[r.text];
  }
  return e.visual_va;
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void check_anchor(const ContrastiveBatch& batch, std::size_t anchor) {
  if (batch.entries.empty()) throw Error(Errc::InvariantError, "contrastive batch is empty");
  if (anchor >= batch.entries.size()) throw Error(Errc::InvariantError, "anchor out of range");
}

void va_terms(const ContrastiveBatch& batch, std::size_t i, NegativeMode mode, std::vector<Term>& pos,
              std::vector<Term>& neg) {
  const std::size_t k = batch.size();
  pos.push_back({{i, Role::VisualVA}, {i, Role::AudioVA}});
  for (std::size_t j = 0; j < k; ++j) {
    if (j != i) neg.push_back({{i, Role::VisualVA}, {j, Role::AudioVA}});
  }
  if (mode == NegativeMode::Symmetric) {
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) neg.push_back({{j, Role::VisualVA}, {i, Role::AudioVA}});
    }
  }
}

void vt_terms(const ContrastiveBatch& batch, std::size_t i, NegativeMode mode, std::vector<Term>& pos,
              std::vector<Term>& neg) {
  const std::size_t k = batch.size();
  if (batch.entries[i].text.empty()) {
    throw Error(Errc::EmptyPositiveSet, "anchor has no positive text candidates");
  }
  for (std::size_t t = 0; t < batch.entries[i].text.size(); ++t) {
    pos.push_back({{i, Role::VisualVAT}, {i, Role::Text, t}});
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (j == i) continue;
    for (std::size_t t = 0; t < batch.entries[j].text.size(); ++t) {
      neg.push_back({{i, Role::VisualVAT}, {j, Role::Text, t}});
    }
  }
  if (mode == NegativeMode::Symmetric) {
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      for (std::size_t t = 0; t < batch.entries[i].text.size(); ++t) {
        neg.push_back({{j, Role::VisualVAT}, {i, Role::Text, t}});
      }
    }
  }
}

// -log(sum_pos / sum_all); when `grad` is set, accumulates weight * dL/dz.
double ratio_loss(const ContrastiveBatch& batch, const std::vector<Term>& pos,
                  const std::vector<Term>& neg, double tau, ContrastiveBatch* grad, double weight) {
  std::vector<double> all;
  all.reserve(pos.size() + neg.size());
  for (const auto& t : pos) all.push_back(dot(get(batch, t.a), get(batch, t.b)) / tau);
  for (const auto& t : neg) all.push_back(dot(get(batch, t.a), get(batch, t.b)) / tau);
  const std::span<const double> pos_logits(all.data(), pos.size());
  const double lse_all = log_sum_exp(all);
  const double lse_pos = log_sum_exp(pos_logits);
  const double loss = lse_all - lse_pos;

  if (grad != nullptr && weight != 0.0) {
    for (std::size_t k = 0; k < all.size(); ++k) {
      double g = std::exp(all[k] - lse_all);
      if (k < pos.size()) g -= std::exp(all[k] - lse_pos);
      const double scale = weight * g / tau;
      const Term& term = k < pos.size() ? pos[k] : neg[k - pos.size()];
      const Vec& a = get(batch, term.a);
      const Vec& b = get(batch, term.b);
      Vec& ga = get(*grad, term.a);
      Vec& gb = get(*grad, term.b);
      for (std::size_t d = 0; d < a.size(); ++d) {
        ga[d] += scale * b[d];
        gb[d] += scale * a[d];
      }
    }
  }
  return loss;
}

ContrastiveBatch zeros_like(const ContrastiveBatch& batch) {
  ContrastiveBatch z = batch;
  for (auto& e : z.entries) {
    std::fill(e.visual_va.begin(), e.visual_va.end(), 0.0);
    std::fill(e.audio_va.begin(), e.audio_va.end(), 0.0);
    std::fill(e.visual_vat.begin(), e.visual_vat.end(), 0.0);
    for (auto& t : e.text) std::fill(t.begin(), t.end(), 0.0);
  }
  return z;
}

template <typename Fn>
void for_each_vector(ContrastiveBatch& batch, Fn&& fn) {
  for (auto& e : batch.entries) {
    fn(e.visual_va);
    fn(e.audio_va);
    if (!e.visual_vat.empty()) fn(e.visual_vat);
    for (auto& t : e.text) fn(t);
  }
}

void check_shapes(const ContrastiveBatch& batch) {
  if (batch.entries.empty()) throw Error(Errc::InvariantError, "contrastive batch is empty");
  const std::size_t d_va = batch.entries.front().visual_va.size();
  const bool text = batch.has_text();
  const std::size_t d_vat = text ? batch.entries.front().visual_vat.size() : 0;
  for (const auto& e : batch.entries) {
    if (e.visual_va.size() != d_va || e.audio_va.size() != d_va || d_va == 0) {
      throw Error(Errc::DimensionMismatch, "VA vectors must share one non-zero dimension");
    }
    if (text) {
      if (e.visual_vat.size() != d_vat || d_vat == 0) {
        throw Error(Errc::DimensionMismatch, "VAT vectors must share one non-zero dimension");
      }
      if (e.text.empty()) throw Error(Errc::EmptyPositiveSet, "every entry needs text candidates");
      for (const auto& t : e.text) {
        if (t.size() != d_vat) throw Error(Errc::DimensionMismatch, "text vector dimension mismatch");
      }
    }
  }
}

}  // namespace

ProjectionHead ProjectionHead::identity(std::size_t dim, SharedSpace space, bool normalize) {
  ProjectionHead h;
  h.space = space;
  h.d_in = h.d_out = dim;
  h.weight.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) h.weight[i * dim + i] = 1.0;
  h.bias.assign(dim, 0.0);
  h.l2_normalize_output = normalize;
  return h;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::DimensionMismatch, "dot product of unequal lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vec l2_normalized(std::span<const double> v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 0.0)) throw Error(Errc::InvariantError, "cannot normalize a zero vector");
  Vec out(v.begin(), v.end());
  for (auto& x : out) x /= n;
  return out;
}

SharedSpaceVector project(const ProjectionHead& head, const ModalityEmbedding& z) {
  if (z.vector.size() != head.d_in || head.weight.size() != head.d_in * head.d_out ||
      head.bias.size() != head.d_out) {
    throw Error(Errc::DimensionMismatch, "projection head does not match embedding dimension");
  }
  SharedSpaceVector out;
  out.space = head.space;
  out.vector.assign(head.d_out, 0.0);
  for (std::size_t r = 0; r < head.d_out; ++r) {
    double acc = head.bias[r];
    const double* row = head.weight.data() + r * head.d_in;
    for (std::size_t c = 0; c < head.d_in; ++c) acc += row[c] * static_cast<double>(z.vector[c]);
    out.vector[r] = acc;
  }
  if (head.l2_normalize_output) {
    out.vector = l2_normalized(out.vector);
    out.normalized = true;
  }
  return out;
}

double va_score(const SharedSpaceVector& zv, const SharedSpaceVector& za, double tau) {
  if (zv.space != SharedSpace::VA || za.space != SharedSpace::VA) {
    throw Error(Errc::SpaceMismatch, "va_score needs two VA-space vectors");
  }
  if (!(tau > 0.0)) throw Error(Errc::InvariantError, "temperature must be positive");
  return std::exp(dot(zv.vector, za.vector) / tau);
}

double vt_score(const SharedSpaceVector& zv, const SharedSpaceVector& zt, double tau) {
  if (zv.space != SharedSpace::VAT || zt.space != SharedSpace::VAT) {
    throw Error(Errc::SpaceMismatch, "vt_score needs two VAT-space vectors");
  }
  if (!(tau > 0.0)) throw Error(Errc::InvariantError, "temperature must be positive");
  return std::exp(dot(zv.vector, zt.vector) / tau);
}

double nce_from_logits(double positive, std::span<const double> negatives) {
  return milnce_from_logits(std::span<const double>(&positive, 1), negatives);
}

double milnce_from_logits(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty()) throw Error(Errc::EmptyPositiveSet, "no positive logits");
  std::vector<double> all(positives.begin(), positives.end());
  all.insert(all.end(), negatives.begin(), negatives.end());
  return log_sum_exp(all) - log_sum_exp(positives);
}

void validate(const LossConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw Error(Errc::InvariantError, "temperature must be positive");
  if (!(cfg.lambda_va >= 0.0) || !(cfg.lambda_vt >= 0.0)) {
    throw Error(Errc::InvariantError, "loss weights must be >= 0");
  }
}

bool ContrastiveBatch::has_text() const noexcept {
  return std::any_of(entries.begin(), entries.end(),
                     [](const ContrastiveEntry& e) { return !e.text.empty() || !e.visual_vat.empty(); });
}

namespace {

ContrastiveBatch normalized_copy(const ContrastiveBatch& batch) {
  ContrastiveBatch out = batch;
  for_each_vector(out, [](Vec& v) { v = l2_normalized(v); });
  return out;
}

}  // namespace

double nce_va(const ContrastiveBatch& batch, std::size_t anchor, const LossConfig& cfg) {
  validate(cfg);
  check_anchor(batch, anchor);
  check_shapes(batch);
  std::vector<Term> pos, neg;
  va_terms(batch, anchor, cfg.negatives, pos, neg);
  if (cfg.normalize_inputs) return ratio_loss(normalized_copy(batch), pos, neg, cfg.tau, nullptr, 0.0);
  return ratio_loss(batch, pos, neg, cfg.tau, nullptr, 0.0);
}

double milnce_vt(const ContrastiveBatch& batch, std::size_t anchor, const LossConfig& cfg) {
  validate(cfg);
  check_anchor(batch, anchor);
  if (batch.entries[anchor].text.empty()) {
    throw Error(Errc::EmptyPositiveSet, "anchor has no positive text candidates");
  }
  check_shapes(batch);
  std::vector<Term> pos, neg;
  vt_terms(batch, anchor, cfg.negatives, pos, neg);
  if (cfg.normalize_inputs) return ratio_loss(normalized_copy(batch), pos, neg, cfg.tau, nullptr, 0.0);
  return ratio_loss(batch, pos, neg, cfg.tau, nullptr, 0.0);
}

CombinedLoss combined_loss(const ContrastiveBatch& batch, const LossConfig& cfg) {
  validate(cfg);
  check_shapes(batch);
  const ContrastiveBatch work = cfg.normalize_inputs ? normalized_copy(batch) : batch;
  const bool text = batch.has_text();
  const auto k = static_cast<double>(batch.size());

  CombinedLoss out;
  out.gradient = zeros_like(batch);
  double sum_va = 0.0, sum_vt = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<Term> pos, neg;
    va_terms(work, i, cfg.negatives, pos, neg);
    sum_va += ratio_loss(work, pos, neg, cfg.tau, &out.gradient, cfg.lambda_va / k);
    if (text) {
      pos.clear();
      neg.clear();
      vt_terms(work, i, cfg.negatives, pos, neg);
      sum_vt += ratio_loss(work, pos, neg, cfg.tau, &out.gradient, cfg.lambda_vt / k);
    }
  }
  out.nce_va = sum_va / k;
  out.milnce_vt = sum_vt / k;
  out.loss = cfg.lambda_va * out.nce_va + cfg.lambda_vt * out.milnce_vt;

  if (cfg.normalize_inputs) {
    // d(u/|u|)/du = (I - n n^T) / |u|
    ContrastiveBatch raw = batch;
    std::vector<Vec*> raws, grads;
    for_each_vector(raw, [&](Vec& v) { raws.push_back(&v); });
    for_each_vector(out.gradient, [&](Vec& v) { grads.push_back(&v); });
    for (std::size_t idx = 0; idx < raws.size(); ++idx) {
      const Vec& u = *raws[idx];
      Vec& g = *grads[idx];
      const double norm = std::sqrt(dot(u, u));
      double ng = 0.0;
      for (std::size_t d = 0; d < u.size(); ++d) ng += (u[d] / norm) * g[d];
      for (std::size_t d = 0; d < u.size(); ++d) g[d] = (g[d] - (u[d] / norm) * ng) / norm;
    }
  }
  return out;
}

}  // namespace forgepipe
