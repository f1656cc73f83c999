#include "forgepipe/head.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "forgepipe/error.hpp"
#include "forgepipe/rng.hpp"
#include "json.hpp"

namespace forgepipe {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::uint64_t kInitStream = 0x494e4954;     // "INIT"
constexpr std::uint64_t kShuffleStream = 0x53485546;  // "SHUF"

VectorXd to_vector(std::span<const float> x) {
  VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  return v;
}

VectorXd relu(const VectorXd& a) { return a.cwiseMax(0.0); }

VectorXd relu_mask(const VectorXd& a) {
  return a.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

template <typename Fn>
void for_each_tensor(HeadParams& p, Fn&& fn) {
  fn(p.w1);
  fn(p.b1);
  fn(p.w2);
  fn(p.b2);
  fn(p.w3);
  fn(p.b3);
}

void check_input(const HeadParams& params, std::span<const float> x) {
  if (x.size() != params.d_in()) {
    throw Error(Errc::DimensionMismatch, "head expects " + std::to_string(params.d_in()) +
                                             " inputs, got " + std::to_string(x.size()));
  }
}

struct Activations {
  VectorXd x, a1, h1, a2, h2, logits;
};

Activations run(const HeadParams& p, std::span<const float> x) {
  Activations act;
  act.x = to_vector(x);
  act.a1 = p.w1 * act.x + p.b1;
  act.h1 = relu(act.a1);
  act.a2 = p.w2 * act.h1 + p.b2;
  act.h2 = relu(act.a2);
  act.logits = p.w3 * act.h2 + p.b3;
  return act;
}

std::array<double, 2> log_softmax2(double l0, double l1) {
  const double m = std::max(l0, l1);
  const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
  return {l0 - lse, l1 - lse};
}

Tensor to_tensor(const MatrixXd& m) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(static_cast<float>(m(r, c)));
  }
  return t;
}

Tensor to_tensor(const VectorXd& v) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(v.size())};
  for (Eigen::Index i = 0; i < v.size(); ++i) t.data.push_back(static_cast<float>(v[i]));
  return t;
}

MatrixXd matrix_from(const Tensor& t, std::size_t rows, std::size_t cols) {
  if (t.dims.size() != 2 || t.dims[0] != rows || t.dims[1] != cols) {
    throw Error(Errc::DimensionMismatch, "head tensor has unexpected shape");
  }
  MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.data[r * cols + c];
    }
  }
  return m;
}

VectorXd vector_from(const Tensor& t, std::size_t n) {
  if (t.dims.size() != 1 || t.dims[0] != n) {
    throw Error(Errc::DimensionMismatch, "head tensor has unexpected shape");
  }
  VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = t.data[i];
  return v;
}

}  // namespace

std::vector<float> concat_modalities(const ModalityEmbedding& zv,
                                     const std::optional<ModalityEmbedding>& za) {
  if (zv.modality != Modality::Visual) {
    throw Error(Errc::WrongModality, "first concatenation operand must be visual");
  }
  std::vector<float> out = zv.vector;
  if (za) {
    if (za->modality != Modality::Audio) {
      throw Error(Errc::WrongModality, "second concatenation operand must be audio");
    }
    out.insert(out.end(), za->vector.begin(), za->vector.end());
  }
  return out;
}

HeadParams HeadParams::zeros(std::size_t d_in, std::size_t h1, std::size_t h2) {
  const auto n = static_cast<Eigen::Index>(d_in);
  const auto m1 = static_cast<Eigen::Index>(h1);
  const auto m2 = static_cast<Eigen::Index>(h2);
  HeadParams p;
  p.w1 = MatrixXd::Zero(m1, n);
  p.b1 = VectorXd::Zero(m1);
  p.w2 = MatrixXd::Zero(m2, m1);
  p.b2 = VectorXd::Zero(m2);
  p.w3 = MatrixXd::Zero(2, m2);
  p.b3 = VectorXd::Zero(2);
  return p;
}

bool HeadParams::operator==(const HeadParams& o) const {
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(w1, o.w1) && same(b1, o.b1) && same(w2, o.w2) && same(b2, o.b2) &&
         same(w3, o.w3) && same(b3, o.b3);
}

void validate(const HeadParams& p) {
  if (p.w1.cols() == 0 || p.w1.rows() == 0 || p.w2.rows() == 0) {
    throw Error(Errc::InvariantError, "head layers must be non-empty");
  }
  if (p.b1.size() != p.w1.rows() || p.w2.cols() != p.w1.rows() || p.b2.size() != p.w2.rows() ||
      p.w3.cols() != p.w2.rows() || p.w3.rows() != 2 || p.b3.size() != 2) {
    throw Error(Errc::DimensionMismatch, "head layer shapes are inconsistent");
  }
  HeadParams copy = p;
  bool finite = true;
  for_each_tensor(copy, [&](const auto& t) { finite = finite && t.allFinite(); });
  if (!finite) throw Error(Errc::InvariantError, "head parameters must be finite");
}

HeadParams init_head(std::size_t d_in, std::size_t h1, std::size_t h2, std::uint64_t seed) {
  if (d_in == 0 || h1 == 0 || h2 == 0) {
    throw Error(Errc::InvariantError, "head dimensions must be positive");
  }
  HeadParams p = HeadParams::zeros(d_in, h1, h2);
  Rng rng = Rng::keyed(seed, kInitStream);
  auto fill = [&](MatrixXd& w) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
  };
  fill(p.w1);
  fill(p.w2);
  fill(p.w3);
  return p;
}

HeadOutput forward(const HeadParams& params, std::span<const float> x) {
  check_input(params, x);
  const Activations act = run(params, x);
  HeadOutput out;
  out.logits = {act.logits[0], act.logits[1]};
  out.log_probs = log_softmax2(out.logits[0], out.logits[1]);
  out.score = std::exp(out.log_probs[kFakeClass]);
  return out;
}

BceValue bce_loss(double score, int label) {
  if (!(score > 0.0 && score < 1.0)) {
    throw Error(Errc::ScoreOutOfRange, "score must lie strictly inside (0, 1)");
  }
  if (label != kRealClass && label != kFakeClass) {
    throw Error(Errc::InvariantError, "label must be 0 or 1");
  }
  const double y = label;
  BceValue v;
  v.loss = -(y * std::log(score) + (1.0 - y) * std::log1p(-score));
  v.grad = -y / score + (1.0 - y) / (1.0 - score);
  return v;
}

namespace {

// Adds the gradient of one example into `g` and returns its loss.
double accumulate_backward(const HeadParams& params, std::span<const float> x, int label,
                           HeadParams& g) {
  const Activations act = run(params, x);
  const auto lp = log_softmax2(act.logits[0], act.logits[1]);
  VectorXd dlogits(2);
  dlogits << std::exp(lp[0]), std::exp(lp[1]);
  dlogits[label] -= 1.0;

  g.w3.noalias() += dlogits * act.h2.transpose();
  g.b3 += dlogits;
  const VectorXd da2 = (params.w3.transpose() * dlogits).cwiseProduct(relu_mask(act.a2));
  g.w2.noalias() += da2 * act.h1.transpose();
  g.b2 += da2;
  const VectorXd da1 = (params.w2.transpose() * da2).cwiseProduct(relu_mask(act.a1));
  g.w1.noalias() += da1 * act.x.transpose();
  g.b1 += da1;
  return -lp[static_cast<std::size_t>(label)];
}

void check_label(int label) {
  if (label != kRealClass && label != kFakeClass) {
    throw Error(Errc::InvariantError, "label must be 0 or 1");
  }
}

}  // namespace

HeadBackward backward(const HeadParams& params, std::span<const float> x, int label) {
  check_input(params, x);
  check_label(label);
  HeadBackward out;
  out.grad = HeadParams::zeros(params.d_in(), params.hidden1(), params.hidden2());
  out.loss = accumulate_backward(params, x, label, out.grad);
  return out;
}

double cosine_lr(const OptimizerState& opt, std::int64_t t) {
  const std::int64_t total = std::max<std::int64_t>(opt.total_steps, 1);
  if (t <= 0) return opt.lr0;
  if (t >= total) return opt.alpha * opt.lr0;
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return opt.lr0 * (opt.alpha + (1.0 - opt.alpha) * (1.0 + std::cos(std::numbers::pi * frac)) / 2.0);
}

void adam_step(HeadParams& params, const HeadParams& grad, OptimizerState& opt,
               bool last_layer_only) {
  const double lr = cosine_lr(opt, opt.step);
  ++opt.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
    p -= (lr * (m / c1).array() / ((v / c2).array().sqrt() + opt.eps)).matrix();
  };
  if (!last_layer_only) {
    update(params.w1, grad.w1, opt.m.w1, opt.v.w1);
    update(params.b1, grad.b1, opt.m.b1, opt.v.b1);
    update(params.w2, grad.w2, opt.m.w2, opt.v.w2);
    update(params.b2, grad.b2, opt.m.b2, opt.v.b2);
  }
  update(params.w3, grad.w3, opt.m.w3, opt.v.w3);
  update(params.b3, grad.b3, opt.m.b3, opt.v.b3);
}

void validate(const HeadConfig& cfg) {
  if (cfg.hidden1 == 0 || cfg.hidden2 == 0) throw Error(Errc::InvariantError, "hidden widths must be > 0");
  if (cfg.epochs < 1) throw Error(Errc::InvariantError, "epochs must be >= 1");
  if (cfg.batch_size == 0) throw Error(Errc::InvariantError, "batch_size must be >= 1");
  if (!(cfg.lr0 > 0.0)) throw Error(Errc::InvariantError, "lr0 must be positive");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw Error(Errc::InvariantError, "alpha must be in [0, 1]");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw Error(Errc::InvariantError, "Adam betas must be in [0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw Error(Errc::InvariantError, "eps must be positive");
}

std::vector<std::size_t> epoch_order(std::span<const LabeledExample> examples, bool balance,
                                     std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = Rng::keyed(seed, kShuffleStream, static_cast<std::uint64_t>(epoch));

  if (balance) {
    std::vector<std::size_t> cls[2];
    for (std::size_t i = 0; i < examples.size(); ++i) cls[examples[i].y == kFakeClass].push_back(i);
    const std::size_t minority = cls[0].size() <= cls[1].size() ? 0 : 1;
    std::vector<std::size_t>& small = cls[minority];
    const std::size_t large = cls[1 - minority].size();
    if (!small.empty() && small.size() < large) {
      const std::size_t copies = large / small.size();
      for (std::size_t c = 1; c < copies; ++c) order.insert(order.end(), small.begin(), small.end());
      // Remainder drawn without replacement by a partial Fisher-Yates pass.
      const std::size_t rest = large % small.size();
      for (std::size_t k = 0; k < rest; ++k) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(small.size() - 1)));
        std::swap(small[k], small[j]);
        order.push_back(small[k]);
      }
    }
  }

  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

double mean_loss(const HeadParams& params, std::span<const LabeledExample> examples) {
  if (examples.empty()) throw Error(Errc::EmptyDataset, "no examples");
  double sum = 0.0;
  for (const auto& ex : examples) {
    const HeadOutput out = forward(params, ex.x);
    sum -= out.log_probs[static_cast<std::size_t>(ex.y)];
  }
  return sum / static_cast<double>(examples.size());
}

TrainResult train_head(std::span<const LabeledExample> examples, const HeadConfig& cfg) {
  validate(cfg);
  if (examples.empty()) throw Error(Errc::EmptyDataset, "training set is empty");
  const std::size_t d_in = examples.front().x.size();
  for (const auto& ex : examples) {
    if (ex.x.size() != d_in) throw Error(Errc::DimensionMismatch, "training examples differ in width");
    check_label(ex.y);
  }

  TrainResult result;
  result.params = init_head(d_in, cfg.hidden1, cfg.hidden2, cfg.seed);
  HeadParams& params = result.params;

  const std::size_t per_epoch = epoch_order(examples, cfg.balance_classes, cfg.seed, 0).size();
  const std::size_t batches = (per_epoch + cfg.batch_size - 1) / cfg.batch_size;
  const auto updates = static_cast<std::int64_t>(batches) * cfg.epochs;

  OptimizerState& opt = result.optimizer;
  opt.lr0 = cfg.lr0;
  opt.alpha = cfg.alpha;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.eps = cfg.eps;
  // The last update runs at t = total_steps, i.e. exactly alpha * lr0.
  opt.total_steps = std::max<std::int64_t>(updates - 1, 1);
  opt.m = HeadParams::zeros(d_in, cfg.hidden1, cfg.hidden2);
  opt.v = opt.m;

  HeadParams grad = opt.m;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(examples, cfg.balance_classes, cfg.seed, epoch);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for_each_tensor(grad, [](auto& t) { t.setZero(); });
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const LabeledExample& ex = examples[order[k]];
        batch_loss += accumulate_backward(params, ex.x, ex.y, grad);
      }
      const double n = static_cast<double>(end - start);
      for_each_tensor(grad, [n](auto& t) { t /= n; });
      result.lr_trace.push_back(cosine_lr(opt, opt.step));
      adam_step(params, grad, opt, cfg.linear_probe);
      epoch_sum += batch_loss / n;
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
  }

  for_each_tensor(params, [](auto& t) { t = t.template cast<float>().template cast<double>(); });
  result.final_loss = mean_loss(params, examples);
  return result;
}

std::vector<float> embedding_row(const EmbeddingSet& set, std::size_t row) {
  const auto v = set.visual_row(row);
  std::vector<float> out(v.begin(), v.end());
  if (set.audio) {
    const auto a = set.audio_row(row);
    out.insert(out.end(), a.begin(), a.end());
  }
  return out;
}

std::vector<LabeledExample> examples_from_embeddings(const EmbeddingSet& set) {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.labels[i] == kUnknownLabel) continue;
    out.push_back({embedding_row(set, i), set.labels[i]});
  }
  return out;
}

void save_head(const std::filesystem::path& dir, const HeadParams& params) {
  validate(params);
  std::filesystem::create_directories(dir);
  write_tensor(dir / "w1.ft", to_tensor(params.w1));
  write_tensor(dir / "b1.ft", to_tensor(params.b1));
  write_tensor(dir / "w2.ft", to_tensor(params.w2));
  write_tensor(dir / "b2.ft", to_tensor(params.b2));
  write_tensor(dir / "w3.ft", to_tensor(params.w3));
  write_tensor(dir / "b3.ft", to_tensor(params.b3));
  nlohmann::ordered_json index;
  index["format"] = "forgepipe-head";
  index["version"] = 1;
  index["d_in"] = params.d_in();
  index["hidden"] = {params.hidden1(), params.hidden2()};
  index["outputs"] = 2;
  index["tensors"] = {"w1.ft", "b1.ft", "w2.ft", "b2.ft", "w3.ft", "b3.ft"};
  write_file_atomic(dir / "index.json", index.dump(2) + "\n");
}

HeadParams load_head(const std::filesystem::path& dir) {
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(read_file(dir / "index.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("head index: ") + e.what());
  }
  if (index.value("format", "") != "forgepipe-head") {
    throw Error(Errc::InvariantError, "not a head bundle: " + dir.string());
  }
  const auto d_in = index.at("d_in").get<std::size_t>();
  const auto h1 = index.at("hidden").at(0).get<std::size_t>();
  const auto h2 = index.at("hidden").at(1).get<std::size_t>();
  HeadParams p;
  p.w1 = matrix_from(read_tensor(dir / "w1.ft"), h1, d_in);
  p.b1 = vector_from(read_tensor(dir / "b1.ft"), h1);
  p.w2 = matrix_from(read_tensor(dir / "w2.ft"), h2, h1);
  p.b2 = vector_from(read_tensor(dir / "b2.ft"), h2);
  p.w3 = matrix_from(read_tensor(dir / "w3.ft"), 2, h2);
  p.b3 = vector_from(read_tensor(dir / "b3.ft"), 2);
  validate(p);
  return p;
}

}  // namespace forgepipe
