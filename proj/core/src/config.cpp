#include "forgepipe/config.hpp"

#include <set>

#include "forgepipe/error.hpp"
#include "json.hpp"

namespace forgepipe {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Reads keys from one section and remembers which ones were consumed.
class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (auto it = root.find(name_); it != root.end()) {
      if (!it->is_object()) throw ParseError(0, "config section '" + name_ + "' must be an object");
      doc_ = &*it;
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (doc_ == nullptr) return;
    if (auto it = doc_->find(key); it != doc_->end()) {
      try {
        out = it->get<T>();
      } catch (const json::exception& e) {
        throw ParseError(0, name_ + "." + key + ": " + e.what());
      }
    }
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    if (doc_ == nullptr) return nullptr;
    auto it = doc_->find(key);
    return it == doc_->end() ? nullptr : &*it;
  }

  void finish() const {
    if (doc_ == nullptr) return;
    for (const auto& [key, value] : doc_->items()) {
      if (!seen_.count(key)) throw ParseError(0, "unknown config key '" + name_ + "." + key + "'");
    }
  }

 private:
  std::string name_;
  const json* doc_ = nullptr;
  std::set<std::string, std::less<>> seen_;
};

void read_time_base(Section& s, TimeBase& tb) {
  if (const json* fps = s.raw("fps")) {
    if (fps->is_string()) {
      tb.fps = Rational::parse(fps->get<std::string>());
    } else if (fps->is_number_integer()) {
      tb.fps = {fps->get<std::int64_t>(), 1};
    } else {
      throw ParseError(0, "fps must be an integer or a \"num/den\" string");
    }
  }
  s.get("sample_rate", tb.sample_rate);
}

NegativeMode parse_negatives(const std::string& name) {
  if (name == "symmetric") return NegativeMode::Symmetric;
  if (name == "one_sided") return NegativeMode::OneSided;
  throw ParseError(0, "losses.negatives must be 'symmetric' or 'one_sided'");
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  validate(cfg.tracking);
  validate(cfg.sampling.time_base);
  if (cfg.sampling.train_clips < 1) throw Error(Errc::InvariantError, "sampling.train_clips must be >= 1");
  if (cfg.sampling.inference_clips < 1 || cfg.sampling.inference_clips > kMaxInferenceClips) {
    throw Error(Errc::InvariantError, "sampling.inference_clips must be in [1, 9]");
  }
  validate(cfg.augment);
  validate(cfg.losses);
  validate(cfg.head);
  validate(cfg.enrichment.time_base);
}

PipelineConfig parse_pipeline_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw ParseError(0, "config must be a JSON object");
  static const std::set<std::string> kSections = {"tracking", "sampling", "augment", "losses",
                                                  "head",     "eval",     "enrichment", "paths"};
  for (const auto& [key, value] : root.items()) {
    if (!kSections.count(key)) throw ParseError(0, "unknown config section '" + key + "'");
  }

  PipelineConfig cfg;

  Section tracking(root, "tracking");
  tracking.get("confidence_threshold", cfg.tracking.confidence_threshold);
  tracking.get("enlarge_factor", cfg.tracking.enlarge_factor);
  tracking.get("size_ratio_lo", cfg.tracking.size_ratio_lo);
  tracking.get("size_ratio_hi", cfg.tracking.size_ratio_hi);
  tracking.get("smooth_window", cfg.tracking.smooth_window);
  if (const json* mf = tracking.raw("multi_face"); mf != nullptr && !mf->is_null()) {
    if (mf->is_string() && mf->get<std::string>() == "auto") {
      cfg.tracking.multi_face.reset();
    } else if (mf->is_boolean()) {
      cfg.tracking.multi_face = mf->get<bool>();
    } else {
      throw ParseError(0, "tracking.multi_face must be true, false or \"auto\"");
    }
  }
  tracking.get("multi_face_window", cfg.tracking.multi_face_window);
  tracking.get("multi_face_min_frames", cfg.tracking.multi_face_min_frames);
  tracking.finish();

  Section sampling(root, "sampling");
  read_time_base(sampling, cfg.sampling.time_base);
  sampling.get("train_clips", cfg.sampling.train_clips);
  sampling.get("inference_clips", cfg.sampling.inference_clips);
  sampling.finish();

  Section augment(root, "augment");
  augment.get("p_flip", cfg.augment.p_flip);
  augment.get("hue_max_delta", cfg.augment.hue_max_delta);
  augment.get("brightness_max_delta", cfg.augment.brightness_max_delta);
  augment.get("scale_lo", cfg.augment.scale_lo);
  augment.get("scale_hi", cfg.augment.scale_hi);
  augment.get("seed", cfg.augment.seed);
  augment.finish();

  Section losses(root, "losses");
  losses.get("tau", cfg.losses.tau);
  losses.get("lambda_va", cfg.losses.lambda_va);
  losses.get("lambda_vt", cfg.losses.lambda_vt);
  if (const json* neg = losses.raw("negatives")) cfg.losses.negatives = parse_negatives(neg->get<std::string>());
  losses.get("normalize_inputs", cfg.losses.normalize_inputs);
  losses.finish();

  Section head(root, "head");
  head.get("hidden1", cfg.head.hidden1);
  head.get("hidden2", cfg.head.hidden2);
  head.get("epochs", cfg.head.epochs);
  head.get("batch_size", cfg.head.batch_size);
  head.get("lr0", cfg.head.lr0);
  head.get("alpha", cfg.head.alpha);
  head.get("beta1", cfg.head.beta1);
  head.get("beta2", cfg.head.beta2);
  head.get("eps", cfg.head.eps);
  head.get("balance_classes", cfg.head.balance_classes);
  head.get("linear_probe", cfg.head.linear_probe);
  head.get("seed", cfg.head.seed);
  head.finish();

  Section eval(root, "eval");
  eval.get("threshold", cfg.eval.threshold);
  eval.get("exclude_tags", cfg.eval.exclude_tags);
  eval.finish();

  Section enrichment(root, "enrichment");
  read_time_base(enrichment, cfg.enrichment.time_base);
  std::string audio_dir;
  enrichment.get("audio_dir", audio_dir);
  cfg.enrichment.audio_dir = audio_dir;
  enrichment.finish();

  if (auto it = root.find("paths"); it != root.end()) {
    if (!it->is_object()) throw ParseError(0, "config section 'paths' must be an object");
    for (const auto& [key, value] : it->items()) {
      if (!value.is_string()) throw ParseError(0, "paths." + key + " must be a string");
      cfg.paths[key] = value.get<std::string>();
    }
  }

  validate(cfg);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(read_file(path));
}

std::string format_pipeline_config(const PipelineConfig& cfg) {
  ojson root;
  auto& t = root["tracking"];
  t["confidence_threshold"] = cfg.tracking.confidence_threshold;
  t["enlarge_factor"] = cfg.tracking.enlarge_factor;
  t["size_ratio_lo"] = cfg.tracking.size_ratio_lo;
  t["size_ratio_hi"] = cfg.tracking.size_ratio_hi;
  t["smooth_window"] = cfg.tracking.smooth_window;
  t["multi_face"] = cfg.tracking.multi_face ? ojson(*cfg.tracking.multi_face) : ojson("auto");
  t["multi_face_window"] = cfg.tracking.multi_face_window;
  t["multi_face_min_frames"] = cfg.tracking.multi_face_min_frames;

  auto& s = root["sampling"];
  s["fps"] = cfg.sampling.time_base.fps.to_string();
  s["sample_rate"] = cfg.sampling.time_base.sample_rate;
  s["train_clips"] = cfg.sampling.train_clips;
  s["inference_clips"] = cfg.sampling.inference_clips;

  auto& a = root["augment"];
  a["p_flip"] = cfg.augment.p_flip;
  a["hue_max_delta"] = cfg.augment.hue_max_delta;
  a["brightness_max_delta"] = cfg.augment.brightness_max_delta;
  a["scale_lo"] = cfg.augment.scale_lo;
  a["scale_hi"] = cfg.augment.scale_hi;
  a["seed"] = cfg.augment.seed;

  auto& l = root["losses"];
  l["tau"] = cfg.losses.tau;
  l["lambda_va"] = cfg.losses.lambda_va;
  l["lambda_vt"] = cfg.losses.lambda_vt;
  l["negatives"] = cfg.losses.negatives == NegativeMode::Symmetric ? "symmetric" : "one_sided";
  l["normalize_inputs"] = cfg.losses.normalize_inputs;

  auto& h = root["head"];
  h["hidden1"] = cfg.head.hidden1;
  h["hidden2"] = cfg.head.hidden2;
  h["epochs"] = cfg.head.epochs;
  h["batch_size"] = cfg.head.batch_size;
  h["lr0"] = cfg.head.lr0;
  h["alpha"] = cfg.head.alpha;
  h["beta1"] = cfg.head.beta1;
  h["beta2"] = cfg.head.beta2;
  h["eps"] = cfg.head.eps;
  h["balance_classes"] = cfg.head.balance_classes;
  h["linear_probe"] = cfg.head.linear_probe;
  h["seed"] = cfg.head.seed;

  auto& e = root["eval"];
  e["threshold"] = cfg.eval.threshold;
  e["exclude_tags"] = cfg.eval.exclude_tags;

  auto& en = root["enrichment"];
  en["fps"] = cfg.enrichment.time_base.fps.to_string();
  en["sample_rate"] = cfg.enrichment.time_base.sample_rate;
  en["audio_dir"] = cfg.enrichment.audio_dir.string();

  auto& p = root["paths"];
  p = ojson::object();
  for (const auto& [key, value] : cfg.paths) p[key] = value.string();
  return root.dump(2) + "\n";
}

}  // namespace forgepipe
