#include <nlohmann/json.hpp>

#include "stg/errors.hpp"
#include "stg/trainer.hpp"

namespace stg {

using nlohmann::json;

namespace {

template <class C, class Fn>
void visit_config(C& c, Fn&& fn) {
  fn("iterations", c.iterations);
  fn("seed", c.seed);
  fn("lr_position", c.lr_position);
  fn("lr_motion", c.lr_motion);
  fn("position_lr_final_factor", c.position_lr_final_factor);
  fn("lr_rotation", c.lr_rotation);
  fn("lr_scale", c.lr_scale);
  fn("lr_opacity", c.lr_opacity);
  fn("lr_temporal", c.lr_temporal);
  fn("lr_features", c.lr_features);
  fn("lr_mlp", c.lr_mlp);
  fn("lambda_dssim", c.lambda_dssim);
  fn("densify_interval", c.densify_interval);
  fn("densify_start", c.densify_start);
  fn("densify_stop_fraction", c.densify_stop_fraction);
  fn("densify_grad_threshold", c.densify_grad_threshold);
  fn("dense_scale_fraction", c.dense_scale_fraction);
  fn("split_factor", c.split_factor);
  fn("prune_opacity", c.prune_opacity);
  fn("prune_interval", c.prune_interval);
  fn("max_gaussians", c.max_gaussians);
  fn("guided_sampling", c.guided_sampling);
  fn("guided_iterations", c.guided_iterations);
  fn("guided_patch_size", c.guided_patch_size);
  fn("guided_error_quantile", c.guided_error_quantile);
  fn("guided_min_error", c.guided_min_error);
  fn("guided_samples_per_ray", c.guided_samples_per_ray);
  fn("guided_depth_factor", c.guided_depth_factor);
  fn("guided_far_factor", c.guided_far_factor);
  fn("guided_jitter", c.guided_jitter);
  fn("train_temporal_opacity", c.train_temporal_opacity);
  fn("lite", c.lite);
  fn("activation", c.activation);
  fn("hidden", c.hidden);
  fn("init_subsample", c.init_subsample);
  fn("log_interval", c.log_interval);
}

void require(bool ok, const char* what) {
  if (!ok) throw UsageError(std::string("invalid training config: ") + what);
}

TrainConfig from_object(const json& j) {
  if (!j.is_object()) throw UsageError("training config must be a JSON object");
  TrainConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    visit_config(c, [&](const char* key, auto&) { known = known || it.key() == key; });
    if (!known) throw UsageError("unknown training config key '" + it.key() + "'");
  }
  visit_config(c, [&](const char* key, auto& field) {
    auto it = j.find(key);
    if (it == j.end()) return;
    using T = std::decay_t<decltype(field)>;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw UsageError("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) throw UsageError("");
      }
      field = it->template get<T>();
    } catch (const std::exception&) {
      throw UsageError(std::string("training config key '") + key + "' has the wrong type");
    }
  });
  return c;
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "clamp") return Activation::Clamp;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw UsageError("unknown activation '" + name + "' (expected clamp or sigmoid)");
}

void TrainConfig::validate() const {
  require(iterations >= 0, "iterations must be >= 0");
  for (double lr : {lr_position, lr_motion, lr_rotation, lr_scale, lr_opacity, lr_temporal, lr_features, lr_mlp})
    require(lr >= 0 && std::isfinite(lr), "learning rates must be finite and >= 0");
  require(position_lr_final_factor > 0, "position_lr_final_factor must be > 0");
  require(lambda_dssim >= 0 && lambda_dssim <= 1, "lambda_dssim must be in [0, 1]");
  require(densify_interval > 0 && prune_interval > 0 && log_interval > 0, "intervals must be > 0");
  require(densify_start >= 0, "densify_start must be >= 0");
  require(densify_stop_fraction >= 0 && densify_stop_fraction <= 1, "densify_stop_fraction must be in [0, 1]");
  require(densify_grad_threshold > 0, "densify_grad_threshold must be > 0");
  require(dense_scale_fraction > 0, "dense_scale_fraction must be > 0");
  require(split_factor > 1, "split_factor must be > 1");
  require(prune_opacity > 0 && prune_opacity < 1, "prune_opacity must be in (0, 1)");
  require(max_gaussians > 0, "max_gaussians must be > 0");
  require(guided_iterations.size() <= 3, "at most 3 guided sampling events");
  require(guided_patch_size > 0, "guided_patch_size must be > 0");
  require(guided_error_quantile >= 0 && guided_error_quantile <= 1, "guided_error_quantile must be in [0, 1]");
  require(guided_min_error > 0, "guided_min_error must be > 0");
  require(guided_samples_per_ray > 0, "guided_samples_per_ray must be > 0");
  require(guided_depth_factor > 0 && guided_depth_factor < guided_far_factor,
          "guided depth range must satisfy 0 < depth_factor < far_factor");
  require(guided_jitter >= 0, "guided_jitter must be >= 0");
  require(hidden > 0, "hidden must be > 0");
  require(init_subsample > 0 && init_subsample <= 1, "init_subsample must be in (0, 1]");
  parse_activation(activation);
}

std::string config_to_json(const TrainConfig& c) {
  json j = json::object();
  visit_config(c, [&](const char* key, const auto& field) { j[key] = field; });
  return j.dump(2);
}

TrainConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("training config is not valid JSON: ") + e.what());
  }
  return from_object(j);
}

void apply_override(TrainConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json j = json::parse(config_to_json(c));
  if (!j.contains(key)) throw UsageError("unknown training config key '" + key + "'");
  j[key] = value;
  c = from_object(j);
}

}  // namespace stg
