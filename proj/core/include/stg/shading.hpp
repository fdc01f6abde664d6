#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "stg/camera.hpp"
#include "stg/rasterizer.hpp"

namespace stg {

enum class Activation : std::uint32_t { Clamp = 0, Sigmoid = 1 };

/// Two-layer per-pixel head: rgb = F_base + W2·relu(W1·[F_dir, F_time, r] + b1) + b2,
/// followed by the final activation.
template <class S>
struct MlpHead {
  static constexpr int kInputs = 9;
  static constexpr int kOutputs = 3;

  int hidden = 32;
  Activation activation = Activation::Clamp;
  std::vector<S> w1;  // hidden × 9, row-major
  std::vector<S> b1;  // hidden
  std::vector<S> w2;  // 3 × hidden, row-major
  std::vector<S> b2;  // 3

  static MlpHead zeros(int hidden, Activation act);
  /// Weights uniform in ±1/sqrt(fan_in), biases zero.
  static MlpHead random(int hidden, Activation act, std::mt19937_64& rng);

  std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
  bool finite() const;
  void check_shapes() const;

  template <class Fn>
  void for_each_block(Fn&& fn) {
    fn(w1); fn(b1); fn(w2); fn(b2);
  }
  template <class Fn>
  void for_each_block(Fn&& fn) const {
    fn(w1); fn(b1); fn(w2); fn(b2);
  }

  template <class T>
  MlpHead<T> cast() const {
    MlpHead<T> o;
    o.hidden = hidden;
    o.activation = activation;
    o.w1.assign(w1.begin(), w1.end());
    o.b1.assign(b1.begin(), b1.end());
    o.w2.assign(w2.begin(), w2.end());
    o.b2.assign(b2.begin(), b2.end());
    return o;
  }
};

/// Pre-activation colors kept for the backward pass.
template <class S>
struct ShadeRecord {
  Image<S> raw;
};

/// World-space unit view direction through pixel (x, y).
template <class S>
Vec3<S> ray_direction(const Camera& cam, S x, S y);

/// Decodes a feature image into RGB in [0, 1]. A null head selects lite mode,
/// which outputs clamp(F_base).
template <class S>
Image<S> shade(const FeatureImage<S>& features, const Camera& cam, const MlpHead<S>* mlp,
               ShadeRecord<S>* record = nullptr);

template <class S>
struct ShadeGradients {
  Image<S> features;  // H×W×9
  MlpHead<S> mlp;     // empty in lite mode
};

template <class S>
ShadeGradients<S> shade_backward(const ShadeRecord<S>& record, const FeatureImage<S>& features,
                                 const Camera& cam, const MlpHead<S>* mlp, const Image<S>& grad_rgb);

}  // namespace stg
