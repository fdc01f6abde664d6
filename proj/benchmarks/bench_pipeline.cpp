#include <benchmark/benchmark.h>

#include "stg/metrics.hpp"
#include "stg/rasterizer.hpp"
#include "stg/shading.hpp"
#include "stg/synth.hpp"
#include "stg/trainer.hpp"

namespace {

struct Fixture {
  stg::SynthScene scene;
  stg::GaussianCloud<float> cloud;
  stg::MlpHead<float> mlp;
  stg::Camera cam;

  Fixture() {
    stg::SynthSpec spec;
    scene = stg::generate_scene(spec);
    cloud = stg::initialize_scene(scene.points);
    std::mt19937_64 rng(1);
    mlp = stg::MlpHead<float>::random(32, stg::Activation::Clamp, rng);
    cam = scene.manifest.cameras[0].camera;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_RenderForward(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(stg::render_forward(f.cloud, f.cam, 0.4f));
  state.counters["gaussians"] = double(f.cloud.size());
}
BENCHMARK(BM_RenderForward)->Unit(benchmark::kMillisecond);

void BM_RenderReference(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(stg::render_reference(f.cloud, f.cam, 0.4f));
}
BENCHMARK(BM_RenderReference)->Unit(benchmark::kMillisecond);

void BM_RenderBackward(benchmark::State& state) {
  const auto& f = fixture();
  const auto out = stg::render_forward(f.cloud, f.cam, 0.4f);
  stg::Image<float> grad(f.cam.width, f.cam.height, stg::kFeatureDim, 1e-3f);
  for (auto _ : state) benchmark::DoNotOptimize(stg::render_backward(f.cloud, out.record, grad));
}
BENCHMARK(BM_RenderBackward)->Unit(benchmark::kMillisecond);

void BM_Shade(benchmark::State& state) {
  const auto& f = fixture();
  const auto out = stg::render_forward(f.cloud, f.cam, 0.4f);
  for (auto _ : state) benchmark::DoNotOptimize(stg::shade(out.image, f.cam, &f.mlp));
}
BENCHMARK(BM_Shade)->Unit(benchmark::kMillisecond);

void BM_ShadeBackward(benchmark::State& state) {
  const auto& f = fixture();
  const auto out = stg::render_forward(f.cloud, f.cam, 0.4f);
  stg::ShadeRecord<float> rec;
  const auto rgb = stg::shade(out.image, f.cam, &f.mlp, &rec);
  stg::Image<float> grad(f.cam.width, f.cam.height, 3, 1e-3f);
  for (auto _ : state) benchmark::DoNotOptimize(stg::shade_backward(rec, out.image, f.cam, &f.mlp, grad));
}
BENCHMARK(BM_ShadeBackward)->Unit(benchmark::kMillisecond);

void BM_LossWithGradient(benchmark::State& state) {
  const auto& f = fixture();
  const auto& a = f.scene.images[0];
  const auto& b = f.scene.images[1];
  stg::Image<float> grad;
  for (auto _ : state) benchmark::DoNotOptimize(stg::compute_loss(a, b, 0.2, &grad));
}
BENCHMARK(BM_LossWithGradient)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(stg::ssim(f.scene.images[0], f.scene.images[1], 1.0));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

void BM_AdamStep(benchmark::State& state) {
  const auto& f = fixture();
  auto cloud = f.cloud;
  auto mlp = f.mlp;
  auto adam = stg::AdamState::like(cloud, &mlp);
  stg::GaussianCloud<float> grads(cloud.size(), cloud.motion_degree, cloud.rotation_degree);
  const auto mlp_grads = stg::MlpHead<float>::zeros(mlp.hidden, mlp.activation);
  stg::LearningRates lr;
  lr.position = lr.features = 1e-3;
  for (auto _ : state) stg::adam_step(cloud, grads, &mlp, &mlp_grads, adam, lr);
}
BENCHMARK(BM_AdamStep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
