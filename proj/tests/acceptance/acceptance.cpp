// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   stg_acceptance [--work-dir DIR] [--only NAME]...

#include <algorithm>
#include <chrono>
#include <map>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stg/dataset_io.hpp"
#include "stg/evaluate.hpp"
#include "stg/metrics.hpp"
#include "stg/rasterizer.hpp"
#include "stg/synth.hpp"
#include "stg/trainer.hpp"
#include "support/scenes.hpp"

namespace fs = std::filesystem;
using namespace stg;

namespace {

// Pinned thresholds.
constexpr double kOracleTolerance = 1e-4;
constexpr double kOracleSeconds = 10.0;
constexpr double kGradientTolerance = 1e-3;
constexpr double kGradientSeconds = 60.0;
constexpr double kOverfitTrainDb = 32.0;
constexpr double kOverfitHeldOutDb = 28.0;
constexpr double kOverfitSeconds = 600.0;
constexpr int kOverfitIterations = 5000;
constexpr double kTemporalMarginDb = 1.0;
constexpr double kGuidedMarginDb = 2.0;
constexpr std::size_t kPayloadBytes = 140;
constexpr int kMetricPairs = 100;

// Ablation runs.
constexpr int kAblationIterations = 3000;
const std::vector<int> kGuidedEvents = {500, 1000, 1500};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Writes (once) and loads a synthetic dataset under the work directory.
Dataset scene(const fs::path& dir, const SynthSpec& spec) {
  if (!fs::exists(dir / "manifest.json")) write_scene(generate_scene(spec), dir);
  return Dataset::load(dir / "manifest.json");
}

double mean_psnr(const ModelFile& model, const Dataset& ds, const std::vector<int>& cams) {
  return evaluate(model, ds, cams).psnr;
}

ModelFile to_model(TrainResult&& r) {
  ModelFile m;
  m.cloud = std::move(r.cloud);
  m.mlp = std::move(r.mlp);
  return m;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  const Camera cam = testing::axis_camera(64, 64, 64);
  testing::RandomCloudOptions o;
  o.lateral = 2.5;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(50, 200)(rng);
    const auto cloud = testing::random_cloud<float>(rng, n, o);
    const float t = std::uniform_real_distribution<float>(0, 1)(rng);
    const auto tiled = render_forward(cloud, cam, t);
    const auto ref = render_reference(cloud, cam, t);
    for (std::size_t i = 0; i < ref.features.data.size(); ++i)
      worst = std::max(worst, double(std::abs(tiled.image.features.data[i] - ref.features.data[i])));
  }
  const double secs = seconds_since(t0);
  return {worst <= kOracleTolerance && secs < kOracleSeconds,
          fmt("max |tiled - reference| = %.3g over 10 scenes (limit %.0e), %.2f s (limit %.0f s)", worst,
              kOracleTolerance, secs, kOracleSeconds)};
}

Outcome gradient_suite(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, double> worst;
  for (std::uint64_t seed = 0; seed < 3; ++seed)
    for (const auto& e : testing::chain_gradient_errors(seed)) worst[e.name] = std::max(worst[e.name], e.error);
  const double secs = seconds_since(t0);
  bool ok = secs < kGradientSeconds;
  std::ostringstream detail;
  detail.precision(2);
  for (const auto& [name, err] : worst) {
    ok = ok && err <= kGradientTolerance;
    detail << name << "=" << err << " ";
  }
  detail << fmt("(limit %.0e), %.1f s (limit %.0f s)", kGradientTolerance, secs, kGradientSeconds);
  return {ok && worst.size() == 13, detail.str()};
}

Outcome static_collapse(const fs::path&) {
  std::mt19937_64 rng(1);
  auto c = testing::random_cloud<float>(rng, 150);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (int k = 1; k <= c.motion_degree; ++k) c.set_motion_coeff(i, k, Vec3<float>::Zero());
    for (int k = 1; k <= c.rotation_degree; ++k) c.set_rotation_coeff(i, k, Vec4<float>::Zero());
    c.log_temporal_scale[i] = -100.0f;  // sτ below the smallest float step of the exponent
    c.set_vec3(c.f_time, i, Vec3<float>::Zero());
  }
  auto mlp = MlpHead<float>::random(32, Activation::Sigmoid, rng);
  const Camera cam = testing::axis_camera(64, 64, 64);
  const auto a = render_forward(c, cam, 0.0f), b = render_forward(c, cam, 1.0f);
  const auto rgb_a = shade(a.image, cam, &mlp), rgb_b = shade(b.image, cam, &mlp);
  const bool same = a.image.features.data == b.image.features.data && a.image.alpha.data == b.image.alpha.data &&
                    rgb_a.data == rgb_b.data;
  std::size_t lit = 0;
  for (float v : a.image.alpha.data) lit += v > 0;
  return {same && lit > 0, fmt("renders at t=0 and t=1 %s (%zu covered pixels)",
                               same ? "bit-identical" : "differ", lit)};
}

Outcome synthetic_overfit(const fs::path& work) {
  const Dataset ds = scene(work / "default", SynthSpec{});
  TrainConfig cfg;
  cfg.iterations = kOverfitIterations;
  const auto t0 = std::chrono::steady_clock::now();
  ModelFile model = to_model(train(ds, cfg));
  const double train_secs = seconds_since(t0);
  const double train_db = mean_psnr(model, ds, ds.manifest().train_cameras());
  const double held_db = mean_psnr(model, ds, ds.manifest().held_out_cameras);
  const double secs = seconds_since(t0);
  return {train_db >= kOverfitTrainDb && held_db >= kOverfitHeldOutDb && secs <= kOverfitSeconds,
          fmt("train %.2f dB (>= %.0f), held-out %.2f dB (>= %.0f), %d iterations in %.0f s, %.0f s with eval "
              "(limit %.0f s), %zu Gaussians",
              train_db, kOverfitTrainDb, held_db, kOverfitHeldOutDb, kOverfitIterations, train_secs, secs,
              kOverfitSeconds, model.cloud.size())};
}

Outcome temporal_ablation(const fs::path& work) {
  SynthSpec spec;
  spec.motion = MotionFamily::Transient;
  const Dataset ds = scene(work / "transient", spec);
  TrainConfig cfg;
  cfg.iterations = kAblationIterations;
  const double full = mean_psnr(to_model(train(ds, cfg)), ds, ds.manifest().held_out_cameras);
  cfg.train_temporal_opacity = false;
  const double frozen = mean_psnr(to_model(train(ds, cfg)), ds, ds.manifest().held_out_cameras);
  return {full - frozen >= kTemporalMarginDb,
          fmt("held-out %.2f dB full vs %.2f dB with frozen temporal opacity: %+.2f dB (need >= %.1f), %d iterations",
              full, frozen, full - frozen, kTemporalMarginDb, kAblationIterations)};
}

Outcome guided_ablation(const fs::path& work) {
  SynthSpec spec;
  spec.backdrop = true;
  const Dataset ds = scene(work / "backdrop", spec);
  TrainConfig cfg;
  cfg.iterations = kAblationIterations;
  cfg.guided_iterations = kGuidedEvents;
  TrainResult on = train(ds, cfg);
  std::size_t outside = 0;
  double lo = 1e30, hi = 0;
  for (const auto& g : on.guided) {
    const double a = cfg.guided_depth_factor * g.max_depth, b = cfg.guided_far_factor * g.max_depth;
    if (g.depth < a || g.depth > b || g.ray_depth < a || g.ray_depth > b) ++outside;
    lo = std::min(lo, g.depth / g.max_depth);
    hi = std::max(hi, g.depth / g.max_depth);
  }
  const std::size_t sampled = on.guided.size();
  const double with = mean_psnr(to_model(std::move(on)), ds, ds.manifest().held_out_cameras);
  cfg.guided_sampling = false;
  const double without = mean_psnr(to_model(train(ds, cfg)), ds, ds.manifest().held_out_cameras);
  return {with - without >= kGuidedMarginDb && sampled > 0 && outside == 0,
          fmt("held-out %.2f dB guided vs %.2f dB unguided: %+.2f dB (need >= %.1f); %zu samples at %.2f..%.2f x d, "
              "%zu outside [0.7 d, 7.5 d]",
              with, without, with - without, kGuidedMarginDb, sampled, sampled ? lo : 0.0, sampled ? hi : 0.0,
              outside)};
}

Outcome compactness(const fs::path&) {
  const GaussianCloud<float> probe(1, 3, 1);
  bool ok = std::size_t(probe.floats_per_gaussian()) * 4 == kPayloadBytes && kFeatureDim == 9;
  std::ostringstream detail;
  detail << "payload " << probe.floats_per_gaussian() * 4 << " B/Gaussian (" << probe.floats_per_gaussian()
         << " floats, " << kFeatureDim << " features);";
  std::mt19937_64 rng(2);
  const auto mlp = MlpHead<float>::random(32, Activation::Clamp, rng);
  const std::size_t mlp_bytes = 4 * mlp.parameter_count();
  for (std::size_t n : {1u, 100u, 10000u}) {
    ModelFile m;
    m.cloud = testing::random_cloud<float>(rng, n);
    const std::size_t lite = serialize_model(m).size();
    m.mlp = mlp;
    const std::size_t full = serialize_model(m).size();
    const std::size_t expect = 60 + kPayloadBytes * n;
    ok = ok && lite == expect && full == expect + mlp_bytes;
    detail << " N=" << n << ": " << lite << " B lite, " << full << " B full";
  }
  return {ok, detail.str()};
}

Outcome metrics(const fs::path&) {
  std::mt19937_64 rng(3);
  auto a = testing::random_image<float>(rng, 64, 64, 3, 0.0, 0.9);
  Image<float> b = a;
  for (float& v : b.data) v += 0.1f;
  const double p20 = psnr(a.cast<double>(), b.cast<double>());
  const double self = dssim(a, a, 1.0) + dssim(a, a, 2.0);
  int ordered = 0;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> level(0.01, 0.5);
  for (int k = 0; k < kMetricPairs; ++k) {
    const auto x = testing::random_image<float>(rng, 32, 32, 3, 0.0, 1.0);
    Image<float> y = x;
    const double s = level(rng);
    for (float& v : y.data) v = std::clamp(float(v + s * noise(rng)), 0.0f, 1.0f);
    ordered += dssim(x, y, 2.0) <= dssim(x, y, 1.0);
  }
  const bool ok = std::abs(p20 - 20.0) <= 1e-6 && self == 0.0 && ordered == kMetricPairs;
  return {ok, fmt("PSNR(+0.1) = %.9f dB, DSSIM self = %g, DSSIM2 <= DSSIM1 on %d/%d pairs", p20, self, ordered,
                  kMetricPairs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string work_dir = (fs::temp_directory_path() / "stg_acceptance").string();
  std::vector<std::string> only;
  app.add_option("--work-dir", work_dir, "Scratch directory for synthesized datasets");
  app.add_option("--only", only, "Run just these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work_dir);

  const std::vector<std::pair<std::string, std::function<Outcome(const fs::path&)>>> criteria = {
      {"oracle_equivalence", oracle_equivalence}, {"gradient_suite", gradient_suite},
      {"static_collapse", static_collapse},       {"synthetic_overfit", synthetic_overfit},
      {"temporal_ablation", temporal_ablation},   {"guided_ablation", guided_ablation},
      {"compactness", compactness},               {"metrics", metrics},
  };

  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Outcome r;
    try {
      r = run(work_dir);
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += !r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
