#include "stg/evaluate.hpp"

#include "stg/errors.hpp"
#include "stg/rasterizer.hpp"
#include "stg/shading.hpp"

namespace stg {

Image<float> render_rgb(const ModelFile& model, const Camera& cam, float t, bool lite) {
  const RenderOutput<float> out = render_forward(model.cloud, cam, t);
  const MlpHead<float>* mlp = (!lite && model.mlp) ? &*model.mlp : nullptr;
  return shade(out.image, cam, mlp);
}

MetricReport evaluate(const ModelFile& model, const Dataset& dataset, const std::vector<int>& cameras, bool lite) {
  const DatasetManifest& m = dataset.manifest();
  MetricReport report;
  for (int c : cameras) {
    if (c < 0 || c >= int(m.cameras.size())) throw UsageError("evaluate: camera index out of range");
    for (int f = 0; f < m.frame_count; ++f) {
      const Image<float> rgb = render_rgb(model, m.cameras[c].camera, float(m.frame_time(f)), lite);
      const Image<float>& gt = dataset.image(c, f);
      report.add({c, f, psnr(rgb, gt), dssim(rgb, gt, 1.0), dssim(rgb, gt, 2.0)});
    }
  }
  report.finalize();
  return report;
}

}  // namespace stg
