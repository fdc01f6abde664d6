#pragma once

#include <vector>

#include "stg/dataset_io.hpp"
#include "stg/metrics.hpp"

namespace stg {

/// Renders a model to RGB. `lite` drops the MLP even when the model has one.
Image<float> render_rgb(const ModelFile& model, const Camera& cam, float t, bool lite = false);

/// PSNR/DSSIM over every frame of the given cameras.
MetricReport evaluate(const ModelFile& model, const Dataset& dataset, const std::vector<int>& cameras,
                      bool lite = false);

}  // namespace stg
