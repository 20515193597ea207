#include "landnet/harness/predict.hpp"

#include <algorithm>
#include <cstdio>

#include "landnet/data/io.hpp"
#include "landnet/harness/evaluator.hpp"

namespace landnet::harness {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

/// Planar float resize through the shared bilinear kernel.
std::vector<float> resize_planar(const std::vector<float>& src, int c, int h,
                                 int w, int oh, int ow) {
  NoGradGuard ng;
  auto t = Tensor<float>::from({1, c, h, w}, src);
  return ops::upsample_bilinear(t, oh, ow).values();
}

}  // namespace

int run_predict(const PredictRequest& req) {
  const nlohmann::json meta = checkpoint_meta(req.checkpoint);
  TrainConfig cfg = TrainConfig::from_json(meta.at("config"));
  cfg.data_root.clear();  // inference needs no dataset
  cfg.synth_train = cfg.synth_val = cfg.synth_test = 1;
  model::LandmarkModel<float> model(cfg.model_config());
  auto params = model.parameters();
  load_checkpoint(req.checkpoint, params);
  model.set_training(false);
  const int res = cfg.resolution;
  data::LuminanceProxyDepth proxy;

  std::vector<fs::path> images;
  if (!fs::is_directory(req.images_dir))
    throw DataError("image directory not found: " + req.images_dir.string());
  for (const auto& entry : fs::directory_iterator(req.images_dir))
    if (entry.is_regular_file() && is_image_file(entry.path()))
      images.push_back(entry.path());
  std::sort(images.begin(), images.end());
  fs::create_directories(req.out_dir);

  int ok = 0;
  NoGradGuard ng;
  for (const auto& path : images) {
    int h = 0, w = 0;
    std::vector<float> rgb;
    try {
      rgb = data::load_rgb8(path, &h, &w);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "warning: skipping %s: %s\n",
                   path.string().c_str(), e.what());
      continue;
    }
    std::vector<float> rgb_in = resize_planar(rgb, 3, h, w, res, res);

    std::vector<float> depth_in;
    const fs::path depth_path =
        req.depth_dir.empty()
            ? fs::path()
            : fs::path(req.depth_dir) / (path.stem().string() + ".png");
    if (!req.depth_dir.empty() && fs::exists(depth_path)) {
      int dh = 0, dw = 0;
      auto d = data::load_depth16(depth_path, &dh, &dw);
      depth_in = resize_planar(d, 1, dh, dw, res, res);
    } else {
      depth_in = data::run_depth_provider(proxy, rgb_in, res, res);
    }

    auto rgb_t = Tensor<float>::from({1, 3, res, res}, rgb_in);
    auto depth_t = Tensor<float>::from({1, 1, res, res}, depth_in);
    auto fwd = model.forward(rgb_t, depth_t);
    const std::vector<float> probs_full =
        resize_planar(fwd.probs.values(), 3, res, res, h, w);

    const std::string stem = path.stem().string();
    data::save_probs16(req.out_dir / (stem + "_prob.png"), probs_full, h, w);

    // overlay: detections painted over the original frame
    std::vector<float> overlay = rgb;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    static constexpr float kColors[3][3] = {
        {0.0f, 0.0f, 1.0f},   // silhouette: blue
        {0.0f, 1.0f, 0.0f},   // ligament: green
        {1.0f, 0.0f, 0.0f}};  // ridge: red
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < plane; ++i)
        if (probs_full[c * plane + i] >= static_cast<float>(req.threshold))
          for (int ch = 0; ch < 3; ++ch)
            overlay[ch * plane + i] = kColors[c][ch];
    data::save_rgb8(req.out_dir / (stem + "_overlay.png"), overlay, h, w);
    ++ok;
  }
  if (!images.empty() && ok == 0)
    throw DataError("prediction failed for every image in " +
                    req.images_dir.string());
  return ok;
}

}  // namespace landnet::harness
