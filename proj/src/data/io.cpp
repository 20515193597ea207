#include "landnet/data/io.hpp"

#include <opencv2/imgcodecs.hpp>

#include "landnet/data/synthetic.hpp"

namespace landnet::data {

namespace fs = std::filesystem;

namespace {

cv::Mat load_or_throw(const fs::path& path, int flags) {
  cv::Mat img = cv::imread(path.string(), flags);
  if (img.empty()) throw DataError("cannot read image: " + path.string());
  return img;
}

}  // namespace

void save_rgb8(const fs::path& path, const std::vector<float>& rgb, int h,
               int w) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  cv::Mat img(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<size_t>(y) * w + x;
      auto& px = img.at<cv::Vec3b>(y, x);  // BGR on disk
      px[2] = cv::saturate_cast<uchar>(rgb[i] * 255.0f);
      px[1] = cv::saturate_cast<uchar>(rgb[plane + i] * 255.0f);
      px[0] = cv::saturate_cast<uchar>(rgb[2 * plane + i] * 255.0f);
    }
  if (!cv::imwrite(path.string(), img))
    throw DataError("cannot write image: " + path.string());
}

std::vector<float> load_rgb8(const fs::path& path, int* h, int* w) {
  cv::Mat img = load_or_throw(path, cv::IMREAD_COLOR);
  *h = img.rows;
  *w = img.cols;
  const std::size_t plane = static_cast<std::size_t>(*h) * *w;
  std::vector<float> rgb(3 * plane);
  for (int y = 0; y < *h; ++y)
    for (int x = 0; x < *w; ++x) {
      const auto& px = img.at<cv::Vec3b>(y, x);
      const std::size_t i = static_cast<size_t>(y) * *w + x;
      rgb[i] = px[2] / 255.0f;
      rgb[plane + i] = px[1] / 255.0f;
      rgb[2 * plane + i] = px[0] / 255.0f;
    }
  return rgb;
}

void save_mask8(const fs::path& path, const std::vector<float>& mask, int h,
                int w) {
  cv::Mat img(h, w, CV_8UC1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.at<uchar>(y, x) =
          mask[static_cast<size_t>(y) * w + x] >= 0.5f ? 255 : 0;
  if (!cv::imwrite(path.string(), img))
    throw DataError("cannot write mask: " + path.string());
}

std::vector<float> load_mask8(const fs::path& path, int* h, int* w) {
  cv::Mat img = load_or_throw(path, cv::IMREAD_GRAYSCALE);
  *h = img.rows;
  *w = img.cols;
  std::vector<float> mask(static_cast<size_t>(*h) * *w);
  for (int y = 0; y < *h; ++y)
    for (int x = 0; x < *w; ++x)
      mask[static_cast<size_t>(y) * *w + x] =
          img.at<uchar>(y, x) >= 128 ? 1.0f : 0.0f;
  return mask;
}

void save_depth16(const fs::path& path, const std::vector<float>& depth,
                  int h, int w) {
  cv::Mat img(h, w, CV_16UC1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.at<std::uint16_t>(y, x) = cv::saturate_cast<std::uint16_t>(
          std::lround(depth[static_cast<size_t>(y) * w + x] * 65535.0f));
  if (!cv::imwrite(path.string(), img))
    throw DataError("cannot write depth: " + path.string());
}

std::vector<float> load_depth16(const fs::path& path, int* h, int* w) {
  cv::Mat img = load_or_throw(path, cv::IMREAD_UNCHANGED);
  *h = img.rows;
  *w = img.cols;
  std::vector<float> depth(static_cast<size_t>(*h) * *w);
  if (img.type() == CV_16UC1) {
    for (int y = 0; y < *h; ++y)
      for (int x = 0; x < *w; ++x)
        depth[static_cast<size_t>(y) * *w + x] =
            img.at<std::uint16_t>(y, x) / 65535.0f;
  } else if (img.type() == CV_8UC1) {
    for (int y = 0; y < *h; ++y)
      for (int x = 0; x < *w; ++x)
        depth[static_cast<size_t>(y) * *w + x] = img.at<uchar>(y, x) / 255.0f;
  } else {
    throw DataError("depth file must be 8- or 16-bit grayscale: " +
                    path.string());
  }
  return depth;
}

void save_probs16(const fs::path& path, const std::vector<float>& probs,
                  int h, int w) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  cv::Mat img(h, w, CV_16UC3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<size_t>(y) * w + x;
      auto& px = img.at<cv::Vec3w>(y, x);
      px[2] = cv::saturate_cast<std::uint16_t>(
          std::lround(probs[i] * 65535.0f));
      px[1] = cv::saturate_cast<std::uint16_t>(
          std::lround(probs[plane + i] * 65535.0f));
      px[0] = cv::saturate_cast<std::uint16_t>(
          std::lround(probs[2 * plane + i] * 65535.0f));
    }
  if (!cv::imwrite(path.string(), img))
    throw DataError("cannot write probability map: " + path.string());
}

std::vector<float> load_probs16(const fs::path& path, int* h, int* w) {
  cv::Mat img = load_or_throw(path, cv::IMREAD_UNCHANGED);
  if (img.type() != CV_16UC3)
    throw DataError("probability map must be 16-bit 3-channel: " +
                    path.string());
  *h = img.rows;
  *w = img.cols;
  const std::size_t plane = static_cast<std::size_t>(*h) * *w;
  std::vector<float> probs(3 * plane);
  for (int y = 0; y < *h; ++y)
    for (int x = 0; x < *w; ++x) {
      const auto& px = img.at<cv::Vec3w>(y, x);
      const std::size_t i = static_cast<size_t>(y) * *w + x;
      probs[i] = px[2] / 65535.0f;
      probs[plane + i] = px[1] / 65535.0f;
      probs[2 * plane + i] = px[0] / 65535.0f;
    }
  return probs;
}

void write_frame(const fs::path& root, const FrameSample& s) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "depth");
  for (const char* cls : kClassNames)
    fs::create_directories(root / "masks" / cls);
  const std::string file = s.frame_id + ".png";
  save_rgb8(root / "images" / file, s.rgb, s.h, s.w);
  save_depth16(root / "depth" / file, s.depth, s.h, s.w);
  const std::size_t plane = s.plane();
  for (int c = 0; c < 3; ++c) {
    if (!s.present[c]) continue;  // unannotated class: no mask file
    std::vector<float> m(s.masks.begin() + c * plane,
                         s.masks.begin() + (c + 1) * plane);
    save_mask8(root / "masks" / kClassNames[c] / file, m, s.h, s.w);
  }
}

SplitManifest write_synthetic_dataset(const fs::path& root,
                                      const SynthConfig& cfg, int n_train,
                                      int n_val, int n_test,
                                      int frames_per_patient) {
  const int total = n_train + n_val + n_test;
  if (total > cfg.count)
    throw ConfigError("synthetic dataset: train+val+test exceeds cfg.count");
  SplitManifest manifest;
  // Patients are blocks of consecutive frames; the split boundary never
  // cuts through a patient because each split starts a new patient id.
  auto emit = [&](int begin, int n, const std::string& split, int* patient) {
    for (int i = 0; i < n; ++i) {
      const int idx = begin + i;
      if (i % frames_per_patient == 0) ++(*patient);
      FrameSample s = generate_synthetic(cfg, idx);
      s.patient_id = "synthpat_" + std::to_string(*patient);
      write_frame(root, s);
      manifest.entries.push_back(
          {s.frame_id, s.patient_id, split, s.present});
    }
  };
  int patient = -1;
  emit(0, n_train, "train", &patient);
  ++patient;
  emit(n_train, n_val, "val", &patient);
  ++patient;
  emit(n_train + n_val, n_test, "test", &patient);
  manifest.validate();
  manifest.save(root / "manifest.json");
  return manifest;
}

}  // namespace landnet::data
