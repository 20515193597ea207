#include "landnet/data/l3d.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "landnet/data/io.hpp"

namespace landnet::data {

namespace fs = std::filesystem;

// -- SplitManifest ------------------------------------------------------------

std::map<std::string, int> SplitManifest::counts() const {
  std::map<std::string, int> c;
  for (const auto& e : entries) ++c[e.split];
  return c;
}

void SplitManifest::validate() const {
  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, std::string> patient_split;
  for (const auto& e : entries) {
    if (e.split != "train" && e.split != "val" && e.split != "test")
      throw DataError("manifest: unknown split '" + e.split + "' for frame " +
                      e.frame_id);
    if (!ids.insert(e.frame_id).second)
      throw DataError("manifest: duplicate frame_id " + e.frame_id);
    auto [it, inserted] = patient_split.emplace(e.patient_id, e.split);
    if (!inserted && it->second != e.split)
      throw DataError("manifest: patient " + e.patient_id +
                      " appears in both '" + it->second + "' and '" + e.split +
                      "' splits");
  }
}

nlohmann::json SplitManifest::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json flags = nlohmann::json::array();
    for (int c = 0; c < 3; ++c)
      if (e.flags[c]) flags.push_back(std::string(1, kClassLetters[c]));
    arr.push_back({{"frame_id", e.frame_id},
                   {"patient_id", e.patient_id},
                   {"split", e.split},
                   {"flags", flags}});
  }
  return {{"entries", arr}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
  SplitManifest m;
  for (const auto& je : j.at("entries")) {
    ManifestEntry e;
    e.frame_id = je.at("frame_id").get<std::string>();
    e.patient_id = je.at("patient_id").get<std::string>();
    e.split = je.at("split").get<std::string>();
    e.flags = {false, false, false};
    for (const auto& f : je.at("flags")) {
      const std::string letter = f.get<std::string>();
      bool known = false;
      for (int c = 0; c < 3; ++c)
        if (letter.size() == 1 && letter[0] == kClassLetters[c]) {
          e.flags[c] = true;
          known = true;
        }
      if (!known)
        throw DataError("manifest: unknown annotation flag '" + letter +
                        "' for frame " + e.frame_id);
    }
    m.entries.push_back(std::move(e));
  }
  m.validate();
  return m;
}

void SplitManifest::save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << to_json().dump(2) << "\n";
}

SplitManifest SplitManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("manifest parse error in " + path.string() + ": " +
                    e.what());
  }
  return from_json(j);
}

// -- FrameDataset -------------------------------------------------------------

FrameDataset::FrameDataset(fs::path root, SplitManifest manifest,
                           std::shared_ptr<const DepthProvider> provider)
    : root_(std::move(root)),
      manifest_(std::move(manifest)),
      depth_(std::move(provider)) {
  manifest_.validate();
}

FrameDataset FrameDataset::open(
    const fs::path& root, std::shared_ptr<const DepthProvider> provider) {
  return FrameDataset(root, SplitManifest::load(root / "manifest.json"),
                      std::move(provider));
}

FrameSample FrameDataset::load_frame(const ManifestEntry& entry) const {
  const std::string file = entry.frame_id + ".png";
  const fs::path image_path = root_ / "images" / file;
  if (!fs::exists(image_path))
    throw DataError("frame " + entry.frame_id +
                    ": image file missing: " + image_path.string());

  FrameSample s;
  s.frame_id = entry.frame_id;
  s.patient_id = entry.patient_id;
  s.rgb = load_rgb8(image_path, &s.h, &s.w);
  const std::size_t plane = s.plane();
  s.masks.assign(3 * plane, 0.0f);

  for (int c = 0; c < 3; ++c) {
    const fs::path mask_path = root_ / "masks" / kClassNames[c] / file;
    if (!entry.flags[c] || !fs::exists(mask_path)) {
      s.present[c] = false;
      continue;
    }
    int mh = 0, mw = 0;
    std::vector<float> m = load_mask8(mask_path, &mh, &mw);
    if (mh != s.h || mw != s.w)
      throw ShapeError("frame " + entry.frame_id + ": mask '" +
                       kClassNames[c] + "' is " + std::to_string(mw) + "x" +
                       std::to_string(mh) + " but the image is " +
                       std::to_string(s.w) + "x" + std::to_string(s.h));
    std::copy(m.begin(), m.end(), s.masks.begin() + c * plane);
    s.present[c] = true;
  }

  const fs::path depth_path = root_ / "depth" / file;
  if (fs::exists(depth_path)) {
    int dh = 0, dw = 0;
    s.depth = load_depth16(depth_path, &dh, &dw);
    if (dh != s.h || dw != s.w)
      throw ShapeError("frame " + entry.frame_id + ": depth map is " +
                       std::to_string(dw) + "x" + std::to_string(dh) +
                       " but the image is " + std::to_string(s.w) + "x" +
                       std::to_string(s.h));
  } else {
    if (!depth_)
      throw DataError("frame " + entry.frame_id +
                      ": no depth file and no depth provider configured");
    s.depth = run_depth_provider(*depth_, s.rgb, s.h, s.w);
  }
  return s;
}

std::vector<ManifestEntry> FrameDataset::split_entries(
    const std::string& split) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : manifest_.entries)
    if (e.split == split) out.push_back(e);
  return out;
}

std::vector<FrameSample> FrameDataset::load_split(
    const std::string& split) const {
  std::vector<FrameSample> out;
  for (const auto& e : split_entries(split)) out.push_back(load_frame(e));
  return out;
}

}  // namespace landnet::data
