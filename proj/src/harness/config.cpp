#include "landnet/harness/config.hpp"

#include <fstream>
#include <sstream>

namespace landnet::harness {

void TrainConfig::apply_scale_preset() {
  if (scale == "toy") {
    resolution = 256;
    vit_blocks = 4;
    vit_dim = 192;
    se_reduction = 8;
  } else if (scale == "paper") {
    resolution = 1024;
    vit_blocks = 12;
    vit_dim = 768;
    se_reduction = 16;
  } else {
    throw ConfigError("unknown scale preset: " + scale +
                      " (expected toy or paper)");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lr > lr_floor && lr_floor > 0))
    throw ConfigError("train: need lr > lr_floor > 0");
  if (tau <= 0) throw ConfigError("train: tau must be > 0");
  if (data_root.empty() && synth_train < 1)
    throw ConfigError("train: synthetic dataset needs at least one frame");
  model_config().validate();
}

model::ModelConfig TrainConfig::model_config() const {
  model::ModelConfig m;
  m.resolution = resolution;
  m.common_width = common_width;
  m.vit_blocks = vit_blocks;
  m.vit_dim = vit_dim;
  m.se_reduction = se_reduction;
  m.tau = tau;
  m.mask_pool_threshold = mask_pool_threshold;
  m.dpe_softmax_space = dpe_softmax_space;
  m.cl_raw_dot = cl_raw_dot;
  m.ablation = ablation;
  m.rgb_backbone = model::backbone_from_string(rgb_backbone);
  m.depth_backbone = model::backbone_from_string(depth_backbone);
  m.seed = seed;
  m.pretrained_depth_weights = pretrained_depth_weights;
  return m;
}

data::SynthConfig TrainConfig::synth_config() const {
  data::SynthConfig s;
  s.seed = synth_seed;
  s.count = synth_train + synth_val + synth_test;
  s.resolution = resolution;
  s.curve_thickness_px = synth_thickness;
  s.deformation_amplitude = synth_deformation;
  return s;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"scale", scale},
          {"resolution", resolution},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"lr_floor", lr_floor},
          {"tau", tau},
          {"lambdas", lambdas},
          {"seed", seed},
          {"ablation",
           {{"bfu", ablation.bfu},
            {"dpe", ablation.dpe},
            {"cl", ablation.cl},
            {"sga", ablation.sga}}},
          {"rgb_backbone", rgb_backbone},
          {"depth_backbone", depth_backbone},
          {"data_root", data_root},
          {"synth_seed", synth_seed},
          {"synth_train", synth_train},
          {"synth_val", synth_val},
          {"synth_test", synth_test},
          {"synth_thickness", synth_thickness},
          {"synth_deformation", synth_deformation},
          {"depth_provider", depth_provider},
          {"augment", augment},
          {"grad_clip", grad_clip},
          {"common_width", common_width},
          {"vit_blocks", vit_blocks},
          {"vit_dim", vit_dim},
          {"se_reduction", se_reduction},
          {"mask_pool_threshold", mask_pool_threshold},
          {"dpe_softmax_space", dpe_softmax_space},
          {"cl_raw_dot", cl_raw_dot},
          {"pretrained_depth_weights", pretrained_depth_weights},
          {"run_dir", run_dir},
          {"log_every", log_every},
          {"val_every", val_every},
          {"max_steps", max_steps}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.scale = j.value("scale", c.scale);
  c.resolution = j.value("resolution", c.resolution);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.lr_floor = j.value("lr_floor", c.lr_floor);
  c.tau = j.value("tau", c.tau);
  if (j.contains("lambdas")) c.lambdas = j.at("lambdas");
  c.seed = j.value("seed", c.seed);
  if (j.contains("ablation")) {
    c.ablation.bfu = j.at("ablation").value("bfu", true);
    c.ablation.dpe = j.at("ablation").value("dpe", true);
    c.ablation.cl = j.at("ablation").value("cl", true);
    c.ablation.sga = j.at("ablation").value("sga", true);
  }
  c.rgb_backbone = j.value("rgb_backbone", c.rgb_backbone);
  c.depth_backbone = j.value("depth_backbone", c.depth_backbone);
  c.data_root = j.value("data_root", c.data_root);
  c.synth_seed = j.value("synth_seed", c.synth_seed);
  c.synth_train = j.value("synth_train", c.synth_train);
  c.synth_val = j.value("synth_val", c.synth_val);
  c.synth_test = j.value("synth_test", c.synth_test);
  c.synth_thickness = j.value("synth_thickness", c.synth_thickness);
  c.synth_deformation = j.value("synth_deformation", c.synth_deformation);
  c.depth_provider = j.value("depth_provider", c.depth_provider);
  c.augment = j.value("augment", c.augment);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.common_width = j.value("common_width", c.common_width);
  c.vit_blocks = j.value("vit_blocks", c.vit_blocks);
  c.vit_dim = j.value("vit_dim", c.vit_dim);
  c.se_reduction = j.value("se_reduction", c.se_reduction);
  c.mask_pool_threshold = j.value("mask_pool_threshold", c.mask_pool_threshold);
  c.dpe_softmax_space = j.value("dpe_softmax_space", c.dpe_softmax_space);
  c.cl_raw_dot = j.value("cl_raw_dot", c.cl_raw_dot);
  c.pretrained_depth_weights =
      j.value("pretrained_depth_weights", c.pretrained_depth_weights);
  c.run_dir = j.value("run_dir", c.run_dir);
  c.log_every = j.value("log_every", c.log_every);
  c.val_every = j.value("val_every", c.val_every);
  c.max_steps = j.value("max_steps", c.max_steps);
  return c;
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: boolean expected for '" + key + "', got '" + v +
                    "'");
}

template <typename T>
T parse_num(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  T out{};
  in >> out;
  if (in.fail() || !in.eof())
    throw ConfigError("config: cannot parse value '" + v + "' for '" + key +
                      "'");
  return out;
}

}  // namespace

void TrainConfig::apply_kv(const std::string& key, const std::string& value) {
  if (key == "scale") {
    scale = value;
    apply_scale_preset();
  } else if (key == "resolution") resolution = parse_num<int>(key, value);
  else if (key == "epochs") epochs = parse_num<int>(key, value);
  else if (key == "batch_size") batch_size = parse_num<int>(key, value);
  else if (key == "lr") lr = parse_num<double>(key, value);
  else if (key == "weight_decay") weight_decay = parse_num<double>(key, value);
  else if (key == "lr_floor") lr_floor = parse_num<double>(key, value);
  else if (key == "tau") tau = parse_num<double>(key, value);
  else if (key == "lambda.seg") lambdas[0] = parse_num<double>(key, value);
  else if (key == "lambda.cl") lambdas[1] = parse_num<double>(key, value);
  else if (key == "lambda.ana") lambdas[2] = parse_num<double>(key, value);
  else if (key == "seed") seed = parse_num<std::uint64_t>(key, value);
  else if (key == "ablation.bfu") ablation.bfu = parse_bool(key, value);
  else if (key == "ablation.dpe") ablation.dpe = parse_bool(key, value);
  else if (key == "ablation.cl") ablation.cl = parse_bool(key, value);
  else if (key == "ablation.sga") ablation.sga = parse_bool(key, value);
  else if (key == "backbones.rgb") rgb_backbone = value;
  else if (key == "backbones.depth") depth_backbone = value;
  else if (key == "data.root") data_root = value;
  else if (key == "data.synth.seed") synth_seed = parse_num<std::uint64_t>(key, value);
  else if (key == "data.synth.train") synth_train = parse_num<int>(key, value);
  else if (key == "data.synth.val") synth_val = parse_num<int>(key, value);
  else if (key == "data.synth.test") synth_test = parse_num<int>(key, value);
  else if (key == "data.synth.thickness") synth_thickness = parse_num<int>(key, value);
  else if (key == "data.synth.deformation") synth_deformation = parse_num<double>(key, value);
  else if (key == "data.depth_provider") depth_provider = value;
  else if (key == "augment") augment = parse_bool(key, value);
  else if (key == "grad_clip") grad_clip = parse_num<double>(key, value);
  else if (key == "model.common_width") common_width = parse_num<int>(key, value);
  else if (key == "model.vit_blocks") vit_blocks = parse_num<int>(key, value);
  else if (key == "model.vit_dim") vit_dim = parse_num<int>(key, value);
  else if (key == "model.se_reduction") se_reduction = parse_num<int>(key, value);
  else if (key == "model.mask_pool_threshold") mask_pool_threshold = parse_num<double>(key, value);
  else if (key == "model.dpe_softmax_space") dpe_softmax_space = parse_bool(key, value);
  else if (key == "model.cl_raw_dot") cl_raw_dot = parse_bool(key, value);
  else if (key == "model.pretrained_depth_weights") pretrained_depth_weights = value;
  else if (key == "run_dir") run_dir = value;
  else if (key == "log_every") log_every = parse_num<int>(key, value);
  else if (key == "val_every") val_every = parse_num<int>(key, value);
  else if (key == "max_steps") max_steps = parse_num<int>(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not key=value: '" + line + "'");
    cfg.apply_kv(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace landnet::harness
