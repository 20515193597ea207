#include "landnet/harness/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "landnet/data/augment.hpp"

namespace landnet::harness {

namespace fs = std::filesystem;
using model::LandmarkModel;

metrics::MetricsReport run_evaluation(LandmarkModel<float>& model,
                                      const std::vector<data::FrameSample>& frames,
                                      int batch_size, double threshold) {
  model.set_training(false);
  metrics::SplitEvaluator evaluator(threshold);
  NoGradGuard ng;
  for (size_t i = 0; i < frames.size(); i += batch_size) {
    std::vector<data::FrameSample> chunk(
        frames.begin() + i,
        frames.begin() + std::min(frames.size(), i + batch_size));
    auto batch = model::make_batch<float>(chunk);
    auto fwd = model.forward(batch.rgb, batch.depth);
    const std::size_t plane =
        static_cast<std::size_t>(batch.h) * batch.w;
    for (size_t j = 0; j < chunk.size(); ++j) {
      std::vector<float> probs(
          fwd.probs.data() + j * 3 * plane,
          fwd.probs.data() + (j + 1) * 3 * plane);
      evaluator.add_frame(chunk[j].frame_id, batch.h, batch.w, probs,
                          chunk[j].masks, chunk[j].present);
    }
  }
  model.set_training(true);
  return evaluator.report();
}

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.depth_provider == "proxy")
    provider_ = std::make_shared<data::LuminanceProxyDepth>();
  else if (cfg_.depth_provider != "none")
    throw ConfigError("unknown depth provider: " + cfg_.depth_provider);
  if (!cfg_.data_root.empty()) {
    disk_ = std::make_unique<data::FrameDataset>(
        data::FrameDataset::open(cfg_.data_root, provider_));
  }
  model_ = std::make_unique<LandmarkModel<float>>(cfg_.model_config());
}

int Trainer::split_size(const std::string& split) const {
  if (disk_) return static_cast<int>(disk_->split_entries(split).size());
  if (split == "train") return cfg_.synth_train;
  if (split == "val") return cfg_.synth_val;
  if (split == "test") return cfg_.synth_test;
  throw ConfigError("unknown split: " + split);
}

data::FrameSample Trainer::load_frame(const std::string& split,
                                      int index) const {
  if (disk_) {
    const auto entries = disk_->split_entries(split);
    return disk_->load_frame(entries.at(static_cast<size_t>(index)));
  }
  int offset = 0;
  if (split == "val") offset = cfg_.synth_train;
  else if (split == "test") offset = cfg_.synth_train + cfg_.synth_val;
  else if (split != "train") throw ConfigError("unknown split: " + split);
  return data::generate_synthetic(cfg_.synth_config(), offset + index);
}

std::vector<data::FrameSample> Trainer::load_split(
    const std::string& split) const {
  std::vector<data::FrameSample> out;
  const int n = split_size(split);
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(load_frame(split, i));
  return out;
}

void Trainer::save(const fs::path& dir, int epoch, double best_dsc,
                   const nlohmann::json& history) {
  auto params = model_->parameters();
  nlohmann::json meta;
  meta["config"] = cfg_.to_json();
  meta["model_config"] = cfg_.model_config().to_json();
  meta["arch_hash"] = cfg_.model_config().arch_hash();
  meta["epoch"] = epoch;
  meta["best_val_dsc"] = best_dsc;
  meta["history"] = history;
  meta["seed"] = cfg_.seed;
  meta["version"] = "landnet-0.1.0";
  save_checkpoint(dir, params, meta);
}

TrainResult Trainer::run() {
  TrainResult result;
  result.run_dir = cfg_.run_dir;
  fs::create_directories(result.run_dir);
  std::ofstream log(result.run_dir / "train_log.jsonl");
  if (!log)
    throw DataError("cannot write training log under " +
                    result.run_dir.string());
  {
    std::ofstream cfg_out(result.run_dir / "config.json");
    cfg_out << cfg_.to_json().dump(2) << "\n";
  }

  const int n_train = split_size("train");
  if (n_train == 0) throw ConfigError("training split is empty");
  Adam<float>::Options opts;
  opts.lr = static_cast<float>(cfg_.lr);
  opts.weight_decay = static_cast<float>(cfg_.weight_decay);
  opts.grad_clip = static_cast<float>(cfg_.grad_clip);
  auto params = model_->parameters();
  Adam<float> adam(params, opts);

  const fs::path last_dir = result.run_dir / "checkpoint_last";
  const fs::path best_dir = result.run_dir / "checkpoint_best";
  nlohmann::json history = nlohmann::json::array();
  int step = 0;
  bool stop = false;
  model_->set_training(true);

  for (int epoch = 0; epoch < cfg_.epochs && !stop; ++epoch) {
    const double lr =
        cosine_annealed_lr(cfg_.lr, cfg_.lr_floor, epoch, cfg_.epochs);
    adam.set_lr(static_cast<float>(lr));

    std::vector<int> order(static_cast<size_t>(n_train));
    for (int i = 0; i < n_train; ++i) order[static_cast<size_t>(i)] = i;
    Rng shuffle_rng = Rng::derive(cfg_.seed, 0x0D0E, epoch);
    for (int i = n_train - 1; i > 0; --i)
      std::swap(order[static_cast<size_t>(i)],
                order[shuffle_rng.uniform_int(0, i)]);

    for (int start = 0; start < n_train && !stop;
         start += cfg_.batch_size) {
      std::vector<data::FrameSample> frames;
      for (int i = start;
           i < std::min(n_train, start + cfg_.batch_size); ++i) {
        data::FrameSample f = load_frame("train", order[static_cast<size_t>(i)]);
        if (cfg_.augment) {
          const std::uint64_t aug_seed =
              Rng::derive(cfg_.seed, 0xA06, static_cast<std::uint64_t>(epoch) *
                                                 100000 +
                                                 order[static_cast<size_t>(i)])
                  .next_u64();
          f = data::augment(f, aug_seed);
        }
        frames.push_back(std::move(f));
      }
      auto batch = model::make_batch<float>(frames);
      ++step;
      try {
        auto fwd = model_->forward(batch.rgb, batch.depth);
        auto loss = model_->compute_loss(fwd, batch, cfg_.lambdas);
        adam.zero_grad();
        loss.total.backward();
        adam.step();
        if (step == 1)
          result.first_step_total = static_cast<double>(loss.total.item());
        if (step % cfg_.log_every == 0) {
          nlohmann::json entry = loss.to_json();
          entry["event"] = "step";
          entry["step"] = step;
          entry["epoch"] = epoch;
          entry["lr"] = lr;
          log << entry.dump() << "\n";
          log.flush();
        }
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (training step " +
                           std::to_string(step) + ", epoch " +
                           std::to_string(epoch) + ")");
      }
      if (cfg_.max_steps > 0 && step >= cfg_.max_steps) stop = true;
    }

    const bool last_epoch = stop || epoch == cfg_.epochs - 1;
    if (split_size("val") > 0 &&
        ((epoch + 1) % cfg_.val_every == 0 || last_epoch)) {
      auto report = run_evaluation(*model_, load_split("val"),
                                   cfg_.batch_size);
      history.push_back({{"epoch", epoch},
                         {"val_dsc", report.mean_dsc},
                         {"val_iou", report.mean_iou},
                         {"val_assd", report.mean_assd}});
      nlohmann::json entry = report.to_json();
      entry["event"] = "val";
      entry["epoch"] = epoch;
      entry["step"] = step;
      log << entry.dump() << "\n";
      log.flush();
      std::printf("epoch %d  lr %.2e  val DSC %.2f  IoU %.2f  Assd %.2f\n",
                  epoch, lr, report.mean_dsc, report.mean_iou,
                  report.mean_assd);
      if (report.mean_dsc > result.best_val_dsc) {
        result.best_val_dsc = report.mean_dsc;
        save(best_dir, epoch, result.best_val_dsc, history);
        result.best_checkpoint = best_dir;
      }
      result.final_val = report;
    }
  }

  save(last_dir, cfg_.epochs - 1, result.best_val_dsc, history);
  result.last_checkpoint = last_dir;
  if (result.best_checkpoint.empty()) {
    // no validation ran: the last checkpoint doubles as best
    result.best_checkpoint = last_dir;
  }
  result.steps = step;
  return result;
}

}  // namespace landnet::harness
