#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "afenet/checkpoint.hpp"
#include "afenet/error.hpp"
#include "afenet/image.hpp"
#include "afenet/model.hpp"

namespace afenet {

struct TrainConfig {
  std::int64_t patch_size = 64;
  std::int64_t batch_size = 4;
  std::int64_t total_iters = 2000;
  double base_lr = 1e-4;
  double peak_lr = 3e-4;
  std::int64_t cycle_length_iters = 1000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::string loss = "L1";
  bool flips_enabled = true;
  /// Everything here runs single-threaded with a fixed reduction order, so
  /// runs are reproducible either way; the flag is kept for the CLI contract.
  bool deterministic = true;
  /// Write an intermediate checkpoint every N iterations (0 disables).
  std::int64_t checkpoint_every = 0;

  void validate() const;

  static TrainConfig desk();
  /// 256 x 256 patches, batch 64, 800k iterations.
  static TrainConfig full_scale();

  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);

  bool operator==(const TrainConfig&) const = default;
};

/// Mean absolute error; ShapeError on mismatched shapes.
Var l1_loss(const Var& pred, const Var& target);

/// Triangular cycle: base -> peak over the first half of each cycle and
/// back over the second, lr(0) = base_lr.
double cyclic_lr(std::int64_t step, const TrainConfig& cfg);

/// First and second moments for one parameter list.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t t = 0;
};

/// One bias-corrected Adam update of `params` from their accumulated grads.
/// Parameters without a gradient are skipped and keep their moments.
void adam_step(const std::vector<Var>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps);

struct LogRow {
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double seconds = 0.0;
};

/// Raised when the loss stops being finite. `what()` lists the step, the
/// learning rate and the largest per-parameter gradient norms.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(const std::string& msg, std::int64_t step, double lr)
      : Error(msg), step(step), lr(lr) {}
  std::int64_t step;
  double lr;
};

struct TrainOutputs {
  /// Directory for metrics.csv and checkpoints; empty keeps everything in memory.
  std::filesystem::path out_dir;
  /// Called after every logged step.
  std::function<void(const LogRow&)> on_step;
};

struct TrainResult {
  std::vector<LogRow> log;
  TrainingState state;
};

/// Runs `cfg.total_iters` iterations of patch sampling, forward, L1 loss,
/// backward and Adam at the cyclic learning rate. With an output directory
/// it writes metrics.csv (step,lr,loss,seconds), optional periodic
/// checkpoints, and final.ckpt. InvalidArgument for an empty dataset.
TrainResult train(Afenet& model, const std::vector<PairedSample>& data, const TrainConfig& cfg,
                  const TrainOutputs& outputs = {});

/// Mean loss over rows [begin, begin + count), clipped to the log length.
double window_mean(const std::vector<LogRow>& log, std::size_t begin, std::size_t count);

std::string format_log_csv(const std::vector<LogRow>& log);

struct EvalSummary {
  double psnr = 0.0;        ///< mean of per-image Y-channel PSNR (dB)
  double ssim = 0.0;        ///< mean of per-image Y-channel SSIM
  double input_psnr = 0.0;  ///< the same mean for the rainy inputs
};

/// Derains every pair and compares against its clean image.
EvalSummary evaluate_model(const Afenet& model, const std::vector<PairedSample>& pairs);

}  // namespace afenet
