#include "afenet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "afenet/dataset.hpp"
#include "afenet/metrics.hpp"

namespace afenet {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(base_lr > 0.0) || !(base_lr <= peak_lr)) {
    throw ConfigError("learning rates must satisfy 0 < base_lr <= peak_lr");
  }
  if (cycle_length_iters <= 0) throw ConfigError("cycle_length_iters must be positive");
  if (patch_size < 4 || patch_size % 4 != 0) {
    throw ConfigError("patch_size must be a positive multiple of 4");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (total_iters < 0) throw ConfigError("total_iters must be nonnegative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (loss != "L1") throw ConfigError("unsupported loss '" + loss + "' (only L1)");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be nonnegative");
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::full_scale() {
  TrainConfig c;
  c.patch_size = 256;
  c.batch_size = 64;
  c.total_iters = 800000;
  c.cycle_length_iters = 100000;
  return c;
}

std::string TrainConfig::to_json() const {
  json j;
  j["patch_size"] = patch_size;
  j["batch_size"] = batch_size;
  j["total_iters"] = total_iters;
  j["base_lr"] = base_lr;
  j["peak_lr"] = peak_lr;
  j["cycle_length_iters"] = cycle_length_iters;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["adam_eps"] = adam_eps;
  j["seed"] = seed;
  j["loss"] = loss;
  j["flips_enabled"] = flips_enabled;
  j["deterministic"] = deterministic;
  j["checkpoint_every"] = checkpoint_every;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "patch_size") c.patch_size = value.get<std::int64_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::int64_t>();
      else if (key == "total_iters") c.total_iters = value.get<std::int64_t>();
      else if (key == "base_lr") c.base_lr = value.get<double>();
      else if (key == "peak_lr") c.peak_lr = value.get<double>();
      else if (key == "cycle_length_iters") c.cycle_length_iters = value.get<std::int64_t>();
      else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
      else if (key == "adam_eps") c.adam_eps = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "loss") c.loss = value.get<std::string>();
      else if (key == "flips_enabled") c.flips_enabled = value.get<bool>();
      else if (key == "deterministic") c.deterministic = value.get<bool>();
      else if (key == "checkpoint_every") c.checkpoint_every = value.get<std::int64_t>();
      else throw ConfigError("train config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Var l1_loss(const Var& pred, const Var& target) { return ops::l1_loss(pred, target); }

double cyclic_lr(std::int64_t step, const TrainConfig& cfg) {
  const std::int64_t len = cfg.cycle_length_iters;
  const std::int64_t pos = ((step % len) + len) % len;
  const double half = static_cast<double>(len) / 2.0;
  const double p = static_cast<double>(pos);
  const double frac = p <= half ? p / half : (static_cast<double>(len) - p) / half;
  return cfg.base_lr + (cfg.peak_lr - cfg.base_lr) * frac;
}

void adam_step(const std::vector<Var>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto& p : params) {
      state.m.push_back(Tensor::zeros(p.shape()));
      state.v.push_back(Tensor::zeros(p.shape()));
    }
    state.t = 0;
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Var p = params[i];
    if (!p.has_grad()) continue;
    const double* g = p.grad().data();
    double* w = p.mutable_value().data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    const std::int64_t n = p.value().numel();
    for (std::int64_t k = 0; k < n; ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
    }
  }
}

namespace {

std::string log_line(const LogRow& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.6f", static_cast<long long>(r.step), r.lr,
                r.loss, r.seconds);
  return buf;
}

std::string nan_diagnostics(const ParamStore& store, std::int64_t step, double lr, double loss) {
  std::vector<std::pair<double, std::string>> norms;
  for (const auto& [name, var] : store.entries()) {
    if (!var.has_grad()) continue;
    double s = 0.0;
    for (double g : var.grad().values()) s += g * g;
    norms.emplace_back(std::sqrt(s), name);
  }
  std::sort(norms.begin(), norms.end(), [](const auto& a, const auto& b) {
    // NaN norms sort first so they are always reported.
    if (std::isnan(a.first) != std::isnan(b.first)) return std::isnan(a.first);
    return a.first > b.first;
  });
  std::ostringstream os;
  os << "non-finite loss " << loss << " at step " << step << " (lr " << lr << ")";
  if (!norms.empty()) os << "; largest gradient norms:";
  for (std::size_t i = 0; i < std::min<std::size_t>(5, norms.size()); ++i) {
    os << ' ' << norms[i].second << '=' << norms[i].first;
  }
  return os.str();
}

}  // namespace

TrainResult train(Afenet& model, const std::vector<PairedSample>& data, const TrainConfig& cfg,
                  const TrainOutputs& outputs) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("training needs a nonempty dataset");
  const bool to_disk = !outputs.out_dir.empty();
  std::ofstream csv;
  if (to_disk) {
    std::filesystem::create_directories(outputs.out_dir);
    csv.open(outputs.out_dir / "metrics.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write " + (outputs.out_dir / "metrics.csv").string());
    csv << "step,lr,loss,seconds\n";
  }

  const BatchSampler sampler(data, cfg.patch_size, cfg.batch_size, cfg.flips_enabled, cfg.seed);
  const auto params = model.params().trainable();
  AdamState adam;
  TrainResult result;
  result.state.seed = cfg.seed;
  const auto start = std::chrono::steady_clock::now();

  for (std::int64_t step = 0; step < cfg.total_iters; ++step) {
    const Batch batch = sampler.batch(step);
    const double lr = cyclic_lr(step, cfg);
    model.params().zero_grad();
    const Var pred = model.forward(Var::constant(batch.rainy));
    const Var loss = l1_loss(pred, Var::constant(batch.clean));
    const double value = loss.value()[0];
    backward(loss);
    if (!std::isfinite(value)) {
      throw NonFiniteLoss(nan_diagnostics(model.params(), step, lr, value), step, lr);
    }
    adam_step(params, adam, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    const LogRow row{step, lr, value, elapsed.count()};
    result.log.push_back(row);
    result.state.step = static_cast<std::uint64_t>(step + 1);
    if (to_disk) {
      csv << log_line(row) << '\n';
      csv.flush();
      if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
        save_checkpoint(model, outputs.out_dir / ("step_" + std::to_string(step + 1) + ".ckpt"),
                        result.state);
      }
    }
    if (outputs.on_step) outputs.on_step(row);
  }
  model.params().zero_grad();
  if (to_disk) save_checkpoint(model, outputs.out_dir / "final.ckpt", result.state);
  return result;
}

double window_mean(const std::vector<LogRow>& log, std::size_t begin, std::size_t count) {
  const std::size_t end = std::min(log.size(), begin + count);
  if (begin >= end) return 0.0;
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += log[i].loss;
  return s / static_cast<double>(end - begin);
}

std::string format_log_csv(const std::vector<LogRow>& log) {
  std::string out = "step,lr,loss,seconds\n";
  for (const auto& r : log) out += log_line(r) + '\n';
  return out;
}

EvalSummary evaluate_model(const Afenet& model, const std::vector<PairedSample>& pairs) {
  if (pairs.empty()) throw InvalidArgument("evaluation needs a nonempty dataset");
  EvalSummary s;
  for (const auto& p : pairs) {
    const Image out = model.derain(p.rainy);
    s.psnr += psnr(out, p.clean);
    s.ssim += ssim(out, p.clean);
    s.input_psnr += psnr(p.rainy, p.clean);
  }
  const auto n = static_cast<double>(pairs.size());
  s.psnr /= n;
  s.ssim /= n;
  s.input_psnr /= n;
  return s;
}

}  // namespace afenet
