// Acceptance runner: one PASS/FAIL line per criterion. Optional arguments
// restrict the run to criteria whose name contains one of them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "afenet/band_analysis.hpp"
#include "afenet/checkpoint.hpp"
#include "afenet/dataset.hpp"
#include "afenet/dct.hpp"
#include "afenet/fam.hpp"
#include "afenet/fdm.hpp"
#include "afenet/fem.hpp"
#include "afenet/metrics.hpp"
#include "afenet/model.hpp"
#include "afenet/rain.hpp"
#include "afenet/training.hpp"
#include "cli.hpp"
#include "grad_suite.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace afenet;
using afenet::testing::random_tensor;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed sub-checks so that a criterion reports every problem.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      ok_ = false;
      if (failures_++ < 5) detail_ += (detail_.empty() ? "" : "; ") + what;
    }
  }
  Outcome outcome(const std::string& summary) const {
    if (ok_) return {true, summary};
    return {false, summary + "; failed: " + detail_ + (failures_ > 5 ? " (+" + std::to_string(failures_ - 5) + " more)" : "")};
  }

 private:
  bool ok_ = true;
  int failures_ = 0;
  std::string detail_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Var cst(const Tensor& t) { return Var::constant(t); }

// --- shape and identity ----------------------------------------------------

Outcome shape_identity() {
  Checks ck;
  Rng rng(1);
  double worst = 0.0;
  auto identity = [&](const std::string& name, const Tensor& x, const Tensor& y) {
    const double d = max_abs_diff(x, y);
    worst = std::max(worst, d);
    ck.expect(d <= 1e-5, name + " deviates by " + fmt("%.3g", d));
  };

  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t c = 4 * (1 + rng.below(3));
    const std::int64_t h = 4 * (1 + rng.below(6)), w = 4 * (1 + rng.below(6));
    const Tensor x = random_tensor(Shape{1 + rng.below(2), c, h, w}, rng);
    FemBlockConfig fc;
    fc.channels = c;
    fc.heads = 2;
    fc.attention_l2norm = trial % 2 == 0;
    ParamStore store;
    identity("mdta", x, ChannelAttention(store, "a", fc, true, rng)(cst(x)).value());
    identity("gdfn", x, GatedFeedForward(store, "g", fc, true, rng)(cst(x)).value());
    identity("pyramid_attention", x, PyramidAttention(store, "p", c, true, rng)(cst(x)).value());
    identity("fam_block", x, FamBlock(store, "f", c, 4, {2, 4, 8}, true, rng)(cst(x)).value());
  }
  for (Variant v : {Variant::full, Variant::S1, Variant::S2, Variant::S3, Variant::S4}) {
    ModelConfig mc;
    mc.channels = 8;
    mc.blocks_per_band = 1;
    mc.fam_depth = 1;
    mc.variant = v;
    const Tensor x = random_tensor(Shape{2, 3, 24, 32}, rng, 0.0, 1.0);
    identity(std::string("model ") + to_string(v), x, Afenet(mc).forward(cst(x)).value());
  }

  int configs = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t heads = 1 + rng.below(2);
    const std::int64_t c = heads * 2 * (1 + rng.below(3));
    const std::int64_t n = 1 + rng.below(2), h = 4 * (1 + rng.below(6)), w = 4 * (1 + rng.below(6));
    const std::string tag = "config " + std::to_string(trial);
    const Shape sh{n, c, h, w}, sm{n, c, h / 2, w / 2}, sl{n, c, h / 4, w / 4};
    try {
      ParamStore store;
      const Tensor img = random_tensor(Shape{n, 3, h, w}, rng, 0.0, 1.0);
      const FrequencyDecomposition fdm(store, "fdm", 3, c, rng);
      const BandSet b = fdm.decompose(cst(img));
      ck.expect(b.high.shape() == sh && b.mid.shape() == sm && b.low.shape() == sl, tag + " fdm shapes");
      check_band_geometry(b);
      const BandSet d = DctDecomposition(store, "dct", 3, c, rng).decompose(cst(img));
      ck.expect(d.high.shape() == sh && d.mid.shape() == sm && d.low.shape() == sl, tag + " dct shapes");
      check_band_geometry(d);

      FemBlockConfig fc;
      fc.channels = c;
      fc.heads = heads;
      fc.blocks_per_band = 1;
      const CombineMode mode = trial % 2 == 0 ? CombineMode::concat_project : CombineMode::multiply;
      const CrossBandEnhancement fem(store, "fem", fc, mode, trial % 3 != 0, trial % 5 != 0, rng);
      const BandSet e = fem(b);
      ck.expect(e.high.shape() == sh && e.mid.shape() == sm && e.low.shape() == sl, tag + " fem shapes");
      check_band_geometry(e);

      const std::int64_t splits = c % 4 == 0 ? 4 : 2;
      const std::vector<std::int64_t> scales =
          splits == 4 ? std::vector<std::int64_t>{2, 4, 8} : std::vector<std::int64_t>{2};
      const FrequencyAggregation fam(store, "fam", c, splits, scales, 1, trial % 2 == 0, rng);
      ck.expect(fam(e).shape() == sh, tag + " fam shape");

      ModelConfig mc;
      mc.channels = c;
      mc.heads = heads;
      mc.blocks_per_band = 1;
      mc.fam_splits = splits;
      mc.fam_scales = scales;
      mc.fam_depth = 1;
      mc.variant = static_cast<Variant>(trial % 5);
      mc.zero_init_head = false;
      mc.init_seed = static_cast<std::uint64_t>(trial);
      ck.expect(Afenet(mc).forward(cst(img)).shape() == Shape{n, 3, h, w}, tag + " model shape");
      ++configs;
    } catch (const std::exception& ex) {
      ck.expect(false, tag + " threw: " + ex.what());
    }
  }
  return ck.outcome("max identity deviation " + fmt("%.3g", worst) + ", " + std::to_string(configs) +
                    "/200 band configs");
}

// --- gradients ---------------------------------------------------------------

Outcome gradients() {
  Checks ck;
  afenet::testing::GradCheckOptions opt;
  opt.probes = 120;
  opt.step = 1e-5;
  int cases = 0, min_probes = 1 << 30;
  double worst = 0.0;
  std::string worst_name;
  auto all = afenet::testing::op_gradient_cases();
  for (auto& c : afenet::testing::module_gradient_cases()) all.push_back(std::move(c));
  for (const auto& c : all) {
    const auto rep = c.run(opt);
    ++cases;
    min_probes = std::min(min_probes, rep.probes);
    if (rep.max_rel > worst) {
      worst = rep.max_rel;
      worst_name = c.name;
    }
    ck.expect(rep.passed(1e-3) && rep.probes >= 100,
              c.name + " rel " + fmt("%.3g", rep.max_rel) + " at " + rep.worst);
  }
  return ck.outcome(std::to_string(cases) + " cases, >= " + std::to_string(min_probes) +
                    " probes each, worst rel " + fmt("%.3g", worst) + " (" + worst_name + ")");
}

// --- oracles -----------------------------------------------------------------

Outcome oracles() {
  Checks ck;
  Rng rng(3);
  double dct_err = 0.0, parseval = 0.0, ssim_err = 0.0, psnr_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    Plane p{8, 8, {}};
    for (int i = 0; i < 64; ++i) p.values.push_back(rng.uniform(-1, 1));
    const Plane a = dct2(p), b = afenet::testing::naive_dct2(p);
    double e0 = 0.0, e1 = 0.0;
    for (int i = 0; i < 64; ++i) {
      dct_err = std::max(dct_err, std::abs(a.values[i] - b.values[i]));
      e0 += p.values[i] * p.values[i];
      e1 += a.values[i] * a.values[i];
    }
    parseval = std::max(parseval, std::abs(e0 - e1) / e0);
  }
  ck.expect(dct_err <= 1e-10, "dct2 error " + fmt("%.3g", dct_err));
  ck.expect(parseval <= 1e-8, "Parseval error " + fmt("%.3g", parseval));

  for (int t = 0; t < 20; ++t) {
    Plane a{32, 32, {}}, b{32, 32, {}};
    for (int i = 0; i < 32 * 32; ++i) {
      a.values.push_back(rng.uniform(0, 255));
      b.values.push_back(std::clamp(a.values.back() + rng.normal() * 10.0 * (t + 1), 0.0, 255.0));
    }
    ssim_err = std::max(ssim_err, std::abs(ssim(a, b) - afenet::testing::naive_ssim(a, b)));
  }
  ck.expect(ssim_err <= 1e-6, "ssim error " + fmt("%.3g", ssim_err));

  const Image black(16, 16, ValueRange::byte, 0.0);
  ck.expect(std::isinf(psnr(black, black)) && psnr(black, black) > 0, "identical images are not +inf");
  const std::pair<double, double> cases[] = {{255.0, 0.0}, {128.0, 20.0 * std::log10(255.0 / 128.0)},
                                             {16.0, 20.0 * std::log10(255.0 / 16.0)}};
  for (auto [level, want] : cases) {
    const double got = psnr(black, Image(16, 16, ValueRange::byte, level));
    psnr_err = std::max(psnr_err, std::abs(got - want));
  }
  const double gray = psnr(black, Image(16, 16, ValueRange::byte, 128.0));
  ck.expect(psnr_err <= 1e-9, "psnr error " + fmt("%.3g", psnr_err));
  return ck.outcome("dct " + fmt("%.2g", dct_err) + ", Parseval " + fmt("%.2g", parseval) + ", ssim " +
                    fmt("%.2g", ssim_err) + ", psnr " + fmt("%.2g", psnr_err) + ", gray 0/128 " +
                    fmt("%.6f", gray) + " dB");
}

// --- frequency discrepancy ---------------------------------------------------

Outcome band_discrepancy() {
  Checks ck;
  int streak_order = 0, streak_high_low = 0, veil_low = 0;
  BandStats streak_mean;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Image clean = make_clean_scene(96, 96, 1000 + i);
    RainSynthesisConfig streak = random_rain_config(2000 + i);
    streak.accumulation_strength = 0.0;
    const BandStats s = analyze_pair(synthesize_rain(clean, streak));
    streak_order += s.mse_high > s.mse_mid && s.mse_mid > s.mse_low;
    streak_high_low += s.mse_high > s.mse_low;
    streak_mean.mse_low += s.mse_low / 20;
    streak_mean.mse_mid += s.mse_mid / 20;
    streak_mean.mse_high += s.mse_high / 20;

    RainSynthesisConfig veil = random_rain_config(3000 + i);
    veil.streak_count = 0;
    const BandStats v = analyze_pair(synthesize_rain(clean, veil));
    veil_low += v.mse_low > v.mse_mid && v.mse_low > v.mse_high;
  }
  ck.expect(streak_order >= 18, "streak-only high > mid > low in " + std::to_string(streak_order) + "/20");
  ck.expect(veil_low >= 18, "accumulation-only low dominant in " + std::to_string(veil_low) + "/20");
  return ck.outcome("streak high>mid>low " + std::to_string(streak_order) + "/20 (high>low " +
                    std::to_string(streak_high_low) + "/20, mean mse low/mid/high " +
                    fmt("%.3g", streak_mean.mse_low) + "/" + fmt("%.3g", streak_mean.mse_mid) + "/" +
                    fmt("%.3g", streak_mean.mse_high) + "), accumulation low dominant " +
                    std::to_string(veil_low) + "/20");
}

// --- desk training -------------------------------------------------------------

ModelConfig desk_model() {
  ModelConfig m = ModelConfig::desk();
  m.blocks_per_band = 2;
  m.fam_depth = 1;
  return m;
}

Outcome desk_training() {
  Checks ck;
  const auto train_set = make_synthetic_pairs(200, 96, 96, 1);
  const auto held_out = make_synthetic_pairs(20, 96, 96, 2);
  Afenet model(desk_model());
  TrainConfig cfg = TrainConfig::desk();
  cfg.total_iters = 2000;
  cfg.seed = 1;
  const TrainResult r = train(model, train_set, cfg);
  const EvalSummary s = evaluate_model(model, held_out);
  const double gain = s.psnr - s.input_psnr;
  const double first = window_mean(r.log, 0, 50), last = window_mean(r.log, r.log.size() - 50, 50);
  ck.expect(gain >= 3.0, "gain " + fmt("%.2f", gain) + " dB");
  ck.expect(first > last, "loss window did not decrease");
  return ck.outcome("input " + fmt("%.2f", s.input_psnr) + " dB -> " + fmt("%.2f", s.psnr) + " dB (gain " +
                    fmt("%.2f", gain) + ", ssim " + fmt("%.4f", s.ssim) + "), loss window " +
                    fmt("%.4f", first) + " -> " + fmt("%.4f", last));
}

// --- ablation harness ----------------------------------------------------------

bool has_prefix(const ParamStore& s, const std::string& prefix) {
  for (const auto& n : s.names())
    if (n.rfind(prefix, 0) == 0) return true;
  return false;
}

bool has_part(const ParamStore& s, const std::string& part) {
  for (const auto& n : s.names())
    if (n.find(part) != std::string::npos) return true;
  return false;
}

Outcome ablation() {
  Checks ck;
  afenet::testing::TempDir dir("acceptance_ablation");
  save_paired_dir(dir / "train", make_synthetic_pairs(200, 96, 96, 1));
  save_paired_dir(dir / "eval", make_synthetic_pairs(20, 96, 96, 2));
  std::vector<std::string> args{"afenet", "ablate", "--data", (dir / "train").string(), "--eval-data",
                                (dir / "eval").string(), "--out", (dir / "abl").string(), "--iters", "200",
                                "--blocks-per-band", "2", "--fam-depth", "1"};
  for (const char* v : {"full", "S1", "S2", "S3", "S4"}) {
    args.emplace_back("--variant");
    args.emplace_back(v);
  }
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  ck.expect(code == cli::kOk, "ablate exited " + std::to_string(code) + ": " + err.str());

  std::ifstream csv(dir / "abl" / "ablation.csv");
  std::string line, rows;
  int count = 0;
  std::getline(csv, line);
  ck.expect(line == "variant,final_loss,psnr,ssim,param_count", "csv header '" + line + "'");
  while (std::getline(csv, line)) {
    ++count;
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
    const auto c4 = line.find(',', c3 + 1);
    const double loss = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    ck.expect(std::isfinite(loss), line.substr(0, c1) + " loss not finite");
    rows += (rows.empty() ? "" : ", ") + line.substr(0, c1) + " " + line.substr(c2 + 1, c3 - c2 - 1) + " dB/" +
            line.substr(c4 + 1) + " params";
  }
  ck.expect(count == 5, std::to_string(count) + " csv rows");

  auto params = [&](const char* v) { return load_checkpoint(dir / "abl" / v / "final.ckpt").model.params(); };
  try {
    const ParamStore full = params("full"), s1 = params("S1"), s2 = params("S2"), s3 = params("S3"),
                     s4 = params("S4");
    ck.expect(has_prefix(full, "fdm.") && has_part(full, ".combine.") && has_prefix(full, "fam.block"),
              "full structure");
    ck.expect(has_prefix(s1, "fem.single.") && !has_prefix(s1, "fem.low.") && !has_prefix(s1, "fem.mid.") &&
                  !has_prefix(s1, "fem.high.") && !has_prefix(s1, "fdm."),
              "S1 is not single-branch");
    ck.expect(has_prefix(s2, "dct.") && !has_prefix(s2, "fdm."), "S2 does not use the DCT path");
    ck.expect(!has_part(s3, ".combine."), "S3 has combine parameters");
    ck.expect(!has_prefix(s4, "fam.block") && !has_part(s4, "fam_block"), "S4 has fam block parameters");
  } catch (const std::exception& ex) {
    ck.expect(false, std::string("loading checkpoints: ") + ex.what());
  }
  return ck.outcome(std::to_string(count) + " rows: " + rows);
}

// --- determinism -----------------------------------------------------------------

Outcome determinism() {
  Checks ck;
  afenet::testing::TempDir dir("acceptance_determinism");
  const auto data = make_synthetic_pairs(20, 48, 48, 4);
  ModelConfig mc;
  mc.channels = 8;
  mc.blocks_per_band = 1;
  mc.fam_depth = 1;
  TrainConfig tc;
  tc.patch_size = 32;
  tc.batch_size = 2;
  tc.total_iters = 100;
  tc.seed = 7;
  tc.deterministic = true;
  Afenet a(mc), b(mc);
  const TrainResult ra = train(a, data, tc), rb = train(b, data, tc);
  bool same_log = ra.log.size() == rb.log.size() && ra.log.size() == 100;
  for (std::size_t i = 0; same_log && i < ra.log.size(); ++i)
    same_log = std::memcmp(&ra.log[i].loss, &rb.log[i].loss, sizeof(double)) == 0 && ra.log[i].lr == rb.log[i].lr;
  ck.expect(same_log, "loss logs differ");
  ck.expect(format_log_csv(ra.log).size() > 0, "empty log");

  save_checkpoint(a, dir / "a.ckpt", ra.state);
  const LoadedCheckpoint l = load_checkpoint(dir / "a.ckpt");
  bool exact = l.model.params().names() == a.params().names() && l.state == ra.state;
  for (const auto& n : a.params().names()) {
    if (!exact) break;
    const Tensor &x = a.params().at(n).value(), &y = l.model.params().at(n).value();
    exact = x.shape() == y.shape() &&
            std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.numel())) == 0;
  }
  ck.expect(exact, "checkpoint parameters differ");
  Rng rng(5);
  const Tensor x = random_tensor(Shape{1, 3, 64, 64}, rng, 0.0, 1.0);
  const double fwd = max_abs_diff(a.forward(cst(x)).value(), l.model.forward(cst(x)).value());
  ck.expect(fwd == 0.0, "forward differs by " + fmt("%.3g", fwd));
  return ck.outcome("100-step logs bit-identical, final loss " + fmt("%.6f", ra.log.back().loss) +
                    ", checkpoint round trip bit-exact");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"shape_identity", shape_identity}, {"gradients", gradients},   {"oracles", oracles},
      {"band_discrepancy", band_discrepancy}, {"desk_training", desk_training},
      {"ablation", ablation},             {"determinism", determinism}};
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (argc > 1) {
      bool wanted = false;
      for (int i = 1; i < argc; ++i) wanted = wanted || name.find(argv[i]) != std::string::npos;
      if (!wanted) continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& ex) {
      o = {false, std::string("threw: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
