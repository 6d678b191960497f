#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "afenet/band_analysis.hpp"
#include "afenet/checkpoint.hpp"
#include "afenet/dataset.hpp"
#include "afenet/error.hpp"
#include "afenet/metrics.hpp"

namespace afenet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read config file " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

/// Images from `dir` keyed by stem; DecodeError / NotFound propagate.
std::map<std::string, Image> load_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFound("directory not found: " + dir.string());
  std::map<std::string, Image> out;
  for (const auto& stem : list_png_stems(dir)) out.emplace(stem, load_image(dir / (stem + ".png")));
  return out;
}

}  // namespace

RunConfig load_run_config(const std::optional<fs::path>& file, const Overrides& o) {
  RunConfig rc;
  if (file) {
    const std::string where = "config " + file->string() + ": ";
    json j;
    try {
      j = json::parse(read_text(*file));
    } catch (const json::parse_error& e) {
      throw ConfigError(where + e.what());
    }
    if (!j.is_object()) throw ConfigError(where + "top level must be an object");
    for (const auto& [key, value] : j.items()) {
      try {
        if (key == "model") rc.model = ModelConfig::from_json(value.dump());
        else if (key == "train") rc.train = TrainConfig::from_json(value.dump());
        else throw ConfigError("unknown section '" + key + "' (expected model, train)");
      } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
      }
    }
  }
  auto& m = rc.model;
  auto& t = rc.train;
  if (o.channels) m.channels = *o.channels;
  if (o.heads) m.heads = *o.heads;
  if (o.blocks_per_band) m.blocks_per_band = *o.blocks_per_band;
  if (o.fam_depth) m.fam_depth = *o.fam_depth;
  if (o.expansion) m.expansion = *o.expansion;
  if (o.variant) m.variant = parse_variant(*o.variant);
  if (o.combine) m.combine = parse_combine(*o.combine);
  if (o.init_seed) m.init_seed = *o.init_seed;
  if (o.iters) t.total_iters = *o.iters;
  if (o.patch_size) t.patch_size = *o.patch_size;
  if (o.batch_size) t.batch_size = *o.batch_size;
  if (o.cycle_length) t.cycle_length_iters = *o.cycle_length;
  if (o.checkpoint_every) t.checkpoint_every = *o.checkpoint_every;
  if (o.base_lr) t.base_lr = *o.base_lr;
  if (o.peak_lr) t.peak_lr = *o.peak_lr;
  if (o.seed) t.seed = *o.seed;
  if (o.no_flips) t.flips_enabled = false;
  if (o.deterministic) t.deterministic = true;
  m.validate();
  t.validate();
  return rc;
}

int cmd_train(const RunConfig& cfg, const fs::path& data, const fs::path& out_dir,
              std::int64_t log_every, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(data)) {
    err << "error: data root not found: " << data.string() << "\n";
    return kUsage;
  }
  std::vector<PairedSample> pairs;
  try {
    pairs = load_paired_dir(data);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  if (pairs.empty()) {
    err << "error: no image pairs under " << data.string() << "\n";
    return kData;
  }
  fs::create_directories(out_dir);
  {
    std::ofstream snap(out_dir / "config.json");
    snap << "{\"model\":" << cfg.model.to_json() << ",\"train\":" << cfg.train.to_json() << "}\n";
  }
  Afenet model(cfg.model);
  out << "training " << to_string(cfg.model.variant) << " (" << model.parameter_count()
      << " parameters) on " << pairs.size() << " pairs for " << cfg.train.total_iters
      << " iterations\n";
  TrainOutputs outputs;
  outputs.out_dir = out_dir;
  if (log_every > 0) {
    outputs.on_step = [&out, log_every](const LogRow& r) {
      if ((r.step + 1) % log_every == 0) {
        out << "step " << r.step + 1 << " lr " << r.lr << " loss " << r.loss << "\n";
      }
    };
  }
  try {
    const auto result = train(model, pairs, cfg.train, outputs);
    if (!result.log.empty()) out << "final loss " << result.log.back().loss << "\n";
  } catch (const NonFiniteLoss& e) {
    err << "error: training aborted: " << e.what() << "\n";
    return kNonFinite;
  }
  out << "wrote " << (out_dir / "final.ckpt").string() << "\n";
  return kOk;
}

int cmd_infer(const fs::path& checkpoint, const fs::path& input, const fs::path& output,
              std::ostream& out, std::ostream& err) {
  std::optional<LoadedCheckpoint> ck;
  try {
    ck.emplace(load_checkpoint(checkpoint));
  } catch (const Error& e) {
    err << "error: checkpoint " << checkpoint.string() << ": " << e.what() << "\n";
    return kCheckpoint;
  }
  if (!fs::is_directory(input)) {
    err << "error: input directory not found: " << input.string() << "\n";
    return kData;
  }
  fs::create_directories(output);
  std::size_t count = 0;
  for (const auto& stem : list_png_stems(input)) {
    try {
      const Image img = load_image(input / (stem + ".png"));
      save_image(ck->model.derain(img), output / (stem + ".png"));
    } catch (const DecodeError& e) {
      err << "error: " << e.what() << "\n";
      return kData;
    }
    ++count;
  }
  out << "derained " << count << " images into " << output.string() << "\n";
  return kOk;
}

int cmd_evaluate(const fs::path& pred, const fs::path& gt, const std::optional<fs::path>& csv,
                 std::ostream& out, std::ostream& err) {
  std::map<std::string, Image> p, g;
  try {
    p = load_dir(pred);
    g = load_dir(gt);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  std::vector<std::string> unmatched;
  for (const auto& [k, v] : p) {
    if (!g.count(k)) unmatched.push_back(pred.string() + "/" + k + ".png");
  }
  for (const auto& [k, v] : g) {
    if (!p.count(k)) unmatched.push_back(gt.string() + "/" + k + ".png");
  }
  if (!unmatched.empty()) {
    err << "error: unmatched stems:\n";
    for (const auto& u : unmatched) err << "  " << u << "\n";
    return kData;
  }
  if (p.empty()) {
    err << "error: no images to evaluate\n";
    return kData;
  }
  std::ostringstream table;
  table << "name,psnr,ssim\n";
  double sum_p = 0.0, sum_s = 0.0;
  for (const auto& [name, a] : p) {
    const Image& b = g.at(name);
    if (a.height != b.height || a.width != b.width) {
      err << "error: " << name << ": size mismatch\n";
      return kData;
    }
    double s = 0.0;
    const double q = psnr(a, b);
    try {
      s = ssim(a, b);
    } catch (const InvalidArgument& e) {
      err << "error: " << name << ": " << e.what() << "\n";
      return kData;
    }
    sum_p += q;
    sum_s += s;
    table << name << "," << fmt(q) << "," << fmt(s) << "\n";
  }
  const auto n = static_cast<double>(p.size());
  table << "MEAN," << fmt(sum_p / n) << "," << fmt(sum_s / n) << "\n";
  if (csv) {
    std::ofstream f(*csv);
    f << table.str();
  }
  out << table.str();
  return kOk;
}

int cmd_analyze_bands(const fs::path& data, const fs::path& csv, std::ostream& out,
                      std::ostream& err) {
  try {
    const auto pairs = load_paired_dir(data);
    const auto report = analyze_corpus(pairs);
    std::ofstream f(csv);
    if (!f) {
      err << "error: cannot write " << csv.string() << "\n";
      return kUsage;
    }
    write_band_csv(f, report);
    out << "analyzed " << pairs.size() << " pairs; mean mse low/mid/high = " << report.mean.mse_low
        << " / " << report.mean.mse_mid << " / " << report.mean.mse_high << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

int cmd_ablate(const std::vector<std::string>& variants, const RunConfig& cfg, const fs::path& data,
               const std::optional<fs::path>& eval, const fs::path& out_dir, std::ostream& out,
               std::ostream& err) {
  std::vector<Variant> chosen;
  try {
    for (const auto& v : variants) chosen.push_back(parse_variant(v));
    for (auto v : chosen) {
      ModelConfig m = cfg.model;
      m.variant = v;
      m.validate();
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (!fs::is_directory(data)) {
    err << "error: data root not found: " << data.string() << "\n";
    return kUsage;
  }
  std::vector<PairedSample> train_pairs, eval_pairs;
  try {
    train_pairs = load_paired_dir(data);
    eval_pairs = eval ? load_paired_dir(*eval) : train_pairs;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  if (train_pairs.empty() || eval_pairs.empty()) {
    err << "error: empty dataset\n";
    return kData;
  }
  fs::create_directories(out_dir);
  const fs::path csv_path = out_dir / "ablation.csv";
  const bool fresh = !fs::exists(csv_path);
  std::ofstream csv(csv_path, std::ios::app);
  if (fresh) csv << "variant,final_loss,psnr,ssim,param_count\n";
  for (auto v : chosen) {
    ModelConfig m = cfg.model;
    m.variant = v;
    Afenet model(m);
    const fs::path run_dir = out_dir / to_string(v);
    TrainResult result;
    try {
      result = train(model, train_pairs, cfg.train, {run_dir, {}});
    } catch (const NonFiniteLoss& e) {
      err << "error: variant " << to_string(v) << ": " << e.what() << "\n";
      return kNonFinite;
    }
    const double final_loss = result.log.empty() ? std::nan("") : result.log.back().loss;
    const auto summary = evaluate_model(model, eval_pairs);
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%.9g,%.6f,%.6f,%lld", to_string(v), final_loss,
                  summary.psnr, summary.ssim, static_cast<long long>(model.parameter_count()));
    csv << line << "\n";
    csv.flush();
    out << line << "\n";
  }
  return kOk;
}

int cmd_make_dataset(const fs::path& out_dir, std::int64_t count, std::int64_t height,
                     std::int64_t width, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  if (count < 1 || height < 8 || width < 8) {
    err << "error: need count >= 1 and images of at least 8x8\n";
    return kUsage;
  }
  save_paired_dir(out_dir, make_synthetic_pairs(count, height, width, seed));
  out << "wrote " << count << " pairs to " << out_dir.string() << "\n";
  return kOk;
}

namespace {

void add_overrides(CLI::App* app, Overrides& o, bool with_variant) {
  app->add_option("--channels", o.channels, "feature channels C");
  app->add_option("--heads", o.heads, "attention heads");
  app->add_option("--blocks-per-band", o.blocks_per_band, "enhancement blocks per band");
  app->add_option("--fam-depth", o.fam_depth, "aggregation blocks");
  app->add_option("--expansion", o.expansion, "feed-forward expansion factor");
  if (with_variant) app->add_option("--variant", o.variant, "full, S1, S2, S3 or S4");
  app->add_option("--combine", o.combine, "concat_project or multiply");
  app->add_option("--init-seed", o.init_seed, "parameter initialisation seed");
  app->add_option("--iters", o.iters, "training iterations");
  app->add_option("--patch-size", o.patch_size, "training patch size");
  app->add_option("--batch-size", o.batch_size, "training batch size");
  app->add_option("--cycle-length", o.cycle_length, "learning-rate cycle length in iterations");
  app->add_option("--checkpoint-every", o.checkpoint_every, "checkpoint cadence (0 = final only)");
  app->add_option("--base-lr", o.base_lr, "cycle minimum learning rate");
  app->add_option("--peak-lr", o.peak_lr, "cycle maximum learning rate");
  app->add_option("--seed", o.seed, "training seed");
  app->add_flag("--no-flips", o.no_flips, "disable flip augmentation");
  app->add_flag("--deterministic", o.deterministic, "fixed reduction order (always on here)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"AFENet single-image deraining"};
  app.require_subcommand(1);

  Overrides o;
  std::optional<std::string> config;
  std::string data, out_dir, checkpoint, input, output, pred, gt, csv;
  std::optional<std::string> csv_opt, eval;
  std::vector<std::string> variants;
  std::int64_t log_every = 100, count = 20, height = 96, width = 96;
  std::uint64_t seed = 0;

  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", config, "JSON config file");
  train_cmd->add_option("--data", data, "paired data root (rainy/, clean/)")->required();
  train_cmd->add_option("--out", out_dir, "output directory")->required();
  train_cmd->add_option("--log-every", log_every, "progress line cadence (0 = quiet)");
  add_overrides(train_cmd, o, true);

  auto* infer_cmd = app.add_subcommand("infer", "derain a directory of PNGs");
  infer_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  infer_cmd->add_option("--input", input, "input directory")->required();
  infer_cmd->add_option("--output", output, "output directory")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "Y-channel PSNR/SSIM of two directories");
  eval_cmd->add_option("--pred", pred, "predicted images")->required();
  eval_cmd->add_option("--gt", gt, "ground-truth images")->required();
  eval_cmd->add_option("--csv", csv_opt, "also write the table here");

  auto* bands_cmd = app.add_subcommand("analyze-bands", "DCT band energy / error table");
  bands_cmd->add_option("--data", data, "paired data root")->required();
  bands_cmd->add_option("--out", csv, "output CSV")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "train and compare variants");
  ablate_cmd->add_option("--variant", variants, "full, S1, S2, S3, S4 (repeatable) or all")
      ->required();
  ablate_cmd->add_option("--config", config, "JSON config file");
  ablate_cmd->add_option("--data", data, "paired training data root")->required();
  ablate_cmd->add_option("--eval-data", eval, "paired evaluation root (default: training data)");
  ablate_cmd->add_option("--out", out_dir, "output directory")->required();
  add_overrides(ablate_cmd, o, false);

  auto* make_cmd = app.add_subcommand("make-dataset", "write the bundled synthetic rain pairs");
  make_cmd->add_option("--out", out_dir, "output root")->required();
  make_cmd->add_option("--count", count, "number of pairs");
  make_cmd->add_option("--height", height, "image height");
  make_cmd->add_option("--width", width, "image width");
  make_cmd->add_option("--seed", seed, "generator seed");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*train_cmd || *ablate_cmd) {
      std::optional<fs::path> file;
      if (config) file = *config;
      const RunConfig rc = load_run_config(file, o);
      if (*train_cmd) return cmd_train(rc, data, out_dir, log_every, out, err);
      if (variants.size() == 1 && variants[0] == "all") variants = {"full", "S1", "S2", "S3", "S4"};
      return cmd_ablate(variants, rc, data, eval ? std::optional<fs::path>(*eval) : std::nullopt,
                        out_dir, out, err);
    }
    if (*infer_cmd) return cmd_infer(checkpoint, input, output, out, err);
    if (*eval_cmd) {
      return cmd_evaluate(pred, gt, csv_opt ? std::optional<fs::path>(*csv_opt) : std::nullopt, out,
                          err);
    }
    if (*bands_cmd) return cmd_analyze_bands(data, csv, out, err);
    if (*make_cmd) return cmd_make_dataset(out_dir, count, height, width, seed, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace afenet::cli
