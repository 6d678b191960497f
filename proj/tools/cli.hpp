#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "afenet/model_config.hpp"
#include "afenet/training.hpp"

namespace afenet::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,       ///< bad flags or config
  kCheckpoint = 3,  ///< unreadable, corrupt or incompatible checkpoint
  kData = 4,        ///< missing, unmatched or undecodable images
  kNonFinite = 5,   ///< training aborted on a non-finite loss
};

/// Flag values that override the config file. Unset members keep the file's
/// (or the built-in default) value.
struct Overrides {
  std::optional<std::int64_t> channels, heads, blocks_per_band, fam_depth;
  std::optional<double> expansion;
  std::optional<std::string> variant, combine;
  std::optional<std::uint64_t> init_seed;
  std::optional<std::int64_t> iters, patch_size, batch_size, cycle_length, checkpoint_every;
  std::optional<double> base_lr, peak_lr;
  std::optional<std::uint64_t> seed;
  bool no_flips = false;
  bool deterministic = false;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

/// Reads {"model": {...}, "train": {...}} (either section optional) and
/// applies the overrides. Throws ConfigError with the file name and, for
/// syntax errors, the line and column.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const Overrides& o);

int cmd_train(const RunConfig& cfg, const std::filesystem::path& data,
              const std::filesystem::path& out_dir, std::int64_t log_every, std::ostream& out,
              std::ostream& err);
int cmd_infer(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
              const std::filesystem::path& output, std::ostream& out, std::ostream& err);
int cmd_evaluate(const std::filesystem::path& pred, const std::filesystem::path& gt,
                 const std::optional<std::filesystem::path>& csv, std::ostream& out,
                 std::ostream& err);
int cmd_analyze_bands(const std::filesystem::path& data, const std::filesystem::path& csv,
                      std::ostream& out, std::ostream& err);
int cmd_ablate(const std::vector<std::string>& variants, const RunConfig& cfg,
               const std::filesystem::path& data, const std::optional<std::filesystem::path>& eval,
               const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);
int cmd_make_dataset(const std::filesystem::path& out_dir, std::int64_t count, std::int64_t height,
                     std::int64_t width, std::uint64_t seed, std::ostream& out, std::ostream& err);

/// Full command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace afenet::cli
