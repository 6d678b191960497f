#include "afenet/model_config.hpp"

#include <cmath>

#include <json.hpp>

#include "afenet/error.hpp"

namespace afenet {

using nlohmann::json;

const char* to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::S1: return "S1";
    case Variant::S2: return "S2";
    case Variant::S3: return "S3";
    case Variant::S4: return "S4";
  }
  return "?";
}

const char* to_string(CombineMode m) {
  return m == CombineMode::multiply ? "multiply" : "concat_project";
}

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "S1") return Variant::S1;
  if (s == "S2") return Variant::S2;
  if (s == "S3") return Variant::S3;
  if (s == "S4") return Variant::S4;
  throw ConfigError("unknown variant '" + s + "' (expected full, S1, S2, S3 or S4)");
}

CombineMode parse_combine(const std::string& s) {
  if (s == "concat_project") return CombineMode::concat_project;
  if (s == "multiply") return CombineMode::multiply;
  throw ConfigError("unknown combine mode '" + s + "' (expected concat_project or multiply)");
}

std::int64_t FemBlockConfig::hidden() const {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(channels) * expansion));
}

void FemBlockConfig::validate() const {
  if (channels < 1) throw ConfigError("channels must be positive");
  if (heads < 1 || channels % heads != 0) {
    throw ConfigError("channels (" + std::to_string(channels) + ") must be divisible by heads (" +
                      std::to_string(heads) + ")");
  }
  if (!(expansion > 1.0)) throw ConfigError("expansion must exceed 1");
  if (blocks_per_band < 0) throw ConfigError("blocks_per_band must be nonnegative");
}

FemBlockConfig ModelConfig::fem() const {
  return {channels, heads, expansion, blocks_per_band, attention_l2norm};
}

void ModelConfig::validate() const {
  fem().validate();
  if (fam_splits < 1 || channels % fam_splits != 0) {
    throw ConfigError("channels must be divisible by fam_splits");
  }
  if (static_cast<std::int64_t>(fam_scales.size()) != fam_splits - 1) {
    throw ConfigError("fam_scales must hold fam_splits - 1 entries");
  }
  for (auto s : fam_scales) {
    if (s < 1) throw ConfigError("fam_scales entries must be positive");
  }
  if (fam_depth < 0) throw ConfigError("fam_depth must be nonnegative");
  if ((variant == Variant::S1 || variant == Variant::S3) && combine != CombineMode::concat_project) {
    throw ConfigError(std::string("variant ") + to_string(variant) +
                      " has no cross-band combination; combine must stay concat_project");
  }
  if (variant == Variant::S1 && fam_depth < 1) {
    throw ConfigError("variant S1 aggregates with fam blocks only; fam_depth must be >= 1");
  }
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.channels = 128;
  c.blocks_per_band = 4;
  return c;
}

std::string ModelConfig::to_json() const {
  json j;
  j["channels"] = channels;
  j["heads"] = heads;
  j["expansion"] = expansion;
  j["blocks_per_band"] = blocks_per_band;
  j["combine"] = to_string(combine);
  j["fam_splits"] = fam_splits;
  j["fam_scales"] = fam_scales;
  j["fam_depth"] = fam_depth;
  j["variant"] = to_string(variant);
  j["global_residual"] = global_residual;
  j["attention_l2norm"] = attention_l2norm;
  j["zero_init_residual"] = zero_init_residual;
  j["zero_init_head"] = zero_init_head;
  j["init_seed"] = init_seed;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "channels") c.channels = value.get<std::int64_t>();
      else if (key == "heads") c.heads = value.get<std::int64_t>();
      else if (key == "expansion") c.expansion = value.get<double>();
      else if (key == "blocks_per_band") c.blocks_per_band = value.get<std::int64_t>();
      else if (key == "combine") c.combine = parse_combine(value.get<std::string>());
      else if (key == "fam_splits") c.fam_splits = value.get<std::int64_t>();
      else if (key == "fam_scales") c.fam_scales = value.get<std::vector<std::int64_t>>();
      else if (key == "fam_depth") c.fam_depth = value.get<std::int64_t>();
      else if (key == "variant") c.variant = parse_variant(value.get<std::string>());
      else if (key == "global_residual") c.global_residual = value.get<bool>();
      else if (key == "attention_l2norm") c.attention_l2norm = value.get<bool>();
      else if (key == "zero_init_residual") c.zero_init_residual = value.get<bool>();
      else if (key == "zero_init_head") c.zero_init_head = value.get<bool>();
      else if (key == "init_seed") c.init_seed = value.get<std::uint64_t>();
      else throw ConfigError("model config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace afenet
