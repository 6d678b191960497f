#include "afenet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "afenet/error.hpp"

namespace afenet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'F', 'E', 'N', 'E', 'T', 'C', 'K'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out.insert(out.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  const std::uint8_t* take(std::size_t n) {
    if (n > size_ - pos_) throw CorruptCheckpoint("checkpoint truncated");
    const auto* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const CheckpointRecord& record) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put(record.version);
  w.put_string(record.config_json);
  w.put(record.state.step);
  w.put(record.state.seed);
  w.put(static_cast<std::uint32_t>(record.params.size()));
  for (const auto& [name, t] : record.params) {
    w.put_string(name);
    const Shape s = t.shape();
    for (std::int64_t d : {s.n, s.c, s.h, s.w}) w.put(d);
    w.put_bytes(t.data(), static_cast<std::size_t>(t.numel()) * sizeof(double));
  }
  w.put(crc_of(w.out.data(), w.out.size()));
  return std::move(w.out);
}

CheckpointRecord decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes.data(), bytes.size());
  if (std::memcmp(r.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptCheckpoint("not a checkpoint file (bad magic)");
  }
  CheckpointRecord rec;
  rec.version = r.get<std::uint32_t>();
  if (rec.version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(rec.version) +
                       " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < sizeof(kMagic) + 8) throw CorruptCheckpoint("checkpoint truncated");
  const std::size_t body = bytes.size() - sizeof(std::uint32_t);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  const std::uint32_t actual = crc_of(bytes.data(), body);
  if (stored != actual) {
    throw CorruptCheckpoint("checkpoint checksum mismatch (stored " + std::to_string(stored) +
                            ", computed " + std::to_string(actual) + ")");
  }
  rec.config_json = r.get_string();
  rec.state.step = r.get<std::uint64_t>();
  rec.state.seed = r.get<std::uint64_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.get_string();
    std::int64_t d[4];
    for (auto& v : d) v = r.get<std::int64_t>();
    for (auto v : d) {
      if (v < 0 || v > (std::int64_t{1} << 32)) throw CorruptCheckpoint("bad shape for " + name);
    }
    const Shape s{d[0], d[1], d[2], d[3]};
    const auto n = static_cast<std::size_t>(s.numel());
    if (n > r.remaining() / sizeof(double)) throw CorruptCheckpoint("checkpoint truncated in " + name);
    std::vector<double> values(n);
    std::memcpy(values.data(), r.take(n * sizeof(double)), n * sizeof(double));
    rec.params.emplace_back(std::move(name), Tensor(s, std::move(values)));
  }
  if (r.remaining() != sizeof(std::uint32_t)) throw CorruptCheckpoint("trailing bytes in checkpoint");
  return rec;
}

CheckpointRecord make_record(const Afenet& model, const TrainingState& state) {
  CheckpointRecord rec;
  rec.config_json = model.config().to_json();
  rec.state = state;
  for (const auto& [name, var] : model.params().entries()) rec.params.emplace_back(name, var.value());
  return rec;
}

Afenet model_from_record(const CheckpointRecord& record) {
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(record.config_json);
  } catch (const ConfigError& e) {
    throw CorruptCheckpoint(std::string("checkpoint config: ") + e.what());
  }
  Afenet model(cfg);
  auto& store = model.params();
  if (record.params.size() != store.size()) {
    throw CorruptCheckpoint("checkpoint holds " + std::to_string(record.params.size()) +
                            " parameters, config expects " + std::to_string(store.size()));
  }
  for (const auto& [name, t] : record.params) {
    if (!store.contains(name)) throw CorruptCheckpoint("unexpected parameter " + name);
    if (!(store.at(name).shape() == t.shape())) {
      throw CorruptCheckpoint("parameter " + name + " has shape " + t.shape().str() +
                              ", config expects " + store.at(name).shape().str());
    }
    store.assign(name, t);
  }
  return model;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

void save_checkpoint(const Afenet& model, const std::filesystem::path& path,
                     const TrainingState& state) {
  write_file_bytes(path, encode_checkpoint(make_record(model, state)));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto rec = decode_checkpoint(read_file_bytes(path));
  return {model_from_record(rec), rec.state};
}

}  // namespace afenet
