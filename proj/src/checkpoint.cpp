#include "selfattn/checkpoint.hpp"

#include "selfattn/config.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace selfattn {

namespace {

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void integer(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void text(const std::string& s) {
    integer<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f32(float v) { integer<std::uint32_t>(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - at_ < n) throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
  }
  template <typename T>
  T integer(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in_[at_ + i]) << (8 * i));
    at_ += sizeof(T);
    return v;
  }
  std::string text(const char* what) {
    const auto n = integer<std::uint32_t>(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + at_), n);
    at_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(integer<std::uint32_t>("tensor payload")); }
  std::size_t remaining() const { return in_.size() - at_; }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(at_, n);
    at_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t at_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint) {
  const auto& model = checkpoint.model;
  Writer w;
  w.bytes(checkpoint_magic, sizeof checkpoint_magic);
  w.integer<std::uint32_t>(checkpoint_version);
  w.text(RunConfig::from(model.config(), checkpoint.train).to_text());

  const auto& tokens = checkpoint.vocab.tokens();
  w.integer<std::uint32_t>(static_cast<std::uint32_t>(tokens.size()));
  for (const auto& t : tokens) w.text(t);

  w.integer<std::uint32_t>(static_cast<std::uint32_t>(model.size()));
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& spec = model.specs()[i];
    w.text(spec.name);
    w.integer<std::uint32_t>(static_cast<std::uint32_t>(spec.shape.size()));
    for (const Index d : spec.shape) w.integer<std::uint64_t>(static_cast<std::uint64_t>(d));
    w.integer<std::uint8_t>(1);
  }
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& t = model.param(i);
    for (Index k = 0; k < t.size(); ++k) w.f32(t[k]);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(sizeof checkpoint_magic, "magic");
  if (std::memcmp(magic.data(), checkpoint_magic, sizeof checkpoint_magic) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const auto version = r.integer<std::uint32_t>("version");
  if (version != checkpoint_version) {
    throw CheckpointError("checkpoint format version mismatch: file has " + std::to_string(version) +
                          ", reader expects " + std::to_string(checkpoint_version));
  }
  const auto snapshot = RunConfig::parse(r.text("config snapshot"), "<checkpoint config>");
  const ModelConfig config = snapshot.model_config();
  const TrainConfig train = snapshot.train_config();

  const auto vocab_count = r.integer<std::uint32_t>("vocabulary");
  if (vocab_count < 2) throw CheckpointError("checkpoint vocabulary lacks reserved entries");
  std::vector<std::string> tokens;
  for (std::uint32_t i = 0; i < vocab_count; ++i) {
    auto t = r.text("vocabulary");
    if (i >= 2) tokens.push_back(std::move(t));
  }
  Vocab vocab(tokens);
  if (static_cast<Index>(vocab.size()) != config.vocab_size) {
    throw CheckpointError("checkpoint vocabulary has " + std::to_string(vocab.size()) + " entries, config says " +
                          std::to_string(config.vocab_size));
  }

  Model<float> model(config);
  const auto count = r.integer<std::uint32_t>("manifest");
  if (count != model.size()) {
    throw CheckpointError("shape mismatch: manifest lists " + std::to_string(count) + " tensors, model has " +
                          std::to_string(model.size()));
  }
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& spec = model.specs()[i];
    const auto name = r.text("manifest");
    const auto rank = r.integer<std::uint32_t>("manifest");
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<Index>(r.integer<std::uint64_t>("manifest")));
    const auto dtype = r.integer<std::uint8_t>("manifest");
    if (name != spec.name || shape != spec.shape) {
      throw CheckpointError("shape mismatch: manifest entry " + name + " " + shape_string(shape) + " but model expects " +
                            spec.name + " " + shape_string(spec.shape));
    }
    if (dtype != 1) throw CheckpointError("unsupported dtype in tensor " + name);
  }
  std::size_t payload = 0;
  for (std::size_t i = 0; i < model.size(); ++i) payload += static_cast<std::size_t>(model.param(i).size()) * 4;
  if (r.remaining() < payload) {
    throw CheckpointError("truncated payload: expected " + std::to_string(payload) + " bytes, found " +
                          std::to_string(r.remaining()));
  }
  if (r.remaining() > payload) throw CheckpointError("trailing bytes after checkpoint payload");
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto& t = model.param(i);
    for (Index k = 0; k < t.size(); ++k) t[k] = r.f32();
  }
  return {std::move(model), train, std::move(vocab)};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(bytes);
}

void require_compatible(const Checkpoint& checkpoint, ModelConfig expected) {
  if (expected.vocab_size == 0) expected.vocab_size = checkpoint.model.config().vocab_size;
  const auto want = parameter_specs(expected);
  const auto& have = checkpoint.model.specs();
  if (want.size() != have.size()) {
    throw CheckpointError("shape mismatch: checkpoint has " + std::to_string(have.size()) +
                          " tensors, config implies " + std::to_string(want.size()));
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].name != have[i].name || want[i].shape != have[i].shape) {
      throw CheckpointError("shape mismatch: checkpoint " + have[i].name + " " + shape_string(have[i].shape) +
                            " vs config " + want[i].name + " " + shape_string(want[i].shape));
    }
  }
}

}  // namespace selfattn
