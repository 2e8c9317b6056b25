#pragma once

// Binary checkpoint format. All integers and floats are little-endian.
//
//   bytes  field
//   8      magic "CURIOCK1"
//   u32    format version (1)
//   u32    network count
//   per network:
//     u32  name length, then name bytes
//     u32  input_dim, u32 output_dim
//     u32  hidden layer count, then u32 width per hidden layer
//     u32  output activation (0 identity, 1 bounded)
//     f32  output scale per output (bounded only)
//     u64  parameter count P
//     f32  P parameters
//     u8   optimizer present flag; when 1: i64 step, f32 P first moments,
//          f32 P second moments
//   u64    learner step counter
//   u32    metadata length, then metadata bytes (UTF-8 JSON)

#include "curio/approximator.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace curio {

struct NetworkRecord {
  std::string name;
  MlpSpec spec;
  ParameterSet<float> params;
  std::optional<AdamState<float>> optimizer;
};

struct Checkpoint {
  std::vector<NetworkRecord> networks;
  std::uint64_t step = 0;
  std::string metadata;

  const NetworkRecord& network(const std::string& name) const {
    for (const auto& n : networks) {
      if (n.name == name) return n;
    }
    throw std::runtime_error("checkpoint: no network named '" + name + "'");
  }
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const std::string& s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  const std::vector<std::uint8_t>& data() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> data) : buf_(std::move(data)) {}
  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw CheckpointError("checkpoint: truncated file");
  }
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

inline constexpr char kMagic[8] = {'C', 'U', 'R', 'I', 'O', 'C', 'K', '1'};
inline constexpr std::uint32_t kVersion = 1;

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.bytes(std::string(detail::kMagic, 8));
  w.u32(detail::kVersion);
  w.u32(static_cast<std::uint32_t>(ck.networks.size()));
  for (const auto& n : ck.networks) {
    if (n.params.values.size() != n.spec.param_count()) {
      throw CheckpointError("checkpoint: parameter count does not match spec for " + n.name);
    }
    w.u32(static_cast<std::uint32_t>(n.name.size()));
    w.bytes(n.name);
    w.u32(static_cast<std::uint32_t>(n.spec.input_dim));
    w.u32(static_cast<std::uint32_t>(n.spec.output_dim));
    w.u32(static_cast<std::uint32_t>(n.spec.hidden_layers.size()));
    for (int h : n.spec.hidden_layers) w.u32(static_cast<std::uint32_t>(h));
    const bool bounded = n.spec.output_activation == OutputActivation::bounded;
    w.u32(bounded ? 1u : 0u);
    if (bounded) {
      for (double s : n.spec.output_scale) w.f32(static_cast<float>(s));
    }
    w.u64(n.params.values.size());
    for (float v : n.params.values) w.f32(v);
    w.u8(n.optimizer ? 1 : 0);
    if (n.optimizer) {
      w.i64(n.optimizer->t);
      for (float v : n.optimizer->m) w.f32(v);
      for (float v : n.optimizer->v) w.f32(v);
    }
  }
  w.u64(ck.step);
  w.u32(static_cast<std::uint32_t>(ck.metadata.size()));
  w.bytes(ck.metadata);
  return w.data();
}

inline Checkpoint decode_checkpoint(std::vector<std::uint8_t> bytes) {
  detail::ByteReader r(std::move(bytes));
  if (r.bytes(8) != std::string(detail::kMagic, 8)) throw CheckpointError("checkpoint: bad magic");
  if (r.u32() != detail::kVersion) throw CheckpointError("checkpoint: unsupported version");
  Checkpoint ck;
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    NetworkRecord n;
    n.name = r.bytes(r.u32());
    n.spec.input_dim = static_cast<int>(r.u32());
    n.spec.output_dim = static_cast<int>(r.u32());
    n.spec.hidden_layers.resize(r.u32());
    for (int& h : n.spec.hidden_layers) h = static_cast<int>(r.u32());
    const std::uint32_t act = r.u32();
    if (act > 1) throw CheckpointError("checkpoint: unknown output activation");
    n.spec.output_activation = act == 1 ? OutputActivation::bounded : OutputActivation::identity;
    if (act == 1) {
      n.spec.output_scale.resize(static_cast<std::size_t>(n.spec.output_dim));
      for (double& s : n.spec.output_scale) s = r.f32();
    }
    n.spec.validate();
    const std::uint64_t p = r.u64();
    if (p != n.spec.param_count()) throw CheckpointError("checkpoint: parameter count mismatch for " + n.name);
    n.params.values.resize(p);
    for (float& v : n.params.values) v = r.f32();
    if (r.u8() == 1) {
      AdamState<float> st(p);
      st.t = r.i64();
      for (float& v : st.m) v = r.f32();
      for (float& v : st.v) v = r.f32();
      n.optimizer = std::move(st);
    }
    ck.networks.push_back(std::move(n));
  }
  ck.step = r.u64();
  ck.metadata = r.bytes(r.u32());
  if (!r.done()) throw CheckpointError("checkpoint: trailing bytes");
  return ck;
}

// Writes through a temporary file and renames, so an interrupted write never
// replaces a valid checkpoint.
inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ck);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("checkpoint: cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(std::move(bytes));
}

}  // namespace curio
