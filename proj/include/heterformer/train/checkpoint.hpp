#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "heterformer/model/config.hpp"
#include "heterformer/model/params.hpp"
#include "heterformer/train/adam.hpp"

namespace heterformer::train {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'H', 'F', 'M', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Blob {
  std::string name;
  numcore::Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  std::uint64_t config_digest = 0;
  std::uint64_t epoch = 0;
  double best_dev_prec = 0.0;
  std::uint64_t adam_step = 0;
  std::vector<Blob> params;
  std::vector<Blob> first_moments;
  std::vector<Blob> second_moments;

  static Checkpoint capture(const model::ModelParams& p, const graph::NodeTypeSchema& schema,
                            const model::HeterformerConfig& cfg, const OptimizerState* opt = nullptr) {
    Checkpoint c;
    c.config_digest = model::structure_digest(cfg);
    for (const auto& np : p.named_parameters(schema)) {
      c.params.push_back({np.name, np.tensor.shape(), np.tensor.values()});
    }
    if (opt) {
      c.adam_step = opt->step;
      for (std::size_t i = 0; i < opt->names.size(); ++i) {
        const auto& shape = c.params.at(i).shape;
        c.first_moments.push_back({opt->names[i], shape, opt->m[i]});
        c.second_moments.push_back({opt->names[i], shape, opt->v[i]});
      }
    }
    return c;
  }

  /// Copies the stored values into `p`. Every name and shape is checked
  /// before anything is written.
  void restore(model::ModelParams& p, const graph::NodeTypeSchema& schema) const {
    auto targets = p.named_parameters(schema);
    if (targets.size() != params.size()) {
      throw ContractError("checkpoint holds " + std::to_string(params.size()) + " parameters, model expects " +
                          std::to_string(targets.size()));
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i].name != params[i].name || targets[i].tensor.shape() != params[i].shape) {
        throw ContractError("checkpoint parameter '" + params[i].name + "' " + numcore::shape_string(params[i].shape) +
                            " does not fit '" + targets[i].name + "' " +
                            numcore::shape_string(targets[i].tensor.shape()));
      }
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      auto dst = targets[i].tensor.mutable_data();
      std::copy(params[i].values.begin(), params[i].values.end(), dst.begin());
    }
  }

  OptimizerState optimizer_state() const {
    OptimizerState s;
    s.step = adam_step;
    for (std::size_t i = 0; i < first_moments.size(); ++i) {
      s.names.push_back(first_moments[i].name);
      s.m.push_back(first_moments[i].values);
      s.v.push_back(second_moments[i].values);
    }
    return s;
  }
};

namespace detail {

class Writer {
 public:
  template <class T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  void put_blobs(const std::vector<Blob>& blobs) {
    put(static_cast<std::uint64_t>(blobs.size()));
    for (const auto& b : blobs) {
      put_string(b.name);
      put(static_cast<std::uint32_t>(b.shape.size()));
      for (auto e : b.shape) put(static_cast<std::uint64_t>(e));
      put(static_cast<std::uint64_t>(b.values.size()));
      put_bytes(reinterpret_cast<const char*>(b.values.data()), b.values.size() * sizeof(double));
    }
  }
  std::vector<char>& bytes() { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<char>& bytes, std::size_t end, std::string path)
      : bytes_(bytes), end_(end), path_(std::move(path)) {}

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<Blob> get_blobs(const char* what) {
    const auto count = get<std::uint64_t>(what);
    if (count > end_) fail(std::string("implausible ") + what + " count");
    std::vector<Blob> out;
    for (std::uint64_t i = 0; i < count; ++i) {
      Blob b;
      b.name = get_string("parameter name");
      const auto rank = get<std::uint32_t>("parameter rank");
      if (rank > 2) fail("parameter '" + b.name + "' has rank " + std::to_string(rank));
      std::size_t expected = 1;
      for (std::uint32_t r = 0; r < rank; ++r) {
        b.shape.push_back(static_cast<std::size_t>(get<std::uint64_t>("parameter extent")));
        expected *= b.shape.back();
      }
      const auto n = get<std::uint64_t>("value count");
      if (n != expected) fail("parameter '" + b.name + "' value count disagrees with its shape");
      need(n * sizeof(double), "parameter values");
      b.values.resize(n);
      std::memcpy(b.values.data(), bytes_.data() + pos_, n * sizeof(double));
      pos_ += n * sizeof(double);
      out.push_back(std::move(b));
    }
    return out;
  }
  std::size_t position() const { return pos_; }
  [[noreturn]] void fail(const std::string& why) const { throw IoError(path_ + ": corrupt checkpoint: " + why); }

 private:
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > end_) fail(std::string("truncated while reading ") + what);
  }
  const std::vector<char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string path_;
};

inline std::uint64_t checksum(const char* p, std::size_t n) {
  return model::fnv1a(std::string_view(p, n));
}

}  // namespace detail

inline std::vector<char> serialize_checkpoint(const Checkpoint& c) {
  detail::Writer w;
  w.put_bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put(kCheckpointVersion);
  w.put(c.config_digest);
  w.put(c.epoch);
  w.put(c.best_dev_prec);
  w.put(c.adam_step);
  w.put_blobs(c.params);
  w.put_blobs(c.first_moments);
  w.put_blobs(c.second_moments);
  const auto sum = detail::checksum(w.bytes().data(), w.bytes().size());
  w.put(sum);
  return std::move(w.bytes());
}

/// Digest of the serialized bytes; equal digests mean byte-identical files.
inline std::uint64_t checkpoint_digest(const Checkpoint& c) {
  const auto bytes = serialize_checkpoint(c);
  return detail::checksum(bytes.data(), bytes.size());
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  const auto bytes = serialize_checkpoint(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to checkpoint '" + path + "'");
}

/// Reads and validates a whole checkpoint before returning anything.
/// `expected_digest`, when given, is compared with the stored config digest
/// and `on_mismatch` is called with a warning on disagreement.
inline Checkpoint load_checkpoint(const std::string& path, std::optional<std::uint64_t> expected_digest = std::nullopt,
                                  const std::function<void(const std::string&)>& on_mismatch = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kCheckpointMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
    throw IoError(path + ": corrupt checkpoint: file too short");
  }
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw IoError(path + ": not a checkpoint (bad magic bytes)");
  }
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof(kCheckpointMagic), sizeof(version));
  if (version != kCheckpointVersion) {
    throw IoError(path + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, bytes.data() + body, sizeof(stored_sum));
  detail::Reader r(bytes, body, path);
  r.get<std::uint64_t>("magic");
  r.get<std::uint32_t>("version");
  Checkpoint c;
  c.config_digest = r.get<std::uint64_t>("config digest");
  c.epoch = r.get<std::uint64_t>("epoch");
  c.best_dev_prec = r.get<double>("best dev PREC");
  c.adam_step = r.get<std::uint64_t>("optimizer step");
  c.params = r.get_blobs("parameter");
  c.first_moments = r.get_blobs("first moment");
  c.second_moments = r.get_blobs("second moment");
  if (r.position() != body) r.fail("trailing bytes before checksum");
  if (detail::checksum(bytes.data(), body) != stored_sum) r.fail("checksum mismatch");
  if (c.first_moments.size() != c.second_moments.size()) r.fail("moment tables differ in length");
  if (expected_digest && *expected_digest != c.config_digest && on_mismatch) {
    on_mismatch("warning: checkpoint '" + path + "' was written for a different model configuration");
  }
  return c;
}

}  // namespace heterformer::train
