// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/dataset/dataset_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adacred/errors.hpp"

namespace adacred {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'C', 'R'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 1;

template <typename T>
T byteswap_any(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  std::reverse(b, b + sizeof(T));
  std::memcpy(&v, b, sizeof(T));
  return v;
}

class Writer {
 public:
  explicit Writer(bool big_endian) : swap_(big_endian != (std::endian::native == std::endian::big)) {}

  template <typename T>
  void put(T v) {
    if (swap_) v = byteswap_any(v);
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    if (s.size() > 0xFFFF) throw ParameterError("metadata string too long");
    put<std::uint16_t>(std::uint16_t(s.size()));
    put_bytes(s.data(), s.size());
  }
  std::size_t size() const { return buf_.size(); }
  std::uint32_t crc_from(std::size_t start) const {
    return std::uint32_t(crc32(0L, buf_.data() + start, uInt(buf_.size() - start)));
  }
  std::vector<unsigned char> take() { return std::move(buf_); }

 private:
  bool swap_;
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& buf) : buf_(buf) {}

  void set_big_endian(bool big) { swap_ = big != (std::endian::native == std::endian::big); }
  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (buf_.size() - pos_ < n) {
      throw FormatError(std::string("truncated file while reading ") + what, pos_);
    }
  }
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return swap_ ? byteswap_any(v) : v;
  }
  std::string get_string(const char* what) {
    const auto n = get<std::uint16_t>(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint32_t crc_from(std::size_t start) const {
    return std::uint32_t(crc32(0L, buf_.data() + start, uInt(pos_ - start)));
  }

 private:
  const std::vector<unsigned char>& buf_;
  std::size_t pos_ = 0;
  bool swap_ = false;
};

}  // namespace

void OfflineDataset::set_imitation() {
  imitation = true;
  for (Trajectory& t : trajectories) {
    std::fill(t.rewards.begin(), t.rewards.end(), 0.0f);
    std::fill(t.returns_to_go.begin(), t.returns_to_go.end(), 0.0f);
  }
}

void OfflineDataset::refresh_returns() {
  for (Trajectory& t : trajectories) {
    if (imitation) {
      std::fill(t.rewards.begin(), t.rewards.end(), 0.0f);
      t.returns_to_go.assign(t.rewards.size(), 0.0f);
    } else {
      t.returns_to_go = compute_return_to_go(t.rewards, gamma);
    }
  }
}

double OfflineDataset::max_return() const {
  double best = 0.0;
  bool any = false;
  for (const Trajectory& t : trajectories) {
    const double r = t.returns_to_go.empty() ? 0.0 : t.returns_to_go.front();
    best = any ? std::max(best, r) : r;
    any = true;
  }
  return best;
}

double OfflineDataset::mean_return() const {
  if (trajectories.empty()) return 0.0;
  double total = 0.0;
  for (const Trajectory& t : trajectories) total += t.total_return();
  return total / double(trajectories.size());
}

NormalizationStats compute_normalization(const std::vector<Trajectory>& trajectories) {
  NormalizationStats stats;
  if (trajectories.empty()) return stats;
  const Shape& shape = trajectories.front().obs_shape;
  const std::size_t channels = shape[0];
  const std::size_t per_channel = shape_numel(shape) / channels;
  std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
  double count = 0.0;
  for (const Trajectory& t : trajectories) {
    if (t.obs_shape != shape) throw DimensionError("trajectories disagree on observation shape");
    const std::size_t frames = t.observations.size() / shape_numel(shape);
    for (std::size_t f = 0; f < frames; ++f) {
      const float* base = t.observations.data() + f * shape_numel(shape);
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t k = 0; k < per_channel; ++k) {
          const double v = base[c * per_channel + k];
          sum[c] += v;
          sq[c] += v * v;
        }
      }
    }
    count += double(frames * per_channel);
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const double mu = sum[c] / count;
    const double var = std::max(0.0, sq[c] / count - mu * mu);
    stats.mean.push_back(float(mu));
    stats.std.push_back(float(std::max(std::sqrt(var), 1e-6)));
  }
  return stats;
}

std::vector<unsigned char> encode_dataset(const OfflineDataset& ds, bool big_endian) {
  Writer w(big_endian);
  w.put_bytes(kMagic, 4);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint8_t>(big_endian ? 1 : 0);
  w.put<std::uint32_t>(std::uint32_t(ds.trajectories.size()));
  w.put<std::uint8_t>(ds.imitation ? 1 : 0);
  w.put<float>(float(ds.gamma));
  for (const Trajectory& t : ds.trajectories) {
    t.validate();
    const std::size_t start = w.size();
    w.put<std::uint32_t>(std::uint32_t(t.length()));
    w.put<std::uint8_t>(kDtypeF32);
    w.put<std::uint8_t>(std::uint8_t(t.obs_shape.size()));
    for (std::size_t extent : t.obs_shape) w.put<std::uint32_t>(std::uint32_t(extent));
    w.put_string(t.meta.env_id);
    w.put<std::uint64_t>(t.meta.seed);
    w.put_string(t.meta.policy);
    w.put<std::int32_t>(t.meta.key_step);
    w.put<std::int32_t>(t.meta.door_step);
    for (float v : t.observations) w.put<float>(v);
    for (std::uint16_t a : t.actions) w.put<std::uint16_t>(a);
    for (float r : t.rewards) w.put<float>(ds.imitation ? 0.0f : r);
    w.put<std::uint32_t>(w.crc_from(start));
  }
  return w.take();
}

OfflineDataset decode_dataset(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw FormatError("bad magic, expected ADCR", 0);
  r.get<std::uint32_t>("magic");
  // The version field is read after the endianness flag is known.
  const std::size_t version_at = r.offset();
  r.need(3, "header");
  const std::uint8_t endian = bytes[version_at + 2];
  if (endian > 1) throw FormatError("unknown endianness flag " + std::to_string(endian), version_at + 2);
  r.set_big_endian(endian == 1);
  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion) throw FormatError("unsupported version " + std::to_string(version), version_at);
  r.get<std::uint8_t>("endianness");
  const auto count = r.get<std::uint32_t>("trajectory count");
  OfflineDataset ds;
  const std::size_t flags_at = r.offset();
  const auto flags = r.get<std::uint8_t>("flags");
  if (flags > 1) throw FormatError("unknown flag bits", flags_at);
  ds.imitation = flags & 1;
  const std::size_t gamma_at = r.offset();
  ds.gamma = r.get<float>("gamma");
  if (!(ds.gamma >= 0.0 && ds.gamma <= 1.0)) throw FormatError("discount outside [0, 1]", gamma_at);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = r.offset();
    Trajectory t;
    const auto T = r.get<std::uint32_t>("trajectory length");
    const std::size_t dtype_at = r.offset();
    if (r.get<std::uint8_t>("dtype") != kDtypeF32) throw FormatError("unsupported observation dtype", dtype_at);
    const std::size_t rank_at = r.offset();
    const auto rank = r.get<std::uint8_t>("rank");
    if (rank == 0) throw FormatError("observation rank must be positive", rank_at);
    for (std::uint8_t k = 0; k < rank; ++k) {
      const std::size_t at = r.offset();
      const auto extent = r.get<std::uint32_t>("observation extent");
      if (extent == 0) throw FormatError("zero observation extent", at);
      t.obs_shape.push_back(extent);
    }
    t.meta.env_id = r.get_string("env id");
    t.meta.seed = r.get<std::uint64_t>("seed");
    t.meta.policy = r.get_string("policy tag");
    t.meta.key_step = r.get<std::int32_t>("key step");
    t.meta.door_step = r.get<std::int32_t>("door step");
    const std::size_t frame_values = (std::size_t(T) + 1) * shape_numel(t.obs_shape);
    r.need(frame_values * 4 + std::size_t(T) * 6, "trajectory payload");
    t.observations.resize(frame_values);
    for (float& v : t.observations) v = r.get<float>("frames");
    t.actions.resize(T);
    for (auto& a : t.actions) a = r.get<std::uint16_t>("actions");
    t.rewards.resize(T);
    for (float& v : t.rewards) v = r.get<float>("rewards");
    const std::uint32_t expected = r.crc_from(start);
    const std::size_t crc_at = r.offset();
    if (r.get<std::uint32_t>("checksum") != expected) {
      throw FormatError("CRC mismatch in trajectory " + std::to_string(i), crc_at);
    }
    ds.trajectories.push_back(std::move(t));
  }
  if (r.offset() != bytes.size()) throw FormatError("trailing bytes after last trajectory", r.offset());
  ds.refresh_returns();
  ds.norm = compute_normalization(ds.trajectories);
  return ds;
}

void write_dataset(const OfflineDataset& ds, const std::string& path, bool big_endian) {
  const std::vector<unsigned char> bytes = encode_dataset(ds, big_endian);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

OfflineDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("cannot open dataset '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_dataset(bytes);
}

}  // namespace adacred
