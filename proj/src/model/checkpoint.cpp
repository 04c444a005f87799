// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/model/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "adacred/errors.hpp"

namespace adacred {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'A', 'D', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put(std::vector<unsigned char>& buf, T v) {
  const auto* p = reinterpret_cast<const unsigned char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

struct Cursor {
  const std::vector<unsigned char>& buf;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (buf.size() - pos < n) throw FormatError(std::string("truncated checkpoint while reading ") + what, pos);
  }
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
};

}  // namespace

const NamedBlob& CheckpointData::find(const std::string& name) const {
  for (const NamedBlob& b : tensors) {
    if (b.name == name) return b;
  }
  throw LookupError("checkpoint has no tensor '" + name + "'");
}

bool CheckpointData::contains(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(), [&](const NamedBlob& b) { return b.name == name; });
}

std::vector<unsigned char> encode_checkpoint(const CheckpointData& data) {
  std::vector<unsigned char> buf(kMagic, kMagic + 4);
  put<std::uint16_t>(buf, kVersion);
  put<std::uint8_t>(buf, std::uint8_t(sizeof(Real)));
  put<std::uint32_t>(buf, std::uint32_t(data.header.size()));
  buf.insert(buf.end(), data.header.begin(), data.header.end());
  put<std::uint32_t>(buf, std::uint32_t(data.tensors.size()));
  for (const NamedBlob& b : data.tensors) {
    if (b.values.size() != shape_numel(b.shape)) throw DimensionError("checkpoint tensor '" + b.name + "' size mismatch");
    put<std::uint16_t>(buf, std::uint16_t(b.name.size()));
    buf.insert(buf.end(), b.name.begin(), b.name.end());
    put<std::uint8_t>(buf, std::uint8_t(b.shape.size()));
    for (std::size_t e : b.shape) put<std::uint32_t>(buf, std::uint32_t(e));
    const auto* p = reinterpret_cast<const unsigned char*>(b.values.data());
    buf.insert(buf.end(), p, p + b.values.size() * sizeof(Real));
  }
  put<std::uint32_t>(buf, std::uint32_t(crc32(0L, buf.data(), uInt(buf.size()))));
  return buf;
}

CheckpointData decode_checkpoint(const std::vector<unsigned char>& bytes) {
  Cursor c{bytes};
  c.need(4, "magic");
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw FormatError("bad magic, expected ADCK", 0);
  c.pos = 4;
  const std::size_t version_at = c.pos;
  if (c.get<std::uint16_t>("version") != kVersion) throw FormatError("unsupported checkpoint version", version_at);
  const std::size_t width_at = c.pos;
  if (c.get<std::uint8_t>("real width") != sizeof(Real)) {
    throw FormatError("checkpoint real width differs from this build", width_at);
  }
  CheckpointData data;
  const auto header_len = c.get<std::uint32_t>("header length");
  data.header = c.bytes(header_len, "header");
  const auto count = c.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedBlob b;
    const auto name_len = c.get<std::uint16_t>("tensor name length");
    b.name = c.bytes(name_len, "tensor name");
    const auto rank = c.get<std::uint8_t>("tensor rank");
    for (std::uint8_t k = 0; k < rank; ++k) b.shape.push_back(c.get<std::uint32_t>("tensor extent"));
    const std::size_t n = shape_numel(b.shape);
    c.need(n * sizeof(Real), "tensor values");
    b.values.resize(n);
    std::memcpy(b.values.data(), bytes.data() + c.pos, n * sizeof(Real));
    c.pos += n * sizeof(Real);
    data.tensors.push_back(std::move(b));
  }
  const std::size_t crc_at = c.pos;
  const auto expected = std::uint32_t(crc32(0L, bytes.data(), uInt(crc_at)));
  if (c.get<std::uint32_t>("checksum") != expected) throw FormatError("checkpoint CRC mismatch", crc_at);
  if (c.pos != bytes.size()) throw FormatError("trailing bytes after checkpoint", c.pos);
  return data;
}

void write_checkpoint(const CheckpointData& data, const std::string& path) {
  const auto bytes = encode_checkpoint(data);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + tmp + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw ConfigError("failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("cannot move checkpoint into '" + path + "'");
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("cannot open checkpoint '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void capture_model(const AdaCredModel& model, CheckpointData& data) {
  nlohmann::json header = nlohmann::json::parse(data.header);
  header["model"] = nlohmann::json::parse(model_config_to_json(model.config()));
  header["normalization"] = {{"mean", model.normalization().mean}, {"std", model.normalization().std}};
  header["model_rng"] = model.rng().serialize();
  data.header = header.dump();
  for (const NamedParam& p : model.store().params()) {
    data.tensors.push_back({"param/" + p.name, p.tensor.shape(), {p.tensor.data().begin(), p.tensor.data().end()}});
  }
}

void load_parameters(AdaCredModel& model, const CheckpointData& data) {
  for (const NamedParam& p : model.store().params()) {
    const NamedBlob& b = data.find("param/" + p.name);
    if (b.shape != p.tensor.shape()) {
      throw DimensionError("checkpoint tensor '" + p.name + "' has shape " + shape_str(b.shape) + ", model expects " +
                           shape_str(p.tensor.shape()));
    }
    Tensor t = p.tensor;
    std::copy(b.values.begin(), b.values.end(), t.mutable_data().begin());
  }
}

std::unique_ptr<AdaCredModel> restore_model(const CheckpointData& data) {
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(data.header);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what(), 0);
  }
  if (!header.contains("model")) throw FormatError("checkpoint header has no model config", 0);
  auto model = std::make_unique<AdaCredModel>(model_config_from_json(header["model"].dump()), 0);
  load_parameters(*model, data);
  if (header.contains("normalization")) {
    NormalizationStats stats;
    stats.mean = header["normalization"]["mean"].get<std::vector<float>>();
    stats.std = header["normalization"]["std"].get<std::vector<float>>();
    model->set_normalization(std::move(stats));
  }
  if (header.contains("model_rng")) model->rng().deserialize(header["model_rng"].get<std::string>());
  return model;
}

void save_model(const AdaCredModel& model, const std::string& path) {
  CheckpointData data;
  capture_model(model, data);
  write_checkpoint(data, path);
}

std::unique_ptr<AdaCredModel> load_model(const std::string& path) { return restore_model(read_checkpoint(path)); }

}  // namespace adacred
