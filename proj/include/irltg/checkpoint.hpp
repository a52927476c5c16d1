#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "irltg/errors.hpp"
#include "irltg/mat.hpp"
#include "irltg/oracle.hpp"
#include "irltg/policy_net.hpp"
#include "irltg/reward_net.hpp"

namespace irltg {

// On-disk layout: 8-byte magic, 8-byte little-endian length of the UTF-8
// JSON header, the header itself, then the row-major binary64 array payloads
// in header order (arrays sorted by name). Everything little-endian.
inline constexpr char kCheckpointMagic[8] = {'I', 'R', 'L', 'T', 'G', 'C', 'K', '1'};
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int version = kCheckpointVersion;
  std::string kind;
  nlohmann::json dims;
  ParamStore params;
};

namespace detail {

inline void put_u64_le(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline uint64_t get_u64_le(std::istream& in, const std::string& path) {
  char b[8];
  in.read(b, 8);
  if (in.gcount() != 8) throw IoError(IoError::Kind::truncated, path + ": unexpected end of file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline void put_f64_le(std::ostream& out, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64_le(out, v);
}

inline double get_f64_le(std::istream& in, const std::string& path) {
  const uint64_t v = get_u64_le(in, path);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const std::string& kind,
                            const nlohmann::json& dims, const ParamStore& params) {
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& [name, m] : params)  // ParamStore iterates sorted by name
    arrays.push_back({{"name", name}, {"rows", m.rows}, {"cols", m.cols}});
  const nlohmann::json header = {
      {"version", kCheckpointVersion}, {"kind", kind}, {"dims", dims}, {"arrays", arrays}};
  const std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::open_failed, "cannot open " + path + " for writing");
  out.write(kCheckpointMagic, 8);
  detail::put_u64_le(out, header_bytes.size());
  out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
  for (const auto& [name, m] : params) {
    (void)name;
    for (double d : m.data) detail::put_f64_le(out, d);
  }
  if (!out) throw IoError(IoError::Kind::open_failed, "write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::open_failed, "cannot open " + path);

  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8) throw IoError(IoError::Kind::truncated, path + ": shorter than the magic");
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw IoError(IoError::Kind::bad_magic, path + ": not a checkpoint file");

  const uint64_t header_len = detail::get_u64_le(in, path);
  if (header_len == 0 || header_len > (1ull << 30))
    throw IoError(IoError::Kind::malformed, path + ": implausible header length");
  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
  if (static_cast<uint64_t>(in.gcount()) != header_len)
    throw IoError(IoError::Kind::truncated, path + ": header cut short");

  nlohmann::json header = nlohmann::json::parse(header_bytes, nullptr, false);
  if (header.is_discarded() || !header.is_object())
    throw IoError(IoError::Kind::malformed, path + ": header is not valid JSON");
  const auto require = [&](const char* key) -> const nlohmann::json& {
    if (!header.contains(key))
      throw IoError(IoError::Kind::malformed, path + ": header missing '" + key + "'");
    return header.at(key);
  };
  const auto& jversion = require("version");
  if (!jversion.is_number_integer())
    throw IoError(IoError::Kind::malformed, path + ": version is not an integer");
  if (jversion.get<int>() != kCheckpointVersion)
    throw IoError(IoError::Kind::bad_version,
                  path + ": unsupported version " + jversion.dump());
  const auto& jkind = require("kind");
  const auto& jdims = require("dims");
  const auto& jarrays = require("arrays");
  if (!jkind.is_string() || !jdims.is_object() || !jarrays.is_array())
    throw IoError(IoError::Kind::malformed, path + ": header field has wrong type");

  Checkpoint ck;
  ck.kind = jkind.get<std::string>();
  ck.dims = jdims;
  std::string prev_name;
  for (const auto& ja : jarrays) {
    if (!ja.is_object() || !ja.contains("name") || !ja.contains("rows") || !ja.contains("cols") ||
        !ja.at("name").is_string() || !ja.at("rows").is_number_integer() ||
        !ja.at("cols").is_number_integer())
      throw IoError(IoError::Kind::malformed, path + ": bad array descriptor");
    const std::string name = ja.at("name").get<std::string>();
    const int rows = ja.at("rows").get<int>();
    const int cols = ja.at("cols").get<int>();
    if (rows < 1 || cols < 1)
      throw IoError(IoError::Kind::malformed, path + ": non-positive array shape for " + name);
    if (!prev_name.empty() && !(prev_name < name))
      throw IoError(IoError::Kind::malformed, path + ": arrays not sorted by name");
    prev_name = name;
    Mat m(rows, cols);
    for (double& d : m.data) {
      d = detail::get_f64_le(in, path);
      if (!std::isfinite(d))
        throw IoError(IoError::Kind::malformed, path + ": non-finite value in " + name);
    }
    ck.params.emplace(name, std::move(m));
  }
  if (in.peek() != std::ifstream::traits_type::eof())
    throw IoError(IoError::Kind::malformed, path + ": trailing bytes after payload");
  return ck;
}

namespace detail {

inline int dim_int(const nlohmann::json& dims, const char* key, const std::string& path) {
  if (!dims.contains(key) || !dims.at(key).is_number_integer())
    throw IoError(IoError::Kind::malformed, path + ": dims missing integer '" + key + "'");
  return dims.at(key).get<int>();
}

inline void check_kind(const Checkpoint& ck, const std::string& expect, const std::string& path) {
  if (ck.kind != expect)
    throw IoError(IoError::Kind::malformed,
                  path + ": kind '" + ck.kind + "' where '" + expect + "' was expected");
}

// The stored arrays must agree exactly with the shapes the dims imply.
template <typename Params>
inline void check_shapes(const Params& reference, const ParamStore& loaded,
                         const std::string& path) {
  const ParamStore expect = reference.to_store();
  for (const auto& [name, m] : expect) {
    const auto it = loaded.find(name);
    if (it == loaded.end())
      throw IoError(IoError::Kind::shape_mismatch, path + ": missing array " + name);
    if (it->second.rows != m.rows || it->second.cols != m.cols)
      throw IoError(IoError::Kind::shape_mismatch,
                    path + ": array " + name + " has shape " + std::to_string(it->second.rows) +
                        "x" + std::to_string(it->second.cols) + ", expected " +
                        std::to_string(m.rows) + "x" + std::to_string(m.cols));
  }
  if (loaded.size() != expect.size())
    throw IoError(IoError::Kind::shape_mismatch, path + ": unexpected extra arrays");
}

}  // namespace detail

inline void save_generator(const std::string& path, const GeneratorParams& p,
                           const std::string& kind = "generator") {
  const nlohmann::json dims = {{"v_total", p.v_total}, {"d_emb", p.d_emb}, {"d_hid", p.d_hid}};
  save_checkpoint(path, kind, dims, p.to_store());
}

inline GeneratorParams load_generator(const std::string& path,
                                      const std::string& expect_kind = "generator") {
  const Checkpoint ck = load_checkpoint(path);
  detail::check_kind(ck, expect_kind, path);
  const int v = detail::dim_int(ck.dims, "v_total", path);
  const int de = detail::dim_int(ck.dims, "d_emb", path);
  const int dh = detail::dim_int(ck.dims, "d_hid", path);
  if (v < kReservedTokens + 1 || de < 1 || dh < 1)
    throw IoError(IoError::Kind::malformed, path + ": implausible dims");
  detail::check_shapes(GeneratorParams(v, de, dh), ck.params, path);
  return GeneratorParams::from_store(v, de, dh, ck.params);
}

inline void save_oracle(const std::string& path, const OracleModel& o) {
  const nlohmann::json dims = {{"v_total", o.params.v_total},
                               {"d_emb", o.params.d_emb},
                               {"d_hid", o.params.d_hid},
                               {"seed", o.seed}};
  save_checkpoint(path, "oracle", dims, o.params.to_store());
}

inline OracleModel load_oracle(const std::string& path) {
  const Checkpoint ck = load_checkpoint(path);
  detail::check_kind(ck, "oracle", path);
  const int v = detail::dim_int(ck.dims, "v_total", path);
  const int de = detail::dim_int(ck.dims, "d_emb", path);
  const int dh = detail::dim_int(ck.dims, "d_hid", path);
  if (!ck.dims.contains("seed") || !ck.dims.at("seed").is_number_unsigned())
    throw IoError(IoError::Kind::malformed, path + ": dims missing unsigned 'seed'");
  if (v < kReservedTokens + 1 || de < 1 || dh < 1)
    throw IoError(IoError::Kind::malformed, path + ": implausible dims");
  detail::check_shapes(GeneratorParams(v, de, dh), ck.params, path);
  OracleModel o;
  o.params = GeneratorParams::from_store(v, de, dh, ck.params);
  o.seed = ck.dims.at("seed").get<uint64_t>();
  return o;
}

inline void save_reward(const std::string& path, const RewardParams& p) {
  const nlohmann::json dims = {{"v_total", p.v_total},
                               {"d_emb", p.d_emb},
                               {"d_hid", p.d_hid},
                               {"d_mlp", p.d_mlp},
                               {"keep_prob", p.keep_prob}};
  save_checkpoint(path, "reward", dims, p.to_store());
}

inline RewardParams load_reward(const std::string& path) {
  const Checkpoint ck = load_checkpoint(path);
  detail::check_kind(ck, "reward", path);
  const int v = detail::dim_int(ck.dims, "v_total", path);
  const int de = detail::dim_int(ck.dims, "d_emb", path);
  const int dh = detail::dim_int(ck.dims, "d_hid", path);
  const int dm = detail::dim_int(ck.dims, "d_mlp", path);
  if (!ck.dims.contains("keep_prob") || !ck.dims.at("keep_prob").is_number())
    throw IoError(IoError::Kind::malformed, path + ": dims missing number 'keep_prob'");
  const double keep = ck.dims.at("keep_prob").get<double>();
  if (v < kReservedTokens + 1 || de < 1 || dh < 1 || dm < 1 || !(keep > 0.0) || keep > 1.0)
    throw IoError(IoError::Kind::malformed, path + ": implausible dims");
  detail::check_shapes(RewardParams(v, de, dh, dm, keep), ck.params, path);
  return RewardParams::from_store(v, de, dh, dm, keep, ck.params);
}

}  // namespace irltg
