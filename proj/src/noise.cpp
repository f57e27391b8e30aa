#include "anonql/noise.hpp"

#include <cmath>
#include <numbers>

#include <openssl/evp.h>

namespace anonql {

static uint64_t first8_be(const unsigned char* digest) {
  uint64_t v = 0;
  for (int i = 0; i < 8; i++) v = (v << 8) | digest[i];
  return v;
}

uint64_t hash64(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  return first8_be(digest);
}

std::string serialize_components(std::span<const std::string> parts) {
  std::string out;
  for (size_t i = 0; i < parts.size(); i++) {
    if (i) out.push_back('\x1f');
    out += parts[i];
  }
  return out;
}

uint64_t component_seed(std::span<const std::string> parts) {
  return hash64(serialize_components(parts));
}

uint64_t static_seed(std::span<const std::string> parts, std::string_view salt) {
  return component_seed(parts) ^ hash64(salt);
}

uint64_t uid_hash(const Value& uid) { return hash64(canonical(uid)); }

uint64_t uid_term(std::span<const uint64_t> uid_hashes) {
  uint64_t term = 0;
  for (uint64_t h : uid_hashes) term ^= h;
  return term;
}

static void put_be64(std::string& out, uint64_t v) {
  for (int i = 7; i >= 0; i--) out.push_back(static_cast<char>((v >> (i * 8)) & 0xff));
}

static void put_be32(std::string& out, uint32_t v) {
  for (int i = 3; i >= 0; i--) out.push_back(static_cast<char>((v >> (i * 8)) & 0xff));
}

static double uniform_from(uint64_t seed, std::string_view tag, uint32_t counter) {
  std::string bytes;
  bytes.reserve(12 + tag.size());
  put_be64(bytes, seed);
  bytes.append(tag);
  put_be32(bytes, counter);
  uint64_t n = hash64(bytes);
  // (n + 0.5) / 2^64 is strictly inside (0,1), so the log below is safe.
  return (static_cast<double>(n) + 0.5) * 0x1p-64;
}

double gauss(uint64_t seed, std::string_view tag) {
  double u1 = uniform_from(seed, tag, 0);
  double u2 = uniform_from(seed, tag, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double threshold_raw(uint64_t seed, std::string_view tag) {
  return 4.0 + 0.5 * gauss(seed, tag);
}

int noisy_threshold(uint64_t seed, std::string_view tag) {
  int t = static_cast<int>(std::llround(threshold_raw(seed, tag)));
  return t < 2 ? 2 : t;
}

bool low_count_passes(size_t distinct_uid_count, uint64_t uid_term_value, std::string_view salt) {
  if (distinct_uid_count < 2) return false;
  uint64_t seed = hash64(salt) ^ uid_term_value;
  return static_cast<double>(distinct_uid_count) >= threshold_raw(seed, "lcf");
}

size_t LayerSet::draw_count() const {
  size_t n = 0;
  for (const NoiseLayer& layer : layers) n += (layer.emit_static ? 1 : 0) + (layer.emit_dynamic ? 1 : 0);
  return n;
}

uint64_t LayerSet::combined_seed() const {
  uint64_t seed = uid_term_value;
  for (const NoiseLayer& layer : layers) seed ^= layer.static_seed;
  return seed;
}

double baseline_noise(const LayerSet& layers, std::string_view tag, bool use_static,
                      bool use_dynamic) {
  double sum = 0;
  for (const NoiseLayer& layer : layers.layers) {
    if (layer.emit_static && use_static) sum += gauss(layer.static_seed, tag);
    if (layer.emit_dynamic && use_dynamic) sum += gauss(layer.dynamic_seed, tag);
  }
  return sum;
}

}  // namespace anonql
