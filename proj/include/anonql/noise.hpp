#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anonql/value.hpp"

namespace anonql {

/// First 8 bytes of SHA-256 of the input, big-endian.
uint64_t hash64(std::string_view bytes);

/// Joins already-canonical component strings with the 0x1F unit separator.
std::string serialize_components(std::span<const std::string> parts);

/// Seed of a noise layer before salting: hash64 of the serialized parts
/// (table name, usually a column name, then the per-kind components).
uint64_t component_seed(std::span<const std::string> parts);

/// Layer static seed: component hash XOR hash64(salt).
uint64_t static_seed(std::span<const std::string> parts, std::string_view salt);

uint64_t uid_hash(const Value& uid);

/// XOR fold over per-uid hashes; order-free, 0 for the empty set.
uint64_t uid_term(std::span<const uint64_t> uid_hashes);

/// Deterministic standard normal draw: two uniforms from
/// SHA-256(seed_be8 || tag || counter_be4), counter 0 and 1, each mapped to
/// (0,1) via (n + 0.5) / 2^64, then Box-Muller (first variate).
double gauss(uint64_t seed, std::string_view tag);

/// Sticky threshold round(4 + 0.5 * gauss), never below the hard minimum 2.
int noisy_threshold(uint64_t seed, std::string_view tag);

/// Unrounded 4 + 0.5 * gauss; the low-count filter compares against this.
double threshold_raw(uint64_t seed, std::string_view tag);

/// Bucket suppression decision. The seed depends only on the salt and the
/// bucket's uid set, never on the query, so the same user group is suppressed
/// or kept consistently everywhere. Fewer than 2 distinct users always
/// suppresses.
bool low_count_passes(size_t distinct_uid_count, uint64_t uid_term_value, std::string_view salt);

enum class LayerOrigin {
  Condition,  // explicit WHERE/HAVING condition
  Wildcard,   // one LIKE wildcard descriptor
  StringFn,   // extra layer for a character-removing string function
  CaseFn,     // extra layer for upper/lower in a non-floating condition
  InElement,  // per-element dynamic layer of an IN list
  InClause,   // per-clause static layer of an IN list
  Implicit,   // selected/grouped column equality
  Table,      // the lone dynamic layer of a condition-free query
};

/// One noise layer, resolved against a concrete bucket. parts holds the full
/// canonical component list (starting with the table name); emit flags say
/// which of the two draws this layer contributes.
struct NoiseLayer {
  std::vector<std::string> parts;
  uint64_t static_seed = 0;
  uint64_t dynamic_seed = 0;
  bool emit_static = true;
  bool emit_dynamic = true;
  LayerOrigin origin = LayerOrigin::Condition;
  int condition_index = -1;  // which query condition produced it, -1 for implicit/table
};

struct LayerSet {
  std::vector<NoiseLayer> layers;
  uint64_t uid_term_value = 0;

  /// Number of noise draws: static and dynamic count separately.
  size_t draw_count() const;
  /// XOR of all layer static seeds and the uid term; thresholds draw from it.
  uint64_t combined_seed() const;
};

/// Sum of one gauss draw per emitted seed; standard deviation sqrt(L) by
/// construction. Toggles drop whole draw classes (attack harness only).
double baseline_noise(const LayerSet& layers, std::string_view tag, bool use_static = true,
                      bool use_dynamic = true);

}  // namespace anonql
