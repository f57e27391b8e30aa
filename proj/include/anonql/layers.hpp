#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "anonql/noise.hpp"
#include "anonql/validate.hpp"

namespace anonql {

/// Floated value summaries feeding adjusted seeds. The executor implements
/// this per bucket; tests may stub it.
class FloatProvider {
 public:
  virtual ~FloatProvider() = default;

  /// Distinct canonical values of a base-table column over the bucket's
  /// contributing rows (or per-user rows for aggregated relations), ordered by
  /// value comparison with NULL (":null") first.
  virtual std::vector<std::string> column_floats(int base_column) const = 0;

  /// Distinct canonical outputs of the condition's wrapped left-hand
  /// expression over the same rows (IN clauses under character-removing
  /// wrappers), same ordering contract.
  virtual std::vector<std::string> expr_floats(const AnalyzedCondition& cond) const = 0;
};

/// Noise layers contributed by one explicit condition against one bucket.
/// Seeds are left unresolved; assemble() fills them in.
std::vector<NoiseLayer> condition_layers(const std::string& table, const AnalyzedCondition& cond,
                                         int condition_index, const FloatProvider& floats);

/// Noise layers contributed by one selected/grouped expression for the bucket
/// keyed by bucket_value.
std::vector<NoiseLayer> implicit_layers(const std::string& table, const ImplicitSpec& spec,
                                        const Value& bucket_value, const FloatProvider& floats);

/// The lone dynamic-only layer of a query contributing no other layers.
NoiseLayer table_layer(const std::string& table);

/// Resolves every layer's seeds: static from the component parts and the salt,
/// dynamic by folding in the bucket's uid term.
LayerSet assemble(std::vector<NoiseLayer> layers, uint64_t uid_term_value, std::string_view salt);

}  // namespace anonql
