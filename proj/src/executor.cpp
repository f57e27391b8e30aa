#include "anonql/executor.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "anonql/aggregate.hpp"
#include "anonql/condition.hpp"
#include "anonql/error.hpp"
#include "anonql/eval.hpp"
#include "anonql/layers.hpp"
#include "anonql/noise.hpp"
#include "anonql/parser.hpp"

namespace anonql {
namespace {

constexpr size_t kReplicationCap = 1'000'000;

// ---------------------------------------------------------------------------
// True (pre-noise) aggregates, used for per-user subquery outputs and for
// outer-HAVING tests against a bucket's real values.
// ---------------------------------------------------------------------------

Value true_aggregate(const AggregateCall& agg, const std::vector<const Row*>& rows) {
  if (agg.star) return Value{static_cast<int64_t>(rows.size())};
  std::vector<Value> vals;
  for (const Row* r : rows) {
    Value v = evaluate(*agg.arg, r);
    if (!is_null(v)) vals.push_back(std::move(v));
  }
  if (agg.distinct) {
    std::set<std::string> seen;
    std::vector<Value> deduped;
    for (Value& v : vals) {
      if (seen.insert(canonical(v)).second) deduped.push_back(std::move(v));
    }
    vals = std::move(deduped);
  }
  if (agg.fn == "count") return Value{static_cast<int64_t>(vals.size())};
  if (vals.empty()) return Value{};
  if (agg.fn == "min" || agg.fn == "max") {
    const Value* best = &vals[0];
    for (const Value& v : vals) {
      int c = compare(v, *best);
      if (agg.fn == "max" ? c > 0 : c < 0) best = &v;
    }
    return *best;
  }
  if (agg.fn == "sum" && agg.result_type == ValueType::Integer) {
    int64_t s = 0;
    for (const Value& v : vals) s += *as_integer(v);
    return Value{s};
  }
  std::vector<double> nums;
  nums.reserve(vals.size());
  for (const Value& v : vals) nums.push_back(*as_real(v));
  double n = static_cast<double>(nums.size());
  double sum = 0;
  for (double x : nums) sum += x;
  if (agg.fn == "sum") return Value{sum};
  if (agg.fn == "avg") return Value{sum / n};
  if (agg.fn == "median") {
    std::sort(nums.begin(), nums.end());
    size_t mid = nums.size() / 2;
    if (nums.size() % 2 == 1) return Value{nums[mid]};
    return Value{(nums[mid - 1] + nums[mid]) / 2};
  }
  if (agg.fn == "stddev") {
    if (nums.size() < 2) return Value{};
    double mean = sum / n;
    double acc = 0;
    for (double x : nums) acc += (x - mean) * (x - mean);
    return Value{std::sqrt(acc / (n - 1))};
  }
  return Value{};
}

// ---------------------------------------------------------------------------
// Condition evaluation (three-valued: NULL never matches, except IS NULL)
// ---------------------------------------------------------------------------

bool condition_matches(const AnalyzedCondition& c, const Row* row,
                       std::span<const Value> agg_values) {
  Value v = evaluate(*c.lhs, row, agg_values);
  if (is_null(v)) return c.kind == ConditionKind::IsNull;
  switch (c.kind) {
    case ConditionKind::PosEq:
      return !is_null(c.values[0]) && equals(v, c.values[0]);
    case ConditionKind::NegEq:
      return !is_null(c.values[0]) && !equals(v, c.values[0]);
    case ConditionKind::PosRange:
      return compare(v, c.values[0]) >= 0 && compare(v, c.values[1]) < 0;
    case ConditionKind::NegRange:
      return compare(v, c.values[0]) < 0 || compare(v, c.values[1]) >= 0;
    case ConditionKind::In:
      for (const Value& e : c.values) {
        if (!is_null(e) && equals(v, e)) return true;
      }
      return false;
    case ConditionKind::Like:
      return like_match(c.pattern.canonical, std::get<std::string>(v), c.fold_case);
    case ConditionKind::NotLike:
      return !like_match(c.pattern.canonical, std::get<std::string>(v), c.fold_case);
    case ConditionKind::IsNull:
      return false;  // non-null value
    case ConditionKind::IsNotNull:
      return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Per-bucket float source: distinct canonical values over the bucket's
// contributing raw rows, ordered by value with NULL first.
// ---------------------------------------------------------------------------

std::vector<std::string> sorted_distinct_canonicals(std::vector<Value> values) {
  std::sort(values.begin(), values.end(),
            [](const Value& a, const Value& b) { return compare(a, b) < 0; });
  std::vector<std::string> out;
  for (const Value& v : values) {
    std::string c = canonical(v);
    if (out.empty() || out.back() != c) out.push_back(std::move(c));
  }
  return out;
}

class BucketFloats final : public FloatProvider {
 public:
  explicit BucketFloats(const std::vector<const Row*>& raw_rows) : rows_(raw_rows) {}

  std::vector<std::string> column_floats(int base_column) const override {
    auto it = cache_.find(base_column);
    if (it != cache_.end()) return it->second;
    std::vector<Value> values;
    values.reserve(rows_.size());
    for (const Row* r : rows_) values.push_back((*r)[static_cast<size_t>(base_column)]);
    auto floats = sorted_distinct_canonicals(std::move(values));
    cache_.emplace(base_column, floats);
    return floats;
  }

  std::vector<std::string> expr_floats(const AnalyzedCondition& cond) const override {
    std::vector<Value> values;
    values.reserve(rows_.size());
    for (const Row* r : rows_) values.push_back(evaluate(*cond.lhs, r));
    return sorted_distinct_canonicals(std::move(values));
  }

 private:
  const std::vector<const Row*>& rows_;
  mutable std::map<int, std::vector<std::string>> cache_;
};

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct RelRow {
  size_t user = 0;      // global user ordinal
  const Row* row = nullptr;
};

struct BucketData {
  std::vector<Value> key;
  std::vector<size_t> members;  // relation row indices
};

struct Executor {
  const AnalyzedQuery& q;
  const EngineConfig& cfg;
  const Table& table;

  std::vector<Value> uid_of_user;                    // by user ordinal
  std::vector<std::vector<const Row*>> rows_of_user;  // filtered raw rows
  std::vector<Row> uid_rows;                          // storage when uid_stage
  std::vector<RelRow> relation;

  Executor(const AnalyzedQuery& query, const EngineConfig& config)
      : q(query), cfg(config), table(*query.table) {}

  void filter_and_group() {
    std::map<std::string, size_t> user_index;
    for (const Row& row : table.rows) {
      bool keep = true;
      for (const AnalyzedCondition& c : q.conditions) {
        if (c.stage == CondStage::RawRows && !condition_matches(c, &row, {})) {
          keep = false;
          break;
        }
      }
      if (!keep) continue;
      const Value& uid = row[table.schema.uid_index];
      auto [it, inserted] = user_index.try_emplace(canonical(uid), uid_of_user.size());
      if (inserted) {
        uid_of_user.push_back(uid);
        rows_of_user.emplace_back();
      }
      rows_of_user[it->second].push_back(&row);
    }
  }

  void build_relation() {
    if (!q.uid_stage) {
      for (size_t u = 0; u < uid_of_user.size(); ++u) {
        for (const Row* r : rows_of_user[u]) relation.push_back({u, r});
      }
      return;
    }
    uid_rows.reserve(uid_of_user.size());
    std::vector<size_t> owner;
    for (size_t u = 0; u < uid_of_user.size(); ++u) {
      Row out;
      out.reserve(q.uid_outputs.size());
      for (const UidOutput& col : q.uid_outputs) {
        out.push_back(col.is_uid ? uid_of_user[u] : true_aggregate(col.agg, rows_of_user[u]));
      }
      uid_rows.push_back(std::move(out));
      owner.push_back(u);
    }
    for (size_t i = 0; i < uid_rows.size(); ++i) {
      bool keep = true;
      for (const AnalyzedCondition& c : q.conditions) {
        if (c.stage == CondStage::UidRows && !condition_matches(c, &uid_rows[i], {})) {
          keep = false;
          break;
        }
      }
      if (keep) relation.push_back({owner[i], &uid_rows[i]});
    }
  }

  std::vector<BucketData> build_buckets() const {
    std::vector<BucketData> buckets;
    std::map<std::string, size_t> index;
    for (size_t i = 0; i < relation.size(); ++i) {
      std::vector<Value> key;
      key.reserve(q.keys.size());
      for (const AnalyzedGroupKey& k : q.keys) key.push_back(evaluate(*k.expr, relation[i].row));
      std::string id;
      for (const Value& v : key) {
        id += canonical(v);
        id.push_back('\x1f');
      }
      auto [it, inserted] = index.try_emplace(std::move(id), buckets.size());
      if (inserted) buckets.push_back({std::move(key), {}});
      buckets[it->second].members.push_back(i);
    }
    return buckets;
  }

  /// Outer HAVING: true aggregates of the bucket's relation rows.
  bool passes_bucket_conditions(const BucketData& b) const {
    bool any = false;
    for (const AnalyzedCondition& c : q.conditions) any |= c.stage == CondStage::Bucket;
    if (!any) return true;
    std::vector<const Row*> rows;
    rows.reserve(b.members.size());
    for (size_t i : b.members) rows.push_back(relation[i].row);
    std::vector<Value> agg_values;
    agg_values.reserve(q.having_aggs.size());
    for (const AggregateCall& agg : q.having_aggs) agg_values.push_back(true_aggregate(agg, rows));
    const Row* probe = rows.empty() ? nullptr : rows.front();
    for (const AnalyzedCondition& c : q.conditions) {
      if (c.stage == CondStage::Bucket && !condition_matches(c, probe, agg_values)) return false;
    }
    return true;
  }

  // ---- per-bucket anonymization ----

  struct BucketView {
    std::vector<size_t> users;                          // global ordinals, first-seen
    std::vector<std::vector<const Row*>> rows_by_user;  // relation rows, bucket-local
    std::vector<const Row*> raw_rows;                   // float source
  };

  BucketView view_of(const BucketData& b) const {
    BucketView v;
    std::map<size_t, size_t> local;
    for (size_t i : b.members) {
      size_t u = relation[i].user;
      auto [it, inserted] = local.try_emplace(u, v.users.size());
      if (inserted) {
        v.users.push_back(u);
        v.rows_by_user.emplace_back();
      }
      v.rows_by_user[it->second].push_back(relation[i].row);
    }
    if (q.uid_stage) {
      for (size_t u : v.users) {
        v.raw_rows.insert(v.raw_rows.end(), rows_of_user[u].begin(), rows_of_user[u].end());
      }
    } else {
      for (size_t i : b.members) v.raw_rows.push_back(relation[i].row);
    }
    return v;
  }

  struct BucketNoise {
    LayerSet layers;
    double sigma_base = 0;
    LayerToggles toggles;

    double baseline(const std::string& tag) const {
      return baseline_noise(layers, tag, toggles.static_layers, toggles.dynamic_layers);
    }
  };

  BucketNoise bucket_noise(const BucketData& b, const BucketView& view,
                           uint64_t uid_term_value) const {
    BucketFloats floats(view.raw_rows);
    std::vector<NoiseLayer> layers;
    for (size_t i = 0; i < q.conditions.size(); ++i) {
      auto ls = condition_layers(q.table_name, q.conditions[i], static_cast<int>(i), floats);
      for (NoiseLayer& l : ls) layers.push_back(std::move(l));
    }
    for (size_t k = 0; k < q.keys.size(); ++k) {
      auto ls = implicit_layers(q.table_name, q.keys[k].implicit, b.key[k], floats);
      for (NoiseLayer& l : ls) layers.push_back(std::move(l));
    }
    if (layers.empty()) layers.push_back(table_layer(q.table_name));

    BucketNoise noise;
    noise.toggles = cfg.toggles;
    noise.layers = assemble(std::move(layers), uid_term_value, cfg.salt);
    size_t draws = 0;
    for (const NoiseLayer& l : noise.layers.layers) {
      draws += (l.emit_static && noise.toggles.static_layers ? 1 : 0) +
               (l.emit_dynamic && noise.toggles.dynamic_layers ? 1 : 0);
    }
    noise.sigma_base = std::sqrt(static_cast<double>(draws));
    return noise;
  }

  /// Per-user non-null argument values for one aggregate.
  std::vector<std::vector<Value>> arg_values(const AggregateCall& agg,
                                             const BucketView& view) const {
    std::vector<std::vector<Value>> out(view.users.size());
    for (size_t u = 0; u < view.users.size(); ++u) {
      for (const Row* r : view.rows_by_user[u]) {
        Value v = evaluate(*agg.arg, r);
        if (!is_null(v)) out[u].push_back(std::move(v));
      }
    }
    return out;
  }

  AggResult compute_aggregate(const AggregateCall& agg, const BucketView& view,
                              const BucketNoise& noise, const ThresholdSource& th) const {
    const std::string tag = "noise:" + agg.key;
    const double sigma = noise.sigma_base;

    if (agg.fn == "count") {
      std::vector<double> contribs;
      if (agg.star) {
        for (const auto& rows : view.rows_by_user) {
          contribs.push_back(static_cast<double>(rows.size()));
        }
      } else {
        auto values = arg_values(agg, view);
        if (agg.distinct) values = assign_distinct(values);
        for (const auto& list : values) {
          if (!list.empty()) contribs.push_back(static_cast<double>(list.size()));
        }
      }
      return anon_count(contribs, noise.baseline(tag), sigma, th);
    }
    if (agg.fn == "sum") {
      auto values = arg_values(agg, view);
      if (agg.distinct) values = assign_distinct(values);
      std::vector<double> contribs;
      for (const auto& list : values) {
        if (list.empty()) continue;
        double s = 0;
        for (const Value& v : list) s += *as_real(v);
        contribs.push_back(s);
      }
      return anon_sum(contribs, noise.baseline(tag), sigma, th);
    }
    if (agg.fn == "avg" || agg.fn == "stddev") {
      auto values = arg_values(agg, view);
      double mean = 0;
      if (agg.fn == "stddev") {
        double total = 0;
        size_t n = 0;
        for (const auto& list : values) {
          for (const Value& v : list) {
            total += *as_real(v);
            n += 1;
          }
        }
        mean = n > 0 ? total / static_cast<double>(n) : 0;
      }
      std::vector<double> sums, counts;
      for (const auto& list : values) {
        if (list.empty()) continue;
        double s = 0;
        for (const Value& v : list) {
          double x = *as_real(v);
          s += agg.fn == "avg" ? x : (x - mean) * (x - mean);
        }
        sums.push_back(s);
        counts.push_back(static_cast<double>(list.size()));
      }
      double b_sum = noise.baseline(tag + ":sum");
      double b_count = noise.baseline(tag + ":count");
      return agg.fn == "avg" ? anon_avg(sums, counts, b_sum, b_count, sigma, th)
                             : anon_stddev(sums, counts, b_sum, b_count, sigma, th);
    }
    if (agg.fn == "min" || agg.fn == "max") {
      const bool highest = agg.fn == "max";
      auto values = arg_values(agg, view);
      std::vector<double> extremes;
      for (const auto& list : values) {
        if (list.empty()) continue;
        double best = *as_real(list[0]);
        for (const Value& v : list) {
          double x = *as_real(v);
          if (highest ? x > best : x < best) best = x;
        }
        extremes.push_back(best);
      }
      return anon_extreme(extremes, highest, noise.baseline(tag), sigma, th);
    }
    // median
    auto values = arg_values(agg, view);
    std::vector<UidRow> rows;
    for (size_t u = 0; u < values.size(); ++u) {
      for (const Value& v : values[u]) rows.push_back({static_cast<int>(u), *as_real(v)});
    }
    return anon_median(rows, noise.baseline(tag), sigma, th);
  }

  // ---- full run ----

  AnswerTable run() {
    filter_and_group();
    build_relation();

    AnswerTable answer;
    for (const AnalyzedItem& item : q.items) answer.columns.push_back(item.name);

    AggregateCall listing_count;
    listing_count.fn = "count";
    listing_count.star = true;
    listing_count.key = "count(*)";

    for (const BucketData& bucket : build_buckets()) {
      if (!passes_bucket_conditions(bucket)) continue;
      BucketView view = view_of(bucket);

      std::vector<uint64_t> hashes;
      hashes.reserve(view.users.size());
      for (size_t u : view.users) hashes.push_back(uid_hash(uid_of_user[u]));
      uint64_t term = uid_term(hashes);
      if (!low_count_passes(view.users.size(), term, cfg.salt)) continue;

      BucketNoise noise = bucket_noise(bucket, view, term);
      SeededThresholds thresholds(noise.layers.combined_seed());

      std::map<std::string, AggResult> results;
      auto result_of = [&](const AggregateCall& agg) -> const AggResult& {
        auto it = results.find(agg.key);
        if (it == results.end()) {
          it = results.emplace(agg.key, compute_aggregate(agg, view, noise, thresholds)).first;
        }
        return it->second;
      };

      if (q.row_listing) {
        const AggResult& r = result_of(listing_count);
        if (r.suppressed) continue;
        size_t copies = std::min<size_t>(kReplicationCap,
                                         static_cast<size_t>(std::max(0.0, r.value)));
        Row row;
        row.reserve(q.items.size());
        for (const AnalyzedItem& item : q.items) {
          row.push_back(bucket.key[static_cast<size_t>(item.key_index)]);
        }
        for (size_t i = 0; i < copies; ++i) answer.rows.push_back(row);
        continue;
      }

      std::vector<Value> agg_outputs;
      agg_outputs.reserve(q.aggs.size());
      bool suppressed = false;
      for (const AggregateCall& agg : q.aggs) {
        const AggResult& r = result_of(agg);
        if (r.suppressed) {
          suppressed = true;
          break;
        }
        if (agg.noise) {
          agg_outputs.push_back(Value{noise_report(r.noise_sd)});
        } else if (agg.fn == "count") {
          agg_outputs.push_back(Value{static_cast<int64_t>(std::llround(r.value))});
        } else {
          agg_outputs.push_back(Value{r.value});
        }
      }
      if (suppressed) continue;

      Row row;
      row.reserve(q.items.size());
      for (const AnalyzedItem& item : q.items) {
        if (item.aggregate) {
          row.push_back(evaluate(*item.expr, nullptr, agg_outputs));
        } else {
          row.push_back(bucket.key[static_cast<size_t>(item.key_index)]);
        }
      }
      answer.rows.push_back(std::move(row));
    }

    present(answer);
    return answer;
  }

  void present(AnswerTable& answer) const {
    if (q.distinct) {
      std::set<std::string> seen;
      std::vector<Row> kept;
      for (Row& row : answer.rows) {
        std::string id;
        for (const Value& v : row) {
          id += canonical(v);
          id.push_back('\x1f');
        }
        if (seen.insert(std::move(id)).second) kept.push_back(std::move(row));
      }
      answer.rows = std::move(kept);
    }
    if (!q.order.empty()) {
      std::stable_sort(answer.rows.begin(), answer.rows.end(), [&](const Row& a, const Row& b) {
        for (const OrderSpec& spec : q.order) {
          size_t i = static_cast<size_t>(spec.item);
          int c = compare(a[i], b[i]);
          if (c != 0) return spec.ascending ? c < 0 : c > 0;
        }
        return false;
      });
    }
    size_t offset = q.offset ? static_cast<size_t>(std::max<int64_t>(0, *q.offset)) : 0;
    if (offset >= answer.rows.size()) {
      answer.rows.clear();
    } else if (offset > 0) {
      answer.rows.erase(answer.rows.begin(), answer.rows.begin() + static_cast<long>(offset));
    }
    if (q.limit && answer.rows.size() > static_cast<size_t>(std::max<int64_t>(0, *q.limit))) {
      answer.rows.resize(static_cast<size_t>(std::max<int64_t>(0, *q.limit)));
    }
  }
};

}  // namespace

AnswerTable run_query(const AnalyzedQuery& q, const EngineConfig& config) {
  Executor exec(q, config);
  return exec.run();
}

AnswerTable run_sql(const std::string& sql, const std::map<std::string, Table>& tables,
                    const EngineConfig& config) {
  AnalyzedQuery q = analyze(parse_query(sql), tables);
  return run_query(q, config);
}

// ---------------------------------------------------------------------------
// Explain
// ---------------------------------------------------------------------------

namespace {

std::string join_parts(const std::vector<std::string>& parts) {
  std::string out = "[";
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += "|";
    out += parts[i];
  }
  out += "]";
  return out;
}

const char* stage_name(CondStage stage) {
  switch (stage) {
    case CondStage::RawRows: return "raw rows";
    case CondStage::UidRows: return "per-user rows";
    case CondStage::Bucket: return "bucket aggregates";
  }
  return "?";
}

struct LayerCount {
  size_t statics = 0;
  size_t dynamics = 0;
};

void describe_condition(std::ostringstream& out, const AnalyzedCondition& c, size_t index,
                        LayerCount& count) {
  out << "condition " << (index + 1) << " (" << (c.origin == ClauseOrigin::Where ? "where" : "having")
      << ", " << stage_name(c.stage) << "): " << c.display << "\n";
  auto layer = [&](const std::string& text, bool st, bool dy) {
    out << "  layer " << text;
    if (st && dy) {
      out << "  [static+dynamic]";
    } else {
      out << (st ? "  [static only]" : "  [dynamic only]");
    }
    out << "\n";
    count.statics += st ? 1 : 0;
    count.dynamics += dy ? 1 : 0;
  };
  std::string col = c.seed_column;
  std::string floats = c.seed_source == SeedSource::FloatExpr
                           ? "<floated expression values over bucket rows>"
                           : "<min|max|distinct-count of " + col + " over bucket rows>";
  switch (c.kind) {
    case ConditionKind::PosEq:
      if (c.seed_source == SeedSource::Sql) {
        std::string v = canonical(c.values[0]);
        layer(join_parts({col, v, v, "1"}), true, true);
      } else {
        layer("[" + col + "|" + floats + "]", true, true);
      }
      break;
    case ConditionKind::NegEq:
      layer(join_parts({col, canonical(c.values[0])}), true, true);
      break;
    case ConditionKind::PosRange:
      layer(join_parts({col, canonical(c.values[0]), canonical(c.values[1])}), true, true);
      break;
    case ConditionKind::NegRange:
      layer(join_parts({col, canonical(c.values[0]), canonical(c.values[1]), ":<>"}), true, true);
      break;
    case ConditionKind::In: {
      layer("[" + col + "|" + floats + "]", true, false);
      for (const Value& v : c.values) layer(join_parts({col, canonical(v)}), false, true);
      break;
    }
    case ConditionKind::Like:
    case ConditionKind::NotLike: {
      bool neg = c.kind == ConditionKind::NotLike;
      auto tag = [&](std::vector<std::string> parts) {
        if (neg) parts.push_back(":not");
        return parts;
      };
      layer(join_parts(tag({col, c.pattern.canonical})), true, true);
      for (const WildcardDescriptor& w : c.pattern.descriptors) {
        layer(join_parts(tag({col, std::to_string(w.length), std::to_string(w.index),
                              std::string(1, w.symbol)})),
              true, true);
      }
      break;
    }
    case ConditionKind::IsNull:
      layer(join_parts({col, ":null"}), true, true);
      break;
    case ConditionKind::IsNotNull:
      layer(join_parts({col, ":notnull"}), true, true);
      break;
  }
  if (c.string_fn) {
    std::vector<std::string> parts = {col, c.string_fn->name};
    for (const std::string& s : c.string_fn->constants) parts.push_back(s);
    if (c.negative()) parts.push_back(":<>");
    layer(join_parts(parts), false, true);
  }
  if (c.case_fn && c.negative() &&
      (c.kind == ConditionKind::NegEq || c.kind == ConditionKind::NotLike)) {
    layer("[" + col + "|<folded value>|:<>|:lower]", true, false);
  }
  if (c.seed_source != SeedSource::Sql) {
    out << "  floats " << (c.seed_source == SeedSource::FloatExpr ? "expression values" : col)
        << " (min/max/distinct-count aggregates requested alongside uid)\n";
  }
}

void describe_key(std::ostringstream& out, const ImplicitSpec& spec, LayerCount& count) {
  auto layer = [&](const std::string& text, bool st, bool dy) {
    out << "  layer " << text << (st && dy ? "  [static+dynamic]" : (st ? "  [static only]" : "  [dynamic only]"))
        << "\n";
    count.statics += st ? 1 : 0;
    count.dynamics += dy ? 1 : 0;
  };
  switch (spec.mode) {
    case ImplicitMode::Skip:
      out << "  constant: no layer\n";
      break;
    case ImplicitMode::FloatColumn:
      layer("[" + spec.seed_column + "|<min|max|distinct-count over bucket rows>]", true, true);
      out << "  floats " << spec.seed_column << "\n";
      break;
    case ImplicitMode::ClearWrapped: {
      layer("[" + spec.seed_column + "|<bucket value>|<bucket value>|1]", true, true);
      if (spec.string_fn) {
        std::vector<std::string> parts = {spec.seed_column, spec.string_fn->name};
        for (const std::string& s : spec.string_fn->constants) parts.push_back(s);
        layer(join_parts(parts), false, true);
      }
      break;
    }
    case ImplicitMode::Derived:
      layer("[" + spec.seed_column + "|<bucket value>|<bucket value>|1]", true, true);
      break;
    case ImplicitMode::CellFn:
      layer("[" + spec.seed_column + "|<cell lower>|<cell upper>]", true, true);
      break;
    case ImplicitMode::Concat:
      for (const ImplicitSpec& sub : spec.constituents) describe_key(out, sub, count);
      break;
  }
}

}  // namespace

std::string explain_plan(const AnalyzedQuery& q) {
  std::ostringstream out;
  out << "table: " << q.table_name << " (uid " << q.table->schema.uid_column().name << ")\n";
  out << "execution: "
      << (q.uid_stage ? "two-stage (per-user aggregation, then bucket grouping)"
                      : "single-stage (row filter, then bucket grouping)")
      << "\n";
  LayerCount count;
  for (size_t i = 0; i < q.conditions.size(); ++i) describe_condition(out, q.conditions[i], i, count);
  for (const AnalyzedGroupKey& key : q.keys) {
    out << "group key: " << key.display << "\n";
    describe_key(out, key.implicit, count);
  }
  if (count.statics + count.dynamics == 0) {
    out << "no condition or key layers: single dynamic table layer\n";
    count.dynamics += 1;
  }
  if (q.row_listing) {
    out << "row listing: rows replicate by the anonymized count(*) (noise tag noise:count(*))\n";
  }
  for (const AggregateCall& agg : q.aggs) {
    out << "aggregate: " << (agg.noise ? agg.key + " noise magnitude" : agg.key)
        << "  (noise tag noise:" << agg.key;
    if (agg.fn == "avg" || agg.fn == "stddev") out << ":sum / :count";
    out << ")\n";
  }
  size_t draws = count.statics + count.dynamics;
  out << "noise layers per bucket: " << draws << " (" << count.statics << " static + "
      << count.dynamics << " dynamic); baseline sigma = sqrt(" << draws << ")\n";
  out << "suppression: buckets under a noisy distinct-user threshold are dropped\n";
  out << "seed parts shown unsalted; resolved seeds and the salt are never displayed\n";
  return out.str();
}

std::string explain_sql(const std::string& sql, const std::map<std::string, Table>& tables) {
  return explain_plan(analyze(parse_query(sql), tables));
}

void Engine::add_table(Table table) {
  std::string name = table.name;
  tables_.insert_or_assign(std::move(name), std::move(table));
}

}  // namespace anonql
