#include "anonql/layers.hpp"

#include <doctest.h>

#include "anonql/noise.hpp"
#include "anonql/parser.hpp"
#include "anonql/table.hpp"

using namespace anonql;

using Parts = std::vector<std::string>;

namespace {

// Column order: emp_id 0, name 1, dept 2, age 3, salary 4, active 5, hired 6,
// bday 7.
const std::map<std::string, Table>& tables() {
  static const std::map<std::string, Table> shared = [] {
    Schema schema = parse_schema(
        "emp_id:text:uid\n"
        "name:text\n"
        "dept:text\n"
        "age:integer\n"
        "salary:real\n"
        "active:boolean\n"
        "hired:datetime\n"
        "bday:text\n");
    Table hr = load_csv("hr",
                        "emp_id,name,dept,age,salary,active,hired,bday\n"
                        "e1,Ada,CS,25,50000.0,true,2016-03-05 09:00:00,1991-01-02\n"
                        "e2,Bob,EE,31,61000.5,false,2017-07-01 10:30:00,1986-05-06\n",
                        schema);
    std::map<std::string, Table> m;
    m.emplace("hr", std::move(hr));
    return m;
  }();
  return shared;
}

AnalyzedQuery an(const std::string& sql) { return analyze(parse_query(sql), tables()); }

struct StubFloats : FloatProvider {
  std::map<int, std::vector<std::string>> columns;
  std::vector<std::string> exprs;

  std::vector<std::string> column_floats(int base_column) const override {
    auto it = columns.find(base_column);
    return it == columns.end() ? std::vector<std::string>{} : it->second;
  }
  std::vector<std::string> expr_floats(const AnalyzedCondition&) const override { return exprs; }
};

std::vector<NoiseLayer> layers_of(const AnalyzedQuery& q, const FloatProvider& floats,
                                  size_t cond = 0) {
  return condition_layers("hr", q.conditions.at(cond), static_cast<int>(cond), floats);
}

std::vector<Parts> all_parts(const std::vector<NoiseLayer>& layers) {
  std::vector<Parts> out;
  for (const NoiseLayer& l : layers) out.push_back(l.parts);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Explicit condition layers
// ---------------------------------------------------------------------------

TEST_CASE("clear equality produces one [table, column, c, c, 1] layer") {
  auto q = an("select count(*) from hr where dept = 'CS'");
  auto layers = layers_of(q, StubFloats{});
  REQUIRE(layers.size() == 1);
  CHECK(layers[0].parts == Parts{"hr", "dept", "CS", "CS", "1"});
  CHECK(layers[0].origin == LayerOrigin::Condition);
  CHECK(layers[0].condition_index == 0);
  CHECK(layers[0].emit_static);
  CHECK(layers[0].emit_dynamic);
}

TEST_CASE("unclear equality seeds from the column's floated summary") {
  auto q = an("select count(*) from hr where length(dept) = 2");
  StubFloats floats;
  floats.columns[2] = {"CS", "EE"};
  auto layers = layers_of(q, floats);
  REQUIRE(layers.size() == 1);
  CHECK(layers[0].parts == Parts{"hr", "dept", "CS", "EE", "2"});
}

TEST_CASE("case-folded spellings of one condition share floated layers") {
  StubFloats floats;
  floats.columns[2] = {"CS"};
  auto lower_layers = layers_of(an("select count(*) from hr where lower(dept) = 'cs'"), floats);
  auto upper_layers = layers_of(an("select count(*) from hr where upper(dept) = 'CS'"), floats);
  CHECK(all_parts(lower_layers) == all_parts(upper_layers));
  REQUIRE(lower_layers.size() == 1);
  CHECK(lower_layers[0].parts == Parts{"hr", "dept", "CS", "CS", "1"});
}

TEST_CASE("exclusion layers") {
  StubFloats none;
  SUBCASE("<> keeps only the excluded value") {
    auto q = an("select count(*) from hr where dept <> 'CS'");
    auto layers = layers_of(q, none);
    REQUIRE(layers.size() == 1);
    CHECK(layers[0].parts == Parts{"hr", "dept", "CS"});
  }
  SUBCASE("NOT BETWEEN tags the snapped range") {
    auto q = an("select count(*) from hr where age not between 20 and 30");
    auto layers = layers_of(q, none);
    REQUIRE(layers.size() == 1);
    CHECK(layers[0].parts == Parts{"hr", "age", "20", "30", ":<>"});
  }
  SUBCASE("null checks") {
    auto q1 = an("select count(*) from hr where dept is null");
    CHECK(layers_of(q1, none)[0].parts == Parts{"hr", "dept", ":null"});
    auto q2 = an("select count(*) from hr where dept is not null");
    CHECK(layers_of(q2, none)[0].parts == Parts{"hr", "dept", ":notnull"});
  }
}

TEST_CASE("negated case-folded equality adds a folded static-only layer") {
  auto q = an("select count(*) from hr where lower(dept) <> 'CS'");
  auto layers = layers_of(q, StubFloats{});
  REQUIRE(layers.size() == 2);
  CHECK(layers[0].parts == Parts{"hr", "dept", "CS"});
  CHECK(layers[1].parts == Parts{"hr", "dept", "cs", ":<>", ":lower"});
  CHECK(layers[1].origin == LayerOrigin::CaseFn);
  CHECK(layers[1].emit_static);
  CHECK_FALSE(layers[1].emit_dynamic);
}

TEST_CASE("snapped ranges seed by their bounds") {
  StubFloats none;
  auto q = an("select count(*) from hr where salary >= 60 and salary < 70");
  auto layers = layers_of(q, none);
  REQUIRE(layers.size() == 1);
  CHECK(layers[0].parts == Parts{"hr", "salary", "60", "70"});

  SUBCASE("a range-mapping function equality seeds identically to the range") {
    auto q2 = an("select count(*) from hr where trunc(salary, -1) = 60");
    CHECK(all_parts(layers_of(q2, none)) == all_parts(layers));
  }
  SUBCASE("BETWEEN seeds identically to the inequality pair") {
    auto q3 = an("select count(*) from hr where salary between 60 and 70");
    CHECK(all_parts(layers_of(q3, none)) == all_parts(layers));
  }
}

TEST_CASE("datetime range layers use canonical T-separated bounds") {
  auto q = an(
      "select count(*) from hr "
      "where hired >= '2016-01-01' and hired < '2017-01-01'");
  auto layers = layers_of(q, StubFloats{});
  REQUIRE(layers.size() == 1);
  CHECK(layers[0].parts == Parts{"hr", "hired", "2016-01-01T00:00:00", "2017-01-01T00:00:00"});
}

TEST_CASE("IN splits into a floated static clause layer plus dynamic element layers") {
  auto q = an("select count(*) from hr where dept in ('EE', 'CS', 'EE')");
  StubFloats floats;
  floats.columns[2] = {"CS", "EE"};
  auto layers = layers_of(q, floats);
  REQUIRE(layers.size() == 3);

  CHECK(layers[0].parts == Parts{"hr", "dept", "CS", "EE"});
  CHECK(layers[0].origin == LayerOrigin::InClause);
  CHECK(layers[0].emit_static);
  CHECK_FALSE(layers[0].emit_dynamic);

  // Elements keep query order after duplicate removal.
  CHECK(layers[1].parts == Parts{"hr", "dept", "EE"});
  CHECK(layers[2].parts == Parts{"hr", "dept", "CS"});
  for (size_t i = 1; i < 3; ++i) {
    CHECK(layers[i].origin == LayerOrigin::InElement);
    CHECK_FALSE(layers[i].emit_static);
    CHECK(layers[i].emit_dynamic);
  }
}

TEST_CASE("IN under a character-removing wrapper floats the wrapper's outputs") {
  auto q = an("select count(*) from hr where left(dept, 1) in ('C', 'E')");
  StubFloats floats;
  floats.exprs = {"C", "E"};
  auto layers = layers_of(q, floats);
  REQUIRE(layers.size() == 4);
  CHECK(layers[0].parts == Parts{"hr", "dept", "C", "E"});
  CHECK(layers[1].parts == Parts{"hr", "dept", "C"});
  CHECK(layers[2].parts == Parts{"hr", "dept", "E"});
  CHECK(layers[3].parts == Parts{"hr", "dept", "left", "1"});
  CHECK(layers[3].origin == LayerOrigin::StringFn);
  CHECK_FALSE(layers[3].emit_static);
  CHECK(layers[3].emit_dynamic);
}

TEST_CASE("pattern layers carry one extra layer per wildcard") {
  auto q = an("select count(*) from hr where name like 'A%a'");
  auto layers = layers_of(q, StubFloats{});
  LikePattern expected = normalize_like("A%a", std::nullopt, false);
  REQUIRE(layers.size() == 1 + expected.descriptors.size());
  REQUIRE(expected.descriptors.size() == 1);
  CHECK(layers[0].parts == Parts{"hr", "name", expected.canonical});
  const WildcardDescriptor& w = expected.descriptors[0];
  CHECK(layers[1].parts == Parts{"hr", "name", std::to_string(w.length),
                                 std::to_string(w.index), std::string(1, w.symbol)});
  CHECK(layers[1].origin == LayerOrigin::Wildcard);
  CHECK(layers[1].emit_static);
  CHECK(layers[1].emit_dynamic);
}

TEST_CASE("NOT LIKE tags every pattern layer") {
  auto q = an("select count(*) from hr where name not like 'A%a'");
  auto layers = layers_of(q, StubFloats{});
  REQUIRE(layers.size() == 2);
  for (const NoiseLayer& l : layers) {
    REQUIRE(!l.parts.empty());
    CHECK(l.parts.back() == ":not");
  }
}

TEST_CASE("wrapper spellings that match the same rows share every layer") {
  StubFloats none;
  SUBCASE("substring from position one is the left prefix") {
    auto a = layers_of(an("select count(*) from hr where substring(name, 1, 3) = 'Ada'"), none);
    auto b = layers_of(an("select count(*) from hr where left(name, 3) = 'Ada'"), none);
    CHECK(all_parts(a) == all_parts(b));
    REQUIRE(a.size() == 2);
    CHECK(a[0].parts == Parts{"hr", "name", "Ada", "Ada", "1"});
    CHECK(a[1].parts == Parts{"hr", "name", "left", "3"});
    CHECK_FALSE(a[1].emit_static);
    CHECK(a[1].emit_dynamic);
  }
  SUBCASE("trim defaults to the space character set") {
    auto a = layers_of(an("select count(*) from hr where btrim(name) = 'Ada'"), none);
    auto b = layers_of(an("select count(*) from hr where btrim(name, ' ') = 'Ada'"), none);
    CHECK(all_parts(a) == all_parts(b));
    REQUIRE(a.size() == 2);
    CHECK(a[1].parts == Parts{"hr", "name", "btrim", " "});
  }
}

TEST_CASE("filtering an aggregate output seeds like the equivalent per-user HAVING") {
  StubFloats none;
  auto where_form = an(
      "select count(*) from "
      "(select emp_id, count(*) as cnt from hr group by emp_id) x "
      "where cnt >= 4 and cnt < 6");
  auto having_form = an(
      "select count(*) from "
      "(select emp_id from hr group by emp_id having count(*) >= 4 and count(*) < 6) x");
  auto a = layers_of(where_form, none);
  auto b = layers_of(having_form, none);
  CHECK(all_parts(a) == all_parts(b));
  REQUIRE(a.size() == 1);
  CHECK(a[0].parts == Parts{"hr", "emp_id", "4", "6"});
}

// ---------------------------------------------------------------------------
// Implicit layers for selected and grouped expressions
// ---------------------------------------------------------------------------

TEST_CASE("bare grouped column floats the bucket's own values") {
  auto q = an("select dept, count(*) from hr group by dept");
  REQUIRE(q.keys.size() == 1);
  StubFloats floats;
  floats.columns[2] = {"CS"};
  auto layers = implicit_layers("hr", q.keys[0].implicit, Value{std::string("CS")}, floats);
  REQUIRE(layers.size() == 1);
  CHECK(layers[0].parts == Parts{"hr", "dept", "CS", "CS", "1"});
  CHECK(layers[0].origin == LayerOrigin::Implicit);
  CHECK(layers[0].condition_index == -1);
}

TEST_CASE("wrapped grouped column seeds the bucket value plus the wrapper layer") {
  auto q = an("select left(bday, 4) as yr, count(*) from hr group by 1");
  auto layers =
      implicit_layers("hr", q.keys.at(0).implicit, Value{std::string("1991")}, StubFloats{});
  REQUIRE(layers.size() == 2);
  CHECK(layers[0].parts == Parts{"hr", "bday", "1991", "1991", "1"});
  CHECK(layers[1].parts == Parts{"hr", "bday", "left", "4"});
  CHECK_FALSE(layers[1].emit_static);
  CHECK(layers[1].emit_dynamic);
}

TEST_CASE("derived-column grouping seeds a positive equality on fn(col)") {
  auto q = an("select weekday(hired), count(*) from hr group by 1");
  auto layers = implicit_layers("hr", q.keys.at(0).implicit, Value{int64_t{6}}, StubFloats{});
  REQUIRE(layers.size() == 1);
  CHECK(layers[0].parts == Parts{"hr", "weekday(hired)", "6", "6", "1"});
}

TEST_CASE("cell-function grouping seeds the covered range") {
  StubFloats none;
  SUBCASE("year") {
    auto q = an("select year(hired), count(*) from hr group by 1");
    auto layers = implicit_layers("hr", q.keys.at(0).implicit, Value{int64_t{2016}}, none);
    REQUIRE(layers.size() == 1);
    CHECK(layers[0].parts ==
          Parts{"hr", "hired", "2016-01-01T00:00:00", "2017-01-01T00:00:00"});
  }
  SUBCASE("date_trunc to month") {
    auto q = an("select date_trunc('month', hired), count(*) from hr group by 1");
    Value bucket{*parse_datetime("2016-03-01 00:00:00")};
    auto layers = implicit_layers("hr", q.keys.at(0).implicit, bucket, none);
    REQUIRE(layers.size() == 1);
    CHECK(layers[0].parts ==
          Parts{"hr", "hired", "2016-03-01T00:00:00", "2016-04-01T00:00:00"});
  }
  SUBCASE("truncation to a power of ten") {
    auto q = an("select trunc(salary, -3), count(*) from hr group by 1");
    auto layers = implicit_layers("hr", q.keys.at(0).implicit, Value{50000.0}, none);
    REQUIRE(layers.size() == 1);
    CHECK(layers[0].parts == Parts{"hr", "salary", "50000", "51000"});
  }
  SUBCASE("a null bucket seeds as the null value itself") {
    auto q = an("select year(hired), count(*) from hr group by 1");
    auto layers = implicit_layers("hr", q.keys.at(0).implicit, Value{}, none);
    REQUIRE(layers.size() == 1);
    CHECK(layers[0].parts == Parts{"hr", "hired", ":null", ":null", "1"});
  }
}

TEST_CASE("concatenation floats each constituent column") {
  auto q = an("select concat(dept, name), count(*) from hr group by 1");
  StubFloats floats;
  floats.columns[1] = {"Ada"};
  floats.columns[2] = {"CS"};
  auto layers = implicit_layers("hr", q.keys.at(0).implicit, Value{std::string("CSAda")}, floats);
  REQUIRE(layers.size() == 2);
  CHECK(layers[0].parts == Parts{"hr", "dept", "CS", "CS", "1"});
  CHECK(layers[1].parts == Parts{"hr", "name", "Ada", "Ada", "1"});
}

TEST_CASE("constant expressions contribute no layers") {
  ImplicitSpec constant;
  constant.mode = ImplicitMode::Skip;
  CHECK(implicit_layers("hr", constant, Value{std::string("tag")}, StubFloats{}).empty());
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

TEST_CASE("the fallback table layer is dynamic-only") {
  NoiseLayer l = table_layer("hr");
  CHECK(l.parts == Parts{"hr"});
  CHECK(l.origin == LayerOrigin::Table);
  CHECK_FALSE(l.emit_static);
  CHECK(l.emit_dynamic);
  LayerSet set = assemble({l}, 0x1234, "salt");
  CHECK(set.draw_count() == 1);
}

TEST_CASE("assemble derives static seeds from parts and salt, dynamic from the uid term") {
  auto q = an("select count(*) from hr where dept = 'CS' and age = 25");
  StubFloats none;
  std::vector<NoiseLayer> layers = layers_of(q, none, 0);
  for (NoiseLayer& l : layers_of(q, none, 1)) layers.push_back(std::move(l));
  REQUIRE(layers.size() == 2);

  const uint64_t uid_term_value = 0x0123456789abcdefULL;
  LayerSet set = assemble(layers, uid_term_value, "s1");
  CHECK(set.draw_count() == 4);
  CHECK(set.uid_term_value == uid_term_value);

  uint64_t combined = uid_term_value;
  for (const NoiseLayer& l : set.layers) {
    CHECK(l.static_seed == static_seed(l.parts, "s1"));
    CHECK(l.dynamic_seed == (l.static_seed ^ uid_term_value));
    combined ^= l.static_seed;
  }
  CHECK(set.combined_seed() == combined);

  SUBCASE("changing the salt moves every static seed") {
    LayerSet other = assemble(set.layers, uid_term_value, "s2");
    for (size_t i = 0; i < set.layers.size(); ++i) {
      CHECK(other.layers[i].static_seed != set.layers[i].static_seed);
    }
  }
  SUBCASE("changing the user set moves only the dynamic seeds") {
    LayerSet other = assemble(set.layers, uid_term_value ^ 0xff, "s1");
    for (size_t i = 0; i < set.layers.size(); ++i) {
      CHECK(other.layers[i].static_seed == set.layers[i].static_seed);
      CHECK(other.layers[i].dynamic_seed != set.layers[i].dynamic_seed);
    }
  }
}
