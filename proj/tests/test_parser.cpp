#include <doctest.h>

#include <string>

#include "anonql/ast.hpp"
#include "anonql/error.hpp"
#include "anonql/parser.hpp"

using namespace anonql;

static std::string round_trip(const std::string& sql) { return to_sql(parse_query(sql)); }

static ErrorCode code_of(const std::string& sql) {
  try {
    parse_query(sql);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error for: " << sql);
  return ErrorCode::SyntaxError;
}

TEST_CASE("basic query round trip") {
  CHECK(round_trip("SELECT dept, count(*) FROM hr WHERE age >= 30 AND age < 40 GROUP BY dept") ==
        "select dept, count(*) from hr where age >= 30 and age < 40 group by dept");
  CHECK(round_trip("select * from hr") == "select * from hr");
  CHECK(round_trip("select distinct dept from hr") == "select distinct dept from hr");
  CHECK(round_trip("select a as x, b y from t order by 2 desc, x limit 10 offset 5") ==
        "select a as x, b as y from t order by 2 desc, x limit 10 offset 5");
  CHECK(round_trip("select count(distinct ssn) from t group by 1") ==
        "select count(distinct ssn) from t group by 1");
  CHECK(round_trip("select h.age from hr h") == "select h.age from hr");
}

TEST_CASE("operator and literal canonicalization") {
  CHECK(round_trip("select * from t where a != 3") == "select * from t where a <> 3");
  CHECK(round_trip("select 'O''Brien' from t") == "select 'O''Brien' from t");
  CHECK(round_trip("select a + b * c from t") == "select (a + (b * c)) from t");
  CHECK(round_trip("select (a + b) * c from t") == "select ((a + b) * c) from t");
  CHECK(round_trip("select 2 ^ 3 ^ 2 from t") == "select (2 ^ (3 ^ 2)) from t");
  CHECK(round_trip("select -a from t") == "select (- a) from t");
  CHECK(round_trip("select 1.5, 2, true, null from t") == "select 1.5, 2, true, null from t");
}

TEST_CASE("function spellings canonicalize") {
  CHECK(round_trip("select lcase(name) from t") == "select lower(name) from t");
  CHECK(round_trip("select ucase(name) from t") == "select upper(name) from t");
  CHECK(round_trip("select extract(year from bday) from t") == "select year(bday) from t");
  CHECK(round_trip("select trim(name) from t") == "select btrim(name) from t");
  CHECK(round_trip("select trim(leading 'x' from name) from t") ==
        "select ltrim(name, 'x') from t");
  CHECK(round_trip("select trim(trailing from name) from t") == "select rtrim(name) from t");
  CHECK(round_trip("select trim(both 'xy' from name) from t") == "select btrim(name, 'xy') from t");
  CHECK(round_trip("select trim(name, 'x') from t") == "select btrim(name, 'x') from t");
  CHECK(round_trip("select substring(name from 2 for 3) from t") ==
        "select substring(name, 2, 3) from t");
  CHECK(round_trip("select substring(name for 3) from t") ==
        "select substring(name, 1, 3) from t");
  CHECK(round_trip("select substring(name, 2) from t") == "select substring(name, 2) from t");
  CHECK(round_trip("select cast(age as text) from t") == "select cast(age, text) from t");
  CHECK(round_trip("select age::text from t") == "select cast(age, text) from t");
}

TEST_CASE("condition forms") {
  CHECK(round_trip("select * from t where age between 30 and 40") ==
        "select * from t where age between 30 and 40");
  CHECK(round_trip("select * from t where age not between 30 and 40") ==
        "select * from t where age not between 30 and 40");
  CHECK(round_trip("select * from t where dept in ('a','b')") ==
        "select * from t where dept in ('a', 'b')");
  CHECK(round_trip("select * from t where dept not in ('a')") ==
        "select * from t where dept not in ('a')");
  CHECK(round_trip("select * from t where name like 'a!%' escape '!'") ==
        "select * from t where name like 'a!%' escape '!'");
  CHECK(round_trip("select * from t where name not ilike '%x%'") ==
        "select * from t where name not ilike '%x%'");
  CHECK(round_trip("select * from t where name is not null and age is null") ==
        "select * from t where name is not null and age is null");
  CHECK(round_trip("select * from t having count(*) >= 5") ==
        "select * from t having count(*) >= 5");
}

TEST_CASE("subquery in from") {
  CHECK(round_trip("select count(*) from (select uid, age from hr) x") ==
        "select count(*) from (select uid, age from hr) x");
  CHECK(round_trip("select avg(n) from (select uid, count(*) n from hr group by uid)") ==
        "select avg(n) from (select uid, count(*) as n from hr group by uid)");
}

TEST_CASE("rejections carry the right code") {
  CHECK(code_of("select * from t where a = 1 or b = 2") == ErrorCode::OrNotAllowed);
  CHECK(code_of("select * from t join u on t.a = u.a") == ErrorCode::JoinNotAllowed);
  CHECK(code_of("select * from t, u") == ErrorCode::JoinNotAllowed);
  CHECK(code_of("select * from t left join u on t.a = u.a") == ErrorCode::JoinNotAllowed);
  CHECK(code_of("select * from t cross join u") == ErrorCode::JoinNotAllowed);
  CHECK(code_of("select frobnicate(a) from t") == ErrorCode::UnknownFunction);
  CHECK(code_of("select extract(epoch from a) from t") == ErrorCode::UnknownFunction);
  CHECK(code_of("select cast(a as widget) from t") == ErrorCode::UnsupportedCast);
  CHECK(code_of("select sum(*) from t") == ErrorCode::SyntaxError);
  CHECK(code_of("select a from t where") == ErrorCode::SyntaxError);
  CHECK(code_of("select a from t extra garbage + 1") == ErrorCode::SyntaxError);
  CHECK(code_of("select 'unterminated from t") == ErrorCode::SyntaxError);
  CHECK(code_of("select a from t order by 0") == ErrorCode::SyntaxError);
  CHECK(code_of("select a from t where name like 'a%' escape 'ab'") == ErrorCode::SyntaxError);
}

TEST_CASE("errors carry positions") {
  try {
    parse_query("select a from t where a = 1 or b = 2");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OrNotAllowed);
    CHECK(e.line() == 1);
    CHECK(e.column() == 29);
    CHECK(e.formatted() == "error OR_NOT_ALLOWED at 1:29: OR is not supported");
  }
}
