#include <doctest.h>

#include "anonql/error.hpp"
#include "anonql/table.hpp"

using namespace anonql;

static const char* kSchemaText =
    "# employee roster\n"
    "emp_id:integer:uid\n"
    "dept:text\n"
    "age:integer\n"
    "salary:real\n";

TEST_CASE("schema sidecar parsing") {
  Schema s = parse_schema(kSchemaText);
  REQUIRE(s.columns.size() == 4);
  CHECK(s.columns[0].name == "emp_id");
  CHECK(s.columns[0].type == ValueType::Integer);
  CHECK(s.columns[1].type == ValueType::Text);
  CHECK(s.columns[3].type == ValueType::Real);
  CHECK(s.uid_index == 0);
  CHECK(s.uid_column().name == "emp_id");
  CHECK(s.find("salary") == 3);
  CHECK_FALSE(s.find("missing").has_value());
}

TEST_CASE("schema sidecar rejects bad input") {
  CHECK_THROWS_AS(parse_schema("a:integer\nb:text\n"), Error);            // no uid column
  CHECK_THROWS_AS(parse_schema("a:integer:uid\nb:text:uid\n"), Error);    // two uid columns
  CHECK_THROWS_AS(parse_schema("a:widget:uid\n"), Error);                 // unknown type
  CHECK_THROWS_AS(parse_schema("a:integer:uid\na:text\n"), Error);        // duplicate name
}

TEST_CASE("csv loading with quoting and nulls") {
  Schema s = parse_schema(kSchemaText);
  std::string csv =
      "emp_id,dept,age,salary\r\n"
      "1,CS,34,100000\r\n"
      "2,\"Sales, North\",41,90000.5\n"
      "3,\"\",29,\n"
      "4,,30,80000\n";
  Table t = load_csv("hr", csv, s);
  REQUIRE(t.row_count() == 4);
  CHECK(t.rows[0][1] == Value(std::string("CS")));
  CHECK(t.rows[1][1] == Value(std::string("Sales, North")));
  CHECK(t.rows[1][3] == Value(90000.5));
  CHECK(t.rows[2][1] == Value(std::string("")));  // quoted empty is empty text
  CHECK(is_null(t.rows[2][3]));                   // unquoted empty is NULL
  CHECK(is_null(t.rows[3][1]));
}

TEST_CASE("csv loading enforces header and uid presence") {
  Schema s = parse_schema(kSchemaText);
  CHECK_THROWS_AS(load_csv("hr", "emp_id,dept,age\n1,CS,34\n", s), Error);
  CHECK_THROWS_AS(load_csv("hr", "emp_id,dept,age,salary\n,CS,34,1\n", s), Error);
  CHECK_THROWS_AS(load_csv("hr", "emp_id,dept,age,salary\n1,CS,x,1\n", s), Error);
}

TEST_CASE("distinct uids keep first-seen order") {
  Schema s = parse_schema("u:text:uid\nv:integer\n");
  Table t = load_csv("t", "u,v\nbob,1\nann,2\nbob,3\ncid,4\nann,5\n", s);
  auto uids = t.distinct_uids();
  REQUIRE(uids.size() == 3);
  CHECK(uids[0] == Value(std::string("bob")));
  CHECK(uids[1] == Value(std::string("ann")));
  CHECK(uids[2] == Value(std::string("cid")));
}

TEST_CASE("csv writer round trip") {
  Schema s = parse_schema(kSchemaText);
  std::string csv =
      "emp_id,dept,age,salary\n"
      "1,\"Sales, North\",34,100000\n"
      "2,\"\",29,\n";
  Table t = load_csv("hr", csv, s);
  std::string out = write_csv(t);
  Table again = load_csv("hr", out, s);
  REQUIRE(again.row_count() == t.row_count());
  for (size_t r = 0; r < t.row_count(); r++)
    for (size_t c = 0; c < 4; c++) CHECK(equals(again.rows[r][c], t.rows[r][c]));
}

TEST_CASE("scan returns matching rows") {
  Schema s = parse_schema("u:integer:uid\nv:integer\n");
  Table t = load_csv("t", "u,v\n1,10\n2,20\n3,30\n", s);
  auto hits = t.scan([](const Row& row) { return std::get<int64_t>(row[1]) >= 20; });
  CHECK(hits.size() == 2);
}
