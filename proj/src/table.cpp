#include "anonql/table.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "anonql/error.hpp"

namespace anonql {

std::optional<size_t> Schema::find(std::string_view name) const {
  for (size_t i = 0; i < columns.size(); i++) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<Value> Table::distinct_uids() const {
  std::vector<Value> out;
  std::set<std::string> seen;
  for (const Row& row : rows) {
    std::string key = canonical(row[schema.uid_index]);
    if (seen.insert(std::move(key)).second) out.push_back(row[schema.uid_index]);
  }
  return out;
}

std::vector<const Row*> Table::scan(const std::function<bool(const Row&)>& predicate) const {
  std::vector<const Row*> out;
  for (const Row& row : rows) {
    if (predicate(row)) out.push_back(&row);
  }
  return out;
}

static std::string trim_ws(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) b++;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) e--;
  return std::string(s.substr(b, e - b));
}

Schema parse_schema(std::string_view text) {
  Schema schema;
  std::optional<size_t> uid;
  size_t lineno = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    lineno++;
    std::string stripped = trim_ws(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t colon = stripped.find(':', start);
      if (colon == std::string::npos) {
        fields.push_back(trim_ws(std::string_view(stripped).substr(start)));
        break;
      }
      fields.push_back(trim_ws(std::string_view(stripped).substr(start, colon - start)));
      start = colon + 1;
    }
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty())
      throw Error(ErrorCode::DataFormat,
                  "schema line " + std::to_string(lineno) + ": expected name:type[:uid]");
    auto type = type_from_name(fields[1]);
    if (!type)
      throw Error(ErrorCode::DataFormat,
                  "schema line " + std::to_string(lineno) + ": unknown type '" + fields[1] + "'");
    if (schema.find(fields[0]))
      throw Error(ErrorCode::DataFormat, "schema: duplicate column '" + fields[0] + "'");
    if (fields.size() == 3) {
      if (fields[2] != "uid")
        throw Error(ErrorCode::DataFormat,
                    "schema line " + std::to_string(lineno) + ": third field must be 'uid'");
      if (uid)
        throw Error(ErrorCode::DataFormat, "schema: more than one uid column");
      uid = schema.columns.size();
    }
    schema.columns.push_back({fields[0], *type});
  }
  if (schema.columns.empty()) throw Error(ErrorCode::DataFormat, "schema: no columns");
  if (!uid) throw Error(ErrorCode::DataFormat, "schema: no uid column marked");
  schema.uid_index = *uid;
  return schema;
}

namespace {

struct CsvField {
  std::string text;
  bool quoted = false;
};

/// Splits RFC 4180 input into records; tolerates LF and CRLF endings.
class CsvReader {
 public:
  explicit CsvReader(std::string_view text) : text_(text) {}

  bool next_record(std::vector<CsvField>& out) {
    out.clear();
    if (pos_ >= text_.size()) return false;
    CsvField field;
    bool in_quotes = false;
    bool any = false;
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      if (in_quotes) {
        if (ch == '"') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
            field.text.push_back('"');
            pos_ += 2;
          } else {
            in_quotes = false;
            pos_++;
          }
        } else {
          field.text.push_back(ch);
          pos_++;
        }
        continue;
      }
      if (ch == '"' && field.text.empty() && !field.quoted) {
        in_quotes = true;
        field.quoted = true;
        any = true;
        pos_++;
      } else if (ch == ',') {
        out.push_back(std::move(field));
        field = {};
        any = true;
        pos_++;
      } else if (ch == '\n' || ch == '\r') {
        if (ch == '\r' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') pos_++;
        pos_++;
        out.push_back(std::move(field));
        return true;
      } else {
        field.text.push_back(ch);
        any = true;
        pos_++;
      }
    }
    if (any || !out.empty()) {
      out.push_back(std::move(field));
      return true;
    }
    return false;
  }

  size_t line() const { return line_; }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  size_t line_ = 1;
};

}  // namespace

Table load_csv(std::string_view table_name, std::string_view csv_text, const Schema& schema) {
  Table table;
  table.name = std::string(table_name);
  table.schema = schema;
  CsvReader reader(csv_text);
  std::vector<CsvField> record;
  if (!reader.next_record(record))
    throw Error(ErrorCode::DataFormat, "csv: missing header row");
  if (record.size() != schema.columns.size())
    throw Error(ErrorCode::DataFormat, "csv: header has " + std::to_string(record.size()) +
                                           " fields, schema has " +
                                           std::to_string(schema.columns.size()));
  for (size_t i = 0; i < record.size(); i++) {
    if (record[i].text != schema.columns[i].name)
      throw Error(ErrorCode::DataFormat, "csv: header field '" + record[i].text +
                                             "' does not match schema column '" +
                                             schema.columns[i].name + "'");
  }
  size_t line = 1;
  while (reader.next_record(record)) {
    line++;
    if (record.size() == 1 && record[0].text.empty() && !record[0].quoted) continue;
    if (record.size() != schema.columns.size())
      throw Error(ErrorCode::DataFormat,
                  "csv row " + std::to_string(line) + ": expected " +
                      std::to_string(schema.columns.size()) + " fields, found " +
                      std::to_string(record.size()));
    Row row;
    row.reserve(record.size());
    for (size_t i = 0; i < record.size(); i++) {
      const Column& col = schema.columns[i];
      const CsvField& field = record[i];
      if (field.text.empty() && !field.quoted) {
        if (i == schema.uid_index)
          throw Error(ErrorCode::DataFormat,
                      "csv row " + std::to_string(line) + ": uid cell is empty");
        row.emplace_back();
        continue;
      }
      if (field.text.empty() && field.quoted && col.type != ValueType::Text) {
        if (i == schema.uid_index)
          throw Error(ErrorCode::DataFormat,
                      "csv row " + std::to_string(line) + ": uid cell is empty");
        row.emplace_back();
        continue;
      }
      auto value = parse_value(field.text, col.type);
      if (!value)
        throw Error(ErrorCode::DataFormat, "csv row " + std::to_string(line) + ", column '" +
                                               col.name + "': cannot parse '" + field.text +
                                               "' as " + std::string(type_name(col.type)));
      row.push_back(std::move(*value));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DataFormat, "cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Table load_csv_file(std::string_view table_name, const std::string& csv_path,
                    const std::string& schema_path) {
  Schema schema = parse_schema(read_file(schema_path));
  return load_csv(table_name, read_file(csv_path), schema);
}

static void append_csv_cell(std::string& out, const std::string& text, bool force_quote) {
  bool need = force_quote;
  for (char ch : text) {
    if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') {
      need = true;
      break;
    }
  }
  if (!need) {
    out += text;
    return;
  }
  out.push_back('"');
  for (char ch : text) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
}

std::string write_csv(const std::vector<std::string>& header, const std::vector<Row>& rows) {
  std::string out;
  for (size_t i = 0; i < header.size(); i++) {
    if (i) out.push_back(',');
    append_csv_cell(out, header[i], false);
  }
  out.push_back('\n');
  for (const Row& row : rows) {
    for (size_t i = 0; i < row.size(); i++) {
      if (i) out.push_back(',');
      // Quoted empty marks empty text; bare empty is NULL.
      bool empty_text = type_of(row[i]) == ValueType::Text && std::get<std::string>(row[i]).empty();
      append_csv_cell(out, display(row[i]), empty_text);
    }
    out.push_back('\n');
  }
  return out;
}

std::string write_csv(const Table& table) {
  std::vector<std::string> header;
  for (const Column& col : table.schema.columns) header.push_back(col.name);
  return write_csv(header, table.rows);
}

}  // namespace anonql
