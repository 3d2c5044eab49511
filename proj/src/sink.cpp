#include "chainview/sink.hpp"

#include <sstream>

#include <json.hpp>
#include <sqlite3.h>

namespace chainview {

namespace {

using nlohmann::json;

void require_open(bool opened, bool closed, std::string_view op) {
  if (!opened) throw Error(Errc::SinkState, std::string(op) + " before open()");
  if (closed) throw Error(Errc::SinkState, std::string(op) + " after close()");
}

void check_row(const ViewSchema& schema, const Row& row) {
  if (row.size() != schema.fields.size()) {
    throw Error(Errc::UnsupportedSchema, "row has " + std::to_string(row.size()) +
                                             " cells, schema " + schema.name + " has " +
                                             std::to_string(schema.fields.size()));
  }
}

void append_json_value(std::string& out, const Field& field, const Value& v);

void append_json_object(std::string& out, const std::vector<Field>& fields, const Row& row) {
  out += '{';
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += json(fields[i].name).dump();
    out += ':';
    append_json_value(out, fields[i], row.at(i));
  }
  out += '}';
}

void append_json_value(std::string& out, const Field& field, const Value& v) {
  switch (field.type) {
    case FieldType::Integer: out += std::to_string(v.as_int()); break;
    case FieldType::Decimal: out += v.as_rate().to_string(); break;
    case FieldType::NestedList: {
      out += '[';
      const auto& rows = v.as_rows();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) out += ',';
        append_json_object(out, field.nested, rows[i]);
      }
      out += ']';
      break;
    }
    default: out += json(v.as_string()).dump(); break;
  }
}

Value value_from_json(const Field& field, const json& j) {
  switch (field.type) {
    case FieldType::Integer: return j.get<std::int64_t>();
    case FieldType::Decimal:
      if (j.is_string()) return Rate::parse(j.get<std::string>());
      return Rate::from_double(j.get<double>());
    case FieldType::NestedList: {
      std::vector<Row> rows;
      for (const auto& item : j) {
        Row r;
        for (const auto& sub : field.nested) r.push_back(value_from_json(sub, item.at(sub.name)));
        rows.push_back(std::move(r));
      }
      return rows;
    }
    default: return j.get<std::string>();
  }
}

Value value_from_text(const Field& field, std::string_view text) {
  try {
    switch (field.type) {
      case FieldType::Integer: {
        std::size_t used = 0;
        const std::string s(text);
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return static_cast<std::int64_t>(v);
      }
      case FieldType::Decimal: return Rate::parse(text);
      case FieldType::NestedList: return value_from_json(field, json::parse(text));
      default: return std::string(text);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::ParseError, "field " + field.name + ": " + e.what());
  }
}

std::string render_text(const Field& field, const Value& v) {
  switch (field.type) {
    case FieldType::Integer: return std::to_string(v.as_int());
    case FieldType::Decimal: return v.as_rate().to_string();
    case FieldType::NestedList: {
      std::string out;
      append_json_value(out, field, v);
      return out;
    }
    default: return v.as_string();
  }
}

class DocumentSink : public RecordSink {
 public:
  explicit DocumentSink(std::filesystem::path path) : path_(std::move(path)) {}

  void open(const ViewSchema& schema) override {
    if (opened_) throw Error(Errc::SinkState, "open() called twice");
    schema_ = schema;
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(Errc::Io, "cannot write " + path_.string());
    opened_ = true;
  }
  void write(const Row& row) override {
    require_open(opened_, closed_, "write()");
    check_row(schema_, row);
    line_.clear();
    append_json_object(line_, schema_.fields, row);
    line_ += '\n';
    out_.write(line_.data(), static_cast<std::streamsize>(line_.size()));
    ++written_;
  }
  void close() override {
    require_open(opened_, closed_, "close()");
    out_.flush();
    if (!out_) throw Error(Errc::Io, "write failed on " + path_.string());
    out_.close();
    closed_ = true;
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  ViewSchema schema_;
  std::string line_;
  bool opened_ = false;
  bool closed_ = false;
};

class CsvSink : public RecordSink {
 public:
  explicit CsvSink(std::filesystem::path path) : path_(std::move(path)) {}

  void open(const ViewSchema& schema) override {
    if (opened_) throw Error(Errc::SinkState, "open() called twice");
    if (schema.has_nested()) {
      throw Error(Errc::UnsupportedSchema,
                  "CSV cannot hold nested-list fields of view " + schema.name);
    }
    schema_ = schema;
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(Errc::Io, "cannot write " + path_.string());
    for (std::size_t i = 0; i < schema_.fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(schema_.fields[i].name);
    }
    out_ << "\r\n";
    opened_ = true;
  }
  void write(const Row& row) override {
    require_open(opened_, closed_, "write()");
    check_row(schema_, row);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(render_text(schema_.fields[i], row[i]));
    }
    out_ << "\r\n";
    ++written_;
  }
  void close() override {
    require_open(opened_, closed_, "close()");
    out_.flush();
    if (!out_) throw Error(Errc::Io, "write failed on " + path_.string());
    out_.close();
    closed_ = true;
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  ViewSchema schema_;
  bool opened_ = false;
  bool closed_ = false;
};

class SqlSink : public RecordSink {
 public:
  SqlSink(std::filesystem::path path, std::size_t batch_size)
      : path_(std::move(path)), batch_size_(batch_size == 0 ? 1 : batch_size) {}

  void open(const ViewSchema& schema) override {
    if (opened_) throw Error(Errc::SinkState, "open() called twice");
    schema_ = schema;
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(Errc::Io, "cannot write " + path_.string());
    out_ << "CREATE TABLE " << schema_.name << " (\n";
    for (std::size_t i = 0; i < schema_.fields.size(); ++i) {
      out_ << "  " << schema_.fields[i].name << ' ' << sql_type(schema_.fields[i].type)
           << (i + 1 < schema_.fields.size() ? ",\n" : "\n");
    }
    out_ << ");\n";
    columns_.clear();
    for (std::size_t i = 0; i < schema_.fields.size(); ++i) {
      if (i) columns_ += ", ";
      columns_ += schema_.fields[i].name;
    }
    opened_ = true;
  }
  void write(const Row& row) override {
    require_open(opened_, closed_, "write()");
    check_row(schema_, row);
    std::string tuple = "(";
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) tuple += ", ";
      const Field& f = schema_.fields[i];
      if (f.type == FieldType::Integer || f.type == FieldType::Decimal) {
        tuple += render_text(f, row[i]);
      } else {
        tuple += sql_quote(render_text(f, row[i]));
      }
    }
    tuple += ')';
    pending_.push_back(std::move(tuple));
    ++written_;
    if (pending_.size() >= batch_size_) flush_batch();
  }
  void close() override {
    require_open(opened_, closed_, "close()");
    flush_batch();
    out_.flush();
    if (!out_) throw Error(Errc::Io, "write failed on " + path_.string());
    out_.close();
    closed_ = true;
  }

 private:
  void flush_batch() {
    if (pending_.empty()) return;
    out_ << "INSERT INTO " << schema_.name << " (" << columns_ << ") VALUES\n";
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      out_ << pending_[i] << (i + 1 < pending_.size() ? ",\n" : ";\n");
    }
    pending_.clear();
  }

  std::filesystem::path path_;
  std::size_t batch_size_;
  std::ofstream out_;
  ViewSchema schema_;
  std::string columns_;
  std::vector<std::string> pending_;
  bool opened_ = false;
  bool closed_ = false;
};

// RFC 4180 reader over the whole file.
class CsvParser {
 public:
  explicit CsvParser(std::string text) : text_(std::move(text)) {}

  // Returns false at end of input.
  bool next(std::vector<std::string>& fields) {
    fields.clear();
    if (pos_ >= text_.size()) return false;
    std::string cell;
    bool quoted = false;
    for (;;) {
      if (pos_ >= text_.size()) {
        if (quoted) throw Error(Errc::ParseError, "unterminated quoted CSV field", line_);
        fields.push_back(std::move(cell));
        return true;
      }
      const char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            cell += '"';
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          cell += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(cell));
        cell.clear();
      } else if (c == '\r' || c == '\n') {
        if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
        ++line_;
        fields.push_back(std::move(cell));
        return true;
      } else {
        cell += c;
      }
    }
  }
  std::uint64_t line() const { return line_; }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::uint64_t line_ = 1;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

bool ViewSchema::has_nested() const {
  for (const auto& f : fields) {
    if (f.type == FieldType::NestedList) return true;
  }
  return false;
}

std::vector<std::string> ViewSchema::field_names() const {
  std::vector<std::string> out;
  for (const auto& f : fields) out.push_back(f.name);
  return out;
}

SinkKind parse_sink_kind(std::string_view name) {
  if (name == "jsonl" || name == "document") return SinkKind::Jsonl;
  if (name == "csv") return SinkKind::Csv;
  if (name == "sql") return SinkKind::Sql;
  throw Error(Errc::ParseError, "unknown sink '" + std::string(name) + "'");
}

std::string_view sink_extension(SinkKind kind) {
  switch (kind) {
    case SinkKind::Jsonl: return ".jsonl";
    case SinkKind::Csv: return ".csv";
    case SinkKind::Sql: return ".sql";
  }
  return ".jsonl";
}

std::unique_ptr<RecordSink> document_sink(std::filesystem::path path) {
  return std::make_unique<DocumentSink>(std::move(path));
}

std::unique_ptr<RecordSink> csv_sink(std::filesystem::path path) {
  return std::make_unique<CsvSink>(std::move(path));
}

std::unique_ptr<RecordSink> sql_sink(std::filesystem::path path, std::size_t batch_size) {
  return std::make_unique<SqlSink>(std::move(path), batch_size);
}

std::unique_ptr<RecordSink> make_sink(SinkKind kind, std::filesystem::path path) {
  switch (kind) {
    case SinkKind::Jsonl: return document_sink(std::move(path));
    case SinkKind::Csv: return csv_sink(std::move(path));
    case SinkKind::Sql: return sql_sink(std::move(path));
  }
  return document_sink(std::move(path));
}

void MemorySink::open(const ViewSchema& schema) {
  if (opened_) throw Error(Errc::SinkState, "open() called twice");
  schema_ = schema;
  opened_ = true;
}

void MemorySink::write(const Row& row) {
  require_open(opened_, closed_, "write()");
  check_row(schema_, row);
  rows_.push_back(row);
  ++written_;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string sql_quote(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

std::string sql_type(FieldType type) {
  switch (type) {
    case FieldType::Hash: return "CHAR(64)";
    case FieldType::Date: return "DATE";
    case FieldType::Integer: return "BIGINT";
    case FieldType::Decimal: return "DECIMAL(16,8)";
    case FieldType::String:
    case FieldType::Hex:
    case FieldType::NestedList: return "TEXT";
  }
  return "TEXT";
}

// Readers ------------------------------------------------------------------------

void read_document(const std::filesystem::path& path, const ViewSchema& schema,
                   const RowCallback& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json doc = json::parse(line);
      Row row;
      row.reserve(schema.fields.size());
      for (const auto& f : schema.fields) row.push_back(value_from_json(f, doc.at(f.name)));
      fn(std::move(row));
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError, path.string() + ": " + e.what(), line_no);
    }
  }
}

void read_csv(const std::filesystem::path& path, const ViewSchema& schema, const RowCallback& fn) {
  CsvParser parser(slurp(path));
  std::vector<std::string> cells;
  if (!parser.next(cells)) return;
  if (cells != schema.field_names()) {
    throw Error(Errc::UnsupportedSchema,
                path.string() + ": header does not match view " + schema.name);
  }
  while (parser.next(cells)) {
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != schema.fields.size()) {
      throw Error(Errc::ParseError, path.string() + ": wrong number of fields", parser.line());
    }
    Row row;
    row.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      row.push_back(value_from_text(schema.fields[i], cells[i]));
    }
    fn(std::move(row));
  }
}

void read_sql(const std::filesystem::path& path, const ViewSchema& schema, const RowCallback& fn) {
  const std::string script = slurp(path);
  sqlite3* raw = nullptr;
  if (sqlite3_open(":memory:", &raw) != SQLITE_OK) {
    sqlite3_close(raw);
    throw Error(Errc::Io, "cannot open in-memory SQLite database");
  }
  std::unique_ptr<sqlite3, decltype(&sqlite3_close)> db(raw, &sqlite3_close);
  char* err = nullptr;
  if (sqlite3_exec(db.get(), script.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(Errc::ParseError, path.string() + ": " + msg);
  }
  std::string query = "SELECT ";
  for (std::size_t i = 0; i < schema.fields.size(); ++i) {
    if (i) query += ", ";
    query += schema.fields[i].name;
  }
  query += " FROM " + schema.name + " ORDER BY rowid";
  sqlite3_stmt* stmt_raw = nullptr;
  if (sqlite3_prepare_v2(db.get(), query.c_str(), -1, &stmt_raw, nullptr) != SQLITE_OK) {
    throw Error(Errc::ParseError, std::string("SQLite: ") + sqlite3_errmsg(db.get()));
  }
  std::unique_ptr<sqlite3_stmt, decltype(&sqlite3_finalize)> stmt(stmt_raw, &sqlite3_finalize);
  int rc;
  while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    Row row;
    row.reserve(schema.fields.size());
    for (std::size_t i = 0; i < schema.fields.size(); ++i) {
      const int col = static_cast<int>(i);
      const Field& f = schema.fields[i];
      switch (f.type) {
        case FieldType::Integer: row.emplace_back(std::int64_t{sqlite3_column_int64(stmt.get(), col)}); break;
        case FieldType::Decimal: row.emplace_back(Rate::from_double(sqlite3_column_double(stmt.get(), col))); break;
        default: {
          const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), col));
          row.push_back(value_from_text(f, text ? text : ""));
        }
      }
    }
    fn(std::move(row));
  }
  if (rc != SQLITE_DONE) {
    throw Error(Errc::ParseError, std::string("SQLite: ") + sqlite3_errmsg(db.get()));
  }
}

void read_records(const std::filesystem::path& path, const ViewSchema& schema,
                  const RowCallback& fn) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return read_csv(path, schema, fn);
  if (ext == ".sql") return read_sql(path, schema, fn);
  return read_document(path, schema, fn);
}

}  // namespace chainview
