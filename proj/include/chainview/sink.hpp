#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chainview/enrichment.hpp"
#include "chainview/error.hpp"

namespace chainview {

enum class FieldType { Hash, Date, Integer, Decimal, String, Hex, NestedList };

struct Field {
  std::string name;
  FieldType type = FieldType::String;
  std::vector<Field> nested;  // element layout for NestedList
};

struct ViewSchema {
  std::string name;  // also the SQL table name
  std::vector<Field> fields;

  bool has_nested() const;
  std::vector<std::string> field_names() const;
};

// Generic record cell. Hash, Date, String and Hex fields hold strings (already
// rendered: display-order hex, YYYY-MM-DD); Integer holds int64; Decimal holds
// a Rate; NestedList holds sub-rows laid out by Field::nested.
struct Value;
using Row = std::vector<Value>;

struct Value : std::variant<std::int64_t, Rate, std::string, std::vector<Row>> {
  using variant::variant;

  std::int64_t as_int() const { return std::get<std::int64_t>(*this); }
  Rate as_rate() const { return std::get<Rate>(*this); }
  const std::string& as_string() const { return std::get<std::string>(*this); }
  const std::vector<Row>& as_rows() const { return std::get<std::vector<Row>>(*this); }
};

/// open(schema) -> write(row)* -> close(). Single writer.
class RecordSink {
 public:
  virtual ~RecordSink() = default;

  virtual void open(const ViewSchema& schema) = 0;
  virtual void write(const Row& row) = 0;
  virtual void close() = 0;

  std::uint64_t records_written() const { return written_; }

 protected:
  std::uint64_t written_ = 0;
};

enum class SinkKind { Jsonl, Csv, Sql };

SinkKind parse_sink_kind(std::string_view name);
std::string_view sink_extension(SinkKind kind);

/// JSON object per line, keys in schema order, LF line ends.
std::unique_ptr<RecordSink> document_sink(std::filesystem::path path);
/// RFC 4180 with a header row. open() rejects nested-list schemas.
std::unique_ptr<RecordSink> csv_sink(std::filesystem::path path);
/// CREATE TABLE then multi-row INSERTs of at most `batch_size` rows.
std::unique_ptr<RecordSink> sql_sink(std::filesystem::path path, std::size_t batch_size = 500);
std::unique_ptr<RecordSink> make_sink(SinkKind kind, std::filesystem::path path);

/// Keeps rows in memory; used by tests and for in-process analytics.
class MemorySink : public RecordSink {
 public:
  void open(const ViewSchema& schema) override;
  void write(const Row& row) override;
  void close() override { closed_ = true; }

  const ViewSchema& schema() const { return schema_; }
  const std::vector<Row>& rows() const { return rows_; }

 private:
  ViewSchema schema_;
  std::vector<Row> rows_;
  bool opened_ = false;
  bool closed_ = false;
};

/// Forwards each row to a callback.
class CallbackSink : public RecordSink {
 public:
  explicit CallbackSink(std::function<void(const Row&)> fn) : fn_(std::move(fn)) {}

  void open(const ViewSchema&) override {}
  void write(const Row& row) override {
    fn_(row);
    ++written_;
  }
  void close() override {}

 private:
  std::function<void(const Row&)> fn_;
};

// Readers --------------------------------------------------------------------------

using RowCallback = std::function<void(Row&&)>;

void read_document(const std::filesystem::path& path, const ViewSchema& schema,
                   const RowCallback& fn);
void read_csv(const std::filesystem::path& path, const ViewSchema& schema, const RowCallback& fn);
/// Executes the SQL script in an in-memory SQLite database and reads the
/// schema's table back in insertion order.
void read_sql(const std::filesystem::path& path, const ViewSchema& schema, const RowCallback& fn);
/// Dispatches on extension: .jsonl/.json, .csv, .sql.
void read_records(const std::filesystem::path& path, const ViewSchema& schema,
                  const RowCallback& fn);

// Cell rendering shared by writers and tests.
std::string csv_escape(std::string_view field);
std::string sql_quote(std::string_view text);
std::string sql_type(FieldType type);

}  // namespace chainview
