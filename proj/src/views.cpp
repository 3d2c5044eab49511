#include "chainview/views.hpp"

#include <json.hpp>

#include "chainview/navigator.hpp"

namespace chainview {

namespace {

Field hash_field(std::string name) { return Field{std::move(name), FieldType::Hash, {}}; }
Field date_field() { return Field{"date", FieldType::Date, {}}; }
Field int_field(std::string name) { return Field{std::move(name), FieldType::Integer, {}}; }
Field rate_field() { return Field{"rate", FieldType::Decimal, {}}; }
Field text_field(std::string name) { return Field{std::move(name), FieldType::String, {}}; }
Field hex_field(std::string name) { return Field{std::move(name), FieldType::Hex, {}}; }

void expect_width(const Row& row, const ViewSchema& schema) {
  if (row.size() != schema.fields.size()) {
    throw Error(Errc::UnsupportedSchema, "row width " + std::to_string(row.size()) +
                                             " does not match view " + schema.name);
  }
}

// Per-view bookkeeping shared by the builders.
class Tally {
 public:
  Tally(std::string_view view, RecordSink& sink) : sink_(sink) { report_.view = view; }

  void block(const HeightBlock& hb) {
    if (!report_.first_height) report_.first_height = hb.height;
    report_.last_height = hb.height;
    ++report_.blocks;
    report_.txs += hb.block.txs.size();
  }
  void block(std::uint64_t height, const Block& b) {
    if (!report_.first_height) report_.first_height = height;
    report_.last_height = height;
    ++report_.blocks;
    report_.txs += b.txs.size();
  }
  void emit(const Row& row) {
    sink_.write(row);
    ++report_.records_written;
  }
  Warnings& warnings() { return report_.warnings; }
  ViewReport finish() { return std::move(report_); }

 private:
  RecordSink& sink_;
  ViewReport report_;
};

Date block_date(const Block& block) { return date_of(block.header.time); }

}  // namespace

// Schemas and row conversion ---------------------------------------------------

const ViewSchema& BasicRecord::schema() {
  static const ViewSchema s{
      "myblockchain",
      {hash_field("txHash"), hash_field("blockHash"), date_field(),
       Field{"inputs",
             FieldType::NestedList,
             {hash_field("prevTxHash"), int_field("prevVout"), hex_field("scriptSig")}},
       Field{"outputs", FieldType::NestedList, {int_field("value"), hex_field("scriptPubKey")}}}};
  return s;
}

Row BasicRecord::to_row() const {
  std::vector<Row> ins;
  ins.reserve(inputs.size());
  for (const auto& i : inputs) ins.push_back(Row{i.prevTxHash, i.prevVout, i.scriptSig});
  std::vector<Row> outs;
  outs.reserve(outputs.size());
  for (const auto& o : outputs) outs.push_back(Row{o.value, o.scriptPubKey});
  return Row{txHash, blockHash, date.to_string(), std::move(ins), std::move(outs)};
}

BasicRecord BasicRecord::from_row(const Row& row) {
  expect_width(row, schema());
  BasicRecord r;
  r.txHash = row[0].as_string();
  r.blockHash = row[1].as_string();
  r.date = Date::parse(row[2].as_string());
  for (const auto& i : row[3].as_rows()) {
    r.inputs.push_back(BasicInput{i.at(0).as_string(), i.at(1).as_int(), i.at(2).as_string()});
  }
  for (const auto& o : row[4].as_rows()) {
    r.outputs.push_back(BasicOutput{o.at(0).as_int(), o.at(1).as_string()});
  }
  return r;
}

const ViewSchema& OpReturnRecord::schema() {
  static const ViewSchema s{
      "opreturnoutputs",
      {hash_field("txHash"), date_field(), text_field("protocol"), hex_field("metadata")}};
  return s;
}

Row OpReturnRecord::to_row() const { return Row{txHash, date.to_string(), protocol, metadata}; }

OpReturnRecord OpReturnRecord::from_row(const Row& row) {
  expect_width(row, schema());
  return OpReturnRecord{row[0].as_string(), Date::parse(row[1].as_string()), row[2].as_string(),
                        row[3].as_string()};
}

const ViewSchema& RatesRecord::schema() {
  static const ViewSchema s{
      "txwithrates", {hash_field("txHash"), date_field(), int_field("outputSum"), rate_field()}};
  return s;
}

Row RatesRecord::to_row() const { return Row{txHash, date.to_string(), outputSum, rate}; }

RatesRecord RatesRecord::from_row(const Row& row) {
  expect_width(row, schema());
  return RatesRecord{row[0].as_string(), Date::parse(row[1].as_string()), row[2].as_int(),
                     row[3].as_rate()};
}

const ViewSchema& FeesRecord::schema() {
  static const ViewSchema s{"txwithfees",
                            {hash_field("blockHash"), hash_field("txHash"), int_field("fee"),
                             date_field(), rate_field()}};
  return s;
}

Row FeesRecord::to_row() const { return Row{blockHash, txHash, fee, date.to_string(), rate}; }

FeesRecord FeesRecord::from_row(const Row& row) {
  expect_width(row, schema());
  return FeesRecord{row[0].as_string(), row[1].as_string(), row[2].as_int(),
                    Date::parse(row[3].as_string()), row[4].as_rate()};
}

const ViewSchema& TagsRecord::schema() {
  static const ViewSchema s{"tagsoutputs",
                            {hash_field("txHash"), date_field(), int_field("value"),
                             text_field("address"), text_field("tag")}};
  return s;
}

Row TagsRecord::to_row() const { return Row{txHash, date.to_string(), value, address, tag}; }

TagsRecord TagsRecord::from_row(const Row& row) {
  expect_width(row, schema());
  return TagsRecord{row[0].as_string(), Date::parse(row[1].as_string()), row[2].as_int(),
                    row[3].as_string(), row[4].as_string()};
}

ViewKind parse_view_kind(std::string_view name) {
  if (name == "basic") return ViewKind::Basic;
  if (name == "opreturn") return ViewKind::OpReturn;
  if (name == "rates") return ViewKind::Rates;
  if (name == "fees") return ViewKind::Fees;
  if (name == "tags") return ViewKind::Tags;
  throw Error(Errc::ParseError, "unknown view '" + std::string(name) + "'");
}

std::string_view view_name(ViewKind kind) {
  switch (kind) {
    case ViewKind::Basic: return "basic";
    case ViewKind::OpReturn: return "opreturn";
    case ViewKind::Rates: return "rates";
    case ViewKind::Fees: return "fees";
    case ViewKind::Tags: return "tags";
  }
  return "basic";
}

const ViewSchema& view_schema(ViewKind kind) {
  switch (kind) {
    case ViewKind::Basic: return BasicRecord::schema();
    case ViewKind::OpReturn: return OpReturnRecord::schema();
    case ViewKind::Rates: return RatesRecord::schema();
    case ViewKind::Fees: return FeesRecord::schema();
    case ViewKind::Tags: return TagsRecord::schema();
  }
  return BasicRecord::schema();
}

std::string view_report_json(const ViewReport& report) {
  nlohmann::ordered_json doc;
  doc["view"] = report.view;
  doc["records_written"] = report.records_written;
  doc["blocks"] = report.blocks;
  doc["txs"] = report.txs;
  doc["first_height"] = nullptr;
  doc["last_height"] = nullptr;
  if (report.first_height) doc["first_height"] = *report.first_height;
  if (report.last_height) doc["last_height"] = *report.last_height;
  auto warnings = nlohmann::ordered_json::array();
  for (const auto& w : report.warnings) {
    nlohmann::ordered_json item;
    item["code"] = errc_name(w.code);
    item["message"] = w.message;
    if (w.position) item["position"] = *w.position;
    warnings.push_back(std::move(item));
  }
  doc["warnings"] = std::move(warnings);
  return doc.dump();
}

// Builders -------------------------------------------------------------------

ViewReport build_basic(ChainSource& source, const ScanRange& range, RecordSink& sink) {
  Tally tally("basic", sink);
  BlockStream stream = iterate(source, range.start, range.end);
  while (auto hb = stream.next()) {
    tally.block(*hb);
    const std::string block_hash = hb->block.hash.to_display_hex();
    const Date date = block_date(hb->block);
    for (const auto& tx : hb->block.txs) {
      BasicRecord rec;
      rec.txHash = tx.txid.to_display_hex();
      rec.blockHash = block_hash;
      rec.date = date;
      for (const auto& in : tx.inputs) {
        rec.inputs.push_back(BasicInput{in.prevout.txid.to_display_hex(),
                                        static_cast<std::int64_t>(in.prevout.vout),
                                        in.script_sig.to_hex()});
      }
      for (const auto& out : tx.outputs) {
        rec.outputs.push_back(BasicOutput{out.value.satoshi, out.script_pubkey.to_hex()});
      }
      tally.emit(rec.to_row());
    }
  }
  return tally.finish();
}

ViewReport build_opreturn(ChainSource& source, const ScanRange& range,
                          const ProtocolTable& protocols, RecordSink& sink) {
  Tally tally("opreturn", sink);
  ScanRange effective = range;
  if (!effective.start) {
    const std::uint64_t best = source.best_height();
    effective.start = kOpReturnDefaultStart;
    if (kOpReturnDefaultStart > best) {
      effective.start = best;
      tally.warnings().push_back(Warning{Errc::Clamped,
                                         "default start 290000 beyond tip; clamped to " +
                                             std::to_string(best),
                                         best});
    }
  }
  BlockStream stream = iterate(source, effective.start, effective.end);
  while (auto hb = stream.next()) {
    tally.block(*hb);
    const Date date = block_date(hb->block);
    for (const auto& tx : hb->block.txs) {
      for (std::uint32_t k = 0; k < tx.outputs.size(); ++k) {
        const Script& script = tx.outputs[k].script_pubkey;
        if (!is_op_return(script)) continue;
        OpReturnRecord rec;
        rec.txHash = tx.txid.to_display_hex();
        rec.date = date;
        try {
          const Bytes metadata = extract_metadata(script);
          rec.metadata = to_hex(metadata);
          rec.protocol = protocols.classify(metadata);
        } catch (const Error& e) {
          if (e.code() != Errc::MalformedPush) throw;
          rec.metadata = to_hex(ByteView(script.bytes).subspan(1));
          rec.protocol = "unknown";
          tally.warnings().push_back(Warning{Errc::MalformedPush,
                                             "tx " + rec.txHash + " output " + std::to_string(k) +
                                                 ": " + e.detail(),
                                             hb->height});
        }
        tally.emit(rec.to_row());
      }
    }
  }
  return tally.finish();
}

ViewReport build_rates(ChainSource& source, const ScanRange& range, const RateTable& rates,
                       RecordSink& sink) {
  Tally tally("rates", sink);
  BlockStream stream = iterate(source, range.start, range.end);
  while (auto hb = stream.next()) {
    tally.block(*hb);
    const Date date = block_date(hb->block);
    Rate rate;
    try {
      rate = rates.get(date);
    } catch (const Error& e) {
      throw Error(e.code(), "at height " + std::to_string(hb->height) + ": " + e.detail(),
                  hb->height);
    }
    for (const auto& tx : hb->block.txs) {
      RatesRecord rec{tx.txid.to_display_hex(), date, output_sum(tx).satoshi, rate};
      tally.emit(rec.to_row());
    }
  }
  return tally.finish();
}

ViewReport build_fees(ChainSource& source, std::optional<std::uint64_t> end,
                      const RateTable& rates, RecordSink& sink) {
  Tally tally("fees", sink);
  ScanReport scan = deep_scan(
      source, 0, end,
      [&](std::uint64_t height, const Block& block, std::span<const TxValuation> values) {
        tally.block(height, block);
        const Date date = block_date(block);
        const Rate rate = rates.get(date);
        const std::string block_hash = block.hash.to_display_hex();
        for (const auto& v : values) {
          FeesRecord rec{block_hash, v.txid.to_display_hex(), v.fee.satoshi, date, rate};
          tally.emit(rec.to_row());
        }
      });
  auto& w = tally.warnings();
  w.insert(w.end(), scan.warnings.begin(), scan.warnings.end());
  return tally.finish();
}

ViewReport build_tags(ChainSource& source, const ScanRange& range, const TagMap& tags,
                      Network network, RecordSink& sink) {
  Tally tally("tags", sink);
  BlockStream stream = iterate(source, range.start, range.end);
  while (auto hb = stream.next()) {
    tally.block(*hb);
    if (tags.empty()) continue;
    const Date date = block_date(hb->block);
    for (const auto& tx : hb->block.txs) {
      for (const auto& out : tx.outputs) {
        const auto address = address_of(out.script_pubkey, network);
        if (!address) continue;
        const std::string* tag = tags.find(*address);
        if (!tag) continue;
        TagsRecord rec{tx.txid.to_display_hex(), date, out.value.satoshi, *address, *tag};
        tally.emit(rec.to_row());
      }
    }
  }
  return tally.finish();
}

}  // namespace chainview
