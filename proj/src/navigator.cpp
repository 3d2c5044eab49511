#include "chainview/navigator.hpp"

#include <json.hpp>

namespace chainview {

void UtxoMap::insert(const OutPoint& outpoint, Amount value) {
  entries_.insert_or_assign(outpoint, value);
  ++stats_.inserts;
  stats_.peak_size = std::max<std::uint64_t>(stats_.peak_size, entries_.size());
}

std::optional<Amount> UtxoMap::find(const OutPoint& outpoint) const {
  auto it = entries_.find(outpoint);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<Amount> UtxoMap::take(const OutPoint& outpoint) {
  auto it = entries_.find(outpoint);
  if (it == entries_.end()) return std::nullopt;
  const Amount v = it->second;
  entries_.erase(it);
  ++stats_.removals;
  return v;
}

Amount block_subsidy(std::uint64_t height) {
  const std::uint64_t halvings = height / kHalvingInterval;
  if (halvings >= 64) return Amount{0};
  return Amount{kInitialSubsidy.satoshi >> halvings};
}

Amount output_sum(const Transaction& tx) {
  Amount sum;
  for (const auto& o : tx.outputs) sum += o.value;
  return sum;
}

namespace {

Error missing_prevout(const Transaction& tx, const OutPoint& p) {
  return Error(Errc::MissingPrevout, "tx " + tx.txid.to_display_hex() + " spends unknown output " +
                                         p.txid.to_display_hex() + ":" + std::to_string(p.vout));
}

}  // namespace

Amount input_sum(const Transaction& tx, const UtxoMap& utxo) {
  Amount sum;
  for (const auto& in : tx.inputs) {
    if (in.prevout.is_coinbase_sentinel()) continue;
    const auto v = utxo.find(in.prevout);
    if (!v) throw missing_prevout(tx, in.prevout);
    sum += *v;
  }
  return sum;
}

std::vector<TxValuation> valuate_block(const Block& block, std::uint64_t height, UtxoMap& utxo,
                                       Warnings* warnings) {
  std::vector<TxValuation> out;
  out.reserve(block.txs.size());
  Amount fees;
  std::optional<std::size_t> coinbase_slot;
  for (std::size_t i = 0; i < block.txs.size(); ++i) {
    const Transaction& tx = block.txs[i];
    TxValuation v;
    v.txid = tx.txid;
    v.output_sum = output_sum(tx);
    if (i == 0 && tx.is_coinbase()) {
      v.is_coinbase = true;
      coinbase_slot = i;
    } else {
      for (const auto& in : tx.inputs) {
        const auto spent = utxo.take(in.prevout);
        if (!spent) throw missing_prevout(tx, in.prevout);
        v.input_sum += *spent;
      }
      v.fee = v.input_sum - v.output_sum;
      if (v.fee.satoshi < 0) {
        v.negative_fee = true;
        if (warnings) {
          warnings->push_back(Warning{Errc::NegativeFee,
                                      "tx " + tx.txid.to_display_hex() + " pays " +
                                          std::to_string(v.fee.satoshi) + " sat",
                                      height});
        }
      } else {
        fees += v.fee;
      }
    }
    for (std::uint32_t k = 0; k < tx.outputs.size(); ++k) {
      utxo.insert(OutPoint{tx.txid, k}, tx.outputs[k].value);
    }
    out.push_back(v);
  }
  if (coinbase_slot) {
    auto& cb = out[*coinbase_slot];
    cb.input_sum = block_subsidy(height) + fees;
    cb.fee = Amount{0};
  }
  return out;
}

ScanReport deep_scan(ChainSource& source, std::optional<std::uint64_t> start,
                     std::optional<std::uint64_t> end, const ScanVisitor& visitor) {
  if (start.value_or(0) != 0) {
    throw Error(Errc::Precondition,
                "deep scan must start at height 0 to resolve input values (requested " +
                    std::to_string(*start) + ")",
                *start);
  }
  BlockStream stream = iterate(source, 0, end);
  UtxoMap utxo;
  ScanReport report;
  while (auto hb = stream.next()) {
    std::vector<TxValuation> values;
    try {
      values = valuate_block(hb->block, hb->height, utxo, &report.warnings);
    } catch (const Error& e) {
      throw Error(e.code(), "at height " + std::to_string(hb->height) + ": " + e.detail(),
                  hb->height);
    }
    if (visitor) {
      try {
        visitor(hb->height, hb->block, values);
      } catch (const Error& e) {
        throw Error(e.code(), "visitor failed at height " + std::to_string(hb->height) + ": " +
                                  e.detail(),
                    hb->height);
      } catch (const std::exception& e) {
        throw Error(Errc::VisitorFailed,
                    "at height " + std::to_string(hb->height) + ": " + e.what(), hb->height);
      }
    }
    ++report.blocks;
    report.txs += hb->block.txs.size();
  }
  report.utxo_stats = utxo.stats();
  report.utxo_peak = utxo.stats().peak_size;
  report.utxo_size = utxo.size();
  return report;
}

std::string scan_report_json(const ScanReport& report) {
  nlohmann::ordered_json doc;
  doc["blocks"] = report.blocks;
  doc["txs"] = report.txs;
  doc["utxo_peak"] = report.utxo_peak;
  doc["warnings"] = report.warnings.size();
  return doc.dump();
}

}  // namespace chainview
