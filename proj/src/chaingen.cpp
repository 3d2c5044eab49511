#include "chainview/chaingen.hpp"

#include <algorithm>
#include <map>
#include <random>

#include <json.hpp>

#include "chainview/navigator.hpp"
#include "chainview/parser.hpp"

namespace chainview {

namespace {

struct Coin {
  OutPoint outpoint;
  Amount value;
};

class Generator {
 public:
  explicit Generator(const GenSpec& spec) : spec_(spec), rng_(spec.seed) {}

  GeneratedChain run();

 private:
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the draw independent of the library's
    // distribution implementation.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = rng_();
    } while (x >= limit);
    return x % n;
  }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }
  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p;
  }
  Bytes random_bytes(std::size_t n) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng_());
    return b;
  }

  Script random_destination();
  Transaction make_coinbase(std::uint64_t height, Amount total, std::uint8_t variant);
  std::optional<Transaction> make_spend(std::vector<Coin>& in_block, std::uint64_t height,
                                        bool& intra_spend);
  Block assemble(std::uint64_t height, const Hash256& prev, std::vector<Transaction> txs);

  const GenSpec& spec_;
  std::mt19937_64 rng_;
  std::vector<Coin> wallet_;
  std::vector<Script> tag_scripts_;
  std::uint64_t opreturn_outputs_ = 0;
  // Fees of the current block's spends, in block order.
  std::vector<Amount> fee_ledger_;
  GroundTruth truth_;
};

Script Generator::random_destination() {
  switch (below(3)) {
    case 0: return make_p2pkh(random_bytes(20));
    case 1: {
      Bytes pubkey = random_bytes(33);
      pubkey[0] = 0x02 | (pubkey[0] & 1);
      return make_p2pk(pubkey);
    }
    default: return make_p2sh(random_bytes(20));
  }
}

Transaction Generator::make_coinbase(std::uint64_t height, Amount total, std::uint8_t variant) {
  Transaction cb;
  TxInput in;
  in.prevout = OutPoint::coinbase_sentinel();
  // Height push keeps coinbase ids unique across blocks.
  in.script_sig.bytes = {0x04};
  for (int i = 0; i < 4; ++i) in.script_sig.bytes.push_back(static_cast<std::uint8_t>(height >> (8 * i)));
  in.script_sig.bytes.push_back(0x01);
  in.script_sig.bytes.push_back(variant);
  cb.inputs.push_back(std::move(in));
  const int n_out = total.satoshi > 1 && chance(0.5) ? 2 : 1;
  if (n_out == 2) {
    const Amount first{between(1, total.satoshi - 1)};
    cb.outputs.push_back({first, random_destination()});
    cb.outputs.push_back({total - first, random_destination()});
  } else {
    cb.outputs.push_back({total, random_destination()});
  }
  seal(cb);
  return cb;
}

std::optional<Transaction> Generator::make_spend(std::vector<Coin>& in_block, std::uint64_t height,
                                                 bool& intra_spend) {
  const Amount fee{between(spec_.min_fee, spec_.max_fee)};
  std::vector<Coin> spent;
  intra_spend = false;
  if (!in_block.empty() && chance(spec_.intra_block_spend_rate)) {
    const auto k = below(in_block.size());
    spent.push_back(in_block[k]);
    in_block.erase(in_block.begin() + static_cast<std::ptrdiff_t>(k));
    intra_spend = true;
  }
  const std::uint64_t want = 1 + below(spec_.max_inputs);
  while (spent.size() < want && !wallet_.empty()) {
    const auto k = below(wallet_.size());
    spent.push_back(wallet_[k]);
    wallet_[k] = wallet_.back();
    wallet_.pop_back();
  }
  Amount input_sum;
  for (const auto& c : spent) input_sum += c.value;
  if (spent.empty() || input_sum <= fee) {
    // Not enough value; return the coins untouched.
    for (const auto& c : spent) wallet_.push_back(c);
    intra_spend = false;
    return std::nullopt;
  }

  Transaction tx;
  const bool segwit = chance(spec_.segwit_rate);
  tx.version = segwit ? 2 : 1;
  for (const auto& c : spent) {
    TxInput in;
    in.prevout = c.outpoint;
    Bytes sig = random_bytes(72);
    Bytes pub = random_bytes(33);
    pub[0] = 0x02 | (pub[0] & 1);
    if (segwit) {
      in.witness = {std::move(sig), std::move(pub)};
    } else {
      in.script_sig.bytes.push_back(72);
      in.script_sig.bytes.insert(in.script_sig.bytes.end(), sig.begin(), sig.end());
      in.script_sig.bytes.push_back(33);
      in.script_sig.bytes.insert(in.script_sig.bytes.end(), pub.begin(), pub.end());
    }
    tx.inputs.push_back(std::move(in));
  }

  const Amount spend = input_sum - fee;
  std::uint64_t n_out = 1 + below(spec_.max_outputs);
  n_out = std::min<std::uint64_t>(n_out, static_cast<std::uint64_t>(spend.satoshi));
  std::vector<std::int64_t> cuts;
  for (std::uint64_t i = 0; i + 1 < n_out; ++i) cuts.push_back(between(1, spend.satoshi - 1));
  cuts.push_back(0);
  cuts.push_back(spend.satoshi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    tx.outputs.push_back({Amount{cuts[i + 1] - cuts[i]}, random_destination()});
  }
  std::optional<std::size_t> tagged_index;
  if (!tag_scripts_.empty() && chance(spec_.tagged_payment_rate)) {
    tagged_index = below(tx.outputs.size());
    tx.outputs[*tagged_index].script_pubkey = tag_scripts_[below(tag_scripts_.size())];
  }
  std::vector<std::pair<std::size_t, std::string>> planted;
  if (!spec_.opreturn_prefixes.empty() && chance(spec_.opreturn_rate)) {
    const int copies = chance(0.2) ? 2 : 1;
    for (int c = 0; c < copies; ++c) {
      const std::string& prefix = spec_.opreturn_prefixes[below(spec_.opreturn_prefixes.size())];
      Bytes metadata(prefix.begin(), prefix.end());
      const Bytes tail = random_bytes(below(21));
      metadata.insert(metadata.end(), tail.begin(), tail.end());
      const auto at = below(tx.outputs.size() + 1);
      if (tagged_index && at <= *tagged_index) ++*tagged_index;
      for (auto& p : planted) {
        if (at <= p.first) ++p.first;
      }
      tx.outputs.insert(tx.outputs.begin() + static_cast<std::ptrdiff_t>(at),
                        TxOutput{Amount{0}, make_op_return(metadata)});
      planted.emplace_back(at, prefix);
    }
  }
  seal(tx);
  fee_ledger_.push_back(fee);

  for (const auto& [vout, prefix] : planted) {
    truth_.opreturns.push_back(PlantedOpReturn{
        tx.txid, static_cast<std::uint32_t>(vout), height,
        extract_metadata(tx.outputs[vout].script_pubkey), prefix});
  }
  if (tagged_index) {
    const auto& out = tx.outputs[*tagged_index];
    const auto address = *address_of(out.script_pubkey, spec_.network);
    const auto it = std::find_if(truth_.tag_addresses.begin(), truth_.tag_addresses.end(),
                                 [&](const auto& p) { return p.first == address; });
    truth_.tagged_outputs.push_back(PlantedTag{tx.txid, static_cast<std::uint32_t>(*tagged_index),
                                               height, out.value, address, it->second});
  }
  return tx;
}

Block Generator::assemble(std::uint64_t height, const Hash256& prev, std::vector<Transaction> txs) {
  Block block;
  block.header.version = 0x20000000;
  block.header.prev_hash = prev;
  block.header.merkle_root = merkle_root(txs);
  block.header.time = spec_.start_time + static_cast<std::uint32_t>(height) * spec_.time_step;
  block.header.bits = 0x207FFFFF;
  block.header.nonce = static_cast<std::uint32_t>(rng_());
  block.txs = std::move(txs);
  block.hash = block_hash(block.header);
  block.height = height;
  return block;
}

GeneratedChain Generator::run() {
  GeneratedChain out;
  truth_.seed = spec_.seed;
  truth_.network = spec_.network;
  for (std::size_t i = 0; i < spec_.tags.size(); ++i) {
    const std::string& tag = spec_.tags[i].tag;
    const auto h = hash160(ByteView(reinterpret_cast<const std::uint8_t*>(tag.data()), tag.size()));
    Script script = spec_.tags[i].p2sh ? make_p2sh(h) : make_p2pkh(h);
    truth_.tag_addresses.emplace_back(*address_of(script, spec_.network), tag);
    tag_scripts_.push_back(std::move(script));
  }

  const auto magic = network_magic(spec_.network);
  auto emit = [&](const Bytes& payload) {
    append_block_record(out.block_file, magic, payload);
    out.block_file.insert(out.block_file.end(), spec_.record_padding, 0);
  };

  std::map<Date, DateTruth> dates;
  Hash256 prev;
  for (std::uint64_t height = 0; height < spec_.n_blocks; ++height) {
    const std::uint64_t target =
        static_cast<std::uint64_t>(between(spec_.min_txs_per_block, spec_.max_txs_per_block));
    std::vector<Transaction> body;
    std::vector<TxTruth> body_truth;
    std::vector<Coin> in_block;
    for (std::uint64_t i = 0; i < target; ++i) {
      bool intra = false;
      auto tx = make_spend(in_block, height, intra);
      if (!tx) continue;
      if (intra) ++truth_.intra_block_spends;
      if (tx->has_witness()) ++truth_.segwit_txs;
      TxTruth t;
      t.txid = tx->txid;
      t.height = height;
      t.output_sum = output_sum(*tx);
      t.fee = Amount{0};
      t.n_inputs = static_cast<std::uint32_t>(tx->inputs.size());
      t.n_outputs = static_cast<std::uint32_t>(tx->outputs.size());
      body_truth.push_back(t);
      for (std::uint32_t v = 0; v < tx->outputs.size(); ++v) {
        if (is_op_return(tx->outputs[v].script_pubkey)) {
          ++opreturn_outputs_;
        } else {
          in_block.push_back(Coin{OutPoint{tx->txid, v}, tx->outputs[v].value});
        }
      }
      body.push_back(std::move(*tx));
    }
    const Amount subsidy = block_subsidy(height);
    std::vector<Transaction> txs;
    txs.reserve(body.size() + 1);
    txs.push_back(Transaction{});
    for (auto& tx : body) txs.push_back(std::move(tx));
    Amount fees;
    for (const auto& f : fee_ledger_) fees += f;
    txs[0] = make_coinbase(height, subsidy + fees, 0);

    Block block = assemble(height, prev, std::move(txs));
    for (std::uint32_t v = 0; v < block.txs[0].outputs.size(); ++v) {
      wallet_.push_back(Coin{OutPoint{block.txs[0].txid, v}, block.txs[0].outputs[v].value});
    }
    wallet_.insert(wallet_.end(), in_block.begin(), in_block.end());

    TxTruth cb;
    cb.txid = block.txs[0].txid;
    cb.height = height;
    cb.coinbase = true;
    cb.input_sum = subsidy + fees;
    cb.output_sum = subsidy + fees;
    cb.n_inputs = 1;
    cb.n_outputs = static_cast<std::uint32_t>(block.txs[0].outputs.size());
    truth_.txs.push_back(cb);
    for (std::size_t i = 0; i < body_truth.size(); ++i) {
      body_truth[i].fee = fee_ledger_[i];
      body_truth[i].input_sum = body_truth[i].output_sum + fee_ledger_[i];
      truth_.txs.push_back(body_truth[i]);
    }
    fee_ledger_.clear();

    BlockTruth bt;
    bt.height = height;
    bt.hash = block.hash;
    bt.date = date_of(block.header.time);
    bt.subsidy = subsidy;
    bt.fees = fees;
    bt.n_txs = static_cast<std::uint32_t>(block.txs.size());
    bt.live_utxos = wallet_.size() + opreturn_outputs_;
    truth_.blocks.push_back(bt);

    auto& day = dates[bt.date];
    day.date = bt.date;
    day.fees += fees;
    for (const auto& tx : block.txs) {
      ++day.txs;
      day.inputs += tx.inputs.size();
      day.outputs += tx.outputs.size();
    }

    Bytes payload = serialize(block);
    emit(payload);
    out.blocks.push_back(std::move(payload));

    if (spec_.fork_at && *spec_.fork_at == height) {
      std::vector<Transaction> side_txs;
      side_txs.push_back(make_coinbase(height, subsidy, 1));
      Block side = assemble(height, prev, std::move(side_txs));
      truth_.orphans.push_back(side.hash);
      Bytes side_payload = serialize(side);
      emit(side_payload);
      out.orphan_blocks.push_back(std::move(side_payload));
    }
    prev = block.hash;
  }
  for (auto& [date, d] : dates) truth_.dates.push_back(d);
  out.truth = std::move(truth_);
  return out;
}

}  // namespace

GeneratedChain generate(const GenSpec& spec) {
  if (spec.n_blocks == 0) throw Error(Errc::InvalidSpec, "n_blocks must be positive");
  if (spec.min_txs_per_block > spec.max_txs_per_block) {
    throw Error(Errc::InvalidSpec, "min_txs_per_block exceeds max_txs_per_block");
  }
  if (spec.min_fee < 0 || spec.min_fee > spec.max_fee) {
    throw Error(Errc::InvalidSpec, "fee range must satisfy 0 <= min <= max");
  }
  if (spec.max_inputs == 0 || spec.max_outputs == 0) {
    throw Error(Errc::InvalidSpec, "max_inputs and max_outputs must be positive");
  }
  if (spec.fork_at && (*spec.fork_at == 0 || *spec.fork_at >= spec.n_blocks)) {
    throw Error(Errc::InvalidSpec, "fork_at must lie in [1, n_blocks)");
  }
  for (double p : {spec.opreturn_rate, spec.tagged_payment_rate, spec.intra_block_spend_rate,
                   spec.segwit_rate}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::InvalidSpec, "rates must lie in [0, 1]");
  }
  const std::uint64_t last_time =
      spec.start_time + std::uint64_t{spec.n_blocks - 1} * spec.time_step;
  if (last_time > UINT32_MAX) throw Error(Errc::InvalidSpec, "timestamps overflow 32 bits");
  Generator gen(spec);
  return gen.run();
}

std::string truth_to_json(const GroundTruth& truth) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["prng"] = truth.prng;
  doc["seed"] = truth.seed;
  doc["network"] = std::string(network_name(truth.network));
  doc["intra_block_spends"] = truth.intra_block_spends;
  doc["segwit_txs"] = truth.segwit_txs;
  auto& blocks = doc["blocks"] = ordered_json::array();
  for (const auto& b : truth.blocks) {
    blocks.push_back({{"height", b.height},
                      {"hash", b.hash.to_display_hex()},
                      {"date", b.date.to_string()},
                      {"subsidy", b.subsidy.satoshi},
                      {"fees", b.fees.satoshi},
                      {"txs", b.n_txs},
                      {"live_utxos", b.live_utxos}});
  }
  auto& txs = doc["txs"] = ordered_json::array();
  for (const auto& t : truth.txs) {
    txs.push_back({{"txid", t.txid.to_display_hex()},
                   {"height", t.height},
                   {"coinbase", t.coinbase},
                   {"input_sum", t.input_sum.satoshi},
                   {"output_sum", t.output_sum.satoshi},
                   {"fee", t.fee.satoshi},
                   {"inputs", t.n_inputs},
                   {"outputs", t.n_outputs}});
  }
  auto& ops = doc["opreturns"] = ordered_json::array();
  for (const auto& o : truth.opreturns) {
    ops.push_back({{"txid", o.txid.to_display_hex()},
                   {"vout", o.vout},
                   {"height", o.height},
                   {"prefix", o.prefix},
                   {"metadata", to_hex(o.metadata)}});
  }
  auto& tagged = doc["tagged_outputs"] = ordered_json::array();
  for (const auto& t : truth.tagged_outputs) {
    tagged.push_back({{"txid", t.txid.to_display_hex()},
                      {"vout", t.vout},
                      {"height", t.height},
                      {"value", t.value.satoshi},
                      {"address", t.address},
                      {"tag", t.tag}});
  }
  auto& addrs = doc["tag_addresses"] = ordered_json::array();
  for (const auto& [address, tag] : truth.tag_addresses) {
    addrs.push_back({{"address", address}, {"tag", tag}});
  }
  auto& dates = doc["dates"] = ordered_json::array();
  for (const auto& d : truth.dates) {
    dates.push_back({{"date", d.date.to_string()},
                     {"txs", d.txs},
                     {"inputs", d.inputs},
                     {"outputs", d.outputs},
                     {"fees", d.fees.satoshi}});
  }
  auto& orphans = doc["orphans"] = ordered_json::array();
  for (const auto& h : truth.orphans) orphans.push_back(h.to_display_hex());
  return doc.dump(2) + "\n";
}

std::string tags_file_contents(const GroundTruth& truth) {
  std::string out;
  for (const auto& [address, tag] : truth.tag_addresses) out += address + "\t" + tag + "\n";
  return out;
}

RateTable synthetic_rates(const GroundTruth& truth) {
  std::mt19937_64 rng(truth.seed ^ 0x5EED5EED5EED5EEDULL);
  RateTable table;
  for (const auto& d : truth.dates) {
    // Cents in [0, 210000) so every bucket of a 7x300 USD split is reachable.
    table.set(d.date, Rate::from_units(static_cast<std::int64_t>(rng() % 210'000) * 1'000'000));
  }
  return table;
}

}  // namespace chainview
