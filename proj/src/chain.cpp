// Copyright 2026 The SBW Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "sbw/chain.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "sbw/rng.hpp"

namespace sbw::chain {

using nlohmann::json;

Tokens Tokens::FromDouble(double tokens) {
  const double units = std::round(tokens * static_cast<double>(kUnitsPerToken));
  if (!std::isfinite(units) ||
      std::abs(units) >= static_cast<double>(std::numeric_limits<std::int64_t>::max())) {
    throw std::out_of_range("token amount out of range");
  }
  return Tokens(static_cast<std::int64_t>(units));
}

std::string_view ToString(TxStatus status) {
  switch (status) {
    case TxStatus::kPending: return "pending";
    case TxStatus::kConfirmed: return "confirmed";
    case TxStatus::kRejected: return "rejected";
  }
  return "unknown";
}

TxStatus TxStatusFromString(std::string_view s) {
  if (s == "pending") return TxStatus::kPending;
  if (s == "confirmed") return TxStatus::kConfirmed;
  if (s == "rejected") return TxStatus::kRejected;
  throw std::invalid_argument("unknown transaction status: " + std::string(s));
}

std::string NodeId(Eigen::Index n) { return "node" + std::to_string(n); }
std::string UserId(Eigen::Index m) { return "user" + std::to_string(m); }

Digest ComputeBlockDigest(const Block& block, const LedgerState& state) {
  CanonicalWriter w;
  w.U64(block.height).Bytes(block.parent_digest).Str(block.leader_id);
  w.U64(block.transactions.size());
  for (const std::string& id : block.transactions) {
    w.Str(id);
    auto it = state.transactions.find(id);
    if (it == state.transactions.end()) {
      w.Str("<missing>");
      continue;
    }
    const PurchaseTransaction& tx = it->second;
    w.Str(tx.contract_id).F64(tx.quantity).Bytes(tx.info_digest);
    w.I64(tx.escrow.units()).Str(ToString(tx.status));
  }
  return w.Hash();
}

Ledger::Ledger(double block_reward,
               const std::map<std::string, double>& initial_balances,
               ContributionWindow window) {
  if (!(block_reward > 0.0)) throw std::invalid_argument("block reward must be positive");
  state_.block_reward = Tokens::FromDouble(block_reward);
  state_.window = window;
  for (const auto& [party, amount] : initial_balances) {
    if (party == kEscrowAccount) {
      throw std::invalid_argument("escrow account cannot hold a genesis balance");
    }
    if (amount < 0.0) throw std::invalid_argument("negative genesis balance for " + party);
    const Tokens t = Tokens::FromDouble(amount);
    state_.balances[party] = t;
    state_.initial_supply += t;
  }
  state_.balances[std::string(kEscrowAccount)] = Tokens();
  Block genesis;
  genesis.height = 0;
  genesis.parent_digest = Digest::Zero();
  genesis.block_digest = ComputeBlockDigest(genesis, state_);
  state_.blocks.push_back(std::move(genesis));
}

std::string Ledger::CreateContract(const std::string& node_id,
                                   const std::string& user_id, double unit_price) {
  if (!(unit_price > 0.0) || !std::isfinite(unit_price)) {
    throw std::invalid_argument("unit price must be positive");
  }
  if (node_id.empty() || user_id.empty() || node_id == kEscrowAccount ||
      user_id == kEscrowAccount || node_id == user_id) {
    throw std::invalid_argument("invalid contract parties");
  }
  for (const auto& [id, c] : state_.contracts) {
    if (c.node_id == node_id && c.user_id == user_id) {
      throw std::invalid_argument("contract already exists for " + node_id + "/" + user_id);
    }
  }
  std::string id = "c" + std::to_string(state_.next_contract++);
  state_.contracts.emplace(id, SmartContract{id, node_id, user_id, unit_price});
  state_.nodes.insert(node_id);
  Balance(node_id);
  Balance(user_id);
  return id;
}

std::string Ledger::SubmitPurchase(const std::string& contract_id, double quantity,
                                   const Digest& info_digest) {
  auto it = state_.contracts.find(contract_id);
  if (it == state_.contracts.end()) {
    throw std::invalid_argument("unknown contract " + contract_id);
  }
  if (!(quantity > 0.0) || !std::isfinite(quantity)) {
    throw std::invalid_argument("quantity must be positive");
  }
  const SmartContract& contract = it->second;
  const Tokens amount = Tokens::FromDouble(quantity * contract.unit_price);
  Tokens& payer = Balance(contract.node_id);
  if (payer < amount) {
    throw InvalidTransaction("invalid transaction: insufficient balance for " +
                             contract.node_id);
  }
  payer -= amount;
  Balance(std::string(kEscrowAccount)) += amount;
  std::string id = "t" + std::to_string(state_.next_tx++);
  state_.transactions.emplace(
      id, PurchaseTransaction{id, contract_id, quantity, info_digest, amount,
                              TxStatus::kPending});
  state_.pending.push_back(id);
  return id;
}

std::string Ledger::ElectLeader(std::uint64_t rng_seed) const {
  double total = 0.0;
  for (const auto& [node, s] : state_.epoch_contributions) total += s;
  if (!(total > 0.0)) throw std::domain_error("degenerate stake vector");
  Rng rng(rng_seed);
  const double target = rng.Uniform01() * total;
  double running = 0.0;
  const std::string* last = nullptr;
  for (const auto& [node, s] : state_.epoch_contributions) {
    if (!(s > 0.0)) continue;
    running += s;
    last = &node;
    if (target < running) return node;
  }
  return *last;  // only reachable through round-off at the top end
}

const Block& Ledger::SealBlock(std::uint64_t rng_seed, EmptyBlocks empty) {
  if (state_.pending.empty() && empty == EmptyBlocks::kRefuse) {
    throw std::logic_error("empty block refused");
  }
  Block block;
  block.height = state_.blocks.back().height + 1;
  block.parent_digest = state_.blocks.back().block_digest;

  Tokens& escrow = Balance(std::string(kEscrowAccount));
  for (const std::string& id : state_.pending) {
    PurchaseTransaction& tx = state_.transactions.at(id);
    const SmartContract& contract = state_.contracts.at(tx.contract_id);
    if (escrow < tx.escrow) {
      tx.status = TxStatus::kRejected;
      continue;
    }
    escrow -= tx.escrow;
    Balance(contract.user_id) += tx.escrow;
    state_.epoch_contributions[contract.node_id] += tx.quantity;
    state_.website[contract.user_id + "/" + contract.node_id] = tx.info_digest;
    tx.status = TxStatus::kConfirmed;
    block.transactions.push_back(id);
  }
  state_.pending.clear();

  double total = 0.0;
  for (const auto& [node, s] : state_.epoch_contributions) total += s;
  const std::uint64_t election_seed = DeriveSeed(rng_seed, "election", block.height);
  if (total > 0.0) {
    block.leader_id = ElectLeader(election_seed);
  } else {
    if (state_.nodes.empty()) throw std::domain_error("no electable node");
    Rng rng(election_seed);
    auto it = state_.nodes.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.Below(state_.nodes.size())));
    block.leader_id = *it;
  }
  Balance(block.leader_id) += state_.block_reward;

  block.block_digest = ComputeBlockDigest(block, state_);
  state_.blocks.push_back(std::move(block));
  return state_.blocks.back();
}

void Ledger::StartEpoch() {
  ++state_.epoch;
  if (state_.window == ContributionWindow::kEpoch) state_.epoch_contributions.clear();
}

Tokens Ledger::TotalSupply() const {
  Tokens sum;
  for (const auto& [party, t] : state_.balances) sum += t;
  return sum;
}

Tokens Ledger::SupplyDrift() const {
  const auto minted =
      state_.block_reward * static_cast<std::int64_t>(state_.blocks.size() - 1);
  return TotalSupply() - minted - state_.initial_supply;
}

std::optional<std::size_t> Ledger::FirstCorruptBlock() const {
  for (std::size_t i = 0; i < state_.blocks.size(); ++i) {
    const Block& b = state_.blocks[i];
    const Digest expected_parent =
        i == 0 ? Digest::Zero() : state_.blocks[i - 1].block_digest;
    if (b.height != i || b.parent_digest != expected_parent ||
        b.block_digest != ComputeBlockDigest(b, state_)) {
      return i;
    }
  }
  return std::nullopt;
}

LedgerState ReplayBlocks(const LedgerState& genesis, const LedgerState& history) {
  LedgerState out = genesis;
  out.contracts = history.contracts;
  out.nodes = history.nodes;
  out.transactions = history.transactions;
  for (const auto& [id, c] : out.contracts) {
    out.balances[c.node_id];
    out.balances[c.user_id];
  }
  for (std::size_t i = 1; i < history.blocks.size(); ++i) {
    const Block& b = history.blocks[i];
    for (const std::string& id : b.transactions) {
      const PurchaseTransaction& tx = out.transactions.at(id);
      const SmartContract& c = out.contracts.at(tx.contract_id);
      // Escrow in and out within the same fold: node pays user directly.
      out.balances[c.node_id] -= tx.escrow;
      out.balances[c.user_id] += tx.escrow;
      out.epoch_contributions[c.node_id] += tx.quantity;
      out.website[c.user_id + "/" + c.node_id] = tx.info_digest;
    }
    out.balances[b.leader_id] += out.block_reward;
    out.blocks.push_back(b);
  }
  return out;
}

void ProvisionContracts(Ledger& ledger, const GameConfig& config, double price_share) {
  if (!(price_share > 0.0 && price_share <= 1.0)) {
    throw std::invalid_argument("contracts_price_share must be in (0, 1]");
  }
  for (Eigen::Index n = 0; n < config.num_nodes(); ++n) {
    for (Eigen::Index m = 0; m < config.num_users(); ++m) {
      ledger.CreateContract(NodeId(n), UserId(m), price_share * config.costs(n, m));
    }
  }
}

EpochReport RunEpoch(Ledger& ledger, const GameConfig& config,
                     const StrategyProfile& equilibrium, double price_share,
                     std::uint64_t rounds, std::uint64_t rng_seed) {
  CheckDimensions(config, equilibrium);
  if (!IsFeasible(config, equilibrium)) {
    throw std::invalid_argument("equilibrium profile is infeasible");
  }
  std::map<std::pair<std::string, std::string>, std::string> by_pair;
  for (const auto& [id, c] : ledger.state().contracts) {
    by_pair[{c.node_id, c.user_id}] = id;
  }

  ledger.StartEpoch();
  EpochReport report;
  for (Eigen::Index n = 0; n < config.num_nodes(); ++n) {
    const std::string node = NodeId(n);
    report.rewards[node] = Tokens();
    report.spend[node] = Tokens();
    for (Eigen::Index m = 0; m < config.num_users(); ++m) {
      const double q = equilibrium.purchases(n, m);
      if (!(q > 0.0)) continue;
      auto it = by_pair.find({node, UserId(m)});
      if (it == by_pair.end()) {
        throw std::invalid_argument("missing contract for " + node + "/" + UserId(m));
      }
      const double expected_price = price_share * config.costs(n, m);
      const double price = ledger.state().contracts.at(it->second).unit_price;
      if (std::abs(price - expected_price) > 1e-12 * expected_price) {
        throw std::invalid_argument("contract price mismatch for " + node + "/" +
                                    UserId(m));
      }
      CanonicalWriter payload;
      payload.Str(node).Str(UserId(m)).U64(ledger.state().epoch).F64(q);
      const std::string tx = ledger.SubmitPurchase(it->second, q, payload.Hash());
      report.spend[node] += ledger.state().transactions.at(tx).escrow;
      report.submitted.push_back(tx);
    }
  }
  for (std::uint64_t r = 0; r < rounds; ++r) {
    const Block& b = ledger.SealBlock(DeriveSeed(rng_seed, "round", r), EmptyBlocks::kAllow);
    report.rewards[b.leader_id] += ledger.state().block_reward;
  }
  return report;
}

namespace {

json TokensJson(Tokens t) { return t.units(); }

}  // namespace

std::string ExportJson(const LedgerState& s) {
  json j;
  j["format"] = "sbw-ledger/1";
  j["token_units_per_token"] = Tokens::kUnitsPerToken;
  j["block_reward"] = TokensJson(s.block_reward);
  j["initial_supply"] = TokensJson(s.initial_supply);
  j["window"] = s.window == ContributionWindow::kEpoch ? "epoch" : "cumulative";
  j["epoch"] = s.epoch;
  j["next_contract"] = s.next_contract;
  j["next_tx"] = s.next_tx;
  j["balances"] = json::object();
  for (const auto& [k, v] : s.balances) j["balances"][k] = TokensJson(v);
  j["contracts"] = json::object();
  for (const auto& [k, c] : s.contracts) {
    j["contracts"][k] = {{"node_id", c.node_id},
                         {"user_id", c.user_id},
                         {"unit_price", c.unit_price}};
  }
  j["website"] = json::object();
  for (const auto& [k, d] : s.website) j["website"][k] = d.Hex();
  j["epoch_contributions"] = json::object();
  for (const auto& [k, v] : s.epoch_contributions) j["epoch_contributions"][k] = v;
  j["transactions"] = json::object();
  for (const auto& [k, tx] : s.transactions) {
    j["transactions"][k] = {{"contract_id", tx.contract_id},
                            {"quantity", tx.quantity},
                            {"info_digest", tx.info_digest.Hex()},
                            {"escrow", TokensJson(tx.escrow)},
                            {"status", ToString(tx.status)}};
  }
  j["pending"] = s.pending;
  j["nodes"] = s.nodes;
  j["blocks"] = json::array();
  for (const Block& b : s.blocks) {
    j["blocks"].push_back({{"height", b.height},
                           {"parent_digest", b.parent_digest.Hex()},
                           {"leader_id", b.leader_id},
                           {"transactions", b.transactions},
                           {"block_digest", b.block_digest.Hex()}});
  }
  return j.dump(1) + "\n";
}

LedgerState ImportJson(std::string_view text) {
  const json j = json::parse(text);
  if (j.at("format") != "sbw-ledger/1") throw std::invalid_argument("unsupported ledger format");
  if (j.at("token_units_per_token").get<std::int64_t>() != Tokens::kUnitsPerToken) {
    throw std::invalid_argument("token resolution mismatch");
  }
  LedgerState s;
  s.block_reward = Tokens::FromUnits(j.at("block_reward").get<std::int64_t>());
  s.initial_supply = Tokens::FromUnits(j.at("initial_supply").get<std::int64_t>());
  const std::string window = j.at("window").get<std::string>();
  if (window == "epoch") {
    s.window = ContributionWindow::kEpoch;
  } else if (window == "cumulative") {
    s.window = ContributionWindow::kCumulative;
  } else {
    throw std::invalid_argument("unknown contribution window " + window);
  }
  s.epoch = j.at("epoch").get<std::uint64_t>();
  s.next_contract = j.at("next_contract").get<std::uint64_t>();
  s.next_tx = j.at("next_tx").get<std::uint64_t>();
  for (const auto& [k, v] : j.at("balances").items()) {
    s.balances[k] = Tokens::FromUnits(v.get<std::int64_t>());
  }
  for (const auto& [k, v] : j.at("contracts").items()) {
    s.contracts[k] = SmartContract{k, v.at("node_id").get<std::string>(),
                                   v.at("user_id").get<std::string>(),
                                   v.at("unit_price").get<double>()};
  }
  for (const auto& [k, v] : j.at("website").items()) {
    s.website[k] = Digest::FromHex(v.get<std::string>());
  }
  for (const auto& [k, v] : j.at("epoch_contributions").items()) {
    s.epoch_contributions[k] = v.get<double>();
  }
  for (const auto& [k, v] : j.at("transactions").items()) {
    s.transactions[k] = PurchaseTransaction{
        k,
        v.at("contract_id").get<std::string>(),
        v.at("quantity").get<double>(),
        Digest::FromHex(v.at("info_digest").get<std::string>()),
        Tokens::FromUnits(v.at("escrow").get<std::int64_t>()),
        TxStatusFromString(v.at("status").get<std::string>())};
  }
  s.pending = j.at("pending").get<std::vector<std::string>>();
  s.nodes = j.at("nodes").get<std::set<std::string>>();
  for (const auto& b : j.at("blocks")) {
    s.blocks.push_back(Block{b.at("height").get<std::uint64_t>(),
                             Digest::FromHex(b.at("parent_digest").get<std::string>()),
                             b.at("leader_id").get<std::string>(),
                             b.at("transactions").get<std::vector<std::string>>(),
                             Digest::FromHex(b.at("block_digest").get<std::string>())});
  }
  return s;
}

}  // namespace sbw::chain
