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
// Ledger simulation: smart contracts between nodes and users, escrowed
// purchase transactions, contribution-weighted leader election and block
// sealing with automatic contract payouts.
//
// Token amounts are fixed-point (1e-9 token resolution) so that supply
// conservation holds exactly over any number of blocks.

#ifndef SBW_CHAIN_HPP_
#define SBW_CHAIN_HPP_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sbw/digest.hpp"
#include "sbw/solver.hpp"

namespace sbw::chain {

class Tokens {
 public:
  static constexpr std::int64_t kUnitsPerToken = 1'000'000'000;

  constexpr Tokens() = default;
  static constexpr Tokens FromUnits(std::int64_t units) { return Tokens(units); }
  // Rounds to the nearest unit. Throws on non-finite or out-of-range input.
  static Tokens FromDouble(double tokens);

  constexpr std::int64_t units() const { return units_; }
  double ToDouble() const {
    return static_cast<double>(units_) / static_cast<double>(kUnitsPerToken);
  }

  constexpr Tokens& operator+=(Tokens o) { units_ += o.units_; return *this; }
  constexpr Tokens& operator-=(Tokens o) { units_ -= o.units_; return *this; }
  friend constexpr Tokens operator+(Tokens a, Tokens b) { return a += b; }
  friend constexpr Tokens operator-(Tokens a, Tokens b) { return a -= b; }
  friend constexpr Tokens operator*(Tokens a, std::int64_t k) {
    return Tokens(a.units_ * k);
  }
  friend constexpr auto operator<=>(Tokens, Tokens) = default;

 private:
  constexpr explicit Tokens(std::int64_t units) : units_(units) {}
  std::int64_t units_ = 0;
};

// Raised when a transaction fails the validity gate.
class InvalidTransaction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SmartContract {
  std::string contract_id;
  std::string node_id;
  std::string user_id;
  double unit_price = 0.0;  // tokens per information unit

  friend bool operator==(const SmartContract&, const SmartContract&) = default;
};

enum class TxStatus { kPending, kConfirmed, kRejected };

std::string_view ToString(TxStatus status);
TxStatus TxStatusFromString(std::string_view s);

struct PurchaseTransaction {
  std::string tx_id;
  std::string contract_id;
  double quantity = 0.0;
  Digest info_digest;
  Tokens escrow;  // payment locked at submission
  TxStatus status = TxStatus::kPending;

  friend bool operator==(const PurchaseTransaction&,
                         const PurchaseTransaction&) = default;
};

struct Block {
  std::uint64_t height = 0;
  Digest parent_digest;
  std::string leader_id;  // empty at genesis
  std::vector<std::string> transactions;
  Digest block_digest;

  friend bool operator==(const Block&, const Block&) = default;
};

// Which confirmed purchases count as a node's stake S_n.
enum class ContributionWindow {
  kEpoch,       // reset by StartEpoch()
  kCumulative,  // everything since genesis
};

struct LedgerState {
  std::vector<Block> blocks;
  std::map<std::string, Tokens> balances;
  std::map<std::string, SmartContract> contracts;
  std::map<std::string, Digest> website;
  std::map<std::string, double> epoch_contributions;
  std::map<std::string, PurchaseTransaction> transactions;
  std::vector<std::string> pending;  // submission order
  std::set<std::string> nodes;       // every node that holds a contract
  Tokens initial_supply;
  Tokens block_reward;
  ContributionWindow window = ContributionWindow::kEpoch;
  std::uint64_t epoch = 0;
  std::uint64_t next_contract = 0;
  std::uint64_t next_tx = 0;

  friend bool operator==(const LedgerState&, const LedgerState&) = default;
};

inline constexpr std::string_view kEscrowAccount = "escrow";

std::string NodeId(Eigen::Index n);
std::string UserId(Eigen::Index m);

// Digest over (height, parent, leader, full contents of each transaction).
Digest ComputeBlockDigest(const Block& block, const LedgerState& state);

enum class EmptyBlocks { kRefuse, kAllow };

class Ledger {
 public:
  // Genesis block at height 0 with the given starting balances.
  Ledger(double block_reward, const std::map<std::string, double>& initial_balances,
         ContributionWindow window = ContributionWindow::kEpoch);
  explicit Ledger(LedgerState state) : state_(std::move(state)) {}

  const LedgerState& state() const { return state_; }

  std::string CreateContract(const std::string& node_id,
                             const std::string& user_id, double unit_price);

  std::string SubmitPurchase(const std::string& contract_id, double quantity,
                             const Digest& info_digest);

  // Samples a node with probability S_n / sum_i S_i. Deterministic in seed.
  std::string ElectLeader(std::uint64_t rng_seed) const;

  // Confirms every pending transaction, pays users out of escrow, credits
  // contributions and the website view, then elects a leader over the
  // updated contributions and mints the block reward to it. With no
  // contribution at all the leader is drawn uniformly from known nodes.
  const Block& SealBlock(std::uint64_t rng_seed,
                         EmptyBlocks empty = EmptyBlocks::kRefuse);

  // Starts a new contribution window. No-op for kCumulative.
  void StartEpoch();

  Tokens TotalSupply() const;
  // Sum of balances minus everything minted since genesis; constant.
  Tokens SupplyDrift() const;

  // Index of the first block whose digest or parent link is wrong.
  std::optional<std::size_t> FirstCorruptBlock() const;
  bool VerifyChain() const { return !FirstCorruptBlock().has_value(); }

 private:
  Tokens& Balance(const std::string& party) { return state_.balances[party]; }

  LedgerState state_;
};

// Rebuilds balances, contributions and the website by folding the confirmed
// blocks of `history` over the genesis state `genesis`.
LedgerState ReplayBlocks(const LedgerState& genesis, const LedgerState& history);

struct EpochReport {
  std::map<std::string, Tokens> rewards;  // block rewards won per node
  std::map<std::string, Tokens> spend;    // escrowed purchase payments per node
  std::vector<std::string> submitted;     // tx ids
};

// Creates a contract for every (node, user) pair at price_share * C[n,m].
void ProvisionContracts(Ledger& ledger, const GameConfig& config,
                        double price_share);

// Submits every positive equilibrium purchase, then runs `rounds` consensus
// rounds. The first round confirms the purchases; later rounds may be empty
// but still elect a leader and mint the reward.
EpochReport RunEpoch(Ledger& ledger, const GameConfig& config,
                     const StrategyProfile& equilibrium, double price_share,
                     std::uint64_t rounds, std::uint64_t rng_seed);

std::string ExportJson(const LedgerState& state);
LedgerState ImportJson(std::string_view json);

}  // namespace sbw::chain

#endif  // SBW_CHAIN_HPP_
