#ifndef AVLEDGER_LEDGER_HPP
#define AVLEDGER_LEDGER_HPP

#include "avledger/txmodel.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace avl {

inline constexpr std::uint32_t kDefaultBMax = 8;

// One row of a partition's role table.
struct Member {
    EntityId id;
    Role role = Role::AV;
    PublicKey key{};
    bool proposer = false;
    bool validator = false;
    bool operator==(const Member&) const = default;
};

struct GenesisBlock {
    Hash256 block_id;
    PartitionId partition = PartitionId::P1;
    std::uint32_t b_max = kDefaultBMax;  // hashed, so block boundaries cannot be redrawn
    std::vector<PseudonymCertificate> ca_certificates;
    std::vector<Member> membership;
};

Hash256 compute_genesis_id(const GenesisBlock& g);

struct Block {
    Hash256 block_id;
    Hash256 prev_block_id;
    std::vector<Transaction> transactions;
    // Running cBlock id after each transaction; back() == block_id.
    std::vector<Hash256> fold_ids;
    Timestamp sealed_at = 0;
};

struct CurrentBlock {
    Hash256 cblock_id;
    Hash256 prev_block_id;
    std::vector<Transaction> transactions;
    std::vector<Hash256> fold_ids;
};

// One dynamic-validation step: H(tid || running_id).
Hash256 fold_step(const Hash256& tid, const Hash256& running_id);

struct TxFilter {
    std::optional<TxKind> kind;
    std::optional<Hash256> cert_id;  // carried certificate, or the vehicle pseudonym of an MT
    std::optional<Hash256> parent_tid;
    std::optional<Timestamp> from;  // inclusive, on transaction_time
    std::optional<Timestamp> to;    // inclusive
};

class PartitionLedger {
public:
    static PartitionLedger create(PartitionId partition, std::vector<PseudonymCertificate> ca_certs,
                                  std::vector<Member> membership, std::uint32_t b_max = kDefaultBMax);

    // Folds a transaction that already passed verification into cBlock and
    // returns the new cblock_id. Does not seal.
    Hash256 append_validated(const Transaction& tx);

    // Seals cBlock when it holds b_max transactions.
    std::optional<Block> maybe_seal();
    std::optional<Block> maybe_seal(std::uint32_t b_max);

    // cblock_id this ledger would reach if tx were appended now.
    Hash256 candidate_id(const Transaction& tx) const { return fold_step(tx.tid, current_.cblock_id); }

    bool contains(const Hash256& tid) const { return tid_index_.contains(tid); }
    const Transaction* find(const Hash256& tid) const;
    std::vector<Transaction> query(const TxFilter& filter) const;
    void for_each(const std::function<void(const Transaction&)>& fn) const;
    std::vector<Transaction> transactions() const;

    const GenesisBlock& genesis() const { return genesis_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const CurrentBlock& current() const { return current_; }
    PartitionId partition() const { return genesis_.partition; }
    std::uint32_t b_max() const { return b_max_; }
    std::size_t committed_count() const { return tid_index_.size(); }
    const std::set<Hash256>& tid_index() const { return tid_index_; }
    Hash256 tip_id() const { return blocks_.empty() ? genesis_.block_id : blocks_.back().block_id; }

    KeyDirectory key_directory() const;
    std::vector<PublicKey> ca_keys() const;
    std::optional<Member> member(const EntityId& id) const;

    // ---- fault injection (adversary scenarios, tamper tests) ----

    // Deletes a committed transaction and re-folds every later transaction so
    // the replica stays self-consistent: the state a careful rogue validator
    // would produce. Returns false when tid is not on this replica.
    bool remove_and_refold(const Hash256& tid);

    // Raw in-place access to the n-th committed transaction in chain order.
    // Bypasses every invariant; stored ids are not refreshed.
    Transaction& raw_transaction(std::size_t ordinal);
    std::vector<Block>& raw_blocks() { return blocks_; }

    // Rebuilds a ledger from stored parts without any verification.
    static PartitionLedger from_parts(GenesisBlock genesis, std::uint32_t b_max,
                                      std::vector<Block> blocks, CurrentBlock current);

private:
    PartitionLedger() = default;
    void reindex();

    GenesisBlock genesis_;
    std::uint32_t b_max_ = kDefaultBMax;
    std::vector<Block> blocks_;
    CurrentBlock current_;
    std::set<Hash256> tid_index_;
};

inline PartitionLedger new_ledger(PartitionId partition, std::vector<PseudonymCertificate> ca_certs,
                                  std::vector<Member> membership, std::uint32_t b_max = kDefaultBMax) {
    return PartitionLedger::create(partition, std::move(ca_certs), std::move(membership), b_max);
}

inline Hash256 append_validated(PartitionLedger& ledger, const Transaction& tx) {
    return ledger.append_validated(tx);
}

inline std::optional<Block> maybe_seal(PartitionLedger& ledger, std::uint32_t b_max) {
    return ledger.maybe_seal(b_max);
}

inline std::vector<Transaction> query(const PartitionLedger& ledger, const TxFilter& filter) {
    return ledger.query(filter);
}

// ---- integrity ---------------------------------------------------------

struct ChainIssue {
    // -1 for genesis, blocks().size() for cBlock.
    long block_index = 0;
    std::optional<Hash256> tid;
    std::string reason;
};

struct BlockStatus {
    long index = 0;
    bool sealed = true;
    Hash256 block_id;
    std::size_t transactions = 0;
    bool ok = true;
};

struct ChainReport {
    bool ok = true;
    std::vector<BlockStatus> blocks;
    std::vector<ChainIssue> issues;

    const ChainIssue* first_issue() const { return issues.empty() ? nullptr : &issues.front(); }
};

ChainReport verify_chain_report(const PartitionLedger& ledger);
bool verify_chain(const PartitionLedger& ledger);

// ---- persistence -------------------------------------------------------
//
//   "AVLB" | u16 version | u32 b_max | u32 len | genesis
//   then per transaction: u32 len | canonical transaction | cblock_id after fold (32)
//
// Block boundaries follow from b_max; block ids are the stored fold ids at
// every b_max-th record.

inline constexpr std::uint16_t kLedgerFormatVersion = 1;

Bytes serialize_ledger(const PartitionLedger& ledger);
void save_ledger(const PartitionLedger& ledger, const std::filesystem::path& path);

struct LoadedLedger {
    std::optional<PartitionLedger> ledger;  // absent when the header or genesis is unusable
    ChainReport report;                     // decode and integrity findings
};

// Tolerant load: decodes as much as possible and runs verify_chain.
LoadedLedger parse_ledger(std::span<const std::uint8_t> bytes);
LoadedLedger read_ledger_file(const std::filesystem::path& path);

// Strict load: throws DecodeError / IoError, or PreconditionFailed when the
// chain does not verify.
PartitionLedger load_ledger(const std::filesystem::path& path);

void encode(enc::Writer& w, const GenesisBlock& g);
GenesisBlock decode_genesis(enc::Reader& r);

}  // namespace avl

#endif
