#include "avledger/ledger.hpp"

#include <algorithm>

namespace avl {

void encode(enc::Writer& w, const GenesisBlock& g) {
    w.enumeration(g.partition);
    w.u32(g.b_max);
    w.u32(static_cast<std::uint32_t>(g.ca_certificates.size()));
    for (const auto& c : g.ca_certificates) encode(w, c);
    w.u32(static_cast<std::uint32_t>(g.membership.size()));
    for (const auto& m : g.membership) {
        w.text(m.id.str());
        w.enumeration(m.role);
        w.fixed(m.key);
        w.boolean(m.proposer);
        w.boolean(m.validator);
    }
}

GenesisBlock decode_genesis(enc::Reader& r) {
    GenesisBlock g;
    auto p = r.u8();
    if (p != 1 && p != 2) r.fail("unknown partition id");
    g.partition = static_cast<PartitionId>(p);
    g.b_max = r.u32();
    std::uint32_t nc = r.count(144);
    for (std::uint32_t i = 0; i < nc; ++i) g.ca_certificates.push_back(decode_certificate(r));
    std::uint32_t nm = r.count(39);
    for (std::uint32_t i = 0; i < nm; ++i) {
        Member m;
        m.id = EntityId(r.text());
        m.role = r.enumeration<Role>(6);
        m.key = r.fixed<32>();
        m.proposer = r.boolean();
        m.validator = r.boolean();
        g.membership.push_back(std::move(m));
    }
    return g;
}

Hash256 compute_genesis_id(const GenesisBlock& g) {
    enc::Writer w;
    encode(w, g);
    return crypto::sha256(w.data());
}

Hash256 fold_step(const Hash256& tid, const Hash256& running_id) {
    return crypto::sha256(tid.bytes, running_id.bytes);
}

PartitionLedger PartitionLedger::create(PartitionId partition, std::vector<PseudonymCertificate> ca_certs,
                                        std::vector<Member> membership, std::uint32_t b_max) {
    if (membership.empty()) throw Error(ErrorCode::InvalidGenesis, "genesis membership must not be empty");
    if (ca_certs.empty()) throw Error(ErrorCode::InvalidGenesis, "genesis needs at least one CA certificate");
    if (b_max < 1) throw Error(ErrorCode::InvalidGenesis, "b_max must be at least 1");

    PartitionLedger l;
    l.genesis_.partition = partition;
    l.genesis_.b_max = b_max;
    l.genesis_.ca_certificates = std::move(ca_certs);
    l.genesis_.membership = std::move(membership);
    l.genesis_.block_id = compute_genesis_id(l.genesis_);
    l.b_max_ = b_max;
    l.current_.prev_block_id = l.genesis_.block_id;
    l.current_.cblock_id = l.genesis_.block_id;
    return l;
}

PartitionLedger PartitionLedger::from_parts(GenesisBlock genesis, std::uint32_t b_max,
                                            std::vector<Block> blocks, CurrentBlock current) {
    PartitionLedger l;
    l.genesis_ = std::move(genesis);
    l.b_max_ = b_max;
    l.blocks_ = std::move(blocks);
    l.current_ = std::move(current);
    l.reindex();
    return l;
}

void PartitionLedger::reindex() {
    tid_index_.clear();
    for (const auto& b : blocks_)
        for (const auto& tx : b.transactions) tid_index_.insert(tx.tid);
    for (const auto& tx : current_.transactions) tid_index_.insert(tx.tid);
}

Hash256 PartitionLedger::append_validated(const Transaction& tx) {
    if (tid_index_.contains(tx.tid))
        throw Error(ErrorCode::UniquenessViolation, "transaction " + tx.tid.hex() + " already committed");
    current_.cblock_id = fold_step(tx.tid, current_.cblock_id);
    current_.transactions.push_back(tx);
    current_.fold_ids.push_back(current_.cblock_id);
    tid_index_.insert(tx.tid);
    return current_.cblock_id;
}

std::optional<Block> PartitionLedger::maybe_seal() { return maybe_seal(b_max_); }

std::optional<Block> PartitionLedger::maybe_seal(std::uint32_t b_max) {
    if (b_max < 1) throw Error(ErrorCode::InvalidArgument, "b_max must be at least 1");
    if (current_.transactions.size() < b_max) return std::nullopt;

    Block block;
    block.block_id = current_.cblock_id;
    block.prev_block_id = current_.prev_block_id;
    block.sealed_at = transaction_time(current_.transactions.back());
    block.transactions = std::move(current_.transactions);
    block.fold_ids = std::move(current_.fold_ids);
    blocks_.push_back(block);

    current_ = CurrentBlock{};
    current_.prev_block_id = block.block_id;
    current_.cblock_id = block.block_id;
    return block;
}

const Transaction* PartitionLedger::find(const Hash256& tid) const {
    if (!tid_index_.contains(tid)) return nullptr;
    for (const auto& b : blocks_)
        for (const auto& tx : b.transactions)
            if (tx.tid == tid) return &tx;
    for (const auto& tx : current_.transactions)
        if (tx.tid == tid) return &tx;
    return nullptr;
}

void PartitionLedger::for_each(const std::function<void(const Transaction&)>& fn) const {
    for (const auto& b : blocks_)
        for (const auto& tx : b.transactions) fn(tx);
    for (const auto& tx : current_.transactions) fn(tx);
}

std::vector<Transaction> PartitionLedger::transactions() const {
    std::vector<Transaction> out;
    for_each([&](const Transaction& tx) { out.push_back(tx); });
    return out;
}

std::vector<Transaction> PartitionLedger::query(const TxFilter& f) const {
    std::vector<Transaction> out;
    for_each([&](const Transaction& tx) {
        if (f.kind && tx.kind != *f.kind) return;
        if (f.cert_id) {
            const bool carried = tx.cert && tx.cert->cert_id == *f.cert_id;
            const auto* mt = std::get_if<MaintBody>(&tx.body);
            if (!carried && !(mt && mt->vehicle_cert == *f.cert_id)) return;
        }
        if (f.parent_tid && tx.parent_tid != f.parent_tid) return;
        const Timestamp t = transaction_time(tx);
        if (f.from && t < *f.from) return;
        if (f.to && t > *f.to) return;
        out.push_back(tx);
    });
    return out;
}

KeyDirectory PartitionLedger::key_directory() const {
    KeyDirectory dir;
    for (const auto& m : genesis_.membership) dir.emplace(m.id, KnownKey{m.role, m.key});
    return dir;
}

std::vector<PublicKey> PartitionLedger::ca_keys() const {
    std::vector<PublicKey> keys;
    for (const auto& c : genesis_.ca_certificates) keys.push_back(c.subject_pubkey);
    return keys;
}

std::optional<Member> PartitionLedger::member(const EntityId& id) const {
    for (const auto& m : genesis_.membership)
        if (m.id == id) return m;
    return std::nullopt;
}

bool PartitionLedger::remove_and_refold(const Hash256& tid) {
    if (!tid_index_.contains(tid)) return false;
    std::vector<Transaction> keep;
    for_each([&](const Transaction& tx) {
        if (tx.tid != tid) keep.push_back(tx);
    });
    blocks_.clear();
    current_ = CurrentBlock{};
    current_.prev_block_id = genesis_.block_id;
    current_.cblock_id = genesis_.block_id;
    tid_index_.clear();
    for (const auto& tx : keep) {
        append_validated(tx);
        maybe_seal();
    }
    return true;
}

Transaction& PartitionLedger::raw_transaction(std::size_t ordinal) {
    for (auto& b : blocks_) {
        if (ordinal < b.transactions.size()) return b.transactions[ordinal];
        ordinal -= b.transactions.size();
    }
    if (ordinal < current_.transactions.size()) return current_.transactions[ordinal];
    throw Error(ErrorCode::NotFound, "transaction ordinal out of range");
}

// ---- verification -----------------------------------------------------------

namespace {

// Content checks that do not depend on chain position.
std::optional<std::string> check_transaction(const Transaction& tx, const KeyDirectory& keys,
                                             std::span<const PublicKey> ca_keys) {
    if (body_kind(tx.body) != tx.kind) return "body does not match kind";
    if (recompute_tid(tx) != tx.tid) return "tid does not match content";
    if (const auto* pet = std::get_if<PetBody>(&tx.body))
        if (compute_edata_hash(pet->edata) != pet->edata.edata_hash) return "edata hash mismatch";
    if (const auto* ret = std::get_if<RetBody>(&tx.body))
        if (compute_edata_hash(ret->edata) != ret->edata.edata_hash) return "edata hash mismatch";
    if (tx.signatures.empty()) return "unsigned transaction";
    if (excess_signatures(tx)) return "unexpected extra signature";
    if (!signatures_complete(tx)) return "incomplete signature set";
    switch (check_signatures(tx, keys, ca_keys)) {
        case SignatureCheck::Ok: break;
        case SignatureCheck::BadSignature: return "signature does not verify";
        case SignatureCheck::ExpiredCert: return "certificate not valid at transaction time";
    }
    return std::nullopt;
}

}  // namespace

ChainReport verify_chain_report(const PartitionLedger& ledger) {
    ChainReport rep;
    const auto& g = ledger.genesis();
    const KeyDirectory keys = ledger.key_directory();
    const std::vector<PublicKey> ca_keys = ledger.ca_keys();

    auto issue = [&](long block, std::optional<Hash256> tid, std::string reason) {
        rep.ok = false;
        rep.issues.push_back({block, tid, std::move(reason)});
    };

    if (compute_genesis_id(g) != g.block_id) issue(-1, std::nullopt, "genesis id does not match content");
    if (g.membership.empty()) issue(-1, std::nullopt, "genesis membership empty");
    if (g.b_max != ledger.b_max()) issue(-1, std::nullopt, "B_Max differs from genesis");

    std::set<Hash256> seen;
    std::set<Hash256> seen_uts;
    Hash256 running = g.block_id;

    auto check_sequence = [&](long index, const std::vector<Transaction>& txs,
                              const std::vector<Hash256>& fold_ids, const Hash256& prev,
                              const Hash256& claimed_id, bool sealed) {
        BlockStatus st{index, sealed, claimed_id, txs.size(), true};
        const std::size_t before = rep.issues.size();
        if (prev != running) issue(index, std::nullopt, "previous block link broken");
        Hash256 acc = prev;
        if (fold_ids.size() != txs.size()) issue(index, std::nullopt, "fold trace length mismatch");
        for (std::size_t i = 0; i < txs.size(); ++i) {
            const auto& tx = txs[i];
            if (auto why = check_transaction(tx, keys, ca_keys)) issue(index, tx.tid, *why);
            if (!seen.insert(tx.tid).second) issue(index, tx.tid, "duplicate tid");
            if (tx.kind == TxKind::ET && (!tx.parent_tid || !seen_uts.contains(*tx.parent_tid)))
                issue(index, tx.tid, "ET parent is not an earlier UT");
            if (tx.kind == TxKind::UT) seen_uts.insert(tx.tid);
            acc = fold_step(tx.tid, acc);
            if (i < fold_ids.size() && fold_ids[i] != acc)
                issue(index, tx.tid, "cBlock id diverges from recorded fold");
        }
        if (acc != claimed_id) issue(index, std::nullopt, sealed ? "block id does not match fold" : "cBlock id does not match fold");
        if (sealed && txs.size() != ledger.b_max()) issue(index, std::nullopt, "sealed block size differs from B_Max");
        if (!sealed && txs.size() >= ledger.b_max()) issue(index, std::nullopt, "cBlock exceeds B_Max");
        st.ok = rep.issues.size() == before;
        rep.blocks.push_back(st);
        running = claimed_id;
    };

    const auto& blocks = ledger.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i)
        check_sequence(static_cast<long>(i), blocks[i].transactions, blocks[i].fold_ids,
                       blocks[i].prev_block_id, blocks[i].block_id, true);
    const auto& cur = ledger.current();
    check_sequence(static_cast<long>(blocks.size()), cur.transactions, cur.fold_ids,
                   cur.prev_block_id, cur.cblock_id, false);

    if (seen != ledger.tid_index()) issue(static_cast<long>(blocks.size()), std::nullopt, "tid index out of sync");
    return rep;
}

bool verify_chain(const PartitionLedger& ledger) { return verify_chain_report(ledger).ok; }

}  // namespace avl
