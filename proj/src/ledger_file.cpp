#include "avledger/ledger.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace avl {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'A', 'V', 'L', 'B'};

}  // namespace

Bytes serialize_ledger(const PartitionLedger& ledger) {
    enc::Writer w;
    w.fixed(kMagic);
    w.u16(kLedgerFormatVersion);
    w.u32(ledger.b_max());

    enc::Writer g;
    g.hash(ledger.genesis().block_id);
    encode(g, ledger.genesis());
    w.bytes(g.data());

    auto emit = [&](const std::vector<Transaction>& txs, const std::vector<Hash256>& folds) {
        for (std::size_t i = 0; i < txs.size(); ++i) {
            enc::Writer rec;
            encode(rec, txs[i]);
            rec.hash(i < folds.size() ? folds[i] : Hash256{});
            w.bytes(rec.data());
        }
    };
    for (const auto& b : ledger.blocks()) emit(b.transactions, b.fold_ids);
    emit(ledger.current().transactions, ledger.current().fold_ids);
    return std::move(w).take();
}

void save_ledger(const PartitionLedger& ledger, const std::filesystem::path& path) {
    const Bytes data = serialize_ledger(ledger);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::IoError, "write to " + path.string() + " failed");
}

LoadedLedger parse_ledger(std::span<const std::uint8_t> bytes) {
    LoadedLedger out;
    auto fail_header = [&](std::string reason) {
        out.report.ok = false;
        out.report.issues.push_back({-1, std::nullopt, std::move(reason)});
        return out;
    };

    if (bytes.empty()) return fail_header("missing genesis");
    enc::Reader r(bytes);
    GenesisBlock genesis;
    std::uint32_t b_max = 0;
    try {
        if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
            return fail_header("bad magic (not an AVLB ledger file)");
        r.raw(kMagic.size());
        std::uint16_t version = r.u16();
        if (version != kLedgerFormatVersion)
            return fail_header("unsupported format version " + std::to_string(version));
        b_max = r.u32();
        if (b_max < 1) return fail_header("b_max must be at least 1");
        Bytes graw = r.bytes();
        enc::Reader gr(graw);
        Hash256 stored_id = gr.hash();
        genesis = decode_genesis(gr);
        gr.expect_end();
        genesis.block_id = stored_id;
    } catch (const Error&) {
        return fail_header("missing genesis");
    }

    std::vector<Block> blocks;
    CurrentBlock current;
    current.prev_block_id = genesis.block_id;
    current.cblock_id = genesis.block_id;
    std::optional<ChainIssue> decode_issue;
    std::size_t record = 0;

    while (!r.at_end()) {
        const long block_index = static_cast<long>(record / b_max);
        try {
            Bytes rec = r.bytes();
            if (rec.size() < 32) throw Error(ErrorCode::DecodeError, "record shorter than fold id");
            enc::Reader rr(std::span<const std::uint8_t>(rec).first(rec.size() - 32));
            Transaction tx = decode_transaction(rr);
            rr.expect_end();
            Hash256 fold;
            std::copy(rec.end() - 32, rec.end(), fold.bytes.begin());

            current.transactions.push_back(std::move(tx));
            current.fold_ids.push_back(fold);
            current.cblock_id = fold;
            if (current.transactions.size() == b_max) {
                Block b;
                b.block_id = fold;
                b.prev_block_id = current.prev_block_id;
                b.sealed_at = transaction_time(current.transactions.back());
                b.transactions = std::move(current.transactions);
                b.fold_ids = std::move(current.fold_ids);
                blocks.push_back(std::move(b));
                current = CurrentBlock{};
                current.prev_block_id = fold;
                current.cblock_id = fold;
            }
        } catch (const Error& e) {
            decode_issue = ChainIssue{block_index, std::nullopt,
                                      "record " + std::to_string(record) + ": " + e.what()};
            break;
        }
        ++record;
    }

    out.ledger = PartitionLedger::from_parts(std::move(genesis), b_max, std::move(blocks), std::move(current));
    out.report = verify_chain_report(*out.ledger);
    if (decode_issue) {
        out.report.ok = false;
        out.report.issues.push_back(*decode_issue);
        std::stable_sort(out.report.issues.begin(), out.report.issues.end(),
                         [](const ChainIssue& a, const ChainIssue& b) { return a.block_index < b.block_index; });
    }
    return out;
}

LoadedLedger read_ledger_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_ledger(data);
}

PartitionLedger load_ledger(const std::filesystem::path& path) {
    LoadedLedger loaded = read_ledger_file(path);
    if (!loaded.ledger)
        throw Error(ErrorCode::DecodeError, path.string() + ": " + loaded.report.issues.front().reason);
    if (!loaded.report.ok) {
        const auto& is = loaded.report.issues.front();
        throw Error(ErrorCode::PreconditionFailed,
                    path.string() + ": chain does not verify: " + is.reason +
                        (is.tid ? " (tid " + is.tid->hex() + ")" : ""));
    }
    return std::move(*loaded.ledger);
}

}  // namespace avl
