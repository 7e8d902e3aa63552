#include "avledger/validation.hpp"

#include <json.hpp>

#include <algorithm>

namespace avl {

bool table1_proposer(Role role, PartitionId p) {
    if (p == PartitionId::P1) return role == Role::AV || role == Role::ST || role == Role::AM;
    return role == Role::IC || role == Role::AM;
}

bool table1_validator(Role role, PartitionId p) {
    if (p == PartitionId::P1) return role == Role::IC || role == Role::ST || role == Role::AM;
    return role == Role::GTA || role == Role::LA;
}

bool may_propose(Role role, TxKind kind, PartitionId p) {
    if (p == PartitionId::P2) return kind == TxKind::RET && (role == Role::IC || role == Role::AM);
    switch (kind) {
        case TxKind::EST: return role == Role::AV;
        case TxKind::PET: return role == Role::AV || role == Role::W;
        case TxKind::UT: return role == Role::AM;
        case TxKind::ET: return role == Role::AV;
        case TxKind::MT: return role == Role::ST;
        case TxKind::RET: return role == Role::IC || role == Role::AM;
    }
    return false;
}

std::string_view to_string(Decision d) { return d == Decision::Accept ? "Accept" : "Reject"; }

std::string_view to_string(Reason r) {
    switch (r) {
        case Reason::Ok: return "Ok";
        case Reason::Incomplete: return "Incomplete";
        case Reason::Unauthorized: return "Unauthorized";
        case Reason::Duplicate: return "Duplicate";
        case Reason::BadSignature: return "BadSignature";
        case Reason::ExpiredCert: return "ExpiredCert";
        case Reason::MalformedBody: return "MalformedBody";
    }
    return "?";
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Committed: return "Committed";
        case Outcome::Rejected: return "Rejected";
        case Outcome::Diverged: return "Diverged";
    }
    return "?";
}

namespace {

bool schema_valid(const Transaction& tx, Timestamp at) {
    if (body_kind(tx.body) != tx.kind) return false;
    if ((tx.kind == TxKind::ET) != tx.parent_tid.has_value()) return false;
    if (requires_vehicle_cert(tx.kind) && !tx.cert) return false;
    if (tx.kind == TxKind::RET && !tx.cert) return false;
    if (tx.kind == TxKind::MT && tx.cert) return false;
    if (recompute_tid(tx) != tx.tid) return false;
    if (transaction_time(tx) > at) return false;
    for (const auto& s : tx.signatures)
        if (s.signed_at > at) return false;

    return std::visit(
        [](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, EstBody>) {
                return b.esm.speed >= 0;
            } else if constexpr (std::is_same_v<T, PetBody>) {
                return b.edata.hv_data.speed >= 0 && compute_edata_hash(b.edata) == b.edata.edata_hash;
            } else if constexpr (std::is_same_v<T, RetBody>) {
                return !b.requester.empty() && compute_edata_hash(b.edata) == b.edata.edata_hash;
            } else if constexpr (std::is_same_v<T, MaintBody>) {
                return !b.technician.empty();
            } else {
                return true;
            }
        },
        tx.body);
}

bool authorized(const Transaction& tx, const PartitionLedger& ledger) {
    const SignatureEntry& proposer = tx.signatures.front();
    if (!may_propose(proposer.role, tx.kind, ledger.partition())) return false;
    if (is_vehicle_role(proposer.role)) return true;
    auto m = ledger.member(proposer.signer);
    return m && m->role == proposer.role;
}

}  // namespace

Verdict verify_transaction(const Transaction& tx, const PartitionLedger& ledger, Timestamp at) {
    if (!schema_valid(tx, at)) return Verdict::reject(Reason::MalformedBody);
    if (tx.signatures.empty()) return Verdict::reject(Reason::Incomplete);
    if (excess_signatures(tx)) return Verdict::reject(Reason::MalformedBody);
    if (!authorized(tx, ledger)) return Verdict::reject(Reason::Unauthorized);
    if (!signatures_complete(tx)) return Verdict::reject(Reason::Incomplete);

    const auto ca_keys = ledger.ca_keys();
    switch (check_signatures(tx, ledger.key_directory(), ca_keys)) {
        case SignatureCheck::Ok: break;
        case SignatureCheck::BadSignature: return Verdict::reject(Reason::BadSignature);
        case SignatureCheck::ExpiredCert: return Verdict::reject(Reason::ExpiredCert);
    }

    if (ledger.contains(tx.tid)) return Verdict::reject(Reason::Duplicate);

    if (tx.kind == TxKind::ET) {
        const Transaction* parent = ledger.find(*tx.parent_tid);
        if (!parent || parent->kind != TxKind::UT) return Verdict::reject(Reason::MalformedBody);
    }
    return Verdict::accept();
}

ConsensusRound run_consensus(const std::vector<EntityId>& validators, const Transaction& tx,
                             const ReplicaSet& replicas, Timestamp at) {
    if (validators.empty()) throw Error(ErrorCode::ReplicaMismatch, "no validators");
    std::optional<Hash256> genesis;
    for (const auto& v : validators) {
        auto it = replicas.find(v);
        if (it == replicas.end() || it->second == nullptr)
            throw Error(ErrorCode::ReplicaMismatch, "validator " + v.str() + " holds no replica");
        const Hash256& g = it->second->genesis().block_id;
        if (genesis && *genesis != g)
            throw Error(ErrorCode::ReplicaMismatch, "replica of " + v.str() + " has a different genesis");
        genesis = g;
    }

    ConsensusRound round;
    round.tx_tid = tx.tid;
    round.kind = tx.kind;
    round.partition = replicas.at(validators.front())->partition();
    round.at = at;

    bool any_reject = false;
    std::optional<Hash256> first_candidate;
    bool agree = true;
    for (const auto& v : validators) {
        const PartitionLedger& replica = *replicas.at(v);
        Vote vote;
        vote.verdict = verify_transaction(tx, replica, at);
        if (vote.verdict.accepted()) {
            vote.cblock_id = replica.candidate_id(tx);
            if (!first_candidate)
                first_candidate = vote.cblock_id;
            else if (*first_candidate != *vote.cblock_id)
                agree = false;
        } else {
            any_reject = true;
        }
        round.votes[v] = vote;
    }

    if (any_reject) {
        round.outcome = Outcome::Rejected;
    } else if (!agree) {
        round.outcome = Outcome::Diverged;
    } else {
        round.outcome = Outcome::Committed;
        for (const auto& v : validators) {
            PartitionLedger& replica = *replicas.at(v);
            replica.append_validated(tx);
            replica.maybe_seal();
        }
    }
    return round;
}

std::vector<EntityId> detect_tamper(const ConsensusRound& round) {
    if (round.outcome != Outcome::Diverged)
        throw Error(ErrorCode::PreconditionFailed, "detect_tamper requires a Diverged round");
    std::map<Hash256, std::size_t> tally;
    for (const auto& [id, vote] : round.votes)
        if (vote.cblock_id) ++tally[*vote.cblock_id];

    std::size_t best = 0, runner_up = 0;
    Hash256 plurality;
    for (const auto& [h, n] : tally) {
        if (n > best) {
            runner_up = best;
            best = n;
            plurality = h;
        } else if (n > runner_up) {
            runner_up = n;
        }
    }
    if (best == 0 || best == runner_up)
        throw Error(ErrorCode::Unattributable, "no plurality among candidate cBlock ids");

    std::vector<EntityId> odd;
    for (const auto& [id, vote] : round.votes)
        if (vote.cblock_id && *vote.cblock_id != plurality) odd.push_back(id);
    return odd;
}

std::string audit_line(const ConsensusRound& round) {
    nlohmann::json j;
    j["tid"] = round.tx_tid.hex();
    j["kind"] = to_string(round.kind);
    j["partition"] = to_string(round.partition);
    j["at"] = round.at;
    j["outcome"] = to_string(round.outcome);
    nlohmann::json votes = nlohmann::json::object();
    for (const auto& [id, vote] : round.votes) {
        nlohmann::json v;
        v["decision"] = to_string(vote.verdict.decision);
        v["reason"] = to_string(vote.verdict.reason);
        v["cblock_id"] = vote.cblock_id ? nlohmann::json(vote.cblock_id->hex()) : nlohmann::json(nullptr);
        votes[id.str()] = v;
    }
    j["votes"] = votes;
    return j.dump();
}

}  // namespace avl
