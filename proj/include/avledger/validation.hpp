#ifndef AVLEDGER_VALIDATION_HPP
#define AVLEDGER_VALIDATION_HPP

#include "avledger/ledger.hpp"

#include <map>
#include <string>
#include <vector>

namespace avl {

// ---- role table ----------------------------------------------------------

// Partition membership by role: P1 proposers {AV, ST, AM}, validators
// {IC, ST, AM}; P2 proposers {IC, AM}, validators {GTA, LA}.
bool table1_proposer(Role role, PartitionId p);
bool table1_validator(Role role, PartitionId p);

// Which role may originate which kind in which partition. Vehicles (AV, or
// W when testifying) originate EST/PET/ET in P1, AM the UT, ST the MT. RET
// is raised by the insurer or manufacturer: in P1 as the validators'
// request towards P2, and in P2 directly.
bool may_propose(Role role, TxKind kind, PartitionId p);

// ---- verdicts --------------------------------------------------------------

enum class Decision : std::uint8_t { Accept, Reject };
enum class Reason : std::uint8_t {
    Ok,
    Incomplete,
    Unauthorized,
    Duplicate,
    BadSignature,
    ExpiredCert,
    MalformedBody,
};

std::string_view to_string(Decision d);
std::string_view to_string(Reason r);

struct Verdict {
    Decision decision = Decision::Accept;
    Reason reason = Reason::Ok;

    static Verdict accept() { return {Decision::Accept, Reason::Ok}; }
    static Verdict reject(Reason r) { return {Decision::Reject, r}; }
    bool accepted() const { return decision == Decision::Accept; }
    bool operator==(const Verdict&) const = default;
};

// Checks run in order: schema, authorization, completeness, signatures and
// certificate window, uniqueness, ET parent. `at` is the round time; a
// transaction dated after it is malformed.
Verdict verify_transaction(const Transaction& tx, const PartitionLedger& ledger, Timestamp at);

// ---- consensus -------------------------------------------------------------

enum class Outcome : std::uint8_t { Committed, Rejected, Diverged };
std::string_view to_string(Outcome o);

struct Vote {
    Verdict verdict;
    std::optional<Hash256> cblock_id;  // candidate id, present on Accept
};

struct ConsensusRound {
    Hash256 tx_tid;
    TxKind kind = TxKind::EST;
    PartitionId partition = PartitionId::P1;
    Timestamp at = 0;
    std::map<EntityId, Vote> votes;
    Outcome outcome = Outcome::Rejected;
};

using ReplicaSet = std::map<EntityId, PartitionLedger*>;

// Unanimity rule: Committed iff every validator accepts and all candidate
// cblock ids are byte-identical; then every replica appends and seals.
// Throws ReplicaMismatch when a validator has no replica or replicas do not
// share a genesis.
ConsensusRound run_consensus(const std::vector<EntityId>& validators, const Transaction& tx,
                             const ReplicaSet& replicas, Timestamp at);

// Validators whose candidate id differs from the plurality.
std::vector<EntityId> detect_tamper(const ConsensusRound& round);

// One JSON object per round, keys sorted.
std::string audit_line(const ConsensusRound& round);

}  // namespace avl

#endif
