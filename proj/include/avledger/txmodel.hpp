#ifndef AVLEDGER_TXMODEL_HPP
#define AVLEDGER_TXMODEL_HPP

#include "avledger/encoding.hpp"
#include "avledger/identity.hpp"
#include "avledger/types.hpp"

#include <map>
#include <optional>
#include <variant>
#include <vector>

namespace avl {

enum class DriveMode : std::uint8_t { Autonomous = 0, Manual = 1 };
enum class SafetyTrigger : std::uint8_t { HardBrake = 0, WrongWay = 1, SlipperyRoad = 2 };
enum class ExecStatus : std::uint8_t { Executed = 0, Failed = 1 };

std::string_view to_string(DriveMode m);
std::string_view to_string(SafetyTrigger t);
std::string_view to_string(ExecStatus s);
std::optional<DriveMode> parse_drive_mode(std::string_view s);
std::optional<SafetyTrigger> parse_trigger(std::string_view s);

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
    bool operator==(const GeoPoint&) const = default;
};

// Great-circle distance in metres.
double distance_m(const GeoPoint& a, const GeoPoint& b);
// Point displaced by north/east metres (small-offset approximation).
GeoPoint offset_m(const GeoPoint& p, double north_m, double east_m);

struct LanePosition {
    std::uint16_t lane = 0;
    double heading_deg = 0.0;
    bool operator==(const LanePosition&) const = default;
};

struct EventSafetyMessage {
    GeoPoint location;
    double speed = 0.0;  // m/s
    LanePosition position;
    DriveMode drive_mode = DriveMode::Autonomous;
    SafetyTrigger trigger = SafetyTrigger::HardBrake;
    bool operator==(const EventSafetyMessage&) const = default;
};

struct TamperStoreDigest {
    std::vector<Hash256> media_hashes;
    Timestamp captured_at = 0;
    bool operator==(const TamperStoreDigest&) const = default;
};

// Collision evidence. edata_hash covers every sibling field, never itself.
struct EvidenceData {
    GeoPoint loc;
    Timestamp ts = 0;
    EventSafetyMessage hv_data;
    TamperStoreDigest ts_data;
    std::vector<Bytes> enc_witness;
    Hash256 edata_hash;
    bool operator==(const EvidenceData&) const = default;
};

struct EstBody {
    Timestamp ts = 0;
    EventSafetyMessage esm;
    TamperStoreDigest ts_data;
    bool operator==(const EstBody&) const = default;
};

struct PetBody {
    EvidenceData edata;
    TamperStoreDigest ts_data;
    bool operator==(const PetBody&) const = default;
};

struct UpdateBody {
    Hash256 update_file_hash;
    std::string metadata;
    Timestamp issued_at = 0;
    bool operator==(const UpdateBody&) const = default;
};

struct ExecBody {
    ExecStatus exec_status = ExecStatus::Executed;
    Timestamp executed_at = 0;
    bool operator==(const ExecBody&) const = default;
};

struct MaintBody {
    Hash256 report_hash;
    bool roadworthy = true;
    EntityId technician;
    Hash256 vehicle_cert;  // pseudonym the vehicle presented at service time
    Timestamp reported_at = 0;
    bool operator==(const MaintBody&) const = default;
};

// Digest of one committed EST, carried into the decision partition as
// historical proof of driving behaviour.
struct EstDigest {
    Hash256 tid;
    Timestamp ts = 0;
    SafetyTrigger trigger = SafetyTrigger::HardBrake;
    bool operator==(const EstDigest&) const = default;
};

struct RetBody {
    EntityId requester;
    EvidenceData edata;
    std::vector<EstDigest> history;
    Timestamp requested_at = 0;
    bool operator==(const RetBody&) const = default;
};

using TxBody = std::variant<EstBody, PetBody, UpdateBody, ExecBody, MaintBody, RetBody>;

// The kind each variant alternative belongs to.
TxKind body_kind(const TxBody& body);

struct SignatureEntry {
    Role role = Role::AV;
    EntityId signer;  // empty for vehicle roles (pseudonymous)
    Timestamp signed_at = 0;
    Signature signature{};
    bool operator==(const SignatureEntry&) const = default;
};

struct Transaction {
    Hash256 tid;
    TxKind kind = TxKind::EST;
    TxBody body;
    std::optional<PseudonymCertificate> cert;
    std::vector<SignatureEntry> signatures;
    std::optional<Hash256> parent_tid;

    Role proposer_role() const;
    bool operator==(const Transaction&) const = default;
};

// Known identities of fixed-role entities (everything except vehicles).
struct KnownKey {
    Role role;
    PublicKey key;
};
using KeyDirectory = std::map<EntityId, KnownKey>;

struct Signer {
    Role role;
    EntityId id;  // left empty for AV/W
    KeyPair keys;
};

// ---- canonical encoding ------------------------------------------------

void encode(enc::Writer& w, const GeoPoint& v);
void encode(enc::Writer& w, const EventSafetyMessage& v);
void encode(enc::Writer& w, const TamperStoreDigest& v);
void encode(enc::Writer& w, const EvidenceData& v);
void encode(enc::Writer& w, const EstDigest& v);
void encode(enc::Writer& w, const PseudonymCertificate& v);
void encode(enc::Writer& w, const SignatureEntry& v);
void encode(enc::Writer& w, const TxBody& v);
void encode(enc::Writer& w, const Transaction& v);

template <typename T>
Bytes canonical_encode(const T& value) {
    enc::Writer w;
    encode(w, value);
    return std::move(w).take();
}

GeoPoint decode_geo(enc::Reader& r);
EventSafetyMessage decode_esm(enc::Reader& r);
TamperStoreDigest decode_ts_data(enc::Reader& r);
EvidenceData decode_edata(enc::Reader& r);
PseudonymCertificate decode_certificate(enc::Reader& r);
TxBody decode_body(enc::Reader& r, TxKind kind);
Transaction decode_transaction(enc::Reader& r);
Transaction decode_transaction(std::span<const std::uint8_t> bytes);

// ---- hashing -----------------------------------------------------------

Hash256 compute_tid(TxKind kind, const TxBody& body,
                    const std::optional<PseudonymCertificate>& cert,
                    const std::optional<Hash256>& parent_tid);

// tid as recomputed from a transaction's content. A UT's countersigner
// certificate is attached after the tid is fixed, so it is not hashed.
Hash256 recompute_tid(const Transaction& tx);

Hash256 compute_edata_hash(const EvidenceData& edata);
EvidenceData seal_edata(EvidenceData edata);

// Instant used for certificate validity: body timestamp (ts / edata.ts /
// issued_at / executed_at / reported_at / requested_at).
Timestamp transaction_time(const Transaction& tx);

// ---- construction and signatures ---------------------------------------

constexpr bool is_multisig(TxKind k) { return k == TxKind::UT; }
constexpr bool requires_vehicle_cert(TxKind k) {
    return k == TxKind::EST || k == TxKind::PET || k == TxKind::ET;
}

// Message actually signed: tid || role || signer || signed_at.
Bytes signing_message(const Hash256& tid, const SignatureEntry& entry);

Transaction build_transaction(TxKind kind, TxBody body, const Signer& signer,
                              std::optional<PseudonymCertificate> cert, Timestamp signed_at,
                              std::optional<Hash256> parent_tid = std::nullopt);

Transaction countersign(Transaction tx, const Signer& signer, PseudonymCertificate cert,
                        Timestamp signed_at);

enum class SignatureCheck { Ok, BadSignature, ExpiredCert };

SignatureCheck check_signatures(const Transaction& tx, const KeyDirectory& known_keys,
                                std::span<const PublicKey> ca_pubkeys);

// Completeness: a UT needs the vehicle's certificate and both the AM and AV
// signatures; every other kind needs its originator's signature.
bool signatures_complete(const Transaction& tx);
// A role signing twice, or more entries than the kind takes (2 for UT, else 1).
bool excess_signatures(const Transaction& tx);

bool verify_signatures(const Transaction& tx, const KeyDirectory& known_keys,
                       const PublicKey& ca_pubkey);

}  // namespace avl

#endif
