#ifndef AVLEDGER_IDENTITY_HPP
#define AVLEDGER_IDENTITY_HPP

#include "avledger/crypto.hpp"
#include "avledger/rng.hpp"
#include "avledger/types.hpp"

#include <map>
#include <set>
#include <shared_mutex>

namespace avl {

using crypto::PublicKey;
using crypto::Signature;

struct KeyPair {
    PublicKey public_key{};
    crypto::SecretKey secret_key{};

    static KeyPair from_seed(const crypto::Seed& seed);
    static KeyPair generate(Rng& rng) { return from_seed(rng.bytes32()); }

    Signature sign(std::span<const std::uint8_t> message) const {
        return crypto::sign(secret_key, message);
    }
};

inline constexpr Duration kDefaultCertValidity = 300;

struct PseudonymCertificate {
    Hash256 cert_id;
    PublicKey subject_pubkey{};
    Timestamp issued_at = 0;
    Duration validity_secs = 0;
    Signature issuer_signature{};

    // Bytes covered by issuer_signature.
    Bytes signed_portion() const;

    bool operator==(const PseudonymCertificate&) const = default;
};

// Signs certificates; the serial counter is the per-issuance nonce that keeps
// cert_id unique even for repeated (subject, issued_at) pairs.
class CertificateAuthority {
public:
    explicit CertificateAuthority(KeyPair keys) : keys_(std::move(keys)) {}

    const KeyPair& keys() const { return keys_; }
    const PublicKey& public_key() const { return keys_.public_key; }

    PseudonymCertificate issue(const PublicKey& subject, Timestamp issued_at,
                               Duration validity_secs = kDefaultCertValidity);

    // Self-signed root embedded in genesis blocks.
    PseudonymCertificate root_certificate() const;

private:
    KeyPair keys_;
    std::uint64_t serial_ = 0;
};

PseudonymCertificate issue_certificate(const KeyPair& ca, const PublicKey& subject,
                                       Timestamp issued_at, Duration validity_secs,
                                       std::uint64_t nonce);

// True iff the issuer signature verifies and issued_at <= at < issued_at + validity.
bool verify_certificate(const PseudonymCertificate& cert, const PublicKey& ca_pubkey, Timestamp at);
bool certificate_signature_valid(const PseudonymCertificate& cert, const PublicKey& ca_pubkey);
bool certificate_window_contains(const PseudonymCertificate& cert, Timestamp at);

// cert_id -> real vehicle map. Lookups need approval from both dispute
// settlement authorities (GTA and LA).
class IdentityEscrow {
public:
    IdentityEscrow(EntityId gta, EntityId la) : gta_(std::move(gta)), la_(std::move(la)) {}

    void register_vehicle(const EntityId& vehicle);
    bool is_registered(const EntityId& vehicle) const;
    void record(const Hash256& cert_id, const EntityId& vehicle);

    EntityId reveal(const Hash256& cert_id, const std::set<EntityId>& approvals) const;
    std::vector<Hash256> certificates_of(const EntityId& vehicle,
                                         const std::set<EntityId>& approvals) const;

    const EntityId& gta() const { return gta_; }
    const EntityId& la() const { return la_; }

private:
    void check_approvals(const std::set<EntityId>& approvals) const;

    EntityId gta_;
    EntityId la_;
    mutable std::shared_mutex mutex_;
    std::set<EntityId> vehicles_;
    std::map<Hash256, EntityId> mapping_;
};

EntityId reveal_identity(const IdentityEscrow& escrow, const Hash256& cert_id,
                         const std::set<EntityId>& approvals);

struct Pseudonym {
    KeyPair keys;
    PseudonymCertificate cert;
};

// Fresh keypair + certificate for one transaction; escrow learns the mapping.
Pseudonym rotate_pseudonym(const EntityId& vehicle, CertificateAuthority& ca,
                           IdentityEscrow& escrow, Rng& rng, Timestamp at,
                           Duration validity_secs = kDefaultCertValidity);

}  // namespace avl

#endif
