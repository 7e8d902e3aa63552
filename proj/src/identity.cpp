#include "avledger/identity.hpp"

#include "avledger/encoding.hpp"

#include <limits>
#include <mutex>

namespace avl {

KeyPair KeyPair::from_seed(const crypto::Seed& seed) {
    KeyPair kp;
    crypto::keypair_from_seed(seed, kp.public_key, kp.secret_key);
    return kp;
}

Bytes PseudonymCertificate::signed_portion() const {
    enc::Writer w;
    w.hash(cert_id);
    w.fixed(subject_pubkey);
    w.i64(issued_at);
    w.i64(validity_secs);
    return std::move(w).take();
}

PseudonymCertificate issue_certificate(const KeyPair& ca, const PublicKey& subject,
                                       Timestamp issued_at, Duration validity_secs,
                                       std::uint64_t nonce) {
    if (validity_secs <= 0)
        throw Error(ErrorCode::InvalidValidity,
                    "certificate validity must be positive, got " + std::to_string(validity_secs));
    enc::Writer id;
    id.fixed(subject);
    id.i64(issued_at);
    id.u64(nonce);

    PseudonymCertificate cert;
    cert.cert_id = crypto::sha256(id.data());
    cert.subject_pubkey = subject;
    cert.issued_at = issued_at;
    cert.validity_secs = validity_secs;
    cert.issuer_signature = ca.sign(cert.signed_portion());
    return cert;
}

PseudonymCertificate CertificateAuthority::issue(const PublicKey& subject, Timestamp issued_at,
                                                 Duration validity_secs) {
    return issue_certificate(keys_, subject, issued_at, validity_secs, ++serial_);
}

PseudonymCertificate CertificateAuthority::root_certificate() const {
    return issue_certificate(keys_, keys_.public_key, 0,
                             std::numeric_limits<Duration>::max() / 2, 0);
}

bool certificate_signature_valid(const PseudonymCertificate& cert, const PublicKey& ca_pubkey) {
    return crypto::verify(ca_pubkey, cert.signed_portion(), cert.issuer_signature);
}

bool certificate_window_contains(const PseudonymCertificate& cert, Timestamp at) {
    if (cert.validity_secs <= 0) return false;
    // at - issued_at < validity avoids overflow in issued_at + validity.
    return cert.issued_at <= at && at - cert.issued_at < cert.validity_secs;
}

bool verify_certificate(const PseudonymCertificate& cert, const PublicKey& ca_pubkey, Timestamp at) {
    return certificate_window_contains(cert, at) && certificate_signature_valid(cert, ca_pubkey);
}

void IdentityEscrow::register_vehicle(const EntityId& vehicle) {
    std::unique_lock lock(mutex_);
    vehicles_.insert(vehicle);
}

bool IdentityEscrow::is_registered(const EntityId& vehicle) const {
    std::shared_lock lock(mutex_);
    return vehicles_.contains(vehicle);
}

void IdentityEscrow::record(const Hash256& cert_id, const EntityId& vehicle) {
    std::unique_lock lock(mutex_);
    if (!vehicles_.contains(vehicle))
        throw Error(ErrorCode::UnknownEntity, "vehicle " + vehicle.str() + " not registered");
    mapping_[cert_id] = vehicle;
}

void IdentityEscrow::check_approvals(const std::set<EntityId>& approvals) const {
    if (!approvals.contains(gta_) || !approvals.contains(la_))
        throw Error(ErrorCode::EscrowDenied, "identity reveal requires both GTA and LA approval");
}

EntityId IdentityEscrow::reveal(const Hash256& cert_id, const std::set<EntityId>& approvals) const {
    check_approvals(approvals);
    std::shared_lock lock(mutex_);
    auto it = mapping_.find(cert_id);
    if (it == mapping_.end())
        throw Error(ErrorCode::UnknownCertificate, "no escrow entry for certificate " + cert_id.hex());
    return it->second;
}

std::vector<Hash256> IdentityEscrow::certificates_of(const EntityId& vehicle,
                                                     const std::set<EntityId>& approvals) const {
    check_approvals(approvals);
    std::shared_lock lock(mutex_);
    std::vector<Hash256> out;
    for (const auto& [cert_id, owner] : mapping_)
        if (owner == vehicle) out.push_back(cert_id);
    return out;
}

EntityId reveal_identity(const IdentityEscrow& escrow, const Hash256& cert_id,
                         const std::set<EntityId>& approvals) {
    return escrow.reveal(cert_id, approvals);
}

Pseudonym rotate_pseudonym(const EntityId& vehicle, CertificateAuthority& ca,
                           IdentityEscrow& escrow, Rng& rng, Timestamp at, Duration validity_secs) {
    if (!escrow.is_registered(vehicle))
        throw Error(ErrorCode::UnknownEntity, "vehicle " + vehicle.str() + " not registered");
    Pseudonym p{KeyPair::generate(rng), {}};
    p.cert = ca.issue(p.keys.public_key, at, validity_secs);
    escrow.record(p.cert.cert_id, vehicle);
    return p;
}

}  // namespace avl
