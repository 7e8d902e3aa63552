#include "avledger/txmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace avl {

std::string_view to_string(DriveMode m) { return m == DriveMode::Autonomous ? "autonomous" : "manual"; }

std::string_view to_string(SafetyTrigger t) {
    switch (t) {
        case SafetyTrigger::HardBrake: return "hard_brake";
        case SafetyTrigger::WrongWay: return "wrong_way";
        case SafetyTrigger::SlipperyRoad: return "slippery_road";
    }
    return "?";
}

std::string_view to_string(ExecStatus s) { return s == ExecStatus::Executed ? "executed" : "failed"; }

std::optional<DriveMode> parse_drive_mode(std::string_view s) {
    if (s == "autonomous") return DriveMode::Autonomous;
    if (s == "manual") return DriveMode::Manual;
    return std::nullopt;
}

std::optional<SafetyTrigger> parse_trigger(std::string_view s) {
    for (auto t : {SafetyTrigger::HardBrake, SafetyTrigger::WrongWay, SafetyTrigger::SlipperyRoad})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

namespace {
constexpr double kEarthRadiusM = 6371008.8;
constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
}  // namespace

double distance_m(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
    const double dphi = phi2 - phi1, dlambda = deg2rad(b.lon - a.lon);
    const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                     std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPoint offset_m(const GeoPoint& p, double north_m, double east_m) {
    const double dlat = north_m / kEarthRadiusM * 180.0 / std::numbers::pi;
    const double dlon = east_m / (kEarthRadiusM * std::cos(deg2rad(p.lat))) * 180.0 / std::numbers::pi;
    return {p.lat + dlat, p.lon + dlon};
}

TxKind body_kind(const TxBody& body) { return static_cast<TxKind>(body.index()); }

Role Transaction::proposer_role() const {
    return signatures.empty() ? Role::AV : signatures.front().role;
}

// ---- encoding ---------------------------------------------------------------

void encode(enc::Writer& w, const GeoPoint& v) {
    w.f64(v.lat);
    w.f64(v.lon);
}

void encode(enc::Writer& w, const EventSafetyMessage& v) {
    encode(w, v.location);
    w.f64(v.speed);
    w.u16(v.position.lane);
    w.f64(v.position.heading_deg);
    w.enumeration(v.drive_mode);
    w.enumeration(v.trigger);
}

void encode(enc::Writer& w, const TamperStoreDigest& v) {
    w.u32(static_cast<std::uint32_t>(v.media_hashes.size()));
    for (const auto& h : v.media_hashes) w.hash(h);
    w.i64(v.captured_at);
}

namespace {

void encode_edata_fields(enc::Writer& w, const EvidenceData& v) {
    encode(w, v.loc);
    w.i64(v.ts);
    encode(w, v.hv_data);
    encode(w, v.ts_data);
    w.u32(static_cast<std::uint32_t>(v.enc_witness.size()));
    for (const auto& c : v.enc_witness) w.bytes(c);
}

template <typename T>
void encode_optional(enc::Writer& w, const std::optional<T>& v) {
    w.boolean(v.has_value());
    if (v) {
        if constexpr (std::is_same_v<T, Hash256>)
            w.hash(*v);
        else
            encode(w, *v);
    }
}

}  // namespace

void encode(enc::Writer& w, const EvidenceData& v) {
    encode_edata_fields(w, v);
    w.hash(v.edata_hash);
}

void encode(enc::Writer& w, const EstDigest& v) {
    w.hash(v.tid);
    w.i64(v.ts);
    w.enumeration(v.trigger);
}

void encode(enc::Writer& w, const PseudonymCertificate& v) {
    w.hash(v.cert_id);
    w.fixed(v.subject_pubkey);
    w.i64(v.issued_at);
    w.i64(v.validity_secs);
    w.fixed(v.issuer_signature);
}

void encode(enc::Writer& w, const SignatureEntry& v) {
    w.enumeration(v.role);
    w.text(v.signer.str());
    w.i64(v.signed_at);
    w.fixed(v.signature);
}

void encode(enc::Writer& w, const TxBody& body) {
    std::visit(
        [&w](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, EstBody>) {
                w.i64(b.ts);
                encode(w, b.esm);
                encode(w, b.ts_data);
            } else if constexpr (std::is_same_v<T, PetBody>) {
                encode(w, b.edata);
                encode(w, b.ts_data);
            } else if constexpr (std::is_same_v<T, UpdateBody>) {
                w.hash(b.update_file_hash);
                w.text(b.metadata);
                w.i64(b.issued_at);
            } else if constexpr (std::is_same_v<T, ExecBody>) {
                w.enumeration(b.exec_status);
                w.i64(b.executed_at);
            } else if constexpr (std::is_same_v<T, MaintBody>) {
                w.hash(b.report_hash);
                w.boolean(b.roadworthy);
                w.text(b.technician.str());
                w.hash(b.vehicle_cert);
                w.i64(b.reported_at);
            } else if constexpr (std::is_same_v<T, RetBody>) {
                w.text(b.requester.str());
                encode(w, b.edata);
                w.u32(static_cast<std::uint32_t>(b.history.size()));
                for (const auto& d : b.history) encode(w, d);
                w.i64(b.requested_at);
            }
        },
        body);
}

// Full record layout: tid || kind || body_tag || body || cert? || parent? || sigs.
// body_tag repeats the variant index so a kind/body mismatch survives a round
// trip and can be rejected by validation instead of by the decoder.
void encode(enc::Writer& w, const Transaction& v) {
    w.hash(v.tid);
    w.enumeration(v.kind);
    w.u8(static_cast<std::uint8_t>(v.body.index()));
    encode(w, v.body);
    encode_optional(w, v.cert);
    encode_optional(w, v.parent_tid);
    w.u32(static_cast<std::uint32_t>(v.signatures.size()));
    for (const auto& s : v.signatures) encode(w, s);
}

// ---- decoding ---------------------------------------------------------------

GeoPoint decode_geo(enc::Reader& r) {
    GeoPoint g;
    g.lat = r.f64();
    g.lon = r.f64();
    return g;
}

EventSafetyMessage decode_esm(enc::Reader& r) {
    EventSafetyMessage m;
    m.location = decode_geo(r);
    m.speed = r.f64();
    m.position.lane = r.u16();
    m.position.heading_deg = r.f64();
    m.drive_mode = r.enumeration<DriveMode>(1);
    m.trigger = r.enumeration<SafetyTrigger>(2);
    return m;
}

TamperStoreDigest decode_ts_data(enc::Reader& r) {
    TamperStoreDigest d;
    std::uint32_t n = r.count(32);
    d.media_hashes.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) d.media_hashes.push_back(r.hash());
    d.captured_at = r.i64();
    return d;
}

EvidenceData decode_edata(enc::Reader& r) {
    EvidenceData e;
    e.loc = decode_geo(r);
    e.ts = r.i64();
    e.hv_data = decode_esm(r);
    e.ts_data = decode_ts_data(r);
    std::uint32_t n = r.count(4);
    for (std::uint32_t i = 0; i < n; ++i) e.enc_witness.push_back(r.bytes());
    e.edata_hash = r.hash();
    return e;
}

PseudonymCertificate decode_certificate(enc::Reader& r) {
    PseudonymCertificate c;
    c.cert_id = r.hash();
    c.subject_pubkey = r.fixed<32>();
    c.issued_at = r.i64();
    c.validity_secs = r.i64();
    c.issuer_signature = r.fixed<64>();
    return c;
}

namespace {

EstDigest decode_est_digest(enc::Reader& r) {
    EstDigest d;
    d.tid = r.hash();
    d.ts = r.i64();
    d.trigger = r.enumeration<SafetyTrigger>(2);
    return d;
}

SignatureEntry decode_signature(enc::Reader& r) {
    SignatureEntry s;
    s.role = r.enumeration<Role>(6);
    s.signer = EntityId(r.text());
    s.signed_at = r.i64();
    s.signature = r.fixed<64>();
    return s;
}

}  // namespace

TxBody decode_body(enc::Reader& r, TxKind kind) {
    switch (kind) {
        case TxKind::EST: {
            EstBody b;
            b.ts = r.i64();
            b.esm = decode_esm(r);
            b.ts_data = decode_ts_data(r);
            return b;
        }
        case TxKind::PET: {
            PetBody b;
            b.edata = decode_edata(r);
            b.ts_data = decode_ts_data(r);
            return b;
        }
        case TxKind::UT: {
            UpdateBody b;
            b.update_file_hash = r.hash();
            b.metadata = r.text();
            b.issued_at = r.i64();
            return b;
        }
        case TxKind::ET: {
            ExecBody b;
            b.exec_status = r.enumeration<ExecStatus>(1);
            b.executed_at = r.i64();
            return b;
        }
        case TxKind::MT: {
            MaintBody b;
            b.report_hash = r.hash();
            b.roadworthy = r.boolean();
            b.technician = EntityId(r.text());
            b.vehicle_cert = r.hash();
            b.reported_at = r.i64();
            return b;
        }
        case TxKind::RET: {
            RetBody b;
            b.requester = EntityId(r.text());
            b.edata = decode_edata(r);
            std::uint32_t n = r.count(41);
            for (std::uint32_t i = 0; i < n; ++i) b.history.push_back(decode_est_digest(r));
            b.requested_at = r.i64();
            return b;
        }
    }
    r.fail("unknown transaction kind");
}

Transaction decode_transaction(enc::Reader& r) {
    Transaction tx;
    tx.tid = r.hash();
    tx.kind = r.enumeration<TxKind>(5);
    auto body_tag = r.enumeration<TxKind>(5);
    tx.body = decode_body(r, body_tag);
    if (r.boolean()) tx.cert = decode_certificate(r);
    if (r.boolean()) tx.parent_tid = r.hash();
    std::uint32_t n = r.count(77);
    for (std::uint32_t i = 0; i < n; ++i) tx.signatures.push_back(decode_signature(r));
    return tx;
}

Transaction decode_transaction(std::span<const std::uint8_t> bytes) {
    enc::Reader r(bytes);
    Transaction tx = decode_transaction(r);
    r.expect_end();
    return tx;
}

// ---- hashing ----------------------------------------------------------------

Hash256 compute_tid(TxKind kind, const TxBody& body, const std::optional<PseudonymCertificate>& cert,
                    const std::optional<Hash256>& parent_tid) {
    enc::Writer w;
    w.enumeration(kind);
    w.u8(static_cast<std::uint8_t>(body.index()));
    encode(w, body);
    encode_optional(w, cert);
    encode_optional(w, parent_tid);
    return crypto::sha256(w.data());
}

Hash256 recompute_tid(const Transaction& tx) {
    if (is_multisig(tx.kind)) return compute_tid(tx.kind, tx.body, std::nullopt, tx.parent_tid);
    return compute_tid(tx.kind, tx.body, tx.cert, tx.parent_tid);
}

Hash256 compute_edata_hash(const EvidenceData& edata) {
    enc::Writer w;
    encode_edata_fields(w, edata);
    return crypto::sha256(w.data());
}

EvidenceData seal_edata(EvidenceData edata) {
    edata.edata_hash = compute_edata_hash(edata);
    return edata;
}

Timestamp transaction_time(const Transaction& tx) {
    return std::visit(
        [](const auto& b) -> Timestamp {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, EstBody>) return b.ts;
            else if constexpr (std::is_same_v<T, PetBody>) return b.edata.ts;
            else if constexpr (std::is_same_v<T, UpdateBody>) return b.issued_at;
            else if constexpr (std::is_same_v<T, ExecBody>) return b.executed_at;
            else if constexpr (std::is_same_v<T, MaintBody>) return b.reported_at;
            else return b.requested_at;
        },
        tx.body);
}

// ---- signatures -------------------------------------------------------------

Bytes signing_message(const Hash256& tid, const SignatureEntry& entry) {
    enc::Writer w;
    w.hash(tid);
    w.enumeration(entry.role);
    w.text(entry.signer.str());
    w.i64(entry.signed_at);
    return std::move(w).take();
}

namespace {

SignatureEntry make_entry(const Hash256& tid, const Signer& signer, Timestamp signed_at) {
    SignatureEntry e;
    e.role = signer.role;
    if (!is_vehicle_role(signer.role)) e.signer = signer.id;
    e.signed_at = signed_at;
    e.signature = signer.keys.sign(signing_message(tid, e));
    return e;
}

}  // namespace

Transaction build_transaction(TxKind kind, TxBody body, const Signer& signer,
                              std::optional<PseudonymCertificate> cert, Timestamp signed_at,
                              std::optional<Hash256> parent_tid) {
    if (body_kind(body) != kind)
        throw Error(ErrorCode::MalformedBody, "body does not match kind " + std::string(to_string(kind)));
    if ((kind == TxKind::ET) != parent_tid.has_value())
        throw Error(ErrorCode::MalformedBody, "parent_tid is required for ET and forbidden otherwise");
    if (requires_vehicle_cert(kind) && !cert)
        throw Error(ErrorCode::MissingCertificate,
                    std::string(to_string(kind)) + " must carry a pseudonym certificate");
    if (kind == TxKind::EST && std::get<EstBody>(body).esm.speed < 0)
        throw Error(ErrorCode::MalformedBody, "speed must be non-negative");

    Transaction tx;
    tx.kind = kind;
    tx.body = std::move(body);
    tx.cert = std::move(cert);
    tx.parent_tid = parent_tid;
    tx.tid = recompute_tid(tx);
    tx.signatures.push_back(make_entry(tx.tid, signer, signed_at));
    return tx;
}

Transaction countersign(Transaction tx, const Signer& signer, PseudonymCertificate cert,
                        Timestamp signed_at) {
    if (!is_multisig(tx.kind))
        throw Error(ErrorCode::NotMultiSig, std::string(to_string(tx.kind)) + " is single-signed");
    for (const auto& s : tx.signatures)
        if (s.role == signer.role)
            throw Error(ErrorCode::DuplicateSigner,
                        "role " + std::string(to_string(signer.role)) + " already signed");
    tx.signatures.push_back(make_entry(tx.tid, signer, signed_at));
    tx.cert = std::move(cert);
    return tx;
}

SignatureCheck check_signatures(const Transaction& tx, const KeyDirectory& known_keys,
                                std::span<const PublicKey> ca_pubkeys) {
    auto cert_signed = [&](const PseudonymCertificate& c) {
        for (const auto& ca : ca_pubkeys)
            if (certificate_signature_valid(c, ca)) return true;
        return false;
    };

    // A RET carries the data owner's certificate as the subject of the
    // request; it must be genuine and valid when the evidence was generated.
    if (tx.kind == TxKind::RET && tx.cert) {
        if (!cert_signed(*tx.cert)) return SignatureCheck::BadSignature;
        if (!certificate_window_contains(*tx.cert, std::get<RetBody>(tx.body).edata.ts))
            return SignatureCheck::ExpiredCert;
    }

    const Timestamp tx_time = transaction_time(tx);
    for (const auto& entry : tx.signatures) {
        const Bytes msg = signing_message(tx.tid, entry);
        if (is_vehicle_role(entry.role)) {
            if (!entry.signer.empty() || !tx.cert || tx.kind == TxKind::RET || tx.kind == TxKind::MT)
                return SignatureCheck::BadSignature;
            if (!cert_signed(*tx.cert)) return SignatureCheck::BadSignature;
            // The countersigning vehicle of a UT signs later than the issue
            // time; its certificate must cover the moment it signed.
            Timestamp at = tx_time;
            if (is_multisig(tx.kind)) {
                if (entry.signed_at < tx_time) return SignatureCheck::BadSignature;
                at = entry.signed_at;
            }
            if (!certificate_window_contains(*tx.cert, at)) return SignatureCheck::ExpiredCert;
            if (!crypto::verify(tx.cert->subject_pubkey, msg, entry.signature))
                return SignatureCheck::BadSignature;
        } else {
            auto it = known_keys.find(entry.signer);
            if (it == known_keys.end() || it->second.role != entry.role)
                return SignatureCheck::BadSignature;
            if (!crypto::verify(it->second.key, msg, entry.signature))
                return SignatureCheck::BadSignature;
        }
    }
    return SignatureCheck::Ok;
}

bool signatures_complete(const Transaction& tx) {
    auto has = [&](auto pred) {
        return std::any_of(tx.signatures.begin(), tx.signatures.end(),
                           [&](const SignatureEntry& s) { return pred(s.role); });
    };
    switch (tx.kind) {
        case TxKind::UT:
            return tx.cert.has_value() && has([](Role r) { return r == Role::AM; }) &&
                   has([](Role r) { return r == Role::AV; });
        case TxKind::PET: return has([](Role r) { return is_vehicle_role(r); });
        case TxKind::EST:
        case TxKind::ET: return has([](Role r) { return r == Role::AV; });
        case TxKind::MT: return has([](Role r) { return r == Role::ST; });
        case TxKind::RET: return has([](Role r) { return r == Role::IC || r == Role::AM; });
    }
    return false;
}

bool excess_signatures(const Transaction& tx) {
    if (tx.signatures.size() > (is_multisig(tx.kind) ? 2u : 1u)) return true;
    for (std::size_t i = 0; i < tx.signatures.size(); ++i)
        for (std::size_t j = i + 1; j < tx.signatures.size(); ++j)
            if (tx.signatures[i].role == tx.signatures[j].role) return true;
    return false;
}

bool verify_signatures(const Transaction& tx, const KeyDirectory& known_keys,
                       const PublicKey& ca_pubkey) {
    return check_signatures(tx, known_keys, std::span(&ca_pubkey, 1)) == SignatureCheck::Ok;
}

}  // namespace avl
