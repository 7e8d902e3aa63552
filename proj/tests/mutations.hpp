#ifndef AVLEDGER_TESTS_MUTATIONS_HPP
#define AVLEDGER_TESTS_MUTATIONS_HPP

#include "avledger/txmodel.hpp"

#include <functional>
#include <string>
#include <vector>

namespace avl::test {

struct Mutation {
    std::string field;
    std::function<void(Transaction&)> apply;
};

namespace detail {

inline void flip(Hash256& h) { h.bytes[7] ^= 0x10; }

template <typename Get>
void esm_fields(std::vector<Mutation>& out, const std::string& prefix, Get get) {
    out.push_back({prefix + ".location.lat", [get](Transaction& t) { get(t).location.lat += 1e-4; }});
    out.push_back({prefix + ".location.lon", [get](Transaction& t) { get(t).location.lon += 1e-4; }});
    out.push_back({prefix + ".speed", [get](Transaction& t) { get(t).speed += 1.0; }});
    out.push_back({prefix + ".position.lane", [get](Transaction& t) { get(t).position.lane ^= 1; }});
    out.push_back({prefix + ".position.heading_deg", [get](Transaction& t) { get(t).position.heading_deg += 1.0; }});
    out.push_back({prefix + ".drive_mode", [get](Transaction& t) {
                       auto& m = get(t).drive_mode;
                       m = m == DriveMode::Autonomous ? DriveMode::Manual : DriveMode::Autonomous;
                   }});
    out.push_back({prefix + ".trigger", [get](Transaction& t) {
                       auto& tr = get(t).trigger;
                       tr = static_cast<SafetyTrigger>((static_cast<int>(tr) + 1) % 3);
                   }});
}

template <typename Get>
void tsd_fields(std::vector<Mutation>& out, const std::string& prefix, Get get, std::size_t n_hashes) {
    for (std::size_t i = 0; i < n_hashes; ++i)
        out.push_back({prefix + ".media_hashes[" + std::to_string(i) + "]",
                       [get, i](Transaction& t) { flip(get(t).media_hashes[i]); }});
    out.push_back({prefix + ".media_hashes+", [get](Transaction& t) { get(t).media_hashes.push_back(Hash256{}); }});
    out.push_back({prefix + ".captured_at", [get](Transaction& t) { get(t).captured_at += 1; }});
}

template <typename Get>
void edata_fields(std::vector<Mutation>& out, const std::string& prefix, Get get, const EvidenceData& e) {
    out.push_back({prefix + ".loc.lat", [get](Transaction& t) { get(t).loc.lat += 1e-4; }});
    out.push_back({prefix + ".loc.lon", [get](Transaction& t) { get(t).loc.lon += 1e-4; }});
    out.push_back({prefix + ".ts", [get](Transaction& t) { get(t).ts += 1; }});
    esm_fields(out, prefix + ".hv_data", [get](Transaction& t) -> EventSafetyMessage& { return get(t).hv_data; });
    tsd_fields(out, prefix + ".ts_data", [get](Transaction& t) -> TamperStoreDigest& { return get(t).ts_data; },
               e.ts_data.media_hashes.size());
    for (std::size_t i = 0; i < e.enc_witness.size(); ++i)
        out.push_back({prefix + ".enc_witness[" + std::to_string(i) + "]", [get, i](Transaction& t) {
                           auto& w = get(t).enc_witness[i];
                           if (w.empty()) w.push_back(0); else w[0] ^= 1;
                       }});
    out.push_back({prefix + ".enc_witness+", [get](Transaction& t) { get(t).enc_witness.push_back(Bytes{9}); }});
    out.push_back({prefix + ".edata_hash", [get](Transaction& t) { flip(get(t).edata_hash); }});
}

}  // namespace detail

// Every single-field mutation of tx: each scalar changed, each list element
// altered, each list grown, each optional toggled.
inline std::vector<Mutation> single_field_mutations(const Transaction& tx) {
    using detail::flip;
    std::vector<Mutation> out;
    out.push_back({"tid", [](Transaction& t) { flip(t.tid); }});
    out.push_back({"kind", [](Transaction& t) {
                       t.kind = static_cast<TxKind>((static_cast<int>(t.kind) + 1) % 6);
                   }});
    out.push_back({"parent_tid", [](Transaction& t) {
                       if (t.parent_tid) flip(*t.parent_tid); else t.parent_tid = Hash256{};
                   }});
    if (tx.parent_tid) out.push_back({"parent_tid-", [](Transaction& t) { t.parent_tid.reset(); }});

    if (tx.cert) {
        out.push_back({"cert-", [](Transaction& t) { t.cert.reset(); }});
        out.push_back({"cert.cert_id", [](Transaction& t) { flip(t.cert->cert_id); }});
        out.push_back({"cert.subject_pubkey", [](Transaction& t) { t.cert->subject_pubkey[0] ^= 1; }});
        out.push_back({"cert.issued_at", [](Transaction& t) { t.cert->issued_at -= 1; }});
        out.push_back({"cert.validity_secs", [](Transaction& t) { t.cert->validity_secs += 1; }});
        out.push_back({"cert.issuer_signature", [](Transaction& t) { t.cert->issuer_signature[0] ^= 1; }});
    } else {
        out.push_back({"cert+", [](Transaction& t) { t.cert = PseudonymCertificate{}; }});
    }

    for (std::size_t i = 0; i < tx.signatures.size(); ++i) {
        const std::string p = "signatures[" + std::to_string(i) + "]";
        out.push_back({p + ".role", [i](Transaction& t) {
                           auto& r = t.signatures[i].role;
                           r = r == Role::AV ? Role::W : Role::AV;
                       }});
        out.push_back({p + ".signer", [i](Transaction& t) { t.signatures[i].signer.value += "x"; }});
        out.push_back({p + ".signed_at", [i](Transaction& t) { t.signatures[i].signed_at -= 1; }});
        out.push_back({p + ".signature", [i](Transaction& t) { t.signatures[i].signature[9] ^= 4; }});
    }
    out.push_back({"signatures-", [](Transaction& t) { t.signatures.pop_back(); }});
    out.push_back({"signatures+", [](Transaction& t) { t.signatures.push_back(t.signatures.back()); }});

    switch (tx.kind) {
        case TxKind::EST: {
            auto body = [](Transaction& t) -> EstBody& { return std::get<EstBody>(t.body); };
            const auto& b = std::get<EstBody>(tx.body);
            out.push_back({"body.ts", [body](Transaction& t) { body(t).ts += 1; }});
            detail::esm_fields(out, "body.esm", [body](Transaction& t) -> EventSafetyMessage& { return body(t).esm; });
            detail::tsd_fields(out, "body.ts_data",
                               [body](Transaction& t) -> TamperStoreDigest& { return body(t).ts_data; },
                               b.ts_data.media_hashes.size());
            break;
        }
        case TxKind::PET: {
            auto body = [](Transaction& t) -> PetBody& { return std::get<PetBody>(t.body); };
            const auto& b = std::get<PetBody>(tx.body);
            detail::edata_fields(out, "body.edata", [body](Transaction& t) -> EvidenceData& { return body(t).edata; },
                                 b.edata);
            detail::tsd_fields(out, "body.ts_data",
                               [body](Transaction& t) -> TamperStoreDigest& { return body(t).ts_data; },
                               b.ts_data.media_hashes.size());
            break;
        }
        case TxKind::UT: {
            auto body = [](Transaction& t) -> UpdateBody& { return std::get<UpdateBody>(t.body); };
            out.push_back({"body.update_file_hash", [body](Transaction& t) { flip(body(t).update_file_hash); }});
            out.push_back({"body.metadata", [body](Transaction& t) { body(t).metadata += "!"; }});
            out.push_back({"body.issued_at", [body](Transaction& t) { body(t).issued_at -= 1; }});
            break;
        }
        case TxKind::ET: {
            auto body = [](Transaction& t) -> ExecBody& { return std::get<ExecBody>(t.body); };
            out.push_back({"body.exec_status", [body](Transaction& t) {
                               auto& s = body(t).exec_status;
                               s = s == ExecStatus::Executed ? ExecStatus::Failed : ExecStatus::Executed;
                           }});
            out.push_back({"body.executed_at", [body](Transaction& t) { body(t).executed_at -= 1; }});
            break;
        }
        case TxKind::MT: {
            auto body = [](Transaction& t) -> MaintBody& { return std::get<MaintBody>(t.body); };
            out.push_back({"body.report_hash", [body](Transaction& t) { flip(body(t).report_hash); }});
            out.push_back({"body.roadworthy", [body](Transaction& t) { body(t).roadworthy = !body(t).roadworthy; }});
            out.push_back({"body.technician", [body](Transaction& t) { body(t).technician.value += "x"; }});
            out.push_back({"body.vehicle_cert", [body](Transaction& t) { flip(body(t).vehicle_cert); }});
            out.push_back({"body.reported_at", [body](Transaction& t) { body(t).reported_at -= 1; }});
            break;
        }
        case TxKind::RET: {
            auto body = [](Transaction& t) -> RetBody& { return std::get<RetBody>(t.body); };
            const auto& b = std::get<RetBody>(tx.body);
            out.push_back({"body.requester", [body](Transaction& t) { body(t).requester.value += "x"; }});
            detail::edata_fields(out, "body.edata", [body](Transaction& t) -> EvidenceData& { return body(t).edata; },
                                 b.edata);
            for (std::size_t i = 0; i < b.history.size(); ++i) {
                const std::string p = "body.history[" + std::to_string(i) + "]";
                out.push_back({p + ".tid", [body, i](Transaction& t) { flip(body(t).history[i].tid); }});
                out.push_back({p + ".ts", [body, i](Transaction& t) { body(t).history[i].ts += 1; }});
                out.push_back({p + ".trigger", [body, i](Transaction& t) {
                                   auto& tr = body(t).history[i].trigger;
                                   tr = static_cast<SafetyTrigger>((static_cast<int>(tr) + 1) % 3);
                               }});
            }
            out.push_back({"body.history+", [body](Transaction& t) { body(t).history.push_back(EstDigest{}); }});
            out.push_back({"body.requested_at", [body](Transaction& t) { body(t).requested_at -= 1; }});
            break;
        }
    }
    return out;
}

}  // namespace avl::test

#endif
