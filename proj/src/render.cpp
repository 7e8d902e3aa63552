#include "avledger/render.hpp"

namespace avl {

Json to_json(const GeoPoint& p) { return Json{{"lat", p.lat}, {"lon", p.lon}}; }

Json to_json(const EventSafetyMessage& m) {
    return Json{{"location", to_json(m.location)},
                {"speed", m.speed},
                {"lane", m.position.lane},
                {"heading_deg", m.position.heading_deg},
                {"drive_mode", to_string(m.drive_mode)},
                {"trigger", to_string(m.trigger)}};
}

Json to_json(const TamperStoreDigest& d) {
    Json media = Json::array();
    for (const auto& h : d.media_hashes) media.push_back(h.hex());
    return Json{{"media_hashes", media}, {"captured_at", d.captured_at}};
}

Json to_json(const EvidenceData& e) {
    Json witness = Json::array();
    for (const auto& w : e.enc_witness) witness.push_back(to_hex(w.data(), w.size()));
    return Json{{"loc", to_json(e.loc)},     {"ts", e.ts},
                {"hv_data", to_json(e.hv_data)}, {"ts_data", to_json(e.ts_data)},
                {"enc_witness", witness},    {"edata_hash", e.edata_hash.hex()}};
}

Json to_json(const PseudonymCertificate& c) {
    return Json{{"cert_id", c.cert_id.hex()},
                {"subject_pubkey", to_hex(c.subject_pubkey)},
                {"issued_at", c.issued_at},
                {"validity_secs", c.validity_secs}};
}

Json to_json(const TxBody& body) {
    return std::visit(
        [](const auto& b) -> Json {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, EstBody>) {
                return Json{{"ts", b.ts}, {"esm", to_json(b.esm)}, {"ts_data", to_json(b.ts_data)}};
            } else if constexpr (std::is_same_v<T, PetBody>) {
                return Json{{"edata", to_json(b.edata)}, {"ts_data", to_json(b.ts_data)}};
            } else if constexpr (std::is_same_v<T, UpdateBody>) {
                return Json{{"update_file_hash", b.update_file_hash.hex()},
                            {"metadata", b.metadata},
                            {"issued_at", b.issued_at}};
            } else if constexpr (std::is_same_v<T, ExecBody>) {
                return Json{{"exec_status", to_string(b.exec_status)}, {"executed_at", b.executed_at}};
            } else if constexpr (std::is_same_v<T, MaintBody>) {
                return Json{{"report_hash", b.report_hash.hex()},
                            {"roadworthy", b.roadworthy},
                            {"technician", b.technician.str()},
                            {"vehicle_cert", b.vehicle_cert.hex()},
                            {"reported_at", b.reported_at}};
            } else {
                Json history = Json::array();
                for (const auto& d : b.history)
                    history.push_back(Json{{"tid", d.tid.hex()}, {"ts", d.ts}, {"trigger", to_string(d.trigger)}});
                return Json{{"requester", b.requester.str()},
                            {"edata", to_json(b.edata)},
                            {"history", history},
                            {"requested_at", b.requested_at}};
            }
        },
        body);
}

Json to_json(const Transaction& tx) {
    Json sigs = Json::array();
    for (const auto& s : tx.signatures)
        sigs.push_back(Json{{"role", to_string(s.role)},
                            {"signer", s.signer.str()},
                            {"signed_at", s.signed_at},
                            {"signature", to_hex(s.signature)}});
    return Json{{"tid", tx.tid.hex()},
                {"kind", to_string(tx.kind)},
                {"body", to_json(tx.body)},
                {"cert", tx.cert ? to_json(*tx.cert) : Json(nullptr)},
                {"signatures", sigs},
                {"parent_tid", tx.parent_tid ? Json(tx.parent_tid->hex()) : Json(nullptr)}};
}

Json to_json(const ChainReport& report) {
    Json blocks = Json::array();
    for (const auto& b : report.blocks)
        blocks.push_back(Json{{"index", b.index},
                              {"sealed", b.sealed},
                              {"block_id", b.block_id.hex()},
                              {"transactions", b.transactions},
                              {"ok", b.ok}});
    Json issues = Json::array();
    for (const auto& i : report.issues)
        issues.push_back(Json{{"block_index", i.block_index},
                              {"tid", i.tid ? Json(i.tid->hex()) : Json(nullptr)},
                              {"reason", i.reason}});
    return Json{{"ok", report.ok}, {"blocks", blocks}, {"issues", issues}};
}

Json summary_json(const Transaction& tx) {
    return Json{{"tid", tx.tid.hex()},
                {"kind", to_string(tx.kind)},
                {"time", transaction_time(tx)},
                {"proposer", tx.signatures.empty() ? "" : std::string(to_string(tx.proposer_role()))},
                {"cert_id", tx.cert ? Json(tx.cert->cert_id.hex()) : Json(nullptr)},
                {"parent_tid", tx.parent_tid ? Json(tx.parent_tid->hex()) : Json(nullptr)}};
}

}  // namespace avl
