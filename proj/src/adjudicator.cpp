#include "avledger/adjudicator.hpp"

#include <algorithm>
#include <cmath>

namespace avl {

bool is_negligent(Timestamp ut_time, std::optional<Timestamp> et_time, Timestamp at, Duration deadline) {
    if (at - ut_time <= deadline) return false;
    const bool executed_in_time = et_time && *et_time >= ut_time && *et_time - ut_time <= deadline;
    return !executed_in_time;
}

std::vector<NegligenceFinding> check_negligence(const PartitionLedger& ledger,
                                                const std::set<Hash256>& vehicle_certs,
                                                Duration deadline, Timestamp at) {
    std::vector<NegligenceFinding> out;
    std::map<Hash256, std::vector<const Transaction*>> executions;
    std::vector<Transaction> all = ledger.transactions();
    for (const auto& tx : all)
        if (tx.kind == TxKind::ET && tx.parent_tid) executions[*tx.parent_tid].push_back(&tx);

    for (const auto& tx : all) {
        if (tx.kind != TxKind::UT || !tx.cert || !vehicle_certs.contains(tx.cert->cert_id)) continue;
        NegligenceFinding f;
        f.ut_tid = tx.tid;
        f.ut_time = transaction_time(tx);
        // The earliest execution is the one that counts.
        std::optional<Timestamp> et_time;
        for (const Transaction* et : executions[tx.tid]) {
            const Timestamp t = transaction_time(*et);
            if (!et_time || t < *et_time) {
                et_time = t;
                f.et_tid = et->tid;
            }
        }
        f.negligent = is_negligent(f.ut_time, et_time, at, deadline);
        out.push_back(f);
    }
    return out;
}

std::string_view to_string(CrossCheck c) {
    switch (c) {
        case CrossCheck::Consistent: return "Consistent";
        case CrossCheck::HashMismatch: return "HashMismatch";
        case CrossCheck::SpatioTemporalMismatch: return "SpatioTemporalMismatch";
    }
    return "?";
}

bool spatiotemporal_consistent(const EvidenceData& a, const EvidenceData& b, Duration time_tol, double dist_tol) {
    const Timestamp dt = a.ts > b.ts ? a.ts - b.ts : b.ts - a.ts;
    return dt <= time_tol && distance_m(a.loc, b.loc) <= dist_tol;
}

CrossCheck cross_check_edata(const EvidenceData& a, const EvidenceData& b, Duration time_tol, double dist_tol) {
    if (compute_edata_hash(a) != compute_edata_hash(b)) return CrossCheck::HashMismatch;
    if (!spatiotemporal_consistent(a, b, time_tol, dist_tol)) return CrossCheck::SpatioTemporalMismatch;
    return CrossCheck::Consistent;
}

bool check_staged(const std::vector<EstDigest>& history, Timestamp collision_at, Duration window,
                  std::uint32_t threshold) {
    if (threshold < 1) throw Error(ErrorCode::InvalidArgument, "staged threshold must be >= 1");
    std::uint32_t n = 0;
    for (const auto& d : history)
        if (d.trigger == SafetyTrigger::HardBrake && d.ts < collision_at && collision_at - d.ts <= window) ++n;
    return n >= threshold;
}

std::string_view to_string(LiabilityClass c) {
    switch (c) {
        case LiabilityClass::ProductDefect: return "ProductDefect";
        case LiabilityClass::SoftwareFault: return "SoftwareFault";
        case LiabilityClass::ServiceFault: return "ServiceFault";
        case LiabilityClass::OwnerNegligence: return "OwnerNegligence";
        case LiabilityClass::StagedSuspicion: return "StagedSuspicion";
        case LiabilityClass::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::string_view to_string(VerdictFlag f) {
    return f == VerdictFlag::FalseInfoDetected ? "FalseInfoDetected" : "InconsistentWitness";
}

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedCase, what); }

const EvidenceData& pet_edata(const PartitionLedger& ledger, const Hash256& tid) {
    const Transaction* tx = ledger.find(tid);
    if (!tx || tx->kind != TxKind::PET) malformed("PET " + tid.hex() + " is not on the ledger");
    return std::get<PetBody>(tx->body).edata;
}

void require_on_ledger(const PartitionLedger& ledger, const Hash256& tid, TxKind kind) {
    const Transaction* tx = ledger.find(tid);
    if (!tx || tx->kind != kind)
        malformed(std::string(to_string(kind)) + " " + tid.hex() + " is not on the ledger");
}

std::vector<const CaseParty*> striking_first(const CollisionCase& c) {
    std::vector<const CaseParty*> out;
    for (const auto& p : c.parties)
        if (p.striking) out.push_back(&p);
    for (const auto& p : c.parties)
        if (!p.striking) out.push_back(&p);
    return out;
}

}  // namespace

LiabilityVerdict adjudicate(const CollisionCase& c, const PartitionLedger& ledger, const AdjudicationParams& params) {
    if (c.parties.empty() || c.pets.empty()) malformed("case " + c.case_id + " has no parties or no PET");
    for (const auto& tid : c.pets) pet_edata(ledger, tid);

    std::map<EntityId, const CaseParty*> by_vehicle;
    const EvidenceData* reference = nullptr;
    for (const auto& p : c.parties) {
        by_vehicle[p.vehicle] = &p;
        if (p.pet_tid) {
            if (std::find(c.pets.begin(), c.pets.end(), *p.pet_tid) == c.pets.end())
                malformed("party PET " + p.pet_tid->hex() + " is not among the case PETs");
            if (!reference) reference = &pet_edata(ledger, *p.pet_tid);
        }
    }
    if (!reference) malformed("no involved party has an on-chain PET");

    LiabilityVerdict v;

    // Witness PETs that disagree with the parties' account in time or space.
    std::set<Hash256> party_pets;
    for (const auto& p : c.parties)
        if (p.pet_tid) party_pets.insert(*p.pet_tid);
    for (const auto& tid : c.pets)
        if (!party_pets.contains(tid) &&
            !spatiotemporal_consistent(pet_edata(ledger, tid), *reference, params.time_tol, params.dist_tol))
            v.flags.insert(VerdictFlag::InconsistentWitness);

    // (1) false information: each submitted copy against the vehicle's own
    // on-chain PET, or against the collision in time and space when the
    // vehicle filed none.
    for (const auto& s : c.submissions) {
        auto it = by_vehicle.find(s.vehicle);
        if (it == by_vehicle.end()) malformed("submission for unknown vehicle " + s.vehicle.str());
        if (s.ret_tid) require_on_ledger(ledger, *s.ret_tid, TxKind::RET);
        const CaseParty& party = *it->second;
        CrossCheck r;
        if (party.pet_tid) {
            r = cross_check_edata(s.edata, pet_edata(ledger, *party.pet_tid), params.time_tol, params.dist_tol);
        } else {
            r = spatiotemporal_consistent(s.edata, *reference, params.time_tol, params.dist_tol)
                    ? CrossCheck::Consistent
                    : CrossCheck::SpatioTemporalMismatch;
        }
        if (r != CrossCheck::Consistent) v.fraud.push_back({s.submitter, s.role, s.vehicle, r});
    }
    if (!v.fraud.empty()) {
        const FraudFinding& f = v.fraud.front();
        v.flags.insert(VerdictFlag::FalseInfoDetected);
        v.liable = f.submitter;
        v.liable_role = f.role;
        v.liability = f.role == Role::AM ? LiabilityClass::ProductDefect : LiabilityClass::Inconclusive;
        v.rule = "fraud";
        for (const auto& s : c.submissions) {
            if (s.submitter != f.submitter || s.vehicle != f.vehicle) continue;
            const CaseParty& party = *by_vehicle.at(s.vehicle);
            if (party.pet_tid) v.evidence_tids.push_back(*party.pet_tid);
            if (s.ret_tid) v.evidence_tids.push_back(*s.ret_tid);
        }
        if (v.evidence_tids.empty()) v.evidence_tids = c.pets;
        return v;
    }

    const auto ordered = striking_first(c);

    // (2) an overdue, unexecuted update instruction.
    for (const CaseParty* p : ordered) {
        std::set<Hash256> certs(p->cert_ids.begin(), p->cert_ids.end());
        for (const auto& f : check_negligence(ledger, certs, params.negligence_deadline, c.at)) {
            if (!f.negligent) continue;
            v.liable = p->vehicle;
            v.liable_role = Role::AV;
            v.liability = LiabilityClass::OwnerNegligence;
            v.evidence_tids = {f.ut_tid};
            v.rule = "negligence";
            return v;
        }
    }

    // (3) the striking vehicle was signed off as roadworthy shortly before.
    for (const CaseParty* p : ordered) {
        if (!p->striking) continue;
        std::set<Hash256> certs(p->cert_ids.begin(), p->cert_ids.end());
        const Transaction* last = nullptr;
        for (const auto& tx : ledger.transactions()) {
            if (tx.kind != TxKind::MT) continue;
            const auto& mt = std::get<MaintBody>(tx.body);
            if (!certs.contains(mt.vehicle_cert) || mt.reported_at > c.at ||
                c.at - mt.reported_at > params.maintenance_window)
                continue;
            if (!last || mt.reported_at >= std::get<MaintBody>(last->body).reported_at) last = ledger.find(tx.tid);
        }
        if (last && std::get<MaintBody>(last->body).roadworthy) {
            v.liable = std::get<MaintBody>(last->body).technician;
            v.liable_role = Role::ST;
            v.liability = LiabilityClass::ServiceFault;
            v.evidence_tids = {last->tid};
            v.rule = "service";
            return v;
        }
    }

    // (4) a struck vehicle with a record of hard braking.
    for (const CaseParty* p : ordered) {
        if (p->striking) continue;
        auto it = c.est_history.find(p->vehicle);
        if (it == c.est_history.end()) continue;
        if (!check_staged(it->second, c.at, params.staged_window, params.staged_threshold)) continue;
        v.liable = p->vehicle;
        v.liable_role = Role::AV;
        v.liability = LiabilityClass::StagedSuspicion;
        for (const auto& d : it->second) {
            if (d.trigger != SafetyTrigger::HardBrake || d.ts >= c.at || c.at - d.ts > params.staged_window)
                continue;
            require_on_ledger(ledger, d.tid, TxKind::EST);
            v.evidence_tids.push_back(d.tid);
        }
        v.rule = "staged";
        return v;
    }

    // (5) drive mode of the striking vehicle at the time of the collision.
    for (const CaseParty* p : ordered) {
        if (!p->striking) continue;
        if (!p->pet_tid) {
            v.liable = p->vehicle;
            v.liable_role = Role::AV;
            v.liability = LiabilityClass::Inconclusive;
            v.evidence_tids = c.pets;
            v.rule = "no host-vehicle data";
            return v;
        }
        const EvidenceData& e = pet_edata(ledger, *p->pet_tid);
        if (e.hv_data.drive_mode == DriveMode::Autonomous) {
            v.liable = p->manufacturer;
            v.liable_role = Role::AM;
            v.liability = LiabilityClass::ProductDefect;
        } else {
            v.liable = p->vehicle;
            v.liable_role = Role::AV;
            v.liability = LiabilityClass::OwnerNegligence;
        }
        v.evidence_tids = {*p->pet_tid};
        v.rule = "drive mode";
        return v;
    }

    v.liability = LiabilityClass::Inconclusive;
    v.evidence_tids = c.pets;
    v.rule = "inconclusive";
    return v;
}

// ---- JSON ------------------------------------------------------------------

namespace {

Json hex_or_null(const std::optional<Hash256>& h) { return h ? Json(h->hex()) : Json(nullptr); }

std::optional<Hash256> opt_hash(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return Hash256::from_hex(j.get<std::string>());
}

}  // namespace

Json to_json(const CollisionCase& c) {
    Json parties = Json::array();
    for (const auto& p : c.parties) {
        Json certs = Json::array();
        for (const auto& h : p.cert_ids) certs.push_back(h.hex());
        parties.push_back(Json{{"vehicle", p.vehicle.str()},
                               {"manufacturer", p.manufacturer.str()},
                               {"insurer", p.insurer.str()},
                               {"striking", p.striking},
                               {"pet_tid", hex_or_null(p.pet_tid)},
                               {"cert_ids", certs}});
    }
    Json pets = Json::array();
    for (const auto& h : c.pets) pets.push_back(h.hex());
    Json subs = Json::array();
    for (const auto& s : c.submissions) {
        const Bytes raw = canonical_encode(s.edata);
        subs.push_back(Json{{"submitter", s.submitter.str()},
                            {"role", to_string(s.role)},
                            {"vehicle", s.vehicle.str()},
                            {"ret_tid", hex_or_null(s.ret_tid)},
                            {"edata", to_hex(raw.data(), raw.size())}});
    }
    Json history = Json::object();
    for (const auto& [vehicle, digests] : c.est_history) {
        Json list = Json::array();
        for (const auto& d : digests)
            list.push_back(Json{{"tid", d.tid.hex()}, {"ts", d.ts}, {"trigger", to_string(d.trigger)}});
        history[vehicle.str()] = list;
    }
    Json links = Json::object();
    for (const auto& [vehicle, pairs] : c.ut_et_links) {
        Json list = Json::array();
        for (const auto& [ut, et] : pairs) list.push_back(Json{{"ut", ut.hex()}, {"et", hex_or_null(et)}});
        links[vehicle.str()] = list;
    }
    return Json{{"case_id", c.case_id},       {"at", c.at},
                {"loc", to_json(c.loc)},       {"hit_and_run", c.hit_and_run},
                {"parties", parties},          {"pets", pets},
                {"submissions", subs},         {"est_history", history},
                {"ut_et_links", links}};
}

CollisionCase case_from_json(const Json& j) {
    try {
        CollisionCase c;
        c.case_id = j.at("case_id").get<std::string>();
        c.at = j.at("at").get<Timestamp>();
        c.loc = GeoPoint{j.at("loc").at("lat").get<double>(), j.at("loc").at("lon").get<double>()};
        c.hit_and_run = j.value("hit_and_run", false);
        for (const auto& p : j.at("parties")) {
            CaseParty party;
            party.vehicle = p.at("vehicle").get<std::string>();
            party.manufacturer = p.at("manufacturer").get<std::string>();
            party.insurer = p.at("insurer").get<std::string>();
            party.striking = p.at("striking").get<bool>();
            party.pet_tid = opt_hash(p.at("pet_tid"));
            for (const auto& h : p.at("cert_ids")) party.cert_ids.push_back(Hash256::from_hex(h.get<std::string>()));
            c.parties.push_back(std::move(party));
        }
        for (const auto& h : j.at("pets")) c.pets.push_back(Hash256::from_hex(h.get<std::string>()));
        for (const auto& s : j.value("submissions", Json::array())) {
            CaseSubmission sub;
            sub.submitter = s.at("submitter").get<std::string>();
            auto role = parse_role(s.at("role").get<std::string>());
            if (!role) malformed("unknown submitter role");
            sub.role = *role;
            sub.vehicle = s.at("vehicle").get<std::string>();
            sub.ret_tid = opt_hash(s.at("ret_tid"));
            const Bytes raw = from_hex(s.at("edata").get<std::string>());
            enc::Reader r(raw);
            sub.edata = decode_edata(r);
            r.expect_end();
            c.submissions.push_back(std::move(sub));
        }
        const Json history = j.value("est_history", Json::object());
        for (const auto& [vehicle, list] : history.items()) {
            auto& out = c.est_history[EntityId(vehicle)];
            for (const auto& d : list) {
                auto trig = parse_trigger(d.at("trigger").get<std::string>());
                if (!trig) malformed("unknown trigger in est_history");
                out.push_back({Hash256::from_hex(d.at("tid").get<std::string>()), d.at("ts").get<Timestamp>(), *trig});
            }
        }
        const Json links = j.value("ut_et_links", Json::object());
        for (const auto& [vehicle, list] : links.items()) {
            auto& out = c.ut_et_links[EntityId(vehicle)];
            for (const auto& l : list)
                out.emplace_back(Hash256::from_hex(l.at("ut").get<std::string>()), opt_hash(l.at("et")));
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        malformed(std::string("case file: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedCase) throw;
        malformed(std::string("case file: ") + e.what());
    }
}

Json to_json(const LiabilityVerdict& v) {
    Json tids = Json::array();
    for (const auto& t : v.evidence_tids) tids.push_back(t.hex());
    Json flags = Json::array();
    for (auto f : v.flags) flags.push_back(to_string(f));
    Json fraud = Json::array();
    for (const auto& f : v.fraud)
        fraud.push_back(Json{{"submitter", f.submitter.str()},
                             {"role", to_string(f.role)},
                             {"vehicle", f.vehicle.str()},
                             {"result", to_string(f.result)}});
    return Json{{"liable", v.liable.str()},
                {"liable_role", v.liable_role ? Json(to_string(*v.liable_role)) : Json(nullptr)},
                {"class", to_string(v.liability)},
                {"evidence_tids", tids},
                {"flags", flags},
                {"fraud", fraud},
                {"rule", v.rule}};
}

Json to_json(const AdjudicationParams& p) {
    return Json{{"time_tol", p.time_tol},
                {"dist_tol", p.dist_tol},
                {"negligence_deadline", p.negligence_deadline},
                {"maintenance_window", p.maintenance_window},
                {"staged_window", p.staged_window},
                {"staged_threshold", p.staged_threshold}};
}

AdjudicationParams params_from_json(const Json& j) {
    AdjudicationParams p;
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "adjudication: expected an object");
    auto get_dur = [&](const char* key, Duration& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_number_integer() || j[key].get<Duration>() < 0)
            throw Error(ErrorCode::ConfigError, std::string("adjudication.") + key + ": expected a non-negative integer");
        out = j[key].get<Duration>();
    };
    get_dur("time_tol", p.time_tol);
    get_dur("negligence_deadline", p.negligence_deadline);
    get_dur("maintenance_window", p.maintenance_window);
    get_dur("staged_window", p.staged_window);
    if (j.contains("dist_tol")) {
        if (!j["dist_tol"].is_number() || j["dist_tol"].get<double>() < 0)
            throw Error(ErrorCode::ConfigError, "adjudication.dist_tol: expected a non-negative number");
        p.dist_tol = j["dist_tol"].get<double>();
    }
    if (j.contains("staged_threshold")) {
        if (!j["staged_threshold"].is_number_integer() || j["staged_threshold"].get<std::int64_t>() < 1)
            throw Error(ErrorCode::ConfigError, "adjudication.staged_threshold: expected an integer >= 1");
        p.staged_threshold = j["staged_threshold"].get<std::uint32_t>();
    }
    return p;
}

}  // namespace avl
