#include "avledger/scenarios.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace avl {

std::size_t ScenarioReport::committed(PartitionId p, TxKind k) const {
    auto it = submissions.find(p);
    if (it == submissions.end()) return 0;
    auto jt = it->second.find(k);
    return jt == it->second.end() ? 0 : jt->second.committed;
}

std::size_t ScenarioReport::undetected_attacks() const {
    std::size_t n = 0;
    for (const auto& a : attacks) n += a.detected ? 0 : 1;
    return n;
}

std::size_t ScenarioReport::diverged_rounds() const {
    std::size_t n = 0;
    for (const auto& [p, m] : outcomes) {
        auto it = m.find(Outcome::Diverged);
        if (it != m.end()) n += it->second;
    }
    return n;
}

EvidenceData inject_false_information(const EvidenceData& original, const ForgeSpec& forge) {
    EvidenceData e = original;
    if (forge.speed) e.hv_data.speed = *forge.speed;
    e.ts += forge.time_shift;
    if (forge.loc_shift_m != 0.0) {
        e.loc = offset_m(e.loc, forge.loc_shift_m, 0.0);
        e.hv_data.location = offset_m(e.hv_data.location, forge.loc_shift_m, 0.0);
    }
    return seal_edata(std::move(e));
}

MutationRecord suppress_evidence(PartitionLedger& replica, const EntityId& validator, const Hash256& target,
                                 Timestamp at) {
    const Transaction* tx = replica.find(target);
    if (!tx) throw Error(ErrorCode::NotFound, "transaction " + target.hex() + " is not on the replica of " + validator.str());
    MutationRecord m{validator, replica.partition(), target, tx->kind, at};
    replica.remove_and_refold(target);
    return m;
}

namespace {

const std::set<EntityId> kDisputeApprovals{EntityId("gta"), EntityId("la")};

std::uint32_t ordinal_of(const EntityId& id) {
    std::size_t i = 0;
    while (i < id.str().size() && !std::isdigit(static_cast<unsigned char>(id.str()[i]))) ++i;
    return i < id.str().size() ? static_cast<std::uint32_t>(std::stoul(id.str().substr(i))) : 1;
}

EntityId nth(const char* prefix, std::uint32_t k, std::uint32_t count) {
    return EntityId(prefix + std::to_string((k - 1) % count + 1));
}

Hash256 random_hash(Rng& rng) {
    const auto b = rng.bytes32();
    return crypto::sha256(b);
}

}  // namespace

struct Simulation::Impl {
    struct Track {
        TxKind kind;
        bool resolved = false;
    };
    struct UpdatePlan {
        bool execute = true;
        Duration delay = 0;
    };

    ScenarioConfig cfg;
    Rng keys_rng;
    Rng sim_rng;
    Network net;
    std::unique_ptr<CertificateAuthority> ca;
    IdentityEscrow escrow{EntityId("gta"), EntityId("la")};
    std::map<EntityId, Role> entities;
    std::map<EntityId, KeyPair> keys;
    std::map<EntityId, VehicleState> vehicles;
    std::map<Hash256, EstDigest> est_digests;
    std::map<Hash256, UpdatePlan> update_plans;
    crypto::BoxKeyPair p2_box;
    std::map<PartitionId, std::unique_ptr<Partition>> partitions;
    std::vector<std::string> audit;
    ScenarioReport report;
    std::map<std::pair<PartitionId, Hash256>, Track> tracks;
    std::vector<StagedCollision> collisions;
    LinkParams lossy;
    LinkParams lossless;

    std::optional<AttackOutcome> attack;
    bool tamper_deferred = false;
    std::size_t attack_round_mark = 0;
    bool ran = false;

    Impl(ScenarioConfig c, Rng master)
        : cfg(std::move(c)), keys_rng(master.fork()), sim_rng(master.fork()), net(master.next()) {}

    // ---- setup ----

    void setup() {
        ca = std::make_unique<CertificateAuthority>(KeyPair::generate(keys_rng));
        entities = scenario_entities(cfg.actors);
        for (const auto& [id, role] : entities)
            if (!is_vehicle_role(role)) keys.emplace(id, KeyPair::generate(keys_rng));
        p2_box = crypto::BoxKeyPair::from_seed(keys_rng.bytes32());

        for (std::uint32_t i = 1; i <= cfg.actors.vehicles; ++i) {
            VehicleState v;
            v.id = EntityId("av" + std::to_string(i));
            v.manufacturer = nth("am", i, cfg.actors.manufacturers);
            v.insurer = nth("ic", i, cfg.actors.insurers);
            v.position = offset_m(cfg.origin, static_cast<double>(sim_rng.range(-2000, 2000)),
                                  static_cast<double>(sim_rng.range(-2000, 2000)));
            v.speed = static_cast<double>(sim_rng.range(8, 30));
            v.lane = LanePosition{static_cast<std::uint16_t>(sim_rng.range(1, 3)),
                                  static_cast<double>(sim_rng.range(0, 359))};
            escrow.register_vehicle(v.id);
            vehicles.emplace(v.id, std::move(v));
        }

        for (PartitionId p : kAllPartitions) {
            std::vector<Member> members;
            for (const auto& [id, role] : entities) {
                if (is_vehicle_role(role)) continue;
                const bool prop = table1_proposer(role, p);
                const bool val = table1_validator(role, p);
                if (prop || val) members.push_back(Member{id, role, keys.at(id).public_key, prop, val});
            }
            auto membership = PartitionMembership::from_roles(p, entities);
            std::map<EntityId, PartitionLedger> replicas;
            for (const auto& v : membership.validator_ids())
                replicas.emplace(v, PartitionLedger::create(p, {ca->root_certificate()}, members, cfg.b_max));
            partitions.emplace(p, std::make_unique<Partition>(std::move(membership), std::move(replicas)));
        }

        lossy = LinkParams{cfg.network.drop_prob, cfg.network.retry_interval, cfg.network.max_attempts};
        lossless = LinkParams{0.0, cfg.network.retry_interval, cfg.network.max_attempts};
        net.set_receiver([this](const Envelope& env) { receive(env); });

        for (PartitionId p : kAllPartitions)
            for (TxKind k : kAllKinds) report.submissions[p][k];
    }

    Signer fixed_signer(const EntityId& id) const { return Signer{entities.at(id), id, keys.at(id)}; }

    Pseudonym pseudonym(const EntityId& vehicle, Timestamp at) {
        return rotate_pseudonym(vehicle, *ca, escrow, sim_rng, at, cfg.cert_validity);
    }

    Partition& part(PartitionId p) { return *partitions.at(p); }

    // ---- submission bookkeeping ----

    void emit(PartitionId p, const Transaction& tx) {
        auto [it, fresh] = tracks.try_emplace({p, tx.tid}, Track{tx.kind});
        if (fresh) ++report.submissions[p][tx.kind].emitted;
    }

    void resolve(PartitionId p, const Hash256& tid, Outcome o, bool undeliverable = false) {
        auto it = tracks.find({p, tid});
        if (it == tracks.end() || it->second.resolved) return;
        it->second.resolved = true;
        KindTally& t = report.submissions[p][it->second.kind];
        if (undeliverable)
            ++t.undeliverable;
        else if (o == Outcome::Committed)
            ++t.committed;
        else
            ++t.rejected;
    }

    void send_to_partition(const EntityId& from, PartitionId p, const Transaction& tx, const LinkParams& link) {
        emit(p, tx);
        Envelope env{0, from, EntityId(std::string(to_string(p))), tx, 0, 1};
        const Hash256 tid = tx.tid;
        net.send(std::move(env), link, [this, p, tid](const DeliveryRecord& rec) {
            if (rec.status == DeliveryStatus::Undeliverable && rec.deliveries() == 0)
                resolve(p, tid, Outcome::Rejected, true);
        });
    }

    // ---- message handling ----

    void receive(const Envelope& env) {
        const auto* tx = std::get_if<Transaction>(&env.payload);
        if (!tx) return;
        if (auto p = parse_partition(env.to.str())) {
            submit(*p, env.from, *tx);
            return;
        }
        auto it = vehicles.find(env.to);
        if (it != vehicles.end() && tx->kind == TxKind::UT) on_update_received(it->second, *tx);
    }

    void submit(PartitionId p, const EntityId& from, const Transaction& tx) {
        Partition& partition = part(p);
        auto round = partition.submit(from, tx, net.now());
        if (!round) {
            ++report.rejection_reasons[partition.halted() ? "Halted" : "Refused"];
            resolve(p, tx.tid, Outcome::Rejected);
            return;
        }
        after_round(p, tx, *round);
    }

    void after_round(PartitionId p, const Transaction& tx, const ConsensusRound& round) {
        audit.push_back(audit_line(round));
        ++report.outcomes[p][round.outcome];
        resolve(p, tx.tid, round.outcome);

        if (round.outcome == Outcome::Rejected) {
            for (const auto& [id, vote] : round.votes)
                if (!vote.verdict.accepted()) {
                    ++report.rejection_reasons[std::string(to_string(vote.verdict.reason))];
                    break;
                }
        } else if (round.outcome == Outcome::Diverged) {
            on_diverged(p, round);
        } else {
            if (p == PartitionId::P1 && tx.kind == TxKind::RET) forward(tx);
            if (tamper_deferred && cfg.attack->partition == p) {
                tamper_deferred = false;
                apply_tamper();
            }
        }
    }

    void forward(const Transaction& ret) {
        emit(PartitionId::P2, ret);
        Partition& p2 = part(PartitionId::P2);
        ForwardReceipt receipt = forward_evidence_request(part(PartitionId::P1), p2, ret, net.now());
        if (receipt.p2_round) {
            after_round(PartitionId::P2, ret, p2.rounds()[*receipt.p2_round]);
        } else {
            ++report.rejection_reasons[p2.halted() ? "Halted" : "Refused"];
            resolve(PartitionId::P2, ret.tid, Outcome::Rejected);
        }
    }

    void on_diverged(PartitionId p, const ConsensusRound& round) {
        Detection d;
        d.mechanism = "Diverged";
        d.partition = p;
        d.at = net.now();
        d.tid = round.tx_tid;
        try {
            d.attributed = detect_tamper(round);
        } catch (const Error&) {
            // No plurality: divergence is recorded without attribution.
        }
        report.detections.push_back(d);

        if (attack && attack->applied && !attack->detected && attack->type != AttackType::FalseInformation &&
            cfg.attack->partition == p) {
            attack->detected = true;
            attack->mechanism = "Diverged";
            attack->attribution_correct = d.attributed == std::vector<EntityId>{attack->actor};
            attack->rounds_to_detection = part(p).rounds().size() - attack_round_mark;
        }
    }

    void on_update_received(VehicleState& v, const Transaction& ut) {
        if (!v.seen_uts.insert(ut.tid).second) return;
        const Timestamp now = net.now();
        Pseudonym ps = pseudonym(v.id, now);
        Transaction signed_ut = countersign(ut, Signer{Role::AV, {}, ps.keys}, ps.cert, now);
        send_to_partition(v.id, PartitionId::P1, signed_ut, lossy);

        const UpdatePlan plan = update_plans.at(ut.tid);
        if (!plan.execute) return;
        const EntityId vid = v.id;
        const Hash256 parent = ut.tid;
        net.schedule(now + plan.delay, [this, vid, parent] {
            const Timestamp t = net.now();
            Pseudonym p = pseudonym(vid, t);
            Transaction et = build_transaction(TxKind::ET, ExecBody{ExecStatus::Executed, t},
                                               Signer{Role::AV, {}, p.keys}, p.cert, t, parent);
            send_to_partition(vid, PartitionId::P1, et, lossy);
        });
    }

    // ---- timeline events ----

    void run_event(const TimelineEvent& e) {
        const Timestamp now = net.now();
        switch (e.type) {
            case EventType::Update: {
                const VehicleState& v = vehicles.at(e.vehicle);
                UpdateBody body{random_hash(sim_rng), "firmware for " + v.id.str(), now};
                Transaction ut = build_transaction(TxKind::UT, body, fixed_signer(v.manufacturer), std::nullopt, now);
                update_plans[ut.tid] = UpdatePlan{e.execute, e.exec_delay.value_or(cfg.exec_delay)};
                emit(PartitionId::P1, ut);
                const Hash256 tid = ut.tid;
                Envelope env{0, v.manufacturer, v.id, ut, 0, 1};
                net.send(std::move(env), lossy, [this, tid](const DeliveryRecord& rec) {
                    if (rec.status == DeliveryStatus::Undeliverable && rec.deliveries() == 0)
                        resolve(PartitionId::P1, tid, Outcome::Rejected, true);
                });
                break;
            }
            case EventType::Maintenance: {
                const EntityId st = e.technician.value_or(nth("st", ordinal_of(e.vehicle), cfg.actors.technicians));
                Pseudonym ps = pseudonym(e.vehicle, now);
                MaintBody body{random_hash(sim_rng), e.roadworthy, st, ps.cert.cert_id, now};
                Transaction mt = build_transaction(TxKind::MT, body, fixed_signer(st), std::nullopt, now);
                send_to_partition(st, PartitionId::P1, mt, lossless);
                break;
            }
            case EventType::Safety: {
                Transaction est = trigger_event_safety(e.vehicle, e.trigger, now, e.speed);
                send_to_partition(e.vehicle, PartitionId::P1, est, lossy);
                break;
            }
            case EventType::Collision: {
                CollisionSpec spec{e.striking, e.struck, e.witnesses, e.hit_and_run, e.drive_mode};
                if (spec.witnesses.empty() && e.n_witnesses > 0) {
                    std::vector<EntityId> pool;
                    for (const auto& [id, v] : vehicles)
                        if (id != e.striking && std::find(e.struck.begin(), e.struck.end(), id) == e.struck.end())
                            pool.push_back(id);
                    for (std::uint32_t k = 0; k < e.n_witnesses && !pool.empty(); ++k) {
                        const auto idx = static_cast<std::size_t>(sim_rng.range(0, static_cast<std::int64_t>(pool.size()) - 1));
                        spec.witnesses.push_back(pool[idx]);
                        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
                    }
                }
                StagedCollision staged = stage_collision(spec, now);
                for (const auto& pet : staged.pets)
                    send_to_partition(staged.pet_owner.at(pet.tid), PartitionId::P1, pet, lossy);
                const std::size_t index = collisions.size();
                collisions.push_back(std::move(staged));
                net.schedule(now + cfg.ret_delay, [this, index] { send_rets(index); });
                net.schedule(now + cfg.ret_delay + 1, [this, index] { build_case(index); });
                break;
            }
        }
    }

    Transaction trigger_event_safety(const EntityId& vid, SafetyTrigger condition, Timestamp at,
                                     std::optional<double> speed) {
        VehicleState& v = vehicles.at(vid);
        if (speed) v.speed = *speed;
        Pseudonym ps = pseudonym(vid, at);
        EventSafetyMessage esm{v.position, v.speed, v.lane, v.mode, condition};
        EstBody body{at, esm, TamperStoreDigest{{random_hash(sim_rng)}, at}};
        Transaction est = build_transaction(TxKind::EST, body, Signer{Role::AV, {}, ps.keys}, ps.cert, at);
        v.est_tids.push_back(est.tid);
        est_digests[est.tid] = EstDigest{est.tid, at, condition};
        return est;
    }

    std::vector<EstDigest> committed_history(const VehicleState& v, const PartitionLedger& ledger) const {
        std::vector<EstDigest> out;
        for (const auto& tid : v.est_tids)
            if (ledger.contains(tid)) out.push_back(est_digests.at(tid));
        return out;
    }

    StagedCollision stage_collision(const CollisionSpec& spec, Timestamp at) {
        StagedCollision s;
        s.case_id = "case-" + std::to_string(collisions.size() + 1);
        s.at = at;
        s.spec = spec;
        VehicleState& striking = vehicles.at(spec.striking);
        s.loc = striking.position;
        if (spec.drive_mode) striking.mode = *spec.drive_mode;

        std::vector<EntityId> involved{spec.striking};
        involved.insert(involved.end(), spec.struck.begin(), spec.struck.end());
        for (const auto& id : spec.struck) vehicles.at(id).position = s.loc;
        for (const auto& id : spec.witnesses) vehicles.at(id).position = s.loc;

        struct Filer {
            EntityId vehicle;
            Role role;
            Pseudonym ps;
            Timestamp ts;
            GeoPoint loc;
        };
        std::vector<Filer> filers;
        for (const auto& id : involved) {
            if (spec.hit_and_run && id == spec.striking) {
                // The fleeing vehicle files nothing; witnesses saw its beacon pseudonym.
                s.beacon_cert[id] = pseudonym(id, at).cert.cert_id;
                continue;
            }
            const Timestamp ts = at - sim_rng.range(0, 1);
            const GeoPoint loc = offset_m(s.loc, static_cast<double>(sim_rng.range(-21, 21)),
                                          static_cast<double>(sim_rng.range(-21, 21)));
            Pseudonym ps = pseudonym(id, ts);
            s.beacon_cert[id] = ps.cert.cert_id;
            filers.push_back({id, Role::AV, std::move(ps), ts, loc});
        }
        for (const auto& id : spec.witnesses) {
            const Timestamp ts = at - sim_rng.range(0, 1);
            const GeoPoint loc = offset_m(s.loc, static_cast<double>(sim_rng.range(-21, 21)),
                                          static_cast<double>(sim_rng.range(-21, 21)));
            filers.push_back({id, Role::W, pseudonym(id, ts), ts, loc});
        }

        // Witness accounts, readable only by the dispute-settlement validators.
        std::map<EntityId, Bytes> testimony;
        for (const auto& f : filers) {
            if (f.role != Role::W) continue;
            Json observed = Json::array();
            for (const auto& id : involved)
                observed.push_back(Json{{"cert_id", s.beacon_cert.at(id).hex()},
                                        {"vehicle_role", id == spec.striking ? "striking" : "struck"}});
            Json account{{"witness_cert", f.ps.cert.cert_id.hex()},
                         {"ts", f.ts},
                         {"loc", to_json(f.loc)},
                         {"observed", observed}};
            const std::string text = account.dump();
            testimony[f.vehicle] = crypto::seal(p2_box.public_key,
                                                std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
                                                sim_rng.bytes32());
        }

        std::map<EntityId, const Transaction*> pet_of;
        for (const auto& f : filers) {
            const VehicleState& v = vehicles.at(f.vehicle);
            EvidenceData e;
            e.loc = f.loc;
            e.ts = f.ts;
            e.hv_data = EventSafetyMessage{f.loc, v.speed, v.lane, v.mode, SafetyTrigger::HardBrake};
            e.ts_data = TamperStoreDigest{{random_hash(sim_rng), random_hash(sim_rng)}, f.ts};
            if (f.role == Role::W) {
                e.enc_witness.push_back(testimony.at(f.vehicle));
            } else {
                for (const auto& [w, t] : testimony) e.enc_witness.push_back(t);
            }
            e = seal_edata(std::move(e));
            PetBody body{e, e.ts_data};
            Transaction pet = build_transaction(TxKind::PET, body, Signer{f.role, {}, f.ps.keys}, f.ps.cert, at);
            s.pet_owner[pet.tid] = f.vehicle;
            s.pets.push_back(std::move(pet));
        }

        const Timestamp requested_at = at + cfg.ret_delay;
        const PartitionLedger& ledger = reference(PartitionId::P1);
        for (const auto& pet : s.pets) {
            const EntityId& owner = s.pet_owner.at(pet.tid);
            if (std::find(involved.begin(), involved.end(), owner) == involved.end()) continue;
            const VehicleState& v = vehicles.at(owner);
            const EvidenceData& original = std::get<PetBody>(pet.body).edata;
            for (const EntityId& requester : {v.insurer, v.manufacturer}) {
                EvidenceData edata = original;
                if (cfg.attack && cfg.attack->type == AttackType::FalseInformation &&
                    requester == cfg.attack->actor && attack && !attack->target_tid) {
                    ForgeSpec forge{cfg.attack->forged_speed.value_or(original.hv_data.speed > 0 ? original.hv_data.speed / 3 : 10.0),
                                    cfg.attack->time_shift, cfg.attack->loc_shift_m};
                    edata = inject_false_information(original, forge);
                }
                RetBody body{requester, edata, committed_history(v, ledger), requested_at};
                Transaction ret = build_transaction(TxKind::RET, body, fixed_signer(requester), pet.cert, requested_at);
                if (edata != original && attack && !attack->target_tid) attack->target_tid = ret.tid;
                s.ret_vehicle[ret.tid] = owner;
                s.rets.push_back(std::move(ret));
            }
        }
        return s;
    }

    void send_rets(std::size_t index) {
        const StagedCollision& s = collisions[index];
        const Partition& p1 = part(PartitionId::P1);
        for (const auto& ret : s.rets) {
            const EntityId& owner = s.ret_vehicle.at(ret.tid);
            bool pet_committed = false;
            for (const auto& pet : s.pets)
                if (s.pet_owner.at(pet.tid) == owner && p1.committed(pet.tid)) pet_committed = true;
            if (!pet_committed) continue;
            if (attack && attack->target_tid == ret.tid) {
                attack->applied = true;
                attack->applied_at = net.now();
            }
            const EntityId requester = std::get<RetBody>(ret.body).requester;
            send_to_partition(requester, PartitionId::P1, ret, lossless);
        }
    }

    void build_case(std::size_t index) {
        const StagedCollision& s = collisions[index];
        const PartitionLedger& ledger = reference(PartitionId::P1);
        const PartitionLedger& p2_ledger = reference(PartitionId::P2);

        CollisionCase c;
        c.case_id = s.case_id;
        c.at = s.at;
        c.loc = s.loc;
        c.hit_and_run = s.spec.hit_and_run;

        std::optional<EntityId> striking = s.spec.striking;
        if (s.spec.hit_and_run) {
            striking.reset();
            for (const auto& ret : s.rets) {
                if (!p2_ledger.contains(ret.tid)) continue;
                for (const auto& sealed : std::get<RetBody>(ret.body).edata.enc_witness) {
                    auto plain = crypto::open(p2_box, sealed);
                    if (!plain) continue;
                    const Json account = Json::parse(plain->begin(), plain->end(), nullptr, false);
                    if (account.is_discarded() || !account.contains("observed")) continue;
                    for (const auto& o : account["observed"]) {
                        if (o.value("vehicle_role", "") != "striking") continue;
                        const Hash256 cert = Hash256::from_hex(o.at("cert_id").get<std::string>());
                        const EntityId who = reveal_identity(escrow, cert, kDisputeApprovals);
                        if (!striking) report.reveals.push_back(RevealRecord{s.case_id, cert, who});
                        striking = who;
                    }
                }
            }
        }

        std::vector<EntityId> involved;
        if (striking) involved.push_back(*striking);
        involved.insert(involved.end(), s.spec.struck.begin(), s.spec.struck.end());

        for (const auto& pet : s.pets)
            if (ledger.contains(pet.tid)) c.pets.push_back(pet.tid);

        for (const auto& id : involved) {
            const VehicleState& v = vehicles.at(id);
            CaseParty party;
            party.vehicle = id;
            party.manufacturer = v.manufacturer;
            party.insurer = v.insurer;
            party.striking = striking && id == *striking;
            for (const auto& pet : s.pets)
                if (s.pet_owner.at(pet.tid) == id && ledger.contains(pet.tid)) party.pet_tid = pet.tid;
            party.cert_ids = escrow.certificates_of(id, kDisputeApprovals);
            std::set<Hash256> certs(party.cert_ids.begin(), party.cert_ids.end());
            c.est_history[id] = committed_history(v, ledger);
            auto& links = c.ut_et_links[id];
            for (const auto& f : check_negligence(ledger, certs, cfg.adjudication.negligence_deadline, s.at))
                links.emplace_back(f.ut_tid, f.et_tid);
            c.parties.push_back(std::move(party));
        }

        for (const auto& ret : s.rets) {
            if (!ledger.contains(ret.tid)) continue;
            const auto& body = std::get<RetBody>(ret.body);
            c.submissions.push_back(CaseSubmission{body.requester, entities.at(body.requester),
                                                   s.ret_vehicle.at(ret.tid), ret.tid, body.edata});
        }

        CaseRecord record;
        record.collision = c;
        try {
            record.verdict = adjudicate(c, ledger, cfg.adjudication);
        } catch (const Error& e) {
            record.error = e.what();
        }

        if (record.verdict) {
            for (const auto& f : record.verdict->fraud) {
                Detection d;
                d.mechanism = std::string(to_string(f.result));
                d.partition = PartitionId::P1;
                d.at = net.now();
                d.attributed = {f.submitter};
                for (const auto& sub : c.submissions)
                    if (sub.submitter == f.submitter && sub.vehicle == f.vehicle) d.tid = sub.ret_tid;
                report.detections.push_back(d);
                if (attack && attack->type == AttackType::FalseInformation && attack->applied && !attack->detected &&
                    f.submitter == attack->actor) {
                    attack->detected = true;
                    attack->mechanism = d.mechanism;
                    attack->attribution_correct = record.verdict->liable == attack->actor;
                }
            }
        }
        report.cases.push_back(std::move(record));
    }

    // ---- attacks ----

    void run_attack() {
        const AttackSpec& a = *cfg.attack;
        switch (a.type) {
            case AttackType::TamperCBlock: {
                if (part(a.partition).replica(a.actor).current().transactions.empty())
                    tamper_deferred = true;
                else
                    apply_tamper();
                break;
            }
            case AttackType::SuppressEvidence: {
                Partition& p = part(a.partition);
                const TxKind target_kind = a.partition == PartitionId::P1 ? TxKind::PET : TxKind::RET;
                std::optional<Hash256> target;
                p.replica(a.actor).for_each([&](const Transaction& tx) {
                    if (tx.kind == target_kind) target = tx.tid;
                });
                if (!target) {
                    attack->detail = "no " + std::string(to_string(target_kind)) + " on the replica of " + a.actor.str();
                    break;
                }
                if (a.all_replicas) {
                    for (const auto& v : p.validators()) suppress_evidence(p.replica(v), v, *target, net.now());
                    report.valid = false;
                    report.invalid_reason = "evidence suppressed on every replica, outside the trust model";
                } else {
                    suppress_evidence(p.replica(a.actor), a.actor, *target, net.now());
                }
                mark_applied(*target);
                break;
            }
            case AttackType::FalseInformation:
                // Injected when the rogue manufacturer files its RET.
                break;
        }
    }

    void apply_tamper() {
        const AttackSpec& a = *cfg.attack;
        PartitionLedger& replica = part(a.partition).replica(a.actor);
        const Hash256 target = replica.current().transactions.back().tid;
        suppress_evidence(replica, a.actor, target, net.now());
        mark_applied(target);
    }

    void mark_applied(const Hash256& target) {
        attack->applied = true;
        attack->applied_at = net.now();
        attack->target_tid = target;
        attack_round_mark = part(cfg.attack->partition).rounds().size();
    }

    // ---- reference replica ----

    const PartitionLedger& reference(PartitionId p) const {
        const Partition& partition = *partitions.at(p);
        std::set<EntityId> suspects;
        for (const auto& d : report.detections)
            if (d.partition == p && d.mechanism == "Diverged")
                suspects.insert(d.attributed.begin(), d.attributed.end());
        for (const auto& v : partition.validators())
            if (!suspects.contains(v)) return partition.replica(v);
        return partition.replica(partition.validators().front());
    }

    // ---- run ----

    ScenarioReport run() {
        if (ran) throw Error(ErrorCode::PreconditionFailed, "a simulation runs once");
        ran = true;
        report.seed = cfg.seed;
        if (cfg.attack) {
            attack = AttackOutcome{};
            attack->type = cfg.attack->type;
            attack->actor = cfg.attack->actor;
        }

        for (const auto& e : cfg.timeline) net.schedule(e.at, [this, e] { run_event(e); });
        if (cfg.attack) net.schedule(cfg.attack->at, [this] { run_attack(); });
        net.run_until_idle();
        if (cfg.horizon && *cfg.horizon > net.now()) net.run_until(*cfg.horizon);

        const PartitionLedger& p1_ref = reference(PartitionId::P1);
        for (const auto& [id, v] : vehicles) {
            const auto certs = escrow.certificates_of(id, kDisputeApprovals);
            std::set<Hash256> set(certs.begin(), certs.end());
            for (const auto& f : check_negligence(p1_ref, set, cfg.adjudication.negligence_deadline, net.now()))
                report.negligence.push_back(NegligenceRow{id, f});
        }

        for (PartitionId p : kAllPartitions) {
            const Partition& partition = part(p);
            report.halted[p] = partition.halted();
            for (const auto& v : partition.validators()) {
                const PartitionLedger& l = partition.replica(v);
                report.chains[p][v] =
                    ChainDigest{l.tip_id(), l.current().cblock_id, l.blocks().size(), l.committed_count(), verify_chain(l)};
            }
        }

        if (attack) {
            if (!attack->applied && attack->detail.empty()) attack->detail = "attack never found a target";
            if (attack->applied && !attack->detected && attack->detail.empty())
                attack->detail = "no detection mechanism fired";
            report.attacks.push_back(*attack);
        }
        report.finished_at = net.now();
        return report;
    }
};

Simulation::Simulation(ScenarioConfig config) : impl_(std::make_unique<Impl>(config, Rng(config.seed))) {
    impl_->setup();
}

Simulation::~Simulation() = default;

const ScenarioConfig& Simulation::config() const { return impl_->cfg; }
Network& Simulation::network() { return impl_->net; }
Partition& Simulation::partition(PartitionId p) { return impl_->part(p); }
const IdentityEscrow& Simulation::escrow() const { return impl_->escrow; }

VehicleState& Simulation::vehicle(const EntityId& id) {
    auto it = impl_->vehicles.find(id);
    if (it == impl_->vehicles.end()) throw Error(ErrorCode::UnknownEntity, "no vehicle " + id.str());
    return it->second;
}

Transaction Simulation::trigger_event_safety(const EntityId& vehicle, SafetyTrigger condition, Timestamp at,
                                             std::optional<double> speed) {
    if (!impl_->vehicles.contains(vehicle)) throw Error(ErrorCode::UnknownEntity, "no vehicle " + vehicle.str());
    return impl_->trigger_event_safety(vehicle, condition, at, speed);
}

StagedCollision Simulation::stage_collision(const CollisionSpec& spec, Timestamp at) {
    for (const auto* group : {&spec.struck, &spec.witnesses})
        for (const auto& id : *group)
            if (!impl_->vehicles.contains(id)) throw Error(ErrorCode::UnknownEntity, "no vehicle " + id.str());
    if (!impl_->vehicles.contains(spec.striking))
        throw Error(ErrorCode::UnknownEntity, "no vehicle " + spec.striking.str());
    return impl_->stage_collision(spec, at);
}

ScenarioReport Simulation::run() { return impl_->run(); }

const PartitionLedger& Simulation::reference_ledger(PartitionId p) const { return impl_->reference(p); }
const std::vector<std::string>& Simulation::audit_log() const { return impl_->audit; }

ScenarioReport run_scenario(const ScenarioConfig& config) {
    Simulation sim(config);
    return sim.run();
}

// ---- report JSON ---------------------------------------------------------------

Json to_json(const ScenarioReport& r) {
    Json submissions = Json::object();
    Json committed = Json::object();
    for (const auto& [p, kinds] : r.submissions) {
        Json pk = Json::object();
        Json ck = Json::object();
        for (const auto& [k, t] : kinds) {
            pk[std::string(to_string(k))] = Json{{"emitted", t.emitted},
                                                 {"committed", t.committed},
                                                 {"rejected", t.rejected},
                                                 {"undeliverable", t.undeliverable}};
            ck[std::string(to_string(k))] = t.committed;
        }
        submissions[std::string(to_string(p))] = pk;
        committed[std::string(to_string(p))] = ck;
    }
    Json outcomes = Json::object();
    for (const auto& [p, m] : r.outcomes) {
        Json o = Json::object();
        for (const auto& [k, n] : m) o[std::string(to_string(k))] = n;
        outcomes[std::string(to_string(p))] = o;
    }
    Json detections = Json::array();
    for (const auto& d : r.detections) {
        Json names = Json::array();
        for (const auto& a : d.attributed) names.push_back(a.str());
        detections.push_back(Json{{"mechanism", d.mechanism},
                                  {"partition", to_string(d.partition)},
                                  {"at", d.at},
                                  {"tid", d.tid ? Json(d.tid->hex()) : Json(nullptr)},
                                  {"attributed", names}});
    }
    Json attacks = Json::array();
    for (const auto& a : r.attacks)
        attacks.push_back(Json{{"type", to_string(a.type)},
                               {"actor", a.actor.str()},
                               {"applied", a.applied},
                               {"applied_at", a.applied_at},
                               {"target_tid", a.target_tid ? Json(a.target_tid->hex()) : Json(nullptr)},
                               {"detected", a.detected},
                               {"attribution_correct", a.attribution_correct},
                               {"mechanism", a.mechanism},
                               {"rounds_to_detection", a.rounds_to_detection ? Json(*a.rounds_to_detection) : Json(nullptr)},
                               {"detail", a.detail}});
    Json cases = Json::array();
    for (const auto& c : r.cases)
        cases.push_back(Json{{"case_id", c.collision.case_id},
                             {"at", c.collision.at},
                             {"verdict", c.verdict ? to_json(*c.verdict) : Json(nullptr)},
                             {"error", c.error}});
    Json reveals = Json::array();
    for (const auto& rv : r.reveals)
        reveals.push_back(Json{{"case_id", rv.case_id}, {"cert_id", rv.cert_id.hex()}, {"vehicle", rv.vehicle.str()}});
    Json negligence = Json::array();
    for (const auto& n : r.negligence)
        negligence.push_back(Json{{"vehicle", n.vehicle.str()},
                                  {"ut_tid", n.finding.ut_tid.hex()},
                                  {"et_tid", n.finding.et_tid ? Json(n.finding.et_tid->hex()) : Json(nullptr)},
                                  {"negligent", n.finding.negligent}});
    Json chains = Json::object();
    for (const auto& [p, m] : r.chains) {
        Json pc = Json::object();
        for (const auto& [v, d] : m)
            pc[v.str()] = Json{{"tip_id", d.tip_id.hex()},
                               {"cblock_id", d.cblock_id.hex()},
                               {"blocks", d.blocks},
                               {"transactions", d.transactions},
                               {"verifies", d.verifies}};
        chains[std::string(to_string(p))] = pc;
    }
    Json halted = Json::object();
    for (const auto& [p, h] : r.halted) halted[std::string(to_string(p))] = h;

    return Json{{"seed", r.seed},
                {"finished_at", r.finished_at},
                {"submissions", submissions},
                {"committed", committed},
                {"rejection_reasons", r.rejection_reasons},
                {"outcomes", outcomes},
                {"detections", detections},
                {"attacks", attacks},
                {"undetected_attacks", r.undetected_attacks()},
                {"cases", cases},
                {"reveals", reveals},
                {"negligence", negligence},
                {"chains", chains},
                {"halted", halted},
                {"valid", r.valid},
                {"invalid_reason", r.invalid_reason}};
}

void save_artifacts(const Simulation& sim, const ScenarioReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    save_ledger(sim.reference_ledger(PartitionId::P1), dir / "p1.avlb");
    save_ledger(sim.reference_ledger(PartitionId::P2), dir / "p2.avlb");

    auto write = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
        out << text;
    };
    std::string audit;
    for (const auto& line : sim.audit_log()) audit += line + "\n";
    write(dir / "audit.jsonl", audit);
    for (const auto& c : report.cases) write(dir / (c.collision.case_id + ".json"), to_json(c.collision).dump(2) + "\n");
}

}  // namespace avl
