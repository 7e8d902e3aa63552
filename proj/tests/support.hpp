#ifndef AVLEDGER_TESTS_SUPPORT_HPP
#define AVLEDGER_TESTS_SUPPORT_HPP

#include "avledger/validation.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <tuple>
#include <string>
#include <vector>

namespace avl::test {

// Small self-contained world: a CA, one entity per fixed role, registered
// vehicles, and helpers that build correctly signed transactions of every kind.
struct World {
    Rng rng;
    CertificateAuthority ca;
    IdentityEscrow escrow{"gta", "la"};
    std::map<EntityId, Role> roles{{"am1", Role::AM}, {"ic1", Role::IC}, {"st1", Role::ST},
                                   {"gta", Role::GTA}, {"la", Role::LA}};
    std::map<EntityId, KeyPair> keys;

    explicit World(std::uint64_t seed = 1) : rng(seed), ca(KeyPair::generate(rng)) {
        for (const auto& [id, role] : roles) keys.emplace(id, KeyPair::generate(rng));
        for (const char* v : {"av1", "av2", "av3"}) escrow.register_vehicle(v);
    }

    EntityId entity_for(Role r) const {
        for (const auto& [id, role] : roles)
            if (role == r) return id;
        return {};
    }

    std::vector<Member> members(PartitionId p) const {
        std::vector<Member> out;
        for (const auto& [id, role] : roles) {
            const bool prop = table1_proposer(role, p);
            const bool val = table1_validator(role, p);
            if (prop || val) out.push_back(Member{id, role, keys.at(id).public_key, prop, val});
        }
        return out;
    }

    PartitionLedger ledger(PartitionId p, std::uint32_t b_max = kDefaultBMax) const {
        return PartitionLedger::create(p, {ca.root_certificate()}, members(p), b_max);
    }

    Signer fixed(const EntityId& id) const { return Signer{roles.at(id), id, keys.at(id)}; }

    Pseudonym pseudonym(Timestamp at, const EntityId& vehicle = "av1") {
        return rotate_pseudonym(vehicle, ca, escrow, rng, at);
    }

    Hash256 random_hash() { return Hash256{rng.bytes32()}; }

    EvidenceData edata(Timestamp ts, GeoPoint loc = {51.5, -0.12}, double speed = 20.0) {
        EvidenceData e;
        e.loc = loc;
        e.ts = ts;
        e.hv_data = EventSafetyMessage{loc, speed, LanePosition{2, 90.0}, DriveMode::Autonomous,
                                       SafetyTrigger::HardBrake};
        e.ts_data = TamperStoreDigest{{random_hash(), random_hash()}, ts};
        e.enc_witness = {Bytes{1, 2, 3}, Bytes{4, 5}};
        return seal_edata(std::move(e));
    }

    Transaction est(Timestamp at, double speed = 20.0, SafetyTrigger trig = SafetyTrigger::HardBrake,
                    const EntityId& vehicle = "av1") {
        auto ps = pseudonym(at, vehicle);
        EstBody body{at, EventSafetyMessage{{51.5, -0.12}, speed, {1, 0.0}, DriveMode::Manual, trig},
                     TamperStoreDigest{{random_hash()}, at}};
        return build_transaction(TxKind::EST, body, Signer{Role::AV, {}, ps.keys}, ps.cert, at);
    }

    Transaction pet(Timestamp at, Role role = Role::AV, const EntityId& vehicle = "av1") {
        auto ps = pseudonym(at, vehicle);
        EvidenceData e = edata(at);
        return build_transaction(TxKind::PET, PetBody{e, e.ts_data}, Signer{role, {}, ps.keys}, ps.cert, at);
    }

    Transaction ut(Timestamp at, bool countersigned = true, const EntityId& vehicle = "av1") {
        UpdateBody body{random_hash(), "fw 4.2.1", at};
        Transaction tx = build_transaction(TxKind::UT, body, fixed("am1"), std::nullopt, at);
        if (!countersigned) return tx;
        auto ps = pseudonym(at, vehicle);
        return countersign(std::move(tx), Signer{Role::AV, {}, ps.keys}, ps.cert, at);
    }

    Transaction et(const Hash256& parent, Timestamp at, const EntityId& vehicle = "av1") {
        auto ps = pseudonym(at, vehicle);
        return build_transaction(TxKind::ET, ExecBody{ExecStatus::Executed, at}, Signer{Role::AV, {}, ps.keys},
                                 ps.cert, at, parent);
    }

    Transaction mt(Timestamp at, bool roadworthy = true, const EntityId& vehicle = "av1") {
        auto ps = pseudonym(at, vehicle);
        MaintBody body{random_hash(), roadworthy, "st1", ps.cert.cert_id, at};
        return build_transaction(TxKind::MT, body, fixed("st1"), std::nullopt, at);
    }

    Transaction ret(const Transaction& pet_tx, const EntityId& requester, Timestamp at) {
        RetBody body{requester, std::get<PetBody>(pet_tx.body).edata, {}, at};
        return build_transaction(TxKind::RET, body, fixed(requester), pet_tx.cert, at);
    }

    // Verifies then folds, sealing at B_Max. Fails the test on rejection.
    void commit(PartitionLedger& l, const Transaction& tx, Timestamp at) {
        const Verdict v = verify_transaction(tx, l, at);
        ASSERT_TRUE(v.accepted()) << to_string(tx.kind) << " rejected: " << to_string(v.reason);
        l.append_validated(tx);
        l.maybe_seal();
    }

    // A P1 ledger holding n transactions cycling through every kind.
    PartitionLedger mixed_p1(std::size_t n, std::uint32_t b_max = kDefaultBMax) {
        PartitionLedger l = ledger(PartitionId::P1, b_max);
        Timestamp t = 100;
        std::optional<Hash256> last_ut;
        std::optional<Transaction> last_pet;
        for (std::size_t i = 0; i < n; ++i, t += 10) {
            Transaction tx;
            switch (i % 6) {
                case 0: tx = est(t); break;
                case 1: tx = pet(t); last_pet = tx; break;
                case 2: tx = ut(t); last_ut = tx.tid; break;
                case 3: tx = et(*last_ut, t); break;
                case 4: tx = mt(t); break;
                default: tx = ret(*last_pet, i % 12 == 5 ? "ic1" : "am1", t); break;
            }
            commit(l, tx, t);
        }
        return l;
    }
};

// Who may originate what, written out cell by cell. P1 proposers are AV/W
// (vehicle side), AM and ST; P2 proposers are IC and AM. The one cell outside
// the proposer column of the role table is the insurer's RET in P1, which the
// P1 validators raise towards P2.
inline const std::set<std::tuple<Role, TxKind, PartitionId>> kExpectedAuthorized{
    {Role::AV, TxKind::EST, PartitionId::P1}, {Role::AV, TxKind::PET, PartitionId::P1},
    {Role::W, TxKind::PET, PartitionId::P1},  {Role::AM, TxKind::UT, PartitionId::P1},
    {Role::AV, TxKind::ET, PartitionId::P1},  {Role::ST, TxKind::MT, PartitionId::P1},
    {Role::AM, TxKind::RET, PartitionId::P1}, {Role::IC, TxKind::RET, PartitionId::P1},
    {Role::IC, TxKind::RET, PartitionId::P2}, {Role::AM, TxKind::RET, PartitionId::P2},
};

// A fully signed transaction of `kind` whose originator holds `role`.
inline Transaction originate(World& w, Role role, TxKind kind, Timestamp at, const Hash256& ut_parent) {
    auto ps = w.pseudonym(at);
    Signer signer = is_vehicle_role(role) ? Signer{role, {}, ps.keys} : w.fixed(w.entity_for(role));
    EvidenceData e = w.edata(at);
    std::optional<PseudonymCertificate> cert = ps.cert;
    std::optional<Hash256> parent;
    TxBody body;
    switch (kind) {
        case TxKind::EST: body = EstBody{at, EventSafetyMessage{}, {}}; break;
        case TxKind::PET: body = PetBody{e, e.ts_data}; break;
        case TxKind::UT: body = UpdateBody{w.random_hash(), "fw", at}; cert.reset(); break;
        case TxKind::ET: body = ExecBody{ExecStatus::Executed, at}; parent = ut_parent; break;
        case TxKind::MT: body = MaintBody{w.random_hash(), true, "st1", ps.cert.cert_id, at}; cert.reset(); break;
        case TxKind::RET: body = RetBody{w.entity_for(role).empty() ? "someone" : w.entity_for(role), e, {}, at}; break;
    }
    Transaction tx = build_transaction(kind, body, signer, cert, at, parent);
    if (kind == TxKind::UT && role != Role::AV) {
        auto cps = w.pseudonym(at);
        tx = countersign(tx, Signer{Role::AV, {}, cps.keys}, cps.cert, at);
    }
    return tx;
}

}  // namespace avl::test

#endif
