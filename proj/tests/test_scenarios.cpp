#include "avledger/scenarios.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <numbers>

namespace avl {
namespace {

ScenarioConfig cfg(const char* text) { return parse_scenario_config(Json::parse(text)); }

void expect_config_error(const char* text, const std::string& path) {
    try {
        cfg(text);
        ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
        EXPECT_EQ(std::string(e.what()).rfind(path + ":", 0), 0u) << e.what();
    }
}

TEST(ScenarioConfig, ErrorsNameTheField) {
    expect_config_error(R"({"timeline": [{"type": "safety", "at": 1, "vehicle": "av1", "trigger": "hard_brake"},
                                         {"type": "safety", "at": 2, "vehicle": "av9", "trigger": "hard_brake"}]})",
                        "timeline[1].vehicle");
    expect_config_error(R"({"timeline": [{"type": "safety", "at": 5, "vehicle": "av1", "trigger": "hard_brake"},
                                         {"type": "safety", "at": 4, "vehicle": "av1", "trigger": "hard_brake"}]})",
                        "timeline[1].at");
    expect_config_error(R"({"timeline": [{"type": "safety", "at": 1, "vehicle": "av1", "trigger": "skid"}]})",
                        "timeline[0].trigger");
    expect_config_error(R"({"timeline": [{"type": "crash", "at": 1}]})", "timeline[0].type");
    expect_config_error(R"({"network": {"drop_prob": 1.0}})", "network.drop_prob");
    expect_config_error(R"({"attack": {"type": "TamperCBlock", "actor": "zz1", "at": 1}})", "attack.actor");
    expect_config_error(R"({"attack": {"type": "Bribe", "actor": "am1", "at": 1}})", "attack.type");
    expect_config_error(R"({"seeed": 1})", "seeed");
    expect_config_error(R"({"b_max": 0})", "b_max");
}

TEST(ScenarioConfig, RoundTripsThroughJson) {
    const ScenarioConfig c = generate_attack_config(5, AttackType::FalseInformation);
    const Json j = to_json(c);
    EXPECT_EQ(to_json(parse_scenario_config(j)).dump(), j.dump());
}

TEST(ScenarioConfig, ShippedConfigsLoad) {
    for (const char* name : {"benign", "tamper", "false_information", "suppress", "hit_and_run"}) {
        const auto path = std::filesystem::path(AVL_SOURCE_DIR) / "configs" / (std::string(name) + ".json");
        EXPECT_NO_THROW(load_scenario_config(path)) << name;
    }
    try {
        load_scenario_config("/nonexistent/x.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
}

TEST(RunScenario, EmptyTimelineIsGenesisOnly) {
    const auto r = run_scenario(cfg(R"({"seed": 3})"));
    for (const auto& [p, chains] : r.chains) {
        for (const auto& [v, d] : chains) {
            EXPECT_EQ(d.transactions, 0u);
            EXPECT_EQ(d.blocks, 0u);
            EXPECT_EQ(d.tip_id, d.cblock_id);  // nothing folded on top of genesis
            EXPECT_TRUE(d.verifies);
        }
    }
    for (PartitionId p : kAllPartitions)
        for (TxKind k : kAllKinds) EXPECT_EQ(r.committed(p, k), 0u);
    EXPECT_TRUE(r.detections.empty());
}

TEST(RunScenario, UpdateLifecycleLinksUtAndEt) {
    const auto r = run_scenario(cfg(R"({"seed": 4, "horizon": 1000000,
        "timeline": [{"type": "update", "at": 100, "vehicle": "av1"}]})"));
    EXPECT_EQ(r.committed(PartitionId::P1, TxKind::UT), 1u);
    EXPECT_EQ(r.committed(PartitionId::P1, TxKind::ET), 1u);
    ASSERT_EQ(r.negligence.size(), 1u);
    EXPECT_EQ(r.negligence[0].vehicle, EntityId("av1"));
    EXPECT_TRUE(r.negligence[0].finding.et_tid);
    EXPECT_FALSE(r.negligence[0].finding.negligent);
}

TEST(RunScenario, IgnoredUpdateBecomesNegligent) {
    const auto r = run_scenario(cfg(R"({"seed": 4, "horizon": 1000000,
        "timeline": [{"type": "update", "at": 100, "vehicle": "av1", "execute": false}]})"));
    EXPECT_EQ(r.committed(PartitionId::P1, TxKind::ET), 0u);
    ASSERT_EQ(r.negligence.size(), 1u);
    EXPECT_TRUE(r.negligence[0].finding.negligent);
}

TEST(RunScenario, TamperByManufacturerIsAttributed) {
    const auto r = run_scenario(cfg(R"({"seed": 9, "timeline": [
        {"type": "safety", "at": 100, "vehicle": "av1", "trigger": "hard_brake"},
        {"type": "safety", "at": 200, "vehicle": "av2", "trigger": "hard_brake"}],
        "attack": {"type": "TamperCBlock", "actor": "am1", "at": 150}})"));
    ASSERT_EQ(r.attacks.size(), 1u);
    const auto& a = r.attacks[0];
    EXPECT_TRUE(a.applied);
    EXPECT_TRUE(a.detected);
    EXPECT_TRUE(a.attribution_correct);
    EXPECT_EQ(a.mechanism, "Diverged");
    EXPECT_EQ(a.rounds_to_detection, std::size_t{1});
    ASSERT_FALSE(r.detections.empty());
    EXPECT_EQ(r.detections[0].attributed, std::vector<EntityId>{"am1"});
    EXPECT_TRUE(r.halted.at(PartitionId::P1));
    EXPECT_EQ(r.undetected_attacks(), 0u);
}

// Every generated attack is caught by its mechanism and pinned on its actor.
TEST(RunScenario, GeneratedAttacksAreDetected) {
    for (AttackType t : {AttackType::TamperCBlock, AttackType::FalseInformation, AttackType::SuppressEvidence}) {
        for (std::uint64_t seed = 1; seed <= 8; ++seed) {
            const auto r = run_scenario(generate_attack_config(seed, t));
            ASSERT_EQ(r.attacks.size(), 1u);
            const auto& a = r.attacks[0];
            EXPECT_TRUE(a.applied) << to_string(t) << " seed " << seed << ": " << a.detail;
            EXPECT_TRUE(a.detected) << to_string(t) << " seed " << seed;
            EXPECT_TRUE(a.attribution_correct) << to_string(t) << " seed " << seed;
            if (t == AttackType::FalseInformation) EXPECT_EQ(a.mechanism, "HashMismatch");
            else EXPECT_EQ(a.mechanism, "Diverged");
            if (t == AttackType::SuppressEvidence) EXPECT_EQ(a.rounds_to_detection, std::size_t{1});
            EXPECT_TRUE(r.valid);
        }
    }
}

TEST(RunScenario, SuppressionOnEveryReplicaIsOutOfModel) {
    ScenarioConfig c = generate_attack_config(3, AttackType::SuppressEvidence);
    c.attack->all_replicas = true;
    const auto r = run_scenario(c);
    EXPECT_FALSE(r.valid);
    EXPECT_FALSE(r.invalid_reason.empty());
    ASSERT_EQ(r.attacks.size(), 1u);
    EXPECT_TRUE(r.attacks[0].applied);
    EXPECT_FALSE(r.attacks[0].detected);
    EXPECT_EQ(r.diverged_rounds(), 0u);
}

TEST(RunScenario, BenignRunsHaveNoDetections) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto r = run_scenario(generate_benign_config(seed));
        EXPECT_TRUE(r.detections.empty()) << "seed " << seed;
        EXPECT_EQ(r.diverged_rounds(), 0u);
        for (const auto& c : r.cases)
            if (c.verdict) EXPECT_FALSE(c.verdict->flags.contains(VerdictFlag::FalseInfoDetected));
    }
}

// Property: emitted == committed + rejected + undeliverable, per partition and kind.
TEST(RunScenario, SubmissionsAreConserved) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ScenarioConfig c = generate_benign_config(seed);
        c.network.drop_prob = 0.6;
        c.network.max_attempts = 2;
        const auto r = run_scenario(c);
        std::size_t lost = 0;
        for (const auto& [p, kinds] : r.submissions) {
            for (const auto& [k, t] : kinds) {
                EXPECT_EQ(t.emitted, t.committed + t.rejected + t.undeliverable)
                    << "seed " << seed << " " << to_string(p) << " " << to_string(k);
                EXPECT_EQ(t.committed, r.committed(p, k));
                lost += t.undeliverable;
            }
        }
        if (seed == 1) EXPECT_GT(lost, 0u);
        // Committed totals agree with what the replicas actually hold.
        for (const auto& [p, chains] : r.chains) {
            std::size_t committed = 0;
            for (TxKind k : kAllKinds) committed += r.committed(p, k);
            for (const auto& [v, d] : chains) EXPECT_EQ(d.transactions, committed) << to_string(p) << " " << v.str();
        }
    }
}

TEST(RunScenario, Deterministic) {
    for (std::uint64_t seed : {2u, 17u}) {
        const ScenarioConfig c = generate_attack_config(seed, AttackType::SuppressEvidence);
        Simulation a(c), b(c);
        const auto ra = a.run(), rb = b.run();
        EXPECT_EQ(to_json(ra).dump(), to_json(rb).dump());
        EXPECT_EQ(a.audit_log(), b.audit_log());
        EXPECT_EQ(serialize_ledger(a.reference_ledger(PartitionId::P1)),
                  serialize_ledger(b.reference_ledger(PartitionId::P1)));
    }
}

// ---- actor behaviour --------------------------------------------------------

class SimTest : public ::testing::Test {
protected:
    Simulation sim{cfg(R"({"seed": 21, "actors": {"vehicles": 5}})")};
};

TEST_F(SimTest, EventSafetyFromKinematicState) {
    const Transaction est = sim.trigger_event_safety("av1", SafetyTrigger::HardBrake, 100, 20.0);
    const auto& b = std::get<EstBody>(est.body);
    EXPECT_EQ(est.kind, TxKind::EST);
    EXPECT_EQ(b.esm.trigger, SafetyTrigger::HardBrake);
    EXPECT_EQ(b.esm.speed, 20.0);
    EXPECT_EQ(b.ts, 100);

    std::set<Hash256> certs;
    for (int i = 0; i < 3; ++i) certs.insert(sim.trigger_event_safety("av1", SafetyTrigger::HardBrake, 200 + i).cert->cert_id);
    EXPECT_EQ(certs.size(), 3u);

    const Transaction ww = sim.trigger_event_safety("av2", SafetyTrigger::WrongWay, 300);
    EXPECT_EQ(std::get<EstBody>(ww.body).esm.trigger, SafetyTrigger::WrongWay);
    auto round = sim.partition(PartitionId::P1).submit("av2", ww, 300);
    ASSERT_TRUE(round);
    EXPECT_EQ(round->outcome, Outcome::Committed);
}

TEST_F(SimTest, RearEndWithOneWitness) {
    const Timestamp at = 1000;
    const auto sc = sim.stage_collision(CollisionSpec{"av1", {"av2"}, {"av3"}, false, std::nullopt}, at);
    ASSERT_EQ(sc.pets.size(), 3u);
    const auto& first = std::get<PetBody>(sc.pets[0].body).edata;
    for (const auto& pet : sc.pets) {
        const auto& e = std::get<PetBody>(pet.body).edata;
        EXPECT_LE(std::abs(e.ts - at), 2);
        EXPECT_TRUE(spatiotemporal_consistent(e, first, 2, 100.0));
        EXPECT_EQ(e.edata_hash, compute_edata_hash(e));
    }
    EXPECT_EQ(sc.pets[2].signatures[0].role, Role::W);
    EXPECT_EQ(sc.rets.size(), 4u);  // insurer and manufacturer for each involved vehicle
    for (const auto& ret : sc.rets) EXPECT_GE(std::get<RetBody>(ret.body).requested_at, at);
}

TEST_F(SimTest, HitAndRunOmitsFleeingPet) {
    const auto sc = sim.stage_collision(CollisionSpec{"av1", {"av2"}, {"av3", "av4"}, true, std::nullopt}, 1000);
    EXPECT_EQ(sc.pets.size(), 3u);
    for (const auto& pet : sc.pets) EXPECT_NE(sc.pet_owner.at(pet.tid), EntityId("av1"));
    EXPECT_TRUE(sc.beacon_cert.contains("av1"));
}

TEST_F(SimTest, NoWitnessesNoWitnessBlobs) {
    const auto sc = sim.stage_collision(CollisionSpec{"av1", {"av2"}, {}, false, std::nullopt}, 1000);
    EXPECT_EQ(sc.pets.size(), 2u);
    for (const auto& pet : sc.pets) EXPECT_TRUE(std::get<PetBody>(pet.body).edata.enc_witness.empty());
}

TEST_F(SimTest, SuppressionTouchesOneReplica) {
    auto& p1 = sim.partition(PartitionId::P1);
    const auto sc = sim.stage_collision(CollisionSpec{"av1", {"av2"}, {}, false, std::nullopt}, 1000);
    for (const auto& pet : sc.pets) ASSERT_EQ(p1.submit(sc.pet_owner.at(pet.tid), pet, 1000)->outcome, Outcome::Committed);
    const Hash256 target = sc.pets[0].tid;
    const auto rec = suppress_evidence(p1.replica("ic1"), "ic1", target, 1001);
    EXPECT_EQ(rec.tid, target);
    EXPECT_EQ(rec.kind, TxKind::PET);
    EXPECT_FALSE(p1.replica("ic1").contains(target));
    TxFilter f;
    f.kind = TxKind::PET;
    for (const char* honest : {"am1", "st1"}) EXPECT_EQ(p1.replica(honest).query(f).size(), 2u);
    try {
        suppress_evidence(p1.replica("ic1"), "ic1", target, 1002);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotFound);
    }
    auto next = p1.submit("av3", sim.trigger_event_safety("av3", SafetyTrigger::HardBrake, 1003), 1003);
    EXPECT_EQ(next->outcome, Outcome::Diverged);
    EXPECT_EQ(detect_tamper(*next), std::vector<EntityId>{"ic1"});
}

// ---- false information --------------------------------------------------------

TEST(FalseInformation, ForgedSpeedIsHashMismatch) {
    EvidenceData original;
    original.ts = 1000;
    original.loc = {51.5, -0.12};
    original.hv_data.speed = 30.0;
    original = seal_edata(original);
    const EvidenceData forged = inject_false_information(original, ForgeSpec{10.0, 0, 0.0});
    EXPECT_EQ(forged.hv_data.speed, 10.0);
    EXPECT_EQ(forged.edata_hash, compute_edata_hash(forged));
    EXPECT_EQ(cross_check_edata(forged, original, 2, 100.0), CrossCheck::HashMismatch);
}

TEST(FalseInformation, IdentityForgeryIsNotAnAttack) {
    EvidenceData original;
    original.ts = 1000;
    original = seal_edata(original);
    const EvidenceData same = inject_false_information(original, ForgeSpec{});
    EXPECT_EQ(same.edata_hash, original.edata_hash);
    EXPECT_EQ(cross_check_edata(same, original, 2, 100.0), CrossCheck::Consistent);
}

TEST(FalseInformation, KilometreShiftFailsSpatialCheck) {
    EvidenceData original;
    original.ts = 1000;
    original.loc = {51.5, -0.12};
    original = seal_edata(original);
    const EvidenceData moved = inject_false_information(original, ForgeSpec{std::nullopt, 0, 1000.0});
    const double metres = 6'371'000.0 * (moved.loc.lat - original.loc.lat) * std::numbers::pi / 180.0;
    EXPECT_NEAR(metres, 1000.0, 1.0);
    EXPECT_EQ(moved.loc.lon, original.loc.lon);
    EXPECT_FALSE(spatiotemporal_consistent(moved, original, 2, 100.0));
    EXPECT_EQ(moved.ts, original.ts);
}

}  // namespace
}  // namespace avl
