#ifndef AVLEDGER_SCENARIOS_HPP
#define AVLEDGER_SCENARIOS_HPP

#include "avledger/adjudicator.hpp"
#include "avledger/netsim.hpp"

#include <filesystem>
#include <memory>

namespace avl {

// ---- configuration -----------------------------------------------------------

enum class AttackType : std::uint8_t { TamperCBlock, FalseInformation, SuppressEvidence };
std::string_view to_string(AttackType a);
std::optional<AttackType> parse_attack(std::string_view s);

enum class EventType : std::uint8_t { Update, Maintenance, Safety, Collision };
std::string_view to_string(EventType e);

struct ActorCounts {
    std::uint32_t vehicles = 4;
    std::uint32_t manufacturers = 1;
    std::uint32_t insurers = 1;
    std::uint32_t technicians = 1;
};

struct NetworkParams {
    double drop_prob = 0.0;
    Duration retry_interval = kDefaultRetryInterval;
    std::uint32_t max_attempts = kDefaultMaxAttempts;
};

struct TimelineEvent {
    Timestamp at = 0;
    EventType type = EventType::Safety;

    // update, maintenance, safety
    EntityId vehicle;
    // update
    bool execute = true;
    std::optional<Duration> exec_delay;
    // maintenance
    bool roadworthy = true;
    std::optional<EntityId> technician;
    // safety
    SafetyTrigger trigger = SafetyTrigger::HardBrake;
    std::optional<double> speed;
    // collision
    EntityId striking;
    std::vector<EntityId> struck;
    std::vector<EntityId> witnesses;  // explicit witnesses, or
    std::uint32_t n_witnesses = 0;    // picked from uninvolved vehicles
    bool hit_and_run = false;
    std::optional<DriveMode> drive_mode;  // striking vehicle's mode
};

struct AttackSpec {
    AttackType type = AttackType::TamperCBlock;
    EntityId actor;
    Timestamp at = 0;
    PartitionId partition = PartitionId::P1;
    bool all_replicas = false;            // suppression on every replica (out of model)
    std::optional<double> forged_speed;   // false information; default original / 3
    Duration time_shift = 30;
    double loc_shift_m = 0.0;
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    ActorCounts actors;
    std::vector<TimelineEvent> timeline;
    std::optional<AttackSpec> attack;
    NetworkParams network;
    std::uint32_t b_max = kDefaultBMax;
    Duration cert_validity = kDefaultCertValidity;
    Duration ret_delay = 600;
    Duration exec_delay = 3600;
    std::optional<Timestamp> horizon;  // run the clock at least this far
    GeoPoint origin{51.5007, -0.1246};
    AdjudicationParams adjudication;
};

// Throws ConfigError naming the offending field, e.g. "timeline[2].vehicle".
ScenarioConfig parse_scenario_config(const Json& j);
ScenarioConfig load_scenario_config(const std::filesystem::path& path);
Json to_json(const ScenarioConfig& c);

// Entity ids the config implies: av1.., am1.., ic1.., st1.., gta, la.
std::map<EntityId, Role> scenario_entities(const ActorCounts& a);

// Seeded generators used by the acceptance runs.
ScenarioConfig generate_benign_config(std::uint64_t seed);
ScenarioConfig generate_attack_config(std::uint64_t seed, AttackType type);

// ---- report ----------------------------------------------------------------

struct KindTally {
    std::size_t emitted = 0;
    std::size_t committed = 0;
    std::size_t rejected = 0;
    std::size_t undeliverable = 0;
};

struct Detection {
    std::string mechanism;  // "Diverged", "HashMismatch", "SpatioTemporalMismatch"
    PartitionId partition = PartitionId::P1;
    Timestamp at = 0;
    std::optional<Hash256> tid;  // round transaction, when from consensus
    std::vector<EntityId> attributed;
};

struct AttackOutcome {
    AttackType type = AttackType::TamperCBlock;
    EntityId actor;
    bool applied = false;
    Timestamp applied_at = 0;
    std::optional<Hash256> target_tid;
    bool detected = false;
    bool attribution_correct = false;
    std::string mechanism;
    // Consensus rounds in the partition from the mutation to the first
    // Diverged one (1 = the very next round).
    std::optional<std::size_t> rounds_to_detection;
    std::string detail;
};

struct CaseRecord {
    CollisionCase collision;
    std::optional<LiabilityVerdict> verdict;
    std::string error;  // set when no verdict could be reached
};

struct RevealRecord {
    std::string case_id;
    Hash256 cert_id;
    EntityId vehicle;
};

struct NegligenceRow {
    EntityId vehicle;
    NegligenceFinding finding;
};

struct ChainDigest {
    Hash256 tip_id;
    Hash256 cblock_id;
    std::size_t blocks = 0;
    std::size_t transactions = 0;
    bool verifies = true;
};

struct ScenarioReport {
    std::uint64_t seed = 0;
    Timestamp finished_at = 0;
    std::map<PartitionId, std::map<TxKind, KindTally>> submissions;
    std::map<std::string, std::size_t> rejection_reasons;
    std::map<PartitionId, std::map<Outcome, std::size_t>> outcomes;
    std::vector<Detection> detections;
    std::vector<AttackOutcome> attacks;
    std::vector<CaseRecord> cases;
    std::vector<RevealRecord> reveals;
    std::vector<NegligenceRow> negligence;
    std::map<PartitionId, std::map<EntityId, ChainDigest>> chains;
    std::map<PartitionId, bool> halted;
    bool valid = true;  // false for out-of-model attacks
    std::string invalid_reason;

    std::size_t committed(PartitionId p, TxKind k) const;
    std::size_t undetected_attacks() const;
    std::size_t diverged_rounds() const;
};

Json to_json(const ScenarioReport& r);

// ---- simulation --------------------------------------------------------------

struct VehicleState {
    EntityId id;
    EntityId manufacturer;
    EntityId insurer;
    GeoPoint position;
    double speed = 0.0;
    LanePosition lane;
    DriveMode mode = DriveMode::Autonomous;
    std::vector<Hash256> est_tids;
    std::set<Hash256> seen_uts;
};

struct CollisionSpec {
    EntityId striking;
    std::vector<EntityId> struck;
    std::vector<EntityId> witnesses;
    bool hit_and_run = false;
    std::optional<DriveMode> drive_mode;
};

struct StagedCollision {
    std::string case_id;
    Timestamp at = 0;
    GeoPoint loc;
    CollisionSpec spec;
    std::vector<Transaction> pets;  // involved vehicles first, then witnesses
    std::vector<Transaction> rets;  // insurer then manufacturer, per involved vehicle with a PET
    std::map<Hash256, EntityId> pet_owner;
    std::map<Hash256, EntityId> ret_vehicle;
    std::map<EntityId, Hash256> beacon_cert;  // pseudonym each involved vehicle broadcast
};

struct MutationRecord {
    EntityId validator;
    PartitionId partition = PartitionId::P1;
    Hash256 tid;
    TxKind kind = TxKind::PET;
    Timestamp at = 0;
};

struct ForgeSpec {
    std::optional<double> speed;
    Duration time_shift = 0;
    double loc_shift_m = 0.0;
};

// Copy of the original with hv_data, ts and loc altered as requested and a
// freshly recomputed edata_hash.
EvidenceData inject_false_information(const EvidenceData& original, const ForgeSpec& forge);

// Deletes target from one replica and re-folds it. NotFound when absent.
MutationRecord suppress_evidence(PartitionLedger& replica, const EntityId& validator, const Hash256& target,
                                 Timestamp at);

struct ScenarioRun;

class Simulation {
public:
    explicit Simulation(ScenarioConfig config);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    const ScenarioConfig& config() const;
    Network& network();
    Partition& partition(PartitionId p);
    const IdentityEscrow& escrow() const;
    VehicleState& vehicle(const EntityId& id);

    // EST built under a fresh pseudonym from the vehicle's kinematic state.
    Transaction trigger_event_safety(const EntityId& vehicle, SafetyTrigger condition, Timestamp at,
                                     std::optional<double> speed = std::nullopt);

    // PETs from involved vehicles and witnesses, then the insurers' and
    // manufacturers' RETs (requested ret_delay later).
    StagedCollision stage_collision(const CollisionSpec& spec, Timestamp at);

    // Executes the whole timeline and returns the report.
    ScenarioReport run();

    // After run(): the replica used as reference for a partition (the first
    // validator whose chain verifies and that no detection names).
    const PartitionLedger& reference_ledger(PartitionId p) const;
    const std::vector<std::string>& audit_log() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Convenience wrapper: one full run.
ScenarioReport run_scenario(const ScenarioConfig& config);

// Writes p1.avlb, p2.avlb, audit.jsonl and case-<id>.json into dir.
void save_artifacts(const Simulation& sim, const ScenarioReport& report, const std::filesystem::path& dir);

}  // namespace avl

#endif
