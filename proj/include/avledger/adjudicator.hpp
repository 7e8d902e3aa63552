#ifndef AVLEDGER_ADJUDICATOR_HPP
#define AVLEDGER_ADJUDICATOR_HPP

#include "avledger/ledger.hpp"
#include "avledger/render.hpp"

#include <map>
#include <set>

namespace avl {

inline constexpr Duration kDefaultNegligenceDeadline = 7 * 24 * 3600;
inline constexpr Duration kDefaultMaintenanceWindow = 48 * 3600;
inline constexpr Duration kDefaultStagedWindow = 30 * 24 * 3600;
inline constexpr std::uint32_t kDefaultStagedThreshold = 3;
inline constexpr Duration kDefaultTimeTolerance = 2;
inline constexpr double kDefaultDistanceTolerance = 100.0;

// ---- negligence ------------------------------------------------------------

struct NegligenceFinding {
    Hash256 ut_tid;
    Timestamp ut_time = 0;
    std::optional<Hash256> et_tid;  // linked execution, if any
    bool negligent = false;
};

// Pure predicate behind check_negligence. A UT is negligent once the
// deadline has passed without an execution inside [ut_time, ut_time + deadline].
bool is_negligent(Timestamp ut_time, std::optional<Timestamp> et_time, Timestamp at, Duration deadline);

// One finding per committed UT countersigned under one of vehicle_certs.
std::vector<NegligenceFinding> check_negligence(const PartitionLedger& ledger,
                                                const std::set<Hash256>& vehicle_certs,
                                                Duration deadline, Timestamp at);

// ---- evidence cross-check ----------------------------------------------------

enum class CrossCheck : std::uint8_t { Consistent, HashMismatch, SpatioTemporalMismatch };
std::string_view to_string(CrossCheck c);

CrossCheck cross_check_edata(const EvidenceData& a, const EvidenceData& b, Duration time_tol, double dist_tol);
bool spatiotemporal_consistent(const EvidenceData& a, const EvidenceData& b, Duration time_tol, double dist_tol);

// ---- staged accidents --------------------------------------------------------

// Counts hard_brake digests with ts in [collision_at - window, collision_at).
bool check_staged(const std::vector<EstDigest>& history, Timestamp collision_at, Duration window,
                  std::uint32_t threshold);

// ---- cases and verdicts ------------------------------------------------------

struct CaseParty {
    EntityId vehicle;
    EntityId manufacturer;
    EntityId insurer;
    bool striking = false;
    std::optional<Hash256> pet_tid;  // absent for a vehicle that fled
    std::vector<Hash256> cert_ids;   // pseudonyms revealed through escrow
};

// One evidence copy handed over by an insurer or manufacturer.
struct CaseSubmission {
    EntityId submitter;
    Role role = Role::IC;
    EntityId vehicle;
    std::optional<Hash256> ret_tid;
    EvidenceData edata;
};

struct CollisionCase {
    std::string case_id;
    Timestamp at = 0;
    GeoPoint loc;
    bool hit_and_run = false;
    std::vector<CaseParty> parties;
    std::vector<Hash256> pets;  // every PET of the collision, witnesses included
    std::vector<CaseSubmission> submissions;
    std::map<EntityId, std::vector<EstDigest>> est_history;
    std::map<EntityId, std::vector<std::pair<Hash256, std::optional<Hash256>>>> ut_et_links;
};

enum class LiabilityClass : std::uint8_t {
    ProductDefect,
    SoftwareFault,
    ServiceFault,
    OwnerNegligence,
    StagedSuspicion,
    Inconclusive,
};
enum class VerdictFlag : std::uint8_t { FalseInfoDetected, InconsistentWitness };

std::string_view to_string(LiabilityClass c);
std::string_view to_string(VerdictFlag f);

struct FraudFinding {
    EntityId submitter;
    Role role = Role::IC;
    EntityId vehicle;
    CrossCheck result = CrossCheck::Consistent;
};

struct LiabilityVerdict {
    EntityId liable;
    std::optional<Role> liable_role;
    LiabilityClass liability = LiabilityClass::Inconclusive;
    std::vector<Hash256> evidence_tids;
    std::set<VerdictFlag> flags;
    std::vector<FraudFinding> fraud;
    std::string rule;  // which rule decided
};

struct AdjudicationParams {
    Duration time_tol = kDefaultTimeTolerance;
    double dist_tol = kDefaultDistanceTolerance;
    Duration negligence_deadline = kDefaultNegligenceDeadline;
    Duration maintenance_window = kDefaultMaintenanceWindow;
    Duration staged_window = kDefaultStagedWindow;
    std::uint32_t staged_threshold = kDefaultStagedThreshold;
};

// Rules, first match wins: fraud, negligence, service, staged, drive mode,
// inconclusive. Throws MalformedCase when the case has no PET or cites a tid
// the ledger does not hold.
LiabilityVerdict adjudicate(const CollisionCase& c, const PartitionLedger& ledger_p1,
                            const AdjudicationParams& params = {});

Json to_json(const CollisionCase& c);
CollisionCase case_from_json(const Json& j);
Json to_json(const LiabilityVerdict& v);
Json to_json(const AdjudicationParams& p);
AdjudicationParams params_from_json(const Json& j);

}  // namespace avl

#endif
