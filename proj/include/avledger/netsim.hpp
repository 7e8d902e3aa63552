#ifndef AVLEDGER_NETSIM_HPP
#define AVLEDGER_NETSIM_HPP

#include "avledger/validation.hpp"

#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <variant>

namespace avl {

inline constexpr Duration kDefaultRetryInterval = 30;
inline constexpr std::uint32_t kDefaultMaxAttempts = 10;

class SimClock {
public:
    Timestamp now() const { return now_; }
    // Moves forward only; throws ClockViolation otherwise.
    void set(Timestamp t);

private:
    Timestamp now_ = 0;
};

struct ControlMessage {
    std::string tag;
    Bytes data;
};

using Payload = std::variant<Transaction, ControlMessage>;

struct Envelope {
    std::uint64_t msg_id = 0;  // assigned by Network::send
    EntityId from;
    EntityId to;
    Payload payload;
    Timestamp send_time = 0;
    std::uint32_t attempt = 1;
};

struct LinkParams {
    double drop_prob = 0.0;
    Duration retry_interval = kDefaultRetryInterval;
    std::uint32_t max_attempts = kDefaultMaxAttempts;
};

enum class DeliveryStatus : std::uint8_t { Pending, Acknowledged, Undeliverable };
std::string_view to_string(DeliveryStatus s);

struct AttemptRecord {
    std::uint32_t attempt = 1;
    Timestamp sent_at = 0;
    bool delivered = false;
    bool acked = false;
    bool operator==(const AttemptRecord&) const = default;
};

struct DeliveryRecord {
    std::uint64_t msg_id = 0;
    EntityId from;
    EntityId to;
    std::vector<AttemptRecord> attempts;
    std::optional<Timestamp> ack_time;
    DeliveryStatus status = DeliveryStatus::Pending;

    std::size_t deliveries() const;
    bool operator==(const DeliveryRecord&) const = default;
};

// Single-threaded discrete-event network over virtual time. Each attempt
// crosses the link twice (message, then ack); each direction drops with
// q = 1 - sqrt(1 - p) so that one round trip fails with probability p.
class Network {
public:
    using Receiver = std::function<void(const Envelope&)>;
    using Completion = std::function<void(const DeliveryRecord&)>;

    explicit Network(std::uint64_t seed) : rng_(seed) {}

    Timestamp now() const { return clock_.now(); }

    // Called for every copy that arrives, duplicates included.
    void set_receiver(Receiver r) { receiver_ = std::move(r); }

    // First attempt happens immediately at now(); resends are queued.
    std::uint64_t send(Envelope env, const LinkParams& link, Completion done = {});

    // Runs fn at virtual time `due` (>= now()).
    void schedule(Timestamp due, std::function<void()> fn);

    // Fires every event due at or before now()+dt, in (due, retries by
    // msg_id, then timers by insertion) order. advance(0) fires nothing.
    Timestamp advance(Duration dt);
    void run_until(Timestamp t);
    void run_until_idle();
    bool idle() const { return queue_.empty(); }

    const DeliveryRecord& record(std::uint64_t msg_id) const;
    const std::vector<DeliveryRecord>& records() const { return records_; }

private:
    using Key = std::tuple<Timestamp, int, std::uint64_t>;

    void attempt(std::uint64_t msg_id);
    void fire_until(Timestamp t);

    SimClock clock_;
    Rng rng_;
    Receiver receiver_;
    std::map<Key, std::function<void()>> queue_;
    std::uint64_t timer_seq_ = 0;
    std::vector<DeliveryRecord> records_;
    struct InFlight {
        Envelope env;
        LinkParams link;
        Completion done;
    };
    std::map<std::uint64_t, InFlight> in_flight_;
};

// Sends and runs the network until the message is acknowledged or gives up.
DeliveryRecord send_with_retry(Network& net, Envelope env, double drop_prob, Duration retry_interval,
                               std::uint32_t max_attempts);

// ---- partitions ----------------------------------------------------------

struct PartitionMembership {
    PartitionId partition = PartitionId::P1;
    std::set<std::pair<EntityId, Role>> proposers;
    std::set<std::pair<EntityId, Role>> validators;

    // Built from the role table for the given entities.
    static PartitionMembership from_roles(PartitionId p, const std::map<EntityId, Role>& entities);

    bool admits(const EntityId& from) const;
    std::vector<EntityId> validator_ids() const;
};

// Gateway plus validator replicas for one partition. Rounds are serialized;
// after a Diverged round the partition halts and rejects everything.
class Partition {
public:
    Partition(PartitionMembership membership, std::map<EntityId, PartitionLedger> replicas);

    const PartitionMembership& membership() const { return membership_; }
    PartitionId id() const { return membership_.partition; }

    // nullopt when the gateway refuses the sender or the partition is halted.
    std::optional<ConsensusRound> submit(const EntityId& from, const Transaction& tx, Timestamp at);

    bool halted() const { return halted_; }
    bool committed(const Hash256& tid) const { return committed_.contains(tid); }
    const std::vector<ConsensusRound>& rounds() const { return rounds_; }
    std::size_t gateway_refusals() const { return refusals_; }

    PartitionLedger& replica(const EntityId& validator);
    const PartitionLedger& replica(const EntityId& validator) const;
    std::vector<EntityId> validators() const { return membership_.validator_ids(); }

private:
    PartitionMembership membership_;
    std::map<EntityId, PartitionLedger> replicas_;
    std::vector<ConsensusRound> rounds_;
    std::set<Hash256> committed_;
    std::size_t refusals_ = 0;
    bool halted_ = false;
};

struct ForwardReceipt {
    Hash256 p1_tid;
    std::optional<std::size_t> p2_round;  // index into p2.rounds(); empty if refused
    Outcome outcome = Outcome::Rejected;
};

// Re-proposes a RET committed in P1 to the P2 validators on behalf of its
// requester. Throws NotCommitted when P1 never committed it.
ForwardReceipt forward_evidence_request(const Partition& p1, Partition& p2, const Transaction& ret,
                                        Timestamp at);

}  // namespace avl

#endif
