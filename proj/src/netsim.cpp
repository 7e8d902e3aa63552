#include "avledger/netsim.hpp"

#include <cmath>

namespace avl {

void SimClock::set(Timestamp t) {
    if (t < now_)
        throw Error(ErrorCode::ClockViolation,
                    "clock cannot move from " + std::to_string(now_) + " back to " + std::to_string(t));
    now_ = t;
}

std::string_view to_string(DeliveryStatus s) {
    switch (s) {
        case DeliveryStatus::Pending: return "Pending";
        case DeliveryStatus::Acknowledged: return "Acknowledged";
        case DeliveryStatus::Undeliverable: return "Undeliverable";
    }
    return "?";
}

std::size_t DeliveryRecord::deliveries() const {
    std::size_t n = 0;
    for (const auto& a : attempts) n += a.delivered ? 1 : 0;
    return n;
}

std::uint64_t Network::send(Envelope env, const LinkParams& link, Completion done) {
    if (!(link.drop_prob >= 0.0 && link.drop_prob < 1.0))
        throw Error(ErrorCode::InvalidArgument, "drop_prob must be in [0, 1)");
    if (link.max_attempts < 1) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
    if (link.retry_interval < 1) throw Error(ErrorCode::InvalidArgument, "retry_interval must be >= 1");

    const std::uint64_t id = records_.size() + 1;
    env.msg_id = id;
    env.send_time = now();
    env.attempt = 0;

    DeliveryRecord rec;
    rec.msg_id = id;
    rec.from = env.from;
    rec.to = env.to;
    records_.push_back(std::move(rec));
    in_flight_.emplace(id, InFlight{std::move(env), link, std::move(done)});
    attempt(id);
    return id;
}

void Network::attempt(std::uint64_t msg_id) {
    auto it = in_flight_.find(msg_id);
    if (it == in_flight_.end()) return;
    InFlight& f = it->second;
    f.env.attempt += 1;

    // Both draws are always taken so the stream does not depend on outcomes.
    const double q = 1.0 - std::sqrt(1.0 - f.link.drop_prob);
    const bool delivered = rng_.uniform() >= q;
    const bool ack_back = rng_.uniform() >= q;

    AttemptRecord a;
    a.attempt = f.env.attempt;
    a.sent_at = now();
    a.delivered = delivered;
    a.acked = delivered && ack_back;
    records_[msg_id - 1].attempts.push_back(a);

    if (delivered && receiver_) {
        Envelope copy = f.env;
        receiver_(copy);
    }

    // The receiver may have sent or scheduled more; re-resolve the iterator.
    it = in_flight_.find(msg_id);
    DeliveryRecord& rec = records_[msg_id - 1];
    if (a.acked) {
        rec.ack_time = now();
        rec.status = DeliveryStatus::Acknowledged;
    } else if (it->second.env.attempt >= it->second.link.max_attempts) {
        rec.status = DeliveryStatus::Undeliverable;
    } else {
        queue_.emplace(Key{now() + it->second.link.retry_interval, 0, msg_id}, [this, msg_id] { attempt(msg_id); });
        return;
    }
    Completion done = std::move(it->second.done);
    in_flight_.erase(it);
    const DeliveryRecord snapshot = rec;  // done() may send and grow records_
    if (done) done(snapshot);
}

void Network::schedule(Timestamp due, std::function<void()> fn) {
    if (due < now()) throw Error(ErrorCode::ClockViolation, "cannot schedule in the past");
    queue_.emplace(Key{due, 1, timer_seq_++}, std::move(fn));
}

void Network::fire_until(Timestamp t) {
    while (!queue_.empty() && std::get<0>(queue_.begin()->first) <= t) {
        auto node = queue_.extract(queue_.begin());
        clock_.set(std::get<0>(node.key()));
        node.mapped()();
    }
    clock_.set(t);
}

Timestamp Network::advance(Duration dt) {
    if (dt < 0) throw Error(ErrorCode::ClockViolation, "negative advance");
    if (dt > 0) fire_until(now() + dt);
    return now();
}

void Network::run_until(Timestamp t) {
    if (t < now()) throw Error(ErrorCode::ClockViolation, "run_until target is in the past");
    fire_until(t);
}

void Network::run_until_idle() {
    while (!queue_.empty()) fire_until(std::get<0>(queue_.begin()->first));
}

const DeliveryRecord& Network::record(std::uint64_t msg_id) const {
    if (msg_id == 0 || msg_id > records_.size())
        throw Error(ErrorCode::NotFound, "unknown msg_id " + std::to_string(msg_id));
    return records_[msg_id - 1];
}

DeliveryRecord send_with_retry(Network& net, Envelope env, double drop_prob, Duration retry_interval,
                               std::uint32_t max_attempts) {
    const std::uint64_t id = net.send(std::move(env), LinkParams{drop_prob, retry_interval, max_attempts});
    while (net.record(id).status == DeliveryStatus::Pending) {
        if (net.idle()) throw Error(ErrorCode::PreconditionFailed, "message pending with no queued retry");
        net.advance(1);
    }
    return net.record(id);
}

// ---- partitions ----------------------------------------------------------

PartitionMembership PartitionMembership::from_roles(PartitionId p, const std::map<EntityId, Role>& entities) {
    PartitionMembership m;
    m.partition = p;
    for (const auto& [id, role] : entities) {
        if (table1_proposer(role, p)) m.proposers.emplace(id, role);
        if (table1_validator(role, p)) m.validators.emplace(id, role);
    }
    return m;
}

bool PartitionMembership::admits(const EntityId& from) const {
    auto match = [&](const auto& set) {
        for (const auto& [id, role] : set)
            if (id == from) return true;
        return false;
    };
    return match(proposers) || match(validators);
}

std::vector<EntityId> PartitionMembership::validator_ids() const {
    std::vector<EntityId> out;
    for (const auto& [id, role] : validators) out.push_back(id);
    return out;
}

Partition::Partition(PartitionMembership membership, std::map<EntityId, PartitionLedger> replicas)
    : membership_(std::move(membership)), replicas_(std::move(replicas)) {
    for (const auto& v : membership_.validator_ids())
        if (!replicas_.contains(v))
            throw Error(ErrorCode::ReplicaMismatch, "validator " + v.str() + " has no replica");
}

std::optional<ConsensusRound> Partition::submit(const EntityId& from, const Transaction& tx, Timestamp at) {
    if (!membership_.admits(from)) {
        ++refusals_;
        return std::nullopt;
    }
    if (halted_) return std::nullopt;

    ReplicaSet set;
    for (auto& [id, ledger] : replicas_) set.emplace(id, &ledger);
    ConsensusRound round = run_consensus(validators(), tx, set, at);
    if (round.outcome == Outcome::Committed) committed_.insert(tx.tid);
    if (round.outcome == Outcome::Diverged) halted_ = true;
    rounds_.push_back(round);
    return round;
}

PartitionLedger& Partition::replica(const EntityId& validator) {
    auto it = replicas_.find(validator);
    if (it == replicas_.end()) throw Error(ErrorCode::NotFound, "no replica for " + validator.str());
    return it->second;
}

const PartitionLedger& Partition::replica(const EntityId& validator) const {
    auto it = replicas_.find(validator);
    if (it == replicas_.end()) throw Error(ErrorCode::NotFound, "no replica for " + validator.str());
    return it->second;
}

ForwardReceipt forward_evidence_request(const Partition& p1, Partition& p2, const Transaction& ret,
                                        Timestamp at) {
    if (ret.kind != TxKind::RET) throw Error(ErrorCode::InvalidArgument, "only RET transactions are forwarded");
    if (!p1.committed(ret.tid))
        throw Error(ErrorCode::NotCommitted, "RET " + ret.tid.hex() + " is not committed in P1");

    ForwardReceipt receipt;
    receipt.p1_tid = ret.tid;
    const auto& body = std::get<RetBody>(ret.body);
    auto round = p2.submit(body.requester, ret, at);
    if (round) {
        receipt.p2_round = p2.rounds().size() - 1;
        receipt.outcome = round->outcome;
    }
    return receipt;
}

}  // namespace avl
