#include "avledger/scenarios.hpp"

#include <fstream>

namespace avl {

std::string_view to_string(AttackType a) {
    switch (a) {
        case AttackType::TamperCBlock: return "TamperCBlock";
        case AttackType::FalseInformation: return "FalseInformation";
        case AttackType::SuppressEvidence: return "SuppressEvidence";
    }
    return "?";
}

std::optional<AttackType> parse_attack(std::string_view s) {
    for (auto a : {AttackType::TamperCBlock, AttackType::FalseInformation, AttackType::SuppressEvidence})
        if (to_string(a) == s) return a;
    return std::nullopt;
}

std::string_view to_string(EventType e) {
    switch (e) {
        case EventType::Update: return "update";
        case EventType::Maintenance: return "maintenance";
        case EventType::Safety: return "safety";
        case EventType::Collision: return "collision";
    }
    return "?";
}

namespace {

std::optional<EventType> parse_event_type(std::string_view s) {
    for (auto e : {EventType::Update, EventType::Maintenance, EventType::Safety, EventType::Collision})
        if (to_string(e) == s) return e;
    return std::nullopt;
}

// Field-path aware accessors over a JSON object.
class Fields {
public:
    Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("", "expected an object");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        std::string where = path_;
        if (!key.empty()) where += (where.empty() ? "" : ".") + key;
        throw Error(ErrorCode::ConfigError, (where.empty() ? "config" : where) + ": " + what);
    }

    std::string at(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void only(std::initializer_list<const char*> allowed) const {
        for (const auto& [key, value] : j_.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) fail(key, "unknown field");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    const Json& raw(const std::string& key) const {
        if (!has(key)) fail(key, "missing required field");
        return j_.at(key);
    }

    std::int64_t integer(const std::string& key, std::int64_t lo, std::int64_t hi) const {
        const Json& v = raw(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        const auto n = v.get<std::int64_t>();
        if (n < lo || n > hi)
            fail(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return n;
    }

    std::uint64_t unsigned_integer(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            fail(key, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    double number(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_number()) fail(key, "expected a number");
        return v.get<double>();
    }

    bool boolean(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_boolean()) fail(key, "expected true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }

private:
    const Json& j_;
    std::string path_;
};

constexpr std::int64_t kMaxTime = std::int64_t{1} << 40;

void check_vehicle(const Fields& f, const std::string& key, const EntityId& id,
                   const std::map<EntityId, Role>& entities) {
    auto it = entities.find(id);
    if (it == entities.end() || it->second != Role::AV) f.fail(key, "unknown vehicle '" + id.str() + "'");
}

TimelineEvent parse_event(const Json& j, const std::string& path, const std::map<EntityId, Role>& entities,
                          std::uint32_t vehicle_count) {
    Fields f(j, path);
    TimelineEvent e;
    auto type = parse_event_type(f.text("type"));
    if (!type) f.fail("type", "expected one of update, maintenance, safety, collision");
    e.type = *type;
    e.at = f.integer("at", 0, kMaxTime);

    switch (e.type) {
        case EventType::Update:
            f.only({"type", "at", "vehicle", "execute", "exec_delay"});
            e.vehicle = f.text("vehicle");
            check_vehicle(f, "vehicle", e.vehicle, entities);
            if (f.has("execute")) e.execute = f.boolean("execute");
            if (f.has("exec_delay")) e.exec_delay = f.integer("exec_delay", 0, kMaxTime);
            break;
        case EventType::Maintenance:
            f.only({"type", "at", "vehicle", "roadworthy", "technician"});
            e.vehicle = f.text("vehicle");
            check_vehicle(f, "vehicle", e.vehicle, entities);
            if (f.has("roadworthy")) e.roadworthy = f.boolean("roadworthy");
            if (f.has("technician")) {
                e.technician = EntityId(f.text("technician"));
                auto it = entities.find(*e.technician);
                if (it == entities.end() || it->second != Role::ST)
                    f.fail("technician", "unknown technician '" + e.technician->str() + "'");
            }
            break;
        case EventType::Safety: {
            f.only({"type", "at", "vehicle", "trigger", "speed"});
            e.vehicle = f.text("vehicle");
            check_vehicle(f, "vehicle", e.vehicle, entities);
            auto trig = parse_trigger(f.text("trigger"));
            if (!trig) f.fail("trigger", "expected one of hard_brake, wrong_way, slippery_road");
            e.trigger = *trig;
            if (f.has("speed")) {
                e.speed = f.number("speed");
                if (*e.speed < 0) f.fail("speed", "must be non-negative");
            }
            break;
        }
        case EventType::Collision: {
            f.only({"type", "at", "striking", "struck", "witnesses", "n_witnesses", "hit_and_run", "drive_mode"});
            e.striking = f.text("striking");
            check_vehicle(f, "striking", e.striking, entities);
            std::set<EntityId> involved{e.striking};
            const Json& struck = f.raw("struck");
            std::vector<std::string> names;
            if (struck.is_string()) {
                names.push_back(struck.get<std::string>());
            } else if (struck.is_array() && !struck.empty()) {
                for (const auto& s : struck) {
                    if (!s.is_string()) f.fail("struck", "expected vehicle ids");
                    names.push_back(s.get<std::string>());
                }
            } else {
                f.fail("struck", "expected a vehicle id or a non-empty list of them");
            }
            for (std::size_t i = 0; i < names.size(); ++i) {
                const std::string key = "struck[" + std::to_string(i) + "]";
                check_vehicle(f, key, names[i], entities);
                if (!involved.insert(names[i]).second) f.fail(key, "vehicle is already involved");
                e.struck.emplace_back(names[i]);
            }
            if (f.has("witnesses")) {
                const Json& w = f.raw("witnesses");
                if (!w.is_array()) f.fail("witnesses", "expected a list of vehicle ids");
                for (std::size_t i = 0; i < w.size(); ++i) {
                    const std::string key = "witnesses[" + std::to_string(i) + "]";
                    if (!w[i].is_string()) f.fail(key, "expected a vehicle id");
                    EntityId id(w[i].get<std::string>());
                    check_vehicle(f, key, id, entities);
                    if (!involved.insert(id).second) f.fail(key, "vehicle is already involved");
                    e.witnesses.push_back(id);
                }
            }
            if (f.has("n_witnesses")) {
                if (!e.witnesses.empty()) f.fail("n_witnesses", "give either witnesses or n_witnesses");
                e.n_witnesses = static_cast<std::uint32_t>(f.integer("n_witnesses", 0, 1 << 20));
                if (involved.size() + e.n_witnesses > vehicle_count)
                    f.fail("n_witnesses", "not enough uninvolved vehicles");
            }
            if (f.has("hit_and_run")) e.hit_and_run = f.boolean("hit_and_run");
            if (f.has("drive_mode")) {
                auto m = parse_drive_mode(f.text("drive_mode"));
                if (!m) f.fail("drive_mode", "expected autonomous or manual");
                e.drive_mode = *m;
            }
            break;
        }
    }
    return e;
}

}  // namespace

std::map<EntityId, Role> scenario_entities(const ActorCounts& a) {
    std::map<EntityId, Role> out;
    for (std::uint32_t i = 1; i <= a.vehicles; ++i) out.emplace("av" + std::to_string(i), Role::AV);
    for (std::uint32_t i = 1; i <= a.manufacturers; ++i) out.emplace("am" + std::to_string(i), Role::AM);
    for (std::uint32_t i = 1; i <= a.insurers; ++i) out.emplace("ic" + std::to_string(i), Role::IC);
    for (std::uint32_t i = 1; i <= a.technicians; ++i) out.emplace("st" + std::to_string(i), Role::ST);
    out.emplace("gta", Role::GTA);
    out.emplace("la", Role::LA);
    return out;
}

ScenarioConfig parse_scenario_config(const Json& j) {
    Fields f(j, "");
    f.only({"seed", "actors", "timeline", "attack", "network", "b_max", "cert_validity", "ret_delay",
            "exec_delay", "horizon", "origin", "adjudication"});
    ScenarioConfig c;
    if (f.has("seed")) c.seed = f.unsigned_integer("seed");

    if (f.has("actors")) {
        Fields a(f.raw("actors"), "actors");
        a.only({"vehicles", "manufacturers", "insurers", "technicians"});
        auto count = [&](const char* key, std::uint32_t& out, std::int64_t lo) {
            if (a.has(key)) out = static_cast<std::uint32_t>(a.integer(key, lo, 10000));
        };
        count("vehicles", c.actors.vehicles, 0);
        count("manufacturers", c.actors.manufacturers, 1);
        count("insurers", c.actors.insurers, 1);
        count("technicians", c.actors.technicians, 1);
    }

    if (f.has("network")) {
        Fields n(f.raw("network"), "network");
        n.only({"drop_prob", "retry_interval", "max_attempts"});
        if (n.has("drop_prob")) {
            c.network.drop_prob = n.number("drop_prob");
            if (!(c.network.drop_prob >= 0.0 && c.network.drop_prob < 1.0))
                n.fail("drop_prob", "must be in [0, 1)");
        }
        if (n.has("retry_interval")) c.network.retry_interval = n.integer("retry_interval", 1, kMaxTime);
        if (n.has("max_attempts"))
            c.network.max_attempts = static_cast<std::uint32_t>(n.integer("max_attempts", 1, 1000));
    }

    if (f.has("b_max")) c.b_max = static_cast<std::uint32_t>(f.integer("b_max", 1, 1 << 20));
    if (f.has("cert_validity")) c.cert_validity = f.integer("cert_validity", 1, kMaxTime);
    if (f.has("ret_delay")) c.ret_delay = f.integer("ret_delay", 0, kMaxTime);
    if (f.has("exec_delay")) c.exec_delay = f.integer("exec_delay", 0, kMaxTime);
    if (f.has("horizon")) c.horizon = f.integer("horizon", 0, kMaxTime);
    if (f.has("origin")) {
        Fields o(f.raw("origin"), "origin");
        o.only({"lat", "lon"});
        c.origin.lat = o.number("lat");
        c.origin.lon = o.number("lon");
        if (c.origin.lat < -85 || c.origin.lat > 85) o.fail("lat", "must be in [-85, 85]");
        if (c.origin.lon < -180 || c.origin.lon > 180) o.fail("lon", "must be in [-180, 180]");
    }
    if (f.has("adjudication")) {
        try {
            c.adjudication = params_from_json(f.raw("adjudication"));
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigError, e.what());
        }
    }

    const auto entities = scenario_entities(c.actors);
    if (f.has("timeline")) {
        const Json& t = f.raw("timeline");
        if (!t.is_array()) f.fail("timeline", "expected a list of events");
        Timestamp last = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const std::string path = "timeline[" + std::to_string(i) + "]";
            TimelineEvent e = parse_event(t[i], path, entities, c.actors.vehicles);
            if (e.at < last)
                throw Error(ErrorCode::ConfigError, path + ".at: timestamps must be non-decreasing");
            last = e.at;
            c.timeline.push_back(std::move(e));
        }
    }

    if (f.has("attack")) {
        Fields a(f.raw("attack"), "attack");
        a.only({"type", "actor", "at", "partition", "all_replicas", "forged_speed", "time_shift", "loc_shift_m"});
        AttackSpec spec;
        auto type = parse_attack(a.text("type"));
        if (!type) a.fail("type", "expected one of TamperCBlock, FalseInformation, SuppressEvidence");
        spec.type = *type;
        spec.actor = a.text("actor");
        auto it = entities.find(spec.actor);
        if (it == entities.end()) a.fail("actor", "unknown actor '" + spec.actor.str() + "'");
        if (a.has("at")) spec.at = a.integer("at", 0, kMaxTime);
        if (a.has("partition")) {
            auto p = parse_partition(a.text("partition"));
            if (!p) a.fail("partition", "expected P1 or P2");
            spec.partition = *p;
        }
        if (a.has("all_replicas")) spec.all_replicas = a.boolean("all_replicas");
        if (a.has("forged_speed")) {
            spec.forged_speed = a.number("forged_speed");
            if (*spec.forged_speed < 0) a.fail("forged_speed", "must be non-negative");
        }
        if (a.has("time_shift")) spec.time_shift = a.integer("time_shift", -kMaxTime, kMaxTime);
        if (a.has("loc_shift_m")) spec.loc_shift_m = a.number("loc_shift_m");

        if (spec.type == AttackType::FalseInformation) {
            if (it->second != Role::AM) a.fail("actor", "false information is injected by a manufacturer");
        } else if (!table1_validator(it->second, spec.partition)) {
            a.fail("actor", "'" + spec.actor.str() + "' is not a validator of " +
                                std::string(to_string(spec.partition)));
        }
        c.attack = spec;
    }
    return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": invalid JSON: " + e.what());
    }
    return parse_scenario_config(j);
}

Json to_json(const ScenarioConfig& c) {
    Json timeline = Json::array();
    for (const auto& e : c.timeline) {
        Json j{{"type", to_string(e.type)}, {"at", e.at}};
        switch (e.type) {
            case EventType::Update:
                j["vehicle"] = e.vehicle.str();
                j["execute"] = e.execute;
                if (e.exec_delay) j["exec_delay"] = *e.exec_delay;
                break;
            case EventType::Maintenance:
                j["vehicle"] = e.vehicle.str();
                j["roadworthy"] = e.roadworthy;
                if (e.technician) j["technician"] = e.technician->str();
                break;
            case EventType::Safety:
                j["vehicle"] = e.vehicle.str();
                j["trigger"] = to_string(e.trigger);
                if (e.speed) j["speed"] = *e.speed;
                break;
            case EventType::Collision: {
                j["striking"] = e.striking.str();
                Json struck = Json::array();
                for (const auto& s : e.struck) struck.push_back(s.str());
                j["struck"] = struck;
                if (!e.witnesses.empty()) {
                    Json w = Json::array();
                    for (const auto& s : e.witnesses) w.push_back(s.str());
                    j["witnesses"] = w;
                } else {
                    j["n_witnesses"] = e.n_witnesses;
                }
                j["hit_and_run"] = e.hit_and_run;
                if (e.drive_mode) j["drive_mode"] = to_string(*e.drive_mode);
                break;
            }
        }
        timeline.push_back(j);
    }
    Json out{{"seed", c.seed},
             {"actors",
              {{"vehicles", c.actors.vehicles},
               {"manufacturers", c.actors.manufacturers},
               {"insurers", c.actors.insurers},
               {"technicians", c.actors.technicians}}},
             {"timeline", timeline},
             {"network",
              {{"drop_prob", c.network.drop_prob},
               {"retry_interval", c.network.retry_interval},
               {"max_attempts", c.network.max_attempts}}},
             {"b_max", c.b_max},
             {"cert_validity", c.cert_validity},
             {"ret_delay", c.ret_delay},
             {"exec_delay", c.exec_delay},
             {"origin", to_json(c.origin)},
             {"adjudication", to_json(c.adjudication)}};
    if (c.horizon) out["horizon"] = *c.horizon;
    if (c.attack) {
        const AttackSpec& a = *c.attack;
        Json aj{{"type", to_string(a.type)},
                {"actor", a.actor.str()},
                {"at", a.at},
                {"partition", to_string(a.partition)},
                {"all_replicas", a.all_replicas},
                {"time_shift", a.time_shift},
                {"loc_shift_m", a.loc_shift_m}};
        if (a.forged_speed) aj["forged_speed"] = *a.forged_speed;
        out["attack"] = aj;
    }
    return out;
}

// ---- generators --------------------------------------------------------------

namespace {

EntityId pick_vehicle(Rng& rng, std::uint32_t n) { return EntityId("av" + std::to_string(rng.range(1, n))); }

TimelineEvent safety_event(Rng& rng, Timestamp at, std::uint32_t vehicles) {
    TimelineEvent e;
    e.type = EventType::Safety;
    e.at = at;
    e.vehicle = pick_vehicle(rng, vehicles);
    const auto r = rng.range(0, 9);
    e.trigger = r < 6 ? SafetyTrigger::HardBrake : (r < 8 ? SafetyTrigger::WrongWay : SafetyTrigger::SlipperyRoad);
    e.speed = static_cast<double>(rng.range(5, 35));
    return e;
}

TimelineEvent collision_event(Rng& rng, Timestamp at, std::uint32_t vehicles, bool allow_hit_and_run) {
    TimelineEvent e;
    e.type = EventType::Collision;
    e.at = at;
    const auto a = rng.range(1, vehicles);
    auto b = rng.range(1, vehicles - 1);
    if (b >= a) ++b;
    e.striking = "av" + std::to_string(a);
    e.struck = {EntityId("av" + std::to_string(b))};
    e.n_witnesses = static_cast<std::uint32_t>(rng.range(0, std::min<std::int64_t>(2, vehicles - 2)));
    e.hit_and_run = allow_hit_and_run && e.n_witnesses > 0 && rng.range(0, 3) == 0;
    e.drive_mode = rng.range(0, 1) == 0 ? DriveMode::Autonomous : DriveMode::Manual;
    return e;
}

}  // namespace

ScenarioConfig generate_benign_config(std::uint64_t seed) {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    ScenarioConfig c;
    c.seed = seed;
    c.actors.vehicles = static_cast<std::uint32_t>(rng.range(4, 6));
    const double drops[] = {0.0, 0.1, 0.3};
    c.network.drop_prob = drops[rng.range(0, 2)];

    Timestamp t = 100;
    const auto n_events = rng.range(12, 20);
    for (std::int64_t i = 0; i < n_events; ++i) {
        t += rng.range(60, 900);
        const auto r = rng.range(0, 19);
        TimelineEvent e;
        if (r < 9) {
            e = safety_event(rng, t, c.actors.vehicles);
        } else if (r < 13) {
            e.type = EventType::Update;
            e.at = t;
            e.vehicle = pick_vehicle(rng, c.actors.vehicles);
            e.execute = rng.range(0, 4) != 0;
        } else if (r < 16) {
            e.type = EventType::Maintenance;
            e.at = t;
            e.vehicle = pick_vehicle(rng, c.actors.vehicles);
            e.roadworthy = rng.range(0, 3) != 0;
        } else {
            e = collision_event(rng, t, c.actors.vehicles, true);
        }
        c.timeline.push_back(std::move(e));
    }
    return c;
}

ScenarioConfig generate_attack_config(std::uint64_t seed, AttackType type) {
    Rng rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
    ScenarioConfig c;
    c.seed = seed;
    c.actors.vehicles = static_cast<std::uint32_t>(rng.range(4, 6));
    c.network.drop_prob = 0.0;
    const std::uint32_t nv = c.actors.vehicles;

    Timestamp t = 100;
    auto step = [&] { return t += rng.range(60, 600); };
    for (int i = 0; i < 3; ++i) c.timeline.push_back(safety_event(rng, step(), nv));
    {
        TimelineEvent u;
        u.type = EventType::Update;
        u.at = step();
        u.vehicle = pick_vehicle(rng, nv);
        c.timeline.push_back(u);
        TimelineEvent m;
        m.type = EventType::Maintenance;
        m.at = step();
        m.vehicle = pick_vehicle(rng, nv);
        c.timeline.push_back(m);
    }
    // Let the update's execution land before the collision.
    t += c.exec_delay;
    TimelineEvent col = collision_event(rng, step(), nv, false);
    col.n_witnesses = 1;
    const Timestamp collision_at = col.at;
    c.timeline.push_back(col);

    const char* validators[] = {"am1", "ic1", "st1"};
    AttackSpec a;
    a.type = type;
    switch (type) {
        case AttackType::TamperCBlock:
            a.actor = validators[rng.range(0, 2)];
            a.at = collision_at + 5;
            break;
        case AttackType::SuppressEvidence:
            a.actor = validators[rng.range(0, 2)];
            a.at = collision_at + 5;
            break;
        case AttackType::FalseInformation:
            a.actor = "am1";
            a.at = collision_at;
            a.time_shift = rng.range(5, 60);
            break;
    }
    c.attack = a;

    // Traffic after the attack so a consensus round follows it.
    t = collision_at + 10;
    for (int i = 0; i < 3; ++i) c.timeline.push_back(safety_event(rng, t += rng.range(5, 60), nv));
    return c;
}

}  // namespace avl
