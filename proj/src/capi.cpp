#include "avledger/avl.h"

#include "avledger/adjudicator.hpp"
#include "avledger/render.hpp"
#include "avledger/scenarios.hpp"

#include <cstring>
#include <random>

struct avl_ledger {
    avl::LoadedLedger loaded;
};

struct avl_scenario {
    avl::ScenarioConfig config;
    std::unique_ptr<avl::Simulation> sim;
    std::optional<avl::ScenarioReport> report;
};

namespace {

thread_local std::string g_last_error;

avl_status status_for(avl::ErrorCode c) {
    using avl::ErrorCode;
    switch (c) {
        case ErrorCode::ConfigError: return AVL_ERR_CONFIG;
        case ErrorCode::IoError: return AVL_ERR_IO;
        case ErrorCode::DecodeError: return AVL_ERR_DECODE;
        case ErrorCode::PreconditionFailed: return AVL_ERR_STATE;
        case ErrorCode::NotFound:
        case ErrorCode::UnknownEntity:
        case ErrorCode::UnknownCertificate: return AVL_ERR_NOT_FOUND;
        case ErrorCode::MalformedCase: return AVL_ERR_MALFORMED_CASE;
        case ErrorCode::InvalidArgument: return AVL_ERR_INVALID_ARGUMENT;
        default: return AVL_ERR_INTERNAL;
    }
}

avl_status fail(avl_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

// Runs fn, mapping exceptions onto status codes and the thread's last error.
template <typename F>
avl_status guarded(F&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const avl::Error& e) {
        return fail(status_for(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(AVL_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(AVL_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(AVL_ERR_INTERNAL, "unknown failure");
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* avl_last_error(void) { return g_last_error.c_str(); }

const char* avl_version(void) { return "0.1.0"; }

void avl_string_free(char* s) { std::free(s); }

avl_status avl_ledger_open(const char* path, avl_ledger** out) {
    if (!path || !out) return fail(AVL_ERR_INVALID_ARGUMENT, "path and out must be non-null");
    return guarded([&] {
        auto handle = std::make_unique<avl_ledger>();
        handle->loaded = avl::read_ledger_file(path);
        *out = handle.release();
        return AVL_OK;
    });
}

void avl_ledger_close(avl_ledger* ledger) { delete ledger; }

avl_status avl_ledger_verify(const avl_ledger* ledger, int* ok, char** report_json) {
    if (!ledger || !ok) return fail(AVL_ERR_INVALID_ARGUMENT, "ledger and ok must be non-null");
    return guarded([&] {
        *ok = ledger->loaded.report.ok ? 1 : 0;
        if (report_json) *report_json = dup_string(avl::to_json(ledger->loaded.report).dump());
        return AVL_OK;
    });
}

avl_status avl_ledger_info(const avl_ledger* ledger, char** json) {
    if (!ledger || !json) return fail(AVL_ERR_INVALID_ARGUMENT, "ledger and json must be non-null");
    return guarded([&] {
        if (!ledger->loaded.ledger) return fail(AVL_ERR_INTEGRITY, "ledger has no usable genesis");
        const avl::PartitionLedger& l = *ledger->loaded.ledger;
        avl::Json members = avl::Json::array();
        for (const auto& m : l.genesis().membership)
            members.push_back(avl::Json{{"id", m.id.str()},
                                        {"role", avl::to_string(m.role)},
                                        {"proposer", m.proposer},
                                        {"validator", m.validator}});
        avl::Json j{{"partition", avl::to_string(l.partition())},
                    {"b_max", l.b_max()},
                    {"genesis_id", l.genesis().block_id.hex()},
                    {"membership", members},
                    {"blocks", l.blocks().size()},
                    {"cblock_transactions", l.current().transactions.size()},
                    {"transactions", l.committed_count()},
                    {"tip_id", l.tip_id().hex()},
                    {"cblock_id", l.current().cblock_id.hex()}};
        *json = dup_string(j.dump());
        return AVL_OK;
    });
}

avl_status avl_ledger_query(const avl_ledger* ledger, const char* kind, const char* cert_hex, int full, char** json) {
    if (!ledger || !json) return fail(AVL_ERR_INVALID_ARGUMENT, "ledger and json must be non-null");
    return guarded([&] {
        if (!ledger->loaded.ledger) return fail(AVL_ERR_INTEGRITY, "ledger has no usable genesis");
        avl::TxFilter filter;
        if (kind) {
            auto k = avl::parse_kind(kind);
            if (!k) return fail(AVL_ERR_INVALID_ARGUMENT, std::string("unknown kind '") + kind + "'");
            filter.kind = *k;
        }
        if (cert_hex) {
            try {
                filter.cert_id = avl::Hash256::from_hex(cert_hex);
            } catch (const avl::Error&) {
                return fail(AVL_ERR_INVALID_ARGUMENT, "cert id must be 64 hex characters");
            }
        }
        avl::Json rows = avl::Json::array();
        for (const auto& tx : ledger->loaded.ledger->query(filter))
            rows.push_back(full ? avl::to_json(tx) : avl::summary_json(tx));
        *json = dup_string(rows.dump());
        return AVL_OK;
    });
}

avl_status avl_scenario_load(const char* path, avl_scenario** out) {
    if (!path || !out) return fail(AVL_ERR_INVALID_ARGUMENT, "path and out must be non-null");
    return guarded([&] {
        auto handle = std::make_unique<avl_scenario>();
        handle->config = avl::load_scenario_config(path);
        *out = handle.release();
        return AVL_OK;
    });
}

avl_status avl_scenario_parse(const char* json_text, avl_scenario** out) {
    if (!json_text || !out) return fail(AVL_ERR_INVALID_ARGUMENT, "json_text and out must be non-null");
    return guarded([&] {
        avl::Json j;
        try {
            j = avl::Json::parse(json_text);
        } catch (const nlohmann::json::parse_error& e) {
            return fail(AVL_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
        }
        auto handle = std::make_unique<avl_scenario>();
        handle->config = avl::parse_scenario_config(j);
        *out = handle.release();
        return AVL_OK;
    });
}

avl_status avl_scenario_set_seed(avl_scenario* scenario, uint64_t seed) {
    if (!scenario) return fail(AVL_ERR_INVALID_ARGUMENT, "scenario must be non-null");
    if (scenario->sim) return fail(AVL_ERR_STATE, "scenario already ran");
    scenario->config.seed = seed;
    return AVL_OK;
}

avl_status avl_scenario_run(avl_scenario* scenario) {
    if (!scenario) return fail(AVL_ERR_INVALID_ARGUMENT, "scenario must be non-null");
    if (scenario->sim) return fail(AVL_ERR_STATE, "scenario already ran");
    return guarded([&] {
        scenario->sim = std::make_unique<avl::Simulation>(scenario->config);
        scenario->report = scenario->sim->run();
        return AVL_OK;
    });
}

avl_status avl_scenario_report_json(const avl_scenario* scenario, char** json) {
    if (!scenario || !json) return fail(AVL_ERR_INVALID_ARGUMENT, "scenario and json must be non-null");
    if (!scenario->report) return fail(AVL_ERR_STATE, "scenario has not run");
    return guarded([&] {
        *json = dup_string(avl::to_json(*scenario->report).dump(2));
        return AVL_OK;
    });
}

avl_status avl_scenario_undetected(const avl_scenario* scenario, size_t* count) {
    if (!scenario || !count) return fail(AVL_ERR_INVALID_ARGUMENT, "scenario and count must be non-null");
    if (!scenario->report) return fail(AVL_ERR_STATE, "scenario has not run");
    *count = scenario->report->undetected_attacks();
    return AVL_OK;
}

avl_status avl_scenario_save_artifacts(const avl_scenario* scenario, const char* dir) {
    if (!scenario || !dir) return fail(AVL_ERR_INVALID_ARGUMENT, "scenario and dir must be non-null");
    if (!scenario->report) return fail(AVL_ERR_STATE, "scenario has not run");
    return guarded([&] {
        avl::save_artifacts(*scenario->sim, *scenario->report, dir);
        return AVL_OK;
    });
}

void avl_scenario_free(avl_scenario* scenario) { delete scenario; }

avl_status avl_adjudicate(const avl_ledger* p1, const char* case_json, const char* params_json, char** verdict_json) {
    if (!p1 || !case_json || !verdict_json)
        return fail(AVL_ERR_INVALID_ARGUMENT, "ledger, case_json and verdict_json must be non-null");
    return guarded([&] {
        if (!p1->loaded.ledger || !p1->loaded.report.ok)
            return fail(AVL_ERR_INTEGRITY, "P1 ledger does not verify");
        avl::Json cj = avl::Json::parse(case_json, nullptr, false);
        if (cj.is_discarded()) return fail(AVL_ERR_MALFORMED_CASE, "case file is not valid JSON");
        avl::AdjudicationParams params;
        if (params_json) {
            avl::Json pj = avl::Json::parse(params_json, nullptr, false);
            if (pj.is_discarded()) return fail(AVL_ERR_CONFIG, "params are not valid JSON");
            params = avl::params_from_json(pj);
        }
        const avl::CollisionCase c = avl::case_from_json(cj);
        const avl::LiabilityVerdict v = avl::adjudicate(c, *p1->loaded.ledger, params);
        *verdict_json = dup_string(avl::to_json(v).dump(2));
        return AVL_OK;
    });
}

avl_status avl_keys_generate(uint64_t seed, int has_seed, char** json) {
    if (!json) return fail(AVL_ERR_INVALID_ARGUMENT, "json must be non-null");
    return guarded([&] {
        std::uint64_t s = seed;
        if (!has_seed) {
            std::random_device rd;
            s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        }
        avl::Rng rng(s);
        const avl::crypto::Seed key_seed = rng.bytes32();
        const avl::KeyPair kp = avl::KeyPair::from_seed(key_seed);
        avl::Json j{{"algorithm", "ed25519"},
                    {"public_key", avl::to_hex(kp.public_key)},
                    {"seed", avl::to_hex(key_seed)}};
        *json = dup_string(j.dump(2));
        return AVL_OK;
    });
}

}  // extern "C"
