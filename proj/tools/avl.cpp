// avl: command-line front end. Talks to the library through avl.h only.
#include "avledger/avl.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIntegrity = 1;
constexpr int kExitUsage = 2;

using nlohmann::json;

struct CString {
    char* p = nullptr;
    ~CString() { avl_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

struct LedgerHandle {
    avl_ledger* p = nullptr;
    ~LedgerHandle() { avl_ledger_close(p); }
};

struct ScenarioHandle {
    avl_scenario* p = nullptr;
    ~ScenarioHandle() { avl_scenario_free(p); }
};

int report_error(const std::string& what) {
    std::cerr << "avl: " << what << ": " << avl_last_error() << "\n";
    return kExitUsage;
}

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Opens a ledger; a missing/unreadable file is a usage error.
bool open_ledger(const std::string& path, LedgerHandle& h) {
    if (avl_ledger_open(path.c_str(), &h.p) != AVL_OK) {
        report_error("cannot open ledger " + path);
        return false;
    }
    return true;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out,
            const std::string& ledger_dir) {
    ScenarioHandle s;
    if (avl_scenario_load(config.c_str(), &s.p) != AVL_OK) return report_error("invalid config");
    if (seed && avl_scenario_set_seed(s.p, *seed) != AVL_OK) return report_error("cannot set seed");
    if (avl_scenario_run(s.p) != AVL_OK) {
        std::cerr << "avl: scenario failed: " << avl_last_error() << "\n";
        return kExitIntegrity;
    }
    CString report;
    if (avl_scenario_report_json(s.p, &report.p) != AVL_OK) return report_error("cannot render report");
    if (out.empty() || out == "-") {
        std::cout << report.str() << "\n";
    } else {
        std::ofstream f(out, std::ios::trunc);
        if (!f) {
            std::cerr << "avl: cannot write " << out << "\n";
            return kExitUsage;
        }
        f << report.str() << "\n";
    }
    if (!ledger_dir.empty() && avl_scenario_save_artifacts(s.p, ledger_dir.c_str()) != AVL_OK)
        return report_error("cannot save artifacts");

    std::size_t undetected = 0;
    avl_scenario_undetected(s.p, &undetected);
    if (undetected > 0) {
        std::cerr << "avl: " << undetected << " scripted attack(s) went undetected\n";
        return kExitIntegrity;
    }
    return kExitOk;
}

int cmd_verify(const std::string& path, bool as_json) {
    LedgerHandle h;
    if (!open_ledger(path, h)) return kExitUsage;
    int ok = 0;
    CString report;
    if (avl_ledger_verify(h.p, &ok, &report.p) != AVL_OK) return report_error("verify failed");
    const json r = json::parse(report.str());
    if (as_json) {
        std::cout << r.dump(2) << "\n";
    } else {
        for (const auto& b : r["blocks"]) {
            std::printf("%-7s %4lld  %-6s %3zu tx  %s  %s\n", b["sealed"].get<bool>() ? "block" : "cblock",
                        static_cast<long long>(b["index"].get<long>()), b["sealed"].get<bool>() ? "sealed" : "open",
                        b["transactions"].get<std::size_t>(), b["block_id"].get<std::string>().c_str(),
                        b["ok"].get<bool>() ? "ok" : "FAIL");
        }
        for (const auto& i : r["issues"]) {
            const long idx = i["block_index"].get<long>();
            std::string where = idx < 0 ? "genesis" : "block " + std::to_string(idx);
            if (!i["tid"].is_null()) where += " tid " + i["tid"].get<std::string>();
            std::printf("FAIL %s: %s\n", where.c_str(), i["reason"].get<std::string>().c_str());
        }
        std::printf("%s\n", ok ? "chain OK" : "chain INVALID");
    }
    return ok ? kExitOk : kExitIntegrity;
}

int cmd_inspect(const std::string& path, const std::string& kind, const std::string& cert, bool as_json) {
    static const char* kKinds[] = {"EST", "PET", "UT", "ET", "MT", "RET"};
    if (!kind.empty()) {
        bool known = false;
        for (const char* k : kKinds) known = known || kind == k;
        if (!known) {
            std::cerr << "avl: unknown kind '" << kind << "'; valid kinds: EST, PET, UT, ET, MT, RET\n";
            return kExitUsage;
        }
    }
    if (!cert.empty() && (cert.size() != 64 || cert.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)) {
        std::cerr << "avl: --cert expects a 64-character hex certificate id\n";
        return kExitUsage;
    }
    LedgerHandle h;
    if (!open_ledger(path, h)) return kExitUsage;
    int ok = 0;
    if (avl_ledger_verify(h.p, &ok, nullptr) != AVL_OK) return report_error("verify failed");
    if (!ok) {
        std::cerr << "avl: " << path << " does not verify; run `avl verify` for details\n";
        return kExitIntegrity;
    }
    CString rows;
    if (avl_ledger_query(h.p, kind.empty() ? nullptr : kind.c_str(), cert.empty() ? nullptr : cert.c_str(),
                         as_json ? 1 : 0, &rows.p) != AVL_OK)
        return report_error("query failed");
    const json r = json::parse(rows.str());
    if (as_json) {
        std::cout << r.dump(2) << "\n";
        return kExitOk;
    }
    std::printf("%-16s  %-4s  %10s  %-8s  %-16s\n", "tid", "kind", "time", "proposer", "cert");
    for (const auto& row : r) {
        const std::string c = row["cert_id"].is_null() ? "-" : row["cert_id"].get<std::string>().substr(0, 16);
        std::printf("%-16s  %-4s  %10lld  %-8s  %-16s\n", row["tid"].get<std::string>().substr(0, 16).c_str(),
                    row["kind"].get<std::string>().c_str(), static_cast<long long>(row["time"].get<long long>()),
                    row["proposer"].get<std::string>().c_str(), c.c_str());
    }
    std::printf("%zu transaction(s)\n", r.size());
    return kExitOk;
}

int cmd_adjudicate(const std::string& ledger, const std::string& case_path, const std::string& params_path) {
    auto case_text = read_file(case_path);
    if (!case_text) {
        std::cerr << "avl: cannot read case file " << case_path << "\n";
        return kExitUsage;
    }
    std::optional<std::string> params;
    if (!params_path.empty()) {
        params = read_file(params_path);
        if (!params) {
            std::cerr << "avl: cannot read params file " << params_path << "\n";
            return kExitUsage;
        }
    }
    LedgerHandle h;
    if (!open_ledger(ledger, h)) return kExitUsage;
    CString verdict;
    const avl_status st = avl_adjudicate(h.p, case_text->c_str(), params ? params->c_str() : nullptr, &verdict.p);
    if (st == AVL_ERR_INTEGRITY) {
        std::cerr << "avl: " << avl_last_error() << "\n";
        return kExitIntegrity;
    }
    if (st != AVL_OK) return report_error("cannot adjudicate");
    std::cout << verdict.str() << "\n";
    return kExitOk;
}

int cmd_keys(std::optional<std::uint64_t> seed) {
    CString out;
    if (avl_keys_generate(seed.value_or(0), seed ? 1 : 0, &out.p) != AVL_OK) return report_error("key generation failed");
    std::cout << out.str() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Permissioned liability ledger simulator for autonomous vehicles"};
    app.require_subcommand(1);
    app.set_version_flag("--version", avl_version());

    std::string config, out, ledger_dir, ledger, kind, cert, case_path, params_path;
    std::optional<std::uint64_t> seed;
    bool as_json = false;

    auto* run = app.add_subcommand("run", "Run a scenario and write its report");
    run->add_option("config", config, "Scenario config (JSON)")->required();
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out", out, "Report path (default stdout)");
    run->add_option("--ledger-dir", ledger_dir, "Write ledgers, audit log and case files here");

    auto* verify = app.add_subcommand("verify", "Check a ledger file's chain integrity");
    verify->add_option("ledger", ledger, "Ledger file (.avlb)")->required();
    verify->add_flag("--json", as_json, "Print the report as JSON");

    auto* inspect = app.add_subcommand("inspect", "List transactions in a ledger file");
    inspect->add_option("ledger", ledger, "Ledger file (.avlb)")->required();
    inspect->add_option("--kind", kind, "EST, PET, UT, ET, MT or RET");
    inspect->add_option("--cert", cert, "Pseudonym certificate id (hex)");
    inspect->add_flag("--json", as_json, "Print full transactions as JSON");

    auto* adj = app.add_subcommand("adjudicate", "Decide liability for a collision case");
    adj->add_option("ledger", ledger, "P1 ledger file (.avlb)")->required();
    adj->add_option("--case", case_path, "Case file (JSON)")->required();
    adj->add_option("--params", params_path, "Adjudication parameters (JSON)");

    auto* keys = app.add_subcommand("keys", "Generate an Ed25519 entity key pair");
    keys->add_option("--seed", seed, "Deterministic seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "avl: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    if (*run) return cmd_run(config, seed, out, ledger_dir);
    if (*verify) return cmd_verify(ledger, as_json);
    if (*inspect) return cmd_inspect(ledger, kind, cert, as_json);
    if (*adj) return cmd_adjudicate(ledger, case_path, params_path);
    if (*keys) return cmd_keys(seed);
    return kExitUsage;
}
