#include "avledger/avl.h"

#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string take(char* s) {
    std::string out = s ? s : "";
    avl_string_free(s);
    return out;
}

struct Ledger {
    avl_ledger* h = nullptr;
    ~Ledger() { avl_ledger_close(h); }
};

struct Scenario {
    avl_scenario* h = nullptr;
    ~Scenario() { avl_scenario_free(h); }
};

std::string config(const std::string& name) { return std::string(AVL_SOURCE_DIR) + "/configs/" + name + ".json"; }

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("avl-capi-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void flip_byte(const fs::path& p, std::ptrdiff_t from_end) {
    std::string bytes = slurp(p);
    bytes[bytes.size() - static_cast<std::size_t>(from_end)] ^= 1;
    std::ofstream(p, std::ios::binary) << bytes;
}

TEST(CApi, NullArgumentsAreRejected) {
    EXPECT_EQ(avl_ledger_open(nullptr, nullptr), AVL_ERR_INVALID_ARGUMENT);
    EXPECT_NE(std::string(avl_last_error()), "");
    EXPECT_EQ(avl_scenario_parse(nullptr, nullptr), AVL_ERR_INVALID_ARGUMENT);
    int ok = 0;
    EXPECT_EQ(avl_ledger_verify(nullptr, &ok, nullptr), AVL_ERR_INVALID_ARGUMENT);
    avl_ledger_close(nullptr);
    avl_scenario_free(nullptr);
    avl_string_free(nullptr);
    EXPECT_NE(std::string(avl_version()), "");
}

TEST(CApi, BadConfigs) {
    Scenario s;
    EXPECT_EQ(avl_scenario_parse("{not json", &s.h), AVL_ERR_CONFIG);
    EXPECT_EQ(avl_scenario_parse(R"({"b_max": 0})", &s.h), AVL_ERR_CONFIG);
    EXPECT_NE(std::string(avl_last_error()).find("b_max"), std::string::npos);
    EXPECT_EQ(avl_scenario_load("/nonexistent.json", &s.h), AVL_ERR_CONFIG);
    EXPECT_EQ(s.h, nullptr);
}

TEST(CApi, ReportBeforeRunIsAStateError) {
    Scenario s;
    ASSERT_EQ(avl_scenario_parse(R"({"seed": 1})", &s.h), AVL_OK);
    char* out = nullptr;
    EXPECT_EQ(avl_scenario_report_json(s.h, &out), AVL_ERR_STATE);
    size_t n = 0;
    EXPECT_EQ(avl_scenario_undetected(s.h, &n), AVL_ERR_STATE);
}

TEST(CApi, RunVerifyQueryAdjudicate) {
    const fs::path dir = scratch("benign");
    Scenario s;
    ASSERT_EQ(avl_scenario_load(config("benign").c_str(), &s.h), AVL_OK);
    ASSERT_EQ(avl_scenario_run(s.h), AVL_OK);
    size_t undetected = 99;
    ASSERT_EQ(avl_scenario_undetected(s.h, &undetected), AVL_OK);
    EXPECT_EQ(undetected, 0u);
    char* report = nullptr;
    ASSERT_EQ(avl_scenario_report_json(s.h, &report), AVL_OK);
    const json r = json::parse(take(report));
    EXPECT_EQ(r["seed"], 7);
    ASSERT_EQ(avl_scenario_save_artifacts(s.h, dir.string().c_str()), AVL_OK);

    Ledger l;
    ASSERT_EQ(avl_ledger_open((dir / "p1.avlb").string().c_str(), &l.h), AVL_OK);
    int ok = 0;
    char* vr = nullptr;
    ASSERT_EQ(avl_ledger_verify(l.h, &ok, &vr), AVL_OK);
    EXPECT_EQ(ok, 1);
    EXPECT_TRUE(json::parse(take(vr))["issues"].empty());

    char* info = nullptr;
    ASSERT_EQ(avl_ledger_info(l.h, &info), AVL_OK);
    const json i = json::parse(take(info));
    EXPECT_EQ(i["partition"], "P1");
    EXPECT_EQ(i["b_max"], 8);

    char* uts = nullptr;
    ASSERT_EQ(avl_ledger_query(l.h, "UT", nullptr, 1, &uts), AVL_OK);
    const json ut_list = json::parse(take(uts));
    EXPECT_EQ(ut_list.size(), 2u);
    for (const auto& t : ut_list) EXPECT_EQ(t["kind"], "UT");
    char* bad = nullptr;
    EXPECT_EQ(avl_ledger_query(l.h, "XX", nullptr, 0, &bad), AVL_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(avl_ledger_query(l.h, nullptr, "zz", 0, &bad), AVL_ERR_INVALID_ARGUMENT);

    fs::path case_file;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename().string().rfind("case-", 0) == 0) case_file = e.path();
    ASSERT_FALSE(case_file.empty());
    const std::string case_text = slurp(case_file);
    char* verdict = nullptr;
    ASSERT_EQ(avl_adjudicate(l.h, case_text.c_str(), nullptr, &verdict), AVL_OK);
    const json v = json::parse(take(verdict));
    EXPECT_EQ(v["class"], "ProductDefect");
    EXPECT_EQ(avl_adjudicate(l.h, R"({"case_id": "x", "at": 1, "loc": {"lat": 0, "lon": 0}, "parties": [], "pets": []})",
                             nullptr, &verdict),
              AVL_ERR_MALFORMED_CASE);
}

TEST(CApi, CorruptFilesAreIntegrityFailures) {
    const fs::path dir = scratch("tamper");
    Scenario s;
    ASSERT_EQ(avl_scenario_load(config("tamper").c_str(), &s.h), AVL_OK);
    ASSERT_EQ(avl_scenario_run(s.h), AVL_OK);
    ASSERT_EQ(avl_scenario_save_artifacts(s.h, dir.string().c_str()), AVL_OK);
    flip_byte(dir / "p1.avlb", 40);

    Ledger l;
    ASSERT_EQ(avl_ledger_open((dir / "p1.avlb").string().c_str(), &l.h), AVL_OK);
    int ok = 1;
    char* vr = nullptr;
    ASSERT_EQ(avl_ledger_verify(l.h, &ok, &vr), AVL_OK);
    EXPECT_EQ(ok, 0);
    const json report = json::parse(take(vr));
    ASSERT_FALSE(report["issues"].empty());

    std::ofstream(dir / "empty.avlb").flush();
    Ledger e;
    ASSERT_EQ(avl_ledger_open((dir / "empty.avlb").string().c_str(), &e.h), AVL_OK);
    ASSERT_EQ(avl_ledger_verify(e.h, &ok, &vr), AVL_OK);
    EXPECT_EQ(ok, 0);
    EXPECT_NE(take(vr).find("missing genesis"), std::string::npos);

    Ledger missing;
    EXPECT_EQ(avl_ledger_open((dir / "nope.avlb").string().c_str(), &missing.h), AVL_ERR_IO);
}

TEST(CApi, KeysDeterministicWithSeed) {
    char* a = nullptr;
    char* b = nullptr;
    char* c = nullptr;
    ASSERT_EQ(avl_keys_generate(5, 1, &a), AVL_OK);
    ASSERT_EQ(avl_keys_generate(5, 1, &b), AVL_OK);
    ASSERT_EQ(avl_keys_generate(6, 1, &c), AVL_OK);
    const std::string sa = take(a), sb = take(b), sc = take(c);
    EXPECT_EQ(sa, sb);
    EXPECT_NE(sa, sc);
    EXPECT_EQ(json::parse(sa)["public_key"].get<std::string>().size(), 64u);
}

// ---- the avl executable ------------------------------------------------------

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result avl(const std::string& args) {
    const fs::path err = fs::temp_directory_path() / "avl-cli-stderr.txt";
    const std::string cmd = std::string("'") + AVL_CLI + "' " + args + " 2>'" + err.string() + "'";
    Result r;
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe.get())) > 0) r.out.append(buf, n);
    const int status = pclose(pipe.release());
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
}

bool keys_sorted(const json& j) {
    if (j.is_object()) {
        std::string prev;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first && it.key() < prev) return false;
            prev = it.key();
            first = false;
            if (!keys_sorted(it.value())) return false;
        }
    } else if (j.is_array()) {
        for (const auto& e : j)
            if (!keys_sorted(e)) return false;
    }
    return true;
}

// nlohmann's object type sorts on its own, so check the raw text too.
bool text_keys_sorted(const std::string& text) {
    const json j = json::parse(text);
    return keys_sorted(j) && j.dump(2) == text.substr(0, text.find_last_not_of('\n') + 1);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(avl("").code, 2);
    const auto bogus = avl("bogus");
    EXPECT_EQ(bogus.code, 2);
    EXPECT_NE(bogus.err.find("run"), std::string::npos);
    EXPECT_EQ(avl("--help").code, 0);
    EXPECT_EQ(avl("verify").code, 2);
}

TEST(Cli, RunWritesSortedReport) {
    const auto r = avl("run '" + config("benign") + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(text_keys_sorted(r.out));
    const auto again = avl("run '" + config("benign") + "'");
    EXPECT_EQ(again.out, r.out);
    const auto other_seed = avl("run '" + config("benign") + "' --seed 8");
    EXPECT_NE(other_seed.out, r.out);
}

TEST(Cli, RunConfigErrorsExitTwo) {
    const fs::path dir = scratch("cli-config");
    std::ofstream(dir / "broken.json") << "{\"seed\": ";
    std::ofstream(dir / "field.json") << R"({"timeline": [{"type": "safety", "at": 1, "vehicle": "av9", "trigger": "hard_brake"}]})";
    const auto broken = avl("run '" + (dir / "broken.json").string() + "'");
    EXPECT_EQ(broken.code, 2);
    const auto field = avl("run '" + (dir / "field.json").string() + "'");
    EXPECT_EQ(field.code, 2);
    EXPECT_NE(field.err.find("timeline[0].vehicle"), std::string::npos) << field.err;
    EXPECT_EQ(avl("run /nonexistent.json").code, 2);
}

TEST(Cli, UndetectedAttackExitsOne) {
    const fs::path dir = scratch("cli-oom");
    std::ofstream(dir / "all.json") << R"({"seed": 3, "timeline": [
        {"type": "collision", "at": 100, "striking": "av1", "struck": "av2"},
        {"type": "safety", "at": 2000, "vehicle": "av3", "trigger": "hard_brake"}],
        "attack": {"type": "SuppressEvidence", "actor": "ic1", "at": 105, "all_replicas": true}})";
    const auto r = avl("run '" + (dir / "all.json").string() + "'");
    EXPECT_EQ(r.code, 1) << r.err;
    EXPECT_EQ(json::parse(r.out)["valid"], false);
}

TEST(Cli, VerifyInspectAdjudicate) {
    const fs::path dir = scratch("cli-verify");
    ASSERT_EQ(avl("run '" + config("tamper") + "' --out '" + (dir / "report.json").string() + "' --ledger-dir '" +
                  dir.string() + "'").code,
              0);
    EXPECT_TRUE(text_keys_sorted(slurp(dir / "report.json")));
    const std::string p1 = "'" + (dir / "p1.avlb").string() + "'";

    const auto ok = avl("verify " + p1);
    EXPECT_EQ(ok.code, 0);
    EXPECT_NE(ok.out.find("chain OK"), std::string::npos);
    const auto ok_json = avl("verify " + p1 + " --json");
    EXPECT_EQ(json::parse(ok_json.out)["ok"], true);

    const auto listed = avl("inspect " + p1 + " --json");
    ASSERT_EQ(listed.code, 0);
    const json txs = json::parse(listed.out);
    ASSERT_FALSE(txs.empty());
    EXPECT_TRUE(keys_sorted(txs));
    const std::string last_tid = txs.back()["tid"];
    const auto ests = json::parse(avl("inspect " + p1 + " --kind EST --json").out);
    for (const auto& t : ests) EXPECT_EQ(t["kind"], "EST");
    const auto bad_kind = avl("inspect " + p1 + " --kind XX");
    EXPECT_EQ(bad_kind.code, 2);
    EXPECT_NE(bad_kind.err.find("EST, PET, UT, ET, MT, RET"), std::string::npos);
    EXPECT_EQ(avl("inspect " + p1 + " --cert nothex").code, 2);

    flip_byte(dir / "p1.avlb", 40);  // inside the last transaction
    const auto bad = avl("verify " + p1);
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("chain INVALID"), std::string::npos);
    EXPECT_NE(bad.out.find(last_tid), std::string::npos) << bad.out;
    EXPECT_EQ(avl("inspect " + p1).code, 1);

    std::ofstream(dir / "empty.avlb").flush();
    const auto empty = avl("verify '" + (dir / "empty.avlb").string() + "'");
    EXPECT_EQ(empty.code, 1);
    EXPECT_NE(empty.out.find("missing genesis"), std::string::npos);
    EXPECT_EQ(avl("verify '" + (dir / "absent.avlb").string() + "'").code, 2);
}

TEST(Cli, AdjudicateCaseFile) {
    const fs::path dir = scratch("cli-adj");
    ASSERT_EQ(avl("run '" + config("false_information") + "' --ledger-dir '" + dir.string() + "'").code, 0);
    fs::path case_file;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename().string().rfind("case-", 0) == 0) case_file = e.path();
    ASSERT_FALSE(case_file.empty());
    const std::string p1 = "'" + (dir / "p1.avlb").string() + "'";
    const auto r = avl("adjudicate " + p1 + " --case '" + case_file.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const json v = json::parse(r.out);
    EXPECT_EQ(v["rule"], "fraud");
    EXPECT_TRUE(keys_sorted(v));

    std::ofstream(dir / "params.json") << R"({"time_tol": "soon"})";
    EXPECT_EQ(avl("adjudicate " + p1 + " --case '" + case_file.string() + "' --params '" +
                  (dir / "params.json").string() + "'").code,
              2);
    std::ofstream(dir / "empty-case.json") << R"({"case_id": "x", "at": 1, "loc": {"lat": 0, "lon": 0}, "parties": [], "pets": []})";
    EXPECT_EQ(avl("adjudicate " + p1 + " --case '" + (dir / "empty-case.json").string() + "'").code, 2);
}

TEST(Cli, Keys) {
    const auto a = avl("keys --seed 9");
    const auto b = avl("keys --seed 9");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(avl("keys").out, avl("keys").out);
}

}  // namespace
