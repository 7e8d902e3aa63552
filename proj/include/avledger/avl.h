#ifndef AVLEDGER_AVL_H
#define AVLEDGER_AVL_H

#include <stddef.h>
#include <stdint.h>

#if defined(AVL_BUILDING_LIBRARY)
#define AVL_API __attribute__((visibility("default")))
#else
#define AVL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avl_status {
    AVL_OK = 0,
    AVL_ERR_INVALID_ARGUMENT = 1,
    AVL_ERR_CONFIG = 2,
    AVL_ERR_IO = 3,
    AVL_ERR_DECODE = 4,
    AVL_ERR_INTEGRITY = 5,
    AVL_ERR_NOT_FOUND = 6,
    AVL_ERR_MALFORMED_CASE = 7,
    AVL_ERR_STATE = 8,
    AVL_ERR_INTERNAL = 9
} avl_status;

typedef struct avl_ledger avl_ledger;
typedef struct avl_scenario avl_scenario;

/* Message for the last failing call on this thread; never NULL. */
AVL_API const char* avl_last_error(void);
AVL_API const char* avl_version(void);
/* Frees strings returned through char** out-parameters. */
AVL_API void avl_string_free(char* s);

/* Opens a ledger file. Integrity problems do not fail the open; inspect
 * them with avl_ledger_verify. */
AVL_API avl_status avl_ledger_open(const char* path, avl_ledger** out);
AVL_API void avl_ledger_close(avl_ledger* ledger);

/* *ok is 1 iff the whole chain verifies. report_json (optional) receives
 * {"ok", "blocks": [...], "issues": [...]}. */
AVL_API avl_status avl_ledger_verify(const avl_ledger* ledger, int* ok, char** report_json);

/* Partition, b_max, genesis id, block and transaction counts. */
AVL_API avl_status avl_ledger_info(const avl_ledger* ledger, char** json);

/* JSON array of matching transactions. kind ("EST".."RET") and cert_hex
 * may be NULL; full != 0 returns whole transactions instead of summaries. */
AVL_API avl_status avl_ledger_query(const avl_ledger* ledger, const char* kind, const char* cert_hex, int full,
                                    char** json);

AVL_API avl_status avl_scenario_load(const char* path, avl_scenario** out);
AVL_API avl_status avl_scenario_parse(const char* json_text, avl_scenario** out);
AVL_API avl_status avl_scenario_set_seed(avl_scenario* scenario, uint64_t seed);
AVL_API avl_status avl_scenario_run(avl_scenario* scenario);
AVL_API avl_status avl_scenario_report_json(const avl_scenario* scenario, char** json);
AVL_API avl_status avl_scenario_undetected(const avl_scenario* scenario, size_t* count);
/* Writes p1.avlb, p2.avlb, audit.jsonl and one case file per collision. */
AVL_API avl_status avl_scenario_save_artifacts(const avl_scenario* scenario, const char* dir);
AVL_API void avl_scenario_free(avl_scenario* scenario);

/* Liability verdict for a collision case against a P1 ledger.
 * params_json may be NULL for defaults. */
AVL_API avl_status avl_adjudicate(const avl_ledger* p1, const char* case_json, const char* params_json,
                                  char** verdict_json);

/* Ed25519 entity key pair as JSON {"public_key", "seed"}; deterministic
 * when has_seed != 0. */
AVL_API avl_status avl_keys_generate(uint64_t seed, int has_seed, char** json);

#ifdef __cplusplus
}
#endif

#endif
