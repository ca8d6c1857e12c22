/*
 * Copyright 2026 The rulewalk Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to rulewalk. Every function returns an rw_status; on failure
 * rw_last_error() describes the problem until the next call on the same
 * thread. Handles are opaque and owned by the caller.
 */

#ifndef RULEWALK_RULEWALK_H_
#define RULEWALK_RULEWALK_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(RW_BUILDING_LIBRARY)
#define RW_API __declspec(dllexport)
#else
#define RW_API __declspec(dllimport)
#endif
#else
#define RW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rw_status {
  RW_OK = 0,
  RW_ERR_INVALID_ARGUMENT = 1,
  RW_ERR_IO = 2,
  RW_ERR_PARSE = 3,
  RW_ERR_CONFIG = 4,
  RW_ERR_PRECONDITION = 5,
  RW_ERR_LOOKUP = 6,
  RW_ERR_SHAPE = 7,
  RW_ERR_NUMERIC = 8,
  RW_ERR_STATE = 9,
  RW_ERR_INTERNAL = 100
} rw_status;

typedef struct rw_config rw_config;
typedef struct rw_pipeline rw_pipeline;

typedef struct rw_graph_stats {
  uint64_t entities;
  uint64_t relations; /* data relations */
  uint64_t train;
  uint64_t dev;
  uint64_t test;
} rw_graph_stats;

/* Percentages, except for the query count. */
typedef struct rw_metrics {
  double hits1;
  double hits5;
  double hits10;
  double mrr;
  double rule_usage;
  uint64_t queries;
} rw_metrics;

RW_API const char* rw_version(void);
RW_API const char* rw_status_name(rw_status status);
/* Message of the last failure on this thread; "" after a success. */
RW_API const char* rw_last_error(void);

RW_API rw_status rw_config_create(rw_config** out);
RW_API void rw_config_destroy(rw_config* config);
RW_API rw_status rw_config_set(rw_config* config, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated, truncated to cap). *needed, when
 * non-null, receives the full length plus one. */
RW_API rw_status rw_config_get(const rw_config* config, const char* key, char* buf,
                               size_t cap, size_t* needed);
RW_API rw_status rw_config_load(rw_config* config, const char* path);
/* Writes every key as `key = value` lines, same buffer contract as get. */
RW_API rw_status rw_config_dump(const rw_config* config, char* buf, size_t cap,
                                size_t* needed);

/* Writes a generated dataset ("kinship" or "cluster") into dir. */
RW_API rw_status rw_generate_dataset(const char* kind, const char* dir, uint64_t seed);

/* Validates the config and creates the output directory. With verbose set,
 * progress goes to stderr. */
RW_API rw_status rw_pipeline_create(const rw_config* config, int verbose, rw_pipeline** out);
RW_API void rw_pipeline_destroy(rw_pipeline* pipeline);

RW_API rw_status rw_prepare(rw_pipeline* pipeline, rw_graph_stats* stats);
RW_API rw_status rw_compute_pagerank(rw_pipeline* pipeline);
RW_API rw_status rw_train_embeddings(rw_pipeline* pipeline, double* best_dev_mrr);
RW_API rw_status rw_mine_rules(rw_pipeline* pipeline, uint64_t* rule_count);
RW_API rw_status rw_pretrain(rw_pipeline* pipeline, int* epochs_run);
RW_API rw_status rw_train(rw_pipeline* pipeline, int* epochs_run);
/* split is "train", "dev" or "test". */
RW_API rw_status rw_evaluate(rw_pipeline* pipeline, const char* split, rw_metrics* out);
RW_API rw_status rw_explain(rw_pipeline* pipeline, const char* split, uint64_t* queries);
RW_API rw_status rw_rule_report(rw_pipeline* pipeline, const char* split, uint64_t* rules);
/* All stages; `test` receives the test metrics when the split is non-empty. */
RW_API rw_status rw_run(rw_pipeline* pipeline, rw_metrics* dev, rw_metrics* test);

/* Output artifact path by name: "rules", "embeddings", "pretrained", "policy",
 * "train_log", "metrics", "paths", "rule_report", "pagerank", "entities",
 * "relations". */
RW_API rw_status rw_artifact_path(const rw_pipeline* pipeline, const char* name, char* buf,
                                  size_t cap, size_t* needed);

#ifdef __cplusplus
}
#endif

#endif /* RULEWALK_RULEWALK_H_ */
