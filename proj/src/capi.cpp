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

#include "rulewalk/rulewalk.h"

#include <cstring>
#include <iostream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "rulewalk/config.hpp"
#include "rulewalk/error.hpp"
#include "rulewalk/pipeline.hpp"
#include "rulewalk/synthetic.hpp"

struct rw_config {
  rulewalk::Config value;
};

struct rw_pipeline {
  std::unique_ptr<rulewalk::Pipeline> impl;
};

namespace {

thread_local std::string last_error;

rw_status to_status(rulewalk::ErrorCode code) {
  return static_cast<rw_status>(static_cast<int>(code));
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
rw_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return RW_OK;
  } catch (const rulewalk::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return RW_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RW_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return RW_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  rulewalk::require(p != nullptr, rulewalk::ErrorCode::kInvalidArgument,
                    std::string(what) + " is null");
}

void copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && cap > 0) {
    const size_t n = s.size() < cap - 1 ? s.size() : cap - 1;
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
}

void fill(rw_metrics* out, const rulewalk::MetricsReport& r) {
  if (!out) return;
  out->hits1 = r.hits1;
  out->hits5 = r.hits5;
  out->hits10 = r.hits10;
  out->mrr = r.mrr;
  out->rule_usage = r.rule_usage;
  out->queries = r.queries;
}

rulewalk::Pipeline& pipe(rw_pipeline* p) {
  need(p, "pipeline");
  rulewalk::require(p->impl != nullptr, rulewalk::ErrorCode::kState, "pipeline was not created");
  return *p->impl;
}

}  // namespace

extern "C" {

const char* rw_version(void) { return "0.1.0"; }

const char* rw_status_name(rw_status status) {
  switch (status) {
    case RW_OK: return "ok";
    case RW_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case RW_ERR_IO: return "io";
    case RW_ERR_PARSE: return "parse";
    case RW_ERR_CONFIG: return "config";
    case RW_ERR_PRECONDITION: return "precondition";
    case RW_ERR_LOOKUP: return "lookup";
    case RW_ERR_SHAPE: return "shape";
    case RW_ERR_NUMERIC: return "numeric";
    case RW_ERR_STATE: return "state";
    case RW_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* rw_last_error(void) { return last_error.c_str(); }

rw_status rw_config_create(rw_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new rw_config();
  });
}

void rw_config_destroy(rw_config* config) { delete config; }

rw_status rw_config_set(rw_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    rulewalk::set_config_value(config->value, key, value);
  });
}

rw_status rw_config_get(const rw_config* config, const char* key, char* buf, size_t cap,
                        size_t* needed) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    copy_out(rulewalk::get_config_value(config->value, key), buf, cap, needed);
  });
}

rw_status rw_config_load(rw_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    rulewalk::apply_config_file(config->value, path);
  });
}

rw_status rw_config_dump(const rw_config* config, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(config, "config");
    std::ostringstream out;
    rulewalk::write_config(out, config->value);
    copy_out(out.str(), buf, cap, needed);
  });
}

rw_status rw_generate_dataset(const char* kind, const char* dir, uint64_t seed) {
  return guarded([&] {
    need(kind, "kind");
    need(dir, "dir");
    const std::string k = kind;
    if (k == "kinship") {
      rulewalk::KinshipConfig c;
      c.seed = seed;
      rulewalk::write_dataset(dir, rulewalk::make_kinship(c));
    } else if (k == "cluster") {
      rulewalk::write_dataset(dir, rulewalk::make_cluster_graph());
    } else {
      rulewalk::fail(rulewalk::ErrorCode::kConfig,
                     "unknown dataset kind '" + k + "' (expected kinship or cluster)");
    }
  });
}

rw_status rw_pipeline_create(const rw_config* config, int verbose, rw_pipeline** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    auto p = std::make_unique<rw_pipeline>();
    p->impl = std::make_unique<rulewalk::Pipeline>(config->value, verbose ? &std::cerr : nullptr);
    *out = p.release();
  });
}

void rw_pipeline_destroy(rw_pipeline* pipeline) { delete pipeline; }

rw_status rw_prepare(rw_pipeline* pipeline, rw_graph_stats* stats) {
  return guarded([&] {
    const rulewalk::KnowledgeGraph& g = pipe(pipeline).graph();
    if (stats) {
      stats->entities = g.num_entities();
      stats->relations = g.vocab().num_data_relations();
      stats->train = g.split(rulewalk::Split::kTrain).size();
      stats->dev = g.split(rulewalk::Split::kDev).size();
      stats->test = g.split(rulewalk::Split::kTest).size();
    }
  });
}

rw_status rw_compute_pagerank(rw_pipeline* pipeline) {
  return guarded([&] { pipe(pipeline).recompute_pagerank(); });
}

rw_status rw_train_embeddings(rw_pipeline* pipeline, double* best_dev_mrr) {
  return guarded([&] {
    rulewalk::Pipeline& p = pipe(pipeline);
    p.train_embeddings();
    if (best_dev_mrr) *best_dev_mrr = p.embedding_dev_mrr();
  });
}

rw_status rw_mine_rules(rw_pipeline* pipeline, uint64_t* rule_count) {
  return guarded([&] {
    const auto& index = pipe(pipeline).mine_rules();
    if (rule_count) *rule_count = index.size();
  });
}

rw_status rw_pretrain(rw_pipeline* pipeline, int* epochs_run) {
  return guarded([&] {
    const auto logs = pipe(pipeline).pretrain();
    if (epochs_run) *epochs_run = static_cast<int>(logs.size());
  });
}

rw_status rw_train(rw_pipeline* pipeline, int* epochs_run) {
  return guarded([&] {
    const auto logs = pipe(pipeline).train();
    if (epochs_run) *epochs_run = static_cast<int>(logs.size());
  });
}

rw_status rw_evaluate(rw_pipeline* pipeline, const char* split, rw_metrics* out) {
  return guarded([&] {
    need(split, "split");
    fill(out, pipe(pipeline).evaluate(rulewalk::parse_split(split)));
  });
}

rw_status rw_explain(rw_pipeline* pipeline, const char* split, uint64_t* queries) {
  return guarded([&] {
    need(split, "split");
    const auto preds = pipe(pipeline).explain(rulewalk::parse_split(split));
    if (queries) *queries = preds.size();
  });
}

rw_status rw_rule_report(rw_pipeline* pipeline, const char* split, uint64_t* rules) {
  return guarded([&] {
    need(split, "split");
    const auto report = pipe(pipeline).rule_report(rulewalk::parse_split(split));
    if (rules) *rules = report.size();
  });
}

rw_status rw_run(rw_pipeline* pipeline, rw_metrics* dev, rw_metrics* test) {
  return guarded([&] {
    const rulewalk::RunSummary s = pipe(pipeline).run();
    fill(dev, s.dev);
    fill(test, s.test);
  });
}

rw_status rw_artifact_path(const rw_pipeline* pipeline, const char* name, char* buf, size_t cap,
                           size_t* needed) {
  return guarded([&] {
    need(pipeline, "pipeline");
    need(name, "name");
    const rulewalk::ArtifactPaths& a = pipeline->impl->paths();
    const std::string n = name;
    const std::filesystem::path* path = nullptr;
    if (n == "rules") path = &a.rules;
    else if (n == "embeddings") path = &a.embeddings;
    else if (n == "pretrained") path = &a.pretrained;
    else if (n == "policy") path = &a.policy;
    else if (n == "train_log") path = &a.train_log;
    else if (n == "metrics") path = &a.metrics;
    else if (n == "paths") path = &a.paths;
    else if (n == "rule_report") path = &a.rule_report;
    else if (n == "pagerank") path = &a.pagerank;
    else if (n == "entities") path = &a.entities;
    else if (n == "relations") path = &a.relations;
    rulewalk::require(path != nullptr, rulewalk::ErrorCode::kLookup,
                      "unknown artifact '" + n + "'");
    copy_out(path->string(), buf, cap, needed);
  });
}

}  // extern "C"
