#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mmw2s/eval/metrics.hpp"
#include "mmw2s/infer/stream.hpp"
#include "mmw2s/train/dataset.hpp"

namespace mmw2s {

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Scores pre-extracted examples.
inline EvalReport evaluate_examples(const MultimodalModel& model, const std::vector<TrainExample>& data,
                                    ModalitySet mask, nlohmann::json meta = nlohmann::json::object()) {
  require(!data.empty(), ErrorCode::kInvalidConfig, "evaluation dataset is empty");
  std::vector<ResponseLabel> pred(data.size());
  parallel_for(data.size(), [&](std::size_t k) { pred[k] = predict_features(model, data[k].features, mask).label; });
  ConfusionMatrix cm;
  for (std::size_t k = 0; k < data.size(); ++k) cm.accumulate(data[k].label, pred[k]);
  return make_report(cm, std::move(meta));
}

/// Short-Clips mode: every record of `split` through predict_clip.
inline EvalReport evaluate_short_clips(const CorpusManifest& manifest, const Corpus& corpus, const Checkpoint& ck,
                                       ModalitySet mask, Split split = Split::kTest) {
  const auto records = manifest.subset(split);
  require(!records.empty(), ErrorCode::kInvalidConfig, std::string("no records in the ") + split_name(split) + " split");
  const auto data = examples_from_records(corpus, records, manifest.window, ck.frontend, ck.model.config());
  nlohmann::json meta = {{"mode", "short_clips"},
                         {"split", split_name(split)},
                         {"checkpoint_id", checkpoint_id(ck)},
                         {"modalities", mask.to_string()},
                         {"dataset_id", hex64(fnv1a64(records_to_jsonl(records)))}};
  return evaluate_examples(ck.model, data, mask, std::move(meta));
}

/// Full-Videos mode: run_stream over each listed source against its dense
/// labels; clips from all sources are pooled. An empty `source_ids` means
/// every source that has labels.
inline EvalReport evaluate_full_videos(const Corpus& corpus, const std::vector<FullVideoLabels>& gold,
                                       const Checkpoint& ck, ModalitySet mask,
                                       const std::set<std::string>& source_ids = {}) {
  std::vector<const FullVideoLabels*> jobs;
  for (const auto& g : gold) {
    if (source_ids.empty() || source_ids.count(g.source_id)) jobs.push_back(&g);
  }
  std::size_t total = 0;
  for (const auto* g : jobs) total += g->labels.size();
  require(total > 0, ErrorCode::kInvalidConfig, "full-videos dataset has no clips");
  std::vector<ConfusionMatrix> per_source(jobs.size());
  StreamOptions opt;
  opt.modalities = mask;
  parallel_for(jobs.size(), [&](std::size_t k) {
    const CorpusSource* src = corpus.find(jobs[k]->source_id);
    require(src != nullptr, ErrorCode::kIo, "labels reference unknown source " + jobs[k]->source_id);
    const auto events = run_stream(src->timeline, jobs[k]->window, ck, opt);
    require(events.size() == jobs[k]->labels.size(), ErrorCode::kShapeMismatch,
            "stream and dense labels disagree in length for " + src->id());
    for (std::size_t e = 0; e < events.size(); ++e) per_source[k].accumulate(jobs[k]->labels[e], events[e].label);
  });
  ConfusionMatrix cm;
  std::string ids;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    cm += per_source[k];
    ids += jobs[k]->source_id + ";";
  }
  nlohmann::json meta = {{"mode", "full_videos"},
                         {"checkpoint_id", checkpoint_id(ck)},
                         {"modalities", mask.to_string()},
                         {"dataset_id", hex64(fnv1a64(ids))},
                         {"n_sources", jobs.size()}};
  return make_report(cm, std::move(meta));
}

}  // namespace mmw2s
