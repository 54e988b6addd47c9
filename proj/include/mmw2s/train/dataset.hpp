#pragma once

#include <vector>

#include "mmw2s/common/parallel.hpp"
#include "mmw2s/corpus/builder.hpp"
#include "mmw2s/train/finetune.hpp"

namespace mmw2s {

/// Extracts features for manifest records. Fails when a record names a
/// source the corpus does not have.
inline std::vector<TrainExample> examples_from_records(const Corpus& corpus,
                                                       const std::vector<LabeledClipRecord>& records,
                                                       const WindowConfig& window, const FrontendConfig& fe,
                                                       const ModelConfig& model) {
  std::vector<const CorpusSource*> sources;
  for (const auto& r : records) {
    const CorpusSource* s = corpus.find(r.source_id);
    require(s != nullptr, ErrorCode::kIo, "manifest references unknown source " + r.source_id);
    sources.push_back(s);
  }
  std::vector<TrainExample> out(records.size());
  parallel_for(records.size(), [&](std::size_t k) {
    const Clip clip = extract_clip(sources[k]->timeline, records[k].i, window);
    out[k] = {extract_features(clip, fe, model), records[k].label};
  });
  return out;
}

}  // namespace mmw2s
