#pragma once

#include <iosfwd>
#include <vector>

#include "grec/dialogue.hpp"
#include "grec/model.hpp"

namespace grec::model {

/// Writes the per-step concept score trace of `response` (no EOS; EOS is
/// appended as the final step) teacher-forced through the model.
///
///   # grec score trace v1
///   conversation <id> ablation <name> steps <T>
///   step <t> emit <token> gate <g> mixed <hash> generic <hash>
///   concept <graph> <node> <token> <depth> <role> <raw score> <probability>
///
/// Graph concepts list every node; nodes outside the vocabulary show
/// probability `oov`. The no_graph variant lists its concept words with
/// graph, node and depth `-`, role `plain` and the concept logit as raw
/// score. Hashes are FNV-1a over the distribution row's doubles. Numbers use
/// 9 significant digits.
void write_trace(std::ostream& out, Model& model, const Example& example,
                 const std::vector<int>& response, const data::Vocabulary& vocab);

}  // namespace grec::model
