#include "grec/trace.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

#include "grec/hash.hpp"

namespace grec::model {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string row_hash(const Matrix& m, std::size_t r) {
  Fnv1a h;
  for (std::size_t c = 0; c < m.cols(); ++c) h.update(m(r, c));
  std::ostringstream s;
  s << std::hex << h.digest();
  return s.str();
}

}  // namespace

void write_trace(std::ostream& out, Model& model, const Example& example,
                 const std::vector<int>& response, const data::Vocabulary& vocab) {
  nn::Tape tape(false);
  auto enc = model.encode(tape, example);
  std::vector<int> emitted = response;
  emitted.push_back(data::Vocabulary::kEos);
  auto dec = model.decode(tape, example, enc, Model::teacher_inputs(emitted));
  const Ablation ablation = model.config().ablation;

  out << "# grec score trace v1\n";
  out << "conversation " << example.id << " ablation " << ablation_name(ablation) << " steps "
      << emitted.size() << '\n';
  const auto& mixed = dec.mix.mixed.value();
  const auto& generic = dec.generic.value();
  const auto& gate = dec.mix.gate.value();
  for (std::size_t t = 0; t < emitted.size(); ++t) {
    out << "step " << t << " emit " << vocab.token(emitted[t]) << " gate " << num(gate(t, 0))
        << " mixed " << row_hash(mixed, t) << " generic " << row_hash(generic, t) << '\n';
    if (dec.concepts.empty()) continue;
    const auto& probs = dec.concepts.probs.value();
    auto prob_of = [&](const std::string& tok) -> std::string {
      for (std::size_t c = 0; c < dec.concepts.tokens.size(); ++c)
        if (dec.concepts.tokens[c] == tok) return num(probs(t, c));
      return "oov";
    };
    if (ablation == Ablation::NoGraph) {
      const auto& scores = dec.concepts.scores.value();
      for (std::size_t c = 0; c < dec.concepts.tokens.size(); ++c)
        out << "concept - - " << dec.concepts.tokens[c] << " - plain " << num(scores(t, c)) << ' '
            << num(probs(t, c)) << '\n';
      continue;
    }
    for (std::size_t g = 0; g < example.graphs.size(); ++g) {
      const auto& graph = example.graphs[g].graph;
      for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto& node = graph.nodes[i];
        out << "concept " << g << ' ' << i << ' ' << node.token << ' ' << node.depth << ' '
            << graph::role_name(node.role) << ' ' << num(dec.node_scores[g][i].value()(0, t)) << ' '
            << prob_of(node.token) << '\n';
      }
    }
  }
}

}  // namespace grec::model
