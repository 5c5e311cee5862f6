#include "grec/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "grec/dialogue.hpp"

namespace grec::train {

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error("batch_size must be positive");
  if (!(lr > 0.0)) throw Error("lr must be positive");
  if (lambda < 0.0) throw Error("lambda must be non-negative");
  if (beam == 0) throw Error("beam must be at least 1");
  if (workers == 0) throw Error("workers must be at least 1");
  if (lr_interval == 0) throw Error("lr_interval must be positive");
}

double learning_rate(const TrainConfig& config, std::size_t step) {
  if (config.schedule == Schedule::Constant) return config.lr;
  const auto decays = static_cast<double>((step > 0 ? step - 1 : 0) / config.lr_interval);
  return std::max(config.lr_floor, config.lr * std::pow(config.lr_decay, decays));
}

LossVars compute_losses(const Example& example, const model::Encoded& encoded,
                        const model::Decoded& decoded, double lambda) {
  if (example.target.empty()) throw Error("empty target for " + example.id);
  if (decoded.mix.mixed.rows() != example.target.size())
    throw Error("decoded length does not match the target for " + example.id);
  std::vector<std::pair<int, int>> cells;
  for (std::size_t t = 0; t < example.target.size(); ++t) cells.emplace_back(static_cast<int>(t), example.target[t]);

  LossVars out;
  out.generation = nn::scale(nn::sum_all(nn::log(nn::pick(decoded.mix.mixed, std::move(cells)))), -1.0);
  out.emotion = nn::scale(nn::pick(nn::log_softmax_rows(encoded.emotion_logits), {{0, example.emotion}}), -1.0);
  out.total = nn::add(out.generation, nn::scale(out.emotion, lambda));
  const double v = out.total.value()(0, 0);
  if (!std::isfinite(v)) throw NonFiniteLoss("non-finite loss on example " + example.id);
  return out;
}

namespace {

std::size_t argmax_row(const nn::Matrix& m, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < m.cols(); ++c)
    if (m(r, c) > m(r, best)) best = c;
  return best;
}

}  // namespace

LossVars forward_example(Model& model, nn::Tape& tape, const Example& example, double lambda,
                         ExampleStats* stats) {
  auto enc = model.encode(tape, example);
  auto dec = model.decode(tape, example, enc, Model::teacher_inputs(example.target));
  auto losses = compute_losses(example, enc, dec, lambda);
  if (stats) {
    stats->emotion_loss = losses.emotion.value()(0, 0);
    stats->generation_loss = losses.generation.value()(0, 0);
    stats->total = losses.total.value()(0, 0);
    stats->tokens = example.target.size();
    const auto& mixed = dec.mix.mixed.value();
    stats->correct_tokens = 0;
    for (std::size_t t = 0; t < example.target.size(); ++t)
      if (static_cast<int>(argmax_row(mixed, t)) == example.target[t]) ++stats->correct_tokens;
    stats->emotion_correct =
        static_cast<int>(argmax_row(enc.emotion_logits.value(), 0)) == example.emotion;
  }
  return losses;
}

// ---- optimizer --------------------------------------------------------------

Adam::Adam(const nn::ParameterStore& store, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(store.zero_grads()), v_(store.zero_grads()) {}

void Adam::step(nn::ParameterStore& store, const nn::GradBuffer& grads, double lr) {
  if (grads.size() != store.size()) throw Error("gradient buffer does not match the parameters");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto& param = store.at(p);
    if (!param.trainable) continue;
    auto& w = param.value;
    const auto& g = grads[p];
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

// ---- training loop ----------------------------------------------------------

namespace {

struct BatchResult {
  nn::GradBuffer grads;
  double total = 0.0, generation = 0.0, emotion = 0.0;
};

void run_slice(Model& model, const std::vector<Example>& data, const std::vector<std::size_t>& idx,
               std::size_t begin, std::size_t end, double lambda, BatchResult& out) {
  out.grads = model.params().zero_grads();
  for (std::size_t i = begin; i < end; ++i) {
    nn::Tape tape;
    auto losses = forward_example(model, tape, data[idx[i]], lambda);
    tape.backward(losses.total);
    tape.accumulate(model.params(), out.grads);
    out.total += losses.total.value()(0, 0);
    out.generation += losses.generation.value()(0, 0);
    out.emotion += losses.emotion.value()(0, 0);
  }
}

std::string format_step(const StepLog& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "step %zu total %.9g L_g %.9g L_e %.9g lr %.6g", s.step, s.total,
                s.generation, s.emotion, s.lr);
  return buf;
}

}  // namespace

TrainResult train(Model& model, const std::vector<Example>& train_set,
                  const std::vector<Example>& valid_set, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  if (train_set.empty()) throw Error("training set is empty");
  TrainResult result;
  Adam adam(model.params(), config.beta1, config.beta2, config.adam_eps);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::size_t epoch = 0;
  double best_valid = INFINITY;
  std::size_t bad_validations = 0;

  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    if (cursor >= order.size()) {
      if (config.epochs > 0 && epoch == config.epochs) break;
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
      ++epoch;
    }
    std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                   order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), cursor + config.batch_size)));
    cursor += batch.size();

    const std::size_t workers = std::min(config.workers, batch.size());
    std::vector<BatchResult> parts(workers);
    std::vector<std::string> errors(workers);
    bool non_finite = false;
    auto slice = [&](std::size_t w) {
      const std::size_t b = batch.size() * w / workers, e = batch.size() * (w + 1) / workers;
      try {
        run_slice(model, train_set, batch, b, e, config.lambda, parts[w]);
      } catch (const NonFiniteLoss& ex) {
        errors[w] = ex.what();
      }
    };
    if (workers == 1) {
      slice(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(slice, w);
      for (auto& t : threads) t.join();
    }
    for (const auto& e : errors)
      if (!e.empty()) {
        non_finite = true;
        result.message = "step " + std::to_string(step) + ": " + e;
      }
    if (non_finite) {
      result.diverged = true;
      if (!hooks.checkpoint.empty()) model.params().save(hooks.checkpoint);
      return result;
    }

    BatchResult& sum = parts[0];
    for (std::size_t w = 1; w < workers; ++w) {
      for (std::size_t p = 0; p < sum.grads.size(); ++p)
        for (std::size_t i = 0; i < sum.grads[p].size(); ++i) sum.grads[p][i] += parts[w].grads[p][i];
      sum.total += parts[w].total;
      sum.generation += parts[w].generation;
      sum.emotion += parts[w].emotion;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& g : sum.grads)
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= inv;

    StepLog log{step, sum.total * inv, sum.generation * inv, sum.emotion * inv,
                learning_rate(config, step)};
    adam.step(model.params(), sum.grads, log.lr);
    result.log.push_back(log);
    result.steps = step;
    if (hooks.metrics) *hooks.metrics << format_step(log) << '\n';
    if (hooks.on_step) hooks.on_step(log);

    if (!valid_set.empty() && config.valid_every > 0 && step % config.valid_every == 0) {
      const double ppl = evaluate_teacher_forced(model, valid_set, config.workers).perplexity();
      result.validation_ppl.emplace_back(step, ppl);
      if (hooks.metrics) *hooks.metrics << "valid " << step << " ppl " << ppl << '\n';
      if (ppl < best_valid) {
        best_valid = ppl;
        bad_validations = 0;
      } else if (++bad_validations >= config.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  if (!hooks.checkpoint.empty()) model.params().save(hooks.checkpoint);
  return result;
}

// ---- evaluation -------------------------------------------------------------

double CorpusStats::perplexity() const {
  if (tokens == 0) throw Error("perplexity of an empty corpus");
  return std::exp(nll / static_cast<double>(tokens));
}

double CorpusStats::token_accuracy() const {
  return tokens == 0 ? 0.0 : static_cast<double>(correct_tokens) / static_cast<double>(tokens);
}

double CorpusStats::emotion_accuracy() const {
  return examples == 0 ? 0.0 : static_cast<double>(emotion_correct) / static_cast<double>(examples);
}

CorpusStats evaluate_teacher_forced(Model& model, const std::vector<Example>& examples,
                                    std::size_t workers) {
  std::vector<ExampleStats> stats(examples.size());
  auto run = [&](std::size_t w, std::size_t n) {
    for (std::size_t i = w; i < examples.size(); i += n) {
      nn::Tape tape(false);
      forward_example(model, tape, examples[i], 1.0, &stats[i]);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, examples.size()));
  if (workers == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w, workers);
    for (auto& t : threads) t.join();
  }
  CorpusStats out;
  for (const auto& s : stats) {
    out.nll += s.generation_loss;
    out.tokens += s.tokens;
    out.correct_tokens += s.correct_tokens;
    out.emotion_correct += s.emotion_correct ? 1 : 0;
    ++out.examples;
  }
  return out;
}

double perplexity(Model& model, const std::vector<Example>& examples) {
  if (examples.empty()) throw Error("perplexity of an empty dataset");
  return evaluate_teacher_forced(model, examples).perplexity();
}

// ---- beam search ------------------------------------------------------------

namespace {

struct Hypothesis {
  std::vector<int> tokens;
  double sum = 0.0;
  double mean() const { return sum / static_cast<double>(tokens.size()); }
};

bool better_sum(const Hypothesis& a, const Hypothesis& b) {
  if (a.sum != b.sum) return a.sum > b.sum;
  return a.tokens < b.tokens;
}

bool better_mean(const Hypothesis& a, const Hypothesis& b) {
  if (a.mean() != b.mean()) return a.mean() > b.mean();
  return a.tokens < b.tokens;
}

std::vector<Hypothesis> run_beam(const StepFunction& step, int eos, std::size_t beam,
                                 std::size_t max_len) {
  std::vector<Hypothesis> alive{Hypothesis{}}, finished;
  for (std::size_t len = 1; len <= max_len && !alive.empty(); ++len) {
    std::vector<Hypothesis> candidates;
    for (const auto& h : alive) {
      const auto lp = step(h.tokens);
      for (std::size_t v = 0; v < lp.size(); ++v) {
        Hypothesis c{h.tokens, h.sum + lp[v]};
        c.tokens.push_back(static_cast<int>(v));
        candidates.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(beam, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better_sum);
    alive.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      auto& c = candidates[i];
      if (c.tokens.back() == eos || len == max_len) finished.push_back(std::move(c));
      else alive.push_back(std::move(c));
    }
  }
  return finished;
}

}  // namespace

std::vector<int> beam_search(const StepFunction& step, int eos, std::size_t beam,
                             std::size_t max_len) {
  if (beam == 0) throw Error("beam must be at least 1");
  if (max_len == 0) return {};
  auto finished = run_beam(step, eos, beam, max_len);
  if (beam > 1) {
    auto greedy = run_beam(step, eos, 1, max_len);
    finished.insert(finished.end(), greedy.begin(), greedy.end());
  }
  auto best = *std::min_element(finished.begin(), finished.end(), better_mean);
  if (!best.tokens.empty() && best.tokens.back() == eos) best.tokens.pop_back();
  return best.tokens;
}

double sequence_score(const StepFunction& step, const std::vector<int>& tokens) {
  if (tokens.empty()) throw Error("score of an empty sequence");
  double sum = 0.0;
  std::vector<int> prefix;
  for (int t : tokens) {
    sum += step(prefix).at(static_cast<std::size_t>(t));
    prefix.push_back(t);
  }
  return sum / static_cast<double>(tokens.size());
}

std::vector<int> beam_search(Model& model, const Example& example, std::size_t beam,
                             std::size_t max_len) {
  nn::Tape tape(false);
  const auto encoded = model.encode(tape, example);
  const std::size_t mark = tape.node_count();
  max_len = std::min(max_len, model.config().max_decode_len);
  StepFunction step = [&](const std::vector<int>& prefix) {
    std::vector<int> inputs{data::Vocabulary::kSos};
    inputs.insert(inputs.end(), prefix.begin(), prefix.end());
    auto dec = model.decode(tape, example, encoded, inputs);
    const auto& mixed = dec.mix.mixed.value();
    std::vector<double> lp(mixed.cols());
    for (std::size_t v = 0; v < lp.size(); ++v) lp[v] = std::log(mixed(mixed.rows() - 1, v));
    tape.rewind(mark);
    return lp;
  };
  return beam_search(step, data::Vocabulary::kEos, beam, max_len);
}

// ---- BLEU -------------------------------------------------------------------

double bleu(const std::vector<std::vector<std::string>>& hypotheses,
            const std::vector<std::vector<std::string>>& references) {
  if (hypotheses.size() != references.size())
    throw Error("BLEU needs as many hypotheses as references");
  std::array<double, 4> correct{}, total{};
  double hyp_len = 0.0, ref_len = 0.0;
  using Gram = std::vector<std::string>;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    hyp_len += static_cast<double>(hyp.size());
    ref_len += static_cast<double>(ref.size());
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<Gram, int> ref_counts, hyp_counts;
      for (std::size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[Gram(ref.begin() + static_cast<std::ptrdiff_t>(i), ref.begin() + static_cast<std::ptrdiff_t>(i + n))];
      for (std::size_t i = 0; i + n <= hyp.size(); ++i) ++hyp_counts[Gram(hyp.begin() + static_cast<std::ptrdiff_t>(i), hyp.begin() + static_cast<std::ptrdiff_t>(i + n))];
      for (const auto& [gram, count] : hyp_counts) {
        total[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) correct[n - 1] += std::min(count, it->second);
      }
    }
  }
  if (ref_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (total[n] == 0.0 || correct[n] == 0.0) return 0.0;
    log_sum += std::log(correct[n] / total[n]);
  }
  const double bp = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

void write_report(std::ostream& out, const EvalReport& report) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", report.ppl);
  out << "ppl = " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", report.bleu);
  out << "bleu = " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", report.emotion_accuracy);
  out << "emotion_accuracy = " << buf << '\n';
}

}  // namespace grec::train
