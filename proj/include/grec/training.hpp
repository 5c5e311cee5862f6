#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "grec/error.hpp"
#include "grec/model.hpp"

namespace grec::train {

using model::Example;
using model::Model;
using nn::Var;

enum class Schedule { Constant, StepDecay };

struct TrainConfig {
  std::size_t batch_size = 32;
  double lr = 1e-4;
  Schedule schedule = Schedule::Constant;
  /// StepDecay: lr * decay^(step / interval), never below floor.
  double lr_decay = 0.1;
  std::size_t lr_interval = 500;
  double lr_floor = 1e-5;
  double lambda = 1.0;
  std::size_t max_steps = 1000;
  /// 0 means no epoch limit.
  std::size_t epochs = 0;
  std::uint64_t seed = 1;
  std::size_t beam = 5;
  std::size_t valid_every = 200;
  std::size_t patience = 5;
  std::size_t workers = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

/// Learning rate used at (1-based) `step`.
double learning_rate(const TrainConfig& config, std::size_t step);

/// A loss evaluated to NaN or infinity.
class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

struct LossVars {
  Var emotion;
  Var generation;
  Var total;
};

/// L_e = -log q_e[label], L_g = -sum_t log o_t[y_t], total = L_g + lambda L_e.
/// Throws NonFiniteLoss naming the example.
LossVars compute_losses(const Example& example, const model::Encoded& encoded,
                        const model::Decoded& decoded, double lambda);

struct ExampleStats {
  double emotion_loss = 0.0;
  double generation_loss = 0.0;
  double total = 0.0;
  std::size_t tokens = 0;
  std::size_t correct_tokens = 0;
  bool emotion_correct = false;
};

/// Teacher-forced forward pass on `tape`; fills stats and returns the losses.
LossVars forward_example(Model& model, nn::Tape& tape, const Example& example, double lambda,
                         ExampleStats* stats = nullptr);

class Adam {
 public:
  Adam(const nn::ParameterStore& store, double beta1, double beta2, double eps);
  /// Updates trainable parameters with the given gradients.
  void step(nn::ParameterStore& store, const nn::GradBuffer& grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<nn::Matrix> m_, v_;
};

struct StepLog {
  std::size_t step = 0;
  double total = 0.0;
  double generation = 0.0;
  double emotion = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<StepLog> log;
  std::vector<std::pair<std::size_t, double>> validation_ppl;
  std::size_t steps = 0;
  bool stopped_early = false;
  bool diverged = false;
  std::string message;
};

struct TrainHooks {
  /// Receives `step total L_g L_e lr` lines.
  std::ostream* metrics = nullptr;
  /// Written at the end, and with the last good parameters on divergence.
  std::filesystem::path checkpoint;
  std::function<void(const StepLog&)> on_step;
};

/// Adam over seeded shuffled mini-batches; the batch loss is the mean of
/// per-example totals.
TrainResult train(Model& model, const std::vector<Example>& train_set,
                  const std::vector<Example>& valid_set, const TrainConfig& config,
                  const TrainHooks& hooks = {});

struct CorpusStats {
  double nll = 0.0;
  std::size_t tokens = 0;
  std::size_t correct_tokens = 0;
  std::size_t emotion_correct = 0;
  std::size_t examples = 0;

  double perplexity() const;
  double token_accuracy() const;
  double emotion_accuracy() const;
};

CorpusStats evaluate_teacher_forced(Model& model, const std::vector<Example>& examples,
                                    std::size_t workers = 1);

/// exp(total target NLL / target token count), EOS included.
double perplexity(Model& model, const std::vector<Example>& examples);

/// Log-probabilities of the next token given a generated prefix.
using StepFunction = std::function<std::vector<double>(const std::vector<int>& prefix)>;

/// Length-normalized beam search: hypotheses are ranked by mean token
/// log-probability, EOS ends a hypothesis, ties go to the lower token index.
/// The greedy hypothesis is always among the final candidates.
std::vector<int> beam_search(const StepFunction& step, int eos, std::size_t beam,
                             std::size_t max_len);

/// Beam search over the model's mixed distribution. The result excludes EOS.
std::vector<int> beam_search(Model& model, const Example& example, std::size_t beam,
                             std::size_t max_len);

/// Mean log-probability of a token sequence under `step`.
double sequence_score(const StepFunction& step, const std::vector<int>& tokens);

/// Corpus BLEU-4 in [0, 100], single reference, no smoothing.
double bleu(const std::vector<std::vector<std::string>>& hypotheses,
            const std::vector<std::vector<std::string>>& references);

struct EvalReport {
  double ppl = 0.0;
  double bleu = 0.0;
  double emotion_accuracy = 0.0;
};

void write_report(std::ostream& out, const EvalReport& report);

}  // namespace grec::train
