#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egad/beam.hpp"
#include "egad/keywords.hpp"
#include "egad/model.hpp"
#include "egad/rouge.hpp"
#include "egad/seq2seq.hpp"
#include "egad/types.hpp"

namespace egad {

// Defaults match the training hyperparameter table exactly.
struct TrainConfig {
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 5;
    int batch_size = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

// First/second moment estimates per parameter array, in visit_params order.
struct OptimizerState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    long long t = 0;
};

OptimizerState make_optimizer_state(const ModelParams& params);

// One Adam update in place. Throws (naming the parameter group) when a
// gradient is non-finite.
void adam_step(ModelParams& params, const ModelGrads& grads, OptimizerState& state,
               const TrainConfig& cfg);

// A preprocessed teacher-forcing example: prefixed encoder input with global
// indices, BOS-initiated decoder prefix, and the shifted targets ending in EOS.
struct TrainingExample {
    std::string id;
    TokenSeq input;
    std::vector<int> globals;
    TokenSeq prefix;
    TokenSeq targets;
};

TrainingExample make_training_example(const Document& doc, const KeywordSet& keywords,
                                      const Vocabulary& vocab, int max_input_positions);

double example_loss(const TrainingExample& ex, const ModelParams& params, const ModelConfig& cfg);

double mean_loss(const std::vector<TrainingExample>& examples, const ModelParams& params,
                 const ModelConfig& cfg);

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    ModelParams best_params;
    int best_epoch = 0;
    std::vector<EpochStats> log;
};

// Teacher-forced epochs with Adam; after each epoch the validation loss is
// computed and the checkpoint with the minimum (earliest on ties) is kept.
TrainResult train(const ModelParams& initial, const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& val_set, const ModelConfig& model_cfg,
                  const TrainConfig& cfg);

// Plain step loop without epoch bookkeeping: full passes over the examples in
// order, one Adam update per batch, stopping early once the running epoch
// mean loss drops below stop_loss. Returns the number of steps taken;
// batch_losses, when given, receives the pre-update loss of every step.
int fit_steps(ModelParams& params, const std::vector<TrainingExample>& examples,
              const ModelConfig& model_cfg, const TrainConfig& cfg, int max_steps,
              double stop_loss, std::vector<double>* batch_losses = nullptr);

void write_loss_log(const std::string& path, const std::vector<EpochStats>& log);

// --- few-shot experiment harness ---

struct FewShotPlan {
    std::vector<int> sample_sizes = {0, 10, 100};
    int repetitions = 5;
    std::uint64_t base_seed = 0;
};

struct SampleDraw {
    int sample_size = 0;
    int repetition = 0;  // 0-based
    std::vector<std::string> train_ids;
    std::vector<std::string> eval_ids;
};

struct FewShotRow {
    int sample_size = 0;
    double rouge1_f = 0.0;
    double rouge2_f = 0.0;
    double rougeL_f = 0.0;
};

struct FewShotResult {
    std::vector<FewShotRow> rows;      // one per sample size, repetition means
    std::vector<SampleDraw> draws;     // every (sample size, repetition) draw
};

// The zero/few-shot protocol for one keyword configuration: per sample size
// and repetition, draw min(s, train) training and min(100, eval) evaluation
// examples with the repetition seed (draws depend only on base_seed,
// repetition, and sample size, never on the keyword configuration), fine-tune
// per train() (s = 0 skips training), generate with beam search, and report
// ROUGE-1/2/L F means over repetitions. The drawn evaluation sample doubles
// as the validation set for epoch selection.
FewShotResult few_shot_run(const std::vector<Document>& train_docs,
                           const std::vector<Document>& eval_docs, const Vocabulary& vocab,
                           const BackgroundDictionary& bg, const FewShotPlan& plan,
                           const KeywordConfig& keyword_cfg, const ModelParams& initial,
                           const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                           const GenerationConfig& gen_cfg);

}  // namespace egad
