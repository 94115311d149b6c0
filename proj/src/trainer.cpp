#include "egad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "egad/rng.hpp"

namespace egad {

void TrainConfig::validate() const {
    if (learning_rate < 0) throw std::invalid_argument("learning_rate must be >= 0");
    if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1) {
        throw std::invalid_argument("Adam betas must lie in (0, 1)");
    }
    if (epsilon <= 0) throw std::invalid_argument("Adam epsilon must be > 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

OptimizerState make_optimizer_state(const ModelParams& params) {
    OptimizerState state;
    visit_params(
        [&state](const std::string&, const auto& arr) {
            state.m.push_back(Matrix::Zero(arr.rows(), arr.cols()));
            state.v.push_back(Matrix::Zero(arr.rows(), arr.cols()));
        },
        params);
    return state;
}

void adam_step(ModelParams& params, const ModelGrads& grads, OptimizerState& state,
               const TrainConfig& cfg) {
    cfg.validate();
    state.t += 1;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    std::size_t idx = 0;
    visit_params(
        [&](const std::string& name, auto& param, const auto& grad) {
            if (!grad.allFinite()) {
                throw std::runtime_error("adam_step: non-finite gradient in " + name);
            }
            Matrix& m = state.m[idx];
            Matrix& v = state.v[idx];
            ++idx;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
            v = (cfg.beta2 * v).array() + (1.0 - cfg.beta2) * grad.array().square();
            const auto m_hat = (m / bias1).array();
            const auto v_hat = (v / bias2).array();
            param -= (cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon)).matrix();
        },
        params, grads);
}

TrainingExample make_training_example(const Document& doc, const KeywordSet& keywords,
                                      const Vocabulary& vocab, int max_input_positions) {
    TrainingExample ex;
    ex.id = doc.id;
    const PrefixedInput prefixed = prefix_and_mark(tokenize(doc.document, vocab), keywords, vocab);
    ex.input = prefixed.tokens;
    ex.globals = prefixed.global_indices;
    if (static_cast<int>(ex.input.size()) > max_input_positions) {
        ex.input.ids.resize(static_cast<std::size_t>(max_input_positions));
    }

    TokenSeq summary = tokenize(doc.summary, vocab);
    // Room for BOS in the prefix and EOS in the targets.
    if (static_cast<int>(summary.size()) > max_input_positions - 1) {
        summary.ids.resize(static_cast<std::size_t>(max_input_positions - 1));
    }
    ex.prefix.ids.push_back(BOS);
    ex.prefix.ids.insert(ex.prefix.ids.end(), summary.ids.begin(), summary.ids.end());
    ex.targets = summary;
    ex.targets.ids.push_back(EOS);
    return ex;
}

double example_loss(const TrainingExample& ex, const ModelParams& params, const ModelConfig& cfg) {
    return forward(ex.input, ex.globals, ex.prefix, ex.targets, params, cfg).loss;
}

double mean_loss(const std::vector<TrainingExample>& examples, const ModelParams& params,
                 const ModelConfig& cfg) {
    if (examples.empty()) throw std::invalid_argument("mean_loss over an empty example set");
    double total = 0.0;
    for (const TrainingExample& ex : examples) total += example_loss(ex, params, cfg);
    return total / static_cast<double>(examples.size());
}

namespace {

void accumulate(ModelGrads& total, const ModelGrads& part) {
    visit_params([](const std::string&, auto& a, const auto& b) { a += b; }, total, part);
}

// One Adam update from the mean gradient over batch; returns the mean of the
// pre-update example losses.
double batch_step(ModelParams& params, const std::vector<TrainingExample>& examples,
                  const std::vector<std::size_t>& batch, OptimizerState& state,
                  const ModelConfig& model_cfg, const TrainConfig& cfg) {
    ModelGrads grads = zeros_like(params);
    double loss_sum = 0.0;
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (std::size_t idx : batch) {
        const ForwardTrace trace = forward(examples[idx].input, examples[idx].globals,
                                           examples[idx].prefix, examples[idx].targets, params,
                                           model_cfg);
        loss_sum += trace.loss;
        accumulate(grads, backward(trace, params, model_cfg, scale));
    }
    adam_step(params, grads, state, cfg);
    return loss_sum * scale;
}

}  // namespace

TrainResult train(const ModelParams& initial, const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& val_set, const ModelConfig& model_cfg,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("train: training set is empty");
    if (val_set.empty()) throw std::invalid_argument("train: validation set is empty");

    TrainResult result;
    ModelParams params = initial;
    OptimizerState state = make_optimizer_state(params);

    double best_val = std::numeric_limits<double>::infinity();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(train_set.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.seed, "epoch_shuffle", static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.next_below(i))]);
        }

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(end));
            epoch_loss += batch_step(params, train_set, batch, state, model_cfg, cfg);
            ++batches;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(batches);
        stats.val_loss = mean_loss(val_set, params, model_cfg);
        result.log.push_back(stats);

        // Earliest epoch wins ties.
        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            result.best_params = params;
            result.best_epoch = epoch;
        }
    }
    return result;
}

int fit_steps(ModelParams& params, const std::vector<TrainingExample>& examples,
              const ModelConfig& model_cfg, const TrainConfig& cfg, int max_steps,
              double stop_loss, std::vector<double>* batch_losses) {
    cfg.validate();
    if (examples.empty()) throw std::invalid_argument("fit_steps: example set is empty");
    OptimizerState state = make_optimizer_state(params);

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    int steps = 0;
    std::size_t cursor = 0;
    const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
    while (steps < max_steps) {
        std::vector<std::size_t> batch;
        for (std::size_t i = 0; i < batch_size && i < order.size(); ++i) {
            batch.push_back(order[(cursor + i) % order.size()]);
        }
        cursor = (cursor + batch.size()) % order.size();
        const double batch_loss = batch_step(params, examples, batch, state, model_cfg, cfg);
        if (batch_losses) batch_losses->push_back(batch_loss);
        ++steps;
        if (batch_loss < stop_loss && batch.size() == order.size()) {
            break;  // full-batch loss is the exact training loss
        }
        if (batch.size() < order.size() && batch_loss < stop_loss &&
            mean_loss(examples, params, model_cfg) < stop_loss) {
            break;
        }
    }
    return steps;
}

void write_loss_log(const std::string& path, const std::vector<EpochStats>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write loss log: " + path);
    out << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const EpochStats& s : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", s.epoch, s.train_loss, s.val_loss);
        out << buf;
    }
}

FewShotResult few_shot_run(const std::vector<Document>& train_docs,
                           const std::vector<Document>& eval_docs, const Vocabulary& vocab,
                           const BackgroundDictionary& bg, const FewShotPlan& plan,
                           const KeywordConfig& keyword_cfg, const ModelParams& initial,
                           const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                           const GenerationConfig& gen_cfg) {
    if (plan.repetitions < 1) throw std::invalid_argument("few_shot_run: repetitions must be >= 1");
    if (eval_docs.empty()) throw std::invalid_argument("few_shot_run: need >= 1 evaluation example");

    auto build_example = [&](const Document& doc, std::uint64_t kw_seed) {
        KeywordConfig kw = keyword_cfg;
        kw.seed = kw_seed;
        const KeywordSet keywords = select_keywords(doc.document, doc.summary, bg, kw);
        return make_training_example(doc, keywords, vocab, model_cfg.max_positions);
    };

    FewShotResult result;
    for (int s : plan.sample_sizes) {
        RougeScore sum;
        for (int rep = 0; rep < plan.repetitions; ++rep) {
            const std::uint64_t rep_seed = plan.base_seed + static_cast<std::uint64_t>(rep);

            // Draws depend only on (base_seed, repetition, sample size) so
            // every keyword configuration sees the same samples.
            Rng train_rng(derive_seed(rep_seed, "fewshot_train_draw", static_cast<std::uint64_t>(s)));
            Rng eval_rng(derive_seed(rep_seed, "fewshot_eval_draw", static_cast<std::uint64_t>(s)));
            const auto train_idx = sample_without_replacement(
                train_docs.size(), static_cast<std::size_t>(std::max(s, 0)), train_rng);
            const auto eval_idx =
                sample_without_replacement(eval_docs.size(), std::size_t{100}, eval_rng);

            SampleDraw draw;
            draw.sample_size = s;
            draw.repetition = rep;
            for (std::size_t i : train_idx) draw.train_ids.push_back(train_docs[i].id);
            for (std::size_t i : eval_idx) draw.eval_ids.push_back(eval_docs[i].id);
            result.draws.push_back(draw);

            std::vector<TrainingExample> train_set;
            for (std::size_t i : train_idx) {
                train_set.push_back(
                    build_example(train_docs[i], derive_seed(keyword_cfg.seed, "keywords.train", i)));
            }
            std::vector<TrainingExample> eval_set;
            for (std::size_t i : eval_idx) {
                eval_set.push_back(
                    build_example(eval_docs[i], derive_seed(keyword_cfg.seed, "keywords.eval", i)));
            }

            ModelParams model = initial;
            if (s > 0 && !train_set.empty()) {
                TrainConfig rep_cfg = train_cfg;
                rep_cfg.seed = derive_seed(rep_seed, "train_shuffle", static_cast<std::uint64_t>(s));
                // The drawn evaluation sample doubles as the validation set.
                model = train(initial, train_set, eval_set, model_cfg, rep_cfg).best_params;
            }

            std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
            for (std::size_t p = 0; p < eval_idx.size(); ++p) {
                const TrainingExample& ex = eval_set[p];
                const GenerationResult gen =
                    generate(model, model_cfg, ex.input, ex.globals, gen_cfg);
                const std::string cand_text =
                    join_words(detokenize_content(gen.tokens, vocab));
                pairs.emplace_back(rouge_tokenize(cand_text),
                                   rouge_tokenize(join_words(eval_docs[eval_idx[p]].summary)));
            }
            const RougeScore score = corpus_rouge(pairs);
            sum.rouge1.f_measure += score.rouge1.f_measure;
            sum.rouge2.f_measure += score.rouge2.f_measure;
            sum.rougeL.f_measure += score.rougeL.f_measure;
        }
        FewShotRow row;
        row.sample_size = s;
        const double inv = 1.0 / static_cast<double>(plan.repetitions);
        row.rouge1_f = sum.rouge1.f_measure * inv;
        row.rouge2_f = sum.rouge2.f_measure * inv;
        row.rougeL_f = sum.rougeL.f_measure * inv;
        result.rows.push_back(row);
    }
    return result;
}

}  // namespace egad
