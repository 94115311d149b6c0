#include "egad/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "egad/attention_pattern.hpp"
#include "egad/rng.hpp"
#include "egad/rouge.hpp"

namespace egad {

namespace {

std::string format_rouge(double f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", f * 100.0);
    return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void add_model_options(CLI::App* cmd, ModelConfig& cfg, int& vocab_size) {
    cmd->add_option("--vocab-size", vocab_size, "Maximum vocabulary size (specials included)");
    cmd->add_option("--d-model", cfg.d_model, "Model width");
    cmd->add_option("--n-heads", cfg.n_heads, "Attention heads");
    cmd->add_option("--d-ff", cfg.d_ff, "Feed-forward width");
    cmd->add_option("--encoder-layers", cfg.encoder_layers, "Encoder layer count");
    cmd->add_option("--decoder-layers", cfg.decoder_layers, "Decoder layer count");
    cmd->add_option("--max-positions", cfg.max_positions, "Maximum sequence length");
    cmd->add_option("--half-width", cfg.half_width, "Encoder window half-width");
    cmd->add_option("--dilation", cfg.dilation, "Encoder window dilation");
    cmd->add_option_function<std::string>(
           "--decoder-order",
           [&cfg](const std::string& v) { cfg.decoder_order = decoder_order_from_string(v); },
           "Decoder sublayer order: cross_then_self | self_then_cross")
        ->default_str(to_string(cfg.decoder_order));
}

void add_train_options(CLI::App* cmd, TrainConfig& cfg) {
    cmd->add_option("--learning-rate", cfg.learning_rate, "Adam learning rate");
    cmd->add_option("--beta1", cfg.beta1, "Adam beta1");
    cmd->add_option("--beta2", cfg.beta2, "Adam beta2");
    cmd->add_option("--adam-epsilon", cfg.epsilon, "Adam epsilon");
    cmd->add_option("--epochs", cfg.epochs, "Fine-tuning epochs");
    cmd->add_option("--batch-size", cfg.batch_size, "Batch size");
}

void add_generation_options(CLI::App* cmd, GenerationConfig& cfg) {
    cmd->add_option_function<std::string>(
        "--preset",
        [&cfg](const std::string& v) {
            if (v == "arxiv") cfg = GenerationConfig::arxiv();
            else if (v == "ami") cfg = GenerationConfig::ami();
            else if (v == "icsi") cfg = GenerationConfig::icsi();
            else throw CLI::ValidationError("--preset", "unknown preset: " + v);
        },
        "Generation preset: arxiv | ami | icsi");
    cmd->add_option("--num-beams", cfg.num_beams, "Beam count");
    cmd->add_option("--max-length", cfg.max_length, "Maximum generated length");
    cmd->add_option("--min-length", cfg.min_length, "Minimum generated length");
    cmd->add_option("--length-penalty", cfg.length_penalty, "Length penalty exponent");
    cmd->add_option("--early-stopping", cfg.early_stopping, "Stop when the finished pool is full");
    cmd->add_option("--no-repeat-ngram", cfg.no_repeat_ngram, "Banned repeat n-gram size (0 = off)");
}

void add_keyword_options(CLI::App* cmd, KeywordConfig& cfg) {
    cmd->add_option("--keyword-count", cfg.k, "Keywords prefixed per document");
    cmd->add_option_function<std::string>(
           "--keyword-source",
           [&cfg](const std::string& v) { cfg.source = keyword_source_from_string(v); },
           "Keyword source: tfidf | random | gibberish | oracle")
        ->default_str(to_string(cfg.source));
}

BackgroundDictionary load_background_if_needed(const std::string& path,
                                               const KeywordConfig& kw) {
    const bool needed =
        kw.k > 0 && (kw.source == KeywordSource::Tfidf || kw.source == KeywordSource::Oracle);
    if (!needed) return {};
    if (path.empty()) {
        throw std::runtime_error("a background dictionary is required for tf-idf keywords");
    }
    return load_background_dictionary(path);
}

std::vector<TrainingExample> build_examples(const std::vector<Document>& docs,
                                            const Vocabulary& vocab,
                                            const BackgroundDictionary& bg,
                                            const KeywordConfig& kw, const ModelConfig& model_cfg,
                                            std::uint64_t seed, const char* stream) {
    std::vector<TrainingExample> out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        KeywordConfig per_doc = kw;
        per_doc.seed = derive_seed(seed, stream, i);
        const KeywordSet keywords = select_keywords(docs[i].document, docs[i].summary, bg, per_doc);
        out.push_back(make_training_example(docs[i], keywords, vocab, model_cfg.max_positions));
    }
    return out;
}

// Reads a JSON-lines file into id -> text, taking "generated" when present
// and "summary" otherwise.
std::map<std::string, std::string> load_texts_by_id(const std::string& path,
                                                    std::vector<std::string>* order) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::map<std::string, std::string> texts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
        }
        if (!obj.contains("id") || !obj["id"].is_string()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": missing string field \"id\"");
        }
        const char* field = obj.contains("generated") ? "generated" : "summary";
        if (!obj.contains(field) || !obj[field].is_string()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected a \"generated\" or \"summary\" string field");
        }
        const std::string id = obj["id"].get<std::string>();
        if (!texts.emplace(id, obj[field].get<std::string>()).second) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate id \"" +
                                     id + "\"");
        }
        if (order) order->push_back(id);
    }
    return texts;
}

struct FewShotCell {
    int sample_size = 0;
    int keyword_count = 0;
    FewShotRow row;
};

}  // namespace

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
    for (TokenId id = 0; id < vocab.size(); ++id) {
        out << vocab.word_of(id) << "\n";
    }
}

Vocabulary load_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
    Vocabulary vocab;
    std::string line;
    TokenId id = 0;
    while (std::getline(in, line)) {
        if (id < kNumSpecials) {
            if (line != vocab.word_of(id)) {
                throw std::runtime_error("vocabulary file " + path +
                                         " does not start with the reserved specials");
            }
        } else {
            vocab.add_word(line);
        }
        ++id;
    }
    return vocab;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sliding-window summarization with global keyword attention"};
    app.require_subcommand(1);
    // Captured defaults make the emitted resolved-config complete: every
    // option appears with the value the run actually used.
    app.option_defaults()->always_capture_default(true);
    app.set_config("--config", "", "Flat key = value configuration file; flags take precedence");

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Base seed; all randomness derives from it");

    ExperimentConfig cfg;

    // --- pattern ---
    auto* pattern_cmd = app.add_subcommand("pattern", "Export an attention sparsity mask as PGM");
    std::string pattern_kind = "egad";
    int pattern_n = 16;
    int pattern_h = 2;
    int pattern_d = 1;
    std::vector<int> pattern_globals;
    int pattern_random = 0;
    std::string pattern_out = "mask.pgm";
    pattern_cmd->add_option("--kind", pattern_kind, "full | window | longformer | bigbird | egad");
    pattern_cmd->add_option("--n", pattern_n, "Sequence length");
    pattern_cmd->add_option("--half-width", pattern_h, "Window half-width");
    pattern_cmd->add_option("--dilation", pattern_d, "Window dilation");
    pattern_cmd->add_option("--globals", pattern_globals, "Global token indices")->delimiter(',');
    pattern_cmd->add_option("--random-globals", pattern_random, "Random global count (bigbird)");
    pattern_cmd->add_option("--out", pattern_out, "Output PGM path");
    pattern_cmd->callback([&] {
        const AttentionPattern p = build_pattern(
            pattern_kind_from_string(pattern_kind), pattern_n, pattern_h, pattern_d,
            std::set<int>(pattern_globals.begin(), pattern_globals.end()), pattern_random,
            derive_seed(seed, "pattern_random_globals"));
        export_mask(p, pattern_out);
        out << "pairs " << pair_count(p) << "\n";
        write_text_file(pattern_out + ".config", app.config_to_str(true, false));
    });

    // --- keywords ---
    auto* kw_cmd = app.add_subcommand("keywords", "Print selected keywords per document");
    std::string kw_corpus, kw_background;
    kw_cmd->add_option("--corpus", kw_corpus, "JSON-lines corpus")->required();
    kw_cmd->add_option("--background", kw_background, "word<TAB>count dictionary");
    add_keyword_options(kw_cmd, cfg.keywords);
    kw_cmd->callback([&] {
        const auto docs = load_corpus(kw_corpus);
        const BackgroundDictionary bg = load_background_if_needed(kw_background, cfg.keywords);
        for (std::size_t i = 0; i < docs.size(); ++i) {
            KeywordConfig per_doc = cfg.keywords;
            per_doc.seed = derive_seed(seed, "keywords", i);
            const KeywordSet set = select_keywords(docs[i].document, docs[i].summary, bg, per_doc);
            out << "# " << docs[i].id << "\n";
            for (std::size_t k = 0; k < set.words.size(); ++k) {
                out << set.words[k];
                if (k < set.scores.size()) {
                    char buf[40];
                    std::snprintf(buf, sizeof(buf), "%.6f", set.scores[k]);
                    out << "\t" << buf;
                }
                out << "\n";
            }
        }
    });

    // --- evaluate ---
    auto* eval_cmd = app.add_subcommand("evaluate", "Score candidates against references");
    std::string eval_cand, eval_ref;
    eval_cmd->add_option("--cand", eval_cand, "Candidate JSON-lines")->required();
    eval_cmd->add_option("--ref", eval_ref, "Reference JSON-lines")->required();
    eval_cmd->callback([&] {
        std::vector<std::string> order;
        const auto cand = load_texts_by_id(eval_cand, &order);
        const auto ref = load_texts_by_id(eval_ref, nullptr);
        std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
        for (const std::string& id : order) {
            auto it = ref.find(id);
            if (it == ref.end()) {
                throw std::runtime_error("candidate id \"" + id + "\" missing from " + eval_ref);
            }
            pairs.emplace_back(rouge_tokenize(cand.at(id)), rouge_tokenize(it->second));
        }
        const RougeScore score = corpus_rouge(pairs);
        out << "R-1 " << format_rouge(score.rouge1.f_measure) << "\n";
        out << "R-2 " << format_rouge(score.rouge2.f_measure) << "\n";
        out << "R-L " << format_rouge(score.rougeL.f_measure) << "\n";
    });

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "Fine-tune and keep the best-validation epoch");
    train_cmd->add_option("--train-corpus", cfg.train_corpus, "Training JSON-lines")->required();
    train_cmd->add_option("--val-corpus", cfg.eval_corpus, "Validation JSON-lines")->required();
    train_cmd->add_option("--background", cfg.background, "Background dictionary");
    train_cmd->add_option("--out", cfg.output_dir, "Output directory")->required();
    add_model_options(train_cmd, cfg.model, cfg.vocab_size);
    add_train_options(train_cmd, cfg.train);
    add_keyword_options(train_cmd, cfg.keywords);
    train_cmd->callback([&] {
        const auto train_docs = load_corpus(cfg.train_corpus);
        const auto val_docs = load_corpus(cfg.eval_corpus);
        const BackgroundDictionary bg = load_background_if_needed(cfg.background, cfg.keywords);
        const Vocabulary vocab = build_vocabulary(train_docs, cfg.vocab_size);
        cfg.model.vocab_size = vocab.size();
        cfg.train.seed = derive_seed(seed, "train_shuffle");

        const auto train_set = build_examples(train_docs, vocab, bg, cfg.keywords, cfg.model,
                                              seed, "keywords.train");
        const auto val_set =
            build_examples(val_docs, vocab, bg, cfg.keywords, cfg.model, seed, "keywords.val");

        const ModelParams initial = init_params(cfg.model, derive_seed(seed, "init"));
        const TrainResult result = train(initial, train_set, val_set, cfg.model, cfg.train);

        std::filesystem::create_directories(cfg.output_dir);
        save_checkpoint(result.best_params, cfg.model, cfg.output_dir + "/model");
        save_vocabulary(vocab, cfg.output_dir + "/vocab.txt");
        write_loss_log(cfg.output_dir + "/loss_log.csv", result.log);
        write_text_file(cfg.output_dir + "/config.resolved", app.config_to_str(true, false));
        out << "best_epoch " << result.best_epoch << "\n";
    });

    // --- generate ---
    auto* gen_cmd = app.add_subcommand("generate", "Beam-search summaries for a corpus");
    std::string gen_corpus, gen_checkpoint, gen_vocab, gen_out;
    gen_cmd->add_option("--corpus", gen_corpus, "JSON-lines corpus")->required();
    gen_cmd->add_option("--checkpoint", gen_checkpoint, "Checkpoint prefix")->required();
    gen_cmd->add_option("--vocab", gen_vocab, "Vocabulary file")->required();
    gen_cmd->add_option("--background", cfg.background, "Background dictionary");
    gen_cmd->add_option("--out", gen_out, "Output JSON-lines")->required();
    add_generation_options(gen_cmd, cfg.generation);
    add_keyword_options(gen_cmd, cfg.keywords);
    gen_cmd->callback([&] {
        const auto docs = load_corpus(gen_corpus);
        const Checkpoint ckpt = load_checkpoint(gen_checkpoint);
        const Vocabulary vocab = load_vocabulary(gen_vocab);
        const BackgroundDictionary bg = load_background_if_needed(cfg.background, cfg.keywords);

        std::ofstream os(gen_out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + gen_out);
        for (std::size_t i = 0; i < docs.size(); ++i) {
            KeywordConfig per_doc = cfg.keywords;
            per_doc.seed = derive_seed(seed, "keywords", i);
            const KeywordSet keywords =
                select_keywords(docs[i].document, docs[i].summary, bg, per_doc);
            const TrainingExample ex =
                make_training_example(docs[i], keywords, vocab, ckpt.config.max_positions);
            const GenerationResult gen =
                generate(ckpt.params, ckpt.config, ex.input, ex.globals, cfg.generation);
            nlohmann::json record = {
                {"id", docs[i].id},
                {"generated", join_words(detokenize_content(gen.tokens, vocab))},
            };
            os << record.dump() << "\n";
        }
        write_text_file(gen_out + ".config", app.config_to_str(true, false));
    });

    // --- fewshot ---
    auto* few_cmd = app.add_subcommand("fewshot", "Zero/few-shot protocol over keyword counts");
    std::vector<int> few_kw_counts = {0, 10, 20};
    few_cmd->add_option("--train-corpus", cfg.train_corpus, "Training JSON-lines")->required();
    few_cmd->add_option("--eval-corpus", cfg.eval_corpus, "Evaluation JSON-lines")->required();
    few_cmd->add_option("--background", cfg.background, "Background dictionary");
    few_cmd->add_option("--out", cfg.output_dir, "Output directory")->required();
    few_cmd->add_option("--sample-sizes", cfg.plan.sample_sizes, "Training sample sizes")
        ->delimiter(',');
    few_cmd->add_option("--keyword-counts", few_kw_counts, "Keyword counts")->delimiter(',');
    few_cmd->add_option("--reps", cfg.plan.repetitions, "Repetitions per configuration");
    add_model_options(few_cmd, cfg.model, cfg.vocab_size);
    add_train_options(few_cmd, cfg.train);
    add_generation_options(few_cmd, cfg.generation);
    add_keyword_options(few_cmd, cfg.keywords);
    few_cmd->callback([&] {
        if (few_kw_counts.empty()) {
            throw std::runtime_error("fewshot needs at least one keyword count");
        }
        const auto train_docs = load_corpus(cfg.train_corpus);
        const auto eval_docs = load_corpus(cfg.eval_corpus);
        KeywordConfig kw = cfg.keywords;
        kw.seed = derive_seed(seed, "gibberish");
        const bool needs_bg =
            (kw.source == KeywordSource::Tfidf || kw.source == KeywordSource::Oracle) &&
            *std::max_element(few_kw_counts.begin(), few_kw_counts.end()) > 0;
        BackgroundDictionary bg;
        if (needs_bg) {
            if (cfg.background.empty()) {
                throw std::runtime_error("a background dictionary is required for tf-idf keywords");
            }
            bg = load_background_dictionary(cfg.background);
        }
        const Vocabulary vocab = build_vocabulary(train_docs, cfg.vocab_size);
        cfg.model.vocab_size = vocab.size();
        cfg.plan.base_seed = derive_seed(seed, "fewshot_sampling");

        // One shared starting model across every cell and repetition.
        const ModelParams initial = init_params(cfg.model, derive_seed(seed, "init"));

        std::vector<FewShotCell> cells;
        std::string samples_csv = "keyword_count,sample_size,repetition,role,position,doc_id\n";
        for (int kw_count : few_kw_counts) {
            KeywordConfig cell_kw = kw;
            cell_kw.k = kw_count;
            const FewShotResult result =
                few_shot_run(train_docs, eval_docs, vocab, bg, cfg.plan, cell_kw, initial,
                             cfg.model, cfg.train, cfg.generation);
            for (const FewShotRow& row : result.rows) {
                cells.push_back({row.sample_size, kw_count, row});
            }
            for (const SampleDraw& draw : result.draws) {
                auto emit = [&](const char* role, const std::vector<std::string>& ids) {
                    for (std::size_t p = 0; p < ids.size(); ++p) {
                        samples_csv += std::to_string(kw_count) + "," +
                                       std::to_string(draw.sample_size) + "," +
                                       std::to_string(draw.repetition) + "," + role + "," +
                                       std::to_string(p) + "," + ids[p] + "\n";
                    }
                };
                emit("train", draw.train_ids);
                emit("eval", draw.eval_ids);
            }
        }
        std::sort(cells.begin(), cells.end(), [](const FewShotCell& a, const FewShotCell& b) {
            if (a.sample_size != b.sample_size) return a.sample_size < b.sample_size;
            return a.keyword_count < b.keyword_count;
        });

        std::string report = "sample_size,keyword_count,rouge1,rouge2,rougeL\n";
        for (const FewShotCell& c : cells) {
            report += std::to_string(c.sample_size) + "," + std::to_string(c.keyword_count) + "," +
                      format_rouge(c.row.rouge1_f) + "," + format_rouge(c.row.rouge2_f) + "," +
                      format_rouge(c.row.rougeL_f) + "\n";
        }
        std::filesystem::create_directories(cfg.output_dir);
        write_text_file(cfg.output_dir + "/report.csv", report);
        write_text_file(cfg.output_dir + "/samples.csv", samples_csv);
        write_text_file(cfg.output_dir + "/config.resolved", app.config_to_str(true, false));
        out << "report " << cfg.output_dir << "/report.csv\n";
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace egad
