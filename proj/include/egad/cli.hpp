#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "egad/beam.hpp"
#include "egad/keywords.hpp"
#include "egad/model.hpp"
#include "egad/trainer.hpp"

namespace egad {

// Everything a run needs, resolved from config file and flags. The resolved
// state is written next to the artifacts so a run can be reproduced exactly.
struct ExperimentConfig {
    std::string train_corpus, eval_corpus, background, output_dir;
    ModelConfig model;
    TrainConfig train;
    GenerationConfig generation;
    KeywordConfig keywords;
    FewShotPlan plan;
    std::uint64_t seed = 0;
    int vocab_size = 5000;
};

// Entry point behind the binary: parses argv-style arguments (without the
// program name) and executes one subcommand among train, generate, evaluate,
// keywords, pattern, fewshot. Returns the process exit status: 0 on success,
// 1 on runtime failures such as missing files, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Vocabulary persistence for the train/generate round trip: one word per
// line in id order, specials included.
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

}  // namespace egad
