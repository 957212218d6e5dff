#pragma once

#include "cohort/criteria.hpp"
#include "cohort/iels.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cohort::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitParse = 3;

/// Flat `key = value` configuration; `#` starts a comment line. Throws Config on a line
/// without '=' or a repeated key.
std::map<std::string, std::string> parse_key_values(std::string_view content, std::string_view origin = "<config>");

struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path output;
    std::filesystem::path resources;
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> models;
    std::filesystem::path gold;  // score only
    std::filesystem::path lexicon;  // lexicon expand only
    std::optional<CriterionId> criterion;
    int workers = 1;
    CriteriaConfig criteria;
    iels::IelsConfig iels;
};

/// Applies config-file entries to `config`; throws Config on unknown keys or bad values.
void apply_settings(const std::map<std::string, std::string>& settings, RunConfig& config);

int cmd_run(const RunConfig& config, std::ostream& out);
int cmd_score(const RunConfig& config, std::ostream& out);
int cmd_lexicon_build(const RunConfig& config, std::ostream& out);
int cmd_lexicon_expand(const RunConfig& config, std::ostream& out);
int cmd_debug_preprocess(const RunConfig& config, std::ostream& out);
int cmd_models_train(const RunConfig& config, std::ostream& out);

/// Full command-line entry point; argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cohort::cli
