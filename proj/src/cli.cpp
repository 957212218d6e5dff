#include "cohort/cli.hpp"

#include "cohort/embeddings.hpp"
#include "cohort/error.hpp"
#include "cohort/scoring.hpp"
#include "cohort/strings.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

namespace cohort::cli {

namespace fs = std::filesystem;

std::map<std::string, std::string> parse_key_values(std::string_view content, std::string_view origin) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(content)};
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::Config, fmt::format("{}:{}: expected key = value", origin, n));
        }
        std::string key(trim(t.substr(0, eq)));
        if (key.empty()) throw Error(ErrorKind::Config, fmt::format("{}:{}: empty key", origin, n));
        if (!out.emplace(key, std::string(trim(t.substr(eq + 1)))).second) {
            throw Error(ErrorKind::Config, fmt::format("{}:{}: '{}' set twice", origin, n, key));
        }
    }
    return out;
}

namespace {

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw Error(ErrorKind::Config, fmt::format("{}: '{}' is not a number", key, value));
    }
    return v;
}

int to_int(const std::string& key, const std::string& value) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw Error(ErrorKind::Config, fmt::format("{}: '{}' is not an integer", key, value));
    }
    return v;
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (std::string_view part : split(value, ',')) {
        const std::string p(trim(part));
        if (!p.empty()) out.push_back(to_double(key, p));
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
    out << content;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedHeader:
        case ErrorKind::EmptyRecord:
        case ErrorKind::UnknownCriterionTag:
        case ErrorKind::Io:
        case ErrorKind::TruncatedFile:
            return kExitParse;
        default:
            return kExitConfig;
    }
}

void require_dir(const fs::path& path, std::string_view what) {
    if (path.empty()) throw Error(ErrorKind::Config, fmt::format("no {} given", what));
    if (!fs::is_directory(path)) throw Error(ErrorKind::Config, fmt::format("{} '{}' is not a directory", what, path.string()));
}

void require_file(const fs::path& path, std::string_view what) {
    if (path.empty()) throw Error(ErrorKind::Config, fmt::format("no {} given", what));
    if (!fs::exists(path)) throw Error(ErrorKind::Config, fmt::format("{} '{}' does not exist", what, path.string()));
}

std::string lexicon_base(CriterionId id) {
    std::string base = to_lower(display_name(id));
    std::replace(base.begin(), base.end(), '-', '_');
    return base;
}

Engine make_engine(const RunConfig& config) {
    require_dir(config.resources, "resource directory");
    CriterionModels models;
    if (config.models) {
        require_dir(*config.models, "model directory");
        models = load_models(*config.models);
    }
    return Engine(load_criteria_resources(config.resources), std::move(models), config.criteria);
}

std::vector<PatientRecord> read_inputs(const fs::path& input) {
    if (input.empty()) throw Error(ErrorKind::Config, "no input given");
    if (fs::is_directory(input)) return read_record_directory(input);
    if (!fs::exists(input)) throw Error(ErrorKind::Config, fmt::format("input '{}' does not exist", input.string()));
    return {read_record_file(input)};
}

}  // namespace

void apply_settings(const std::map<std::string, std::string>& settings, RunConfig& c) {
    for (const auto& [key, value] : settings) {
        CriteriaConfig& k = c.criteria;
        iels::IelsConfig& i = c.iels;
        if (key == "input") c.input = value;
        else if (key == "output") c.output = value;
        else if (key == "resources") c.resources = value;
        else if (key == "embeddings") c.embeddings = fs::path(value);
        else if (key == "models") c.models = fs::path(value);
        else if (key == "gold") c.gold = value;
        else if (key == "workers") c.workers = to_int(key, value);
        else if (key == "criterion") {
            c.criterion = parse_criterion(value);
            if (!c.criterion) throw Error(ErrorKind::Config, fmt::format("unknown criterion '{}'", value));
        }
        else if (key == "hba1c_low") k.hba1c_low = to_double(key, value);
        else if (key == "hba1c_high") k.hba1c_high = to_double(key, value);
        else if (key == "mi_window_months") k.mi_window_months = to_int(key, value);
        else if (key == "keto_window_months") k.keto_window_months = to_int(key, value);
        else if (key == "dietsupp_window_months") k.dietsupp_window_months = to_int(key, value);
        else if (key == "creat_male_low") k.creat_norm_male.low = to_double(key, value);
        else if (key == "creat_male_high") k.creat_norm_male.high = to_double(key, value);
        else if (key == "creat_female_low") k.creat_norm_female.low = to_double(key, value);
        else if (key == "creat_female_high") k.creat_norm_female.high = to_double(key, value);
        else if (key == "creat_margin") k.creat_margin = to_double(key, value);
        else if (key == "makes_decisions_threshold") k.makes_decisions_threshold = to_double(key, value);
        else if (key == "advanced_cad_min") k.advanced_cad_min = to_int(key, value);
        else if (key == "iels.max_ngram_order") i.max_ngram_order = to_int(key, value);
        else if (key == "iels.folds") i.folds = to_int(key, value);
        else if (key == "iels.coef_threshold") i.coef_threshold = to_double(key, value);
        else if (key == "iels.sim_threshold") i.sim_threshold = to_double(key, value);
        else if (key == "iels.expansion_iterations") i.expansion_iterations = to_int(key, value);
        else if (key == "iels.min_doc_freq") i.min_doc_freq = to_int(key, value);
        else if (key == "iels.grid") i.grid = to_list(key, value);
        else if (key == "iels.k_max") i.neighbors_k_max = static_cast<std::size_t>(to_int(key, value));
        else if (key == "iels.l2") i.l2 = to_double(key, value);
        else if (key == "iels.seed") i.seed = static_cast<std::uint64_t>(to_int(key, value));
        else throw Error(ErrorKind::Config, fmt::format("unknown configuration key '{}'", key));
    }
}

// ---------------------------------------------------------------------------

int cmd_run(const RunConfig& config, std::ostream& out) {
    if (config.workers < 1) throw Error(ErrorKind::Config, "workers must be >= 1");
    if (config.output.empty()) throw Error(ErrorKind::Config, "no output directory given");
    const Engine engine = make_engine(config);
    const auto records = read_inputs(config.input);
    fs::create_directories(config.output);

    std::vector<DecisionMap> decisions(records.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            try {
                decisions[i] = engine.evaluate(records[i]);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const auto n = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(config.workers), std::max<std::size_t>(records.size(), 1)));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::size_t met = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const PatientRecord& r = records[i];
        write_file(config.output / (r.patient_id + ".xml"), write_decisions(r, decisions[i]));
        write_file(config.output / (r.patient_id + ".evidence.json"), write_evidence_json(r, decisions[i]));
        for (const auto& [id, d] : decisions[i]) met += d.label == Label::Met ? 1 : 0;
    }
    out << fmt::format("processed {} patients: {} met / {} not met decisions\n", records.size(), met,
                       records.size() * kCriterionCount - met);
    return kExitOk;
}

int cmd_score(const RunConfig& config, std::ostream& out) {
    require_dir(config.gold, "gold directory");
    require_dir(config.input, "system directory");
    const auto gold = read_record_directory(config.gold);
    const auto system = read_record_directory(config.input);
    const MetricsReport report = aggregate(count_records(gold, system));
    out << format_report(report);
    const fs::path json_path = config.output.empty() ? config.input / "score.json" : config.output;
    write_file(json_path, report_to_json(report).dump(2) + "\n");
    return kExitOk;
}

int cmd_lexicon_build(const RunConfig& config, std::ostream& out) {
    if (!config.criterion) throw Error(ErrorKind::Config, "lexicon build needs --criterion");
    if (config.output.empty()) throw Error(ErrorKind::Config, "no output directory given");
    config.iels.validate();
    const auto records = read_inputs(config.input);
    std::optional<EmbeddingTable> table;
    if (config.embeddings) {
        require_file(*config.embeddings, "embedding file");
        table = load_embeddings(*config.embeddings, guess_embedding_format(*config.embeddings));
    } else {
        spdlog::warn("no embeddings configured; writing internal terms only");
    }
    const auto result = iels::curate_lexicon(records, *config.criterion, table ? &*table : nullptr, config.iels);
    fs::create_directories(config.output);
    const std::string base = lexicon_base(*config.criterion);
    for (const Lexicon& l : iels::to_lexicons(result, base, SemanticType::Problem)) {
        save_lexicon(l, config.output / (l.name() + ".lex"));
        out << fmt::format("{}: {} terms\n", l.name(), l.size());
    }
    std::string report = fmt::format("# seed={} features={} chosen_threshold={:.17g}\nthreshold\tmean_f\n", result.seed,
                                     result.feature_count, result.chosen_threshold);
    for (const auto& [t, f] : result.cv_scores) report += fmt::format("{:.17g}\t{:.6f}\n", t, f);
    write_file(config.output / (base + "_cv.tsv"), report);
    out << fmt::format("chosen threshold {:.6g}; {} internal, {} expanded terms\n", result.chosen_threshold,
                       result.internal_terms.size(), result.expanded_terms.size());
    return kExitOk;
}

int cmd_lexicon_expand(const RunConfig& config, std::ostream& out) {
    require_file(config.lexicon, "lexicon");
    if (!config.embeddings) throw Error(ErrorKind::Config, "lexicon expand needs --embeddings");
    require_file(*config.embeddings, "embedding file");
    if (config.output.empty()) throw Error(ErrorKind::Config, "no output file given");
    config.iels.validate();
    const Lexicon seed = load_lexicon(config.lexicon);
    const EmbeddingTable table = load_embeddings(*config.embeddings, guess_embedding_format(*config.embeddings));
    Lexicon expanded(seed.name() + "_expanded", seed.semantic_type(), seed.polarity(), Provenance::IelsExpanded);
    for (LexTerm& t : iels::expand_terms(seed.terms(), table, config.iels)) expanded.add(std::move(t));
    save_lexicon(expanded, config.output);
    out << fmt::format("{}: {} expanded terms\n", expanded.name(), expanded.size());
    return kExitOk;
}

int cmd_debug_preprocess(const RunConfig& config, std::ostream& out) {
    require_file(config.input, "input file");
    const Engine engine = make_engine(config);
    const PatientRecord record = read_record_file(config.input);
    const auto notes = engine.annotate(record);
    nlohmann::ordered_json doc;
    doc["patient_id"] = record.patient_id;
    doc["present_day"] = record.present_day.iso();
    for (const AnnotatedNote& n : notes) {
        nlohmann::ordered_json note;
        note["index"] = n.note_index;
        note["record_date"] = n.record_date.iso();
        auto& tokens = note["tokens"] = nlohmann::ordered_json::array();
        for (const Token& t : n.tokens) tokens.push_back({t.text, t.start, t.end});
        auto& sentences = note["sentences"] = nlohmann::ordered_json::array();
        for (const Sentence& s : n.sentences) {
            sentences.push_back({{"span", {s.span.begin, s.span.end}}, {"section", to_string(n.section_of_sentence(&s - n.sentences.data()))},
                                 {"text", n.text.substr(s.span.begin, s.span.size())}});
        }
        auto& sections = note["sections"] = nlohmann::ordered_json::array();
        for (const Section& s : n.sections) {
            sections.push_back({{"kind", to_string(s.kind)}, {"header", s.header}, {"sentences", {s.sentence_begin, s.sentence_end}}});
        }
        auto& entities = note["entities"] = nlohmann::ordered_json::array();
        for (const Entity& e : n.entities) {
            nlohmann::ordered_json j = {{"surface", e.surface},   {"span", {e.span.begin, e.span.end}},
                                        {"type", to_string(e.semantic_type)}, {"lexicon", e.source_lexicon},
                                        {"assertion", to_string(e.assertion)}, {"section", to_string(e.section)}};
            if (e.dose) j["dose"] = {{"value", e.dose->value}, {"unit", e.dose->unit}, {"frequency", e.dose->frequency}};
            entities.push_back(std::move(j));
        }
        auto& timexes = note["timexes"] = nlohmann::ordered_json::array();
        for (const Timex& t : n.timexes) {
            const auto when = resolve(t, n.record_date);
            timexes.push_back({{"text", t.raw}, {"kind", to_string(t.kind)}, {"span", {t.span.begin, t.span.end}},
                               {"resolved", when ? nlohmann::ordered_json(when->iso()) : nlohmann::ordered_json()}});
        }
        auto& labs = note["lab_results"] = nlohmann::ordered_json::array();
        for (const LabResult& l : n.lab_results) {
            nlohmann::ordered_json j = {{"test", l.test_name}, {"value", l.value}, {"unit", l.unit},
                                        {"specimen", to_string(l.specimen)}, {"span", {l.span.begin, l.span.end}}};
            if (l.reference_range) j["reference_range"] = {l.reference_range->low, l.reference_range->high};
            labs.push_back(std::move(j));
        }
        auto& cues = note["ketone_cues"] = nlohmann::ordered_json::array();
        for (const KetoneCue& k : n.ketone_cues) cues.push_back({k.span.begin, k.span.end});
        doc["notes"].push_back(std::move(note));
    }
    const std::string text = doc.dump(2) + "\n";
    if (config.output.empty()) out << text;
    else write_file(config.output, text);
    return kExitOk;
}

int cmd_models_train(const RunConfig& config, std::ostream& out) {
    if (config.output.empty()) throw Error(ErrorKind::Config, "no output directory given");
    RunConfig plain = config;
    plain.models.reset();  // features do not depend on models
    const Engine engine = make_engine(plain);
    const auto records = read_inputs(config.input);
    if (std::none_of(records.begin(), records.end(), [](const PatientRecord& r) { return r.has_gold(); })) {
        throw Error(ErrorKind::NoGoldLabels, "model training needs gold-labeled records");
    }
    const CriterionModels models = train_models(engine, records);
    save_models(models, config.output);
    out << fmt::format("trained: makes_decisions={} major_diabetes={} asp_for_mi={} hba1c={}\n", models.makes_decisions.has_value(),
                       models.major_diabetes.has_value(), models.asp_for_mi.has_value(), models.hba1c.has_value());
    return kExitOk;
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cohort selection over clinical notes", "cohortsel"};
    app.require_subcommand(1);

    std::string config_file, input, output, resources, embeddings, models, criterion, gold, lexicon;
    int workers = 0;
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_file, "key = value configuration file");
        cmd->add_option("--input", input, "patient file or directory");
        cmd->add_option("--output", output, "output directory or file");
        cmd->add_option("--resources", resources, "resource directory (lexicons, triggers, sections)");
        cmd->add_option("--embeddings", embeddings, "word-embedding file (.bin = binary word2vec)");
        cmd->add_option("--models", models, "directory of trained model JSON files");
        cmd->add_option("--workers", workers, "worker threads");
        cmd->add_option("--criterion", criterion, "criterion name, e.g. MAJOR-DIABETES");
    };
    auto* run = app.add_subcommand("run", "evaluate all criteria for every patient");
    common(run);
    auto* score = app.add_subcommand("score", "score system output against gold annotations");
    common(score);
    score->add_option("--gold", gold, "directory of gold-annotated patient files");
    auto* lex = app.add_subcommand("lexicon", "lexicon curation");
    lex->require_subcommand(1);
    auto* build = lex->add_subcommand("build", "derive a lexicon from labeled records");
    common(build);
    auto* expand = lex->add_subcommand("expand", "add embedding neighbors to a lexicon");
    common(expand);
    expand->add_option("--lexicon", lexicon, "seed lexicon file");
    auto* debug = app.add_subcommand("debug", "inspection tools");
    debug->require_subcommand(1);
    auto* preprocess = debug->add_subcommand("preprocess", "dump preprocessing layers as JSON");
    common(preprocess);
    auto* mdl = app.add_subcommand("models", "classifier models");
    mdl->require_subcommand(1);
    auto* train = mdl->add_subcommand("train", "train the classifier-backed criteria from labeled records");
    common(train);

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, x;
        const int code = app.exit(e, o, x);
        out << o.str();
        err << x.str();
        return code == 0 ? kExitOk : kExitConfig;
    }
    if (verbose) spdlog::set_level(spdlog::level::debug);

    try {
        RunConfig config;
        if (!config_file.empty()) {
            require_file(config_file, "config file");
            apply_settings(parse_key_values(read_file(config_file), config_file), config);
        }
        if (!input.empty()) config.input = input;
        if (!output.empty()) config.output = output;
        if (!resources.empty()) config.resources = resources;
        if (!embeddings.empty()) config.embeddings = fs::path(embeddings);
        if (!models.empty()) config.models = fs::path(models);
        if (!gold.empty()) config.gold = gold;
        if (!lexicon.empty()) config.lexicon = lexicon;
        if (workers != 0) config.workers = workers;
        if (!criterion.empty()) {
            config.criterion = parse_criterion(criterion);
            if (!config.criterion) throw Error(ErrorKind::Config, fmt::format("unknown criterion '{}'", criterion));
        }
        if (run->parsed()) return cmd_run(config, out);
        if (score->parsed()) return cmd_score(config, out);
        if (build->parsed()) return cmd_lexicon_build(config, out);
        if (expand->parsed()) return cmd_lexicon_expand(config, out);
        if (preprocess->parsed()) return cmd_debug_preprocess(config, out);
        if (train->parsed()) return cmd_models_train(config, out);
    } catch (const Error& e) {
        err << fmt::format("error [{}]: {}\n", to_string(e.kind()), e.what());
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << fmt::format("error [Io]: {}\n", e.what());
        return kExitParse;
    } catch (const std::exception& e) {
        err << fmt::format("error: {}\n", e.what());
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace cohort::cli
