#pragma once

#include "cohort/lexicon.hpp"
#include "cohort/mlcore.hpp"
#include "cohort/record_io.hpp"
#include "cohort/textproc.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cohort {

struct CriteriaConfig {
    double hba1c_low = 6.5;  // inclusive
    double hba1c_high = 9.5;  // inclusive
    int mi_window_months = 6;
    int keto_window_months = 12;
    int dietsupp_window_months = 2;
    ReferenceRange creat_norm_male{0.6, 1.2};
    ReferenceRange creat_norm_female{0.5, 1.1};
    double creat_margin = 0.5;
    /// Makes-Decisions model path: Met iff P(met) >= threshold.
    double makes_decisions_threshold = 0.9;
    int advanced_cad_min = 2;

    /// Throws Config when ranges are unordered or windows are not positive.
    void validate() const;
};

/// Lexicon names the evaluators look up.
namespace lex {
inline constexpr const char* kAbusedDrugs = "abused_drugs";
inline constexpr const char* kDrugAbuseProblems = "drug_abuse_problems";
inline constexpr const char* kAlcoholAbuse = "alcohol_abuse";
inline constexpr const char* kAlcoholCessation = "alcohol_cessation";
inline constexpr const char* kLanguages = "languages";
inline constexpr const char* kInterpreter = "interpreter";
inline constexpr const char* kAbdominal = "abdominal";
inline constexpr const char* kDmSkin = "dm_skin";
inline constexpr const char* kDmKidney = "dm_kidney";
inline constexpr const char* kDmNeuropathy = "dm_neuropathy";
inline constexpr const char* kDmNephropathy = "dm_nephropathy";
inline constexpr const char* kDmRetinopathy = "dm_retinopathy";
inline constexpr const char* kIschemia = "ischemia";
inline constexpr const char* kMiTerms = "mi_terms";
inline constexpr const char* kAngina = "angina";
inline constexpr const char* kCadMeds = "cad_meds";
inline constexpr const char* kCadProblems = "cad_problems";
inline constexpr const char* kMiSymptoms = "mi_symptoms";
inline constexpr const char* kAspirin = "aspirin";
inline constexpr const char* kSupplements = "supplements";
inline constexpr const char* kSupplementExclusions = "supplement_exclusions";
inline constexpr const char* kHemoglobin = "hemoglobin";
inline constexpr const char* kKetoacidosis = "ketoacidosis";
inline constexpr const char* kCreatininePhrases = "creatinine_phrases";
}  // namespace lex

/// Every lexicon name some evaluator requires.
const std::vector<std::string>& required_lexicons();

struct CriteriaResources {
    TextResources text;
    std::vector<Lexicon> lexicons;

    const Lexicon* find(std::string_view name) const;
    /// Throws MissingLexicon.
    const Lexicon& at(std::string_view name) const;
};

/// Loads text resources plus every `lexicons/*.lex` under `dir`, in file-name order.
/// Throws MissingLexicon when a required lexicon is absent.
CriteriaResources load_criteria_resources(const std::filesystem::path& dir);

/// Optional trained models for the four classifier-backed criteria.
struct CriterionModels {
    std::optional<ml::NaiveBayesModel> makes_decisions;
    std::optional<ml::LinearModel> major_diabetes;
    std::optional<ml::DecisionTreeModel> asp_for_mi;
    std::optional<ml::LinearModel> hba1c;
};

/// Reads `makes_decisions.json`, `major_diabetes.json`, `asp_for_mi.json`, `hba1c.json`
/// when present. Throws BadModel on a feature-count mismatch.
CriterionModels load_models(const std::filesystem::path& dir);
void save_models(const CriterionModels& models, const std::filesystem::path& dir);

/// Everything an evaluator sees for one patient.
struct PatientView {
    const PatientRecord& record;
    const std::vector<AnnotatedNote>& notes;
};

// Feature extractors for the classifier-backed criteria.
std::vector<std::string> makes_decisions_feature_names();
std::vector<double> makes_decisions_features(const PatientView& p);
std::vector<std::string> major_diabetes_feature_names();
std::vector<double> major_diabetes_features(const PatientView& p);
std::vector<std::string> asp_for_mi_feature_names();
std::vector<double> asp_for_mi_features(const PatientView& p);
std::vector<std::string> hba1c_feature_names();
std::vector<double> hba1c_features(const PatientView& p, const CriteriaConfig& config);

/// Counts of `dementia`, `retard` not preceded by `psychomotor`, and `altered mental|mental stat`.
std::array<int, 3> makes_decisions_pattern_counts(std::string_view text);

/// Sex cue from pronoun majority over all notes; nullopt when tied.
enum class Sex : std::uint8_t { Male, Female };
std::optional<Sex> infer_sex(const PatientView& p);

CriterionDecision eval_drug_abuse(const PatientView& p);
CriterionDecision eval_alcohol_abuse(const PatientView& p);
CriterionDecision eval_english(const PatientView& p);
CriterionDecision eval_makes_decisions(const PatientView& p, const ml::NaiveBayesModel* model, const CriteriaConfig& config);
CriterionDecision eval_abdominal(const PatientView& p);
CriterionDecision eval_major_diabetes(const PatientView& p, const ml::LinearModel* model);
CriterionDecision eval_advanced_cad(const PatientView& p, const CriteriaConfig& config);
CriterionDecision eval_mi_6mos(const PatientView& p, const CriteriaConfig& config);
CriterionDecision eval_keto_1yr(const PatientView& p, const CriteriaConfig& config);
CriterionDecision eval_dietsupp_2mos(const PatientView& p, const CriteriaConfig& config);
CriterionDecision eval_asp_for_mi(const PatientView& p, const ml::DecisionTreeModel* model);
CriterionDecision eval_hba1c(const PatientView& p, const ml::LinearModel* model, const CriteriaConfig& config);
CriterionDecision eval_creatinine(const PatientView& p, const CriteriaConfig& config);

DecisionMap evaluate_all(const PatientView& p, const CriterionModels& models, const CriteriaConfig& config);

/// Annotator plus models and configuration; immutable after construction and shareable
/// across threads.
class Engine {
public:
    Engine(CriteriaResources resources, CriterionModels models = {}, CriteriaConfig config = {});

    std::vector<AnnotatedNote> annotate(const PatientRecord& record) const;
    DecisionMap evaluate(const PatientRecord& record) const;

    const CriteriaConfig& config() const { return config_; }
    const CriterionModels& models() const { return models_; }
    const Annotator& annotator() const { return annotator_; }

private:
    CriteriaConfig config_;
    CriterionModels models_;
    Annotator annotator_;
};

/// Trains the four classifier models from gold-labeled records (criteria whose gold labels
/// hold a single class are skipped with a warning).
CriterionModels train_models(const Engine& engine, const std::vector<PatientRecord>& records);

}  // namespace cohort
