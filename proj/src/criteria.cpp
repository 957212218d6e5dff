#include "cohort/criteria.hpp"

#include "cohort/error.hpp"
#include "cohort/strings.hpp"
#include "cohort/temporal.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace cohort {

void CriteriaConfig::validate() const {
    auto ordered = [](const ReferenceRange& r) { return r.low <= r.high; };
    if (!(hba1c_low <= hba1c_high)) throw Error(ErrorKind::Config, "hba1c range is not ordered");
    if (!ordered(creat_norm_male) || !ordered(creat_norm_female)) throw Error(ErrorKind::Config, "creatinine range is not ordered");
    if (mi_window_months <= 0 || keto_window_months <= 0 || dietsupp_window_months <= 0) {
        throw Error(ErrorKind::Config, "temporal windows must be positive");
    }
    if (advanced_cad_min < 1 || advanced_cad_min > 4) throw Error(ErrorKind::Config, "advanced_cad_min must be in [1,4]");
    if (makes_decisions_threshold < 0.0 || makes_decisions_threshold > 1.0) {
        throw Error(ErrorKind::Config, "makes_decisions_threshold must be in [0,1]");
    }
}

const std::vector<std::string>& required_lexicons() {
    static const std::vector<std::string> names = {
        lex::kAbusedDrugs, lex::kDrugAbuseProblems, lex::kAlcoholAbuse,  lex::kAlcoholCessation, lex::kLanguages,
        lex::kInterpreter, lex::kAbdominal,         lex::kDmSkin,        lex::kDmKidney,         lex::kDmNeuropathy,
        lex::kDmNephropathy, lex::kDmRetinopathy,   lex::kIschemia,      lex::kMiTerms,          lex::kAngina,
        lex::kCadMeds,     lex::kCadProblems,       lex::kMiSymptoms,    lex::kAspirin,          lex::kSupplements,
        lex::kSupplementExclusions, lex::kHemoglobin, lex::kKetoacidosis, lex::kCreatininePhrases,
    };
    return names;
}

const Lexicon* CriteriaResources::find(std::string_view name) const {
    for (const Lexicon& l : lexicons) {
        if (l.name() == name) return &l;
    }
    return nullptr;
}

const Lexicon& CriteriaResources::at(std::string_view name) const {
    if (const Lexicon* l = find(name)) return *l;
    throw Error(ErrorKind::MissingLexicon, fmt::format("lexicon '{}' is not loaded", name));
}

CriteriaResources load_criteria_resources(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw Error(ErrorKind::Config, fmt::format("resource directory '{}' does not exist", dir.string()));
    }
    CriteriaResources res;
    res.text = load_text_resources(dir);
    std::vector<std::filesystem::path> files;
    const auto lexdir = dir / "lexicons";
    if (std::filesystem::is_directory(lexdir)) {
        for (const auto& entry : std::filesystem::directory_iterator(lexdir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".lex") files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        Lexicon l = load_lexicon(f);
        if (res.find(l.name())) throw Error(ErrorKind::BadHeader, fmt::format("{}: lexicon '{}' defined twice", f.string(), l.name()));
        res.lexicons.push_back(std::move(l));
    }
    for (const std::string& name : required_lexicons()) res.at(name);
    return res;
}

// ---------------------------------------------------------------------------
// Models

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read '{}'", path.string()));
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadModel, fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
    out << doc.dump(2) << '\n';
}

void check_width(std::size_t got, std::size_t want, std::string_view what) {
    if (got != want) throw Error(ErrorKind::BadModel, fmt::format("{} model has {} features, expected {}", what, got, want));
}

}  // namespace

CriterionModels load_models(const std::filesystem::path& dir) {
    CriterionModels m;
    if (auto p = dir / "makes_decisions.json"; std::filesystem::exists(p)) {
        m.makes_decisions = ml::naive_bayes_from_json(read_json(p));
        check_width(m.makes_decisions->feature_log_prob[1].size(), makes_decisions_feature_names().size(), "makes_decisions");
    }
    if (auto p = dir / "major_diabetes.json"; std::filesystem::exists(p)) {
        m.major_diabetes = ml::linear_model_from_json(read_json(p));
        check_width(m.major_diabetes->weights.size(), major_diabetes_feature_names().size(), "major_diabetes");
    }
    if (auto p = dir / "asp_for_mi.json"; std::filesystem::exists(p)) {
        m.asp_for_mi = ml::decision_tree_from_json(read_json(p));
        for (const auto& node : m.asp_for_mi->nodes) {
            if (node.feature >= static_cast<int>(asp_for_mi_feature_names().size())) {
                throw Error(ErrorKind::BadModel, "asp_for_mi tree splits on an unknown feature");
            }
        }
    }
    if (auto p = dir / "hba1c.json"; std::filesystem::exists(p)) {
        m.hba1c = ml::linear_model_from_json(read_json(p));
        check_width(m.hba1c->weights.size(), hba1c_feature_names().size(), "hba1c");
    }
    return m;
}

void save_models(const CriterionModels& models, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    if (models.makes_decisions) write_json(ml::to_json(*models.makes_decisions), dir / "makes_decisions.json");
    if (models.major_diabetes) write_json(ml::to_json(*models.major_diabetes), dir / "major_diabetes.json");
    if (models.asp_for_mi) write_json(ml::to_json(*models.asp_for_mi), dir / "asp_for_mi.json");
    if (models.hba1c) write_json(ml::to_json(*models.hba1c), dir / "hba1c.json");
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

bool from(const Entity& e, std::string_view lexicon) { return e.source_lexicon == lexicon; }

bool asserted(const Entity& e, std::initializer_list<Assertion> allowed) {
    return std::find(allowed.begin(), allowed.end(), e.assertion) != allowed.end();
}

EvidenceItem evidence(const AnnotatedNote& note, const Entity& e, std::string_view why = {}) {
    std::string reason = fmt::format("{}: '{}' {}", e.source_lexicon, e.surface, to_string(e.assertion));
    if (!why.empty()) reason += fmt::format(" ({})", why);
    return {static_cast<int>(note.note_index), e.span, std::move(reason)};
}

CriterionDecision decision(CriterionId id, bool met) {
    CriterionDecision d;
    d.criterion = id;
    d.label = met ? Label::Met : Label::NotMet;
    return d;
}

template <class F>
void for_each(const PatientView& p, std::string_view lexicon, F&& f) {
    for (const AnnotatedNote& note : p.notes) {
        for (const Entity& e : note.entities) {
            if (from(e, lexicon)) f(note, e);
        }
    }
}

MentionTime mention_time(const AnnotatedNote& note, std::size_t sentence, const Span& span, Assertion assertion) {
    MentionTime t;
    t.assertion = assertion;
    t.section = note.section_of_sentence(sentence);
    t.note_date = note.record_date;
    if (const Timex* tx = note.nearest_timex(sentence, span)) {
        if (tx->kind == TimexKind::VagueHistory) t.vague = true;
        else t.event_date = resolve(*tx, note.record_date);
    }
    return t;
}

std::string_view sentence_text(const AnnotatedNote& note, std::size_t sentence) {
    const Span& s = note.sentences[sentence].span;
    return std::string_view(note.text).substr(s.begin, s.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Rule criteria

CriterionDecision eval_drug_abuse(const PatientView& p) {
    auto d = decision(CriterionId::DrugAbuse, false);
    for (const char* name : {lex::kAbusedDrugs, lex::kDrugAbuseProblems}) {
        for_each(p, name, [&](const AnnotatedNote& note, const Entity& e) {
            if (!asserted(e, {Assertion::Present, Assertion::Historical})) return;
            if (e.dose) return;  // dosed, so prescribed
            d.label = Label::Met;
            d.evidence.push_back(evidence(note, e));
        });
    }
    return d;
}

CriterionDecision eval_alcohol_abuse(const PatientView& p) {
    static const std::regex family_concern(
        R"(\b(wife|husband|partner|spouse|family|daughter|son|mother|father|sister|brother|children|girlfriend|boyfriend)\b[^.\n]{0,40}\b(concerned|worried|worries|concern)\b[^.\n]{0,30}\b(drinking|alcohol|etoh)\b)",
        std::regex::icase);
    struct Event {
        std::size_t note;
        std::size_t pos;
        bool cessation;
        EvidenceItem item;
    };
    std::vector<Event> events;
    for_each(p, lex::kAlcoholAbuse, [&](const AnnotatedNote& note, const Entity& e) {
        if (e.assertion != Assertion::Present) return;
        // "AA" counts only as the uppercase abbreviation.
        if (token_key(e.surface) == "aa" && e.surface != "AA") return;
        events.push_back({note.note_index, e.span.begin, false, evidence(note, e)});
    });
    for (const AnnotatedNote& note : p.notes) {
        for (auto it = std::sregex_iterator(note.text.begin(), note.text.end(), family_concern); it != std::sregex_iterator(); ++it) {
            const auto begin = static_cast<std::size_t>(it->position());
            const Span span{begin, begin + static_cast<std::size_t>(it->length())};
            events.push_back({note.note_index, begin, false, {static_cast<int>(note.note_index), span, "family concern about drinking"}});
        }
    }
    for_each(p, lex::kAlcoholCessation, [&](const AnnotatedNote& note, const Entity& e) {
        if (!asserted(e, {Assertion::Present, Assertion::Historical})) return;
        events.push_back({note.note_index, e.span.begin, true, evidence(note, e, "cessation")});
    });
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return std::tie(a.note, a.pos, a.cessation) < std::tie(b.note, b.pos, b.cessation);
    });
    const bool any_current = std::any_of(events.begin(), events.end(), [](const Event& e) { return !e.cessation; });
    auto d = decision(CriterionId::AlcoholAbuse, any_current && !events.back().cessation);
    for (Event& e : events) {
        if (d.label == Label::Met ? !e.cessation : e.cessation) d.evidence.push_back(std::move(e.item));
    }
    return d;
}

CriterionDecision eval_english(const PatientView& p) {
    static const std::regex spoken(R"((speak\w*|spoke|spoken|language|languages)\b)", std::regex::icase);
    auto d = decision(CriterionId::English, true);
    for_each(p, lex::kLanguages, [&](const AnnotatedNote& note, const Entity& e) {
        if (!asserted(e, {Assertion::Present, Assertion::Historical})) return;
        const std::string sentence(sentence_text(note, e.sentence));
        if (!std::regex_search(sentence, spoken)) return;
        d.label = Label::NotMet;
        d.evidence.push_back(evidence(note, e, "spoken language"));
    });
    for_each(p, lex::kInterpreter, [&](const AnnotatedNote& note, const Entity& e) {
        if (!asserted(e, {Assertion::Present, Assertion::Historical})) return;
        d.label = Label::NotMet;
        d.evidence.push_back(evidence(note, e));
    });
    return d;
}

std::array<int, 3> makes_decisions_pattern_counts(std::string_view text) {
    static const std::regex dementia("dementia", std::regex::icase);
    static const std::regex retard("retard", std::regex::icase);
    static const std::regex mental("altered mental|mental stat", std::regex::icase);
    const std::string s(text);
    auto count = [&](const std::regex& re, auto&& keep) {
        int n = 0;
        for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
            if (keep(static_cast<std::size_t>(it->position()))) ++n;
        }
        return n;
    };
    auto always = [](std::size_t) { return true; };
    // Letters before the match, skipping spaces and hyphens, so "psycho-motor" counts too.
    auto not_psychomotor = [&](std::size_t pos) {
        constexpr std::string_view kWord = "rotomohcysp";  // reversed
        std::size_t matched = 0;
        for (std::size_t i = pos; i > 0 && matched < kWord.size(); --i) {
            const char c = s[i - 1];
            if (is_space(c) || c == '-') continue;
            if (std::tolower(static_cast<unsigned char>(c)) != kWord[matched]) return true;
            ++matched;
        }
        return matched < kWord.size();
    };
    return {count(dementia, always), count(retard, not_psychomotor), count(mental, always)};
}

std::vector<std::string> makes_decisions_feature_names() { return {"dementia", "retard_not_psychomotor", "altered_mental"}; }

std::vector<double> makes_decisions_features(const PatientView& p) {
    std::vector<double> f(3, 0.0);
    for (const AnnotatedNote& note : p.notes) {
        const auto c = makes_decisions_pattern_counts(note.text);
        for (std::size_t i = 0; i < 3; ++i) f[i] += c[i];
    }
    return f;
}

CriterionDecision eval_makes_decisions(const PatientView& p, const ml::NaiveBayesModel* model, const CriteriaConfig& config) {
    const auto f = makes_decisions_features(p);
    CriterionDecision d;
    d.criterion = CriterionId::MakesDecisions;
    if (model) {
        const double met = ml::nb_posterior(*model, f)[1];
        d.score = met;
        d.label = met >= config.makes_decisions_threshold ? Label::Met : Label::NotMet;
    } else {
        d.fallback = true;
        d.label = f[0] == 0 && f[1] == 0 && f[2] == 0 ? Label::Met : Label::NotMet;
    }
    const auto names = makes_decisions_feature_names();
    for (std::size_t i = 0; i < 3; ++i) {
        if (f[i] > 0) d.evidence.push_back({-1, {}, fmt::format("{} count {}", names[i], f[i])});
    }
    return d;
}

CriterionDecision eval_abdominal(const PatientView& p) {
    auto d = decision(CriterionId::Abdominal, false);
    for_each(p, lex::kAbdominal, [&](const AnnotatedNote& note, const Entity& e) {
        if (e.section != SectionKind::PastMedicalHistory && e.section != SectionKind::HistoryPresentIllness) return;
        if (!asserted(e, {Assertion::Present, Assertion::Historical})) return;
        d.label = Label::Met;
        d.evidence.push_back(evidence(note, e, to_string(e.section)));
    });
    return d;
}

namespace {

const std::array<const char*, 5> kDiabetesLexicons = {lex::kDmSkin, lex::kDmKidney, lex::kDmNeuropathy, lex::kDmNephropathy,
                                                       lex::kDmRetinopathy};

bool counts_for_diabetes(const Entity& e) {
    return e.section != SectionKind::FamilyHistory && asserted(e, {Assertion::Present, Assertion::Historical});
}

}  // namespace

std::vector<std::string> major_diabetes_feature_names() { return {kDiabetesLexicons.begin(), kDiabetesLexicons.end()}; }

std::vector<double> major_diabetes_features(const PatientView& p) {
    std::vector<double> f(kDiabetesLexicons.size(), 0.0);
    for (std::size_t i = 0; i < kDiabetesLexicons.size(); ++i) {
        for_each(p, kDiabetesLexicons[i], [&](const AnnotatedNote&, const Entity& e) {
            if (counts_for_diabetes(e)) f[i] += 1.0;
        });
    }
    return f;
}

CriterionDecision eval_major_diabetes(const PatientView& p, const ml::LinearModel* model) {
    const auto f = major_diabetes_features(p);
    CriterionDecision d;
    d.criterion = CriterionId::MajorDiabetes;
    if (model) {
        d.score = model->decision(f);
        d.label = ml::predict(*model, f) == 1 ? Label::Met : Label::NotMet;
    } else {
        d.fallback = true;
        d.label = std::any_of(f.begin(), f.end(), [](double c) { return c >= 1.0; }) ? Label::Met : Label::NotMet;
    }
    for (const char* name : kDiabetesLexicons) {
        for_each(p, name, [&](const AnnotatedNote& note, const Entity& e) {
            if (counts_for_diabetes(e)) d.evidence.push_back(evidence(note, e));
        });
    }
    return d;
}

CriterionDecision eval_advanced_cad(const PatientView& p, const CriteriaConfig& config) {
    CriterionDecision d;
    d.criterion = CriterionId::AdvancedCad;
    auto current_or_past = [](const Entity& e) {
        return e.section != SectionKind::FamilyHistory && asserted(e, {Assertion::Present, Assertion::Historical});
    };

    bool ischemia = false;
    for_each(p, lex::kIschemia, [&](const AnnotatedNote& note, const Entity& e) {
        if (!current_or_past(e)) return;
        ischemia = true;
        d.evidence.push_back(evidence(note, e, "ischemia"));
    });

    bool mi = false;
    for_each(p, lex::kMiTerms, [&](const AnnotatedNote& note, const Entity& e) {
        if (!current_or_past(e)) return;
        mi = true;
        d.evidence.push_back(evidence(note, e, "mi"));
    });

    bool angina = false;
    if (!p.notes.empty()) {
        // Notes are in record-date order, so the last one is the most recent.
        const AnnotatedNote& latest = p.notes.back();
        const Entity* last_present = nullptr;
        for (const Entity& e : latest.entities) {
            if (!from(e, lex::kAngina) || e.section == SectionKind::FamilyHistory) continue;
            if (e.assertion == Assertion::Present) last_present = &e;
            else if (e.assertion == Assertion::Absent) last_present = nullptr;  // negated later in the note
        }
        if (last_present) {
            angina = true;
            d.evidence.push_back(evidence(latest, *last_present, "angina in latest note"));
        }
    }

    std::set<std::string> meds;
    std::vector<EvidenceItem> med_evidence;
    for_each(p, lex::kCadMeds, [&](const AnnotatedNote& note, const Entity& e) {
        if (e.assertion != Assertion::Present || e.section == SectionKind::Allergies) return;
        meds.insert(token_key(e.surface));
        med_evidence.push_back(evidence(note, e, "cad medication"));
    });
    bool cad_problem = false;
    for_each(p, lex::kCadProblems, [&](const AnnotatedNote& note, const Entity& e) {
        if (!current_or_past(e)) return;
        if (!cad_problem) med_evidence.push_back(evidence(note, e, "cad diagnosis"));
        cad_problem = true;
    });
    const bool medications = meds.size() >= 2 && cad_problem;
    if (medications) std::move(med_evidence.begin(), med_evidence.end(), std::back_inserter(d.evidence));

    d.trace = {{"ischemia", ischemia}, {"mi", mi}, {"angina_recent", angina}, {"cad_meds", medications}};
    const int count = static_cast<int>(ischemia) + static_cast<int>(mi) + static_cast<int>(angina) + static_cast<int>(medications);
    d.label = count >= config.advanced_cad_min ? Label::Met : Label::NotMet;
    return d;
}

namespace {

CriterionDecision windowed(const PatientView& p, CriterionId id, std::string_view lexicon, int months) {
    auto d = decision(id, false);
    const TemporalWindow window{months, id};
    for_each(p, lexicon, [&](const AnnotatedNote& note, const Entity& e) {
        if (!within_window(mention_time(note, e.sentence, e.span, e.assertion), p.record.present_day, window)) return;
        d.label = Label::Met;
        d.evidence.push_back(evidence(note, e, fmt::format("within {} months", months)));
    });
    return d;
}

}  // namespace

CriterionDecision eval_mi_6mos(const PatientView& p, const CriteriaConfig& config) {
    return windowed(p, CriterionId::Mi6mos, lex::kMiTerms, config.mi_window_months);
}

CriterionDecision eval_keto_1yr(const PatientView& p, const CriteriaConfig& config) {
    auto d = windowed(p, CriterionId::Keto1yr, lex::kKetoacidosis, config.keto_window_months);
    const TemporalWindow window{config.keto_window_months, CriterionId::Keto1yr};
    for (const AnnotatedNote& note : p.notes) {
        for (const KetoneCue& cue : note.ketone_cues) {
            if (!within_window(mention_time(note, cue.sentence, cue.span, Assertion::Present), p.record.present_day, window)) continue;
            d.label = Label::Met;
            d.evidence.push_back({static_cast<int>(note.note_index), cue.span, "positive urine ketones"});
        }
    }
    return d;
}

namespace {

// "Calcium 9.2" or "Magnesium: 2.0" in a lab listing is a measurement, not a supplement.
bool looks_like_lab(const AnnotatedNote& note, const Entity& e) {
    if (e.section == SectionKind::Labs) return true;
    if (e.dose || e.token_end >= note.tokens.size()) return false;
    const std::string& next = note.tokens[e.token_end].text;
    return next == ":" || next == "=" || is_digit(next.front());
}

}  // namespace

CriterionDecision eval_dietsupp_2mos(const PatientView& p, const CriteriaConfig& config) {
    auto d = decision(CriterionId::Dietsupp2mos, false);
    const TemporalWindow window{config.dietsupp_window_months, CriterionId::Dietsupp2mos};
    for (const AnnotatedNote& note : p.notes) {
        std::vector<Span> excluded;
        for (const Entity& e : note.entities) {
            if (from(e, lex::kSupplementExclusions)) excluded.push_back(e.span);
        }
        for (const Entity& e : note.entities) {
            if (!from(e, lex::kSupplements)) continue;
            if (e.semantic_type != SemanticType::Drug && e.semantic_type != SemanticType::Treatment) continue;
            if (looks_like_lab(note, e)) continue;
            const bool overlaps = std::any_of(excluded.begin(), excluded.end(), [&](const Span& x) {
                return x.begin < e.span.end && e.span.begin < x.end;
            });
            if (overlaps) continue;
            if (!within_window(mention_time(note, e.sentence, e.span, e.assertion), p.record.present_day, window)) continue;
            d.label = Label::Met;
            d.evidence.push_back(evidence(note, e, fmt::format("within {} months", config.dietsupp_window_months)));
        }
    }
    return d;
}

std::vector<std::string> asp_for_mi_feature_names() { return {"aspirin", "aspirin_dose", "mi_diagnosis", "mi_symptoms"}; }

std::vector<double> asp_for_mi_features(const PatientView& p) {
    std::vector<double> f(4, 0.0);
    for_each(p, lex::kAspirin, [&](const AnnotatedNote&, const Entity& e) {
        if (e.assertion != Assertion::Present || e.section == SectionKind::Allergies) return;
        f[0] = 1.0;
        if (e.dose) f[1] = std::max(f[1], e.dose->value);
    });
    for_each(p, lex::kMiTerms, [&](const AnnotatedNote&, const Entity& e) {
        if (e.section != SectionKind::FamilyHistory && asserted(e, {Assertion::Present, Assertion::Historical})) f[2] = 1.0;
    });
    for_each(p, lex::kMiSymptoms, [&](const AnnotatedNote&, const Entity& e) {
        if (asserted(e, {Assertion::Present, Assertion::Historical})) f[3] += 1.0;
    });
    return f;
}

CriterionDecision eval_asp_for_mi(const PatientView& p, const ml::DecisionTreeModel* model) {
    const auto f = asp_for_mi_features(p);
    CriterionDecision d;
    d.criterion = CriterionId::AspForMi;
    if (model) {
        d.label = ml::predict(*model, f) == 1 ? Label::Met : Label::NotMet;
    } else {
        d.fallback = true;
        d.label = f[0] > 0 && (f[2] > 0 || f[3] >= 1) ? Label::Met : Label::NotMet;
    }
    for_each(p, lex::kAspirin, [&](const AnnotatedNote& note, const Entity& e) {
        if (e.assertion == Assertion::Present && e.section != SectionKind::Allergies) d.evidence.push_back(evidence(note, e));
    });
    for (const char* name : {lex::kMiTerms, lex::kMiSymptoms}) {
        for_each(p, name, [&](const AnnotatedNote& note, const Entity& e) {
            if (e.section != SectionKind::FamilyHistory && asserted(e, {Assertion::Present, Assertion::Historical})) {
                d.evidence.push_back(evidence(note, e));
            }
        });
    }
    return d;
}

namespace {

constexpr std::string_view kHba1cTest = "hba1c";
constexpr std::string_view kCreatinineTest = "creatinine";

}  // namespace

std::vector<std::string> hba1c_feature_names() { return {"keyword", "has_value", "below_range", "in_range", "above_range"}; }

std::vector<double> hba1c_features(const PatientView& p, const CriteriaConfig& config) {
    std::vector<double> f(5, 0.0);
    for_each(p, lex::kHemoglobin, [&](const AnnotatedNote&, const Entity&) { f[0] = 1.0; });
    for (const AnnotatedNote& note : p.notes) {
        for (const LabResult& lab : note.lab_results) {
            if (lab.test_name != kHba1cTest) continue;
            f[0] = 1.0;
            f[1] = 1.0;
            if (lab.value < config.hba1c_low) f[2] = 1.0;
            else if (lab.value > config.hba1c_high) f[4] = 1.0;
            else f[3] = 1.0;
        }
    }
    return f;
}

CriterionDecision eval_hba1c(const PatientView& p, const ml::LinearModel* model, const CriteriaConfig& config) {
    const auto f = hba1c_features(p, config);
    CriterionDecision d;
    d.criterion = CriterionId::Hba1c;
    if (model) {
        d.score = model->decision(f);
        d.label = ml::predict(*model, f) == 1 ? Label::Met : Label::NotMet;
    } else {
        d.fallback = true;
        d.label = f[3] > 0 ? Label::Met : Label::NotMet;
    }
    for (const AnnotatedNote& note : p.notes) {
        for (const LabResult& lab : note.lab_results) {
            if (lab.test_name != kHba1cTest) continue;
            const bool in = lab.value >= config.hba1c_low && lab.value <= config.hba1c_high;
            d.evidence.push_back({static_cast<int>(note.note_index), lab.span,
                                  fmt::format("hba1c {} {}", lab.value, in ? "in range" : "out of range")});
        }
    }
    return d;
}

std::optional<Sex> infer_sex(const PatientView& p) {
    static const std::set<std::string> female = {"she", "her", "hers", "herself", "woman", "female", "mrs", "ms"};
    static const std::set<std::string> male = {"he", "him", "his", "himself", "man", "male", "mr"};
    int f = 0, m = 0;
    for (const AnnotatedNote& note : p.notes) {
        for (const Token& t : note.tokens) {
            const std::string w = to_lower(t.text);
            if (female.contains(w)) ++f;
            else if (male.contains(w)) ++m;
        }
    }
    if (f == m) return std::nullopt;
    return f > m ? Sex::Female : Sex::Male;
}

CriterionDecision eval_creatinine(const PatientView& p, const CriteriaConfig& config) {
    auto d = decision(CriterionId::Creatinine, false);
    const auto sex = infer_sex(p);
    const ReferenceRange general = sex == Sex::Female ? config.creat_norm_female : config.creat_norm_male;
    for (const AnnotatedNote& note : p.notes) {
        std::optional<ReferenceRange> note_range;
        for (const LabResult& lab : note.lab_results) {
            if (lab.test_name == kCreatinineTest && lab.specimen != Specimen::Urine && lab.reference_range) {
                note_range = lab.reference_range;
                break;
            }
        }
        for (const LabResult& lab : note.lab_results) {
            if (lab.test_name != kCreatinineTest || lab.specimen == Specimen::Urine) continue;
            const auto range = lab.reference_range ? lab.reference_range : note_range;
            const double limit = range ? range->high : general.high + config.creat_margin;
            if (lab.value <= limit) continue;
            d.label = Label::Met;
            d.evidence.push_back({static_cast<int>(note.note_index), lab.span,
                                  fmt::format("creatinine {} > {} ({})", lab.value, limit, range ? "note range" : "general limit + margin")});
        }
    }
    for_each(p, lex::kCreatininePhrases, [&](const AnnotatedNote& note, const Entity& e) {
        if (!asserted(e, {Assertion::Present, Assertion::Historical})) return;
        d.label = Label::Met;
        d.evidence.push_back(evidence(note, e));
    });
    return d;
}

DecisionMap evaluate_all(const PatientView& p, const CriterionModels& models, const CriteriaConfig& config) {
    auto opt = [](const auto& o) { return o ? &*o : nullptr; };
    DecisionMap out;
    for (CriterionDecision d : {
             eval_abdominal(p),
             eval_advanced_cad(p, config),
             eval_alcohol_abuse(p),
             eval_asp_for_mi(p, opt(models.asp_for_mi)),
             eval_creatinine(p, config),
             eval_dietsupp_2mos(p, config),
             eval_drug_abuse(p),
             eval_english(p),
             eval_hba1c(p, opt(models.hba1c), config),
             eval_keto_1yr(p, config),
             eval_major_diabetes(p, opt(models.major_diabetes)),
             eval_makes_decisions(p, opt(models.makes_decisions), config),
             eval_mi_6mos(p, config),
         }) {
        const CriterionId id = d.criterion;
        out.emplace(id, std::move(d));
    }
    return out;
}

// ---------------------------------------------------------------------------

Engine::Engine(CriteriaResources resources, CriterionModels models, CriteriaConfig config)
    : config_(config), models_(std::move(models)), annotator_(std::move(resources.text), resources.lexicons) {
    config_.validate();
    for (const std::string& name : required_lexicons()) resources.at(name);
}

std::vector<AnnotatedNote> Engine::annotate(const PatientRecord& record) const {
    std::vector<AnnotatedNote> notes;
    notes.reserve(record.notes.size());
    for (std::size_t i = 0; i < record.notes.size(); ++i) {
        notes.push_back(annotator_.annotate(record.notes[i].text, record.notes[i].record_date, i));
    }
    return notes;
}

DecisionMap Engine::evaluate(const PatientRecord& record) const {
    const auto notes = annotate(record);
    return evaluate_all(PatientView{record, notes}, models_, config_);
}

CriterionModels train_models(const Engine& engine, const std::vector<PatientRecord>& records) {
    struct Data {
        ml::Matrix x;
        ml::Labels y;
    };
    std::map<CriterionId, Data> data;
    for (const PatientRecord& r : records) {
        const auto notes = engine.annotate(r);
        const PatientView p{r, notes};
        auto add = [&](CriterionId id, std::vector<double> f) {
            const auto g = r.gold.find(id);
            if (g == r.gold.end()) return;
            data[id].x.push_back(std::move(f));
            data[id].y.push_back(g->second == Label::Met ? 1 : 0);
        };
        add(CriterionId::MakesDecisions, makes_decisions_features(p));
        add(CriterionId::MajorDiabetes, major_diabetes_features(p));
        add(CriterionId::AspForMi, asp_for_mi_features(p));
        add(CriterionId::Hba1c, hba1c_features(p, engine.config()));
    }
    CriterionModels models;
    auto attempt = [&](CriterionId id, auto&& train) {
        const auto it = data.find(id);
        if (it == data.end() || it->second.x.empty()) {
            spdlog::warn("{}: no gold labels, model not trained", display_name(id));
            return;
        }
        try {
            train(it->second.x, it->second.y);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SingleClassInput) throw;
            spdlog::warn("{}: {}; model not trained", display_name(id), e.what());
        }
    };
    attempt(CriterionId::MakesDecisions, [&](const ml::Matrix& x, const ml::Labels& y) {
        models.makes_decisions = ml::train_naive_bayes(x, y);
        models.makes_decisions->feature_names = makes_decisions_feature_names();
    });
    attempt(CriterionId::MajorDiabetes, [&](const ml::Matrix& x, const ml::Labels& y) {
        models.major_diabetes = ml::train_linear_svm(x, y);
        models.major_diabetes->feature_names = major_diabetes_feature_names();
    });
    attempt(CriterionId::AspForMi, [&](const ml::Matrix& x, const ml::Labels& y) {
        models.asp_for_mi = ml::train_decision_tree(x, y);
        models.asp_for_mi->feature_names = asp_for_mi_feature_names();
    });
    attempt(CriterionId::Hba1c, [&](const ml::Matrix& x, const ml::Labels& y) {
        models.hba1c = ml::train_linear_svm(x, y);
        models.hba1c->feature_names = hba1c_feature_names();
    });
    return models;
}

}  // namespace cohort
