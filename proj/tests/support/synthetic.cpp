#include "synthetic.hpp"

#include <fmt/format.h>

#include <random>
#include <set>

namespace cohort::synth {

namespace {

const std::string kSeparator(100, '*');

struct Pronouns {
    std::string he, him, his, title, noun;
};

Pronouns pronouns(Sex sex) {
    if (sex == Sex::Female) return {"She", "her", "her", "Ms.", "woman"};
    return {"He", "him", "his", "Mr.", "man"};
}

bool mi_documented(const PatientSpec& s) { return s.mi == Mi::Pmh || s.mi == Mi::Recent || s.mi == Mi::OldDated; }

bool takes_aspirin(const PatientSpec& s) { return s.aspirin == Aspirin::Daily81 || s.aspirin == Aspirin::AsaWithSymptoms; }

}  // namespace

std::map<CriterionId, Label> gold_labels(const PatientSpec& s) {
    auto label = [](bool met) { return met ? Label::Met : Label::NotMet; };
    const int meds = (s.cad_meds == CadMeds::Two ? 2 : s.cad_meds == CadMeds::One ? 1 : 0) + (takes_aspirin(s) ? 1 : 0);
    const int cad = int(s.ischemia) + int(mi_documented(s)) + int(s.angina == Angina::Latest) +
                    int(meds >= 2 && s.cad_diagnosis);
    std::map<CriterionId, Label> g;
    g[CriterionId::Abdominal] = label(s.abdominal == Abd::PmhAppendectomy || s.abdominal == Abd::HpiObstruction);
    g[CriterionId::AdvancedCad] = label(cad >= 2);
    g[CriterionId::AlcoholAbuse] =
        label(s.alcohol == Alcohol::Current || s.alcohol == Alcohol::FamilyConcern || s.alcohol == Alcohol::AttendsAa);
    g[CriterionId::AspForMi] = label(takes_aspirin(s) && (mi_documented(s) || s.aspirin == Aspirin::AsaWithSymptoms));
    g[CriterionId::Creatinine] = label(s.creatinine == Creat::MaleHigh || s.creatinine == Creat::NoteRangeExceeded ||
                                       s.creatinine == Creat::FemaleAbove || s.creatinine == Creat::Phrase);
    g[CriterionId::Dietsupp2mos] = label(s.supplement == Supp::FishOilLatest || s.supplement == Supp::Multivitamin);
    g[CriterionId::DrugAbuse] = label(s.drug == Drug::HistoryCocaine || s.drug == Drug::Ivdu);
    g[CriterionId::English] = label(s.english == English::Default || s.english == English::NoInterpreter);
    g[CriterionId::Hba1c] = label(s.hba1c == Hba1c::InRange || s.hba1c == Hba1c::LowerBound);
    g[CriterionId::Keto1yr] = label(s.keto == Keto::DkaLatest || s.keto == Keto::UrineKetones);
    g[CriterionId::MajorDiabetes] = label(s.diabetes == Diabetes::Retinopathy || s.diabetes == Diabetes::NeuropathyPmh ||
                                          s.diabetes == Diabetes::Amputation);
    g[CriterionId::MakesDecisions] = label(s.mental == Mental::None || s.mental == Mental::Psychomotor);
    g[CriterionId::Mi6mos] = label(s.mi == Mi::Recent);
    return g;
}

std::vector<std::pair<Date, std::string>> render_notes(const PatientSpec& s) {
    const Pronouns p = pronouns(s.sex);
    const Date d0 = s.present_day.minus_months(30);
    const Date d1 = s.present_day.minus_months(9);
    const Date d2 = s.present_day;

    // Oldest note.
    std::string n0 = fmt::format("Record date: {}\n\nHISTORY OF PRESENT ILLNESS:\n", d0.iso());
    n0 += fmt::format("{} Doe is a {} with type 2 diabetes seen for a new patient visit.\n", p.title, p.noun);
    if (s.keto == Keto::DkaOld) n0 += "Recently admitted with DKA.\n";
    n0 += fmt::format("{} checks blood sugars at home.\n\nPLAN:\nReturn to clinic in six months.\n", p.he);

    // Middle note.
    std::string n1 = fmt::format("Record date: {}\n\nHISTORY OF PRESENT ILLNESS:\n", d1.iso());
    n1 += fmt::format("{} returns for routine follow up.\n", p.he);
    if (s.angina == Angina::OlderNote) n1 += fmt::format("{} describes angina on exertion.\n", p.he);
    n1 += "\nMEDICATIONS:\nMetformin 500 mg bid\n";
    if (s.supplement == Supp::OldNote) n1 += "Fish oil 1000 mg daily\n";
    n1 += "\nPLAN:\nContinue current regimen.\n";

    // Latest note.
    std::string hpi = fmt::format("{} Doe is a {} with type 2 diabetes who returns for follow up.\n", p.title, p.noun);
    switch (s.abdominal) {
        case Abd::HpiObstruction: hpi += "Recent small bowel obstruction managed conservatively.\n"; break;
        case Abd::Denied: hpi += "Denies prior abdominal surgery.\n"; break;
        default: break;
    }
    switch (s.mi) {
        case Mi::Recent: hpi += fmt::format("{} was admitted with an NSTEMI 2 weeks ago.\n", p.he); break;
        case Mi::OldDated: {
            const Date when = s.present_day.minus_months(14);
            hpi += fmt::format("{} had an MI in {}/{:02}.\n", p.he, when.month(), when.year() % 100);
            break;
        }
        case Mi::Denied: hpi += fmt::format("{} denies any history of MI.\n", p.he); break;
        default: break;
    }
    if (s.ischemia) hpi += "Recent stress test showed reversible ischemia.\n";
    if (s.angina == Angina::Latest || s.angina == Angina::LaterNegated) hpi += fmt::format("{} describes angina on exertion.\n", p.he);
    if (s.aspirin == Aspirin::AsaWithSymptoms) hpi += fmt::format("{} notes chest pain radiating to arm.\n", p.he);
    switch (s.english) {
        case English::SpanishSpeaking: hpi += fmt::format("{} is Spanish speaking only.\n", p.he); break;
        case English::Interpreter: hpi += "Interpreter present for the visit.\n"; break;
        case English::NoInterpreter: hpi += "No interpreter needed.\n"; break;
        default: break;
    }
    if (s.keto == Keto::DkaLatest) hpi += fmt::format("{} was treated for DKA last week.\n", p.he);
    if (s.diabetes == Diabetes::Retinopathy) hpi += "Eye exam shows diabetic retinopathy.\n";
    if (s.creatinine == Creat::Phrase) hpi += "Labs notable for elevated creatinine.\n";
    if (s.mental == Mental::AlteredMental) hpi += "Brought in by family for altered mental status.\n";
    if (s.mental == Mental::Psychomotor) hpi += "Exam notable for psychomotor retardation.\n";

    std::string pmh = "Diabetes mellitus type 2\nHypertension\n";
    if (s.abdominal == Abd::PmhAppendectomy) pmh += "s/p appendectomy\n";
    if (s.mi == Mi::Pmh) pmh += "MI\n";
    if (s.cad_diagnosis) pmh += "Coronary artery disease\n";
    if (s.diabetes == Diabetes::NeuropathyPmh) pmh += "Peripheral neuropathy\n";
    if (s.diabetes == Diabetes::Amputation) pmh += "Right toe amputation\n";
    if (s.mental == Mental::Dementia) pmh += "Dementia\n";

    std::string meds = "Metformin 500 mg bid\n";
    if (s.cad_meds != CadMeds::None) meds += "Metoprolol 25 mg bid\n";
    if (s.cad_meds == CadMeds::Two) meds += "Lisinopril 10 mg daily\n";
    if (s.aspirin == Aspirin::Daily81) meds += "Aspirin 81 mg daily\n";
    if (s.aspirin == Aspirin::AsaWithSymptoms) meds += "ASA 325 mg daily\n";
    if (s.drug == Drug::DosedOpioid) meds += "Oxycodone 5 mg prn\n";
    if (s.supplement == Supp::FishOilLatest) meds += "Fish oil 1000 mg daily\n";
    if (s.supplement == Supp::VitaminDOnly) meds += "Vitamin D 1000 IU daily\n";
    if (s.supplement == Supp::Multivitamin) meds += "Multivitamin 1 tab daily\n";

    const std::string allergies = s.aspirin == Aspirin::Allergy ? "Aspirin (hives)\n" : "No known drug allergies.\n";

    std::string social = "Lives with family.\n";
    switch (s.alcohol) {
        case Alcohol::Current: social += "Ongoing alcohol abuse.\n"; break;
        case Alcohol::FamilyConcern:
            social += fmt::format("{} is concerned about {} drinking.\n", s.sex == Sex::Female ? "Husband" : "Wife", p.his);
            break;
        case Alcohol::AttendsAa: social += fmt::format("{} attends AA meetings.\n", p.he); break;
        case Alcohol::QuitLongAgo: social += "Quit drinking 10 years ago.\n"; break;
        case Alcohol::Denied: social += "Denies alcohol abuse.\n"; break;
        default: break;
    }
    switch (s.drug) {
        case Drug::HistoryCocaine: social += "History of cocaine use.\n"; break;
        case Drug::Denied: social += "Denies drug abuse.\n"; break;
        case Drug::Ivdu: social += "Active IVDU.\n"; break;
        default: break;
    }

    std::string family = "Father with hypertension.\n";
    if (s.diabetes == Diabetes::FamilyNephropathy) family += "Mother with diabetic nephropathy.\n";

    std::string labs = "Glucose 142\n";
    switch (s.hba1c) {
        case Hba1c::InRange: labs += "HbA1c 7.2\n"; break;
        case Hba1c::Above: labs += "HbA1c 9.6\n"; break;
        case Hba1c::LowerBound: labs += "HbA1c 6.5\n"; break;
        case Hba1c::Below: labs += "HbA1c 5.9\n"; break;
        default: break;
    }
    switch (s.creatinine) {
        case Creat::MaleHigh: labs += "Creatinine 2.5\n"; break;
        case Creat::NoteRangeExceeded: labs += "Creatinine 1.5 (0.5-1.4)\n"; break;
        case Creat::Urine: labs += "Urine creatinine 150\n"; break;
        case Creat::FemaleBelowMargin: labs += "Creatinine 1.5\n"; break;
        case Creat::FemaleAbove: labs += "Creatinine 1.7\n"; break;
        default: labs += "Creatinine 0.9\n"; break;
    }
    if (s.keto == Keto::UrineKetones) labs += "Urine ketones: positive\n";

    std::string plan = "Continue current regimen.\n";
    if (s.abdominal == Abd::OtherSection) plan += "Discussed elective cholecystectomy.\n";
    if (s.angina == Angina::LaterNegated) plan += "No further angina after medication change.\n";

    std::string n2 = fmt::format("Record date: {}\n\n", d2.iso());
    n2 += "HISTORY OF PRESENT ILLNESS:\n" + hpi + "\n";
    n2 += "PAST MEDICAL HISTORY:\n" + pmh + "\n";
    n2 += "MEDICATIONS:\n" + meds + "\n";
    n2 += "ALLERGIES:\n" + allergies + "\n";
    n2 += "SOCIAL HISTORY:\n" + social + "\n";
    n2 += "FAMILY HISTORY:\n" + family + "\n";
    n2 += "LABS:\n" + labs + "\n";
    n2 += "PLAN:\n" + plan;

    return {{d0, n0}, {d1, n1}, {d2, n2}};
}

std::string render_patient_file(const PatientSpec& s) {
    std::string body = "\n";
    const auto notes = render_notes(s);
    for (std::size_t i = 0; i < notes.size(); ++i) {
        if (i > 0) body += "\n" + kSeparator + "\n\n";
        body += notes[i].second;
    }
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\" ?>\n<PatientMatching>\n<TEXT><![CDATA[";
    out += body;
    out += "]]></TEXT>\n<TAGS>\n";
    for (const auto& [id, label] : gold_labels(s)) out += fmt::format("<{} met=\"{}\" />\n", tag_name(id), to_string(label));
    out += "</TAGS>\n</PatientMatching>\n";
    return out;
}

std::string record_file(const PatientRecord& record) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\" ?>\n<PatientMatching>\n<TEXT><![CDATA[";
    out += record.body;
    out += "]]></TEXT>\n<TAGS>\n";
    for (const auto& [id, label] : record.gold) out += fmt::format("<{} met=\"{}\" />\n", tag_name(id), to_string(label));
    out += "</TAGS>\n</PatientMatching>\n";
    return out;
}

std::vector<PatientSpec> corpus_specs() {
    std::vector<PatientSpec> specs;
    for (int i = 0; i < 20; ++i) {
        PatientSpec s;
        s.id = fmt::format("{}", 301 + i);
        s.present_day = Date{2088 + i % 4, static_cast<unsigned>(1 + (i * 5) % 12), 15};
        s.abdominal = static_cast<Abd>(i % 5);
        s.mi = static_cast<Mi>((i + 1) % 5);
        s.ischemia = i % 3 == 0;
        s.angina = static_cast<Angina>((i + 2) % 4);
        s.cad_meds = static_cast<CadMeds>((i + 1) % 3);
        s.cad_diagnosis = i % 2 == 0;
        s.aspirin = static_cast<Aspirin>((i + 3) % 4);
        s.alcohol = static_cast<Alcohol>(i % 6);
        s.drug = static_cast<Drug>((i + 2) % 5);
        s.english = static_cast<English>((i + 1) % 4);
        s.hba1c = static_cast<Hba1c>((i + 3) % 5);
        s.creatinine = static_cast<Creat>(i % 7);
        s.keto = static_cast<Keto>((i + 1) % 4);
        s.supplement = static_cast<Supp>((i + 2) % 5);
        s.diabetes = static_cast<Diabetes>((i + 4) % 5);
        s.mental = static_cast<Mental>((i + 3) % 4);
        if (s.creatinine == Creat::FemaleAbove || s.creatinine == Creat::FemaleBelowMargin) s.sex = Sex::Female;
        else if (s.creatinine == Creat::MaleHigh) s.sex = Sex::Male;
        else s.sex = i % 2 == 0 ? Sex::Male : Sex::Female;
        specs.push_back(std::move(s));
    }
    return specs;
}

std::map<std::string, std::string> generate_corpus() {
    std::map<std::string, std::string> files;
    for (const PatientSpec& s : corpus_specs()) files[s.id + ".xml"] = render_patient_file(s);
    return files;
}

std::map<std::string, std::pair<int, int>> scenario_coverage(const std::vector<PatientSpec>& specs) {
    std::map<std::string, std::set<int>> seen;
    for (const PatientSpec& s : specs) {
        seen["sex"].insert(int(s.sex));
        seen["abdominal"].insert(int(s.abdominal));
        seen["mi"].insert(int(s.mi));
        seen["ischemia"].insert(int(s.ischemia));
        seen["angina"].insert(int(s.angina));
        seen["cad_meds"].insert(int(s.cad_meds));
        seen["cad_diagnosis"].insert(int(s.cad_diagnosis));
        seen["aspirin"].insert(int(s.aspirin));
        seen["alcohol"].insert(int(s.alcohol));
        seen["drug"].insert(int(s.drug));
        seen["english"].insert(int(s.english));
        seen["hba1c"].insert(int(s.hba1c));
        seen["creatinine"].insert(int(s.creatinine));
        seen["keto"].insert(int(s.keto));
        seen["supplement"].insert(int(s.supplement));
        seen["diabetes"].insert(int(s.diabetes));
        seen["mental"].insert(int(s.mental));
    }
    const std::map<std::string, int> sizes = {
        {"sex", 2},      {"abdominal", 5}, {"mi", 5},    {"ischemia", 2},   {"angina", 4},     {"cad_meds", 3},
        {"cad_diagnosis", 2}, {"aspirin", 4}, {"alcohol", 6}, {"drug", 5}, {"english", 4}, {"hba1c", 5},
        {"creatinine", 7}, {"keto", 4},   {"supplement", 5}, {"diabetes", 5}, {"mental", 4},
    };
    std::map<std::string, std::pair<int, int>> out;
    for (const auto& [axis, n] : sizes) out[axis] = {static_cast<int>(seen[axis].size()), n};
    return out;
}

// ---------------------------------------------------------------------------

PlantedCorpus planted_corpus(std::size_t records, std::size_t noise_words, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    PlantedCorpus corpus;
    corpus.planted = {"xyloquent", "jaxworth quill", "hyw cwoj yexq", "wyx quh jehc xoy", "chyq wex"};

    // Noise words use letters that never occur in the planted terms' spelling pattern.
    const std::string consonants = "bdfgklmnprstvz";
    const std::string vowels = "aeiou";
    std::set<std::string> vocab;
    while (vocab.size() < noise_words) {
        std::string w;
        const std::size_t syllables = 2 + pick(2);
        for (std::size_t s = 0; s < syllables; ++s) {
            w.push_back(consonants[pick(consonants.size())]);
            w.push_back(vowels[pick(vowels.size())]);
        }
        vocab.insert(w);
    }
    corpus.noise.assign(vocab.begin(), vocab.end());

    const Date present{2090, 6, 1};
    for (std::size_t r = 0; r < records; ++r) {
        const bool met = r % 2 == 0;
        std::vector<std::vector<std::vector<std::string>>> notes(3);  // note -> sentence -> words
        for (auto& note : notes) {
            note.resize(4);
            for (auto& sentence : note) {
                const std::size_t len = 6 + pick(5);
                for (std::size_t k = 0; k < len; ++k) sentence.push_back(corpus.noise[pick(corpus.noise.size())]);
            }
        }
        if (met) {
            for (const std::string& term : corpus.planted) {
                auto& sentence = notes[pick(notes.size())][pick(4)];
                sentence.insert(sentence.begin() + static_cast<std::ptrdiff_t>(pick(sentence.size() + 1)), term);
            }
        }
        std::vector<ClinicalNote> out;
        std::string body;
        for (std::size_t n = 0; n < notes.size(); ++n) {
            const Date date = present.minus_months(static_cast<int>(12 * (notes.size() - 1 - n)));
            std::string text = fmt::format("Record date: {}\n", date.iso());
            for (const auto& sentence : notes[n]) {
                std::string line;
                for (const std::string& w : sentence) line += (line.empty() ? "" : " ") + w;
                text += line + ".\n";
            }
            if (!body.empty()) body += "\n" + kSeparator + "\n";
            out.push_back(ClinicalNote{date, text, body.size()});
            body += text;
        }
        corpus.records.push_back(make_record(fmt::format("p{:03}", r), body, std::move(out),
                                             {{corpus.criterion, met ? Label::Met : Label::NotMet}}));
    }
    return corpus;
}

}  // namespace cohort::synth
