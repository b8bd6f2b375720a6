// Writes the bundled surrogate datasets under data/ together with MANIFEST.
// The surrogates reuse the public datasets' column names and value ranges so
// the study configs apply unchanged; their values are simulated.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fairprep/error.hpp"
#include "fairprep/io.hpp"
#include "fairprep/rng.hpp"

using fairprep::Rng;

namespace {

struct Frame {
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> rows;

    std::string csv() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& fields) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (i) out.push_back(',');
                out += fairprep::quote_csv_field(fields[i]);
            }
            out.push_back('\n');
        };
        line(names);
        for (const auto& r : rows) line(r);
        return out;
    }
};

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s == "-0" || s.starts_with("-0.") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string integer(double v) { return std::to_string(static_cast<long long>(std::llround(v))); }

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int poisson(Rng& rng, double lambda) {
    // Knuth's product method; the rates used here stay small.
    const double limit = std::exp(-std::min(lambda, 40.0));
    int k = 0;
    double p = rng.uniform();
    while (p > limit) {
        ++k;
        p *= rng.uniform();
    }
    return k;
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items, const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (u < weights[i]) return items[i];
        u -= weights[i];
    }
    return items.back();
}

// Recidivism records. Reoffending depends on propensity, age and sex only;
// arrest-history counts are inflated for African-American defendants, which
// is the pattern the COMPAS study audits.
Frame compas(Rng rng) {
    Frame f;
    f.names = {"sex", "age", "age_cat", "race", "juv_fel_count", "juv_misd_count", "juv_other_count",
               "priors_count", "days_b_screening_arrest", "c_charge_degree", "c_charge_desc",
               "decile_score", "score_text", "v_decile_score", "is_recid"};
    const std::vector<std::string> races = {"African-American", "Caucasian", "Hispanic",
                                            "Other", "Asian", "Native American"};
    const std::vector<double> race_w = {0.51, 0.34, 0.09, 0.05, 0.005, 0.005};
    const std::vector<std::string> felonies = {"Felony Battery (Dom Strang)", "Grand Theft in the 3rd Degree",
                                               "Possession of Cocaine", "Aggrav Battery w/Deadly Weapon",
                                               "Burglary Unoccupied Dwelling"};
    const std::vector<std::string> misdemeanors = {"Battery", "Driving While License Revoked",
                                                   "Possess Cannabis/20 Grams Or Less", "Petit Theft",
                                                   "Resist/Obstruct W/O Violence"};
    for (int i = 0; i < 3000; ++i) {
        const auto& race = pick(rng, races, race_w);
        const double aa = race == "African-American" ? 1.0 : 0.0;
        const bool male = rng.bernoulli(0.81);
        const double age = std::min(80.0, 18.0 + std::floor(-std::log(1 - rng.uniform()) * 16.0));
        const double propensity = rng.normal();
        const double young = (30.0 - age) / 10.0;

        const int juv_fel = poisson(rng, std::exp(-3.0 + 0.5 * propensity + 1.1 * aa + 0.3 * young));
        const int juv_misd = poisson(rng, std::exp(-2.7 + 0.5 * propensity + 1.0 * aa + 0.3 * young));
        const int juv_other = poisson(rng, std::exp(-2.3 + 0.4 * propensity + 0.8 * aa + 0.2 * young));
        const int priors = poisson(rng, std::exp(0.2 + 0.6 * propensity + 0.9 * aa + 0.25 * (age - 30) / 10.0));
        const double days_raw = rng.uniform() < 0.04 ? std::nan("") : std::round(rng.normal() * 3.0 - 1.0);
        const bool felony = rng.bernoulli(sigmoid(0.4 + 0.4 * propensity + 0.5 * aa));
        const auto& desc = felony ? felonies[rng.below(felonies.size())] : misdemeanors[rng.below(misdemeanors.size())];
        const double recid_p = sigmoid(-0.35 + 0.9 * propensity + 0.35 * young + (male ? 0.2 : 0.0));
        const bool recid = rng.bernoulli(recid_p);
        const double risk = 0.9 * propensity + 0.45 * young + 0.8 * aa + 0.15 * std::log1p(priors);
        const double decile = clamp(std::round(5.0 + 2.2 * risk + rng.normal()), 1, 10);
        const double v_decile = clamp(std::round(4.5 + 2.0 * risk + rng.normal()), 1, 10);
        const std::string text = decile <= 4 ? "Low" : decile <= 7 ? "Medium" : "High";
        const std::string age_cat = age < 25 ? "Less than 25" : age <= 45 ? "25 - 45" : "Greater than 45";

        f.rows.push_back({male ? "Male" : "Female", integer(age), age_cat, race, std::to_string(juv_fel),
                          std::to_string(juv_misd), std::to_string(juv_other), std::to_string(priors),
                          std::isnan(days_raw) ? "" : integer(days_raw), felony ? "F" : "M", desc,
                          integer(decile), text, integer(v_decile), recid ? "1" : "0"});
    }
    return f;
}

// Absence records. Hours depend on tenure, children and commute, not on age,
// but the recorded service time and children counts drift upward with age
// and weight and drinking habits track it too, so age leaks.
Frame absenteeism(Rng rng) {
    Frame f;
    f.names = {"ID", "Reason for absence", "Month of absence", "Day of the week", "Seasons",
               "Transportation expense", "Distance from Residence to Work", "Service time", "Age",
               "Work load Average/day", "Hit target", "Disciplinary failure", "Education", "Son",
               "Social drinker", "Social smoker", "Pet", "Weight", "Height", "Body mass index",
               "Absenteeism time in hours"};
    for (int i = 0; i < 740; ++i) {
        const double band = rng.uniform();
        double age;
        if (band < 0.45) {
            age = 27 + std::floor(rng.uniform() * 8);
        } else if (band < 0.83) {
            age = 35 + std::floor(rng.uniform() * 10);
        } else {
            age = 45 + std::floor(rng.uniform() * 14);
        }
        const double a = (age - 37) / 8.0;
        const double month = 1 + rng.below(12);
        const double seasons = 1 + rng.below(4);
        const double reason = rng.below(29);
        const double day = 2 + rng.below(5);
        const double transport = clamp(std::round(220 + 60 * rng.normal()), 118, 388);
        const double distance = clamp(std::round(29 + 14 * rng.normal()), 5, 52);
        const double service_fair = rng.normal();
        const double service = clamp(std::round(12 + 3 * service_fair + 4.5 * a), 1, 29);
        const double workload = std::round(271 + 39 * rng.normal());
        const double hit = clamp(std::round(94 + 3.5 * rng.normal()), 81, 100);
        const bool disciplinary = rng.bernoulli(0.05);
        const double education = rng.uniform() < 0.8 ? 1 : 2 + rng.below(3);
        const double son_fair = rng.normal();
        const double son = clamp(std::round(1.0 + 0.8 * son_fair + 0.8 * a), 0, 4);
        const bool drinker = rng.bernoulli(sigmoid(0.2 + 1.0 * a));
        const bool smoker = rng.bernoulli(0.07);
        const double pet = clamp(std::round(0.7 + 1.1 * rng.normal()), 0, 8);
        const double height = clamp(std::round(172 + 6 * rng.normal()), 163, 196);
        const double weight = clamp(std::round(79 + 6 * a + 8 * rng.normal()), 56, 108);
        const double bmi = std::round(weight / (height * height / 10000.0));
        const double fair = 0.45 * service_fair + 0.35 * son_fair + 0.25 * (distance - 29) / 14 +
                            0.2 * (transport - 220) / 60;
        const double hours = disciplinary ? 0.0 : std::round(std::exp(1.4 + fair + 0.5 * rng.normal()));
        f.rows.push_back({integer(1 + rng.below(36)), integer(reason), integer(month), integer(day), integer(seasons),
                          integer(transport), integer(distance), integer(service), integer(age),
                          fixed(workload, 3), integer(hit), disciplinary ? "1" : "0", integer(education),
                          integer(son), drinker ? "1" : "0", smoker ? "1" : "0", integer(pet), integer(weight),
                          integer(height), integer(bmi), integer(hours)});
    }
    return f;
}

// Cleveland-style heart disease records. Disease does not depend on sex, but
// several test results differ by sex at equal disease status, so a model
// reading them scores men higher.
Frame heart(Rng rng) {
    Frame f;
    f.names = {"age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach",
               "exang", "oldpeak", "slope", "ca", "thal", "num"};
    for (int i = 0; i < 303; ++i) {
        const bool male = rng.bernoulli(0.68);
        const double m = male ? 1.0 : 0.0;
        const double age = clamp(std::round(54.5 + 9 * rng.normal()), 29, 77);
        const double aa = (age - 54.5) / 9.0;
        const bool disease = rng.bernoulli(sigmoid(-0.2 + 0.5 * aa));
        const double d = disease ? 1.0 : 0.0;
        const double severity = disease ? 1 + rng.below(3) : 0;

        const double cp_score = 1.1 * d + 0.3 * m + rng.normal();
        const double cp = cp_score > 1.6 ? 4 : cp_score > 0.9 ? 3 : cp_score > 0.2 ? 2 : 1;
        const double trestbps = clamp(std::round(131 + 4 * d + 6 * aa - 2 * m + 16 * rng.normal()), 94, 200);
        const double chol = clamp(std::round(247 + 8 * d - 10 * m + 48 * rng.normal()), 126, 564);
        const bool fbs = rng.bernoulli(0.15);
        const double restecg = rng.uniform() < 0.5 ? 0 : rng.uniform() < 0.03 ? 1 : 2;
        const double thalach = clamp(std::round(158 - 15 * d - 8 * aa - 3 * m + 18 * rng.normal()), 71, 202);
        const bool exang = rng.bernoulli(sigmoid(-1.5 + 1.4 * d + 0.35 * m));
        const double oldpeak = clamp(std::round((0.6 + 0.8 * d + 0.15 * m + 0.9 * rng.normal()) * 10) / 10, 0, 6.2);
        const double slope_score = 0.9 * d + rng.normal();
        const double slope = slope_score > 1.3 ? 3 : slope_score > 0.1 ? 2 : 1;
        const double ca = clamp(std::round(0.25 + 0.7 * d + 0.3 * aa + 0.7 * rng.normal()), 0, 3);
        const double thal_score = 1.0 * d + 0.45 * m + rng.normal();
        const double thal = thal_score > 1.2 ? 7 : thal_score > 1.0 ? 6 : 3;
        const bool ca_missing = rng.uniform() < 0.013;
        const bool thal_missing = rng.uniform() < 0.007;
        f.rows.push_back({integer(age), male ? "1" : "0", integer(cp), integer(trestbps), integer(chol),
                          fbs ? "1" : "0", integer(restecg), integer(thalach), exang ? "1" : "0",
                          fixed(oldpeak, 1), integer(slope), ca_missing ? "?" : integer(ca),
                          thal_missing ? "?" : integer(thal), integer(severity)});
    }
    return f;
}

// New York City school records. The economic need index tracks household
// poverty and the share of Black and Hispanic students; income, attendance
// and proficiency columns carry both.
Frame passnyc(Rng rng) {
    Frame f;
    f.names = {"School Name", "District", "Community School?", "Economic Need Index", "School Income Estimate",
               "Percent ELL", "Percent Asian", "Percent Black", "Percent Hispanic", "Percent Black / Hispanic",
               "Percent White", "Student Attendance Rate", "Percent of Students Chronically Absent",
               "Rigorous Instruction %", "Collaborative Teachers %", "Supportive Environment %",
               "Effective School Leadership %", "Strong Family-Community Ties %", "Trust %",
               "Average ELA Proficiency", "Average Math Proficiency"};
    auto pct = [](double v) { return integer(clamp(v, 0, 100)) + "%"; };
    for (int i = 0; i < 1270; ++i) {
        const bool majority = rng.bernoulli(0.8);
        const double bh = majority ? clamp(0.86 + 0.12 * rng.normal(), 0.51, 1.0) : clamp(0.3 + 0.12 * rng.normal(), 0.02, 0.5);
        const double hisp_share = clamp(0.5 + 0.25 * rng.normal(), 0.05, 0.95);
        const double white = (1 - bh) * clamp(0.6 + 0.2 * rng.normal(), 0.1, 0.95);
        const double asian = (1 - bh) - white;
        const double poverty = rng.normal();
        const double eni = clamp(0.2 + 0.62 * bh + 0.15 * poverty + 0.03 * rng.normal(), 0.05, 0.97);
        const double income = 62000 - 4000 * poverty - 25000 * bh + 6000 * rng.normal();
        const double ell = clamp(6 + 1 * poverty + 16 * hisp_share * bh + 3 * rng.normal(), 0, 90);
        const double attendance = clamp(93 - 0.4 * poverty - 4.5 * bh + 1.0 * rng.normal(), 70, 100);
        const double absent = clamp(16 + 1.2 * poverty + 12 * bh + 3 * rng.normal(), 0, 80);
        const double ela = clamp(3.05 - 0.05 * poverty - 0.8 * bh + 0.12 * rng.normal(), 1.8, 4.2);
        const double math = clamp(3.2 - 0.05 * poverty - 0.9 * bh + 0.14 * rng.normal(), 1.8, 4.4);
        const bool community = rng.bernoulli(sigmoid(-3.0 + 3.0 * bh + 0.3 * poverty));
        std::vector<std::string> survey;
        for (int k = 0; k < 6; ++k) survey.push_back(pct(87 - 1.5 * poverty + 5 * rng.normal()));
        f.rows.push_back({"P.S. " + std::to_string(1 + i), integer(1 + rng.below(32)), community ? "Yes" : "No",
                          fixed(eni, 3), rng.uniform() < 0.3 ? "" : "$" + fixed(income, 2), pct(ell),
                          pct(100 * asian), pct(100 * bh * (1 - hisp_share)), pct(100 * bh * hisp_share),
                          pct(100 * bh), pct(100 * white), pct(attendance), pct(absent), survey[0], survey[1],
                          survey[2], survey[3], survey[4], survey[5], fixed(ela, 2), fixed(math, 2)});
    }
    return f;
}

// Community records on the normalized [0, 1] scale of the public release.
// Recorded violent crime tracks economic hardship and the Black population
// share. The police-department columns are missing for most communities.
Frame communities(Rng rng) {
    Frame f;
    f.names = {"state", "communityname", "fold", "population", "householdsize", "racepctblack", "racePctWhite",
               "racePctAsian", "racePctHisp", "agePct12t29", "agePct65up", "pctUrban", "medIncome", "pctWWage",
               "pctWInvInc", "pctWPubAsst", "whitePerCap", "blackPerCap", "indianPerCap", "AsianPerCap",
               "OtherPerCap", "HispPerCap", "PctPopUnderPov", "PctLess9thGrade", "PctUnemployed", "PctEmploy",
               "MalePctDivorce", "PctFam2Par", "PctKids2Par", "PctIlleg", "PctHousOccup", "PctVacantBoarded",
               "PctHousNoPhone", "MedRent", "PctNotSpeakEnglWell", "LemasPctOfficDrugUn"};
    const std::vector<std::string> lemas = {
        "LemasSwornFT", "LemasSwFTPerPop", "LemasSwFTFieldOps", "LemasSwFTFieldPerPop", "LemasTotalReq",
        "LemasTotReqPerPop", "PolicReqPerOffic", "PolicPerPop", "RacialMatchCommPol", "PctPolicWhite",
        "PctPolicBlack", "PctPolicHisp", "PctPolicAsian", "PctPolicMinor", "OfficAssgnDrugUnits",
        "NumKindsDrugsSeiz", "PolicAveOTWorked", "PolicCars", "PolicOperBudg", "LemasPctPolicOnPatr",
        "LemasGangUnitDeploy", "PolicBudgPerPop"};
    f.names.insert(f.names.end(), lemas.begin(), lemas.end());
    f.names.push_back("ViolentCrimesPerPop");
    auto u = [](double v) { return fixed(clamp(v, 0, 1), 2); };
    for (int i = 0; i < 1994; ++i) {
        const double black = clamp(std::pow(rng.uniform(), 2.6) * 0.9 + 0.01 * rng.uniform(), 0, 1);
        const double hisp = clamp(std::pow(rng.uniform(), 3.0) * 0.8, 0, 1);
        const double asian = clamp(std::pow(rng.uniform(), 3.5) * 0.6, 0, 1);
        const double white = clamp(1 - 0.9 * black - 0.6 * hisp - 0.4 * asian + 0.05 * rng.normal(), 0, 1);
        const double hardship = rng.normal();
        const double poverty = 0.28 + 0.2 * black + 0.05 * hisp + 0.09 * hardship + 0.04 * rng.normal();
        const double family = 0.6 - 0.3 * black - 0.05 * hardship + 0.05 * rng.normal();
        const double urban = rng.uniform() < 0.45 ? 1.0 : clamp(0.3 + 0.3 * rng.normal(), 0, 1);
        const double income = 0.45 - 0.7 * (poverty - 0.28) + 0.08 * rng.normal();
        const double crime = clamp(0.13 + 0.45 * black + 0.13 * hardship + 0.05 * rng.normal(), 0, 1);
        std::vector<std::string> row = {
            integer(1 + rng.below(50)),
            "Community" + std::to_string(i + 1) + "city",
            integer(1 + i % 10),
            u(std::pow(rng.uniform(), 4) * 0.6 + 0.01),
            u(0.46 + 0.15 * rng.normal() + 0.1 * hisp),
            u(black),
            u(white),
            u(asian),
            u(hisp),
            u(0.42 + 0.15 * rng.normal() + 0.1 * black),
            u(0.42 + 0.17 * rng.normal()),
            u(urban),
            u(income),
            u(0.5 + 0.2 * rng.normal() - 0.2 * (poverty - 0.28)),
            u(0.5 - 0.5 * (poverty - 0.28) + 0.15 * rng.normal()),
            u(0.32 + 0.6 * (poverty - 0.28) + 0.15 * black + 0.1 * rng.normal()),
            u(0.35 - 0.4 * (poverty - 0.28) + 0.1 * rng.normal()),
            u(0.29 - 0.2 * (poverty - 0.28) + 0.15 * rng.normal()),
            u(0.2 + 0.15 * rng.normal()),
            u(0.28 + 0.18 * rng.normal()),
            u(0.28 + 0.18 * rng.normal()),
            u(0.38 - 0.2 * (poverty - 0.28) + 0.15 * rng.normal()),
            u(0.3 + 0.8 * (poverty - 0.28) + 0.08 * rng.normal()),
            u(0.32 + 0.5 * (poverty - 0.28) + 0.25 * hisp + 0.12 * rng.normal()),
            u(0.36 + 0.6 * (poverty - 0.28) + 0.12 * rng.normal()),
            u(0.5 - 0.4 * (poverty - 0.28) + 0.15 * rng.normal()),
            u(0.46 + 0.3 * (poverty - 0.28) + 0.15 * rng.normal()),
            u(family),
            u(family + 0.02 + 0.05 * rng.normal()),
            u(0.22 + 0.5 * black + 0.3 * (poverty - 0.28) + 0.1 * rng.normal()),
            u(0.72 - 0.2 * (poverty - 0.28) + 0.15 * rng.normal()),
            u(0.2 + 0.3 * (poverty - 0.28) + 0.15 * rng.normal()),
            u(0.26 + 0.5 * (poverty - 0.28) + 0.12 * rng.normal()),
            u(0.35 - 0.3 * (poverty - 0.28) + 0.17 * rng.normal()),
            u(0.05 + 0.5 * hisp + 0.3 * asian + 0.05 * rng.normal()),
            u(0.1 + 0.2 * rng.normal()),
        };
        const bool reported = rng.uniform() < 0.16;
        for (std::size_t k = 0; k < lemas.size(); ++k) {
            row.push_back(reported ? u(0.2 + 0.15 * rng.normal() + (k == 10 ? 0.5 * black : 0.0)) : "?");
        }
        row.push_back(fixed(crime, 2));
        f.rows.push_back(std::move(row));
    }
    return f;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        const std::filesystem::path out = argc > 1 ? argv[1] : "data";
        std::filesystem::create_directories(out);
        struct Item {
            const char* file;
            const char* source;
            Frame frame;
        };
        const Rng root(20240601);
        const std::vector<Item> items = {
            {"compas_surrogate.csv",
             "https://raw.githubusercontent.com/propublica/compas-analysis/master/compas-scores.csv",
             compas(root.split("compas"))},
            {"absenteeism_surrogate.csv", "https://archive.ics.uci.edu/dataset/445/absenteeism+at+work",
             absenteeism(root.split("absenteeism"))},
            {"heart_surrogate.csv",
             "https://archive.ics.uci.edu/ml/machine-learning-databases/heart-disease/processed.cleveland.data",
             heart(root.split("heart"))},
            {"passnyc_surrogate.csv", "https://www.kaggle.com/passnyc/data-science-for-good",
             passnyc(root.split("passnyc"))},
            {"communities_surrogate.csv", "https://archive.ics.uci.edu/ml/datasets/Communities+and+Crime",
             communities(root.split("communities"))},
        };
        std::string manifest =
            "# Bundled datasets. Every file here is SIMULATED by tools/make_bundled_data\n"
            "# (seed 20240601): same column names and value ranges as the public source,\n"
            "# none of its records. The public files were not retrieved; place them in\n"
            "# $FAIRPREP_DATA_DIR to run the studies on real data.\n"
            "#\n"
            "# file\trows\tsha256\tpublic source\n";
        for (const auto& item : items) {
            const auto text = item.frame.csv();
            fairprep::write_file_atomic(out / item.file, text);
            manifest += std::string(item.file) + "\t" + std::to_string(item.frame.rows.size()) + "\t" +
                        fairprep::sha256_hex(text) + "\t" + item.source + "\n";
            std::cout << item.file << " " << item.frame.rows.size() << " rows\n";
        }
        fairprep::write_file_atomic(out / "MANIFEST", manifest);
    } catch (const fairprep::Error& e) {
        std::cerr << "make_bundled_data: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
