#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "fairprep/audit.hpp"
#include "fairprep/debias.hpp"
#include "fairprep/study.hpp"

namespace fairprep {

// Ground-truth generator. Columns: x1..xd (fair features, standard normal),
// proxy1..proxyk (proxy_strength * group + (1 - proxy_strength) * noise),
// group (binary, protected; 1 = disadvantaged group), label (binary target;
// 1 = adverse outcome).
//
// fair label ~ Bernoulli(sigmoid(label_scale * sum(x) / sqrt(d)))
// observed   = fair, except group-1 rows with fair label 0 flip to 1 with
//              probability bias.
// Every row consumes the same random draws whatever the parameters, so fair
// labels do not depend on `bias`.
struct SyntheticSpec {
    std::size_t n = 2000;
    std::size_t features = 4;
    std::size_t proxies = 2;
    double prevalence = 0.5;      // P(group = 1)
    double proxy_strength = 0.8;  // rho
    double bias = 0.3;            // beta
    double label_scale = 1.5;
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
};

struct SyntheticData {
    DataTable table;
    std::vector<double> fair_labels;
    std::size_t adverse_eligible = 0;  // group-1 rows whose fair label is 0
    std::size_t flipped = 0;
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

struct SynthComparison {
    SyntheticSpec spec;
    double fair_accuracy_pre = 0;   // test rows, against the hidden fair labels
    double fair_accuracy_post = 0;
    double observed_accuracy_pre = 0;
    double observed_accuracy_post = 0;
    double bias_pre = 0;            // mean score over fair-label strata
    double bias_post = 0;
    double probe_auc_pre = 0;
    double probe_auc_post = 0;
    BiasTable table_pre;
    BiasTable table_post;
    std::string outcome;

    nlohmann::json to_json() const;
};

// Trains the downstream model on the biased table and on its debiased copy,
// then scores both against the fair labels. Estimates are stratified by the
// fair label for the bias scores.
SynthComparison synth_check(const SyntheticSpec& spec, const DebiasConfig& debias, const ModelSpec& model);

}  // namespace fairprep
