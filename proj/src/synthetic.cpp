#include "fairprep/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "fairprep/error.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

void SyntheticSpec::validate() const {
    if (!(prevalence > 0 && prevalence < 1)) throw UsageError("prevalence must lie in (0, 1)");
    if (!(bias >= 0 && bias < 1)) throw UsageError("bias must lie in [0, 1)");
    if (!(proxy_strength >= 0 && proxy_strength <= 1)) throw UsageError("proxy strength must lie in [0, 1]");
    if (features == 0) throw UsageError("need at least one fair feature");
    const double n_d = static_cast<double>(n);
    if (prevalence * n_d < 10 || (1 - prevalence) * n_d < 10)
        throw UsageError("degenerate spec: fewer than 10 expected rows in a group");
}

nlohmann::json SyntheticSpec::to_json() const {
    return {{"n", n},
            {"features", features},
            {"proxies", proxies},
            {"prevalence", prevalence},
            {"proxy_strength", proxy_strength},
            {"bias", bias},
            {"label_scale", label_scale},
            {"seed", seed}};
}

SyntheticData make_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng = Rng(spec.seed).split("synthetic");
    const std::size_t d = spec.features, k = spec.proxies;
    std::vector<std::vector<double>> cols(d + k + 2);
    SyntheticData out;
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double group = rng.bernoulli(spec.prevalence) ? 1.0 : 0.0;
        double score = 0;
        for (std::size_t j = 0; j < d; ++j) {
            const double x = rng.normal();
            cols[j].push_back(x);
            score += x;
        }
        for (std::size_t j = 0; j < k; ++j) {
            const double noise = rng.normal();
            cols[d + j].push_back(spec.proxy_strength * group + (1 - spec.proxy_strength) * noise);
        }
        const double p = 1.0 / (1.0 + std::exp(-spec.label_scale * score * norm));
        const double fair = rng.uniform() < p ? 1.0 : 0.0;
        const double flip_draw = rng.uniform();
        double observed = fair;
        if (group == 1.0 && fair == 0.0) {
            ++out.adverse_eligible;
            if (flip_draw < spec.bias) {
                observed = 1.0;
                ++out.flipped;
            }
        }
        cols[d + k].push_back(group);
        cols[d + k + 1].push_back(observed);
        out.fair_labels.push_back(fair);
    }
    Schema schema;
    for (std::size_t j = 0; j < d; ++j) schema.push_back(numeric_column("x" + std::to_string(j + 1)));
    for (std::size_t j = 0; j < k; ++j) schema.push_back(numeric_column("proxy" + std::to_string(j + 1)));
    schema.push_back(binary_column("group", ColumnRole::Protected));
    schema.push_back(binary_column("label", ColumnRole::Target));
    out.table = DataTable(std::move(schema), std::move(cols));
    return out;
}

namespace {

double mean_score(const BiasTable& t) {
    double s = 0;
    for (const auto& r : t.rows) s += r.score;
    return s / static_cast<double>(t.rows.size());
}

}  // namespace

SynthComparison synth_check(const SyntheticSpec& spec, const DebiasConfig& debias, const ModelSpec& model) {
    const auto data = make_synthetic(spec);
    const auto& table = data.table;
    const auto split = split_indices(table, 0.3, spec.seed);

    DebiasConfig dcfg = debias;
    dcfg.seed = spec.seed;
    // Unset latent: keep one code unit per fair feature so the proxies are what gets squeezed out.
    if (dcfg.latent_dim == 0) dcfg.latent_dim = std::max<std::size_t>(2, spec.features);
    const auto trained = train_debiaser(table, dcfg);
    const DataTable debiased = transform(trained.model, table);

    const auto pre = run_pipeline(table, "label", model, split, spec.seed);
    const auto post = run_pipeline(debiased, "label", model, split, spec.seed);

    // Audit against the fair labels: add them as a stratum column.
    auto with_fair = [&](const DataTable& t) {
        Schema schema = t.schema();
        std::vector<std::vector<double>> cols;
        for (std::size_t c = 0; c < t.cols(); ++c) {
            const auto col = t.column(c);
            cols.emplace_back(col.begin(), col.end());
        }
        schema.push_back(binary_column("fair_label", ColumnRole::Drop));
        cols.push_back(data.fair_labels);
        return DataTable(std::move(schema), std::move(cols));
    };
    AuditOptions opts;
    opts.protected_column = "group";
    opts.stratum_column = "fair_label";
    opts.contrast = std::make_pair(std::string("1"), std::string("0"));
    opts.range = std::make_pair(0.0, 1.0);

    SynthComparison out;
    out.spec = spec;
    out.table_pre = audit(pre.estimates, with_fair(table), opts, pre.performance).bias_table;
    out.table_post = audit(post.estimates, with_fair(debiased), opts, post.performance).bias_table;
    out.bias_pre = mean_score(out.table_pre);
    out.bias_post = mean_score(out.table_post);

    std::vector<double> fair_test, pre_test, post_test;
    for (auto r : split.test) {
        fair_test.push_back(data.fair_labels[r]);
        pre_test.push_back(pre.estimates[r]);
        post_test.push_back(post.estimates[r]);
    }
    out.fair_accuracy_pre = accuracy(pre_test, fair_test);
    out.fair_accuracy_post = accuracy(post_test, fair_test);
    out.observed_accuracy_pre = pre.performance.value;
    out.observed_accuracy_post = post.performance.value;
    out.probe_auc_pre = leakage_probe(table, "group", spec.seed);
    out.probe_auc_post = leakage_probe(debiased, "group", spec.seed);

    if (out.probe_auc_pre <= 0.6) {
        out.outcome = "no bias detected";
    } else if (out.bias_post < out.bias_pre) {
        out.outcome = "bias reduced";
    } else {
        out.outcome = "bias not reduced";
    }
    return out;
}

nlohmann::json SynthComparison::to_json() const {
    return {{"spec", spec.to_json()},
            {"outcome", outcome},
            {"fair_accuracy", {{"pre", fair_accuracy_pre}, {"post", fair_accuracy_post}}},
            {"observed_accuracy", {{"pre", observed_accuracy_pre}, {"post", observed_accuracy_post}}},
            {"bias_score", {{"pre", score_to_json(bias_pre)}, {"post", score_to_json(bias_post)}}},
            {"probe_auc", {{"pre", probe_auc_pre}, {"post", probe_auc_post}}},
            {"bias_table", {{"pre", fairprep::to_json(table_pre)}, {"post", fairprep::to_json(table_post)}}}};
}

}  // namespace fairprep
