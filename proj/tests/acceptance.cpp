// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fairprep/audit.hpp"
#include "fairprep/io.hpp"
#include "fairprep/linear.hpp"
#include "fairprep/rng.hpp"
#include "fairprep/study.hpp"
#include "fairprep/synthetic.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "printed_tables.hpp"
#include "support.hpp"

using namespace fairprep;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    std::string failures;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failures += " [failed: " + what + "]";
        }
    }
};

oracle::Mat to_rows(const Matrix& x) {
    oracle::Mat rows(x.rows(), oracle::Vec(x.cols()));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) rows[i][j] = x(i, j);
    return rows;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void gradient_fidelity(Verdict& v) {
    Rng rng = Rng(20240601).split("acceptance-gradcheck");
    double worst = 0;
    const int cases = 24;
    for (int i = 0; i < cases; ++i) {
        const auto c = gradcheck::random_case(rng);
        const auto out = gradcheck::check(c, 1e-5);
        worst = std::max({worst, out.param_error, out.input_error});
        v.require(out.param_error <= 1e-4 && out.input_error <= 1e-4, c.describe());
    }
    v.detail << cases << " random nets, max relative error " << worst;
}

void solver_oracle(Verdict& v) {
    Rng rng = Rng(20240601).split("acceptance-solvers");
    double worst_ridge = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 40 + static_cast<int>(rng.below(60));
        const int d = 2 + static_cast<int>(rng.below(5));
        Matrix x(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) {
            y[i] = 0.3 + 0.2 * rng.normal();
            for (int j = 0; j < d; ++j) y[i] += (j % 2 ? -1.0 : 1.0) * (j + 1) * 0.5 * x(i, j);
        }
        const double lambda = 0.1 + 2.0 * rng.uniform();
        const auto m = fit_linear(x, y, lambda);
        const auto ref = oracle::gd_ridge(to_rows(x), y, lambda);
        double d2 = (m.intercept - ref[d]) * (m.intercept - ref[d]);
        for (int j = 0; j < d; ++j) d2 += (m.weights(j) - ref[j]) * (m.weights(j) - ref[j]);
        worst_ridge = std::max(worst_ridge, std::sqrt(d2));
    }
    v.require(worst_ridge <= 1e-6, "ridge distance");

    double worst_logit = 0;
    for (int trial = 0; trial < 3; ++trial) {
        const int n = 80, d = 3;
        Matrix x(n, d);
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) {
            double z = 0.2;
            for (int j = 0; j < d; ++j) {
                x(i, j) = rng.normal();
                z += (j + 1) * (j % 2 ? -0.4 : 0.4) * x(i, j);
            }
            y[i] = rng.uniform() < oracle::sigmoid(z) ? 1 : 0;
        }
        TrainConfig cfg;
        cfg.epochs = 20000;
        cfg.learning_rate = 0.5;
        const auto m = fit_logistic(x, y, cfg);
        const auto ref = oracle::irls_logistic(to_rows(x), y, cfg.l2);
        double d2 = (m.intercept - ref[d]) * (m.intercept - ref[d]);
        for (int j = 0; j < d; ++j) d2 += (m.weights(j) - ref[j]) * (m.weights(j) - ref[j]);
        worst_logit = std::max(worst_logit, std::sqrt(d2));
    }
    v.require(worst_logit <= 1e-3, "logistic distance");
    v.detail << "ridge max distance " << worst_ridge << " over 10 systems, logistic vs IRLS " << worst_logit;
}

void printed_tables(Verdict& v) {
    int matched = 0;
    for (const auto& c : printed::kColumns) {
        GroupStats a, b;
        a.mu = c.mu_a;
        a.sigma = c.sigma_a;
        b.mu = c.mu_b;
        b.sigma = c.sigma_b;
        const double score = bias_score(a, b);
        const bool ok = std::abs(score - c.score) <= c.tolerance;
        matched += ok;
        if (!ok) {
            std::ostringstream what;
            what << c.study << " " << c.label << ": recomputed " << score << " vs printed "
                 << c.score;
            v.require(false, what.str());
        }
    }
    v.detail << matched << "/" << printed::kColumns.size() << " printed columns reproduced";
}

struct StudyBands {
    std::string name;
    std::vector<std::string> pre_at_least_strata;
    double pre_min = 0;
    double post_max = 0;
    double max_drop = 0;
    bool against_truth = false;
};

void study(Verdict& v, const StudyBands& bands) {
    auto cfg = load_study_config(testing::source_dir() / "studies" / (bands.name + ".json"));
    testing::TempDir cache;
    StudyOptions opts;
    opts.acquire.offline = true;
    opts.acquire.cache_dir = cache.path();
    opts.seed_count = 5;
    const auto r = run_study(cfg, opts);
    v.detail << "origin " << r.data.origin << ";";
    for (const auto& s : r.strata) {
        v.detail << " " << s.stratum << " " << s.pre.median << " -> " << s.post.median;
        if (bands.against_truth) {
            v.require(s.truth.has_value(), "true values present");
            if (!s.truth) continue;
            v.detail << " (true " << *s.truth << ")";
            v.require(s.pre.median > *s.truth, s.stratum + " pre > true");
            v.require(s.post.median < *s.truth, s.stratum + " post < true");
        } else {
            v.require(s.post.median <= bands.post_max, s.stratum + " post");
        }
    }
    for (const auto& name : bands.pre_at_least_strata)
        v.require(r.stratum(name).pre.median >= bands.pre_min, name + " pre");
    const double drop = r.performance_pre.median - r.performance_post.median;
    v.detail << "; " << (bands.against_truth ? "R^2 " : "accuracy ") << r.performance_pre.median << " -> "
             << r.performance_post.median;
    v.require(drop <= bands.max_drop, "performance drop");
}

void synthetic(Verdict& v) {
    std::vector<double> probe_pre, probe_post, acc_pre, acc_post, bias_pre, bias_post;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticSpec s;
        s.n = 2000;
        s.bias = 0.3;
        s.proxy_strength = 0.8;
        s.seed = seed;
        const auto c = synth_check(s, DebiasConfig{}, ModelSpec{});
        probe_pre.push_back(c.probe_auc_pre);
        probe_post.push_back(c.probe_auc_post);
        acc_pre.push_back(c.fair_accuracy_pre);
        acc_post.push_back(c.fair_accuracy_post);
        bias_pre.push_back(c.bias_pre);
        bias_post.push_back(c.bias_post);
    }
    const double pp = median(probe_pre), pq = median(probe_post);
    const double ap = median(acc_pre), aq = median(acc_post);
    const double bp = median(bias_pre), bq = median(bias_post);
    v.detail << "probe AUC " << pp << " -> " << pq << ", fair accuracy " << ap << " -> " << aq << ", bias " << bp
             << " -> " << bq;
    v.require(pp >= 0.75, "probe pre");
    v.require(pq <= 0.60, "probe post");
    v.require(aq >= ap - 0.02, "fair accuracy");
    v.require(bq < bp, "bias");
}

void determinism(Verdict& v) {
    testing::TempDir dir;
    const auto heart = load_study_config(testing::source_dir() / "studies" / "heart.json");
    const auto csv = (dir / "heart.csv").string();
    const auto schema = (dir / "schema.json").string();
    testing::write_text(csv, read_file(heart.source.bundled));
    testing::write_text(schema, schema_to_json(heart.schema).dump(2));
    testing::write_text(dir / "est.csv", "estimate,group,y\n0.67,A,1\n0.83,A,0\n0.38,B,1\n0.50,B,0\n0.6,A,1\n0.2,B,0\n");
    const auto study_cfg = (testing::source_dir() / "studies" / "heart.json").string();

    struct Command {
        std::string name;
        std::vector<std::string> args;
        std::vector<std::string> outputs;
    };
    const std::string o = dir.path().string() + "/";
    const std::vector<Command> commands = {
        {"debias",
         {"debias", "--input", csv, "--schema", schema, "--output", o + "d.csv", "--model-out", o + "d_model.json",
          "--report", o + "d.json", "--epochs", "60", "--seed", "5"},
         {"d.csv", "d_model.json", "d.json"}},
        {"audit",
         {"audit", "--estimates", o + "est.csv", "--groups", "group", "--strata", "y", "--report", o + "a.json",
          "--table", o + "a.csv", "--histograms", o + "h.csv"},
         {"a.json", "a.csv", "h.csv"}},
        {"synth-check", {"synth-check", "--seed", "3", "--epochs", "60", "--report", o + "s.json"}, {"s.json"}},
        {"run-study",
         {"run-study", "--config", study_cfg, "--seeds", "2", "--offline", "--data-dir", o + "cache", "--out",
          o + "study"},
         {"study/result.json", "study/bias_tables.txt", "study/seed_1_bias_table.csv", "study/seed_1_hist_pre.csv",
          "study/seed_2_hist_post.csv"}},
    };
    int identical = 0, total = 0;
    for (const auto& c : commands) {
        std::vector<std::string> first;
        for (int run = 0; run < 2; ++run) {
            const auto r = testing::run_cli(c.args);
            v.require(r.exit_code == 0, c.name + " exit " + std::to_string(r.exit_code));
            for (std::size_t k = 0; k < c.outputs.size(); ++k) {
                const auto path = dir / c.outputs[k];
                const std::string bytes = std::filesystem::exists(path) ? read_file(path) : std::string();
                v.require(!bytes.empty(), c.name + " wrote " + c.outputs[k]);
                if (run == 0) {
                    first.push_back(bytes);
                } else {
                    ++total;
                    const bool same = bytes == first[k];
                    identical += same;
                    v.require(same, c.name + " " + c.outputs[k] + " differs");
                }
            }
        }
    }
    v.detail << identical << "/" << total << " output files byte-identical across re-runs";
}

struct Criterion {
    int id;
    std::string title;
    double limit_seconds;
    std::function<void(Verdict&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "gradient fidelity", 30, gradient_fidelity},
        {2, "solver oracle", 30, solver_oracle},
        {3, "bias-table arithmetic", 1, printed_tables},
        {4, "COMPAS study", 300,
         [](Verdict& v) { study(v, {"compas", {"non-recid", "recid"}, 0.5, 0.3, 0.10, false}); }},
        {5, "absenteeism study", 180,
         [](Verdict& v) { study(v, {"absenteeism", {"upper quartile"}, 1.0, 0.35, 0.10, false}); }},
        {6, "heart study", 120,
         [](Verdict& v) { study(v, {"heart", {"healthy", "diseased"}, 0.15, 0.10, 0.10, false}); }},
        {7, "PASSNYC study", 180, [](Verdict& v) { study(v, {"passnyc", {}, 0, 0, 0.25, true}); }},
        {8, "communities study", 180, [](Verdict& v) { study(v, {"communities", {}, 0, 0, 0.20, true}); }},
        {9, "synthetic ground truth", 120, synthetic},
        {10, "determinism", 300, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Verdict v;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.limit_seconds) {
            std::ostringstream what;
            what << "took longer than " << c.limit_seconds << " s";
            v.require(false, what.str());
        }
        failed += !v.pass;
        std::printf("%s  %2d %-24s %7.1fs  %s\n", v.pass ? "PASS" : "FAIL", c.id, c.title.c_str(), secs,
                    (v.detail.str() + v.failures).c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
