#include <doctest.h>

#include <cmath>

#include "fairprep/error.hpp"
#include "fairprep/synthetic.hpp"

using namespace fairprep;

TEST_SUITE("synthetic") {
    TEST_CASE("no injected bias: observed equals fair and nothing leaks") {
        SyntheticSpec s;
        s.bias = 0;
        s.proxy_strength = 0;
        const auto d = make_synthetic(s);
        const auto label = d.table.column("label");
        for (std::size_t r = 0; r < d.table.rows(); ++r) CHECK(label[r] == d.fair_labels[r]);
        CHECK(d.flipped == 0);
        const double auc = leakage_probe(d.table, "group", s.seed);
        CHECK(auc >= 0.45);
        CHECK(auc <= 0.58);
    }

    TEST_CASE("flip count matches a recount and its expectation") {
        SyntheticSpec s;
        s.bias = 0.3;
        const auto d = make_synthetic(s);
        const auto group = d.table.column("group");
        const auto label = d.table.column("label");
        std::size_t eligible = 0, flipped = 0;
        for (std::size_t r = 0; r < d.table.rows(); ++r) {
            if (group[r] == 1 && d.fair_labels[r] == 0) {
                ++eligible;
                flipped += label[r] == 1;
            } else {
                CHECK(label[r] == d.fair_labels[r]);
            }
        }
        CHECK(eligible == d.adverse_eligible);
        CHECK(flipped == d.flipped);
        const double e = static_cast<double>(eligible);
        const double sd = std::sqrt(e * 0.3 * 0.7);
        CHECK(std::abs(static_cast<double>(flipped) - 0.3 * e) <= 3 * sd);
        CHECK(eligible > 300);  // about n * p * 0.5
    }

    TEST_CASE("fair labels do not depend on the bias rate") {
        SyntheticSpec a, b;
        a.bias = 0;
        b.bias = 0.6;
        CHECK(make_synthetic(a).fair_labels == make_synthetic(b).fair_labels);
        CHECK(make_synthetic(a).table.column("x1")[7] == make_synthetic(b).table.column("x1")[7]);
    }

    TEST_CASE("a perfect proxy equals the group") {
        SyntheticSpec s;
        s.proxy_strength = 1;
        const auto d = make_synthetic(s);
        const auto g = d.table.column("group");
        const auto p = d.table.column("proxy1");
        for (std::size_t r = 0; r < d.table.rows(); ++r) CHECK(p[r] == g[r]);
        CHECK(leakage_probe(d.table, "group", 1) >= 0.95);
    }

    TEST_CASE("layout and determinism") {
        SyntheticSpec s;
        s.n = 300;
        s.features = 3;
        s.proxies = 1;
        const auto d = make_synthetic(s);
        CHECK(d.table.cols() == 3 + 1 + 2);
        CHECK(d.table.spec(d.table.index_of("group")).role == ColumnRole::Protected);
        CHECK(d.table.spec(d.table.index_of("label")).role == ColumnRole::Target);
        CHECK(make_synthetic(s).table == d.table);
        s.seed = 2;
        CHECK_FALSE(make_synthetic(s).table == d.table);
    }

    TEST_CASE("degenerate specs") {
        SyntheticSpec s;
        s.n = 15;
        s.prevalence = 0.5;
        CHECK_THROWS_AS(make_synthetic(s), UsageError);
        s = SyntheticSpec{};
        s.prevalence = 0;
        CHECK_THROWS_AS(s.validate(), UsageError);
        s = SyntheticSpec{};
        s.bias = 1;
        CHECK_THROWS_AS(s.validate(), UsageError);
        s = SyntheticSpec{};
        s.proxy_strength = 1.5;
        CHECK_THROWS_AS(s.validate(), UsageError);
        s = SyntheticSpec{};
        s.n = 2000;
        s.prevalence = 0.004;
        CHECK_THROWS_AS(s.validate(), UsageError);
    }

    TEST_CASE("without bias the check leaves fair accuracy alone") {
        SyntheticSpec s;
        s.bias = 0;
        const auto c = synth_check(s, DebiasConfig{}, ModelSpec{});
        CHECK(std::abs(c.fair_accuracy_post - c.fair_accuracy_pre) <= 0.03);
        CHECK(c.probe_auc_pre >= 0.75);
        CHECK(c.probe_auc_post <= 0.60);
    }

    TEST_CASE("null case is reported as such") {
        SyntheticSpec s;
        s.bias = 0;
        s.proxy_strength = 0;
        const auto c = synth_check(s, DebiasConfig{}, ModelSpec{});
        CHECK(c.outcome == "no bias detected");
        CHECK(std::abs(c.fair_accuracy_post - c.fair_accuracy_pre) <= 0.03);
        const auto j = c.to_json();
        CHECK(j.contains("fair_accuracy"));
    }
}
