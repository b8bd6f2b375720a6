#include <doctest.h>

#include <cmath>
#include <map>

#include "fairprep/encoding.hpp"
#include "fairprep/error.hpp"
#include "fairprep/io.hpp"
#include "fairprep/rng.hpp"
#include "fairprep/transforms.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fairprep;

namespace {

DataTable numeric_table(const std::vector<double>& values, ColumnRole role = ColumnRole::Feature) {
    return DataTable({numeric_column("v", role)}, {values});
}

DataTable toy_table() {
    // a numeric, c categorical {x,y,z}, g binary protected, t binary target
    Schema schema{numeric_column("a"), categorical_column("c", {"x", "y", "z"}),
                  binary_column("g", ColumnRole::Protected), binary_column("t", ColumnRole::Target)};
    std::vector<std::vector<double>> cols{
        {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12},
        {0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2},
        {0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1},
        {0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1},
    };
    return DataTable(schema, cols);
}

}  // namespace

TEST_SUITE("schema") {
    TEST_CASE("validation rules") {
        CHECK_NOTHROW(validate_schema({numeric_column("a"), binary_column("b")}));
        CHECK_THROWS_AS(validate_schema({numeric_column("a"), numeric_column("a")}), DataError);
        CHECK_THROWS_AS(validate_schema({categorical_column("c", {"x"})}), DataError);
        CHECK_THROWS_AS(validate_schema({categorical_column("c", {"x", "x"})}), DataError);
        CHECK_THROWS_AS(validate_schema({ColumnSpec{"b", ColumnKind::Binary, ColumnRole::Feature, {"1", "0"}}}),
                        DataError);
        CHECK_NOTHROW(validate_schema({categorical_column("free", {}, ColumnRole::Drop)}));
        CHECK_THROWS_AS(validate_schema({categorical_column("free", {})}), DataError);
    }

    TEST_CASE("table construction checks codes and lengths") {
        CHECK_THROWS_AS(DataTable({binary_column("b")}, {{0, 2}}), DataError);
        CHECK_THROWS_AS(DataTable({numeric_column("a"), numeric_column("b")}, {{1, 2}, {1}}), DataError);
        CHECK_THROWS_AS(DataTable({numeric_column("a")}, {{1, INFINITY}}), DataError);
        CHECK_NOTHROW(DataTable({binary_column("b")}, {{0, kMissing}}));
    }

    TEST_CASE("json round trip") {
        const Schema s{numeric_column("a", ColumnRole::Target), categorical_column("c", {"p", "q"}, ColumnRole::Protected)};
        CHECK(schema_from_json(schema_to_json(s)) == s);
    }

    TEST_CASE("unknown column names a column") {
        const auto t = toy_table();
        try {
            t.index_of("nope");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("nope") != std::string::npos);
        }
    }
}

TEST_SUITE("csv") {
    TEST_CASE("two-row file") {
        testing::TempDir dir;
        testing::write_text(dir / "t.csv", "a,b\n1,x\n2,y\n");
        const auto t = load_csv(dir / "t.csv", {numeric_column("a"), categorical_column("b", {"x", "y"})});
        CHECK(t.rows() == 2);
        CHECK(t.cell(0, 0) == 1);
        CHECK(t.cell(1, 0) == 2);
        CHECK(t.label(0, 1) == "x");
        CHECK(t.label(1, 1) == "y");
    }

    TEST_CASE("unparseable and missing cells become missing") {
        const auto doc = parse_csv("a,b\nabc,x\nNA,\n?,y\n3,w\n");
        const auto t = table_from_csv(doc, {numeric_column("a"), categorical_column("b", {"x", "y"})});
        CHECK(is_missing(t.cell(0, 0)));
        CHECK(is_missing(t.cell(1, 0)));
        CHECK(is_missing(t.cell(1, 1)));
        CHECK(is_missing(t.cell(2, 0)));
        CHECK(t.cell(3, 0) == 3);
        CHECK(is_missing(t.cell(3, 1)));  // undeclared category
    }

    TEST_CASE("quoting, CRLF and delimiters") {
        const auto doc = parse_csv("name,v\r\n\"a, \"\"b\"\"\",1\r\n\"multi\nline\",2\r\n");
        REQUIRE(doc.rows.size() == 2);
        CHECK(doc.rows[0][0] == "a, \"b\"");
        CHECK(doc.rows[1][0] == "multi\nline");
        CHECK(doc.rows[1][1] == "2");
        const auto semi = parse_csv("a;b\n1;2\n", ';');
        CHECK(semi.header == std::vector<std::string>{"a", "b"});
        CHECK(semi.rows[0][1] == "2");
    }

    TEST_CASE("malformed input") {
        CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n"), DataError);
        CHECK_THROWS_AS(parse_csv("a,b\n\"1,2\n"), DataError);
        const auto doc = parse_csv("a,c\n1,2\n");
        CHECK_THROWS_AS(table_from_csv(doc, {numeric_column("a"), numeric_column("b")}), DataError);
        CHECK_THROWS_AS(table_from_csv(doc, {numeric_column("a")}), DataError);
        CsvOptions loose;
        loose.allow_extra_columns = true;
        CHECK(table_from_csv(doc, {numeric_column("a")}, loose).cols() == 1);
        CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {numeric_column("a")}), DataError);
    }

    TEST_CASE("percent and currency cells") {
        const auto t = table_from_csv(parse_csv("p,m\n75%,\"$31,141.72\"\n"), {numeric_column("p"), numeric_column("m")});
        CHECK(t.cell(0, 0) == 75);
        CHECK(t.cell(0, 1) == doctest::Approx(31141.72));
    }

    TEST_CASE("write and read back") {
        testing::TempDir dir;
        const auto t = toy_table();
        save_csv(dir / "out.csv", t);
        CHECK(load_csv(dir / "out.csv", t.schema()) == t);
        const auto tricky = DataTable({numeric_column("x"), categorical_column("s", {"a,b", "c\"d"})},
                                      {{0.1, kMissing}, {0, 1}});
        save_csv(dir / "tricky.csv", tricky);
        CHECK(load_csv(dir / "tricky.csv", tricky.schema()) == tricky);
    }

    TEST_CASE("number formatting round-trips") {
        for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.0, 0.0}) CHECK(std::stod(format_number(v)) == v);
        CHECK(format_number(-0.0) == "0");
    }

    TEST_CASE("sha256 of a known string") {
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}

TEST_SUITE("transforms") {
    TEST_CASE("filter_rows") {
        const Schema s{categorical_column("r", {"A", "B", "C"})};
        const auto t = DataTable(s, {{0, 1, 0, 2, 0}});
        const std::vector<std::string> all{"A", "B", "C"};
        CHECK(filter_rows(t, "r", all) == t);
        const std::vector<std::string> ab{"A", "B"};
        const auto f = filter_rows(t, "r", ab);
        CHECK(f.rows() == 4);
        CHECK(f.spec(0).categories == ab);
        // Hand count: A fills 3 of the 5 rows and C one more.
        const std::vector<std::string> ac{"A", "C"};
        CHECK(filter_rows(t, "r", ac).rows() == 4);
        CHECK(filter_rows(t, "r", ac).label(2, 0) == "C");
        const std::vector<std::string> none{"Z"};
        CHECK_THROWS_AS(filter_rows(t, "r", none), DataError);
    }

    TEST_CASE("filter_rows keeping one category present in 3 of 5 rows") {
        const auto t = DataTable({categorical_column("r", {"A", "B"}), numeric_column("v")},
                                 {{0, 1, 0, 1, 0}, {1, 2, 3, 4, 5}});
        const std::vector<std::string> a{"A"};
        const auto f = filter_rows(t, "r", a);
        CHECK(f.rows() == 3);
        CHECK(f.spec(0).categories == t.spec(0).categories);
        CHECK(f.cell(1, 1) == 3);
    }

    TEST_CASE("nearest-rank percentile against brute force") {
        const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
        CHECK(nearest_rank_percentile(v, 0.75) == 6);
        Rng rng(8);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> xs(1 + rng.below(40));
            for (auto& x : xs) x = std::round(10 * rng.normal());
            if (rng.bernoulli(0.3)) xs.push_back(kMissing);
            for (double q : {0.25, 0.5, 0.75, 0.9}) CHECK(nearest_rank_percentile(xs, q) == oracle::nearest_rank(xs, q));
        }
    }

    TEST_CASE("quartile_binarize") {
        const auto t = quartile_binarize(numeric_table({1, 2, 3, 4, 5, 6, 7, 8}), "v");
        CHECK(t.spec(0).kind == ColumnKind::Binary);
        const std::vector<double> expect{0, 0, 0, 0, 0, 0, 1, 1};
        for (std::size_t r = 0; r < 8; ++r) CHECK(t.cell(r, 0) == expect[r]);
        const auto flat = quartile_binarize(numeric_table({3, 3, 3, 3}), "v");
        for (std::size_t r = 0; r < 4; ++r) CHECK(flat.cell(r, 0) == 0);
        const auto gap = quartile_binarize(numeric_table({1, kMissing, 9, 2, 3}), "v");
        CHECK(is_missing(gap.cell(1, 0)));
        CHECK(gap.cell(2, 0) == 1);
    }

    TEST_CASE("bucket_numeric boundaries") {
        const std::vector<double> edges{35, 45};
        const auto t = bucket_numeric(numeric_table({34, 35, 44.9, 45, 70, kMissing}), "v", edges);
        CHECK(t.spec(0).categories == std::vector<std::string>{"under 35", "35 to 45", "over 45"});
        CHECK(t.label(0, 0) == "under 35");
        CHECK(t.label(1, 0) == "35 to 45");
        CHECK(t.label(2, 0) == "35 to 45");
        CHECK(t.label(3, 0) == "over 45");
        CHECK(t.label(4, 0) == "over 45");
        CHECK(is_missing(t.cell(5, 0)));
        const auto three = bucket_numeric(numeric_table({10, 40, 70}), "v", edges);
        CHECK(three.cell(0, 0) != three.cell(1, 0));
        CHECK(three.cell(1, 0) != three.cell(2, 0));
        const std::vector<double> bad{45, 35};
        CHECK_THROWS_AS(bucket_numeric(numeric_table({1}), "v", bad), DataError);
        const std::vector<std::string> two{"a", "b"};
        CHECK_THROWS_AS(bucket_numeric(numeric_table({1}), "v", edges, two), DataError);
    }

    TEST_CASE("binarize_threshold") {
        const auto t = binarize_threshold(numeric_table({0, 1, 2, 3}), "v", Comparison::GreaterEqual, 1);
        CHECK(t.cell(0, 0) == 0);
        for (std::size_t r = 1; r < 4; ++r) CHECK(t.cell(r, 0) == 1);
        const auto z = binarize_threshold(numeric_table({0, 0, 0}), "v", Comparison::GreaterEqual, 1);
        for (std::size_t r = 0; r < 3; ++r) CHECK(z.cell(r, 0) == 0);
        const auto strict = binarize_threshold(numeric_table({50, 50.5, 49}), "v", Comparison::Greater, 50);
        CHECK(strict.cell(0, 0) == 0);
        CHECK(strict.cell(1, 0) == 1);
        CHECK(strict.cell(2, 0) == 0);
        const auto t2 = DataTable({categorical_column("c", {"a", "b"})}, {{0, 1}});
        CHECK_THROWS_AS(binarize_threshold(t2, "c", Comparison::Greater, 0), DataError);
    }

    TEST_CASE("drop_sparse_columns") {
        const auto t = DataTable({numeric_column("a"), numeric_column("b"), numeric_column("c")},
                                 {{kMissing, kMissing, kMissing, kMissing, kMissing, 1},
                                  {1, 2, 3, 4, 5, 6},
                                  {kMissing, kMissing, 1, 2, 3, 4}});
        CHECK(drop_sparse_columns(t, 0) == t);
        const auto one = drop_sparse_columns(t, 1);
        CHECK(one.cols() == 2);
        CHECK(one.spec(0).name == "b");
        CHECK(one.spec(1).name == "c");
        CHECK(drop_sparse_columns(t, 2).spec(0).name == "b");
        CHECK_THROWS_AS(drop_sparse_columns(t, 4), DataError);
        // Ties drop the earlier column.
        const auto tie = DataTable({numeric_column("p"), numeric_column("q")}, {{kMissing, 1}, {kMissing, 1}});
        CHECK(drop_sparse_columns(tie, 1).spec(0).name == "q");
    }

    TEST_CASE("drop_columns and roles") {
        const auto t = toy_table();
        const std::vector<std::string> names{"c"};
        CHECK(drop_columns(t, names).cols() == 3);
        const std::vector<std::string> missing{"zz"};
        CHECK_THROWS_AS(drop_columns(t, missing), DataError);
        CHECK(drop_role_columns(t.with_role("a", ColumnRole::Drop)).cols() == 3);
    }

    TEST_CASE("inputs are never modified") {
        const auto t = toy_table();
        const auto copy = t;
        quartile_binarize(t, "a");
        const std::vector<double> edges{5};
        bucket_numeric(t, "a", edges);
        drop_sparse_columns(t, 1);
        CHECK(t == copy);
    }

    TEST_CASE("split sizes and determinism") {
        std::vector<double> vals(100), target(100);
        for (int i = 0; i < 100; ++i) {
            vals[i] = i;
            target[i] = i < 80 ? 0 : 1;
        }
        const auto t = DataTable({numeric_column("v"), binary_column("y", ColumnRole::Target)}, {vals, target});
        const auto a = split_indices(t, 0.3, 5);
        CHECK(a.train.size() == 70);
        CHECK(a.test.size() == 30);
        const auto b = split_indices(t, 0.3, 5);
        CHECK(a.train == b.train);
        CHECK(a.test == b.test);
        CHECK(split_indices(t, 0.3, 6).test != a.test);
        std::size_t pos = 0;
        for (auto r : a.test) pos += target[r] == 1;
        CHECK(std::abs(static_cast<double>(pos) - 6.0) <= 1.0);
        std::vector<bool> seen(100, false);
        for (auto r : a.train) seen[r] = true;
        for (auto r : a.test) {
            CHECK_FALSE(seen[r]);
            seen[r] = true;
        }
        for (bool s : seen) CHECK(s);
        const auto parts = train_test_split(t, 0.3, 5);
        CHECK(parts.train.rows() == 70);
        CHECK(parts.test.rows() == 30);
        CHECK_THROWS_AS(split_indices(t, 1.0, 5), UsageError);
    }
}

TEST_SUITE("encoding") {
    TEST_CASE("design width and carried columns") {
        const auto t = toy_table();
        const auto m = encode(t, true);
        CHECK(m.values.cols() == 1 + 3);
        CHECK(m.encoding.design_name(1) == "c=x");
        CHECK(m.carried.size() == 2);
        const auto g = m.carried_column(2);
        for (std::size_t r = 0; r < t.rows(); ++r) CHECK(g[r] == t.cell(r, 2));
    }

    TEST_CASE("standardization uses the population sd") {
        const auto m = encode(numeric_table({2, 4, 6}), true);
        const double s = std::sqrt(8.0 / 3.0);
        CHECK(m.values(0, 0) == doctest::Approx(-2 / s).epsilon(1e-12));
        CHECK(m.values(1, 0) == doctest::Approx(0.0));
        CHECK(m.values(2, 0) == doctest::Approx(2 / s).epsilon(1e-12));
        CHECK(std::abs(m.values(0, 0) + 1.2247) < 1e-4);
        const auto flat = encode(numeric_table({5, 5, 5}), true);
        CHECK(flat.encoding.scale[0] == 1.0);
    }

    TEST_CASE("decode(encode(t)) == t") {
        const auto t = toy_table();
        const auto back = decode(encode(t, true));
        REQUIRE(back.rows() == t.rows());
        for (std::size_t c = 0; c < t.cols(); ++c) {
            for (std::size_t r = 0; r < t.rows(); ++r) CHECK(std::abs(back.cell(r, c) - t.cell(r, c)) <= 1e-9);
        }
    }

    TEST_CASE("one-hot argmax and ties") {
        const auto t = DataTable({categorical_column("c", {"a", "b", "c"})}, {{0, 1, 2}});
        const auto enc = fit_encoding(t);
        Matrix v(2, 3);
        v << 0.2, 0.7, 0.1, 0.5, 0.5, 0.0;
        const auto out = decode(v, enc, {});
        CHECK(out.label(0, 0) == "b");
        CHECK(out.label(1, 0) == "a");
    }

    TEST_CASE("missing cells") {
        const auto t = DataTable({numeric_column("n"), categorical_column("c", {"a", "b"}), binary_column("b")},
                                 {{1, kMissing, 3}, {0, kMissing, 1}, {1, 1, kMissing}});
        const auto m = encode(t, false);
        CHECK(m.values(1, 0) == 2.0);  // fitting mean
        // c: a, b, missing slot
        CHECK(m.values.cols() == 1 + 3 + 1);
        CHECK(m.values(1, 3) == 1.0);
        CHECK(m.values(2, 4) == 1.0);  // binary rate 1
    }

    TEST_CASE("encoding json round trip") {
        const auto t = toy_table();
        const auto enc = fit_encoding(t);
        const auto back = encoding_from_json(encoding_to_json(enc));
        CHECK(encode(t, back).values == encode(t, enc).values);
    }

    TEST_CASE("unseen categories and drop columns are rejected") {
        const auto t = toy_table();
        const auto enc = fit_encoding(t);
        auto schema = t.schema();
        schema[1].categories.push_back("w");
        std::vector<std::vector<double>> cols;
        for (std::size_t c = 0; c < t.cols(); ++c) cols.emplace_back(t.column(c).begin(), t.column(c).end());
        CHECK_THROWS_AS(encode(DataTable(schema, cols), enc), DataError);
        CHECK_THROWS_AS(encode(t.with_role("a", ColumnRole::Drop), true), DataError);
    }
}
