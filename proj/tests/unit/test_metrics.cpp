#include <doctest.h>

#include "../support/oracles.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/random.hpp"
#include "surveysim/metrics/distribution.hpp"
#include "surveysim/metrics/diversity.hpp"
#include "surveysim/metrics/fidelity.hpp"
#include "surveysim/metrics/records.hpp"
#include "surveysim/metrics/reliability.hpp"
#include "surveysim/metrics/tercile.hpp"

#include <cmath>
#include <map>
#include <sstream>

using namespace surveysim;
using namespace surveysim::metrics;

namespace {

std::vector<std::string> random_labels(Rng &rng, std::size_t n, const std::vector<std::string> &pool) {
    std::vector<std::string> out(n);
    for (auto &s : out) {
        s = pool[uniform_index(rng, pool.size())];
    }
    return out;
}

std::map<std::string, double> pmf(const std::vector<std::string> &labels) {
    std::map<std::string, double> m;
    for (const auto &l : labels) {
        m[l] += 1.0 / labels.size();
    }
    return m;
}

std::vector<double> normal_sample(Rng &rng, std::size_t n, double mean, double sd) {
    std::vector<double> out(n);
    for (auto &x : out) {
        x = mean + sd * standard_normal(rng);
    }
    return out;
}

} // namespace

TEST_CASE("discrete TVD agrees with the union-map oracle on random label sets") {
    Rng rng(11);
    const std::vector<std::string> pool_a{"a", "b", "c", "d"};
    const std::vector<std::string> pool_b{"c", "d", "e"};
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_labels(rng, 1 + uniform_index(rng, 40), pool_a);
        const auto b = random_labels(rng, 1 + uniform_index(rng, 40), trial % 2 ? pool_a : pool_b);
        const double got = tvd_discrete(DistributionSummary::from_labels(a), DistributionSummary::from_labels(b));
        CHECK(got == doctest::Approx(oracle::tvd_labels(pmf(a), pmf(b))).epsilon(1e-12));
    }
}

TEST_CASE("discrete TVD bounds and special cases") {
    const std::vector<std::string> a{"x", "x", "y"};
    const std::vector<std::string> disjoint{"z"};
    const auto pa = DistributionSummary::from_labels(a);
    CHECK(tvd_discrete(pa, pa) == 0.0);
    CHECK(tvd_discrete(pa, DistributionSummary::from_labels(disjoint)) == doctest::Approx(1.0));

    // Support labels with zero mass do not change the distance.
    const auto padded = DistributionSummary::from_labels(a, {"w", "x", "y"});
    CHECK(padded.mass_of("w") == 0.0);
    CHECK(tvd_discrete(padded, pa) == doctest::Approx(0.0));

    CHECK_THROWS_AS(DistributionSummary::from_masses({"a", "b"}, {0.5, 0.6}), std::invalid_argument);
}

TEST_CASE("discrete TVD is a metric on random triples") {
    Rng rng(5);
    const std::vector<std::string> pool{"1", "2", "3", "4", "5"};
    for (int trial = 0; trial < 300; ++trial) {
        const auto p = DistributionSummary::from_labels(random_labels(rng, 20, pool));
        const auto q = DistributionSummary::from_labels(random_labels(rng, 25, pool));
        const auto r = DistributionSummary::from_labels(random_labels(rng, 30, pool));
        CHECK(tvd_discrete(p, q) == doctest::Approx(tvd_discrete(q, p)));
        CHECK(tvd_discrete(p, r) <= tvd_discrete(p, q) + tvd_discrete(q, r) + 1e-12);
        CHECK(tvd_discrete(p, q) >= 0.0);
        CHECK(tvd_discrete(p, q) <= 1.0);
    }
}

TEST_CASE("binned TVD agrees with the edge-scanning oracle") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = normal_sample(rng, 50 + trial, 40.0, 15.0);
        const auto b = normal_sample(rng, 80, 55.0, 10.0);
        for (int k : {5, 50}) {
            CHECK(tvd_binned(a, b, k) == doctest::Approx(oracle::tvd_histogram(a, b, k)).epsilon(1e-12));
        }
    }
    // Integer-valued answers land exactly on edges; the last edge belongs to the last bin.
    std::vector<double> a, b;
    for (int i = 0; i <= 100; ++i) {
        a.push_back(i);
        b.push_back(i % 11 * 10);
    }
    CHECK(tvd_binned(a, b) == doctest::Approx(oracle::tvd_histogram(a, b, 50)).epsilon(1e-12));
}

TEST_CASE("binned TVD edge cases") {
    const std::vector<double> same{7.0, 7.0, 7.0};
    CHECK(tvd_binned(same, same) == 0.0);
    const std::vector<double> lo{0.0, 0.0}, hi{100.0};
    CHECK(tvd_binned(lo, hi) == doctest::Approx(1.0));
    const std::vector<double> empty;
    CHECK_THROWS_AS(tvd_binned(empty, same), UndefinedMetricError);

    const auto edges = equal_width_edges(0.0, 1.0, 3);
    REQUIRE(edges.size() == 4);
    CHECK(edges.back() == 1.0);
    CHECK(bin_index(1.0, edges) == 2);
    CHECK(bin_index(0.0, edges) == 0);
    CHECK(bin_index(edges[1], edges) == 1);
}

TEST_CASE("weighted F1 matches the hand-computed value and the confusion-matrix oracle") {
    const std::vector<std::string> gt{"A", "A", "B", "B"};
    const std::vector<std::string> pred{"A", "B", "A", "B"};
    CHECK(weighted_f1(gt, pred) == doctest::Approx(0.5));
    CHECK(weighted_f1(gt, gt) == doctest::Approx(1.0));

    Rng rng(3);
    const std::vector<std::string> pool{"Agree", "Neutral", "Disagree", "Other"};
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 60);
        const auto t = random_labels(rng, n, pool);
        const auto p = random_labels(rng, n, pool);
        CHECK(weighted_f1(t, p) == doctest::Approx(oracle::weighted_f1(t, p)).epsilon(1e-12));
    }
    const std::vector<std::string> none;
    CHECK_THROWS_AS(weighted_f1(none, none), UndefinedMetricError);
}

TEST_CASE("pearson correlation") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> y{2, 4, 6, 8, 10};
    const std::vector<double> ny{5, 4, 3, 2, 1};
    CHECK(pearson(x, y) == doctest::Approx(1.0));
    CHECK(pearson(x, ny) == doctest::Approx(-1.0));
    const std::vector<double> constant{3, 3, 3, 3, 3};
    CHECK_THROWS_AS(pearson(x, constant), UndefinedMetricError);

    // Independent draws: |r| stays near zero for large samples.
    Rng rng(99);
    const auto a = normal_sample(rng, 10000, 0, 1);
    const auto b = normal_sample(rng, 10000, 0, 1);
    CHECK(std::fabs(pearson(a, b)) < 0.05);
}

TEST_CASE("percentage change reproduces the published bootstrap table") {
    struct Row {
        double demo, survey, pct;
    };
    const std::vector<Row> rows{
        {0.514, 0.132, -74.3}, {0.321, 0.190, -40.8}, {0.456, 0.287, -37.1}, {0.606, 0.463, -23.6},
        {0.408, 0.340, -16.7}, {0.638, 0.145, -77.3}, {0.455, 0.263, -42.2}, {0.248, 0.280, 12.9},
        {0.293, 0.307, 4.8},   {0.248, 0.251, 1.2},   {0.469, 0.436, -7.0},  {0.494, 0.334, -32.4},
        {0.160, 0.108, -32.5}, {0.435, 0.284, -34.7}, {0.581, 0.374, -35.6},
    };
    for (const auto &r : rows) {
        CAPTURE(r.demo);
        CHECK(std::round(pct_change(r.demo, r.survey) * 10.0) / 10.0 == doctest::Approx(r.pct));
    }
    CHECK_THROWS_AS(pct_change(0.0, 0.3), std::domain_error);

    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        const double d = 0.01 + uniform01(rng);
        const double x = uniform_real(rng, -90.0, 90.0);
        CHECK(pct_change(d, d * (1 + x / 100)) == doctest::Approx(x).epsilon(1e-9));
    }
}

TEST_CASE("entropy of a uniform 7-point item is ln 7 and matches the column oracle") {
    std::vector<double> uniform7;
    for (int rep = 0; rep < 10; ++rep) {
        for (int v = 1; v <= 7; ++v) {
            uniform7.push_back(v);
        }
    }
    CHECK(item_entropy(uniform7) == doctest::Approx(std::log(7.0)));
    CHECK(item_entropy(uniform7, LogBase::base2) == doctest::Approx(std::log2(7.0)));
    const std::vector<double> constant(20, 4.0);
    CHECK(item_entropy(constant) == 0.0);
    CHECK(log_base_from_string("2") == LogBase::base2);

    Rng rng(4);
    Eigen::MatrixXd m(200, 6);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = 1 + static_cast<double>(uniform_index(rng, 2 + c));
        }
    }
    double expected = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::vector<double> col(m.col(c).data(), m.col(c).data() + m.rows());
        CHECK(item_entropy(col) == doctest::Approx(oracle::column_entropy(col)));
        expected += oracle::column_entropy(col);
    }
    CHECK(scale_entropy(m) == doctest::Approx(expected / m.cols()));
}

TEST_CASE("profile diversity counts distinct rows") {
    Eigen::MatrixXd m(5, 2);
    m << 1, 2, 1, 2, 3, 4, 1, 2, 5, 6;
    const auto d = profile_diversity(m);
    CHECK(d.unique_profiles == 3);
    CHECK(d.total == 5);
    CHECK(d.ratio == doctest::Approx(0.6));
    CHECK(d.top10_coverage == doctest::Approx(1.0));
    CHECK_THROWS_AS(profile_diversity(Eigen::MatrixXd(0, 2)), std::invalid_argument);
}

TEST_CASE("ICC(1) balanced formula and permutation null") {
    // Two groups, between-group mean square dominates.
    const std::vector<double> scores{1, 2, 3, 11, 12, 13};
    const std::vector<std::string> g{"a", "a", "a", "b", "b", "b"};
    const auto r = icc1(scores, g);
    // MSB = 3 * (5^2 + 5^2) / 1 = 150, MSW = (2 + 2) / 4 = 1.
    CHECK(r.ms_between == doctest::Approx(150.0));
    CHECK(r.ms_within == doctest::Approx(1.0));
    CHECK(r.avg_group_size == doctest::Approx(3.0));
    CHECK(r.icc == doctest::Approx(149.0 / 152.0));

    // Identical group means give a non-positive ICC.
    const std::vector<double> flat{1, 2, 3, 1, 2, 3};
    CHECK(icc1(flat, g).icc <= 1e-12);

    Rng rng(17);
    double total = 0.0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        const auto x = normal_sample(rng, 120, 50, 10);
        std::vector<std::string> labels(120);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            labels[i] = "g" + std::to_string(i % 6);
        }
        shuffle(std::span<std::string>(labels), rng);
        total += icc1(x, labels).icc;
    }
    CHECK(std::fabs(total / trials) < 0.05);

    const std::vector<std::string> one_group(6, "a");
    CHECK_THROWS_AS(icc1(scores, one_group), GroupingError);
    const std::vector<std::string> singleton{"a", "a", "a", "b", "b", "c"};
    CHECK_THROWS_AS(icc1(scores, singleton), GroupingError);
    const std::vector<double> same(6, 2.0);
    CHECK_THROWS_AS(icc1(same, g), UndefinedMetricError);
}

TEST_CASE("ICC(1) uses the effective group size for unbalanced groups") {
    const std::vector<double> scores{1, 2, 3, 4, 10, 12};
    const std::vector<std::string> g{"a", "a", "a", "a", "b", "b"};
    const auto r = icc1(scores, g);
    const double n0 = (6.0 - (16.0 + 4.0) / 6.0) / 1.0;
    CHECK(r.avg_group_size == doctest::Approx(n0));
    // Group means 2.5 and 11, grand mean 32/6.
    const double grand = 32.0 / 6.0;
    const double ssb = 4 * std::pow(2.5 - grand, 2) + 2 * std::pow(11 - grand, 2);
    const double ssw = (2.25 + 0.25 + 0.25 + 2.25) + 2.0;
    const double msb = ssb, msw = ssw / 4.0;
    CHECK(r.icc == doctest::Approx((msb - msw) / (msb + (n0 - 1) * msw)));
}

TEST_CASE("Cronbach alpha decomposition") {
    CHECK(standardized_alpha(6, 0.62) == doctest::Approx(0.9073).epsilon(1e-4));

    // Perfectly parallel items.
    Eigen::MatrixXd parallel(5, 3);
    for (int r = 0; r < 5; ++r) {
        parallel.row(r).setConstant(r + 1);
    }
    const auto p = cronbach(parallel);
    CHECK(p.alpha_raw == doctest::Approx(1.0));
    CHECK(p.alpha_std == doctest::Approx(1.0));

    // Hand-checked 4x3 example: item variances 1, 1, 1/3 ... computed directly below.
    Eigen::MatrixXd m(4, 3);
    m << 1, 2, 2, 2, 3, 2, 3, 3, 3, 4, 4, 3;
    auto var = [](const Eigen::VectorXd &v) {
        const double mean = v.mean();
        return (v.array() - mean).square().sum() / (v.size() - 1);
    };
    double sum_item_var = 0.0;
    for (int c = 0; c < 3; ++c) {
        sum_item_var += var(m.col(c));
    }
    const Eigen::VectorXd total = m.rowwise().sum();
    const double expected_raw = 3.0 / 2.0 * (1.0 - sum_item_var / var(total));
    const auto a = cronbach(m);
    CHECK(a.alpha_raw == doctest::Approx(expected_raw));
    CHECK(a.alpha_std == doctest::Approx(standardized_alpha(3, a.mean_inter_item_r)));

    // Listwise deletion.
    Eigen::MatrixXd with_nan = m;
    with_nan.conservativeResize(5, 3);
    with_nan.row(4) << 1, std::nan(""), 2;
    const auto b = cronbach(with_nan);
    CHECK(b.dropped == 1);
    CHECK(b.n == 4);
    CHECK(b.alpha_raw == doctest::Approx(a.alpha_raw));

    // Constant item names the offending column.
    Eigen::MatrixXd bad = m;
    bad.col(1).setConstant(3);
    const std::vector<std::string> names{"KFP1", "KFP2", "KFP3"};
    try {
        cronbach(bad, names);
        FAIL("expected CorrelationUndefinedError");
    } catch (const CorrelationUndefinedError &e) {
        CHECK(std::string(e.what()).find("KFP2") != std::string::npos);
    }

    // Independent items: standardized alpha near zero.
    Rng rng(12);
    Eigen::MatrixXd noise(10000, 5);
    for (Eigen::Index r = 0; r < noise.rows(); ++r) {
        for (Eigen::Index c = 0; c < noise.cols(); ++c) {
            noise(r, c) = standard_normal(rng);
        }
    }
    CHECK(std::fabs(cronbach(noise).alpha_std) < 0.05);
}

TEST_CASE("standardized alpha is increasing in k and r") {
    for (std::size_t k = 2; k < 20; ++k) {
        for (double r = 0.05; r < 0.95; r += 0.05) {
            CHECK(standardized_alpha(k + 1, r) > standardized_alpha(k, r));
            CHECK(standardized_alpha(k, r + 0.05) > standardized_alpha(k, r));
        }
    }
}

TEST_CASE("tercile means match direct filtering") {
    CHECK(tercile_of(33.33) == Tercile::low);
    CHECK(tercile_of(33.34) == Tercile::middle);
    CHECK(tercile_of(66.66) == Tercile::middle);
    CHECK(tercile_of(66.67) == Tercile::high);
    CHECK(tercile_of(-5) == Tercile::low);
    CHECK(tercile_of(140) == Tercile::high);
    CHECK(to_string(Tercile::middle) == "Middle");

    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> truth(150), pred(150);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            truth[i] = std::round(uniform_real(rng, 0, 100));
            pred[i] = std::round(uniform_real(rng, 20, 80));
        }
        const auto res = tercile_mean_validation(truth, pred);
        const double bounds[4] = {-1e300, 33.33, 66.66, 1e300};
        std::size_t n_truth = 0, n_pred = 0;
        for (int c = 0; c < 3; ++c) {
            int n1 = 0, n2 = 0;
            const double m1 = oracle::filtered_mean(truth, truth, bounds[c], c > 0, bounds[c + 1], &n1);
            const double m2 = oracle::filtered_mean(truth, pred, bounds[c], c > 0, bounds[c + 1], &n2);
            CHECK(res[c].n_by_truth == static_cast<std::size_t>(n1));
            CHECK(res[c].n_by_prediction == static_cast<std::size_t>(n2));
            if (n1) {
                CHECK(*res[c].mean_by_truth == doctest::Approx(m1));
            } else {
                CHECK_FALSE(res[c].mean_by_truth.has_value());
            }
            if (n2) {
                CHECK(*res[c].mean_by_prediction == doctest::Approx(m2));
            } else {
                CHECK_FALSE(res[c].mean_by_prediction.has_value());
            }
            n_truth += res[c].n_by_truth;
            n_pred += res[c].n_by_prediction;
        }
        CHECK(n_truth == truth.size());
        CHECK(n_pred == truth.size());
    }
}

TEST_CASE("metric records round-trip including missing values") {
    const std::vector<MetricRecord> recs{{"SHARE-FTP01", "demo7", "tvd", 0.469, 1000},
                                         {"FK01, euros", "survey", "f1", std::nan(""), 0}};
    std::stringstream ss;
    write_metric_records(ss, recs);
    const auto back = read_metric_records(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == recs[0]);
    CHECK(back[1].question == "FK01, euros");
    CHECK(std::isnan(back[1].value));

    std::stringstream bad("question,condition,metric,value,n\nq,c,m,abc,1\n");
    CHECK_THROWS_AS(read_metric_records(bad), ParseError);
}
