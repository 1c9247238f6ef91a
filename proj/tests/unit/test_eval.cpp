#include "facematch/eval/experiment.hpp"
#include "facematch/eval/folds.hpp"
#include "facematch/eval/report.hpp"
#include "facematch/eval/roc.hpp"
#include "synthetic_set.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

using namespace facematch;
using namespace facematch::eval;

namespace {

double brute_force_auc(const std::vector<double>& g, const std::vector<double>& i)
{
    double favorable = 0.0;
    for (double a : g)
        for (double b : i) favorable += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    return favorable / static_cast<double>(g.size() * i.size());
}

std::vector<double> random_scores(std::mt19937_64& rng, int n, double shift, bool ties)
{
    std::normal_distribution<double> d(shift, 1.0);
    std::vector<double> v;
    for (int k = 0; k < n; ++k) v.push_back(ties ? std::round(d(rng) * 4.0) / 4.0 : d(rng));
    return v;
}

std::vector<gml::PropertyRecord> random_records(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> age(5, 80), bmi(15, 40), g(-1, 1);
    std::vector<gml::PropertyRecord> out;
    for (int k = 0; k < n; ++k) {
        gml::PropertyRecord r{"r" + std::to_string(k), static_cast<int>(rng() % 2), age(rng), bmi(rng), {}};
        for (auto& x : r.gb) x = g(rng);
        out.push_back(r);
    }
    return out;
}

std::string slurp(const std::filesystem::path& p) { return read_file(p); }

} // namespace

TEST(Roc, HandCaseEightNinths)
{
    const auto r = roc({0.9, 0.8, 0.4}, {0.7, 0.3, 0.2});
    EXPECT_NEAR(r.auc, 8.0 / 9.0, 1e-12);
    EXPECT_NEAR(r.auc_trapezoid, 8.0 / 9.0, 1e-12);
}

TEST(Roc, PerfectAndExchangeable)
{
    const auto p = roc({3, 4, 5}, {0, 1, 2});
    EXPECT_DOUBLE_EQ(p.auc, 1.0);
    EXPECT_DOUBLE_EQ(p.eer, 0.0);
    const auto e = roc({1, 2, 2, 3}, {2, 3, 1, 2});
    EXPECT_DOUBLE_EQ(e.auc, 0.5);
}

TEST(Roc, TrapezoidMatchesMannWhitney)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const bool ties = trial % 2 == 0;
        const auto g = random_scores(rng, 5 + trial % 17, 0.8, ties);
        const auto i = random_scores(rng, 7 + trial % 23, 0.0, ties);
        const auto r = roc(g, i);
        EXPECT_NEAR(r.auc, r.auc_trapezoid, 1e-9);
        EXPECT_NEAR(r.auc, brute_force_auc(g, i), 1e-12);
    }
}

TEST(Roc, CurveIsMonotoneAndEerBalanced)
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto r = roc(random_scores(rng, 30, 1.0, trial % 3 == 0), random_scores(rng, 40, 0.0, trial % 3 == 0));
        EXPECT_EQ(r.fpr.front(), 0.0);
        EXPECT_EQ(r.tpr.back(), 1.0);
        EXPECT_EQ(r.fpr.back(), 1.0);
        for (std::size_t k = 1; k < r.tpr.size(); ++k) {
            EXPECT_LT(r.thresholds[k], r.thresholds[k - 1]);
            EXPECT_GE(r.tpr[k], r.tpr[k - 1]);
            EXPECT_GE(r.fpr[k], r.fpr[k - 1]);
        }
        EXPECT_LT(std::abs(r.eer - (1.0 - r.eer_tpr)), 1e-9);
        EXPECT_GE(r.eer, 0.0);
        EXPECT_LE(r.eer, 1.0);
    }
}

TEST(Roc, InvariantUnderStrictlyIncreasingTransforms)
{
    std::mt19937_64 rng(9);
    const auto g = random_scores(rng, 40, 0.7, true);
    const auto i = random_scores(rng, 60, 0.0, true);
    const auto base = roc(g, i);
    auto map = [](std::vector<double> v, auto f) {
        for (auto& x : v) x = f(x);
        return v;
    };
    for (auto f : {+[](double x) { return std::exp(x); }, +[](double x) { return 3.0 * x - 7.0; }}) {
        const auto t = roc(map(g, f), map(i, f));
        EXPECT_EQ(t.auc, base.auc);
        EXPECT_EQ(t.eer, base.eer);
        EXPECT_EQ(t.tpr, base.tpr);
        EXPECT_EQ(t.fpr, base.fpr);
    }
}

TEST(Roc, RejectsEmptyOrNonFinite)
{
    EXPECT_THROW(roc({}, {1.0}), ValidationError);
    EXPECT_THROW(roc({1.0}, {}), ValidationError);
    EXPECT_THROW(roc({std::nan("")}, {1.0}), ValidationError);
}

TEST(FoldPlan, HundredIdsSplitTenFiftyFourThirtySix)
{
    const auto plan = make_fold_plan(100, 3);
    ASSERT_EQ(plan.folds.size(), 10u);
    for (const auto& f : plan.folds) {
        EXPECT_EQ(f.test.size(), 10u);
        EXPECT_EQ(f.train1.size(), 54u);
        EXPECT_EQ(f.train2.size(), 36u);
    }
}

TEST(FoldPlan, PartitionProperties)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 30 + static_cast<int>(rng() % 300);
        const auto plan = make_fold_plan(n, rng());
        std::vector<int> tests;
        for (const auto& f : plan.folds) {
            tests.insert(tests.end(), f.test.begin(), f.test.end());
            std::set<int> all(f.test.begin(), f.test.end());
            all.insert(f.train1.begin(), f.train1.end());
            all.insert(f.train2.begin(), f.train2.end());
            EXPECT_EQ(all.size(), static_cast<std::size_t>(n));
            EXPECT_EQ(f.test.size() + f.train1.size() + f.train2.size(), static_cast<std::size_t>(n));
        }
        std::sort(tests.begin(), tests.end());
        ASSERT_EQ(tests.size(), static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) EXPECT_EQ(tests[static_cast<std::size_t>(k)], k);
    }
}

TEST(FoldPlan, SeededAndValidated)
{
    EXPECT_EQ(make_fold_plan(64, 5).folds[3].train1, make_fold_plan(64, 5).folds[3].train1);
    EXPECT_NE(make_fold_plan(64, 5).folds[3].test, make_fold_plan(64, 6).folds[3].test);
    EXPECT_THROW(make_fold_plan(29, 1), ValidationError);
}

TEST(TestClaims, GenuinePlusSampledImposters)
{
    const auto records = random_records(120, 4);
    const auto traits = fusion::parse_traits("all");
    const fusion::ImposterSetConfig cfg;
    const std::vector<int> test{3, 17, 40, 99};
    const auto claims = make_test_claims(test, records, traits, cfg, 10, 11);
    EXPECT_EQ(claims.pairs.size(), test.size() * 11);
    for (std::size_t s = 0; s < test.size(); ++s) {
        const auto* block = &claims.pairs[s * 11];
        EXPECT_EQ(block[0].subject, test[s]);
        EXPECT_EQ(block[0].claim, test[s]);
        EXPECT_EQ(block[0].label, 1);
        std::set<int> seen;
        for (int k = 1; k < 11; ++k) {
            EXPECT_EQ(block[k].label, 0);
            EXPECT_TRUE(fusion::is_imposter(records[static_cast<std::size_t>(test[s])], records[static_cast<std::size_t>(block[k].claim)], cfg, traits));
            seen.insert(block[k].claim);
        }
        EXPECT_EQ(seen.size(), 10u);
    }
    const auto again = make_test_claims(test, records, traits, cfg, 10, 11);
    for (std::size_t k = 0; k < claims.pairs.size(); ++k) EXPECT_EQ(again.pairs[k], claims.pairs[k]);
}

TEST(EvaluatePipeline, RandomScorerNearChanceOracleScorerPerfect)
{
    const auto records = random_records(400, 6);
    std::vector<int> test(200);
    std::iota(test.begin(), test.end(), 0);
    const auto traits = fusion::parse_traits("all");
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto random = evaluate_pipeline(test, records, traits, {}, 10, 1, [&](const std::vector<ClaimPair>& pairs) {
        Vector<double> s(static_cast<Eigen::Index>(pairs.size()));
        for (auto& x : s) x = u(rng);
        return s;
    });
    EXPECT_EQ(random.genuine.size(), 200u);
    EXPECT_EQ(random.imposter.size(), 2000u);
    EXPECT_GE(random.roc.auc, 0.4);
    EXPECT_LE(random.roc.auc, 0.6);
    const auto oracle = evaluate_pipeline(test, records, traits, {}, 10, 1, [](const std::vector<ClaimPair>& pairs) {
        Vector<double> s(static_cast<Eigen::Index>(pairs.size()));
        for (std::size_t i = 0; i < pairs.size(); ++i) s[static_cast<Eigen::Index>(i)] = pairs[i].label;
        return s;
    });
    EXPECT_DOUBLE_EQ(oracle.roc.auc, 1.0);
}

TEST(EvaluatePipeline, SubjectWithoutImpostersContributesGenuineOnly)
{
    auto records = random_records(3, 1);
    records[0].age = 30;
    records[1].age = 35;
    records[2].age = 42;
    const auto zero = [](const std::vector<ClaimPair>& pairs) { return Vector<double>::Zero(static_cast<Eigen::Index>(pairs.size())); };
    const auto result = evaluate_pipeline({0, 1}, records, fusion::parse_traits("age"), {}, 10, 1, zero);
    EXPECT_EQ(result.empty_imposter_sets, 1);
    EXPECT_EQ(result.genuine.size(), 2u);
    EXPECT_EQ(result.imposter.size(), 1u);
    EXPECT_THROW(evaluate_pipeline({1}, records, fusion::parse_traits("age"), {}, 10, 1, zero), ValidationError);
}

TEST(Statistics, SampleStd)
{
    const auto [m, s] = mean_and_sample_std({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(m, 2.5);
    EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(GbCorrelation, DiagonalSymmetryAndHandPearson)
{
    std::vector<gml::PropertyRecord> records;
    const double a[5] = {1, 2, 3, 4, 5};
    const double b[5] = {2, 1, 4, 3, 6};
    for (int k = 0; k < 5; ++k) {
        gml::PropertyRecord r{"r" + std::to_string(k), 0, 30, 25, {}};
        for (int c = 0; c < gml::gb_dims; ++c) r.gb[static_cast<std::size_t>(c)] = std::sin(1.3 * k + 0.7 * c) + 0.1 * c * k;
        r.gb[0] = a[k];
        r.gb[1] = b[k];
        records.push_back(r);
    }
    const auto m = gb_correlation_matrix(records);
    // mean a = 3, mean b = 3.2; sum of products 10, sum sq a 10, sum sq b 14.8.
    EXPECT_NEAR(m(0, 1), 10.0 / std::sqrt(10.0 * 14.8), 1e-12);
    for (int i = 0; i < gml::gb_dims; ++i) {
        EXPECT_EQ(m(i, i), 1.0);
        for (int j = 0; j < gml::gb_dims; ++j) EXPECT_EQ(m(i, j), m(j, i));
    }
    for (auto& r : records) r.gb[2] = 0.5;
    EXPECT_TRUE(std::isnan(gb_correlation_matrix(records)(2, 0)));
    EXPECT_THROW(gb_correlation_matrix({records[0], records[1]}), ValidationError);
}

namespace {

ExperimentConfig small_experiment()
{
    ExperimentConfig cfg;
    cfg.folds = 3;
    cfg.imposters_per_subject = 4;
    cfg.gml.epochs = 1;
    cfg.gml.channels = {4, 8};
    cfg.fusion.epochs = 3;
    cfg.fusion.hidden = {8};
    cfg.baseline.pca_dims = 5;
    cfg.baseline.solver.epochs = 20;
    cfg.baseline.fuser_rounds = 2;
    return cfg;
}

} // namespace

TEST(ExperimentMatrix, ShapeDeterminismAndOutputs)
{
    synth::SynthConfig sc;
    sc.n_subjects = 100;
    const auto set = fixtures::make_synthetic_set(sc);
    const ExperimentInput in{&set.shapes, &set.data.records, &set.topo};
    const ScopedLogSink quiet([](LogLevel, std::string_view) {});
    auto cfg = small_experiment();
    const auto a = run_experiment_matrix(in, cfg);
    EXPECT_EQ(a.rows.size(), 28u);
    for (const auto& row : a.rows) {
        EXPECT_EQ(row.fold_auc.size(), 3u);
        EXPECT_GE(row.auc_mean, 0.0);
        EXPECT_LE(row.auc_mean, 1.0);
    }
    cfg.jobs = 3;
    const auto b = run_experiment_matrix(in, cfg);
    const auto dir = std::filesystem::temp_directory_path() / "facematch_eval_test";
    std::filesystem::remove_all(dir);
    write_report(dir / "a", a, "d1");
    write_report(dir / "b", b, "d1");
    for (const char* f : {"table.csv", "table.md", "folds.csv", "roc.svg", "roc_gml_fusion_all_pooled.csv", "roc_pca_nb_sex_2.csv"}) {
        ASSERT_TRUE(std::filesystem::exists(dir / "a" / f)) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    const auto table = slurp(dir / "a" / "table.csv");
    EXPECT_EQ(table.rfind("# facematch table v1 config=d1\narchitecture,traits,auc_mean,auc_std,eer_mean,eer_std\n", 0), 0u);
    EXPECT_NE(table.find("GML+Fusion,sex+age+bmi,"), std::string::npos);
    const auto svg = slurp(dir / "a" / "roc.svg");
    EXPECT_NE(svg.find("stroke-dasharray=\"6,4\""), std::string::npos);
    const auto curve = read_roc_csv(dir / "a" / "roc_gml_fusion_all_pooled.csv");
    EXPECT_EQ(curve.fpr.front(), 0.0);
    EXPECT_EQ(curve.tpr.back(), 1.0);
    std::filesystem::remove_all(dir);
}

TEST(ExperimentMatrix, RejectsTooSmallTrainingPartition)
{
    synth::SynthConfig sc;
    sc.n_subjects = 30;
    const auto set = fixtures::make_synthetic_set(sc);
    auto cfg = small_experiment();
    cfg.baseline.pca_dims = 40;
    EXPECT_THROW(run_experiment_matrix({&set.shapes, &set.data.records, &set.topo}, cfg), ValidationError);
}
