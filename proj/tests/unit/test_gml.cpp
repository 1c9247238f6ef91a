#include "facematch/gml/encode.hpp"
#include "facematch/gml/train.hpp"
#include "facematch/gml/triplets.hpp"
#include "synthetic_set.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>
#include <set>

using namespace facematch;
using namespace facematch::gml;

namespace {

PropertyRecord rec(const std::string& id, int sex, double age, double bmi, double gb0 = 1.0)
{
    PropertyRecord r{id, sex, age, bmi, {}};
    r.gb.fill(0.5);
    r.gb[0] = gb0;
    return r;
}

std::vector<PropertyRecord> random_records(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> age(5, 80), bmi(15, 40), g(-1, 1);
    std::vector<PropertyRecord> out;
    for (int k = 0; k < n; ++k) {
        PropertyRecord r{"r" + std::to_string(k), static_cast<int>(rng() % 2), age(rng), bmi(rng), {}};
        for (auto& x : r.gb) x = g(rng);
        out.push_back(r);
    }
    return out;
}

synth::SynthConfig sex_only_config(int n)
{
    synth::SynthConfig c;
    c.n_subjects = n;
    c.sex_effect = 3.0;
    c.age_effect = c.bmi_effect = c.gb_effect = c.gb_minor_effect = 0.0;
    c.noise = 0.5;
    return c;
}

GmlConfig small_config(Property p, int epochs)
{
    GmlConfig c;
    c.property = p;
    c.epochs = epochs;
    c.batch_size = 16;
    c.channels = {8, 16};
    c.learning_rate = 3e-3;
    c.seed = 11;
    return c;
}

const fixtures::SyntheticSet& sex_set()
{
    static const auto s = fixtures::make_synthetic_set(sex_only_config(90));
    return s;
}

} // namespace

TEST(TripletRules, AgeThresholdTen)
{
    const Thresholds t;
    const auto a = rec("a", 0, 25, 20);
    EXPECT_TRUE(same_class(a, rec("b", 0, 30, 20), Property::age, -1, t));
    EXPECT_FALSE(same_class(a, rec("c", 0, 40, 20), Property::age, -1, t));
}

TEST(TripletRules, BmiThresholdTwo)
{
    const Thresholds t;
    const auto a = rec("a", 0, 25, 24.0);
    EXPECT_TRUE(same_class(a, rec("b", 0, 25, 25.9), Property::bmi, -1, t));
    EXPECT_FALSE(same_class(a, rec("c", 0, 25, 26.5), Property::bmi, -1, t));
}

TEST(TripletRules, SexAnchorPositivesAreSameSex)
{
    std::vector<PropertyRecord> rs{rec("m1", 1, 20, 20), rec("m2", 1, 30, 20), rec("m3", 1, 40, 20), rec("f1", 0, 20, 20),
                                   rec("f2", 0, 50, 20)};
    const auto r = mine_triplets(rs, Property::sex, {}, 400, 3);
    std::map<int, std::set<int>> pos, neg;
    for (const auto& t : r.triplets) {
        pos[t.anchor].insert(t.positive);
        neg[t.anchor].insert(t.negative);
    }
    EXPECT_EQ(pos[0], (std::set<int>{1, 2}));
    EXPECT_EQ(neg[0], (std::set<int>{3, 4}));
    EXPECT_EQ(pos[3], (std::set<int>{4}));
    EXPECT_EQ(neg[3], (std::set<int>{0, 1, 2}));
}

TEST(TripletMining, EveryTripletPassesAudit)
{
    const auto rs = random_records(60, 5);
    const Thresholds t;
    for (Property p : all_properties()) {
        for (int c : (p == Property::gb ? std::vector<int>{0, 7, 24} : std::vector<int>{-1})) {
            const auto r = mine_triplets(rs, p, t, 500, 17, c);
            ASSERT_EQ(r.triplets.size(), 500u);
            for (const auto& tr : r.triplets) {
                ASSERT_NE(tr.anchor, tr.positive);
                ASSERT_NE(tr.anchor, tr.negative);
                const auto& a = rs[tr.anchor];
                const auto& x = rs[tr.positive];
                const auto& y = rs[tr.negative];
                switch (p) {
                case Property::sex:
                    ASSERT_EQ(a.sex, x.sex);
                    ASSERT_NE(a.sex, y.sex);
                    break;
                case Property::age:
                    ASSERT_LE(std::abs(a.age - x.age), 10.0);
                    ASSERT_GT(std::abs(a.age - y.age), 10.0);
                    break;
                case Property::bmi:
                    ASSERT_LE(std::abs(a.bmi - x.bmi), 2.0);
                    ASSERT_GT(std::abs(a.bmi - y.bmi), 2.0);
                    break;
                case Property::gb:
                    ASSERT_EQ(a.gb[c] > 0, x.gb[c] > 0);
                    ASSERT_NE(a.gb[c] > 0, y.gb[c] > 0);
                    break;
                }
            }
        }
    }
}

TEST(TripletMining, DeterministicUnderSeed)
{
    const auto rs = random_records(40, 9);
    EXPECT_EQ(mine_triplets(rs, Property::age, {}, 100, 4).triplets, mine_triplets(rs, Property::age, {}, 100, 4).triplets);
    EXPECT_NE(mine_triplets(rs, Property::age, {}, 100, 4).triplets, mine_triplets(rs, Property::age, {}, 100, 5).triplets);
}

TEST(TripletMining, AnchorsWithoutNegativesAreSkippedAndCounted)
{
    std::vector<PropertyRecord> rs{rec("a", 0, 20, 20), rec("b", 0, 21, 20), rec("c", 0, 22, 20), rec("d", 0, 60, 20)};
    const auto sex = mine_triplets(rs, Property::sex, {}, 10, 1);
    EXPECT_TRUE(sex.triplets.empty());
    EXPECT_GT(sex.skipped_anchors, 0);
    // Anchor d has no positive within 10 years.
    const auto age = mine_triplets(rs, Property::age, {}, 50, 1);
    EXPECT_EQ(age.triplets.size(), 50u);
    EXPECT_GT(age.skipped_anchors, 0);
    for (const auto& t : age.triplets) EXPECT_NE(t.anchor, 3);
}

TEST(TripletMining, RejectsBadArguments)
{
    const auto rs = random_records(10, 1);
    EXPECT_THROW(mine_triplets(rs, Property::sex, {}, 0, 1), ValidationError);
    EXPECT_THROW(mine_triplets(rs, Property::gb, {}, 5, 1, 25), ValidationError);
    EXPECT_THROW(mine_triplets(rs, Property::age, Thresholds{0.0, 2.0}, 5, 1), ValidationError);
}

TEST(GbWeights, EqualAccuraciesGiveUniform)
{
    std::array<double, gb_dims> acc;
    acc.fill(0.8);
    for (double w : GbComponentWeights::from_accuracies(acc).weights()) EXPECT_NEAR(w, 1.0 / 25.0, 1e-15);
}

TEST(GbWeights, InverseAccuracyNormalization)
{
    auto w = GbComponentWeights::uniform();
    w.active.fill(false);
    w.active[3] = w.active[9] = true;
    w.accuracies[3] = 0.5;
    w.accuracies[9] = 1.0;
    const auto p = w.weights();
    EXPECT_NEAR(p[3], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(p[9], 1.0 / 3.0, 1e-15);
    EXPECT_EQ(p[0], 0.0);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 1000; ++k) {
        const int c = select_gb_component(w, rng);
        ASSERT_TRUE(c == 3 || c == 9);
    }
}

TEST(GbWeights, EpsilonFloorsZeroAccuracy)
{
    auto w = GbComponentWeights::uniform(0.05);
    w.active.fill(false);
    w.active[0] = w.active[1] = true;
    w.accuracies[0] = 0.0;
    w.accuracies[1] = 0.5;
    const auto p = w.weights();
    EXPECT_NEAR(p[0], 20.0 / 22.0, 1e-15);
}

TEST(GbWeights, FrequenciesPassChiSquare)
{
    std::array<double, gb_dims> acc;
    for (int c = 0; c < gb_dims; ++c) acc[c] = 0.3 + 0.025 * c;
    const auto w = GbComponentWeights::from_accuracies(acc);
    const auto p = w.weights();
    std::mt19937_64 rng(2024);
    const int draws = 100000;
    std::array<int, gb_dims> counts{};
    for (int k = 0; k < draws; ++k) ++counts[select_gb_component(w, rng)];
    double chi2 = 0.0;
    for (int c = 0; c < gb_dims; ++c) {
        const double e = draws * p[c];
        chi2 += (counts[c] - e) * (counts[c] - e) / e;
    }
    // 0.99 quantile of chi-square with 24 degrees of freedom.
    EXPECT_LT(chi2, 42.980);
}

TEST(GmlTrain, StrongSexEffectIsLearned)
{
    const auto& s = sex_set();
    auto cfg = small_config(Property::sex, 12);
    const auto r = train_gml(s.shapes, s.data.records, s.topo, cfg);
    ASSERT_EQ(r.epochs.size(), 12u);
    EXPECT_GT(r.epochs.back().train_satisfaction, 0.9);
    EXPECT_GE(r.epochs.back().heldout_satisfaction, 0.7);
    EXPECT_EQ(r.model.embedding_width(), 4);
}

TEST(GmlTrain, FixedSeedGivesIdenticalCheckpoints)
{
    const auto& s = sex_set();
    auto cfg = small_config(Property::age, 2);
    auto a = train_gml(s.shapes, s.data.records, s.topo, cfg);
    auto b = train_gml(s.shapes, s.data.records, s.topo, cfg);
    EXPECT_EQ(gml_to_json(a.model, a.epochs, "d").dump(), gml_to_json(b.model, b.epochs, "d").dump());
}

TEST(GmlTrain, GbWeightsFollowPreviousAccuracies)
{
    const auto& s = sex_set();
    auto cfg = small_config(Property::gb, 3);
    const auto r = train_gml(s.shapes, s.data.records, s.topo, cfg);
    EXPECT_EQ(r.model.embedding_width(), 8);
    for (double w : r.epochs[0].gb_weights) EXPECT_NEAR(w, 1.0 / 25.0, 1e-15);
    for (std::size_t e = 0; e < r.epochs.size(); ++e) {
        ASSERT_EQ(r.epochs[e].gb_accuracies.size(), 25u);
        if (e + 1 < r.epochs.size()) {
            std::array<double, gb_dims> acc;
            std::copy(r.epochs[e].gb_accuracies.begin(), r.epochs[e].gb_accuracies.end(), acc.begin());
            const auto expected = GbComponentWeights::from_accuracies(acc, 0.05).weights();
            for (int c = 0; c < gb_dims; ++c) EXPECT_DOUBLE_EQ(r.epochs[e + 1].gb_weights[c], expected[c]);
        }
    }
}

TEST(GmlTrain, RejectsMisalignedOrTinyInput)
{
    const auto& s = sex_set();
    auto cfg = small_config(Property::sex, 1);
    auto recs = s.data.records;
    recs.pop_back();
    EXPECT_THROW(train_gml(s.shapes, recs, s.topo, cfg), ValidationError);
    std::vector<std::vector<mesh::Vec3>> few(s.shapes.begin(), s.shapes.begin() + 5);
    std::vector<PropertyRecord> few_r(s.data.records.begin(), s.data.records.begin() + 5);
    EXPECT_THROW(train_gml(few, few_r, s.topo, cfg), ValidationError);
}

TEST(GmlEncode, ConcatenatesTwentyDimsDeterministically)
{
    const auto& s = sex_set();
    std::vector<GmlModel> models;
    for (Property p : all_properties()) models.push_back(train_gml(s.shapes, s.data.records, s.topo, small_config(p, 1)).model);
    const std::array<const GmlModel*, 4> ptrs{&models[0], &models[1], &models[2], &models[3]};
    const auto e1 = encode_dataset(ptrs, s.topo, s.shapes);
    const auto e2 = encode_dataset(ptrs, s.topo, s.shapes);
    EXPECT_EQ(e1.cols(), 20);
    EXPECT_EQ(e1, e2);
    for (int k = 0; k < 5; ++k) {
        const auto single = encode_dataset(ptrs, s.topo, {s.shapes[k]});
        for (int c = 0; c < 20; ++c) EXPECT_NEAR(single(0, c), e1(k, c), 1e-5 * (1.0 + std::abs(e1(k, c))));
    }
    const std::array<const GmlModel*, 4> swapped{&models[1], &models[0], &models[2], &models[3]};
    EXPECT_THROW(encode_dataset(swapped, s.topo, s.shapes), ValidationError);
}

TEST(GmlEncode, CheckpointRoundTrip)
{
    const auto& s = sex_set();
    auto r = train_gml(s.shapes, s.data.records, s.topo, small_config(Property::bmi, 1));
    const auto j = nn::Json::parse(gml_to_json(r.model, r.epochs, "x").dump());
    const auto back = gml_from_json(j, s.topo);
    EXPECT_EQ(encode_shapes(back, s.topo, s.shapes), encode_shapes(r.model, s.topo, s.shapes));
}

TEST(GmlEncode, EmbeddingCsvRoundTrip)
{
    EmbeddingTable t;
    t.ids = {"a", "b"};
    t.values = Tensor2<double>::Random(2, 20);
    const auto path = std::filesystem::temp_directory_path() / "facematch_test_embeddings.csv";
    write_embeddings(path, t, "d");
    const auto back = read_embeddings(path);
    EXPECT_EQ(back.ids, t.ids);
    EXPECT_EQ(back.values, t.values);
    std::filesystem::remove(path);
}
