#include "facematch/fusion/claims_io.hpp"
#include "facematch/fusion/fusion_net.hpp"
#include "facematch/fusion/imposter.hpp"
#include "facematch/nn/grad_check.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

using namespace facematch;
using namespace facematch::fusion;
using gml::PropertyRecord;
using nn::Tensor2;

namespace {

PropertyRecord rec(const std::string& id, int sex, double age, double bmi, std::array<double, 4> gb = {1, 1, 1, 1})
{
    PropertyRecord r{id, sex, age, bmi, {}};
    r.gb.fill(-0.3);
    for (int c = 0; c < 4; ++c) r.gb[c] = gb[c];
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

/// Direct transcription of the per-trait rules and their union.
bool oracle_imposter(const PropertyRecord& k, const PropertyRecord& x, const TraitSet& t)
{
    const bool sex = x.sex != k.sex;
    const bool age = std::abs(x.age - k.age) > 10.0;
    const bool bmi = std::abs(x.bmi - k.bmi) > 2.0;
    bool gb = false;
    for (int i = 0; i < 4; ++i) gb = gb || ((x.gb[i] > 0) != (k.gb[i] > 0));
    return (t.sex && sex) || (t.age && age) || (t.bmi && bmi) || (t.gb && gb);
}

std::vector<TraitSet> every_trait_subset()
{
    std::vector<TraitSet> out;
    for (int m = 1; m < 16; ++m) out.push_back({bool(m & 1), bool(m & 2), bool(m & 4), bool(m & 8)});
    return out;
}

/// Embeddings carrying the traits plus noise: columns sex, age/10, bmi/3, gb_1..gb_4.
Tensor2<double> signal_embeddings(const std::vector<PropertyRecord>& rs, double noise, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise);
    Tensor2<double> e(static_cast<Eigen::Index>(rs.size()), 7);
    for (std::size_t k = 0; k < rs.size(); ++k) {
        const auto& r = rs[k];
        e.row(static_cast<Eigen::Index>(k)) << r.sex + g(rng), r.age / 10 + g(rng), r.bmi / 3 + g(rng), r.gb[0] + g(rng),
            r.gb[1] + g(rng), r.gb[2] + g(rng), r.gb[3] + g(rng);
    }
    return e;
}

FusionConfig quick_config(int epochs)
{
    FusionConfig c;
    c.epochs = epochs;
    c.learning_rate = 3e-3;
    c.seed = 5;
    return c;
}

} // namespace

TEST(TraitSets, ParseAndName)
{
    EXPECT_EQ(parse_traits("sex,age,bmi,gb"), TraitSet::all());
    EXPECT_EQ(parse_traits("all").name(), "all");
    EXPECT_EQ(parse_traits("sex+age").name(), "sex+age");
    EXPECT_EQ(parse_traits("gb").name(), "gb");
    EXPECT_THROW(parse_traits("height"), ValidationError);
    EXPECT_EQ(experiment_trait_sets().size(), 7u);
}

TEST(ImposterSet, SexOnlyFemaleGetsAllMales)
{
    std::vector<PropertyRecord> c{rec("f1", 0, 30, 20), rec("m1", 1, 30, 20), rec("f2", 0, 31, 20), rec("m2", 1, 60, 30)};
    const auto k = rec("k", 0, 30, 20);
    EXPECT_EQ(imposter_set(k, c, {}, {true, false, false, false}), (std::vector<int>{1, 3}));
}

TEST(ImposterSet, AgeOnlyThresholdTen)
{
    const auto k = rec("k", 0, 25, 20);
    std::vector<PropertyRecord> c{rec("a", 0, 40, 20), rec("b", 0, 30, 20)};
    EXPECT_EQ(imposter_set(k, c, {}, {false, true, false, false}), (std::vector<int>{0}));
}

TEST(ImposterSet, HandBuiltRecordsMatchOracle)
{
    std::vector<PropertyRecord> rs{rec("a", 0, 25, 22.0, {1, 1, 1, 1}),  rec("b", 1, 26, 22.5, {1, 1, 1, 1}),
                                   rec("c", 0, 40, 21.0, {1, 1, 1, 1}),  rec("d", 0, 27, 25.0, {1, 1, 1, 1}),
                                   rec("e", 0, 24, 23.0, {1, 1, -1, 1}), rec("f", 0, 30, 23.9, {1, 1, 1, 1})};
    // Only f stays a non-imposter of a under all traits (|5| <= 10, |1.9| <= 2, same signs).
    EXPECT_EQ(imposter_set(rs[0], rs, {}, TraitSet::all()), (std::vector<int>{1, 2, 3, 4}));
    for (const auto& t : every_trait_subset()) {
        for (const auto& k : rs) {
            std::vector<int> expected;
            for (std::size_t i = 0; i < rs.size(); ++i)
                if (rs[i].id != k.id && oracle_imposter(k, rs[i], t)) expected.push_back(static_cast<int>(i));
            ASSERT_EQ(imposter_set(k, rs, {}, t), expected) << t.name() << " " << k.id;
        }
    }
}

TEST(ImposterSet, RandomPairsMatchOracleAndAreSymmetricAndMonotone)
{
    const auto rs = random_records(400, 77);
    const auto subsets = every_trait_subset();
    for (int p = 0; p < 200; ++p) {
        const auto& k = rs[2 * p];
        const auto& x = rs[2 * p + 1];
        for (const auto& t : subsets) {
            ASSERT_EQ(is_imposter(k, x, {}, t), oracle_imposter(k, x, t));
            ASSERT_EQ(is_imposter(k, x, {}, t), is_imposter(x, k, {}, t));
            for (const auto& u : subsets) {
                if (u.contains(t) && is_imposter(k, x, {}, t)) ASSERT_TRUE(is_imposter(k, x, {}, u));
            }
        }
    }
}

TEST(ImposterSet, GbUsesFirstFourComponentsByDefault)
{
    auto k = rec("k", 0, 30, 20);
    auto x = k;
    x.id = "x";
    x.gb[10] = -x.gb[10] + 1.0;
    EXPECT_FALSE(is_imposter(k, x, {}, {false, false, false, true}));
    x.gb[3] = -1.0;
    EXPECT_TRUE(is_imposter(k, x, {}, {false, false, false, true}));
    ImposterSetConfig two;
    two.gb_components = 3;
    EXPECT_FALSE(is_imposter(k, x, two, {false, false, false, true}));
}

TEST(TrainingPairs, TwoRowsPerSubjectAndAuditedImposters)
{
    const auto rs = random_records(50, 3);
    const auto t = TraitSet::all();
    const auto e = build_training_pairs(rs, {}, t, 9);
    ASSERT_EQ(e.empty_imposter_sets, 0);
    ASSERT_EQ(e.pairs.size(), 100u);
    int genuine = 0;
    for (const auto& p : e.pairs) {
        if (p.label == 1) {
            ++genuine;
            EXPECT_EQ(p.subject, p.claim);
        } else {
            EXPECT_TRUE(oracle_imposter(rs[p.subject], rs[p.claim], t));
        }
    }
    EXPECT_EQ(genuine, 50);
    EXPECT_EQ(build_training_pairs(rs, {}, t, 9).pairs, e.pairs);
    EXPECT_NE(build_training_pairs(rs, {}, t, 10).pairs, e.pairs);
}

TEST(TrainingPairs, EmptyImposterSetGivesGenuineOnly)
{
    std::vector<PropertyRecord> rs{rec("a", 0, 30, 20), rec("b", 0, 31, 20), rec("c", 1, 32, 20)};
    const auto e = build_training_pairs(rs, {}, {true, false, false, false}, 1);
    EXPECT_EQ(e.empty_imposter_sets, 0);
    const auto age = build_training_pairs(rs, {}, {false, true, false, false}, 1);
    EXPECT_EQ(age.empty_imposter_sets, 3);
    EXPECT_EQ(age.pairs.size(), 3u);
}

TEST(ClaimVector, LayoutAndStandardization)
{
    std::vector<PropertyRecord> rs{rec("a", 0, 20, 20), rec("b", 1, 40, 30)};
    auto e = fit_claim_encoder(rs, TraitSet::all(), 25);
    EXPECT_EQ(e.width(), 28);
    const auto v = e.encode(rs[1]);
    EXPECT_EQ(v[0], 1.0);
    EXPECT_NEAR(v[1], 10.0 / std::sqrt(200.0), 1e-12);
    EXPECT_EQ(v[3], 1.0);
    EXPECT_EQ(v[27], 0.0);
    EXPECT_EQ(fit_claim_encoder(rs, TraitSet::all(), 4).width(), 7);
    EXPECT_EQ(fit_claim_encoder(rs, {false, true, false, false}, 25).width(), 1);
}

TEST(FusionNetworkTest, GradientsMatchFiniteDifferences)
{
    auto net = make_fusion_network(5, {6, 4}, nn::Activation::elu, 3);
    Tensor2<double> x = Tensor2<double>::Random(7, 5);
    nn::Vector<double> y(7);
    y << 1, 0, 1, 1, 0, 0, 1;
    auto grads = zero_grads(net);
    auto views = parameter_views(net, grads);
    auto loss = [&]() { return nn::bce_loss(network_logits(net, x), y).loss; };
    auto fill = [&]() {
        NetworkCache cache;
        const auto logits = network_logits(net, x, &cache);
        network_backward(net, cache, nn::bce_loss(logits, y).grad_logits, grads);
    };
    EXPECT_LT(nn::grad_check(views, loss, fill).max_relative_error, 1e-6);
}

TEST(FusionNetworkTest, SeparableToyReachesFullAccuracy)
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 0.3);
    Tensor2<double> x(80, 2);
    nn::Vector<double> y(80);
    for (int i = 0; i < 80; ++i) {
        const double s = i % 2 ? 1.0 : -1.0;
        x.row(i) << s + g(rng), s + g(rng);
        y[i] = i % 2;
    }
    auto net = make_fusion_network(2, {64, 32}, nn::Activation::elu, 1);
    nn::AdamState<double> state;
    for (int e = 0; e < 100; ++e) network_epoch(net, state, x, y, 16, 1e-2, rng);
    const auto logits = network_logits(net, x);
    for (int i = 0; i < 80; ++i) EXPECT_EQ(logits[i] > 0, y[i] > 0.5);
}

TEST(FusionTrain, LearnsSignalAndGeneralizes)
{
    const auto train = random_records(300, 21);
    const auto test = random_records(200, 22);
    const auto emb = signal_embeddings(train, 0.3, 1);
    const auto test_emb = signal_embeddings(test, 0.3, 2);
    const auto r = train_fusion(emb, train, TraitSet::all(), quick_config(40));
    const auto& l = r.epochs;
    double recent = 0, earlier = 0;
    for (int k = 0; k < 5; ++k) {
        recent += l[l.size() - 1 - k].loss;
        earlier += l[l.size() - 6 - k].loss;
    }
    EXPECT_LE(recent, earlier);

    const auto pairs = build_training_pairs(test, r.model.config.imposters, TraitSet::all(), 99).pairs;
    const auto s = match_scores(r.model, test_emb, test, pairs);
    int correct = 0;
    double gen = 0, imp = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ASSERT_GE(s[i], 0.0);
        ASSERT_LE(s[i], 1.0);
        correct += (s[i] > 0.5) == (pairs[i].label == 1);
        (pairs[i].label ? gen : imp) += s[i];
    }
    EXPECT_GT(static_cast<double>(correct) / pairs.size(), 0.75);
    EXPECT_GT(gen, imp);
    const nn::RowVector<double> row = test_emb.row(3);
    EXPECT_EQ(match_score(r.model, row, test[5]), match_score(r.model, row, test[5]));
}

TEST(FusionTrain, FixedSeedReproducesCheckpointAndRoundTrips)
{
    const auto rs = random_records(60, 8);
    const auto emb = signal_embeddings(rs, 0.5, 3);
    auto a = train_fusion(emb, rs, {true, true, false, false}, quick_config(3));
    auto b = train_fusion(emb, rs, {true, true, false, false}, quick_config(3));
    const auto ja = fusion_to_json(a.model, a.epochs, "d");
    EXPECT_EQ(ja.dump(), fusion_to_json(b.model, b.epochs, "d").dump());
    const auto back = fusion_from_json(nn::Json::parse(ja.dump()));
    const auto pairs = build_training_pairs(rs, {}, back.traits, 1).pairs;
    EXPECT_EQ(match_scores(back, emb, rs, pairs), match_scores(a.model, emb, rs, pairs));
}

TEST(FusionTrain, WidthMismatchIsRejected)
{
    const auto rs = random_records(30, 8);
    const auto emb = signal_embeddings(rs, 0.5, 3);
    const auto r = train_fusion(emb, rs, TraitSet::all(), quick_config(1));
    const Tensor2<double> narrow = emb.leftCols(5);
    EXPECT_THROW(match_scores(r.model, narrow, rs, {{0, 0, 1}}), ValidationError);
    EXPECT_THROW(train_fusion(emb.topRows(10), rs, TraitSet::all(), quick_config(1)), ValidationError);
}

TEST(ClaimsIo, ClaimsAndScoresRoundTrip)
{
    const auto dir = std::filesystem::temp_directory_path() / "facematch_test_claims";
    std::filesystem::create_directories(dir);
    std::vector<Claim> claims{{"s1", "c1", 1, rec("c1", 1, 33.5, 22.25)}, {"s1", "c2", -1, rec("c2", 0, 50, 30)}};
    write_claims(dir / "claims.csv", claims, "d");
    const auto back = read_claims(dir / "claims.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].label, 1);
    EXPECT_EQ(back[1].label, -1);
    EXPECT_EQ(back[0].properties, claims[0].properties);
    write_scores(dir / "scores.csv", {{"s1", "c1", 0.25, 1}, {"s1", "c2", 0.125, -1}}, "d");
    const auto scores = read_scores(dir / "scores.csv");
    EXPECT_EQ(scores[1].score, 0.125);
    EXPECT_EQ(scores[1].label, -1);
    std::filesystem::remove_all(dir);
}
