#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sacmil/model.hpp"

using namespace sacmil;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.d_in = 6;
    cfg.dim = 16;
    cfg.k = 4;
    cfg.blocks = 2;
    cfg.lambda = 512.0;
    cfg.encoder = EncoderKind::prope;
    cfg.classes = 2;
    return cfg;
}

InstanceBag random_bag(Rng& rng, std::size_t n, std::size_t d, std::uint32_t label,
                       std::int32_t range = 600) {
    InstanceBag bag;
    bag.id = "test";
    bag.n = n;
    bag.d = d;
    bag.label = label;
    bag.features.resize(n * d);
    for (auto& v : bag.features) v = static_cast<float>(rng.normal());
    bag.coords.resize(n);
    std::set<std::pair<int,int>> seen;
    for (auto& c : bag.coords) {
        do {
            c.x = static_cast<std::int32_t>(rng.uniform_index(range));
            c.y = static_cast<std::int32_t>(rng.uniform_index(range));
        } while (!seen.insert({c.x, c.y}).second);
    }
    return bag;
}

}  // namespace

TEST_CASE("build_model is deterministic and counts parameters by the formula") {
    ModelConfig cfg;
    cfg.d_in = 64;
    cfg.dim = 32;
    cfg.k = 4;
    cfg.blocks = 3;
    cfg.classes = 2;
    auto a = build_model<float>(cfg, 9);
    auto b = build_model<float>(cfg, 9);
    for (auto ita = a.params->begin(), itb = b.params->begin(); ita != a.params->end();
         ++ita, ++itb)
        CHECK(ita->second->data == itb->second->data);

    // d_in*D + D + N*(2D + 2(D^2+D)) + D*C + C
    const std::size_t expect = 64 * 32 + 32 + 3 * (2 * 32 + 2 * (32 * 32 + 32)) + 32 * 2 + 2;
    CHECK(expect == 8674);
    CHECK(a.params->value_count() == expect);

    auto c = build_model<float>(cfg, 10);
    bool any_diff = false;
    for (auto ita = a.params->begin(), itc = c.params->begin(); ita != a.params->end();
         ++ita, ++itc)
        any_diff = any_diff || ita->second->data != itc->second->data;
    CHECK(any_diff);
}

TEST_CASE("config validation names the violated constraint") {
    ModelConfig cfg = tiny_config();
    cfg.dim = 30;
    cfg.k = 4;
    CHECK_THROWS_WITH_AS(build_model<float>(cfg, 0), doctest::Contains("divisible"), ConfigError);
    cfg.dim = 15;
    CHECK_THROWS_AS(build_model<float>(cfg, 0), ConfigError);
    cfg = tiny_config();
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(build_model<float>(cfg, 0), ConfigError);
}

TEST_CASE("forward shape contract and width mismatch") {
    Rng rng(61);
    auto model = build_model<float>(tiny_config(), 3);
    auto bag = random_bag(rng, 11, 6, 1);
    auto out = forward(model, bag);
    CHECK(out.logits->shape == std::vector<std::size_t>{2});
    CHECK(out.instance_scores.size() == 11);
    for (double s : out.instance_scores) CHECK(s > 0.0);

    auto bad = random_bag(rng, 5, 7, 0);
    CHECK_THROWS_AS(forward(model, bad), ContractError);
}

TEST_CASE("padded length must stay compatible with the region schedule") {
    // k=4, blocks=2: L = 24 is neither a multiple of 16 nor below it
    Rng rng(63);
    auto model = build_model<float>(tiny_config(), 5);
    auto bag = random_bag(rng, 23, 6, 1);
    CHECK_THROWS_WITH_AS(forward(model, bag), doctest::Contains("not padded"), ContractError);
}

TEST_CASE("forward is bitwise invariant under input row shuffles") {
    Rng rng(67);
    auto model = build_model<float>(tiny_config(), 5);
    auto bag = random_bag(rng, 30, 6, 1, 50);
    auto base = forward(model, bag);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<std::size_t> perm(bag.n);
        for (std::size_t i = 0; i < bag.n; ++i) perm[i] = i;
        rng.shuffle(perm);
        InstanceBag shuffled = bag;
        for (std::size_t i = 0; i < bag.n; ++i) {
            shuffled.coords[i] = bag.coords[perm[i]];
            for (std::size_t j = 0; j < bag.d; ++j)
                shuffled.features[i * bag.d + j] = bag.features[perm[i] * bag.d + j];
        }
        auto out = forward(model, shuffled);
        CHECK(out.logits->data == base.logits->data);
        // scores follow the rows
        for (std::size_t i = 0; i < bag.n; ++i)
            CHECK(out.instance_scores[i] == base.instance_scores[perm[i]]);
    }
}

TEST_CASE("scaling all pixel coordinates leaves prope logits bitwise unchanged") {
    Rng rng(71);
    auto model = build_model<float>(tiny_config(), 7);
    auto bag = random_bag(rng, 14, 6, 1);
    auto base = forward(model, bag);
    for (std::int32_t factor : {2, 3, 10, 1000}) {
        InstanceBag scaled = bag;
        for (auto& c : scaled.coords) {
            c.x *= factor;
            c.y *= factor;
        }
        auto out = forward(model, scaled);
        CHECK(out.logits->data == base.logits->data);
    }
}

TEST_CASE("pads contribute nothing to the pooled mean") {
    // n = k gives one full region; n = k-1 pads one slot duplicating the
    // center. Pooling must average exactly the n real rows in both cases.
    ModelConfig cfg = tiny_config();
    cfg.encoder = EncoderKind::none;
    cfg.blocks = 1;
    auto model = build_model<double>(cfg, 11);
    Rng rng(73);
    auto bag = random_bag(rng, 3, 6, 1);  // k = 4 -> one pad slot

    const Partition part = make_partition(bag.coords, cfg.k);
    REQUIRE(part.arranged_len() == 4);
    REQUIRE(std::count(part.pad_mask.begin(), part.pad_mask.end(), true) == 1);

    // drive the pipeline manually up to the pooled vector, with pads masked
    auto arranged = arrange_rows(bag.features, bag.d, part);
    std::vector<double> vals(arranged.begin(), arranged.end());
    auto x = tensor<double>({4, 6}, vals);
    auto h = gelu(add_bias(matmul(x, model.reducer_w), model.reducer_b));
    auto specs = region_schedule(cfg.k, cfg.blocks, 4);
    h = sac_block_forward(h, model.blocks[0], specs[0], cfg.residual);
    std::vector<bool> keep(4);
    for (std::size_t s = 0; s < 4; ++s) keep[s] = !part.pad_mask[s];
    auto pooled = masked_mean_rows(h, keep);
    // mean over exactly the 3 non-pad rows
    for (std::size_t j = 0; j < cfg.dim; ++j) {
        double manual = 0.0;
        std::size_t cnt = 0;
        for (std::size_t s = 0; s < 4; ++s) {
            if (part.pad_mask[s]) continue;
            manual += h->data[s * cfg.dim + j];
            ++cnt;
        }
        CHECK(cnt == 3);
        CHECK(pooled->data[j] == doctest::Approx(manual / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("training is deterministic and lr = 0 freezes parameters") {
    Rng rng(79);
    std::vector<InstanceBag> bags;
    for (int i = 0; i < 4; ++i) bags.push_back(random_bag(rng, 9, 6, i % 2 ? 1 : 0));

    TrainHyper hyper;
    hyper.lr = 1e-3;
    hyper.epochs = 3;
    hyper.seed = 2;

    auto m1 = build_model<float>(tiny_config(), 21);
    auto m2 = build_model<float>(tiny_config(), 21);
    auto r1 = train(m1, bags, hyper);
    auto r2 = train(m2, bags, hyper);
    CHECK(r1.loss_curve == r2.loss_curve);
    for (auto i1 = m1.params->begin(), i2 = m2.params->begin(); i1 != m1.params->end();
         ++i1, ++i2)
        CHECK(i1->second->data == i2->second->data);

    auto frozen = build_model<float>(tiny_config(), 21);
    std::vector<std::vector<float>> before;
    for (auto& [n, p] : *frozen.params) before.push_back(p->data);
    TrainHyper zero = hyper;
    zero.lr = 0.0;
    train(frozen, bags, zero);
    std::size_t idx = 0;
    for (auto& [n, p] : *frozen.params) CHECK(p->data == before[idx++]);
}

TEST_CASE("single-class training set is rejected") {
    Rng rng(83);
    std::vector<InstanceBag> bags{random_bag(rng, 8, 6, 1), random_bag(rng, 8, 6, 1)};
    auto model = build_model<float>(tiny_config(), 1);
    TrainHyper hyper;
    hyper.epochs = 1;
    CHECK_THROWS_AS(train(model, bags, hyper), ContractError);
}

TEST_CASE("two separable bags overfit to training accuracy 1.0") {
    Rng rng(89);
    auto pos = random_bag(rng, 12, 6, 1);
    auto neg = random_bag(rng, 12, 6, 0);
    // separable: construct opposite mean shifts
    for (std::size_t i = 0; i < pos.features.size(); ++i) pos.features[i] += 1.5f;
    for (std::size_t i = 0; i < neg.features.size(); ++i) neg.features[i] -= 1.5f;
    std::vector<InstanceBag> bags{pos, neg};

    auto model = build_model<float>(tiny_config(), 31);
    TrainHyper hyper;
    hyper.lr = 1e-4;
    hyper.epochs = 200;
    hyper.seed = 4;
    auto result = train(model, bags, hyper);
    auto report = evaluate(model, bags);
    CHECK(report.accuracy == 1.0);
    REQUIRE(report.auc.has_value());
    CHECK(*report.auc == 1.0);

    // smoothed loss is monotonically non-increasing after epoch 20
    auto smooth = [&](std::size_t e) {
        double acc = 0.0;
        for (std::size_t i = e; i < e + 5; ++i) acc += result.loss_curve[i];
        return acc / 5.0;
    };
    for (std::size_t e = 20; e + 10 < result.loss_curve.size(); ++e)
        CHECK(smooth(e + 5) <= smooth(e) + 1e-9);
}

TEST_CASE("evaluate fixed cases") {
    Rng rng(97);
    std::vector<InstanceBag> bags;
    for (int i = 0; i < 10; ++i) bags.push_back(random_bag(rng, 7, 6, i < 5 ? 0 : 1));

    // constant-logit model: accuracy = majority fraction, auc = 0.5
    ModelConfig cfg = tiny_config();
    auto model = build_model<float>(cfg, 41);
    for (auto& [name, p] : *model.params)
        std::fill(p->data.begin(), p->data.end(), 0.0f);
    auto report = evaluate(model, bags);
    CHECK(report.accuracy == 0.5);
    REQUIRE(report.auc.has_value());
    CHECK(*report.auc == 0.5);

    // single-class bags: auc undefined, acc/f1 still reported
    std::vector<InstanceBag> ones(bags.begin() + 5, bags.end());
    auto partial = evaluate(model, ones);
    CHECK_FALSE(partial.auc.has_value());
    CHECK(partial.accuracy == 0.0);
}

TEST_CASE("kfold split is stratified, disjoint and covering") {
    Rng rng(101);
    std::vector<InstanceBag> bags;
    for (int i = 0; i < 10; ++i) bags.push_back(random_bag(rng, 5, 6, i < 5 ? 0 : 1));

    auto folds = kfold_split(bags, 5, 3);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> all_test;
    for (auto& [train_ids, test_ids] : folds) {
        CHECK(test_ids.size() == 2);
        std::size_t pos = 0;
        for (auto i : test_ids) pos += bags[i].label;
        CHECK(pos == 1);  // one positive + one negative per fold
        for (auto i : test_ids) CHECK(all_test.insert(i).second);
        CHECK(train_ids.size() + test_ids.size() == bags.size());
    }
    CHECK(all_test.size() == bags.size());

    auto again = kfold_split(bags, 5, 3);
    for (std::size_t f = 0; f < 5; ++f) {
        CHECK(folds[f].first == again[f].first);
        CHECK(folds[f].second == again[f].second);
    }

    CHECK_THROWS_AS(kfold_split(bags, 11, 0), ContractError);
}
