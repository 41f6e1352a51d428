#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sacmil/param_store.hpp"

using namespace sacmil;

TEST_CASE("param store keeps creation order and co-shaped grads") {
    ParamStore<double> store;
    Rng rng(1);
    store.create("w", glorot<double>(3, 2, rng));
    store.create("b", zeros<double>({2}));
    CHECK_THROWS_AS(store.create("w", zeros<double>({1})), ContractError);

    std::vector<std::string> names;
    for (auto& [name, t] : store) {
        names.push_back(name);
        CHECK(t->grad.size() == t->data.size());
    }
    CHECK(names == std::vector<std::string>{"w", "b"});
    CHECK(store.value_count() == 8);
}

TEST_CASE("adam zero gradients is the identity") {
    ParamStore<double> store;
    Rng rng(2);
    auto w = store.create("w", randn<double>({4, 4}, rng));
    auto before = w->data;
    Adam<double> adam(store, {});
    for (int i = 0; i < 5; ++i) adam.step(store);
    CHECK(w->data == before);
    CHECK(adam.steps() == 5);
}

TEST_CASE("first adam step is -lr * g / (|g| + eps)") {
    ParamStore<double> store;
    auto w = store.create("w", tensor<double>({3}, {1.0, -2.0, 0.5}));
    AdamConfig cfg;
    cfg.lr = 1e-2;
    Adam<double> adam(store, cfg);
    const std::vector<double> g{0.3, -0.7, 0.0};
    w->grad = g;
    const auto before = w->data;
    adam.step(store);
    for (std::size_t i = 0; i < 3; ++i) {
        const double expect = -cfg.lr * g[i] / (std::fabs(g[i]) + cfg.eps);
        CHECK(w->data[i] - before[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    // gradients zeroed after the step
    for (auto gv : w->grad) CHECK(gv == 0.0);
}

TEST_CASE("lr = 0 leaves parameters unchanged") {
    ParamStore<double> store;
    Rng rng(3);
    auto w = store.create("w", randn<double>({5}, rng));
    auto before = w->data;
    AdamConfig cfg;
    cfg.lr = 0.0;
    Adam<double> adam(store, cfg);
    for (int i = 0; i < 10; ++i) {
        for (auto& gv : w->grad) gv = rng.normal();
        adam.step(store);
    }
    CHECK(w->data == before);
}

TEST_CASE("adam rejects layout drift") {
    ParamStore<double> store;
    store.create("w", zeros<double>({2}));
    Adam<double> adam(store, {});
    store.create("extra", zeros<double>({2}));
    CHECK_THROWS_AS(adam.step(store), ContractError);
}
