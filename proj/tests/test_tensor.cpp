#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sacmil/gradcheck.hpp"
#include "sacmil/tensor.hpp"

using namespace sacmil;

TEST_CASE("matmul values") {
    auto I = tensor<double>({2, 2}, {1, 0, 0, 1});
    auto B = tensor<double>({2, 2}, {3, 4, 5, 6});
    auto C = matmul(I, B);
    CHECK(C->data == std::vector<double>{3, 4, 5, 6});

    auto s = matmul(tensor<double>({1, 1}, {2}), tensor<double>({1, 1}, {7}));
    CHECK(s->data[0] == 14.0);

    // hand-expanded dot products
    auto D = matmul(tensor<double>({2, 2}, {1, 2, 3, 4}), tensor<double>({2, 2}, {5, 6, 7, 8}));
    CHECK(D->data == std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("matmul shape error names both shapes") {
    auto A = tensor<double>({2, 3}, std::vector<double>(6, 0.0));
    auto B = tensor<double>({2, 2}, std::vector<double>(4, 0.0));
    CHECK_THROWS_WITH_AS(matmul(A, B), doctest::Contains("[2x3]"), ContractError);
}

TEST_CASE("gelu fixed points") {
    auto z = gelu(tensor<double>({1}, {0.0}));
    CHECK(z->data[0] == 0.0);
    auto big = gelu(tensor<double>({1}, {10.0}));
    CHECK(std::fabs(big->data[0] - 10.0) < 1e-6);
    // x * Phi(x) at x = 1
    auto one = gelu(tensor<double>({1}, {1.0}));
    CHECK(one->data[0] == doctest::Approx(0.841345).epsilon(1e-5));
}

TEST_CASE("layer_norm standardizes rows") {
    auto gamma = full<double>({4}, 1.0);
    auto beta = zeros<double>({4});
    auto constant_row = layer_norm(full<double>({1, 4}, 3.5), gamma, beta, 1e-5);
    for (auto v : constant_row->data) CHECK(std::fabs(v) < 1e-9);

    Rng rng(3);
    auto x = randn<double>({5, 4}, rng);
    auto y = layer_norm(x, gamma, beta, 1e-9);
    for (std::size_t i = 0; i < 5; ++i) {
        double mean = 0, var = 0;
        for (std::size_t j = 0; j < 4; ++j) mean += y->data[i * 4 + j];
        mean /= 4;
        for (std::size_t j = 0; j < 4; ++j) {
            double c = y->data[i * 4 + j] - mean;
            var += c * c;
        }
        var /= 4;
        CHECK(std::fabs(mean) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    }

    auto narrow = zeros<double>({2, 1});
    CHECK_THROWS_AS(layer_norm(narrow, full<double>({1}, 1.0), zeros<double>({1}), 1e-5),
                    ContractError);
}

TEST_CASE("softmax cross entropy values and simplex tangency") {
    auto uniform2 = softmax_cross_entropy(zeros<double>({2}, true), 0);
    CHECK(uniform2->data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    auto saturated = softmax_cross_entropy(tensor<double>({2}, {30.0, 0.0}), 0);
    CHECK(saturated->data[0] < 1e-9);

    CHECK_THROWS_AS(softmax_cross_entropy(zeros<double>({3}), 3), ContractError);

    // gradient lies on the probability simplex tangent plane
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        auto logits = randn<double>({5}, rng, true);
        softmax_cross_entropy(logits, static_cast<std::size_t>(rep % 5))->backward();
        double sum = 0;
        for (auto g : logits->grad) sum += g;
        CHECK(std::fabs(sum) < 1e-9);
    }
}

TEST_CASE("backward contract") {
    Rng rng(5);
    auto x = randn<double>({3, 2}, rng, true);

    SUBCASE("non-scalar root is rejected") {
        auto y = gelu(x);
        CHECK_THROWS_AS(y->backward(), ContractError);
    }
    SUBCASE("sum gradient is all ones") {
        sum_all(x)->backward();
        for (auto g : x->grad) CHECK(g == 1.0);
    }
    SUBCASE("function constant in x has zero gradient") {
        auto loss = sum_all(mul(x, zeros<double>(x->shape)));
        loss->backward();
        for (auto g : x->grad) CHECK(g == 0.0);
    }
    SUBCASE("second backward accumulates") {
        auto loss = sum_all(x);
        loss->backward();
        loss->grad[0] = 0.0;
        loss->backward();
        for (auto g : x->grad) CHECK(g == 2.0);
    }
}

TEST_CASE("chained matmul + gelu matches finite differences") {
    Rng rng(23);
    auto w2 = randn<double>({3, 1}, rng);
    auto build = [&](const TensorPtr<double>& aa, const TensorPtr<double>& bb) {
        return sum_all(matmul(gelu(matmul(aa, bb)), w2));
    };
    auto a = randn<double>({2, 4}, rng, true);
    auto b = randn<double>({4, 3}, rng, true);
    build(a, b)->backward();
    std::vector<double> flat(a->data), analytic(a->grad);
    flat.insert(flat.end(), b->data.begin(), b->data.end());
    analytic.insert(analytic.end(), b->grad.begin(), b->grad.end());
    auto f = [&](const std::vector<double>& v) {
        auto aa = tensor<double>({2, 4}, std::vector<double>(v.begin(), v.begin() + 8));
        auto bb = tensor<double>({4, 3}, std::vector<double>(v.begin() + 8, v.end()));
        return build(aa, bb)->data[0];
    };
    auto report = finite_diff_check(f, flat, analytic, 1e-3, 1e-4);
    CHECK(report.pass);
}

TEST_CASE("gradient soundness on 100 random instances per op") {
    Rng rng(77);
    auto check_unary = [&](auto op, std::vector<std::size_t> shape) {
        for (int rep = 0; rep < 100; ++rep) {
            auto w = randn<double>(shape, rng);
            auto x = randn<double>(shape, rng, true);
            sum_all(mul(op(x), w))->backward();
            std::vector<double> analytic(x->grad);
            auto f = [&](const std::vector<double>& v) {
                auto xs = tensor<double>(shape, v);
                return sum_all(mul(op(xs), w))->data[0];
            };
            auto report = finite_diff_check(f, x->data, analytic, 1e-3, 1e-4);
            REQUIRE(report.pass);
        }
    };
    check_unary([](const TensorPtr<double>& x) { return gelu(x); },
                std::vector<std::size_t>{3, 4});
    check_unary([](const TensorPtr<double>& x) {
        return layer_norm(x, full<double>({4}, 1.3), full<double>({4}, -0.2), 1e-5);
    }, std::vector<std::size_t>{3, 4});
}

TEST_CASE("finite_diff_check own oracle cases") {
    auto square = [](const std::vector<double>& v) { return v[0] * v[0]; };
    auto good = finite_diff_check(square, {3.0}, {6.0}, 1e-3, 1e-4);
    CHECK(good.pass);
    auto bad = finite_diff_check(square, {3.0}, {5.0}, 1e-3, 1e-4);
    CHECK_FALSE(bad.pass);
    CHECK(bad.max_rel_err == doctest::Approx(1.0 / 6.0).epsilon(1e-3));
}

TEST_CASE("seeded ops are bitwise deterministic") {
    auto run = [] {
        Rng rng(99);
        auto x = randn<float>({6, 8}, rng);
        auto w = uniform<float>({8, 8}, rng, -0.5, 0.5);
        auto y = gelu(matmul(x, w));
        return y->data;
    };
    auto a = run();
    auto b = run();
    CHECK(a == b);
}

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(tensor<double>({2, 2}, {1.0, 2.0, 3.0}), ContractError);
    CHECK_THROWS_AS(reshape(zeros<double>({4}), {3}), ContractError);
    auto r = reshape(tensor<double>({4}, {1, 2, 3, 4}), {2, 2});
    CHECK(r->shape == std::vector<std::size_t>{2, 2});
    CHECK(r->data == std::vector<double>{1, 2, 3, 4});
}
