// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tensor.hpp"

using namespace dgsa;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true, double scale = 1.0) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-scale, scale);
    return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("matmul identity and hand-multiplied product") {
    Tensor id = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor m = Tensor::from({2, 2}, {3.5, -1.25, 2, 7});
    Tensor out = matmul(id, m);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out.data()[i] == doctest::Approx(m.data()[i]));

    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from({2, 1}, {5, 6});
    Tensor c = matmul(a, b);
    CHECK(c.at(0, 0) == doctest::Approx(17.0));
    CHECK(c.at(1, 0) == doctest::Approx(39.0));
}

TEST_CASE("matmul rejects mismatched inner extents naming both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 2});
    try {
        matmul(a, b);
        FAIL("expected dimension error");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x2]") != std::string::npos);
    }
}

TEST_CASE("matmul associativity on random triples") {
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        Tensor a = random_tensor({4, 5}, rng, false);
        Tensor b = random_tensor({5, 3}, rng, false);
        Tensor c = random_tensor({3, 6}, rng, false);
        Tensor left = matmul(matmul(a, b), c);
        Tensor right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.size(); ++i) {
            const double denom = std::max(1.0, std::abs(left.data()[i]));
            CHECK(std::abs(left.data()[i] - right.data()[i]) / denom < 1e-10);
        }
    }
}

TEST_CASE("softmax rows: uniform, closed form, stabilized") {
    Tensor zeros = Tensor::zeros({1, 4});
    Tensor uniform = softmax_rows(zeros);
    for (double v : uniform.data()) CHECK(v == doctest::Approx(0.25));

    Tensor row = Tensor::from({1, 2}, {0.0, std::log(3.0)});
    Tensor sm = softmax_rows(row);
    CHECK(sm.data()[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sm.data()[1] == doctest::Approx(0.75).epsilon(1e-12));

    Tensor big = Tensor::from({1, 2}, {1000.0, 1000.0});
    Tensor smb = softmax_rows(big);
    CHECK(smb.data()[0] == doctest::Approx(0.5));
    CHECK(std::isfinite(smb.data()[1]));
}

TEST_CASE("softmax rejects NaN input") {
    Tensor bad = Tensor::from({1, 2}, {std::nan(""), 0.0});
    CHECK_THROWS_AS(softmax_rows(bad), NumericError);
}

TEST_CASE("softmax rows sum to one for random finite inputs") {
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t m = 1 + rng.uniform_index(6), n = 1 + rng.uniform_index(8);
        Tensor s = random_tensor({m, n}, rng, false, 30.0);
        Tensor sm = softmax_rows(s);
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += sm.at(i, j);
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("sigmoid values and symmetry") {
    CHECK(sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5));
    CHECK(std::abs(sigmoid(Tensor::scalar(50.0)).item() - 1.0) < 1e-15);
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.uniform(-8, 8);
        const double s = sigmoid(Tensor::scalar(x)).item() + sigmoid(Tensor::scalar(-x)).item();
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("elementwise: identity add, exp, silu closed forms") {
    Rng rng(5);
    Tensor t = random_tensor({3, 3}, rng, false);
    Tensor same = add(t, Tensor::zeros({3, 3}));
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(same.data()[i] == t.data()[i]);

    CHECK(exp(Tensor::scalar(0.0)).item() == doctest::Approx(1.0));
    CHECK(silu(Tensor::scalar(0.0)).item() == doctest::Approx(0.0));
    // silu(1) = 1 * sigma(1), evaluated independently
    const double sigma1 = 1.0 / (1.0 + std::exp(-1.0));
    CHECK(silu(Tensor::scalar(1.0)).item() == doctest::Approx(sigma1).epsilon(1e-12));
    CHECK(silu(Tensor::scalar(1.0)).item() == doctest::Approx(0.731058578630).epsilon(1e-9));
}

TEST_CASE("elementwise broadcast is scalar-or-equal only") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor v = Tensor::zeros({3});
    CHECK_THROWS_AS(add(a, v), DimensionError);
    // scalar operand is fine on either side
    CHECK(add(a, Tensor::scalar(2.0)).data()[0] == doctest::Approx(2.0));
    CHECK(mul(Tensor::scalar(3.0), a).size() == 6);
}

TEST_CASE("rmsnorm closed forms") {
    Tensor gain = Tensor::from({2}, {1.0, 1.0});
    Tensor a = rmsnorm(Tensor::from({2}, {2.0, 2.0}), gain, 1e-300);
    CHECK(a.data()[0] == doctest::Approx(1.0));
    CHECK(a.data()[1] == doctest::Approx(1.0));

    Tensor z = rmsnorm(Tensor::from({2}, {0.0, 0.0}), gain, 1e-6);
    CHECK(z.data()[0] == doctest::Approx(0.0));

    // mean of squares of [3,4] is 12.5
    Tensor b = rmsnorm(Tensor::from({2}, {3.0, 4.0}), gain, 1e-300);
    CHECK(b.data()[0] == doctest::Approx(3.0 / std::sqrt(12.5)).epsilon(1e-9));
    CHECK(b.data()[1] == doctest::Approx(4.0 / std::sqrt(12.5)).epsilon(1e-9));
    CHECK(b.data()[0] == doctest::Approx(0.848528).epsilon(1e-6));
    CHECK(b.data()[1] == doctest::Approx(1.131371).epsilon(1e-6));
}

TEST_CASE("dropout contracts") {
    Rng rng(42);
    Tensor x = random_tensor({10, 10}, rng, false);

    Rng r1(1);
    Tensor same = dropout(x, 0.0, true, r1);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(same.data()[i] == x.data()[i]);

    Tensor evald = dropout(x, 0.7, false, r1);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(evald.data()[i] == x.data()[i]);

    CHECK_THROWS_AS(dropout(x, 1.0, true, r1), ConfigError);

    // Monte-Carlo: survivor fraction and mean preservation on 1e5 elements
    Tensor ones = Tensor::full({100000}, 1.0);
    Rng r2(123);
    Tensor dropped = dropout(ones, 0.5, true, r2);
    std::size_t survivors = 0;
    double sum = 0.0;
    for (double v : dropped.data()) {
        if (v != 0.0) ++survivors;
        sum += v;
    }
    const double frac = double(survivors) / 100000.0;
    CHECK(frac > 0.49);
    CHECK(frac < 0.51);
    CHECK(std::abs(sum / 100000.0 - 1.0) < 0.02);

    // fully determined by seed
    Rng r3(77), r4(77);
    Tensor d1 = dropout(x, 0.3, true, r3);
    Tensor d2 = dropout(x, 0.3, true, r4);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(d1.data()[i] == d2.data()[i]);
}

TEST_CASE("cross entropy closed forms") {
    Tensor uniform = Tensor::zeros({1, 4});
    CHECK(cross_entropy(uniform, {2}).item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    Tensor confident = Tensor::from({1, 3}, {0.0, 50.0, 0.0});
    CHECK(cross_entropy(confident, {1}).item() < 1e-12);

    // -log(e^2 / (e^1 + e^2)) = log(1 + e^-1)
    Tensor two = Tensor::from({1, 2}, {1.0, 2.0});
    CHECK(cross_entropy(two, {1}).item() ==
          doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
    CHECK(cross_entropy(two, {1}).item() == doctest::Approx(0.313262).epsilon(1e-6));

    CHECK_THROWS_AS(cross_entropy(two, {2}), DataError);
    CHECK_THROWS_AS(cross_entropy(two, {-1}), DataError);
}

TEST_CASE("backward: leaf gradients, accumulation, diamond graphs") {
    Tensor x = Tensor::from({3}, {1.0, 2.0, 3.0}, true);
    backward(sum_all(x));
    CHECK(x.grad() == std::vector<double>{1.0, 1.0, 1.0});

    x.zero_grad();
    backward(sum_all(mul(x, x)));
    CHECK(x.grad() == std::vector<double>{2.0, 4.0, 6.0});

    // repeated calls without reset accumulate
    Tensor loss = sum_all(mul(x, x));
    x.zero_grad();
    backward(loss);
    backward(loss);
    CHECK(x.grad() == std::vector<double>{4.0, 8.0, 12.0});

    // diamond: loss = sum(x*x + x) -> dL/dx = 2x + 1, each node visited once
    x.zero_grad();
    backward(sum_all(add(mul(x, x), x)));
    CHECK(x.grad() == std::vector<double>{3.0, 5.0, 7.0});
}

TEST_CASE("backward rejects non-scalar losses") {
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    CHECK_THROWS_AS(backward(mul(x, x)), UsageError);
}

TEST_CASE("gradcheck: matmul sum against the tape") {
    Rng rng(19);
    Tensor a = random_tensor({5, 4}, rng);
    Tensor b = random_tensor({4, 6}, rng);
    auto f = [&]() { return sum_all(matmul(a, b)); };
    auto res = gradcheck(f, {a, b}, 1e-5, 1e-7);
    CHECK(res.pass);
    CHECK(res.max_rel_err < 1e-7);
}

TEST_CASE("gradcheck cross-validates against an independent finite difference") {
    // the product gradcheck and a test-local FD oracle must agree on matmul
    Rng rng(23);
    Tensor a = random_tensor({3, 3}, rng);
    Tensor b = random_tensor({3, 2}, rng, false);
    a.zero_grad();
    backward(sum_all(matmul(a, b)));
    const auto analytic = a.grad();

    auto f = [&](const oracle::Vec& flat) {
        double total = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                for (std::size_t k = 0; k < 3; ++k) total += flat[i * 3 + k] * b.at(k, j);
        return total;
    };
    const auto numeric = oracle::finite_diff(f, a.data(), 1e-6);
    for (std::size_t i = 0; i < analytic.size(); ++i)
        CHECK(analytic[i] == doctest::Approx(numeric[i]).epsilon(1e-7));
}

TEST_CASE("gradcheck degrades gracefully when the true gradient is zero") {
    Rng rng(29);
    Tensor s = random_tensor({4, 5}, rng);
    auto f = [&]() { return sum_all(softmax_rows(s)); };
    auto res = gradcheck(f, {s}, 1e-5, 1e-6);
    CHECK(res.pass);  // row sums are constant 1, so both sides are ~0
}

TEST_CASE("gradcheck flags a corrupted backward rule") {
    Rng rng(31);
    Tensor x = random_tensor({10}, rng);
    auto f = [&]() {
        Tensor y = scale(x, 2.0);
        // sabotage: gradient scaled by 1.9 instead of 2.0
        auto yn = y.node();
        auto xn = x.node();
        yn->backward = [yn = yn.get(), xn = xn.get()]() {
            xn->ensure_grad();
            for (std::size_t i = 0; i < yn->grad.size(); ++i)
                xn->grad[i] += 1.9 * yn->grad[i];
        };
        return sum_all(y);
    };
    auto res = gradcheck(f, {x}, 1e-5, 1e-4);
    CHECK_FALSE(res.pass);
}

TEST_CASE("gradcheck rejects nondeterministic functions") {
    int calls = 0;
    auto f = [&]() { return Tensor::scalar(static_cast<double>(++calls)); };
    CHECK_THROWS_AS(gradcheck(f, {}, 1e-5, 1e-6), NumericError);
}

TEST_CASE("per-op gradients match central finite differences on random inputs") {
    Rng rng(37);
    auto check_op = [&](const char* name, Shape shape,
                        const std::function<Tensor(const Tensor&)>& op, double scale_in = 1.0) {
        CAPTURE(name);
        Tensor x = random_tensor(shape, rng, true, scale_in);
        auto f = [&]() { return sum_all(op(x)); };
        auto res = gradcheck(f, {x}, 1e-5, 1e-6);
        CHECK(res.pass);
    };

    check_op("sigmoid", {10, 10}, [](const Tensor& x) { return sigmoid(x); });
    check_op("silu", {10, 10}, [](const Tensor& x) { return silu(x); });
    check_op("gelu", {10, 10}, [](const Tensor& x) { return gelu_tanh(x); });
    check_op("exp", {10, 10}, [](const Tensor& x) { return exp(x); });
    check_op("scale", {10, 10}, [](const Tensor& x) { return scale(x, -1.7); });
    check_op("add_scalar", {10, 10}, [](const Tensor& x) { return add_scalar(x, 0.3); });
    check_op("transpose", {10, 10}, [](const Tensor& x) { return transpose(x); });
    check_op("reshape", {10, 10}, [](const Tensor& x) { return reshape(x, {4, 25}); });
    check_op("softmax", {10, 10}, [](const Tensor& x) {
        // square the output so the row sums are no longer constant and the
        // gradient is nonzero
        Tensor sm = softmax_rows(x);
        return mul(sm, sm);
    });
    check_op("slice_cols", {10, 10}, [](const Tensor& x) { return slice_cols(x, 2, 7); });
    check_op("slice_rows", {10, 10}, [](const Tensor& x) { return slice_rows(x, 1, 9); });
    check_op("mean_rows", {10, 10}, [](const Tensor& x) { return mean_rows(x); });

    {
        Tensor x = random_tensor({10, 10}, rng);
        Tensor y = random_tensor({10, 10}, rng);
        auto f = [&]() { return sum_all(mul(sigmoid(x), y)); };
        CHECK(gradcheck(f, {x, y}, 1e-5, 1e-6).pass);
    }
    {
        // scalar broadcast both ways
        Tensor x = random_tensor({10, 10}, rng);
        Tensor s = random_tensor({1}, rng);
        auto f = [&]() { return sum_all(add(mul(x, s), sub(s, x))); };
        CHECK(gradcheck(f, {x, s}, 1e-5, 1e-6).pass);
    }
    {
        Tensor x = random_tensor({8, 6}, rng);
        Tensor g = random_tensor({6}, rng, true, 0.5);
        auto f = [&]() { return sum_all(mul(rmsnorm(x, add_scalar(g, 1.0)), x)); };
        CHECK(gradcheck(f, {x, g}, 1e-5, 1e-6).pass);
    }
    {
        Tensor a = random_tensor({7, 5}, rng);
        Tensor s = random_tensor({7}, rng);
        auto f = [&]() { return sum_all(mul(row_scale(a, s), a)); };
        CHECK(gradcheck(f, {a, s}, 1e-5, 1e-6).pass);
    }
    {
        Tensor a = random_tensor({7, 5}, rng);
        Tensor b = random_tensor({5}, rng);
        auto f = [&]() { return sum_all(sigmoid(add_bias(a, b))); };
        CHECK(gradcheck(f, {a, b}, 1e-5, 1e-6).pass);
    }
    {
        Tensor table = random_tensor({6, 4}, rng);
        const std::vector<int> ids{0, 3, 3, 5, 1};
        auto f = [&]() { return sum_all(mul(gather_rows(table, ids), gather_rows(table, ids))); };
        CHECK(gradcheck(f, {table}, 1e-5, 1e-6).pass);
    }
    {
        Tensor a = random_tensor({4, 3}, rng);
        Tensor b = random_tensor({2, 3}, rng);
        Tensor c = random_tensor({4, 2}, rng);
        auto f = [&]() {
            Tensor r = concat_rows({a, b});
            Tensor q = concat_cols({slice_rows(r, 0, 4), c});
            return sum_all(mul(q, q));
        };
        CHECK(gradcheck(f, {a, b, c}, 1e-5, 1e-6).pass);
    }
    {
        Tensor logits = random_tensor({6, 4}, rng, true, 2.0);
        const std::vector<int> labels{0, 1, 2, 3, 1, 2};
        auto f = [&]() { return cross_entropy(logits, labels); };
        CHECK(gradcheck(f, {logits}, 1e-5, 1e-6).pass);
    }
    {
        // dropout under a fixed per-call seed is deterministic and checkable
        Tensor x = random_tensor({10, 10}, rng);
        auto f = [&]() {
            Rng local(99);
            return sum_all(mul(dropout(x, 0.4, true, local), x));
        };
        CHECK(gradcheck(f, {x}, 1e-5, 1e-6).pass);
    }
    {
        // two-layer net: matmul -> silu -> matmul -> cross entropy
        Tensor w1 = random_tensor({5, 8}, rng);
        Tensor w2 = random_tensor({8, 3}, rng);
        Tensor in = random_tensor({4, 5}, rng, false);
        const std::vector<int> labels{0, 2, 1, 1};
        auto f = [&]() { return cross_entropy(matmul(silu(matmul(in, w1)), w2), labels); };
        CHECK(gradcheck(f, {w1, w2}, 1e-5, 1e-6).pass);
    }
}

TEST_CASE("ops are deterministic given identical inputs") {
    Rng rng(41);
    Tensor a = random_tensor({6, 6}, rng, false);
    Tensor b = random_tensor({6, 6}, rng, false);
    Tensor r1 = matmul(softmax_rows(a), sigmoid(b));
    Tensor r2 = matmul(softmax_rows(a), sigmoid(b));
    CHECK(r1.data() == r2.data());
}
