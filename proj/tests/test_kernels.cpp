#include <doctest.h>

#include <cmath>

#include "difflog/kernels.hpp"
#include "difflog/rng.hpp"

using namespace difflog;

TEST_SUITE("kernels") {

TEST_CASE("gather1 picks along the atom dimension") {
    // X[b, g, k, l] with distinguishable values
    Tensor<double> X({1, 4, 1, 2});
    for (std::size_t g = 0; g < 4; ++g)
        for (std::size_t l = 0; l < 2; ++l) X.at(std::size_t{0}, g, std::size_t{0}, l) = static_cast<double>(g) + 0.1 * static_cast<double>(l);
    IntTensor Y({1, 4, 1, 2}, 0u);
    Y.at(std::size_t{0}, std::size_t{0}, std::size_t{0}, std::size_t{0}) = 2;
    Tensor<double> out = gather1(X, Y);
    CHECK(out.at(std::size_t{0}, std::size_t{0}, std::size_t{0}, std::size_t{0}) == doctest::Approx(2.0));
    // index 0 elsewhere gathers row 0
    CHECK(out.at(std::size_t{0}, std::size_t{3}, std::size_t{0}, std::size_t{1}) == doctest::Approx(0.1));

    IntTensor bad({1, 4, 1, 2}, 9u);
    CHECK_THROWS_AS(gather1(X, bad), std::out_of_range);
}

TEST_CASE("gather of an all-true index against unit valuations is one") {
    Tensor<double> X({2, 3, 2, 2}, 0.0);
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t l = 0; l < 2; ++l) X.at(b, std::size_t{1}, k, l) = 1.0;  // true column
    IntTensor Y({2, 3, 2, 2}, 1u);
    Tensor<double> out = gather1(X, Y);
    for (double v : out.data()) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("prod reduces multiplicatively with annihilator and identity") {
    Tensor<double> X({1, 2}, std::vector<double>{0.5, 0.5});
    CHECK(prod_d(X, 1)[0] == doctest::Approx(0.25));
    Tensor<double> zero({1, 3}, std::vector<double>{0.9, 0.0, 0.7});
    CHECK(prod_d(zero, 1)[0] == doctest::Approx(0.0));
    Tensor<double> pad({1, 2}, std::vector<double>{1.0, 1.0});
    CHECK(prod_d(pad, 1)[0] == doctest::Approx(1.0));
}

TEST_CASE("softor singleton axis is exact identity") {
    Tensor<double> X({1, 1}, std::vector<double>{0.7});
    CHECK(softor(X, 1, 0.01)[0] == 0.7);  // bitwise, not approximate
}

TEST_CASE("softor saturates two certain inputs to exactly one") {
    Tensor<double> X({1, 2}, std::vector<double>{1.0, 1.0});
    // raw = 1 + gamma ln 2 > 1, so the normalization rescales the maximum to 1
    CHECK(softor(X, 1, 0.01)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softor of a dominated pair stays within a hair of the max") {
    Tensor<double> X({1, 2}, std::vector<double>{0.3, 0.0});
    double out = softor(X, 1, 0.01)[0];
    CHECK(out == doctest::Approx(0.3 + 0.01 * std::log(1.0 + std::exp(-30.0))));
    CHECK(std::fabs(out - 0.3) < 1e-9);
}

TEST_CASE("softor raw value is bounded by max and max plus gamma log n") {
    Rng rng(5);
    const double gamma = 0.01;
    for (int iter = 0; iter < 2000; ++iter) {
        std::size_t n = 2 + rng.index(8);
        Tensor<double> X({1, n});
        double mx = 0.0;
        for (double& v : X.data()) {
            v = rng.uniform();
            mx = std::max(mx, v);
        }
        double raw = log_sum_exp_d(X, 1, gamma)[0];
        CHECK(raw >= mx - 1e-12);
        CHECK(raw <= mx + gamma * std::log(static_cast<double>(n)) + 1e-12);
    }
}

TEST_CASE("softor approaches max as gamma shrinks") {
    Rng rng(6);
    const double gamma = 1e-4;
    for (int iter = 0; iter < 2000; ++iter) {
        std::size_t n = 2 + rng.index(30);
        Tensor<double> X({1, n});
        double mx = 0.0;
        for (double& v : X.data()) {
            v = rng.uniform();
            mx = std::max(mx, v);
        }
        CHECK(std::fabs(softor(X, 1, gamma)[0] - mx) <= 1e-3);
    }
}

TEST_CASE("softor is monotone below the normalization threshold") {
    Rng rng(7);
    const double gamma = 0.01;
    for (int iter = 0; iter < 1000; ++iter) {
        std::size_t n = 2 + rng.index(6);
        Tensor<double> X({2, n});
        for (double& v : X.data()) v = rng.uniform(0.0, 0.9);
        Tensor<double> Y = X;
        for (double& v : Y.data()) v = std::min(0.94, v + rng.uniform(0.0, 0.04));
        Tensor<double> ox = softor(X, 1, gamma), oy = softor(Y, 1, gamma);
        for (std::size_t i = 0; i < ox.numel(); ++i) CHECK(oy[i] >= ox[i] - 1e-12);
    }
}

TEST_CASE("softor is invariant under permutation of the reduced axis") {
    Rng rng(8);
    for (int iter = 0; iter < 200; ++iter) {
        std::size_t n = 2 + rng.index(6);
        std::vector<double> vals(n);
        for (double& v : vals) v = rng.uniform();
        std::vector<double> shuffled = vals;
        rng.shuffle(shuffled);
        Tensor<double> a({1, n}, vals), b({1, n}, shuffled);
        CHECK(softor(a, 1, 0.01)[0] == doctest::Approx(softor(b, 1, 0.01)[0]).epsilon(1e-13));
    }
}

TEST_CASE("softmax rows sum to one and saturate at large gaps") {
    Tensor<double> W({1, 2}, std::vector<double>{100.0, 0.0});
    Tensor<double> sm = softmax_d(W, 1);
    CHECK(sm[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sm[1] == doctest::Approx(3.7e-44).epsilon(0.1));

    Rng rng(9);
    for (int iter = 0; iter < 200; ++iter) {
        Tensor<double> X({3, 4});
        for (double& v : X.data()) v = rng.uniform(-5.0, 5.0);
        Tensor<double> s = softmax_d(X, 1);
        for (std::size_t r = 0; r < 3; ++r) {
            double total = 0.0;
            for (std::size_t c = 0; c < 4; ++c) total += s.at(r, c);
            CHECK(std::fabs(total - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("stack adds a new leading dimension") {
    Tensor<double> a({2, 3}, 1.0), b({2, 3}, 2.0);
    Tensor<double> s = stack_d(std::vector<Tensor<double>>{a, b}, 0);
    CHECK(s.shape() == std::vector<std::size_t>{2, 2, 3});
    CHECK(s.at(std::size_t{0}, std::size_t{1}, std::size_t{2}) == 1.0);
    CHECK(s.at(std::size_t{1}, std::size_t{1}, std::size_t{2}) == 2.0);

    Tensor<double> mid = stack_d(std::vector<Tensor<double>>{a, b}, 1);
    CHECK(mid.shape() == std::vector<std::size_t>{2, 2, 3});
    CHECK(mid.at(std::size_t{1}, std::size_t{0}, std::size_t{0}) == 1.0);
    CHECK(mid.at(std::size_t{1}, std::size_t{1}, std::size_t{0}) == 2.0);
}

TEST_CASE("expand replicates into leading and trailing dimensions") {
    Tensor<double> mc({2, 3});
    for (std::size_t i = 0; i < 6; ++i) mc[i] = static_cast<double>(i);
    Tensor<double> up = expand(mc, {2, 3, 4, 5});
    CHECK(up.at(std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{4}) == 5.0);

    Tensor<double> cbg({3, 2, 2});
    for (std::size_t i = 0; i < cbg.numel(); ++i) cbg[i] = static_cast<double>(i);
    Tensor<double> lead = expand(cbg, {4, 3, 2, 2});
    for (std::size_t m = 0; m < 4; ++m) CHECK(lead.at(m, std::size_t{2}, std::size_t{1}, std::size_t{1}) == 11.0);

    // expand then reduce matches the composed-shape contract
    Tensor<double> summed = sum_d(lead, 1);
    CHECK(summed.shape() == std::vector<std::size_t>{4, 2, 2});
}

TEST_CASE("prob-sum or reduces without a noise floor") {
    Tensor<double> X({1, 3}, std::vector<double>{0.0, 0.0, 0.0});
    CHECK(prob_sum_d(X, 1)[0] == doctest::Approx(0.0));
    Tensor<double> Y({1, 2}, std::vector<double>{0.5, 0.5});
    CHECK(prob_sum_d(Y, 1)[0] == doctest::Approx(0.75));
    Tensor<double> Z({1, 2}, std::vector<double>{1.0, 0.3});
    CHECK(prob_sum_d(Z, 1)[0] == doctest::Approx(1.0));
}

TEST_CASE("dual arithmetic follows the product and chain rules") {
    Dual a(2.0, 1.0), b(3.0, 0.0);
    CHECK((a * b).val == 6.0);
    CHECK((a * b).tan == 3.0);
    CHECK((a / b).tan == doctest::Approx(1.0 / 3.0));
    CHECK(exp(a).tan == doctest::Approx(std::exp(2.0)));
    CHECK(log(a).tan == doctest::Approx(0.5));
    CHECK(sqrt(a).tan == doctest::Approx(0.5 / std::sqrt(2.0)));
}

TEST_CASE("dual derivatives of every kernel match central finite differences") {
    Rng rng(10);
    const double h = 1e-5;
    for (int iter = 0; iter < 100; ++iter) {
        std::size_t n = 2 + rng.index(5);
        std::vector<double> base(2 * n);
        for (double& v : base) v = rng.uniform(0.05, 0.95);
        std::vector<double> dir(2 * n);
        for (double& v : dir) v = rng.uniform(-1.0, 1.0);

        auto eval = [&](auto scalar_tag, auto&& make) {
            using S = decltype(scalar_tag);
            Tensor<S> X({2, n});
            for (std::size_t i = 0; i < 2 * n; ++i) {
                if constexpr (std::is_same_v<S, Dual>) X[i] = Dual(base[i], dir[i]);
                else X[i] = base[i];
            }
            return make(X);
        };
        auto eval_shift = [&](double eps, auto&& make) {
            Tensor<double> X({2, n});
            for (std::size_t i = 0; i < 2 * n; ++i) X[i] = base[i] + eps * dir[i];
            return make(X);
        };

        auto check_op = [&](auto&& make_d, auto&& make_dual) {
            Tensor<Dual> out = eval(Dual{}, make_dual);
            Tensor<double> hi = eval_shift(h, make_d), lo = eval_shift(-h, make_d);
            for (std::size_t i = 0; i < out.numel(); ++i) {
                double fd = (hi[i] - lo[i]) / (2.0 * h);
                double denom = std::max({std::fabs(fd), std::fabs(out[i].tan), 1e-6});
                CHECK(std::fabs(out[i].tan - fd) / denom <= 1e-4);
            }
        };

        check_op([&](const Tensor<double>& X) { return softor(X, 1, 0.01); },
                 [&](const Tensor<Dual>& X) { return softor(X, 1, 0.01); });
        check_op([&](const Tensor<double>& X) { return prod_d(X, 1); },
                 [&](const Tensor<Dual>& X) { return prod_d(X, 1); });
        check_op([&](const Tensor<double>& X) { return softmax_d(X, 1); },
                 [&](const Tensor<Dual>& X) { return softmax_d(X, 1); });
        check_op([&](const Tensor<double>& X) { return sum_d(X, 0); },
                 [&](const Tensor<Dual>& X) { return sum_d(X, 0); });
    }
}

TEST_CASE("softor rejects non-positive gamma") {
    Tensor<double> X({1, 2}, 0.5);
    CHECK_THROWS_AS(softor(X, 1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(softor(X, 1, -1.0), std::invalid_argument);
}

}  // TEST_SUITE
