#include <doctest.h>

#include <cmath>

#include "bdekit/nn_ops.hpp"
#include "bdekit/param_store.hpp"

using namespace bdekit;
using nn::Tensor4;

TEST_CASE("first adam step matches the closed form") {
    // With g constant, step 1 gives theta -= lr * g/|g| / (1 + eps adjustment):
    // mhat = g, vhat = g^2, update = lr * g / (|g| + eps)
    nn::ParamStore<double> params;
    auto p = params.add("p", Tensor4<double>::from_vector({1, 1, 1, 2},
                                                           {0.5, -0.25}));
    p.node()->ensure_grad();
    p.grad()[0] = 3.0;
    p.grad()[1] = -0.125;

    nn::AdamState<double> adam;
    adam.learning_rate = 1e-3;
    nn::adam_step(params, adam);

    CHECK(adam.t == 1);
    CHECK(p.values()[0] ==
          doctest::Approx(0.5 - 1e-3 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
    CHECK(p.values()[1] ==
          doctest::Approx(-0.25 + 1e-3 * 0.125 / (0.125 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("two steps match a hand-run scalar trace") {
    nn::ParamStore<double> params;
    auto p = params.add("w", Tensor4<double>::scalar(1.0));
    nn::AdamState<double> adam;
    adam.learning_rate = 0.1;

    // independent scalar reference implementation
    double theta = 1.0, m = 0.0, v = 0.0;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.1;
    const double grads[2] = {2.0, -0.5};
    for (int t = 1; t <= 2; ++t) {
        const double g = grads[t - 1];
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        theta -= lr * mhat / (std::sqrt(vhat) + eps);

        p.node()->ensure_grad();
        p.grad()[0] = g;
        nn::adam_step(params, adam);
        CHECK(p.values()[0] == doctest::Approx(theta).epsilon(1e-14));
        p.zero_grad();
    }
    CHECK(adam.t == 2);
}

TEST_CASE("zero gradient leaves the parameter unchanged") {
    nn::ParamStore<double> params;
    auto p = params.add("w", Tensor4<double>::scalar(0.75));
    params.zero_grad();
    nn::AdamState<double> adam;
    nn::adam_step(params, adam);
    CHECK(p.values()[0] == 0.75);
}

TEST_CASE("a parameter with no gradient buffer is an error") {
    nn::ParamStore<double> params;
    params.add("w", Tensor4<double>::scalar(1.0));
    nn::AdamState<double> adam;
    CHECK_THROWS_AS(nn::adam_step(params, adam), InternalError);
}

TEST_CASE("zero_grad gives every parameter an explicit zero buffer") {
    nn::ParamStore<double> params;
    auto a = params.add("a", Tensor4<double>::scalar(1.0));
    auto b = params.add("b", Tensor4<double>::zeros({2, 1, 1, 1}));
    params.zero_grad();
    REQUIRE(a.has_grad());
    REQUIRE(b.has_grad());
    CHECK(b.grad() == std::vector<double>{0.0, 0.0});

    // a detached parameter (unused in the graph) survives an optimizer step
    a.grad()[0] = 1.0; // pretend backward touched only `a`
    nn::AdamState<double> adam;
    CHECK_NOTHROW(nn::adam_step(params, adam));
}

TEST_CASE("duplicate parameter paths are rejected") {
    nn::ParamStore<double> params;
    params.add("w", Tensor4<double>::scalar(1.0));
    CHECK_THROWS_AS(params.add("w", Tensor4<double>::scalar(2.0)),
                    InternalError);
    CHECK(params.contains("w"));
    CHECK(!params.contains("v"));
    CHECK_THROWS_AS(params.at("missing"), InternalError);
    CHECK(params.total_parameters() == 1);
}

TEST_CASE("adam drives a small least-squares problem downhill") {
    // minimize |w*x - y| over 200 steps; loss must shrink monotonically
    // in trend (check endpoints, not every step)
    nn::ParamStore<double> params;
    auto w = params.add("w", Tensor4<double>::scalar(0.0));
    const auto x = Tensor4<double>::from_vector({1, 1, 1, 3}, {1.0, 2.0, 3.0});
    const auto y = Tensor4<double>::from_vector({1, 1, 1, 3}, {2.0, 4.0, 6.0});
    nn::AdamState<double> adam;
    adam.learning_rate = 0.05;

    double first = 0, last = 0;
    for (int step = 0; step < 200; ++step) {
        auto pred = nn::scale_by(x, w);
        auto loss = nn::l1_loss(pred, y);
        if (step == 0) first = loss.item();
        last = loss.item();
        params.zero_grad();
        nn::backward(loss);
        nn::adam_step(params, adam);
    }
    CHECK(first == doctest::Approx(4.0)); // w=0: mean(|0-y|) = (2+4+6)/3
    CHECK(last < 0.5);
    CHECK(w.values()[0] == doctest::Approx(2.0).epsilon(0.05));
}
