#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ecgvae/errors.hpp"
#include "ecgvae/nn/adam.hpp"
#include "ecgvae/nn/layer.hpp"
#include "ecgvae/nn/ops.hpp"
#include "ecgvae/nn/parallel.hpp"
#include "support/gradcheck.hpp"

using namespace ecgvae;
using namespace ecgvae::nn;

namespace {

Tensor<double> t1(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor<double>({n}, std::move(v));
}

Tensor<double> t2(std::size_t r, std::size_t c, std::vector<double> v) {
  return Tensor<double>({r, c}, std::move(v));
}

std::vector<double> as_vec(const Tensor<double>& t) { return t.vec(); }

}  // namespace

TEST_CASE("tensor validates shape and size") {
  CHECK_THROWS_AS(Tensor<float>(Shape{2, 3}, std::vector<float>(5)), DimensionError);
  CHECK_THROWS_AS(Tensor<float>(Shape{1, 1, 1, 1}), DimensionError);
  Tensor<float> t({2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(t.reshaped({4, 2}), DimensionError);
  t[2] = std::numeric_limits<float>::infinity();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("conv1d cross-correlates with zero same padding") {
  const auto x = t2(1, 4, {1, 2, 3, 4});
  const Tensor<double> w({1, 1, 3}, {1, 0, -1});
  const auto b = t1({0});
  CHECK(as_vec(conv1d_forward(x, w, b)) == std::vector<double>{-2, -2, -2, 3});

  SUBCASE("identity kernel leaves the input unchanged") {
    std::mt19937_64 rng(3);
    const auto in = gradcheck::random_tensor({2, 9}, rng);
    Tensor<double> id({2, 2, 3});
    id.data()[0 * 6 + 0 * 3 + 1] = 1;
    id.data()[1 * 6 + 1 * 3 + 1] = 1;
    CHECK(conv1d_forward(in, id, t1({0, 0})) == in);
  }
  SUBCASE("length 400 is preserved at stride 1") {
    Tensor<double> in({1, 400}, 0.5);
    CHECK(conv1d_forward(in, Tensor<double>({4, 1, 5}), t1({0, 0, 0, 0})).shape() ==
          Shape{4, 400});
  }
  SUBCASE("stride gives ceil(L / stride) outputs") {
    Tensor<double> in({1, 7}, 1.0);
    CHECK(conv1d_forward(in, Tensor<double>({1, 1, 3}), t1({0}), 2).shape() == Shape{1, 4});
  }
  SUBCASE("channel mismatch is a dimension error") {
    CHECK_THROWS_AS(conv1d_forward(x, Tensor<double>({1, 2, 3}), b), DimensionError);
  }
  SUBCASE("even kernel is rejected") {
    CHECK_THROWS_AS(conv1d_forward(x, Tensor<double>({1, 1, 2}), b), ParameterError);
  }
}

TEST_CASE("maxpool1d") {
  CHECK(as_vec(maxpool1d_forward(t2(1, 4, {1, 3, 2, 5}), 2)) == std::vector<double>{3, 5});
  CHECK(as_vec(maxpool1d_forward(t2(1, 1, {7}), 1)) == std::vector<double>{7});
  CHECK(maxpool1d_forward(t2(1, 5, {1, 2, 3, 4, 5}), 2).shape() == Shape{1, 2});
  CHECK_THROWS_AS(maxpool1d_forward(t2(1, 2, {1, 2}), 3), DimensionError);

  Tensor<double> x({1, 400}, 1.0);
  for (int i = 0; i < 4; ++i) x = maxpool1d_forward(x, 2);
  CHECK(x.shape() == Shape{1, 25});

  SUBCASE("ties route the gradient to the first index") {
    Tape<double> tape;
    Var in = tape.variable(t2(1, 4, {2, 2, 1, 1}));
    tape.backward(sum(tape, maxpool1d(tape, in, 2)));
    const auto g = tape.grad(in);
    CHECK(std::vector<double>(g.begin(), g.end()) == std::vector<double>{1, 0, 1, 0});
  }
  SUBCASE("backward conserves gradient mass") {
    std::mt19937_64 rng(5);
    Tape<double> tape;
    Var in = tape.variable(gradcheck::random_tensor({2, 3, 11}, rng));
    Var out = maxpool1d(tape, in, 2);
    const auto w = gradcheck::random_tensor(tape.value(out).shape(), rng);
    tape.backward(weighted_sum(tape, out, w));
    const auto g = tape.grad(in);
    CHECK(std::accumulate(g.begin(), g.end(), 0.0) ==
          doctest::Approx(std::accumulate(w.data().begin(), w.data().end(), 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("dense") {
  CHECK(as_vec(dense_forward(t1({2, 3}), t2(1, 2, {1, 1}), t1({1}))) == std::vector<double>{6});
  const auto x = t1({0.5, -2, 4});
  CHECK(dense_forward(x, t2(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}), t1({0, 0, 0})) == x);
  CHECK(dense_forward(Tensor<double>({800}), Tensor<double>({400, 800}), Tensor<double>({400}))
            .shape() == Shape{400});
  CHECK_THROWS_AS(dense_forward(x, t2(1, 2, {1, 1}), t1({0})), DimensionError);
}

TEST_CASE("batchnorm1d") {
  const auto ones = t1({1});
  const auto zero = t1({0});
  SUBCASE("two identical rows normalize to zero") {
    BatchNormStats<double> stats(2);
    const auto out = batchnorm1d_forward(t2(2, 2, {3, -1, 3, -1}), Tensor<double>({2}, 1.0),
                                         Tensor<double>({2}), stats, Mode::train);
    for (double v : out.data()) CHECK(v == 0.0);
  }
  SUBCASE("gamma 0 gives the constant beta") {
    BatchNormStats<double> stats(1);
    const auto out =
        batchnorm1d_forward(t2(3, 1, {1, 5, -2}), t1({0}), t1({2.5}), stats, Mode::train);
    for (double v : out.data()) CHECK(v == 2.5);
  }
  SUBCASE("[[1],[3]] uses the population variance") {
    BatchNormStats<double> stats(1);
    BatchNormOptions opts;
    opts.eps = 1e-14;
    const auto out = batchnorm1d_forward(t2(2, 1, {1, 3}), ones, zero, stats, Mode::train, opts);
    CHECK(out[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-9));
    // running stats: momentum 0.1 toward mean 2 and unbiased variance 2
    CHECK(stats.running_mean[0] == doctest::Approx(0.2));
    CHECK(stats.running_var[0] == doctest::Approx(0.9 + 0.2));
  }
  SUBCASE("eval mode uses running statistics") {
    BatchNormStats<double> stats(1);
    stats.running_mean[0] = 1;
    stats.running_var[0] = 4;
    BatchNormOptions opts;
    opts.eps = 0;
    const auto out = batchnorm1d_forward(t2(1, 1, {5}), ones, zero, stats, Mode::eval, opts);
    CHECK(out[0] == doctest::Approx(2.0));
  }
  SUBCASE("rank-3 input pools over batch and length per channel") {
    BatchNormStats<double> stats(2);
    Tensor<double> x({2, 2, 2}, std::vector<double>{1, 3, 10, 10, 5, 7, 10, 10});
    const auto out = batchnorm1d_forward(x, Tensor<double>({2}, 1.0), Tensor<double>({2}), stats,
                                         Mode::train);
    double m = 0;
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t l = 0; l < 2; ++l) m += out[b * 4 + l];
    CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out[2] == 0.0);
  }
  SUBCASE("batch of one in train mode is an error") {
    BatchNormStats<double> stats(1);
    CHECK_THROWS(batchnorm1d_forward(t2(1, 1, {1}), ones, zero, stats, Mode::train));
  }
}

TEST_CASE("relu and upsample") {
  CHECK(as_vec(relu_forward(t1({-1, 0, 2}))) == std::vector<double>{0, 0, 2});
  CHECK(as_vec(upsample_nearest(t2(1, 2, {1, 2}), 2)) == std::vector<double>{1, 1, 2, 2});
  Tensor<double> x({1, 25}, 1.0);
  for (int i = 0; i < 4; ++i) x = upsample_nearest(x, 2);
  CHECK(x.shape() == Shape{1, 400});

  SUBCASE("relu gradient is a mask of the incoming gradient, zero at 0") {
    Tape<double> tape;
    Var in = tape.variable(t1({-1, 0, 2, 3}));
    tape.backward(weighted_sum(tape, relu(tape, in), t1({5, 6, 7, 8})));
    const auto g = tape.grad(in);
    CHECK(std::vector<double>(g.begin(), g.end()) == std::vector<double>{0, 0, 7, 8});
  }
}

TEST_CASE("backward mechanics") {
  SUBCASE("sum gives an all-ones gradient") {
    Tape<double> tape;
    Var in = tape.variable(t2(2, 3, {1, 2, 3, 4, 5, 6}));
    tape.backward(sum(tape, in));
    for (double g : tape.grad(in)) CHECK(g == 1.0);
  }
  SUBCASE("empty tape is a state error") {
    Tape<double> tape;
    Tape<double> other;
    Var v = other.variable(t1({1}));
    CHECK_THROWS_AS(tape.backward(v), StateError);
  }
  SUBCASE("stale handle after clear is a state error") {
    Tape<double> tape;
    Var v = tape.variable(t1({1, 2}));
    Var s = sum(tape, v);
    tape.clear();
    tape.variable(t1({3}));
    CHECK_THROWS_AS(tape.backward(s), StateError);
  }
  SUBCASE("non-scalar loss is a dimension error") {
    Tape<double> tape;
    Var v = tape.variable(t1({1, 2}));
    CHECK_THROWS_AS(tape.backward(relu(tape, v)), DimensionError);
  }
  SUBCASE("non-finite op output is a numeric error") {
    Tape<double> tape;
    Var v = tape.variable(t1({1e308}));
    CHECK_THROWS_AS(scale(tape, v, 1e10), NumericError);
  }
  SUBCASE("parameter gradients accumulate until zero_grad") {
    Parameter<double> p("w", t1({2.0}));
    for (int i = 0; i < 2; ++i) {
      Tape<double> tape;
      tape.backward(weighted_sum(tape, tape.parameter(p), t1({3.0})));
    }
    CHECK(p.grad[0] == 6.0);
    p.zero_grad();
    CHECK(p.grad[0] == 0.0);
  }
  SUBCASE("gradients are deterministic") {
    std::mt19937_64 rng(9);
    const auto x = gradcheck::random_tensor({3, 2, 12}, rng);
    const auto w = gradcheck::random_tensor({4, 2, 5}, rng);
    auto run = [&] {
      Tape<double> tape;
      Var in = tape.variable(x);
      Var wv = tape.variable(w);
      Var out = conv1d(tape, in, wv, tape.constant(Tensor<double>({4})));
      tape.backward(sum(tape, relu(tape, out)));
      auto g = tape.grad(wv);
      return std::vector<double>(g.begin(), g.end());
    };
    CHECK(run() == run());
  }
}

TEST_CASE("every op matches central finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const auto& [name, error] : gradcheck::layer_errors(seed)) {
      CAPTURE(seed);
      CAPTURE(name);
      CHECK(error < 1e-4);
    }
  }
}

TEST_CASE("layer shape inference") {
  CHECK(infer_shape(LayerSpec::conv(1, 16, 5), {1, 400}) == Shape{16, 400});
  CHECK(infer_shape(LayerSpec::maxpool(2), {16, 400}) == Shape{16, 200});
  CHECK(infer_shape(LayerSpec::upsample(2), {8, 25}) == Shape{8, 50});
  CHECK(infer_shape(LayerSpec::dense(400, 256), {400}) == Shape{256});
  CHECK_THROWS_AS(infer_shape(LayerSpec::dense(400, 256), {399}), DimensionError);
  CHECK_THROWS_AS(LayerSpec::conv(1, 1, 4), ParameterError);
  Shape s{1, 400};
  for (std::size_t c : {16, 32, 64, 128}) {
    s = infer_shape(LayerSpec::maxpool(2), infer_shape(LayerSpec::conv(s[0], c, 5), s));
  }
  CHECK(s == Shape{128, 25});
  const std::vector<Shape> parts{{25}, {25}};
  CHECK(infer_concat_shape(parts) == Shape{50});
}

TEST_CASE("layer initialization is seeded and bounded") {
  auto a = make_layer<float>("l", LayerSpec::dense(100, 10));
  auto b = make_layer<float>("l", LayerSpec::dense(100, 10));
  std::mt19937_64 r1(4), r2(4);
  initialize(a, InitScale::he, r1);
  initialize(b, InitScale::he, r2);
  CHECK(a.params[0].value == b.params[0].value);
  const float bound = std::sqrt(6.0f / 100.0f);
  for (float v : a.params[0].value.data()) CHECK(std::abs(v) <= bound);
  for (float v : a.params[1].value.data()) CHECK(v == 0.0f);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged and counts the step") {
    Parameter<double> p("w", t1({1, -2}));
    std::vector<Parameter<double>*> ps{&p};
    auto state = make_adam_state<double>(ps);
    adam_step<double>(ps, state);
    CHECK(p.value == t1({1, -2}));
    CHECK(state.step_count == 1);
  }
  SUBCASE("first step moves by lr * sign(g)") {
    Parameter<double> p("w", t1({1, -2, 0.5}));
    p.grad = t1({3, -0.25, 40});
    std::vector<Parameter<double>*> ps{&p};
    AdamConfig cfg;
    cfg.eps = 1e-12;
    auto state = make_adam_state<double>(ps, cfg);
    adam_step<double>(ps, state);
    CHECK(p.value[0] == doctest::Approx(1 - 1e-3).epsilon(1e-9));
    CHECK(p.value[1] == doctest::Approx(-2 + 1e-3).epsilon(1e-9));
    CHECK(p.value[2] == doctest::Approx(0.5 - 1e-3).epsilon(1e-9));
    CHECK(state.first_moment[0].size() == 3);
  }
  SUBCASE("two steps reproduce bit-for-bit") {
    auto run = [] {
      Parameter<float> p("w", Tensor<float>({3}, std::vector<float>{0.1f, 0.2f, 0.3f}));
      std::vector<Parameter<float>*> ps{&p};
      auto state = make_adam_state<float>(ps);
      for (int i = 0; i < 2; ++i) {
        p.grad = Tensor<float>({3}, std::vector<float>{0.5f, -1.0f, float(i)});
        adam_step<float>(ps, state);
      }
      return p.value;
    };
    CHECK(run() == run());
  }
  SUBCASE("non-finite gradient names the parameter and moves nothing") {
    Parameter<double> a("first", t1({1}));
    Parameter<double> b("second", t1({1}));
    a.grad = t1({1});
    b.grad = t1({std::nan("")});
    std::vector<Parameter<double>*> ps{&a, &b};
    auto state = make_adam_state<double>(ps);
    try {
      adam_step<double>(ps, state);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("second") != std::string::npos);
    }
    CHECK(a.value[0] == 1.0);
  }
}

TEST_CASE("kernels give identical results for any thread count") {
  std::mt19937_64 rng(11);
  const auto x = gradcheck::random_tensor({4, 8, 50}, rng).cast<float>();
  const auto w = gradcheck::random_tensor({16, 8, 5}, rng).cast<float>();
  const Tensor<float> b({16});
  const std::size_t saved = thread_count();
  set_thread_count(1);
  const auto one = conv1d_forward(x, w, b);
  set_thread_count(3);
  const auto three = conv1d_forward(x, w, b);
  set_thread_count(saved);
  CHECK(one == three);
}
