#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>

#include "asa/gradcheck.hpp"
#include "asa/graph.hpp"
#include "asa/nn.hpp"

using namespace asa;

namespace {

std::vector<float> random_floats(size_t n, std::mt19937_64& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = float(uniform_range(rng, -2.0, 2.0));
  return v;
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

void fill_random(Parameter<double>& p, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  for (auto& w : p.value->data) w = uniform_range(rng, lo, hi);
}

TensorPtr<double> random_const(int r, int c, std::mt19937_64& rng) {
  auto t = make_tensor<double>(r, c);
  for (auto& v : t->data) v = uniform_range(rng, -1.0, 1.0);
  return t;
}

// Project a tensor-valued op to a scalar through fixed random weights so the
// finite-difference check sees a generic output gradient.
TensorPtr<double> to_scalar(Tape<double>& tape, const TensorPtr<double>& x,
                            const TensorPtr<double>& weights) {
  return ops::sum_all(tape, ops::mul(tape, x, weights));
}

template <typename F>
GradCheckReport op_grad_check(F&& build_loss, std::vector<Parameter<double>*> params,
                              double step = 1e-4) {
  zero_grads(params);
  Tape<double> tape;
  auto loss = build_loss(tape);
  tape.backward(loss);
  auto fwd = [&] {
    Tape<double> t;
    return build_loss(t)->data[0];
  };
  return grad_check(fwd, params, step);
}

}  // namespace

TEST_CASE("omp kernels match the serial reference bit for bit") {
  std::mt19937_64 rng(101);
  for (auto [M, K, N] : {std::array{3, 5, 4}, std::array{64, 48, 80}, std::array{1, 7, 9}}) {
    auto a = random_floats(size_t(M) * K, rng);
    auto b = random_floats(size_t(K) * N, rng);
    std::vector<float> c1(size_t(M) * N), c2(c1.size());
    kernels::serial::matmul_nn(a.data(), b.data(), c1.data(), M, K, N);
    kernels::matmul_nn(a.data(), b.data(), c2.data(), M, K, N);
    CHECK(bit_equal(c1, c2));

    auto bt = random_floats(size_t(N) * K, rng);
    kernels::serial::matmul_nt(a.data(), bt.data(), c1.data(), M, K, N);
    kernels::matmul_nt(a.data(), bt.data(), c2.data(), M, K, N);
    CHECK(bit_equal(c1, c2));

    auto at = random_floats(size_t(K) * M, rng);
    auto bn = random_floats(size_t(K) * N, rng);
    kernels::serial::matmul_tn(at.data(), bn.data(), c1.data(), M, K, N, true);
    kernels::matmul_tn(at.data(), bn.data(), c2.data(), M, K, N, true);
    CHECK(bit_equal(c1, c2));
  }

  const int R = 33, C = 17;
  auto x = random_floats(size_t(R) * C, rng);
  std::vector<float> y1(x.size()), y2(x.size());
  kernels::serial::softmax_rows(x.data(), y1.data(), R, C);
  kernels::softmax_rows(x.data(), y2.data(), R, C);
  CHECK(bit_equal(y1, y2));

  std::vector<uint8_t> valid(C, 1);
  valid[3] = valid[10] = 0;
  kernels::serial::masked_softmax_rows(x.data(), y1.data(), R, C, valid.data());
  kernels::masked_softmax_rows(x.data(), y2.data(), R, C, valid.data());
  CHECK(bit_equal(y1, y2));

  auto gain = random_floats(C, rng);
  kernels::serial::rms_norm_rows(x.data(), gain.data(), y1.data(), R, C, 1e-5f);
  kernels::rms_norm_rows(x.data(), gain.data(), y2.data(), R, C, 1e-5f);
  CHECK(bit_equal(y1, y2));
}

TEST_CASE("softmax basics") {
  Tape<double> tape;
  auto x = make_tensor<double>(1, 4);
  std::fill(x->data.begin(), x->data.end(), 0.7);
  auto y = ops::softmax_rows(tape, x);
  for (double v : y->data) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));

  std::mt19937_64 rng(7);
  auto z = random_const(5, 9, rng);
  auto s = ops::softmax_rows(tape, z);
  for (int i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 9; ++j) {
      CHECK(s->at(i, j) >= 0.0);
      sum += s->at(i, j);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("matmul identity") {
  Tape<double> tape;
  auto eye = make_tensor<double>(3, 3);
  for (int i = 0; i < 3; ++i) eye->at(i, i) = 1.0;
  std::mt19937_64 rng(8);
  auto x = random_const(3, 6, rng);
  auto y = ops::matmul(tape, eye, x);
  for (size_t i = 0; i < x->numel(); ++i) CHECK(y->data[i] == x->data[i]);
}

TEST_CASE("rms normalize hand value") {
  Tape<double> tape;
  auto x = make_tensor<double>(1, 2);
  x->data = {3.0, 4.0};
  auto gain = make_tensor<double>(1, 2);
  gain->data = {1.0, 1.0};
  auto y = ops::rms_norm(tape, x, gain, 0.0);
  CHECK(y->data[0] == doctest::Approx(3.0 / std::sqrt(12.5)).epsilon(1e-14));
  CHECK(y->data[1] == doctest::Approx(4.0 / std::sqrt(12.5)).epsilon(1e-14));
}

TEST_CASE("cosine similarity examples") {
  Tape<double> tape;
  auto u = make_tensor<double>(1, 2);
  auto v = make_tensor<double>(1, 2);

  u->data = {2.0, -1.0};
  v->data = {2.0, -1.0};
  CHECK(ops::cosine(tape, u, v)->data[0] == doctest::Approx(1.0).epsilon(1e-14));

  u->data = {1.0, 0.0};
  v->data = {0.0, 1.0};
  CHECK(ops::cosine(tape, u, v)->data[0] == doctest::Approx(0.0));

  u->data = {1.0, 1.0};
  v->data = {1.0, 0.0};
  CHECK(ops::cosine(tape, u, v)->data[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));

  bool zero = false;
  v->data = {0.0, 0.0};
  CHECK(ops::cosine(tape, u, v, &zero)->data[0] == 0.0);
  CHECK(zero);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = random_const(1, 6, rng);
    auto b = random_const(1, 6, rng);
    CHECK(std::abs(ops::cosine(tape, a, b)->data[0]) <= 1.0);
    CHECK(ops::cosine(tape, a, a)->data[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("cross entropy values and gradient") {
  Tape<double> tape;
  auto z = make_tensor<double>(1, 8, true);
  auto loss = ops::cross_entropy_mean(tape, z, {0});
  CHECK(loss->data[0] == doctest::Approx(std::log(8.0)).epsilon(1e-12));

  Tape<double> t2;
  auto z2 = make_tensor<double>(1, 8);
  z2->data[3] = 50.0;
  CHECK(ops::cross_entropy_mean(t2, z2, {3})->data[0] < 1e-20);

  Tape<double> t3;
  auto z3 = make_tensor<double>(1, 3, true);
  z3->data = {1.0, 2.0, 3.0};
  auto l3 = ops::cross_entropy_mean(t3, z3, {2});
  CHECK(l3->data[0] == doctest::Approx(0.40760596444438).epsilon(1e-10));
  t3.backward(l3);
  // gradient = softmax(z) - one_hot(y)
  std::vector<double> p(3);
  kernels::softmax_rows(z3->data.data(), p.data(), 1, 3);
  for (int j = 0; j < 3; ++j)
    CHECK(z3->grad[j] == doctest::Approx(p[j] - (j == 2 ? 1.0 : 0.0)).epsilon(1e-12));
}

TEST_CASE("adamw update behavior") {
  SUBCASE("zero gradient and zero decay leave parameters unchanged") {
    Parameter<double> p("w", 2, 3);
    std::mt19937_64 rng(3);
    fill_random(p, rng);
    auto before = p.value->data;
    std::vector<Parameter<double>*> ps{&p};
    adamw_step(ps, {.lr = 0.1});
    CHECK(p.value->data == before);
  }
  SUBCASE("descent on w^2") {
    Parameter<double> p("w", 1, 1);
    p.value->data[0] = 1.0;
    p.value->grad[0] = 2.0;  // d(w^2)/dw at w=1
    std::vector<Parameter<double>*> ps{&p};
    adamw_step(ps, {.lr = 0.1});
    CHECK(p.value->data[0] < 1.0);
  }
  SUBCASE("bias-corrected first step is ~lr for unit gradient") {
    Parameter<double> p("w", 1, 1);
    p.value->data[0] = 0.5;
    p.value->grad[0] = 1.0;
    std::vector<Parameter<double>*> ps{&p};
    adamw_step(ps, {.lr = 0.01});
    CHECK(p.value->data[0] == doctest::Approx(0.5 - 0.01).epsilon(1e-7));
  }
  SUBCASE("lr = 0 is bit-identical") {
    Parameter<double> p("w", 4, 4);
    std::mt19937_64 rng(4);
    fill_random(p, rng);
    for (auto& g : p.value->grad) g = uniform_range(rng, -1, 1);
    auto before = p.value->data;
    std::vector<Parameter<double>*> ps{&p};
    adamw_step(ps, {.lr = 0.0, .weight_decay = 0.5});
    CHECK(p.value->data == before);
  }
  SUBCASE("non-finite gradient aborts with the parameter name") {
    Parameter<double> good("good", 1, 1);
    Parameter<double> bad("model.head.weight", 1, 1);
    good.value->grad[0] = 1.0;
    bad.value->grad[0] = std::numeric_limits<double>::quiet_NaN();
    auto before = good.value->data;
    std::vector<Parameter<double>*> ps{&good, &bad};
    CHECK_THROWS_WITH_AS(adamw_step(ps, {.lr = 0.1}),
                         doctest::Contains("model.head.weight"), Error);
    CHECK(good.value->data == before);  // nothing was mutated
  }
}

TEST_CASE("attention pool examples") {
  std::mt19937_64 rng(17);

  SUBCASE("single row pools to itself") {
    Tape<double> tape;
    auto h = random_const(1, 4, rng);
    auto q = random_const(1, 4, rng);
    auto out = ops::attention_pool(tape, h, q, {1});
    for (int j = 0; j < 4; ++j) CHECK(out->data[j] == doctest::Approx(h->at(0, j)));
  }
  SUBCASE("identical rows pool to that row") {
    Tape<double> tape;
    auto h = make_tensor<double>(2, 3);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) h->at(i, j) = 0.3 * (j + 1);
    auto q = random_const(1, 3, rng);
    auto out = ops::attention_pool(tape, h, q, {1, 1});
    for (int j = 0; j < 3; ++j) CHECK(out->data[j] == doctest::Approx(0.3 * (j + 1)));
  }
  SUBCASE("softmax(ln 3, 0) weights give (0.75, 0.25)") {
    Tape<double> tape;
    auto h = make_tensor<double>(2, 2);
    h->at(0, 0) = 1.0;
    h->at(1, 1) = 1.0;
    auto q = make_tensor<double>(1, 2);
    q->data = {std::log(3.0), 0.0};  // scores = (ln 3, 0)
    std::vector<double> w;
    auto out = ops::attention_pool(tape, h, q, {1, 1}, &w);
    CHECK(out->data[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(out->data[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("weights are a distribution over unmasked rows") {
    for (int trial = 0; trial < 20; ++trial) {
      Tape<double> tape;
      auto h = random_const(6, 5, rng);
      auto q = random_const(1, 5, rng);
      std::vector<uint8_t> valid = {1, 0, 1, 1, 0, 1};
      std::vector<double> w;
      ops::attention_pool(tape, h, q, valid, &w);
      double sum = 0.0;
      for (int i = 0; i < 6; ++i) {
        CHECK(w[i] >= 0.0);
        if (!valid[i]) CHECK(w[i] == 0.0);
        sum += w[i];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("all rows masked is an error") {
    Tape<double> tape;
    auto h = random_const(2, 3, rng);
    auto q = random_const(1, 3, rng);
    CHECK_THROWS_AS(ops::attention_pool(tape, h, q, {0, 0}), Error);
  }
}

TEST_CASE("encoder layer masking and symmetry") {
  std::mt19937_64 rng(23);
  nn::EncoderLayer<double> layer("layer", 6, /*rotary=*/false);
  layer.init(rng);

  SUBCASE("identical rows produce identical outputs without positional phases") {
    Tape<double> tape;
    auto x = make_tensor<double>(2, 6);
    for (int j = 0; j < 6; ++j) x->at(0, j) = x->at(1, j) = uniform_range(rng, -1, 1);
    auto y = layer.forward(tape, x, {1, 1});
    for (int j = 0; j < 6; ++j) CHECK(y->at(0, j) == doctest::Approx(y->at(1, j)));
  }
  SUBCASE("masked row gets zero attention weight and zero output") {
    Tape<double> tape;
    auto x = random_const(3, 6, rng);
    std::vector<uint8_t> valid = {1, 1, 0};
    auto w = layer.attention_weights(x, valid);
    for (int q = 0; q < 3; ++q) CHECK(w[size_t(q) * 3 + 2] == 0.0);
    for (int q = 0; q < 3; ++q) {
      double sum = 0.0;
      for (int kcol = 0; kcol < 3; ++kcol) sum += w[size_t(q) * 3 + kcol];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    auto y = layer.forward(tape, x, valid);
    for (int j = 0; j < 6; ++j) CHECK(y->at(2, j) == 0.0);
  }
  SUBCASE("rotary phases preserve per-pair norms") {
    Tape<double> tape;
    auto x = random_const(4, 6, rng);
    auto y = ops::rotary_phases(tape, x);
    for (int p = 0; p < 4; ++p)
      for (int i = 0; i < 3; ++i) {
        double n0 = x->at(p, 2 * i) * x->at(p, 2 * i) + x->at(p, 2 * i + 1) * x->at(p, 2 * i + 1);
        double n1 = y->at(p, 2 * i) * y->at(p, 2 * i) + y->at(p, 2 * i + 1) * y->at(p, 2 * i + 1);
        CHECK(n0 == doctest::Approx(n1).epsilon(1e-12));
      }
    // row 0 has zero phase everywhere
    for (int j = 0; j < 6; ++j) CHECK(y->at(0, j) == doctest::Approx(x->at(0, j)));
  }
}

TEST_CASE("gradient check: linear f has zero error") {
  std::mt19937_64 rng(31);
  Parameter<double> a("a", 2, 3);
  Parameter<double> b("b", 2, 3);
  fill_random(a, rng);
  fill_random(b, rng);
  std::vector<Parameter<double>*> params{&a, &b};
  auto rep = op_grad_check(
      [&](Tape<double>& tape) {
        return ops::sum_all(tape, ops::add(tape, a.value, b.value));
      },
      params);
  CHECK(rep.max_rel_err < 1e-9);
  CHECK(rep.coords_checked == 12);
}

TEST_CASE("gradient check: every primitive") {
  std::mt19937_64 rng(37);
  const double tol = 1e-6;  // smooth ops in double precision

  SUBCASE("matmul") {
    Parameter<double> a("a", 3, 4), b("b", 4, 5);
    fill_random(a, rng);
    fill_random(b, rng);
    auto w = random_const(3, 5, rng);
    std::vector<Parameter<double>*> ps{&a, &b};
    auto rep = op_grad_check(
        [&](Tape<double>& t) { return to_scalar(t, ops::matmul(t, a.value, b.value), w); }, ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("matmul_nt") {
    Parameter<double> a("a", 3, 4), b("b", 5, 4);
    fill_random(a, rng);
    fill_random(b, rng);
    auto w = random_const(3, 5, rng);
    std::vector<Parameter<double>*> ps{&a, &b};
    auto rep = op_grad_check(
        [&](Tape<double>& t) { return to_scalar(t, ops::matmul_nt(t, a.value, b.value), w); },
        ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("add_bias, mul, concat, broadcast, stack, zero_masked") {
    Parameter<double> x("x", 3, 4), bias("bias", 1, 4), y("y", 3, 4), v("v", 1, 4);
    for (auto* p : {&x, &bias, &y, &v}) fill_random(*p, rng);
    auto w = random_const(6, 8, rng);
    std::vector<Parameter<double>*> ps{&x, &bias, &y, &v};
    auto rep = op_grad_check(
        [&](Tape<double>& t) {
          auto xb = ops::add_bias(t, x.value, bias.value);
          auto m = ops::mul(t, xb, y.value);
          auto cat = ops::concat_cols(t, m, ops::broadcast_row(t, v.value, 3));
          auto st = ops::stack_rows(t, {cat, cat});
          auto zm = ops::zero_masked_rows(t, st, {1, 0, 1, 1, 1, 0});
          return to_scalar(t, zm, w);
        },
        ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("softmax and masked softmax") {
    Parameter<double> x("x", 4, 6);
    fill_random(x, rng);
    auto w = random_const(4, 6, rng);
    std::vector<Parameter<double>*> ps{&x};
    auto rep = op_grad_check(
        [&](Tape<double>& t) { return to_scalar(t, ops::softmax_rows(t, x.value), w); }, ps);
    CHECK(rep.max_rel_err < tol);

    std::vector<uint8_t> valid = {1, 0, 1, 1, 1, 0};
    rep = op_grad_check(
        [&](Tape<double>& t) {
          return to_scalar(t, ops::masked_softmax_rows(t, x.value, valid), w);
        },
        ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("rms_norm") {
    Parameter<double> x("x", 3, 5), g("g", 1, 5);
    fill_random(x, rng);
    fill_random(g, rng, 0.5, 1.5);
    auto w = random_const(3, 5, rng);
    std::vector<Parameter<double>*> ps{&x, &g};
    auto rep = op_grad_check(
        [&](Tape<double>& t) {
          return to_scalar(t, ops::rms_norm(t, x.value, g.value, 1e-5), w);
        },
        ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("silu_gate") {
    Parameter<double> x("x", 3, 5), g("g", 3, 5);
    fill_random(x, rng);
    fill_random(g, rng);
    auto w = random_const(3, 5, rng);
    std::vector<Parameter<double>*> ps{&x, &g};
    auto rep = op_grad_check(
        [&](Tape<double>& t) { return to_scalar(t, ops::silu_gate(t, x.value, g.value), w); },
        ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("rotary phases") {
    Parameter<double> x("x", 4, 6);
    fill_random(x, rng);
    auto w = random_const(4, 6, rng);
    std::vector<Parameter<double>*> ps{&x};
    auto rep = op_grad_check(
        [&](Tape<double>& t) { return to_scalar(t, ops::rotary_phases(t, x.value), w); }, ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("attention_pool") {
    Parameter<double> h("h", 5, 4), q("q", 1, 4);
    fill_random(h, rng);
    fill_random(q, rng);
    auto w = random_const(1, 4, rng);
    std::vector<uint8_t> valid = {1, 1, 0, 1, 1};
    std::vector<Parameter<double>*> ps{&h, &q};
    auto rep = op_grad_check(
        [&](Tape<double>& t) {
          return to_scalar(t, ops::attention_pool(t, h.value, q.value, valid), w);
        },
        ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("cosine") {
    Parameter<double> u("u", 1, 6), v("v", 1, 6);
    fill_random(u, rng);
    fill_random(v, rng);
    std::vector<Parameter<double>*> ps{&u, &v};
    auto rep = op_grad_check(
        [&](Tape<double>& t) { return ops::cosine(t, u.value, v.value); }, ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("cross entropy") {
    Parameter<double> z("z", 4, 8);
    fill_random(z, rng);
    std::vector<int> labels = {0, 3, 7, 3};
    std::vector<Parameter<double>*> ps{&z};
    auto rep = op_grad_check(
        [&](Tape<double>& t) { return ops::cross_entropy_mean(t, z.value, labels); }, ps);
    CHECK(rep.max_rel_err < tol);
  }
  SUBCASE("full encoder layer with rotary phases") {
    nn::EncoderLayer<double> layer("enc", 6, true);
    std::mt19937_64 lrng(91);
    layer.init(lrng);
    Parameter<double> x("x", 4, 6);
    fill_random(x, rng, -0.8, 0.8);
    auto w = random_const(4, 6, rng);
    std::vector<uint8_t> valid = {1, 1, 1, 0};
    std::vector<Parameter<double>*> ps{&x};
    layer.collect(ps);
    auto rep = op_grad_check(
        [&](Tape<double>& t) { return to_scalar(t, layer.forward(t, x.value, valid), w); }, ps,
        1e-5);
    CHECK(rep.max_rel_err < 1e-4);
  }
}
