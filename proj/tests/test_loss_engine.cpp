#include <doctest.h>

#include <cmath>
#include <numeric>

#include "vidcomp/error.hpp"
#include "vidcomp/gradcheck.hpp"
#include "vidcomp/loss_engine.hpp"
#include "vidcomp/rng.hpp"

using namespace vidcomp;
using namespace vidcomp::loss;

namespace {

double cos_oracle(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  double dot = 0, na = 0, nb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

// Loop-by-loop InfoNCE; `augmented` adds every negative text to each video row's denominator.
double infonce_oracle(const LossBatch& b, bool augmented) {
  const auto B = b.video.rows();
  double v2t = 0, t2v = 0;
  for (Eigen::Index i = 0; i < B; ++i) {
    double denom = 0;
    for (Eigen::Index j = 0; j < B; ++j) denom += std::exp(cos_oracle(b.video.row(i), b.text.row(j)) / b.temperature);
    if (augmented) {
      for (const auto& negs : b.negatives) {
        for (Eigen::Index n = 0; n < negs.rows(); ++n) {
          denom += std::exp(cos_oracle(b.video.row(i), negs.row(n)) / b.temperature);
        }
      }
    }
    v2t -= std::log(std::exp(cos_oracle(b.video.row(i), b.text.row(i)) / b.temperature) / denom);
  }
  for (Eigen::Index j = 0; j < B; ++j) {
    double denom = 0;
    for (Eigen::Index i = 0; i < B; ++i) denom += std::exp(cos_oracle(b.video.row(i), b.text.row(j)) / b.temperature);
    t2v -= std::log(std::exp(cos_oracle(b.video.row(j), b.text.row(j)) / b.temperature) / denom);
  }
  return (v2t / B + t2v / B) / 2;
}

double preference_oracle(double pos, std::vector<double> negs) {
  double s = 0;
  for (double n : negs) s += std::max(n - pos, 0.0);
  for (std::size_t i = 0; i < negs.size(); ++i)
    for (std::size_t j = i + 1; j < negs.size(); ++j) s += std::max(negs[j] - negs[i], 0.0);
  return s;
}

Eigen::RowVectorXd at_angle(double cosine) {
  Eigen::RowVectorXd v(2);
  v << cosine, std::sqrt(1 - cosine * cosine);
  return v;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected vidcomp::Error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("cosine similarity") {
  Vector a(2), b(2);
  a << 1, 1;
  b << 1, 0;
  CHECK(cosine_sim(a, b) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(cosine_sim(3.5 * a, 0.2 * b) == doctest::Approx(cosine_sim(a, b)));
  CHECK(kind_of([&] { cosine_sim(a, Vector::Zero(2)); }) == ErrorKind::DegenerateEmbedding);
  const auto g = cosine_sim_grad(a, b);
  CHECK(g.value == doctest::Approx(cosine_sim(a, b)));
  // d/du (u.v / |u||v|) at u=(1,1), v=(1,0): v/(|u||v|) - cos * u/|u|^2
  CHECK(g.d_u[0] == doctest::Approx(1 / std::sqrt(2.0) - (1 / std::sqrt(2.0)) * 0.5));
  CHECK(g.d_u[1] == doctest::Approx(-(1 / std::sqrt(2.0)) * 0.5));
}

TEST_CASE("contrastive loss closed forms") {
  LossBatch b;
  b.video = Matrix::Identity(2, 2);
  b.text = Matrix::Identity(2, 2);
  b.temperature = 1.0;
  CHECK(infonce_loss(b).value == doctest::Approx(std::log(1 + std::exp(-1.0))));
  CHECK(infonce_loss(b).value == doctest::Approx(0.3133).epsilon(1e-4));

  LossBatch u;
  u.video = Matrix::Ones(5, 3);
  u.text = Matrix::Ones(5, 3);
  CHECK(infonce_loss(u).value == doctest::Approx(std::log(5.0)));

  LossBatch one;
  one.video = Matrix::Random(1, 4);
  one.text = Matrix::Random(1, 4);
  CHECK(infonce_loss(one).value == doctest::Approx(0.0));
}

TEST_CASE("contrastive loss matches the loop oracle and is permutation invariant") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto b = random_batch(2 + static_cast<int>(seed % 6), 3 + static_cast<int>(seed % 5),
                                static_cast<int>(seed % 3), 0.0, seed);
    const double v = infonce_loss(b).value;
    CHECK(v == doctest::Approx(infonce_oracle(b, false)).epsilon(1e-12));
    CHECK(v >= 0.0);
    if (!b.negatives.empty()) {
      CHECK(infonce_loss(b, ContrastiveMode::NegAugmented).value ==
            doctest::Approx(infonce_oracle(b, true)).epsilon(1e-12));
    }
    std::vector<int> perm(static_cast<std::size_t>(b.video.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<int>(perm));
    LossBatch p = b;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      p.video.row(static_cast<Eigen::Index>(i)) = b.video.row(perm[i]);
      p.text.row(static_cast<Eigen::Index>(i)) = b.text.row(perm[i]);
      if (!b.negatives.empty()) p.negatives[i] = b.negatives[static_cast<std::size_t>(perm[i])];
    }
    CHECK(infonce_loss(p).value == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("preference loss values and subgradients") {
  const std::vector<double> a{0.9, 0.3};
  const auto p = preference_loss(0.5, a);
  CHECK(p.value == doctest::Approx(0.4));
  CHECK(p.d_pos == doctest::Approx(-1.0));
  CHECK(p.d_negs == std::vector<double>{1.0, 0.0});

  const std::vector<double> b{0.4, 0.6};
  const auto q = preference_loss(0.2, b);
  CHECK(q.value == doctest::Approx(0.8));
  CHECK(q.d_pos == doctest::Approx(-2.0));
  CHECK(q.d_negs[0] == doctest::Approx(0.0));
  CHECK(q.d_negs[1] == doctest::Approx(2.0));

  // At a kink the subgradient is zero.
  const std::vector<double> tie{0.5};
  CHECK(preference_loss(0.5, tie).value == 0.0);
  CHECK(preference_loss(0.5, tie).d_pos == 0.0);
  CHECK(preference_loss(0.7, {}).value == 0.0);

  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const double pos = rng.uniform() * 2 - 1;
    std::vector<double> negs(1 + rng.index(4));
    for (auto& n : negs) n = rng.uniform() * 2 - 1;
    const double v = preference_loss(pos, negs).value;
    CHECK(v == doctest::Approx(preference_oracle(pos, negs)));
    std::vector<double> shifted = negs;
    for (auto& n : shifted) n += 0.37;
    CHECK(preference_loss(pos + 0.37, shifted).value == doctest::Approx(v));
    bool chain = pos >= negs[0];
    for (std::size_t k = 1; k < negs.size(); ++k) chain = chain && negs[k - 1] >= negs[k];
    CHECK((v == 0.0) == chain);
  }
}

TEST_CASE("total loss adds the weighted preference term") {
  LossBatch b;
  b.video = at_angle(1.0);
  b.text = at_angle(0.5);
  b.negatives = {Matrix(2, 2)};
  b.negatives[0].row(0) = at_angle(0.9);
  b.negatives[0].row(1) = at_angle(0.3);
  b.lambda = 100.0;
  const auto t = total_loss(b);
  CHECK(t.preference == doctest::Approx(0.4));
  CHECK(t.contrastive == doctest::Approx(infonce_oracle(b, false)));
  CHECK(t.value == doctest::Approx(t.contrastive + 40.0));

  LossBatch two = random_batch(2, 4, 2, 1e-3, 5);
  two.lambda = 100.0;
  const auto tt = total_loss(two);
  CHECK(tt.value == doctest::Approx(infonce_oracle(two, false) + 100.0 * batch_preference_loss(two).value));
}

TEST_CASE("batch validation") {
  LossBatch b;
  b.video = Matrix::Ones(2, 3);
  b.text = Matrix::Ones(3, 3);
  CHECK(kind_of([&] { validate(b); }) == ErrorKind::InvalidInput);
  b.text = Matrix::Ones(2, 4);
  CHECK(kind_of([&] { validate(b); }) == ErrorKind::InvalidInput);
  b.text = Matrix::Ones(2, 3);
  b.negatives = {Matrix::Ones(1, 3)};
  CHECK(kind_of([&] { validate(b); }) == ErrorKind::InvalidInput);
  b.negatives = {Matrix::Ones(1, 3), Matrix::Ones(2, 3)};
  CHECK(kind_of([&] { validate(b); }) == ErrorKind::InvalidInput);
  b.negatives.clear();
  b.video(0, 0) = std::nan("");
  CHECK(kind_of([&] { validate(b); }) == ErrorKind::NumericalError);
  b.video(0, 0) = 1.0;
  b.temperature = 0.0;
  CHECK(kind_of([&] { validate(b); }) == ErrorKind::InvalidInput);
}

TEST_CASE("finite-difference check") {
  // f(x) = sum_k (k+1) x_k^2 has gradient 2(k+1)x_k; central differences are exact up to rounding.
  const std::vector<double> x{0.3, -1.2, 2.0};
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) g[k] = 2.0 * (k + 1) * x[k];
  const ScalarFn f = [](std::span<const double> p) {
    double s = 0;
    for (std::size_t k = 0; k < p.size(); ++k) s += (k + 1) * p[k] * p[k];
    return s;
  };
  CHECK(finite_diff_check(f, x, g) < 1e-9);
  g[1] += 0.1;
  CHECK(finite_diff_check(f, x, g) > 1e-3);

  const auto b = random_batch(4, 8, 2, 1e-3, 21);
  const auto flat = flatten(b);
  const auto con = infonce_loss(b);
  CHECK(finite_diff_check([&](std::span<const double> p) { return infonce_loss(unflatten(b, p)).value; }, flat,
                          flatten(con.grad)) < 1e-6);
  const auto pref = batch_preference_loss(b);
  CHECK(finite_diff_check([&](std::span<const double> p) { return batch_preference_loss(unflatten(b, p)).value; },
                          flat, flatten(pref.grad)) < 1e-6);
}

TEST_CASE("gradcheck suite passes on small settings") {
  GradcheckOptions o;
  o.batches = 20;
  const auto r = run_gradcheck(o);
  CHECK(r.batches == 20);
  CHECK(r.worst() < 1e-6);
}
