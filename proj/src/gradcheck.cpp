#include "vidcomp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vidcomp/error.hpp"
#include "vidcomp/rng.hpp"

namespace vidcomp::loss {

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

bool away_from_kinks(const LossBatch& b, double min_margin) {
  for (Eigen::Index i = 0; i < b.video.rows() && !b.negatives.empty(); ++i) {
    const Vector v = b.video.row(i).transpose();
    std::vector<double> sims{cosine_sim(v, b.text.row(i).transpose())};
    const auto& negs = b.negatives[static_cast<std::size_t>(i)];
    for (Eigen::Index n = 0; n < negs.rows(); ++n) sims.push_back(cosine_sim(v, negs.row(n).transpose()));
    // Every hinge compares two of these similarities.
    for (std::size_t a = 0; a < sims.size(); ++a) {
      for (std::size_t c = a + 1; c < sims.size(); ++c) {
        if (std::abs(sims[a] - sims[c]) <= min_margin) return false;
      }
    }
  }
  return true;
}

}  // namespace

double GradcheckResult::worst() const {
  return std::max({infonce_error, preference_error, total_error, temperature_error});
}

LossBatch random_batch(int batch, int dim, int negatives, double min_margin, std::uint64_t seed) {
  Rng rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    LossBatch b;
    b.video = random_matrix(rng, batch, dim);
    b.text = random_matrix(rng, batch, dim);
    if (negatives > 0) {
      for (int i = 0; i < batch; ++i) b.negatives.push_back(random_matrix(rng, negatives, dim));
    }
    b.temperature = 0.05 + 0.95 * rng.uniform();
    b.lambda = 0.5 + 2.0 * rng.uniform();
    if (away_from_kinks(b, min_margin)) return b;
  }
  throw Error(ErrorKind::NumericalError, "could not sample a batch away from hinge kinks");
}

GradcheckResult run_gradcheck(const GradcheckOptions& opts) {
  Rng rng(derive_seed(opts.seed, {"gradcheck"}));
  GradcheckResult out;
  for (int round = 0; round < opts.batches; ++round) {
    const int b = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(opts.max_batch)));
    const int d = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(std::max(1, opts.max_dim - 1))));
    const int n = static_cast<int>(rng.index(static_cast<std::size_t>(opts.max_negatives + 1)));
    const auto batch = random_batch(b, d, n, opts.min_margin, rng.next());
    const auto x = flatten(batch);

    const auto con = infonce_loss(batch);
    out.infonce_error = std::max(
        out.infonce_error,
        finite_diff_check([&](std::span<const double> p) { return infonce_loss(unflatten(batch, p)).value; }, x,
                          flatten(con.grad), opts.h));
    if (n > 0) {
      const auto aug = infonce_loss(batch, ContrastiveMode::NegAugmented);
      out.infonce_error = std::max(
          out.infonce_error,
          finite_diff_check(
              [&](std::span<const double> p) {
                return infonce_loss(unflatten(batch, p), ContrastiveMode::NegAugmented).value;
              },
              x, flatten(aug.grad), opts.h));
    }

    const auto pref = batch_preference_loss(batch);
    out.preference_error = std::max(
        out.preference_error,
        finite_diff_check([&](std::span<const double> p) { return batch_preference_loss(unflatten(batch, p)).value; },
                          x, flatten(pref.grad), opts.h));

    const auto total = total_loss(batch);
    out.total_error = std::max(
        out.total_error,
        finite_diff_check([&](std::span<const double> p) { return total_loss(unflatten(batch, p)).value; }, x,
                          flatten(total.grad), opts.h));

    const double s0 = -std::log(batch.temperature);
    const std::vector<double> s{s0};
    const std::vector<double> gs{total.grad.log_inv_temp};
    out.temperature_error = std::max(
        out.temperature_error, finite_diff_check(
                                   [&](std::span<const double> p) {
                                     auto shifted = batch;
                                     shifted.temperature = std::exp(-p[0]);
                                     return total_loss(shifted).value;
                                   },
                                   s, gs, opts.h));
    ++out.batches;
  }
  return out;
}

}  // namespace vidcomp::loss
