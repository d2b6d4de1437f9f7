#include "vidcomp/loss_engine.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vidcomp/error.hpp"

namespace vidcomp::loss {

namespace {

struct Normalized {
  Matrix unit;
  Vector norm;
};

Normalized normalize_rows(const Matrix& m) {
  Normalized out{m, m.rowwise().norm()};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!(out.norm(i) > 0.0)) throw Error(ErrorKind::DegenerateEmbedding, "zero-norm embedding row");
    out.unit.row(i) /= out.norm(i);
  }
  return out;
}

// Pulls a gradient taken w.r.t. unit rows back to the raw rows.
Matrix backprop_normalize(const Normalized& n, const Matrix& g_unit) {
  Matrix g(g_unit.rows(), g_unit.cols());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const auto u = n.unit.row(i);
    g.row(i) = (g_unit.row(i) - u * u.dot(g_unit.row(i))) / n.norm(i);
  }
  return g;
}

// Numerically stable softmax over each row, plus the row log-sum-exp.
std::pair<Matrix, Vector> row_softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  Vector lse(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const auto e = (logits.row(i).array() - mx).exp();
    const double s = e.sum();
    p.row(i) = e / s;
    lse(i) = mx + std::log(s);
  }
  return {p, lse};
}

Gradients zero_gradients(const LossBatch& batch) {
  Gradients g{Matrix::Zero(batch.video.rows(), batch.video.cols()),
              Matrix::Zero(batch.text.rows(), batch.text.cols()),
              {},
              0.0};
  for (const auto& n : batch.negatives) g.negatives.push_back(Matrix::Zero(n.rows(), n.cols()));
  return g;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorKind::NumericalError, fmt::format("{} is not finite", what));
}

}  // namespace

void validate(const LossBatch& b) {
  if (b.video.rows() < 1) throw Error(ErrorKind::InvalidInput, "batch must hold at least one sample");
  if (b.video.rows() != b.text.rows() || b.video.cols() != b.text.cols()) {
    throw Error(ErrorKind::InvalidInput, "video and text embeddings differ in shape");
  }
  if (!b.negatives.empty()) {
    if (static_cast<Eigen::Index>(b.negatives.size()) != b.video.rows()) {
      throw Error(ErrorKind::InvalidInput, "need one negative block per sample");
    }
    for (const auto& n : b.negatives) {
      if (n.rows() != b.negatives.front().rows() || n.cols() != b.video.cols()) {
        throw Error(ErrorKind::InvalidInput, "negative blocks differ in shape");
      }
      if (!n.allFinite()) throw Error(ErrorKind::NumericalError, "non-finite negative embedding");
    }
  }
  if (!b.video.allFinite() || !b.text.allFinite()) {
    throw Error(ErrorKind::NumericalError, "non-finite embedding");
  }
  if (!(b.temperature > 0.0) || !std::isfinite(b.temperature)) {
    throw Error(ErrorKind::InvalidInput, "temperature must be positive");
  }
  if (!(b.lambda >= 0.0)) throw Error(ErrorKind::InvalidInput, "lambda must be non-negative");
}

std::size_t negatives_per_sample(const LossBatch& batch) {
  return batch.negatives.empty() ? 0 : static_cast<std::size_t>(batch.negatives.front().rows());
}

double cosine_sim(const Vector& u, const Vector& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw Error(ErrorKind::DegenerateEmbedding, "zero-norm embedding");
  return u.dot(v) / (nu * nv);
}

CosineGrad cosine_sim_grad(const Vector& u, const Vector& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw Error(ErrorKind::DegenerateEmbedding, "zero-norm embedding");
  const Vector uh = u / nu;
  const Vector vh = v / nv;
  const double c = uh.dot(vh);
  return {c, (vh - c * uh) / nu, (uh - c * vh) / nv};
}

LossValue infonce_loss(const LossBatch& batch, ContrastiveMode mode) {
  validate(batch);
  const Eigen::Index B = batch.video.rows();
  const Eigen::Index D = batch.video.cols();
  const auto v = normalize_rows(batch.video);
  const auto t = normalize_rows(batch.text);

  // Candidate texts for the video-to-text direction: the B paired texts,
  // then (NegAugmented only) every negative text.
  const Eigen::Index N = static_cast<Eigen::Index>(negatives_per_sample(batch));
  const bool augmented = mode == ContrastiveMode::NegAugmented && N > 0;
  std::vector<Normalized> negs;
  Matrix candidates = t.unit;
  if (augmented) {
    candidates.conservativeResize(B + B * N, D);
    for (Eigen::Index i = 0; i < B; ++i) {
      negs.push_back(normalize_rows(batch.negatives[static_cast<std::size_t>(i)]));
      candidates.block(B + i * N, 0, N, D) = negs.back().unit;
    }
  }

  const double inv_tau = 1.0 / batch.temperature;
  const Matrix logits = v.unit * candidates.transpose() * inv_tau;  // B x (B [+ B N])
  const Matrix paired = logits.leftCols(B);

  const auto [p_v2t, lse_v2t] = row_softmax(logits);
  const auto [p_t2v_t, lse_t2v] = row_softmax(paired.transpose());

  const double diag = paired.diagonal().sum();
  const double l_v2t = (lse_v2t.sum() - diag) / static_cast<double>(B);
  const double l_t2v = (lse_t2v.sum() - diag) / static_cast<double>(B);
  const double value = 0.5 * (l_v2t + l_t2v);
  require_finite(value, "contrastive loss");

  Matrix g = p_v2t;
  g.leftCols(B) += p_t2v_t.transpose();
  g.leftCols(B).diagonal().array() -= 2.0;
  g *= 0.5 / static_cast<double>(B);

  const Matrix g_video_unit = g * candidates * inv_tau;
  const Matrix g_cand_unit = g.transpose() * v.unit * inv_tau;

  LossValue out{value, zero_gradients(batch)};
  out.grad.video = backprop_normalize(v, g_video_unit);
  out.grad.text = backprop_normalize(t, g_cand_unit.topRows(B));
  if (augmented) {
    for (Eigen::Index i = 0; i < B; ++i) {
      const auto k = static_cast<std::size_t>(i);
      out.grad.negatives[k] = backprop_normalize(negs[k], g_cand_unit.block(B + i * N, 0, N, D));
    }
  }
  out.grad.log_inv_temp = (g.array() * logits.array()).sum();
  return out;
}

PreferenceValue preference_loss(double sim_pos, std::span<const double> sim_negs) {
  PreferenceValue out{0.0, 0.0, std::vector<double>(sim_negs.size(), 0.0)};
  for (std::size_t i = 0; i < sim_negs.size(); ++i) {
    const double m = sim_negs[i] - sim_pos;
    if (m > 0.0) {
      out.value += m;
      out.d_negs[i] += 1.0;
      out.d_pos -= 1.0;
    }
    for (std::size_t j = i + 1; j < sim_negs.size(); ++j) {
      const double mj = sim_negs[j] - sim_negs[i];
      if (mj > 0.0) {
        out.value += mj;
        out.d_negs[j] += 1.0;
        out.d_negs[i] -= 1.0;
      }
    }
  }
  return out;
}

LossValue batch_preference_loss(const LossBatch& batch) {
  validate(batch);
  LossValue out{0.0, zero_gradients(batch)};
  const std::size_t N = negatives_per_sample(batch);
  if (N == 0) return out;
  const double scale = 1.0 / static_cast<double>(batch.video.rows());
  for (Eigen::Index i = 0; i < batch.video.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Vector vi = batch.video.row(i).transpose();
    const auto pos = cosine_sim_grad(vi, batch.text.row(i).transpose());
    std::vector<CosineGrad> negs;
    std::vector<double> sims;
    for (std::size_t n = 0; n < N; ++n) {
      negs.push_back(cosine_sim_grad(vi, batch.negatives[k].row(static_cast<Eigen::Index>(n)).transpose()));
      sims.push_back(negs.back().value);
    }
    const auto pref = preference_loss(pos.value, sims);
    out.value += scale * pref.value;
    out.grad.video.row(i) += scale * pref.d_pos * pos.d_u.transpose();
    out.grad.text.row(i) += scale * pref.d_pos * pos.d_v.transpose();
    for (std::size_t n = 0; n < N; ++n) {
      out.grad.video.row(i) += scale * pref.d_negs[n] * negs[n].d_u.transpose();
      out.grad.negatives[k].row(static_cast<Eigen::Index>(n)) += scale * pref.d_negs[n] * negs[n].d_v.transpose();
    }
  }
  require_finite(out.value, "preference loss");
  return out;
}

TotalLoss total_loss(const LossBatch& batch, ContrastiveMode mode) {
  auto con = infonce_loss(batch, mode);
  TotalLoss out{con.value, con.value, 0.0, std::move(con.grad)};
  if (batch.lambda == 0.0 || negatives_per_sample(batch) == 0) return out;
  const auto pref = batch_preference_loss(batch);
  out.preference = pref.value;
  out.value += batch.lambda * pref.value;
  out.grad.video += batch.lambda * pref.grad.video;
  out.grad.text += batch.lambda * pref.grad.text;
  for (std::size_t k = 0; k < out.grad.negatives.size(); ++k) {
    out.grad.negatives[k] += batch.lambda * pref.grad.negatives[k];
  }
  require_finite(out.value, "total loss");
  return out;
}

double finite_diff_check(const ScalarFn& loss_fn, std::span<const double> params,
                         std::span<const double> analytic_grad, double h) {
  if (params.size() != analytic_grad.size()) {
    throw Error(ErrorKind::InvalidInput, "parameter and gradient sizes differ");
  }
  std::vector<double> x(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + h;
    const double up = loss_fn(x);
    x[k] = orig - h;
    const double down = loss_fn(x);
    x[k] = orig;
    const double fd = (up - down) / (2.0 * h);
    const double an = analytic_grad[k];
    worst = std::max(worst, std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)}));
  }
  return worst;
}

std::vector<double> flatten(const LossBatch& batch) {
  std::vector<double> out(batch.video.data(), batch.video.data() + batch.video.size());
  out.insert(out.end(), batch.text.data(), batch.text.data() + batch.text.size());
  for (const auto& n : batch.negatives) out.insert(out.end(), n.data(), n.data() + n.size());
  return out;
}

LossBatch unflatten(const LossBatch& shape, std::span<const double> flat) {
  LossBatch out = shape;
  std::size_t pos = 0;
  auto fill = [&](Matrix& m) {
    const auto count = static_cast<std::size_t>(m.size());
    if (pos + count > flat.size()) throw Error(ErrorKind::InvalidInput, "flat vector too short");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), count, m.data());
    pos += count;
  };
  fill(out.video);
  fill(out.text);
  for (auto& n : out.negatives) fill(n);
  if (pos != flat.size()) throw Error(ErrorKind::InvalidInput, "flat vector too long");
  return out;
}

std::vector<double> flatten(const Gradients& grad) {
  std::vector<double> out(grad.video.data(), grad.video.data() + grad.video.size());
  out.insert(out.end(), grad.text.data(), grad.text.data() + grad.text.size());
  for (const auto& n : grad.negatives) out.insert(out.end(), n.data(), n.data() + n.size());
  return out;
}

}  // namespace vidcomp::loss
