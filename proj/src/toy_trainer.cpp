#include "vidcomp/toy_trainer.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "vidcomp/error.hpp"
#include "vidcomp/rng.hpp"

namespace vidcomp::loss {

namespace {

constexpr double kInitTemperature = 0.07;
// Same cap CLIP uses: logit scale at most 100.
const double kMaxLogInvTemp = std::log(100.0);

Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = scale * rng.normal();
  }
  return m;
}

ToyDataset make_split(const SyntheticSpec& spec, const Vector& direction, int count, Rng& rng) {
  const int cd = spec.content_dim;
  const int qd = spec.cue_dim;
  ToyDataset d{Matrix(count, cd + qd), Matrix(count, cd + qd), {}};
  for (int k = 0; k < spec.levels; ++k) d.negatives.emplace_back(count, cd + qd);
  const double jitter = spec.disruption_jitter / std::sqrt(static_cast<double>(qd));
  for (int i = 0; i < count; ++i) {
    const Matrix content = gaussian(rng, 1, cd, 1.0);
    d.video.row(i) << content + gaussian(rng, 1, cd, spec.video_noise), gaussian(rng, 1, qd, spec.video_noise);
    d.text.row(i) << content + gaussian(rng, 1, cd, spec.text_noise), gaussian(rng, 1, qd, spec.text_noise);
    Matrix cue = Matrix::Zero(1, qd);
    for (int k = 0; k < spec.levels; ++k) {
      cue += spec.disruption_scale * (direction.transpose() + gaussian(rng, 1, qd, jitter));
      d.negatives[static_cast<std::size_t>(k)].row(i)
          << content + gaussian(rng, 1, cd, spec.text_noise), cue + gaussian(rng, 1, qd, spec.text_noise);
    }
  }
  return d;
}

ToyDataset take_rows(const ToyDataset& data, std::span<const Eigen::Index> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  ToyDataset out{Matrix(n, data.video.cols()), Matrix(n, data.text.cols()), {}};
  for (const auto& lvl : data.negatives) out.negatives.emplace_back(n, lvl.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = rows[static_cast<std::size_t>(r)];
    out.video.row(r) = data.video.row(src);
    out.text.row(r) = data.text.row(src);
    for (std::size_t k = 0; k < data.negatives.size(); ++k) out.negatives[k].row(r) = data.negatives[k].row(src);
  }
  return out;
}

bool all_finite(const ToyEncoderParams& p) {
  return p.w_video.allFinite() && p.w_text.allFinite() && std::isfinite(p.log_inv_temp);
}

}  // namespace

double ToyEncoderParams::temperature() const { return std::exp(-log_inv_temp); }

ToyEncoderParams init_params(int input_dim, int embed_dim, std::uint64_t seed) {
  if (input_dim < 1 || embed_dim < 1) throw Error(ErrorKind::InvalidInput, "dimensions must be positive");
  Rng rng(derive_seed(seed, {"toy-init"}));
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  ToyEncoderParams p;
  p.w_video = gaussian(rng, input_dim, embed_dim, scale);
  p.w_text = gaussian(rng, input_dim, embed_dim, scale);
  p.log_inv_temp = -std::log(kInitTemperature);
  return p;
}

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.content_dim < 1 || spec.cue_dim < 1 || spec.levels < 0 || spec.train_samples < 1 ||
      spec.heldout_samples < 1) {
    throw Error(ErrorKind::InvalidInput, "invalid synthetic dataset spec");
  }
  Rng dir_rng(derive_seed(spec.seed, {"direction"}));
  Vector direction = gaussian(dir_rng, spec.cue_dim, 1, 1.0);
  direction.normalize();
  Rng train_rng(derive_seed(spec.seed, {"train"}));
  Rng held_rng(derive_seed(spec.seed, {"heldout"}));
  return {make_split(spec, direction, spec.train_samples, train_rng),
          make_split(spec, direction, spec.heldout_samples, held_rng)};
}

OrderingMetrics ordering_metrics(const ToyEncoderParams& params, const ToyDataset& data) {
  const Matrix ev = data.video * params.w_video;
  const Matrix et = data.text * params.w_text;
  std::vector<Matrix> en;
  for (const auto& lvl : data.negatives) en.push_back(lvl * params.w_text);

  OrderingMetrics m;
  m.adjacent_accuracy.assign(en.size(), 0.0);
  std::size_t chain = 0;
  const auto M = data.size();
  for (Eigen::Index i = 0; i < M; ++i) {
    const Vector v = ev.row(i).transpose();
    double prev = cosine_sim(v, et.row(i).transpose());
    bool ordered = true;
    for (std::size_t k = 0; k < en.size(); ++k) {
      const double s = cosine_sim(v, en[k].row(i).transpose());
      if (prev > s) {
        m.adjacent_accuracy[k] += 1.0;
      } else {
        ordered = false;
      }
      prev = s;
    }
    if (ordered) ++chain;
  }
  for (auto& a : m.adjacent_accuracy) a /= static_cast<double>(M);
  m.full_chain_accuracy = static_cast<double>(chain) / static_cast<double>(M);
  return m;
}

ParamGradients encoder_loss(const ToyEncoderParams& params, const ToyDataset& batch, double lambda) {
  LossBatch lb;
  lb.video = batch.video * params.w_video;
  lb.text = batch.text * params.w_text;
  lb.temperature = params.temperature();
  lb.lambda = lambda;
  std::vector<Matrix> levels;
  for (const auto& lvl : batch.negatives) levels.push_back(lvl * params.w_text);
  if (!levels.empty()) {
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
      Matrix block(static_cast<Eigen::Index>(levels.size()), lb.video.cols());
      for (std::size_t k = 0; k < levels.size(); ++k) block.row(static_cast<Eigen::Index>(k)) = levels[k].row(i);
      lb.negatives.push_back(std::move(block));
    }
  }

  const auto total = total_loss(lb);
  ParamGradients g{total.value, batch.video.transpose() * total.grad.video,
                   batch.text.transpose() * total.grad.text, total.grad.log_inv_temp};
  for (std::size_t k = 0; k < levels.size(); ++k) {
    Matrix rows(batch.size(), lb.video.cols());
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
      rows.row(i) = total.grad.negatives[static_cast<std::size_t>(i)].row(static_cast<Eigen::Index>(k));
    }
    g.w_text += batch.negatives[k].transpose() * rows;
  }
  return g;
}

TrainResult train_toy(const ToyDataset& data, ToyEncoderParams params, const TrainOptions& opts) {
  if (opts.batch < 1 || opts.steps < 0 || !(opts.lr > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "invalid training options");
  }
  if (data.size() < 1) throw Error(ErrorKind::InvalidInput, "empty training set");
  if (params.w_video.rows() != data.video.cols() || params.w_text.rows() != data.text.cols()) {
    throw Error(ErrorKind::InvalidInput, "parameter input dimension does not match the data");
  }
  Rng rng(derive_seed(opts.seed, {"toy-train"}));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::size_t cursor = order.size();
  const auto batch = std::min<std::size_t>(static_cast<std::size_t>(opts.batch), order.size());

  TrainResult result{std::move(params), 0.0, {}};
  result.loss_history.reserve(static_cast<std::size_t>(opts.steps));
  for (int step = 0; step < opts.steps; ++step) {
    if (cursor + batch > order.size()) {
      rng.shuffle(std::span(order));
      cursor = 0;
    }
    const auto mb = take_rows(data, std::span(order).subspan(cursor, batch));
    cursor += batch;

    ParamGradients g;
    try {
      g = encoder_loss(result.params, mb, opts.lambda);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NumericalError && e.kind() != ErrorKind::DegenerateEmbedding) throw;
      throw Error(ErrorKind::TrainingDiverged, fmt::format("step {}: {}", step, e.what()));
    }
    result.params.w_video -= opts.lr * g.w_video;
    result.params.w_text -= opts.lr * g.w_text;
    if (opts.learn_temperature) {
      result.params.log_inv_temp =
          std::clamp(result.params.log_inv_temp - opts.lr * g.log_inv_temp, 0.0, kMaxLogInvTemp);
    }
    if (!std::isfinite(g.loss) || !all_finite(result.params)) {
      throw Error(ErrorKind::TrainingDiverged, fmt::format("step {}: parameters left finite range", step));
    }
    result.loss_history.push_back(g.loss);
    result.final_loss = g.loss;
  }
  return result;
}

}  // namespace vidcomp::loss
