#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vidcomp::loss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One training batch. Rows are raw encoder outputs; the losses L2-normalize
/// them so contrastive logits and preference terms share cosine similarity.
struct LossBatch {
  Matrix video;                   // B x D
  Matrix text;                    // B x D, row i pairs with video row i
  std::vector<Matrix> negatives;  // B entries of N x D, severity ascending; empty means N = 0
  double temperature = 0.07;
  double lambda = 0.0;
};

/// Throws Error(InvalidInput) on shape problems and Error(NumericalError) on
/// non-finite entries.
void validate(const LossBatch& batch);

std::size_t negatives_per_sample(const LossBatch& batch);

/// Throws Error(DegenerateEmbedding) when either vector has zero norm.
double cosine_sim(const Vector& u, const Vector& v);

struct CosineGrad {
  double value;
  Vector d_u;
  Vector d_v;
};

CosineGrad cosine_sim_grad(const Vector& u, const Vector& v);

enum class ContrastiveMode {
  Standard,
  // Video-to-text softmax also ranges over every negative text in the batch.
  NegAugmented,
};

struct Gradients {
  Matrix video;
  Matrix text;
  std::vector<Matrix> negatives;  // same layout as LossBatch::negatives
  double log_inv_temp = 0.0;      // d loss / d s, with temperature = exp(-s)
};

struct LossValue {
  double value = 0.0;
  Gradients grad;
};

/// Symmetric InfoNCE: (L_V2T + L_T2V) / 2 over temperature-scaled cosine
/// logits. Throws Error(NumericalError) on non-finite results.
LossValue infonce_loss(const LossBatch& batch, ContrastiveMode mode = ContrastiveMode::Standard);

struct PreferenceValue {
  double value = 0.0;
  double d_pos = 0.0;
  std::vector<double> d_negs;
};

/// Hierarchical pairwise preference for one sample:
///   sum_i max(neg_i - pos, 0) + sum_{i<j} max(neg_j - neg_i, 0)
/// with negatives ordered by increasing severity. Subgradient 0 at a kink.
PreferenceValue preference_loss(double sim_pos, std::span<const double> sim_negs);

/// Mean over the batch of preference_loss on cosine similarities.
LossValue batch_preference_loss(const LossBatch& batch);

struct TotalLoss {
  double value = 0.0;
  double contrastive = 0.0;
  double preference = 0.0;
  Gradients grad;
};

/// contrastive + lambda * preference.
TotalLoss total_loss(const LossBatch& batch, ContrastiveMode mode = ContrastiveMode::Standard);

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences against an analytic gradient; returns
/// max_k |fd_k - an_k| / max(1, |fd_k|, |an_k|).
double finite_diff_check(const ScalarFn& loss_fn, std::span<const double> params,
                         std::span<const double> analytic_grad, double h = 1e-5);

// Flattening helpers for gradient checks over every batch entry.
std::vector<double> flatten(const LossBatch& batch);
LossBatch unflatten(const LossBatch& shape, std::span<const double> flat);
std::vector<double> flatten(const Gradients& grad);

}  // namespace vidcomp::loss
