#pragma once

#include <cstdint>
#include <vector>

#include "vidcomp/loss_engine.hpp"

namespace vidcomp::loss {

/// Linear dual encoder standing in for real video/text towers.
struct ToyEncoderParams {
  Matrix w_video;  // D_in x D
  Matrix w_text;   // D_in x D
  double log_inv_temp = 0.0;  // temperature = exp(-log_inv_temp)

  double temperature() const;
};

/// Gaussian init scaled by 1/sqrt(D_in); temperature starts at 0.07.
ToyEncoderParams init_params(int input_dim, int embed_dim, std::uint64_t seed);

/// Feature-space dataset; negatives[k] holds severity k+1 for every sample.
struct ToyDataset {
  Matrix video;                   // M x D_in
  Matrix text;                    // M x D_in
  std::vector<Matrix> negatives;  // N entries of M x D_in

  Eigen::Index size() const { return video.rows(); }
};

/// Generator where each severity level adds one more disruption to the text:
/// a step of `disruption_scale` along a shared disruption direction with
/// per-sample jitter, plus fresh paraphrase noise on the content features.
/// Video and positive text share the content latent.
struct SyntheticSpec {
  int content_dim = 8;
  int cue_dim = 8;
  int levels = 2;
  int train_samples = 2048;
  int heldout_samples = 1024;
  double video_noise = 0.1;
  double text_noise = 0.1;
  double disruption_scale = 0.5;
  double disruption_jitter = 0.3;
  std::uint64_t seed = 0;

  int input_dim() const { return content_dim + cue_dim; }
};

struct SyntheticData {
  ToyDataset train;
  ToyDataset heldout;
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

struct OrderingMetrics {
  double full_chain_accuracy = 0.0;       // sim_pos > sim_neg1 > ... > sim_negN
  std::vector<double> adjacent_accuracy;  // [pos>neg1, neg1>neg2, ...]
};

OrderingMetrics ordering_metrics(const ToyEncoderParams& params, const ToyDataset& data);

struct TrainOptions {
  double lr = 0.05;
  int steps = 3000;
  double lambda = 100.0;
  int batch = 64;
  bool learn_temperature = true;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ToyEncoderParams params;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // one entry per step
};

/// Plain SGD on total_loss over minibatches drawn without replacement per
/// epoch. Throws Error(TrainingDiverged) when the loss or parameters stop
/// being finite.
TrainResult train_toy(const ToyDataset& data, ToyEncoderParams params, const TrainOptions& opts);

/// Loss and parameter gradients for one batch of features; exposed for
/// gradient checks of the encoder chain rule.
struct ParamGradients {
  double loss = 0.0;
  Matrix w_video;
  Matrix w_text;
  double log_inv_temp = 0.0;
};

ParamGradients encoder_loss(const ToyEncoderParams& params, const ToyDataset& batch, double lambda);

}  // namespace vidcomp::loss
