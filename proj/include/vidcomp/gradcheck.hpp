#pragma once

#include <cstdint>

#include "vidcomp/loss_engine.hpp"

namespace vidcomp::loss {

struct GradcheckOptions {
  int batches = 100;
  int max_batch = 8;
  int max_dim = 16;
  int max_negatives = 3;
  double h = 1e-5;
  // Hinge margins closer than this to zero are resampled.
  double min_margin = 1e-3;
  std::uint64_t seed = 0;
};

struct GradcheckResult {
  double infonce_error = 0.0;
  double preference_error = 0.0;
  double total_error = 0.0;
  double temperature_error = 0.0;
  int batches = 0;

  double worst() const;
};

/// Random batch with every preference hinge at least `min_margin` from its kink.
LossBatch random_batch(int batch, int dim, int negatives, double min_margin, std::uint64_t seed);

/// Compares analytic and central-difference gradients of the contrastive,
/// preference and total losses (embeddings and temperature) over random
/// batches.
GradcheckResult run_gradcheck(const GradcheckOptions& opts);

}  // namespace vidcomp::loss
