#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vidcomp/core.hpp"

namespace vidcomp::validator {

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Set-of-words overlap between a generated paragraph and the original:
///   precision = |set(P.split()) & set(O.split())| / |set(P.split())|
///   recall    = |set(P.split()) & set(O.split())| / |set(O.split())|
/// With `normalize` the words are lowercased and stripped of surrounding
/// punctuation first. Throws Error(InvalidInput) if either side has no words.
PrecisionRecall word_precision_recall(std::string_view generated, std::string_view original,
                                      bool normalize = false);

struct ValidationReport {
  double precision = 0.0;
  double recall = 0.0;
  bool accepted = false;
  double threshold = 0.8;
};

/// Accepts iff precision >= threshold and recall >= threshold.
ValidationReport validate_output(std::string_view generated, std::string_view original,
                                 double threshold = 0.8, bool normalize = false);

std::vector<std::string> check_sample(const CompSample& sample);

}  // namespace vidcomp::validator
