#pragma once

#include <string>
#include <vector>

#include "nbr/core.hpp"
#include "nbr/dataset.hpp"

namespace nbr {

// First line of a prediction interchange file. External methods produce the
// same layout, so everything scores through one path.
struct PredictionFileHeader {
  std::string format = "nbr-pred-v1";
  std::string method;
  std::string dataset;
  std::string vocab_sha256;
  int k = 0;
};

// Records sorted by (user id, target index), one JSON object per line after
// the header line.
void write_predictions(const std::vector<RankedPrediction>& preds,
                       const PredictionFileHeader& header, const std::string& path);

PredictionFileHeader read_prediction_header(const std::string& path);

// Parses and validates against the bundle and cohort: checksum, item ids
// (canonical integers or source keys), duplicates, lengths, score shape, and
// an exact match between record keys and cohort instance keys. Throws
// ValidationError with the specific failure class.
std::vector<RankedPrediction> read_and_validate(const std::string& path,
                                                const DatasetBundle& bundle,
                                                const EvalCohort& cohort);

}  // namespace nbr
