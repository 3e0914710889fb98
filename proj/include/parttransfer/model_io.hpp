#pragma once

#include <filesystem>
#include <iosfwd>

#include "parttransfer/recognition.hpp"
#include "parttransfer/regression.hpp"

namespace pt {

// Model files are a single JSON header line followed by an FVEC block
// holding the weight vectors.
//
//   regressor:  {"kind": "regressor", "classes": [...], "dim": d, "lambda": l,
//                "convention": "size-normalized", "bias_feature": true}
//               payload rows: for each class (header order) targets x, y, w, h
//   classifier: {"kind": "classifier", "classes": [...], "biases": [...],
//                "layout": [{"name": "full", "dim": 128}, ...], "C": 1.0}
//               payload rows: one weight vector per class
//
// Weights are stored as float32, like feature files.

void write_regressor(std::ostream& out, const RegressorModel& model);
void write_regressor(const std::filesystem::path& path, const RegressorModel& model);
RegressorModel read_regressor(std::istream& in, const std::string& what);
RegressorModel read_regressor(const std::filesystem::path& path);

void write_classifier(std::ostream& out, const ClassifierModel& model);
void write_classifier(const std::filesystem::path& path, const ClassifierModel& model);
ClassifierModel read_classifier(std::istream& in, const std::string& what);
ClassifierModel read_classifier(const std::filesystem::path& path);

}  // namespace pt
