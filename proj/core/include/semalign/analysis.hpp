#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "semalign/linalg.hpp"
#include "semalign/model.hpp"
#include "semalign/semantics.hpp"

namespace semalign {

struct CkaGrid {
  std::size_t rows = 0;  // layers of model A
  std::size_t cols = 0;  // layers of model B
  std::vector<double> values;
  std::string model_a;
  std::string model_b;
  std::string condition;  // e.g. "before" / "after"

  double at(std::size_t i, std::size_t j) const { return values.at(i * cols + j); }
};

// Entry (i, j) = linear CKA between layer i of A and layer j of B, with
// token positions pooled over every trace in the set. Traces are paired by
// index. Throws AlignmentError when token counts differ.
CkaGrid cka_grid(const std::vector<LayerTrace>& traces_a, const std::vector<LayerTrace>& traces_b,
                 std::string model_a = {}, std::string model_b = {}, std::string condition = {});

// Fraction of rows i >= 2 (of rows - 1) whose argmax column is >= the
// previous row's argmax. Lowest column wins ties. 1.0 for a single row.
double diagonal_statistic(const CkaGrid& grid);

struct DeltaReport {
  std::vector<double> delta;  // after - before
  double max_abs = 0.0;
  double frobenius = 0.0;
};

// Throws ShapeError when shapes or labels differ.
DeltaReport compare_grids(const CkaGrid& before, const CkaGrid& after);

// Named grids and curves plus a JSON manifest. `summary` values are written
// as JSON numbers, `info` values as strings.
struct ReportBundle {
  std::map<std::string, CkaGrid> grids;
  std::map<std::string, ValidationCurve> curves;
  std::map<std::string, double> summary;
  std::map<std::string, std::string> info;
};

struct EmittedFile {
  std::string name;
  std::string checksum;
};

// Writes <dir>/<name>.csv per grid (row_layer,col_layer,value), per curve
// (layer,side,value), and <dir>/report.json listing every file with its
// checksum. Layers are 1-based, values use 17 significant digits. Throws
// DegenerateInput on an empty grid, IoError on write failures.
std::vector<EmittedFile> emit_report(const ReportBundle& bundle, const std::filesystem::path& dir);

std::string grid_to_csv(const CkaGrid& grid);
// Throws IoError / DegenerateInput.
CkaGrid grid_from_csv(const std::string& text);
std::string curve_to_csv(const ValidationCurve& curve);

// Collects traces of a model over a dataset in chunks of `chunk` examples.
std::vector<LayerTrace> collect_traces(const LmParams& model, const Dataset& data,
                                       std::size_t chunk = 64);

}  // namespace semalign
