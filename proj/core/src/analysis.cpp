#include "semalign/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "semalign/checksum.hpp"
#include "semalign/errors.hpp"

namespace semalign {

using nlohmann::json;

namespace {

Matrix pool_layer(const std::vector<LayerTrace>& traces, std::size_t layer) {
  std::size_t rows = 0;
  const std::size_t cols = traces.front().per_layer.at(layer).cols();
  for (const auto& t : traces) rows += t.per_layer.at(layer).rows();
  Matrix out(rows, cols);
  std::size_t r = 0;
  for (const auto& t : traces) {
    const Matrix& h = t.per_layer[layer];
    std::copy(h.values().begin(), h.values().end(), out.data() + r * cols);
    r += h.rows();
  }
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

CkaGrid cka_grid(const std::vector<LayerTrace>& traces_a, const std::vector<LayerTrace>& traces_b,
                 std::string model_a, std::string model_b, std::string condition) {
  if (traces_a.empty() || traces_b.empty()) throw DegenerateInput("cka_grid: empty trace set");
  if (traces_a.size() != traces_b.size())
    throw AlignmentError("cka_grid: trace sets hold different batch counts");
  for (std::size_t i = 0; i < traces_a.size(); ++i) {
    if (traces_a[i].per_layer.empty() || traces_b[i].per_layer.empty())
      throw DegenerateInput("cka_grid: trace without layers");
    if (traces_a[i].per_layer.front().rows() != traces_b[i].per_layer.front().rows())
      throw AlignmentError("cka_grid: batch " + std::to_string(i) + " has " +
                           std::to_string(traces_a[i].per_layer.front().rows()) + " vs " +
                           std::to_string(traces_b[i].per_layer.front().rows()) + " tokens");
  }
  CkaGrid g;
  g.rows = traces_a.front().per_layer.size();
  g.cols = traces_b.front().per_layer.size();
  g.model_a = std::move(model_a);
  g.model_b = std::move(model_b);
  g.condition = std::move(condition);
  std::vector<Matrix> pa, pb;
  for (std::size_t i = 0; i < g.rows; ++i) pa.push_back(pool_layer(traces_a, i));
  for (std::size_t j = 0; j < g.cols; ++j) pb.push_back(pool_layer(traces_b, j));
  g.values.resize(g.rows * g.cols);
  for (std::size_t i = 0; i < g.rows; ++i)
    for (std::size_t j = 0; j < g.cols; ++j) g.values[i * g.cols + j] = linear_cka(pa[i], pb[j]);
  return g;
}

double diagonal_statistic(const CkaGrid& grid) {
  if (grid.rows == 0 || grid.cols == 0) throw DegenerateInput("diagonal_statistic: empty grid");
  if (grid.rows == 1) return 1.0;
  auto argmax = [&](std::size_t i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < grid.cols; ++j)
      if (grid.at(i, j) > grid.at(i, best)) best = j;
    return best;
  };
  std::size_t ok = 0;
  std::size_t prev = argmax(0);
  for (std::size_t i = 1; i < grid.rows; ++i) {
    const std::size_t cur = argmax(i);
    if (cur >= prev) ++ok;
    prev = cur;
  }
  return static_cast<double>(ok) / static_cast<double>(grid.rows - 1);
}

DeltaReport compare_grids(const CkaGrid& before, const CkaGrid& after) {
  if (before.rows != after.rows || before.cols != after.cols ||
      before.values.size() != after.values.size())
    throw ShapeError("compare_grids: grid shapes differ");
  if (before.model_a != after.model_a || before.model_b != after.model_b)
    throw ShapeError("compare_grids: grids compare different models");
  DeltaReport d;
  d.delta.resize(before.values.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < d.delta.size(); ++i) {
    d.delta[i] = after.values[i] - before.values[i];
    d.max_abs = std::max(d.max_abs, std::abs(d.delta[i]));
    ss += d.delta[i] * d.delta[i];
  }
  d.frobenius = std::sqrt(ss);
  return d;
}

std::string grid_to_csv(const CkaGrid& grid) {
  if (grid.rows == 0 || grid.cols == 0 || grid.values.size() != grid.rows * grid.cols)
    throw DegenerateInput("grid_to_csv: empty or malformed grid");
  std::string out = "row_layer,col_layer,value\n";
  for (std::size_t i = 0; i < grid.rows; ++i)
    for (std::size_t j = 0; j < grid.cols; ++j)
      out += std::to_string(i + 1) + "," + std::to_string(j + 1) + "," + fmt17(grid.at(i, j)) + "\n";
  return out;
}

CkaGrid grid_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "row_layer,col_layer,value")
    throw IoError("grid_from_csv: missing header");
  std::vector<std::tuple<std::size_t, std::size_t, double>> cells;
  CkaGrid g;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf", &i, &j, &v) != 3 || i == 0 || j == 0)
      throw IoError("grid_from_csv: bad row at line " + std::to_string(lineno));
    cells.emplace_back(i, j, v);
    g.rows = std::max(g.rows, i);
    g.cols = std::max(g.cols, j);
  }
  if (cells.empty()) throw DegenerateInput("grid_from_csv: no cells");
  g.values.assign(g.rows * g.cols, 0.0);
  for (const auto& [i, j, v] : cells) g.values[(i - 1) * g.cols + (j - 1)] = v;
  return g;
}

std::string curve_to_csv(const ValidationCurve& curve) {
  std::string out = "layer,side,value\n";
  for (const auto& [side, values] : curve.per_side)
    for (std::size_t l = 0; l < values.size(); ++l)
      out += std::to_string(l + 1) + "," + to_string(side) + "," + fmt17(values[l]) + "\n";
  return out;
}

std::vector<EmittedFile> emit_report(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<EmittedFile> files;
  json manifest;
  manifest["grids"] = json::object();
  for (const auto& [name, grid] : bundle.grids) {
    const std::string text = grid_to_csv(grid);
    const std::string file = "cka_" + name + ".csv";
    write_file(dir / file, text);
    files.push_back({file, checksum_hex(std::string_view(text))});
    manifest["grids"][name] = {{"file", file},
                               {"rows", grid.rows},
                               {"cols", grid.cols},
                               {"model_a", grid.model_a},
                               {"model_b", grid.model_b},
                               {"condition", grid.condition},
                               {"diagonal_statistic", diagonal_statistic(grid)},
                               {"checksum", files.back().checksum}};
  }
  manifest["curves"] = json::object();
  for (const auto& [name, curve] : bundle.curves) {
    const std::string text = curve_to_csv(curve);
    const std::string file = "curve_" + name + ".csv";
    write_file(dir / file, text);
    files.push_back({file, checksum_hex(std::string_view(text))});
    manifest["curves"][name] = {{"file", file},
                                {"model_id", curve.model_id},
                                {"dataset_id", curve.dataset_id},
                                {"checksum", files.back().checksum}};
  }
  json summary = json::object();
  for (const auto& [k, v] : bundle.summary) summary[k] = v;
  manifest["summary"] = summary;
  json info = json::object();
  for (const auto& [k, v] : bundle.info) info[k] = v;
  manifest["info"] = info;
  const std::string text = manifest.dump(2) + "\n";
  write_file(dir / "report.json", text);
  files.push_back({"report.json", checksum_hex(std::string_view(text))});
  return files;
}

std::vector<LayerTrace> collect_traces(const LmParams& model, const Dataset& data,
                                       std::size_t chunk) {
  if (data.empty()) throw DegenerateInput("collect_traces: empty dataset");
  if (chunk == 0) chunk = data.size();
  std::vector<LayerTrace> out;
  for (std::size_t begin = 0; begin < data.size(); begin += chunk) {
    const std::size_t end = std::min(data.size(), begin + chunk);
    out.push_back(
        forward_with_trace(model, make_batch(std::span<const Example>(data.data() + begin, end - begin))));
  }
  return out;
}

}  // namespace semalign
