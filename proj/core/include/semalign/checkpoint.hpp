#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "semalign/model.hpp"
#include "semalign/semantics.hpp"

namespace semalign {

struct NamedTensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

// Tensors stored as little-endian float32 in <stem>.bin with a JSON
// manifest <stem>.json holding names, shapes, dtype, byte offsets and
// string metadata.
struct TensorFile {
  std::vector<NamedTensor> tensors;
  std::map<std::string, std::string> metadata;
};

// Returns the manifest path. Throws IoError.
std::filesystem::path write_tensor_file(const std::filesystem::path& stem, const TensorFile& file);
// Accepts the stem or the .json path. Throws IoError on missing or
// inconsistent files.
TensorFile read_tensor_file(const std::filesystem::path& stem);

std::filesystem::path save_checkpoint(const std::filesystem::path& stem, const LmParams& params,
                                      const std::map<std::string, std::string>& metadata = {});
LmParams load_checkpoint(const std::filesystem::path& stem);
// Metadata only, without reading the blob.
std::map<std::string, std::string> read_metadata(const std::filesystem::path& stem);

// Rounds every parameter through float32, the precision checkpoints keep.
void round_to_f32(LmParams& params);

std::filesystem::path save_bases(const std::filesystem::path& stem, const SemanticBasisSet& bases);
// Columns are renormalized after the float32 round trip.
SemanticBasisSet load_bases(const std::filesystem::path& stem);

// Cache keyed by (model checksum, side, rcond, seed) under `cache_dir`.
// Returns loaded bases when present, else computes, stores and reloads
// them so cached and fresh results are identical.
SemanticBasisSet load_or_compute_bases(const std::filesystem::path& cache_dir, const LmParams& model,
                                       BasisSide side, double rcond = -1.0,
                                       std::uint64_t seed = 0);

// Checksum of a file's bytes. Throws IoError.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace semalign
