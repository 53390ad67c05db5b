#include "semalign/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "semalign/checksum.hpp"
#include "semalign/errors.hpp"

namespace semalign {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path manifest_path(const fs::path& stem) {
  if (stem.extension() == ".json") return stem;
  return fs::path(stem.string() + ".json");
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void put_f32(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f32(const std::string& blob, std::size_t offset) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i)
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[offset + i])) << (8 * i);
  return static_cast<double>(std::bit_cast<float>(bits));
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

LmConfig config_from_metadata(const std::map<std::string, std::string>& m, const fs::path& where) {
  auto get = [&](const char* key) -> std::uint64_t {
    auto it = m.find(key);
    if (it == m.end()) throw IoError(where.string() + ": checkpoint lacks metadata '" + key + "'");
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw IoError(where.string() + ": bad metadata value for '" + key + "'");
    }
  };
  LmConfig c;
  c.n_layers = get("n_layers");
  c.hidden_dim = get("hidden_dim");
  c.n_heads = get("n_heads");
  c.vocab_size = get("vocab_size");
  c.max_seq = get("max_seq");
  c.ffn_mult = get("ffn_mult");
  c.seed = get("seed");
  return c;
}

}  // namespace

fs::path write_tensor_file(const fs::path& stem, const TensorFile& file) {
  const fs::path mpath = manifest_path(stem);
  const fs::path bpath = fs::path(mpath).replace_extension(".bin");
  if (mpath.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(mpath.parent_path(), ec);
    if (ec) throw IoError("cannot create " + mpath.parent_path().string() + ": " + ec.message());
  }
  std::string blob;
  json m;
  m["format"] = "semalign-tensors";
  m["version"] = 1;
  m["dtype"] = "float32";
  m["byte_order"] = "little";
  m["blob"] = bpath.filename().string();
  m["tensors"] = json::array();
  for (const NamedTensor& t : file.tensors) {
    if (t.values.size() != t.rows * t.cols)
      throw ShapeError("write_tensor_file: tensor " + t.name + " has a wrong value count");
    const std::size_t offset = blob.size();
    for (double v : t.values) put_f32(blob, v);
    m["tensors"].push_back({{"name", t.name},
                            {"shape", {t.rows, t.cols}},
                            {"dtype", "float32"},
                            {"offset", offset},
                            {"nbytes", blob.size() - offset}});
  }
  m["blob_bytes"] = blob.size();
  m["blob_checksum"] = checksum_hex(std::string_view(blob));
  json meta = json::object();
  for (const auto& [k, v] : file.metadata) meta[k] = v;
  m["metadata"] = meta;

  {
    std::ofstream out(bpath, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + bpath.string() + " for writing");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("write failed: " + bpath.string());
  }
  std::ofstream out(mpath, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + mpath.string() + " for writing");
  out << m.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + mpath.string());
  return mpath;
}

TensorFile read_tensor_file(const fs::path& stem) {
  const fs::path mpath = manifest_path(stem);
  json m;
  try {
    m = json::parse(read_all(mpath));
  } catch (const json::exception& e) {
    throw IoError(mpath.string() + ": " + e.what());
  }
  TensorFile file;
  try {
    if (m.at("dtype") != "float32" || m.at("byte_order") != "little")
      throw IoError(mpath.string() + ": unsupported dtype or byte order");
    const fs::path bpath = mpath.parent_path() / m.at("blob").get<std::string>();
    const std::string blob = read_all(bpath);
    if (blob.size() != m.at("blob_bytes").get<std::size_t>())
      throw IoError(bpath.string() + ": blob size does not match the manifest");
    if (checksum_hex(std::string_view(blob)) != m.at("blob_checksum").get<std::string>())
      throw IoError(bpath.string() + ": blob checksum mismatch");
    for (const auto& t : m.at("tensors")) {
      NamedTensor nt;
      nt.name = t.at("name").get<std::string>();
      nt.rows = t.at("shape").at(0).get<std::size_t>();
      nt.cols = t.at("shape").at(1).get<std::size_t>();
      const std::size_t offset = t.at("offset").get<std::size_t>();
      const std::size_t count = nt.rows * nt.cols;
      if (t.at("nbytes").get<std::size_t>() != 4 * count || offset + 4 * count > blob.size())
        throw IoError(mpath.string() + ": tensor " + nt.name + " lies outside the blob");
      nt.values.resize(count);
      for (std::size_t i = 0; i < count; ++i) nt.values[i] = get_f32(blob, offset + 4 * i);
      file.tensors.push_back(std::move(nt));
    }
    for (const auto& [k, v] : m.at("metadata").items()) file.metadata[k] = v.get<std::string>();
  } catch (const json::exception& e) {
    throw IoError(mpath.string() + ": " + e.what());
  }
  return file;
}

fs::path save_checkpoint(const fs::path& stem, const LmParams& params,
                         const std::map<std::string, std::string>& metadata) {
  TensorFile file;
  file.metadata = metadata;
  const LmConfig& c = params.config();
  file.metadata["kind"] = "lm";
  file.metadata["n_layers"] = std::to_string(c.n_layers);
  file.metadata["hidden_dim"] = std::to_string(c.hidden_dim);
  file.metadata["n_heads"] = std::to_string(c.n_heads);
  file.metadata["vocab_size"] = std::to_string(c.vocab_size);
  file.metadata["max_seq"] = std::to_string(c.max_seq);
  file.metadata["ffn_mult"] = std::to_string(c.ffn_mult);
  file.metadata["seed"] = std::to_string(c.seed);
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    const TensorInfo& info = params.tensors()[i];
    auto v = params.tensor(i);
    file.tensors.push_back({info.name, info.rows, info.cols, {v.begin(), v.end()}});
  }
  return write_tensor_file(stem, file);
}

LmParams load_checkpoint(const fs::path& stem) {
  const TensorFile file = read_tensor_file(stem);
  auto kind = file.metadata.find("kind");
  if (kind == file.metadata.end() || kind->second != "lm")
    throw IoError(stem.string() + ": not a model checkpoint");
  LmParams params(config_from_metadata(file.metadata, stem));
  if (file.tensors.size() != params.tensors().size())
    throw IoError(stem.string() + ": tensor count does not match the config");
  for (std::size_t i = 0; i < file.tensors.size(); ++i) {
    const TensorInfo& info = params.tensors()[i];
    const NamedTensor& t = file.tensors[i];
    if (t.name != info.name || t.rows != info.rows || t.cols != info.cols)
      throw IoError(stem.string() + ": tensor " + t.name + " does not match layout entry " +
                    info.name);
    std::copy(t.values.begin(), t.values.end(), params.tensor(i).begin());
  }
  return params;
}

std::map<std::string, std::string> read_metadata(const fs::path& stem) {
  const fs::path mpath = manifest_path(stem);
  try {
    const json m = json::parse(read_all(mpath));
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : m.at("metadata").items()) out[k] = v.get<std::string>();
    return out;
  } catch (const json::exception& e) {
    throw IoError(mpath.string() + ": " + e.what());
  }
}

void round_to_f32(LmParams& params) {
  for (double& v : params.values()) v = static_cast<double>(static_cast<float>(v));
}

fs::path save_bases(const fs::path& stem, const SemanticBasisSet& bases) {
  TensorFile file;
  file.metadata["kind"] = "bases";
  file.metadata["side"] = to_string(bases.side);
  file.metadata["source_model_id"] = bases.source_model_id;
  file.metadata["rcond_used"] = fmt17(bases.rcond_used);
  file.metadata["effective_rank"] = std::to_string(bases.effective_rank);
  file.metadata["seed"] = std::to_string(bases.seed);
  file.tensors.push_back(
      {"bases", bases.s.rows(), bases.s.cols(), {bases.s.values().begin(), bases.s.values().end()}});
  return write_tensor_file(stem, file);
}

SemanticBasisSet load_bases(const fs::path& stem) {
  const TensorFile file = read_tensor_file(stem);
  auto kind = file.metadata.find("kind");
  if (kind == file.metadata.end() || kind->second != "bases" || file.tensors.size() != 1)
    throw IoError(stem.string() + ": not a basis file");
  SemanticBasisSet b;
  const NamedTensor& t = file.tensors.front();
  b.s = Matrix(t.rows, t.cols, t.values);
  try {
    b.side = parse_basis_side(file.metadata.at("side"));
    b.source_model_id = file.metadata.at("source_model_id");
    b.rcond_used = std::stod(file.metadata.at("rcond_used"));
    b.effective_rank = std::stoull(file.metadata.at("effective_rank"));
    b.seed = std::stoull(file.metadata.at("seed"));
  } catch (const std::exception& e) {
    throw IoError(stem.string() + ": bad basis metadata (" + e.what() + ")");
  }
  for (std::size_t c = 0; c < b.s.cols(); ++c) {
    double n2 = 0.0;
    for (std::size_t r = 0; r < b.s.rows(); ++r) n2 += b.s(r, c) * b.s(r, c);
    if (n2 == 0.0) throw DegenerateBasis(stem.string() + ": zero basis column");
    const double inv = 1.0 / std::sqrt(n2);
    for (std::size_t r = 0; r < b.s.rows(); ++r) b.s(r, c) *= inv;
  }
  return b;
}

SemanticBasisSet load_or_compute_bases(const fs::path& cache_dir, const LmParams& model,
                                       BasisSide side, double rcond, std::uint64_t seed) {
  if (rcond < 0.0)
    rcond = default_rcond(model.config().hidden_dim, model.config().vocab_size);
  Fnv1a key;
  key.update(model.checksum());
  key.update(to_string(side));
  key.update(fmt17(rcond));
  key.update(std::to_string(side == BasisSide::kRandom ? seed : 0));
  const fs::path stem = cache_dir / ("bases_" + to_string(side) + "_" + key.hex());
  if (!fs::exists(manifest_path(stem))) save_bases(stem, compute_bases(model, side, rcond, seed));
  return load_bases(stem);
}

std::string file_checksum(const fs::path& path) {
  return checksum_hex(std::string_view(read_all(path)));
}

}  // namespace semalign
