#include "semalign/config.hpp"

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"
#include "semalign/errors.hpp"
#include "semalign/rng.hpp"

namespace semalign {

using nlohmann::json;

std::string to_string(Method method) {
  switch (method) {
    case Method::kSemalign: return "semalign";
    case Method::kSeeking: return "seeking";
    case Method::kLaten: return "laten";
    case Method::kNone: return "none";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "semalign") return Method::kSemalign;
  if (name == "seeking") return Method::kSeeking;
  if (name == "laten") return Method::kLaten;
  if (name == "none") return Method::kNone;
  throw ConfigError("unknown method: " + name);
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.teacher = {.n_layers = 8, .hidden_dim = 128, .n_heads = 4, .vocab_size = 512, .max_seq = 16,
               .ffn_mult = 4};
  c.student = {.n_layers = 4, .hidden_dim = 64, .n_heads = 2, .vocab_size = 512, .max_seq = 16,
               .ffn_mult = 4};
  c.task.kind = TaskKind::kCopy;
  c.task.vocab_size = 512;
  c.task.seq_len = 6;
  c.task.train_size = 512;
  c.task.eval_size = 128;
  c.teacher_train = {.steps = 400, .batch_size = 16, .learning_rate = 1e-3, .weight_decay = 0.0};
  c.student_train = {.steps = 600, .batch_size = 16, .learning_rate = 1e-3, .weight_decay = 0.0};
  c.resolve_seeds();
  return c;
}

void ExperimentConfig::resolve_seeds() {
  teacher.seed = derive_seed(seed, 1);
  student.seed = derive_seed(seed, 2);
  task.seed = derive_seed(seed, 3);
  transfer.seed = derive_seed(seed, 4);
  seeking.seed = derive_seed(seed, 5);
  laten.seed = derive_seed(seed, 6);
}

void ExperimentConfig::validate() const {
  if (teacher.vocab_size != student.vocab_size)
    throw ConfigError("teacher.vocab_size (" + std::to_string(teacher.vocab_size) +
                      ") != student.vocab_size (" + std::to_string(student.vocab_size) +
                      "): semantic bases must be index-aligned over a shared vocabulary");
  if (task.vocab_size != teacher.vocab_size)
    throw ConfigError("task vocabulary (" + std::to_string(task.vocab_size) +
                      ") differs from the model vocabulary (" + std::to_string(teacher.vocab_size) +
                      ")");
  teacher.validate();
  student.validate();
  task.validate();
  if (teacher.n_layers < student.n_layers)
    throw ConfigError("teacher.n_layers must be >= student.n_layers");
  if (teacher.hidden_dim < student.hidden_dim)
    throw ConfigError("teacher.hidden_dim must be >= student.hidden_dim");
  if (task.input_length() > teacher.max_seq || task.input_length() > student.max_seq)
    throw ConfigError("task sequences (" + std::to_string(task.input_length()) +
                      " tokens) exceed max_seq");
  for (const auto* s : {&teacher_train, &student_train}) {
    if (s->batch_size == 0) throw ConfigError("training batch_size must be positive");
    if (!(s->learning_rate > 0.0)) throw ConfigError("training learning_rate must be positive");
    if (s->weight_decay < 0.0) throw ConfigError("training weight_decay must be >= 0");
  }
  transfer.validate();
  if (transfer.student_layer_k > student.n_layers)
    throw ConfigError("transfer.student_layer_k exceeds the student depth");
  if (top_n == 0 || top_n > teacher.n_layers)
    throw ConfigError("attribution.top_n must lie in [1, teacher.n_layers]");
  if (attribution_examples == 0 || analysis_examples == 0)
    throw ConfigError("attribution and analysis example counts must be positive");
  if (seeking.rank == 0 || seeking.seed_set_size == 0 || seeking.batch_size == 0)
    throw ConfigError("seeking: rank, seed_set_size and batch_size must be positive");
  if (!(laten.neuron_fraction > 0.0 && laten.neuron_fraction <= 1.0))
    throw ConfigError("laten.neuron_fraction must lie in (0, 1]");
  if (laten.samples == 0 || laten.hidden == 0)
    throw ConfigError("laten: samples and hidden must be positive");
}

namespace {

std::string line_of(const std::string& text, std::size_t line_no) {
  std::istringstream in(text);
  std::string line;
  for (std::size_t i = 1; std::getline(in, line); ++i)
    if (i == line_no) return line;
  return {};
}

// 1-based line of the first occurrence of "key" after the opening of
// every parent object named in `path`, or 0.
std::size_t locate_key(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const std::size_t found = text.find("\"" + key + "\"", pos);
    if (found == std::string::npos) return 0;
    pos = found + 1;
  }
  if (path.empty()) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  Reader(const std::string& text, const json& root) : text_(text), root_(root) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    std::string dotted;
    for (const auto& p : path) dotted += (dotted.empty() ? "" : ".") + p;
    std::string msg = "config: " + (dotted.empty() ? std::string("<root>") : dotted) + ": " + what;
    if (const std::size_t line = locate_key(text_, path); line > 0)
      msg += " (line " + std::to_string(line) + ": " + line_of(text_, line) + ")";
    throw ConfigError(msg);
  }

  const json* object(const std::vector<std::string>& path, const std::set<std::string>& allowed) const {
    const json* node = &root_;
    for (const auto& p : path) {
      if (!node->contains(p)) return nullptr;
      node = &(*node)[p];
    }
    if (!node->is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : node->items()) {
      if (!allowed.count(k)) {
        auto full = path;
        full.push_back(k);
        fail(full, "unknown key");
      }
    }
    return node;
  }

  template <typename T>
  void get(const json* node, std::vector<std::string> path, const std::string& key, T& out) const {
    if (!node || !node->contains(key)) return;
    path.push_back(key);
    const json& v = (*node)[key];
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(path, "expected true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        fail(path, "expected a non-negative integer");
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(path, "expected a number");
      out = v.get<T>();
    } else {
      if (!v.is_string()) fail(path, "expected a string");
      out = v.get<std::string>();
    }
  }

  template <typename Parse, typename T>
  void get_enum(const json* node, std::vector<std::string> path, const std::string& key, Parse parse,
                T& out) const {
    std::string s;
    get(node, path, key, s);
    if (s.empty()) return;
    path.push_back(key);
    try {
      out = parse(s);
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  }

 private:
  const std::string& text_;
  const json& root_;
};

void read_lm(const Reader& r, const std::string& name, LmConfig& c) {
  const json* n = r.object({name}, {"n_layers", "hidden_dim", "n_heads", "vocab_size", "max_seq",
                                    "ffn_mult"});
  r.get(n, {name}, "n_layers", c.n_layers);
  r.get(n, {name}, "hidden_dim", c.hidden_dim);
  r.get(n, {name}, "n_heads", c.n_heads);
  r.get(n, {name}, "vocab_size", c.vocab_size);
  r.get(n, {name}, "max_seq", c.max_seq);
  r.get(n, {name}, "ffn_mult", c.ffn_mult);
}

void read_stage(const Reader& r, const std::string& name, StageTrainConfig& c) {
  const json* n = r.object({name}, {"steps", "batch_size", "learning_rate", "weight_decay"});
  r.get(n, {name}, "steps", c.steps);
  r.get(n, {name}, "batch_size", c.batch_size);
  r.get(n, {name}, "learning_rate", c.learning_rate);
  r.get(n, {name}, "weight_decay", c.weight_decay);
}

json lm_json(const LmConfig& c) {
  return {{"n_layers", c.n_layers}, {"hidden_dim", c.hidden_dim}, {"n_heads", c.n_heads},
          {"vocab_size", c.vocab_size}, {"max_seq", c.max_seq}, {"ffn_mult", c.ffn_mult}};
}

json stage_json(const StageTrainConfig& c) {
  return {{"steps", c.steps}, {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config: syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + line_of(text, line));
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object (line 1)");
  const Reader r(text, root);
  ExperimentConfig c = default_config();
  const json* top = r.object({}, {"seed", "method", "output_dir", "teacher", "student", "task",
                                  "teacher_train", "student_train", "transfer", "seeking",
                                  "laten", "attribution", "analysis", "bases", "control_run"});
  r.get(top, {}, "seed", c.seed);
  r.get_enum(top, {}, "method", parse_method, c.method);
  r.get(top, {}, "output_dir", c.output_dir);
  r.get(top, {}, "control_run", c.control_run);
  read_lm(r, "teacher", c.teacher);
  read_lm(r, "student", c.student);
  read_stage(r, "teacher_train", c.teacher_train);
  read_stage(r, "student_train", c.student_train);

  const json* t = r.object({"task"}, {"kind", "seq_len", "train_size", "eval_size", "modulus",
                                      "alphabet", "vocab_size"});
  c.task.vocab_size = c.teacher.vocab_size;
  r.get_enum(t, {"task"}, "kind", parse_task_kind, c.task.kind);
  r.get(t, {"task"}, "vocab_size", c.task.vocab_size);
  r.get(t, {"task"}, "seq_len", c.task.seq_len);
  r.get(t, {"task"}, "train_size", c.task.train_size);
  r.get(t, {"task"}, "eval_size", c.task.eval_size);
  r.get(t, {"task"}, "modulus", c.task.modulus);
  r.get(t, {"task"}, "alphabet", c.task.alphabet);

  const json* tr = r.object({"transfer"}, {"student_layer_k", "steps", "align_size", "train_size",
                                           "batch_size", "learning_rate", "label_smoothing",
                                           "use_layer_loss"});
  r.get(tr, {"transfer"}, "student_layer_k", c.transfer.student_layer_k);
  r.get(tr, {"transfer"}, "steps", c.transfer.steps);
  r.get(tr, {"transfer"}, "align_size", c.transfer.align_size);
  r.get(tr, {"transfer"}, "train_size", c.transfer.train_size);
  r.get(tr, {"transfer"}, "batch_size", c.transfer.batch_size);
  r.get(tr, {"transfer"}, "learning_rate", c.transfer.learning_rate);
  r.get(tr, {"transfer"}, "label_smoothing", c.transfer.label_smoothing);
  r.get(tr, {"transfer"}, "use_layer_loss", c.transfer.use_layer_loss);

  const json* sk = r.object({"seeking"}, {"seed_set_size", "rank", "steps", "batch_size",
                                          "learning_rate"});
  r.get(sk, {"seeking"}, "seed_set_size", c.seeking.seed_set_size);
  r.get(sk, {"seeking"}, "rank", c.seeking.rank);
  r.get(sk, {"seeking"}, "steps", c.seeking.steps);
  r.get(sk, {"seeking"}, "batch_size", c.seeking.batch_size);
  r.get(sk, {"seeking"}, "learning_rate", c.seeking.learning_rate);

  const json* lt = r.object({"laten"}, {"neuron_fraction", "samples", "hidden", "steps",
                                        "learning_rate", "weight_decay"});
  r.get(lt, {"laten"}, "neuron_fraction", c.laten.neuron_fraction);
  r.get(lt, {"laten"}, "samples", c.laten.samples);
  r.get(lt, {"laten"}, "hidden", c.laten.hidden);
  r.get(lt, {"laten"}, "steps", c.laten.steps);
  r.get(lt, {"laten"}, "learning_rate", c.laten.learning_rate);
  r.get(lt, {"laten"}, "weight_decay", c.laten.weight_decay);

  const json* at = r.object({"attribution"}, {"top_n", "examples"});
  r.get(at, {"attribution"}, "top_n", c.top_n);
  r.get(at, {"attribution"}, "examples", c.attribution_examples);
  const json* an = r.object({"analysis"}, {"examples"});
  r.get(an, {"analysis"}, "examples", c.analysis_examples);
  const json* bs = r.object({"bases"}, {"side", "rcond"});
  r.get_enum(bs, {"bases"}, "side", parse_basis_side, c.target_side);
  r.get(bs, {"bases"}, "rcond", c.rcond);

  c.resolve_seeds();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  const std::string text(std::istreambuf_iterator<char>(in), {});
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["method"] = to_string(c.method);
  j["output_dir"] = c.output_dir;
  j["control_run"] = c.control_run;
  j["teacher"] = lm_json(c.teacher);
  j["student"] = lm_json(c.student);
  j["task"] = {{"kind", to_string(c.task.kind)}, {"vocab_size", c.task.vocab_size},
               {"seq_len", c.task.seq_len},      {"train_size", c.task.train_size},
               {"eval_size", c.task.eval_size},  {"modulus", c.task.modulus},
               {"alphabet", c.task.alphabet}};
  j["teacher_train"] = stage_json(c.teacher_train);
  j["student_train"] = stage_json(c.student_train);
  const TransferConfig& t = c.transfer;
  j["transfer"] = {{"student_layer_k", t.student_layer_k}, {"steps", t.steps},
                   {"align_size", t.align_size},           {"train_size", t.train_size},
                   {"batch_size", t.batch_size},           {"learning_rate", t.learning_rate},
                   {"label_smoothing", t.label_smoothing}, {"use_layer_loss", t.use_layer_loss}};
  j["seeking"] = {{"seed_set_size", c.seeking.seed_set_size}, {"rank", c.seeking.rank},
                  {"steps", c.seeking.steps},                 {"batch_size", c.seeking.batch_size},
                  {"learning_rate", c.seeking.learning_rate}};
  j["laten"] = {{"neuron_fraction", c.laten.neuron_fraction}, {"samples", c.laten.samples},
                {"hidden", c.laten.hidden},                   {"steps", c.laten.steps},
                {"learning_rate", c.laten.learning_rate},     {"weight_decay", c.laten.weight_decay}};
  j["attribution"] = {{"top_n", c.top_n}, {"examples", c.attribution_examples}};
  j["analysis"] = {{"examples", c.analysis_examples}};
  j["bases"] = {{"side", to_string(c.target_side)}, {"rcond", c.rcond}};
  return j.dump(2);
}

}  // namespace semalign
