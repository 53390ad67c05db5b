#include "semalign/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "semalign/errors.hpp"
#include "semalign/rng.hpp"

namespace semalign {

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kCopy: return "copy";
    case TaskKind::kReverse: return "reverse";
    case TaskKind::kModularSum: return "modular_sum";
    case TaskKind::kSortDigits: return "sort_digits";
  }
  return "unknown";
}

TaskKind parse_task_kind(const std::string& name) {
  if (name == "copy") return TaskKind::kCopy;
  if (name == "reverse") return TaskKind::kReverse;
  if (name == "modular_sum") return TaskKind::kModularSum;
  if (name == "sort_digits") return TaskKind::kSortDigits;
  throw ConfigError("unknown task kind: " + name);
}

std::size_t TaskSpec::symbol_count() const {
  switch (kind) {
    case TaskKind::kModularSum: return modulus;
    case TaskKind::kSortDigits: return 10;
    default: return alphabet == 0 ? (vocab_size >= 2 ? vocab_size - 2 : 0) : alphabet;
  }
}

std::size_t TaskSpec::input_length() const {
  const std::size_t answer = kind == TaskKind::kModularSum ? 1 : seq_len;
  return 1 + seq_len + 1 + answer - 1;
}

void TaskSpec::validate() const {
  if (seq_len < 1) throw ConfigError("task seq_len must be >= 1");
  if (kind == TaskKind::kModularSum && modulus < 2) throw ConfigError("modulus must be >= 2");
  const std::size_t symbols = symbol_count();
  if (symbols < 1) throw ConfigError("task alphabet is empty");
  if (vocab_size < symbols + 2)
    throw ConfigError("vocab_size " + std::to_string(vocab_size) + " too small for task " +
                      to_string(kind) + " (needs " + std::to_string(symbols + 2) + ")");
  if (train_size < 1) throw ConfigError("train_size must be >= 1");
}

std::vector<std::int32_t> task_answer(const TaskSpec& spec,
                                      const std::vector<std::int32_t>& operands) {
  switch (spec.kind) {
    case TaskKind::kCopy: return operands;
    case TaskKind::kReverse: return {operands.rbegin(), operands.rend()};
    case TaskKind::kSortDigits: {
      auto out = operands;
      std::sort(out.begin(), out.end());
      return out;
    }
    case TaskKind::kModularSum: {
      std::int64_t sum = 0;
      for (auto x : operands) sum += x;
      return {static_cast<std::int32_t>(sum % static_cast<std::int64_t>(spec.modulus))};
    }
  }
  return {};
}

Example make_example(const TaskSpec& spec, const std::vector<std::int32_t>& operands) {
  std::vector<std::int32_t> seq;
  seq.push_back(spec.bos());
  seq.insert(seq.end(), operands.begin(), operands.end());
  seq.push_back(spec.sep());
  const auto answer = task_answer(spec, operands);
  seq.insert(seq.end(), answer.begin(), answer.end());

  Example ex;
  const std::size_t len = seq.size() - 1;
  ex.input_ids.assign(seq.begin(), seq.end() - 1);
  ex.target_ids.assign(seq.begin() + 1, seq.end());
  ex.supervised_mask.assign(len, 0);
  // Input position of SEP predicts the first answer token.
  const std::size_t first = operands.size() + 1;
  for (std::size_t t = first; t < len; ++t) ex.supervised_mask[t] = 1;
  return ex;
}

TaskData generate_dataset(const TaskSpec& spec) {
  spec.validate();
  const std::size_t symbols = spec.symbol_count();
  const double space = std::pow(static_cast<double>(symbols), static_cast<double>(spec.seq_len));
  const std::size_t wanted = spec.train_size + spec.eval_size;
  if (space < static_cast<double>(wanted))
    throw ConfigError("task operand space (" + std::to_string(static_cast<long long>(space)) +
                      ") smaller than train_size + eval_size (" + std::to_string(wanted) + ")");

  Rng rng(derive_seed(spec.seed, 0x7a5c));
  auto draw = [&] {
    std::vector<std::int32_t> ops(spec.seq_len);
    for (auto& x : ops) x = static_cast<std::int32_t>(rng.index(symbols));
    return ops;
  };

  TaskData data;
  std::set<std::vector<std::int32_t>> eval_keys;
  // Eval sequences are distinct; train sequences avoid them but may repeat
  // among themselves when the space is large relative to the draw.
  const bool dense = space < 4.0 * static_cast<double>(wanted);
  std::set<std::vector<std::int32_t>> train_keys;
  while (data.eval.size() < spec.eval_size) {
    auto ops = draw();
    if (!eval_keys.insert(ops).second) continue;
    data.eval.push_back(make_example(spec, ops));
  }
  while (data.train.size() < spec.train_size) {
    auto ops = draw();
    if (eval_keys.count(ops)) continue;
    if (dense && !train_keys.insert(ops).second) continue;
    data.train.push_back(make_example(spec, ops));
  }
  return data;
}

}  // namespace semalign

namespace semalign {

double evaluate_accuracy(const LmParams& model, const Dataset& dataset) {
  if (dataset.empty()) throw ConfigError("evaluate_accuracy: empty dataset");
  constexpr std::size_t kChunk = 64;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < dataset.size(); begin += kChunk) {
    const std::size_t end = std::min(dataset.size(), begin + kChunk);
    const TokenBatch batch =
        make_batch(std::span<const Example>(dataset.data() + begin, end - begin));
    const LayerTrace trace = forward_with_trace(model, batch);
    for (std::size_t b = 0; b < batch.batch; ++b) {
      bool ok = true;
      for (std::size_t t = 0; t < batch.seq && ok; ++t) {
        const std::size_t r = b * batch.seq + t;
        if (!batch.supervised_mask[r]) continue;
        auto z = trace.logits.row(r);
        const auto arg = static_cast<std::int32_t>(std::max_element(z.begin(), z.end()) - z.begin());
        ok = arg == batch.target_ids[r];
      }
      if (ok) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace semalign
