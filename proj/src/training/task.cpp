#include "training/task.hpp"

#include <algorithm>
#include <stdexcept>

namespace training {

void TaskSpec::validate() const {
    if (vocab_size < 2) throw std::invalid_argument("TaskSpec: vocab_size must be >= 2");
    if (expected_count < 1) throw std::invalid_argument("TaskSpec: expected_count must be >= 1");
}

int qc_label(const std::vector<int>& tokens) {
    if (tokens.empty()) throw std::invalid_argument("qc_label: empty sequence");
    const int query = tokens.back();
    return static_cast<int>(std::count(tokens.begin(), tokens.end(), query));
}

int mfe_label(const std::vector<int>& tokens, int vocab_size) {
    if (tokens.empty()) throw std::invalid_argument("mfe_label: empty sequence");
    std::vector<int> counts(static_cast<size_t>(vocab_size), 0);
    for (int t : tokens) ++counts[static_cast<size_t>(t)];
    return *std::max_element(counts.begin(), counts.end());
}

std::pair<std::vector<int>, int> sample_task(const TaskSpec& spec, util::Rng& rng) {
    spec.validate();
    const int n = spec.context_len();
    std::vector<int> tokens(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        tokens[static_cast<size_t>(i)] =
            static_cast<int>(rng.next_below(static_cast<uint64_t>(spec.vocab_size)));
    const int label = spec.task == TaskKind::qc ? qc_label(tokens)
                                                : mfe_label(tokens, spec.vocab_size);
    return {std::move(tokens), label};
}

Batch sample_batch(const TaskSpec& spec, int batch_size, uint64_t seed) {
    if (batch_size < 1) throw std::invalid_argument("sample_batch: batch_size must be >= 1");
    Batch batch;
    batch.seed = seed;
    batch.tokens.reserve(static_cast<size_t>(batch_size));
    batch.labels.reserve(static_cast<size_t>(batch_size));
    util::Rng rng(seed);
    for (int b = 0; b < batch_size; ++b) {
        auto [tokens, label] = sample_task(spec, rng);
        batch.tokens.push_back(std::move(tokens));
        batch.labels.push_back(label);
    }
    return batch;
}

} // namespace training
