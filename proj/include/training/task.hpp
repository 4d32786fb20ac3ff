#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "util/rng.hpp"

namespace training {

enum class TaskKind { qc, mfe };

inline constexpr int kDefaultExpectedCount = 10;

// context length is tied to vocabulary size: n = c * m
struct TaskSpec {
    TaskKind task = TaskKind::qc;
    int vocab_size = 2;
    int expected_count = kDefaultExpectedCount;
    uint64_t seed = 0;

    int context_len() const { return expected_count * vocab_size; }
    void validate() const;
};

// label = count of the last token (qc) or the maximum count (mfe)
std::pair<std::vector<int>, int> sample_task(const TaskSpec& spec, util::Rng& rng);

int qc_label(const std::vector<int>& tokens);
int mfe_label(const std::vector<int>& tokens, int vocab_size);

struct Batch {
    std::vector<std::vector<int>> tokens;
    std::vector<int> labels;
    uint64_t seed = 0;
};

Batch sample_batch(const TaskSpec& spec, int batch_size, uint64_t seed);

} // namespace training
