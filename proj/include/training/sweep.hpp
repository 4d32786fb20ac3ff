#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "training/task.hpp"
#include "training/train.hpp"

namespace training {

struct SweepCell {
    int d = 0;
    int m = 0;
    int n = 0;
    double accuracy = 0;
    bool failed = false;
};

struct SweepThreshold {
    int d = 0;
    std::optional<int> m_thr; // empty means none within the grid
};

struct SweepResult {
    std::vector<SweepCell> grid;
    std::vector<SweepThreshold> thresholds;
};

// cells run in parallel; both hooks may be invoked concurrently
struct SweepHooks {
    std::function<bool(int d, int m, double& accuracy, bool& failed)> lookup;
    std::function<void(const SweepCell&)> on_cell;
};

// 8 evenly spaced integers spanning [4, 4d], deduplicated
std::vector<int> default_m_grid(int d);

// first m whose finite accuracy falls below threshold
std::optional<int> scan_threshold(const std::vector<int>& m_grid,
                                  const std::vector<double>& accuracies, double threshold);

// deterministic per-cell seed stream
uint64_t cell_seed(uint64_t master_seed, size_t cell_index);

SweepResult sweep_mthr(TaskKind task, const std::vector<int>& d_values,
                       const std::vector<int>& m_grid, const TrainConfig& base,
                       double threshold = 0.8, int expected_count = kDefaultExpectedCount,
                       const SweepHooks* hooks = nullptr);

} // namespace training
