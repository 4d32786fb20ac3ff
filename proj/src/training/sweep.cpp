#include "training/sweep.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "util/parallel.hpp"

namespace training {

std::vector<int> default_m_grid(int d) {
    if (d < 1) throw std::invalid_argument("default_m_grid: d must be >= 1");
    std::vector<int> grid;
    for (int i = 0; i < 8; ++i) {
        const int m = static_cast<int>(std::llround(4.0 + (4.0 * d - 4.0) * i / 7.0));
        if (grid.empty() || grid.back() != m) grid.push_back(m);
    }
    return grid;
}

std::optional<int> scan_threshold(const std::vector<int>& m_grid,
                                  const std::vector<double>& accuracies, double threshold) {
    if (m_grid.size() != accuracies.size())
        throw std::invalid_argument("scan_threshold: grid size mismatch");
    for (size_t i = 0; i < m_grid.size(); ++i)
        if (std::isfinite(accuracies[i]) && accuracies[i] < threshold) return m_grid[i];
    return std::nullopt;
}

uint64_t cell_seed(uint64_t master_seed, size_t cell_index) {
    util::Rng rng(master_seed + 0x9E3779B97F4A7C15ULL * (static_cast<uint64_t>(cell_index) + 1));
    return rng.next_u64();
}

SweepResult sweep_mthr(TaskKind task, const std::vector<int>& d_values,
                       const std::vector<int>& m_grid, const TrainConfig& base, double threshold,
                       int expected_count, const SweepHooks* hooks) {
    if (d_values.empty() || m_grid.empty())
        throw std::invalid_argument("sweep_mthr: empty grid");
    for (size_t i = 1; i < m_grid.size(); ++i)
        if (m_grid[i] <= m_grid[i - 1])
            throw std::invalid_argument("sweep_mthr: m_grid must be sorted ascending");
    if (!(threshold > 0) || !(threshold <= 1))
        throw std::invalid_argument("sweep_mthr: threshold must lie in (0, 1]");

    const size_t dn = d_values.size();
    const size_t mn = m_grid.size();
    SweepResult result;
    result.grid.assign(dn * mn, {});
    util::parallel_for(dn * mn, [&](size_t idx) {
        const int d = d_values[idx / mn];
        const int m = m_grid[idx % mn];
        SweepCell cell;
        cell.d = d;
        cell.m = m;
        cell.n = expected_count * m;
        if (!(hooks && hooks->lookup && hooks->lookup(d, m, cell.accuracy, cell.failed))) {
            util::Rng seeds(cell_seed(base.seed, idx));
            TrainConfig cfg = base;
            cfg.model_dim = d;
            cfg.seed = seeds.next_u64();
            TaskSpec spec;
            spec.task = task;
            spec.vocab_size = m;
            spec.expected_count = expected_count;
            spec.seed = seeds.next_u64();
            try {
                const TrainResult trained = train(spec, cfg);
                util::Rng eval_rng(seeds.next_u64());
                cell.accuracy = evaluate(trained.model, spec, cfg.eval_examples, eval_rng);
            } catch (const TrainingDivergence&) {
                cell.accuracy = std::numeric_limits<double>::quiet_NaN();
                cell.failed = true;
            }
        }
        result.grid[idx] = cell;
        if (hooks && hooks->on_cell) hooks->on_cell(cell);
    });

    for (size_t di = 0; di < dn; ++di) {
        std::vector<double> accs(mn);
        for (size_t mi = 0; mi < mn; ++mi) accs[mi] = result.grid[di * mn + mi].accuracy;
        result.thresholds.push_back({d_values[di], scan_threshold(m_grid, accs, threshold)});
    }
    return result;
}

} // namespace training
