#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nn/engine.hpp"
#include "nn/model.hpp"
#include "training/task.hpp"
#include "util/rng.hpp"

namespace training {

struct TrainConfig {
    int layers = 2;
    int heads = 4;
    int model_dim = 32;
    int batch_size = 16;
    double step_size = 1e-4;
    int steps = 20000;
    int eval_examples = 1600;
    uint64_t seed = 0;

    void validate() const;
};

struct TrainingDivergence : std::runtime_error {
    int step;
    uint64_t batch_seed;
    TrainingDivergence(int step_, uint64_t batch_seed_);
};

struct TrainResult {
    nn::TransformerModel model;
    std::vector<double> loss_curve;
};

// mean squared error over the batch; gradients accumulate into grads,
// which must be zeroed by the caller
template <typename T>
double loss_and_grads(const nn::Engine<T>& engine, const Batch& batch, nn::EngineWork<T>& work,
                      std::vector<T>& grads);

extern template double loss_and_grads<float>(const nn::Engine<float>&, const Batch&,
                                             nn::EngineWork<float>&, std::vector<float>&);
extern template double loss_and_grads<double>(const nn::Engine<double>&, const Batch&,
                                              nn::EngineWork<double>&, std::vector<double>&);

// deterministic per-step batch seed stream
uint64_t batch_seed(uint64_t data_seed, int step);

TrainResult train(const TaskSpec& spec, const TrainConfig& cfg);

double evaluate(const nn::TransformerModel& model, const TaskSpec& spec, int n_examples,
                util::Rng& rng);

} // namespace training
