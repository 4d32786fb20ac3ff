#include "training/train.hpp"

#include <cmath>

#include "nn/forward.hpp"
#include "training/adam.hpp"

namespace training {

void TrainConfig::validate() const {
    if (layers < 1) throw std::invalid_argument("TrainConfig: layers must be >= 1");
    if (heads < 1) throw std::invalid_argument("TrainConfig: heads must be >= 1");
    if (model_dim < 1 || model_dim % heads != 0)
        throw std::invalid_argument("TrainConfig: model_dim must be a positive multiple of heads");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(step_size > 0)) throw std::invalid_argument("TrainConfig: step_size must be positive");
    if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be >= 0");
    if (eval_examples < 1) throw std::invalid_argument("TrainConfig: eval_examples must be >= 1");
}

TrainingDivergence::TrainingDivergence(int step_, uint64_t batch_seed_)
    : std::runtime_error("training diverged: non-finite loss at step " + std::to_string(step_) +
                         " (batch seed " + std::to_string(batch_seed_) + ")"),
      step(step_),
      batch_seed(batch_seed_) {}

template <typename T>
double loss_and_grads(const nn::Engine<T>& engine, const Batch& batch, nn::EngineWork<T>& work,
                      std::vector<T>& grads) {
    if (batch.tokens.empty()) throw std::invalid_argument("loss_and_grads: empty batch");
    if (batch.labels.size() != batch.tokens.size())
        throw std::invalid_argument("loss_and_grads: label count mismatch");
    if (grads.size() != engine.shape().total)
        throw std::invalid_argument("loss_and_grads: gradient buffer size mismatch");
    const double inv = 1.0 / static_cast<double>(batch.tokens.size());
    double loss = 0;
    for (size_t b = 0; b < batch.tokens.size(); ++b) {
        const auto& tokens = batch.tokens[b];
        const double pred = engine.forward(tokens.data(), static_cast<int>(tokens.size()), work);
        const double err = pred - static_cast<double>(batch.labels[b]);
        loss += err * err * inv;
        engine.backward(tokens.data(), static_cast<int>(tokens.size()),
                        static_cast<T>(2.0 * err * inv), work, grads.data());
    }
    if (!std::isfinite(loss)) throw TrainingDivergence(-1, batch.seed);
    return loss;
}

template double loss_and_grads<float>(const nn::Engine<float>&, const Batch&,
                                      nn::EngineWork<float>&, std::vector<float>&);
template double loss_and_grads<double>(const nn::Engine<double>&, const Batch&,
                                       nn::EngineWork<double>&, std::vector<double>&);

uint64_t batch_seed(uint64_t data_seed, int step) {
    return data_seed + 0x9E3779B97F4A7C15ULL * (static_cast<uint64_t>(step) + 1);
}

TrainResult train(const TaskSpec& spec, const TrainConfig& cfg) {
    spec.validate();
    cfg.validate();
    nn::TransformerConfig mc;
    mc.vocab_size = spec.vocab_size;
    mc.context_len = spec.context_len();
    mc.model_dim = cfg.model_dim;
    mc.head_dim = cfg.model_dim / cfg.heads;
    mc.n_heads = cfg.heads;
    mc.n_layers = cfg.layers;
    mc.use_layer_norm = true;
    mc.use_positional = true;
    nn::Engine<float> engine(mc, 4 * cfg.model_dim);
    engine.init_random(cfg.seed);

    nn::EngineWork<float> work;
    std::vector<float> grads(engine.shape().total, 0.0f);
    AdamState<float> state(engine.shape().total);
    TrainResult result;
    result.loss_curve.reserve(static_cast<size_t>(cfg.steps));
    for (int step = 0; step < cfg.steps; ++step) {
        const Batch batch = sample_batch(spec, cfg.batch_size, batch_seed(spec.seed, step));
        std::fill(grads.begin(), grads.end(), 0.0f);
        double loss = 0;
        try {
            loss = loss_and_grads(engine, batch, work, grads);
        } catch (const TrainingDivergence& e) {
            throw TrainingDivergence(step, e.batch_seed);
        }
        adam_step(state, engine.params(), grads, cfg.step_size);
        result.loss_curve.push_back(loss);
    }
    result.model = engine.to_model();
    return result;
}

double evaluate(const nn::TransformerModel& model, const TaskSpec& spec, int n_examples,
                util::Rng& rng) {
    if (n_examples < 1) throw std::invalid_argument("evaluate: n_examples must be >= 1");
    spec.validate();
    bool uniform = true;
    for (const auto& layer : model.layers)
        if (layer.mlp.hidden_dim != model.layers.front().mlp.hidden_dim) uniform = false;
    int hits = 0;
    if (uniform && !model.layers.empty()) {
        nn::Engine<double> engine(model);
        nn::EngineWork<double> work;
        for (int i = 0; i < n_examples; ++i) {
            auto [tokens, label] = sample_task(spec, rng);
            const double pred =
                engine.forward(tokens.data(), static_cast<int>(tokens.size()), work);
            if (std::llround(pred) == label) ++hits;
        }
    } else {
        for (int i = 0; i < n_examples; ++i) {
            auto [tokens, label] = sample_task(spec, rng);
            const double pred = nn::model_forward(model, tokens);
            if (std::llround(pred) == label) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(n_examples);
}

} // namespace training
