#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "constructions/mfe.hpp"
#include "constructions/verify.hpp"
#include "nn/engine.hpp"
#include "nn/forward.hpp"
#include "util/rng.hpp"

namespace constructions {

int count_of_last(const std::vector<int>& seq) {
    if (seq.empty()) throw std::invalid_argument("count_of_last: empty sequence");
    int count = 0;
    for (int tok : seq)
        if (tok == seq.back()) ++count;
    return count;
}

int max_count(const std::vector<int>& seq, int m) {
    if (seq.empty()) throw std::invalid_argument("max_count: empty sequence");
    std::vector<int> counts(static_cast<size_t>(m), 0);
    int best = 0;
    for (int tok : seq) {
        if (tok < 0 || tok >= m) throw std::invalid_argument("max_count: token out of range");
        best = std::max(best, ++counts[static_cast<size_t>(tok)]);
    }
    return best;
}

namespace {

// Engine when the MLP widths are uniform (all builders emit that), reference
// forward otherwise.
class Forwarder {
  public:
    explicit Forwarder(const nn::TransformerModel& model) : model_(model) {
        try {
            engine_.emplace(model);
        } catch (const std::invalid_argument&) {
        }
    }

    double operator()(const std::vector<int>& seq) {
        if (engine_) return engine_->forward(seq.data(), static_cast<int>(seq.size()), work_);
        return nn::model_forward(model_, seq);
    }

  private:
    const nn::TransformerModel& model_;
    std::optional<nn::Engine<double>> engine_;
    nn::EngineWork<double> work_;
};

void check_one(const ConstructionReport& report, VerifyTask task, int m,
               const std::vector<int>& seq, Forwarder& fwd, VerifyReport& out) {
    const double raw = fwd(seq);
    int predicted = 0;
    int oracle = 0;
    double target = 0;
    switch (task) {
    case VerifyTask::qc:
        oracle = count_of_last(seq);
        target = oracle;
        predicted = static_cast<int>(std::llround(raw));
        break;
    case VerifyTask::mfe:
        oracle = max_count(seq, m);
        target = oracle;
        predicted = static_cast<int>(std::llround(raw));
        break;
    case VerifyTask::mfe_two_layer:
        oracle = max_count(seq, m);
        target = 1.0 / oracle;
        predicted = decode_mfe_two_layer(raw, report.certified_n);
        break;
    }
    ++out.instances;
    if (predicted != oracle) ++out.failures;
    out.max_abs_error = std::max(out.max_abs_error, std::abs(raw - target));
}

} // namespace

VerifyReport verify_exhaustive(const ConstructionReport& report, VerifyTask task, int m, int n) {
    if (m < 1 || n < 1) throw std::invalid_argument("verify_exhaustive: m and n must be positive");
    long long total = 1;
    for (int i = 0; i < n; ++i) {
        total *= m;
        if (total > (1LL << 24)) throw std::invalid_argument("verify_exhaustive: space too large");
    }

    Forwarder fwd(report.model);
    VerifyReport out;
    std::vector<int> seq(static_cast<size_t>(n), 0);
    for (long long it = 0;; ++it) {
        check_one(report, task, m, seq, fwd, out);
        int pos = n - 1;
        while (pos >= 0 && ++seq[static_cast<size_t>(pos)] == m) seq[static_cast<size_t>(pos--)] = 0;
        if (pos < 0) break;
    }
    return out;
}

VerifyReport verify_random(const ConstructionReport& report, VerifyTask task, int m, int n,
                           long long count, uint64_t seed) {
    if (m < 1 || n < 1) throw std::invalid_argument("verify_random: m and n must be positive");
    if (count < 1) throw std::invalid_argument("verify_random: count must be positive");

    util::Rng rng(seed);
    Forwarder fwd(report.model);
    VerifyReport out;
    std::vector<int> seq(static_cast<size_t>(n));
    for (long long it = 0; it < count; ++it) {
        for (auto& tok : seq) tok = static_cast<int>(rng.next_below(static_cast<uint64_t>(m)));
        check_one(report, task, m, seq, fwd, out);
    }
    return out;
}

} // namespace constructions
