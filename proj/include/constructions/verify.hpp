#pragma once

#include <cstdint>
#include <vector>

#include "constructions/embeddings.hpp"

namespace constructions {

enum class VerifyTask { qc, mfe, mfe_two_layer };

struct VerifyReport {
    long long instances = 0;
    long long failures = 0;
    double max_abs_error = 0; // raw output vs exact target, before rounding
};

// Oracle comparison over every length-n sequence on m tokens. qc and mfe
// round the output; mfe_two_layer snaps it to the nearest 1/k. Rejects
// m^n > 2^24.
VerifyReport verify_exhaustive(const ConstructionReport& report, VerifyTask task, int m, int n);

// Same comparison on `count` uniform random sequences.
VerifyReport verify_random(const ConstructionReport& report, VerifyTask task, int m, int n,
                           long long count, uint64_t seed);

int count_of_last(const std::vector<int>& seq);
int max_count(const std::vector<int>& seq, int m);

} // namespace constructions
