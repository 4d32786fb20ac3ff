#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "constructions/embeddings.hpp"

namespace protocol {

struct DisjointnessInstance {
    std::vector<uint8_t> a, b; // equal length, entries 0/1

    void validate() const;
};

// max_i a_i * b_i
int disjointness_oracle(const DisjointnessInstance& inst);

struct EncodedInputs {
    std::vector<int> alice; // s_j where a_j = 1, else y_j
    std::vector<int> bob;   // s_j where b_j = 1, else z_j
    int query = 0;          // x_0, known to both, appended last
};

// Token ids over an n_bits-block layout: s_j = j, y_j = n+j, z_j = 2n+j,
// query = 3n. Rejects vocab_size < 3*n_bits + 1.
EncodedInputs encode_inputs(const DisjointnessInstance& inst, int vocab_size);

// One attention head acting directly on embedding vectors, all matrices
// d x d row-major.
struct ProtocolHead {
    std::vector<double> wq, wk, wv;
};

// Q = 0, K = 0, V = I: uniform attention onto the token histogram.
std::vector<ProtocolHead> histogram_heads(int d);

struct ProtocolMessage {
    char sender = 'A'; // 'A' or 'B'
    int bits = 0;
    std::vector<double> values;
};

struct ProtocolTranscript {
    std::vector<ProtocolMessage> messages;
    long long total_bits = 0;
    int output = 0;
    bool saturated = false; // some quantizer clipped; transcript invalid
    int n_bits = 0;         // instance size actually played (after any shrink)
    double decoded_mfe = 0; // Bob's count estimate before thresholding
    std::string warning;
};

// Five fixed rounds: Alice sends partial softmax denominators (p*h bits),
// Bob returns completed ones (p*h), Alice sends partial attention outputs
// (d*p*h), Bob finishes them, thresholds the decoded count at 1.5, and sends
// the answer (1 bit). Every transmitted value passes through quantize;
// denominators use range 2n*e^(max logit), output coordinates use range n.
// When the vocabulary is smaller than 3*n_bits + 1 the instance is shrunk to
// m/6 bits and the transcript carries a warning.
ProtocolTranscript run_protocol(const DisjointnessInstance& inst,
                                const std::vector<ProtocolHead>& heads,
                                const constructions::EmbeddingSet& embeddings, int p);

} // namespace protocol
