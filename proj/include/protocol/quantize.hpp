#pragma once

namespace protocol {

// Sign plus (p-1)-bit fixed point over [-range, range]: step = range*2^(1-p),
// values round to the nearest multiple of step and clamp at +-(2^(p-1)-1)
// steps. Idempotent. `saturated` is set only when |x| exceeds range.
// Rejects p < 2, range <= 0, non-finite x.
double quantize(double x, int p, double range, bool& saturated);
double quantize(double x, int p, double range);

} // namespace protocol
