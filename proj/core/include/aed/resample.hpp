// Polyphase windowed-sinc sample rate conversion.

#pragma once

#include <span>
#include <vector>

namespace aed {

// Converts between two integer sample rates. The conversion ratio is reduced
// to L/M; a Blackman-Harris windowed sinc prototype with at least 64 taps per
// phase is evaluated in polyphase form. Output length is
// round(n_in * out_rate / in_rate), so duration is preserved to within half
// an output sample. Equal rates pass the input through unchanged.
std::vector<double> resample(std::span<const double> in, int in_rate,
                             int out_rate);

}  // namespace aed
