#pragma once
// Shared time-series containers: sampled complex amplitudes with an optional
// per-contribution breakdown, plus the t=0 weight table.

#include <complex>
#include <map>
#include <string>
#include <vector>

namespace latbath::trace {

using cplx = std::complex<double>;

struct TimeTrace {
    std::vector<double> t;
    std::vector<std::vector<cplx>> amplitudes;   // one series per tracked state
    std::vector<std::string> labels;             // state labels, same order
    std::map<std::string, std::vector<cplx>> parts;  // per-contribution series of state 0

    const std::vector<cplx>& primary() const { return amplitudes.at(0); }
};

struct Breakdown {
    std::vector<std::pair<std::string, cplx>> weights;  // (label, weight at t=0)

    cplx total() const {
        cplx s = 0;
        for (const auto& [l, w] : weights) s += w;
        return s;
    }
};

}  // namespace latbath::trace
