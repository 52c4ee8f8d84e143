// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_DESIGN_HPP
#define HBF_DESIGN_HPP

#include "hbf/channel.hpp"
#include "hbf/codebook.hpp"
#include "hbf/duality.hpp"

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hbf
{
    // One row of a designer's diagnostic trace. Fields a designer does not
    // produce are NaN (or -1 for counts).
    struct IterationRecord
    {
        int iteration = 0;
        Real sum_rate = 0.0;     // rate of the point the designer stands on after this iteration
        Real iterate_rate = 0.0; // rate of the freshly computed iterate (may be below sum_rate if rejected)
        Real fq = std::numeric_limits<Real>::quiet_NaN();
        Real delta = std::numeric_limits<Real>::quiet_NaN();
        Real mu = std::numeric_limits<Real>::quiet_NaN();
        int changed_rows = -1;
    };

    struct DesignResult
    {
        std::string scheme;
        CMatrix f_rf;                          // dense analog stage (identity for fully digital)
        std::optional<AnalogBeamformer> analog; // compact form for hybrid schemes
        CMatrix f_bb;
        Real sum_rate = 0.0;
        int iterations = 0;
        bool converged = false;
        std::vector<IterationRecord> trace; // entry 0 is the initial point
    };

    // Contiguous partition; each antenna's phase is the codebook entry closest to
    // arg h_s(i) for the user s with the largest channel norm.
    AnalogBeamformer initial_analog(const ChannelSet &channels, const PhaseCodebook &codebook, int n_rf);

    void check_design_inputs(const ChannelSet &channels, Real total_power, const PhaseCodebook &codebook, int n_rf);

    // JSON lines: {"scheme", "iteration", "sum_rate", "iterate_rate", "fq", "delta", "mu", "changed_rows"}; NaN becomes null.
    void write_trace_jsonl(std::ostream &os, const DesignResult &result);
}

#endif
