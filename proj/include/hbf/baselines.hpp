// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_BASELINES_HPP
#define HBF_BASELINES_HPP

#include "hbf/heuristic_designer.hpp"

namespace hbf
{
    // Duality/CSSM precoding on the raw channels; f_rf is the nt x nt identity.
    DesignResult fully_digital_design(const ChannelSet &channels, Real total_power, const CssmOptions &opts = {});

    // The heuristic designer with every antenna pinned to its contiguous chain;
    // only phases are searched.
    DesignResult fixed_subarray_design(const ChannelSet &channels, Real total_power, const PhaseCodebook &codebook,
                                       int n_rf, const HeuristicOpts &opts = {});
}

#endif
