// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_HEURISTIC_DESIGNER_HPP
#define HBF_HEURISTIC_DESIGNER_HPP

#include "hbf/design.hpp"

namespace hbf
{
    struct HeuristicOpts
    {
        Real outer_tol = 1e-4;
        int outer_max_iters = 20;
        CssmOptions cssm;

        void validate() const;
    };

    // Exhaustive scan of the n_rf * 2^B choices for one row with the other rows
    // and F_BB fixed, maximizing the sum-rate. The current choice is kept unless
    // strictly beaten; challengers tie-break on lowest phase, then lowest RF index.
    // With freeze_rf only the phase is searched.
    Assignment best_row_assignment(const ChannelSet &channels, const AnalogBeamformer &f_rf, const CMatrix &f_bb,
                                   int row, bool freeze_rf = false);

    // Rows 0..nt-1 in order, each replaced by its best_row_assignment. If `rates`
    // is given it receives the sum-rate after every row update.
    AnalogBeamformer analog_sweep(const ChannelSet &channels, const AnalogBeamformer &f_rf, const CMatrix &f_bb,
                                  bool freeze_rf = false, std::vector<Real> *rates = nullptr);

    DesignResult heuristic_design(const ChannelSet &channels, Real total_power, const PhaseCodebook &codebook,
                                  int n_rf, const HeuristicOpts &opts = {});
}

#endif
