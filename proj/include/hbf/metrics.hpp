// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_METRICS_HPP
#define HBF_METRICS_HPP

#include "hbf/channel.hpp"
#include "hbf/types.hpp"

#include <optional>
#include <string>

namespace hbf
{
    // G(m, k) = h_m^H F_RF f_BB,k : the amplitude of stream k seen by user m.
    CMatrix gain_matrix(const CMatrix &channels, const CMatrix &f_rf, const CMatrix &f_bb);

    // Per-user SINR from a gain matrix.
    RVector sinrs_from_gains(const CMatrix &gains, const RVector &noise_vars);
    Real sum_rate_from_gains(const CMatrix &gains, const RVector &noise_vars);

    Real sinr(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb, int k);
    RVector sinrs(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb);

    // sum_k log2(1 + SINR_k) [bit/s/Hz]
    Real sum_rate(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb);

    // Columns are h~_k = F_RF^H h_k (n_rf x K).
    CMatrix effective_channels(const ChannelSet &channels, const CMatrix &f_rf);

    // ||F_RF F_BB||_F^2
    Real transmit_power(const CMatrix &f_rf, const CMatrix &f_bb);

    enum class Architecture
    {
        FullyDigital,
        FullyConnected,
        FixedSubarray,
        DynamicSubarray
    };

    std::string to_string(Architecture arch);

    // Circuit power figures in mW.
    struct PowerModel
    {
        Real p_bb = 200.0;
        Real p_rf = 300.0;
        Real p_sw = 5.0;
        // Per-PS power; unset means 10 mW per bit (the B = 1 and B = 2 anchors are 10 and 20 mW).
        std::optional<Real> p_ps;

        Real phase_shifter_power(int bits) const;
        void validate() const;
    };

    // Total consumed power [mW] for transmit power `transmit_w` [W].
    Real total_power_mw(Architecture arch, const PowerModel &model, Real transmit_w, int nt, int n_rf, int bits);

    // R / P_tot with P_tot in W, i.e. bit/Hz/J.
    Real energy_efficiency(Real rate, Architecture arch, const PowerModel &model, Real transmit_w, int nt, int n_rf,
                           int bits);
}

#endif
