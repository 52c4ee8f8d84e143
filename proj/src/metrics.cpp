// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace hbf
{
    CMatrix gain_matrix(const CMatrix &channels, const CMatrix &f_rf, const CMatrix &f_bb)
    {
        if (channels.rows() != f_rf.rows() || f_rf.cols() != f_bb.rows())
            throw std::invalid_argument("gain_matrix: inconsistent dimensions.");
        return (channels.adjoint() * f_rf) * f_bb;
    }

    RVector sinrs_from_gains(const CMatrix &gains, const RVector &noise_vars)
    {
        const Eigen::Index K = gains.rows();
        const RMatrix power = gains.cwiseAbs2();
        RVector out(K);
        for (Eigen::Index k = 0; k < K; ++k)
        {
            const Real signal = power(k, k);
            const Real interference = power.row(k).sum() - signal;
            out(k) = signal / (interference + noise_vars(k));
        }
        return out;
    }

    Real sum_rate_from_gains(const CMatrix &gains, const RVector &noise_vars)
    {
        return sinrs_from_gains(gains, noise_vars).array().log1p().sum() / std::log(2.0);
    }

    RVector sinrs(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb)
    {
        if (f_bb.cols() != channels.num_users())
            throw std::invalid_argument("sinrs: F_BB must have one column per user.");
        return sinrs_from_gains(gain_matrix(channels.channels, f_rf, f_bb), channels.noise_vars);
    }

    Real sinr(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb, int k)
    {
        if (k < 0 || k >= channels.num_users())
            throw std::out_of_range("sinr: user index out of range.");
        return sinrs(channels, f_rf, f_bb)(k);
    }

    Real sum_rate(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb)
    {
        return sinrs(channels, f_rf, f_bb).array().log1p().sum() / std::log(2.0);
    }

    CMatrix effective_channels(const ChannelSet &channels, const CMatrix &f_rf)
    {
        if (f_rf.rows() != channels.nt())
            throw std::invalid_argument("effective_channels: F_RF row count must equal nt.");
        return f_rf.adjoint() * channels.channels;
    }

    Real transmit_power(const CMatrix &f_rf, const CMatrix &f_bb)
    {
        return (f_rf * f_bb).squaredNorm();
    }

    std::string to_string(Architecture arch)
    {
        switch (arch)
        {
        case Architecture::FullyDigital:
            return "fully_digital";
        case Architecture::FullyConnected:
            return "fully_connected";
        case Architecture::FixedSubarray:
            return "fixed_subarray";
        case Architecture::DynamicSubarray:
            return "dynamic_subarray";
        }
        return "unknown";
    }

    Real PowerModel::phase_shifter_power(int bits) const
    {
        if (p_ps)
            return *p_ps;
        // line through (1, 10) and (2, 20)
        return 10.0 * Real(bits);
    }

    void PowerModel::validate() const
    {
        if (p_bb < 0.0 || p_rf < 0.0 || p_sw < 0.0 || (p_ps && *p_ps < 0.0))
            throw std::invalid_argument("PowerModel: component powers must be >= 0.");
    }

    Real total_power_mw(Architecture arch, const PowerModel &model, Real transmit_w, int nt, int n_rf, int bits)
    {
        model.validate();
        const Real p = 1000.0 * transmit_w;
        const Real p_ps = model.phase_shifter_power(bits);
        switch (arch)
        {
        case Architecture::FullyDigital:
            return p + model.p_bb + nt * model.p_rf;
        case Architecture::FullyConnected:
            return p + model.p_bb + n_rf * model.p_rf + Real(nt) * n_rf * p_ps;
        case Architecture::FixedSubarray:
            return p + model.p_bb + n_rf * model.p_rf + nt * p_ps;
        case Architecture::DynamicSubarray:
            return p + model.p_bb + n_rf * model.p_rf + nt * p_ps + nt * model.p_sw;
        }
        throw std::invalid_argument("total_power_mw: unknown architecture.");
    }

    Real energy_efficiency(Real rate, Architecture arch, const PowerModel &model, Real transmit_w, int nt, int n_rf,
                           int bits)
    {
        return rate / (total_power_mw(arch, model, transmit_w, nt, n_rf, bits) / 1000.0);
    }
}
