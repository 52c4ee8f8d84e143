// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/baselines.hpp"
#include "hbf/metrics.hpp"

namespace hbf
{
    DesignResult fully_digital_design(const ChannelSet &channels, Real total_power, const CssmOptions &opts)
    {
        channels.validate();
        if (!(total_power > 0.0))
            throw std::invalid_argument("fully_digital_design: transmit power must be > 0.");

        const int nt = channels.nt();
        DesignResult res;
        res.scheme = "fully_digital";
        res.f_rf = CMatrix::Identity(nt, nt);
        DualState dual;
        res.f_bb = duality_digital_design(channels.channels, res.f_rf, channels.noise_vars, total_power, opts, &dual);
        res.sum_rate = sum_rate(channels, res.f_rf, res.f_bb);
        res.iterations = dual.iterations;
        res.converged = dual.converged;
        const Real nan = std::numeric_limits<Real>::quiet_NaN();
        res.trace.push_back({0, res.sum_rate, res.sum_rate, nan, nan, nan, -1});
        return res;
    }
}
