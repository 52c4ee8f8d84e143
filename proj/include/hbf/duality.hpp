// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_DUALITY_HPP
#define HBF_DUALITY_HPP

#include "hbf/types.hpp"

#include <stdexcept>
#include <vector>

namespace hbf
{
    // Effective channels are passed as a dim x K matrix, column k = h~_k.

    struct DualState
    {
        CMatrix directions;   // dim x K, unit-norm columns
        RVector uplink_powers;
        RVector uplink_sinrs;
        Real water_level = 0.0; // nu in q_k = (1/nu - 1/eps_k)^+
        int iterations = 0;
        bool converged = false;
        std::vector<Real> rate_trace; // sum_k log2(1 + SINR_k^ul) after each power update
    };

    struct CssmOptions
    {
        Real tol = 1e-6; // on ||q(n+1) - q(n)||_inf / max(1, P)
        int max_iters = 200;
    };

    class SingularDualityError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // (sum_{j != k} q_j h~_j h~_j^H + sigma_k^2 I)^{-1} h~_k, normalized. A zero channel yields e_0.
    CVector max_sinr_direction(const CMatrix &eff, const RVector &q, const RVector &noise_vars, int k);

    // eps_k = h~_k^H (sum_{j != k} q_j h~_j h~_j^H + sigma_k^2 I)^{-1} h~_k
    Real effective_gain(const CMatrix &eff, const RVector &q, const RVector &noise_vars, int k);

    RVector uplink_sinrs(const CMatrix &eff, const CMatrix &directions, const RVector &q, const RVector &noise_vars);

    struct WaterfillResult
    {
        RVector powers;
        Real level = 0.0; // nu
    };

    // q_k = (1/nu - 1/eps_k)^+ with sum q_k = P. Bisection on nu, then the level is
    // recomputed in closed form on the resulting active set.
    WaterfillResult waterfill(const RVector &gains, Real total_power);

    // Sorted active-set solution of the same problem.
    WaterfillResult waterfill_closed_form(const RVector &gains, Real total_power);

    // Cyclic self-SINR maximization for the dual uplink, starting from q = P/K.
    DualState cssm_solve(const CMatrix &eff, const RVector &noise_vars, Real total_power,
                         const CssmOptions &opts = {});

    struct DownlinkMap
    {
        CMatrix beamformer; // dim x K, column k = sqrt(p_k) f_k
        RVector powers;
    };

    // Solves B p = sigma with B(i,j) = -|h~_i^H f_j|^2 (i != j) and
    // B(i,i) = |h~_i^H f_i|^2 / SINR_i^ul, so each downlink SINR equals its uplink
    // counterpart. Users with zero uplink power get p_k = 0.
    DownlinkMap downlink_power_map(const DualState &dual, const CMatrix &eff, const RVector &noise_vars);

    // sqrt(P) F^_BB / ||F_RF F^_BB||_F
    CMatrix normalize_to_power(const CMatrix &f_rf, const CMatrix &f_bb_raw, Real total_power);

    // cssm_solve -> downlink_power_map -> normalize_to_power on h~ = F_RF^H h.
    CMatrix duality_digital_design(const CMatrix &channels, const CMatrix &f_rf, const RVector &noise_vars,
                                   Real total_power, const CssmOptions &opts = {}, DualState *state = nullptr);
}

#endif
