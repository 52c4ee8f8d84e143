// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_FP_DESIGNER_HPP
#define HBF_FP_DESIGNER_HPP

#include "hbf/design.hpp"

namespace hbf
{
    // Surrogates of the fractional-programming reformulation. Rates use log2.

    // r*_k = SINR_k
    RVector update_r(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb);

    // t*_k = sqrt(1 + r_k) h_k^H F_RF f_BB,k / C_k, C_k = sum_j |h_k^H F_RF f_BB,j|^2 + sigma_k^2
    CVector update_t(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb, const RVector &r);

    // sum log2(1 + r_k) - sum r_k + sum (1 + r_k) |h_k^H F_RF f_BB,k|^2 / C_k
    Real fr_value(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb, const RVector &r);

    // sum log2(1 + r_k) - sum r_k + sum (2 sqrt(1 + r_k) Re{t_k^* h_k^H F_RF f_BB,k} - |t_k|^2 C_k)
    Real fq_value(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb, const RVector &r,
                  const CVector &t);

    // The beamformer-dependent part of f_q for fixed (r, t):
    //   delta = sum_k [2 Re{c_k^H F_RF f_BB,k} - f_BB,k^H F_RF^H Q F_RF f_BB,k]
    // with c_k = sqrt(1 + r_k) t_k h_k and Q = sum_j |t_j|^2 h_j h_j^H (PSD).
    struct DeltaForm
    {
        CMatrix channels; // nt x K
        RVector weights;  // sqrt(1 + r_k)
        CVector t;

        CMatrix linear() const;       // nt x K, columns c_k
        CMatrix interference() const; // Q

        // delta evaluated from G(m, k) = h_m^H F_RF f_BB,k
        Real value_from_gains(const CMatrix &gains) const;
    };

    DeltaForm make_delta_form(const ChannelSet &channels, const RVector &r, const CVector &t);

    Real delta_value(const DeltaForm &form, const CMatrix &f_rf, const CMatrix &f_bb);

    // Cyclic per-antenna coordinate ascent on delta. A row changes only on strict
    // improvement; among equal challengers the lowest phase index, then the lowest
    // RF index wins. Never returns a worse point than `init`.
    AnalogBeamformer solve_analog_coordinate(const DeltaForm &form, const AnalogBeamformer &init,
                                             const CMatrix &f_bb, int *passes = nullptr);

    class BudgetExceededError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Global maximizer of delta by depth-first branch and bound over antennas.
    // Throws BudgetExceededError if (n_rf 2^B)^nt exceeds `budget`.
    AnalogBeamformer solve_analog_exact(const DeltaForm &form, const CMatrix &f_bb, const PhaseCodebook &codebook,
                                        int n_rf, Real budget = 1e6, long long *nodes = nullptr);

    struct DigitalSolution
    {
        CMatrix f_bb;
        Real mu = 0.0;
        bool rescaled = false; // power at mu = 0 was already <= P
        bool zero_rhs = false; // t = 0, nothing to beamform
    };

    // f_BB,k = (A + mu F_RF^H F_RF)^{-1} sqrt(1 + r_k) F_RF^H h_k t_k with mu >= 0 set by
    // bisection so that ||F_RF F_BB||_F^2 = P. Chains with no antennas get zero rows.
    DigitalSolution solve_digital(const ChannelSet &channels, const CMatrix &f_rf, const RVector &r,
                                  const CVector &t, Real total_power);

    enum class AnalogSolver
    {
        Coordinate,
        Exact
    };

    struct FpOptions
    {
        Real tol = 1e-4; // relative change of the sum-rate
        int max_iters = 50;
        AnalogSolver analog = AnalogSolver::Coordinate;
        Real exact_budget = 1e6;
        CssmOptions cssm;
    };

    DesignResult fp_design(const ChannelSet &channels, Real total_power, const PhaseCodebook &codebook, int n_rf,
                           const FpOptions &opts = {});
}

#endif
