// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/heuristic_designer.hpp"
#include "hbf/baselines.hpp"
#include "hbf/metrics.hpp"

#include <cmath>

namespace hbf
{
    void HeuristicOpts::validate() const
    {
        if (outer_tol <= 0.0 || outer_max_iters < 1)
            throw std::invalid_argument("HeuristicOpts: outer_tol must be > 0 and outer_max_iters >= 1.");
        if (cssm.tol <= 0.0 || cssm.max_iters < 1)
            throw std::invalid_argument("HeuristicOpts: CSSM tol must be > 0 and max_iters >= 1.");
    }

    namespace
    {
        void shift_row(CMatrix &g, const CMatrix &channels, const PhaseCodebook &cb, const CMatrix &f_bb, int i,
                       const Assignment &a, Real sign)
        {
            const Complex w = sign * cb.entry(a.phase);
            for (Eigen::Index m = 0; m < g.rows(); ++m)
                g.row(m) += (std::conj(channels(i, m)) * w) * f_bb.row(a.rf);
        }

        Assignment scan_row(const ChannelSet &channels, const AnalogBeamformer &fb, const CMatrix &f_bb, int i,
                            bool freeze_rf, CMatrix &g)
        {
            const PhaseCodebook &cb = fb.codebook();
            const Assignment old = fb.row(i);
            const Real current = sum_rate_from_gains(g, channels.noise_vars);

            CMatrix base = g;
            shift_row(base, channels.channels, cb, f_bb, i, old, -1.0);

            Assignment challenger = old;
            Real challenger_rate = -1.0;
            CMatrix trial;
            for (int b = 0; b < cb.size(); ++b)
                for (int j = 0; j < fb.n_rf(); ++j)
                {
                    const Assignment a{j, b};
                    if (a == old || (freeze_rf && j != old.rf))
                        continue;
                    trial = base;
                    shift_row(trial, channels.channels, cb, f_bb, i, a, 1.0);
                    const Real v = sum_rate_from_gains(trial, channels.noise_vars);
                    if (v > challenger_rate)
                    {
                        challenger_rate = v;
                        challenger = a;
                    }
                }
            if (challenger_rate > current + 1e-12 * (1.0 + current))
            {
                g = base;
                shift_row(g, channels.channels, cb, f_bb, i, challenger, 1.0);
                return challenger;
            }
            return old;
        }
    }

    Assignment best_row_assignment(const ChannelSet &channels, const AnalogBeamformer &f_rf, const CMatrix &f_bb,
                                   int row, bool freeze_rf)
    {
        if (row < 0 || row >= f_rf.nt())
            throw std::out_of_range("best_row_assignment: row out of range.");
        CMatrix g = gain_matrix(channels.channels, f_rf.materialize(), f_bb);
        return scan_row(channels, f_rf, f_bb, row, freeze_rf, g);
    }

    AnalogBeamformer analog_sweep(const ChannelSet &channels, const AnalogBeamformer &f_rf, const CMatrix &f_bb,
                                  bool freeze_rf, std::vector<Real> *rates)
    {
        AnalogBeamformer fb = f_rf;
        CMatrix g = gain_matrix(channels.channels, fb.materialize(), f_bb);
        for (int i = 0; i < fb.nt(); ++i)
        {
            fb.set_row(i, scan_row(channels, fb, f_bb, i, freeze_rf, g));
            if (rates)
                rates->push_back(sum_rate_from_gains(g, channels.noise_vars));
        }
        return fb;
    }

    namespace
    {
        DesignResult alternate(const std::string &scheme, const ChannelSet &channels, Real total_power,
                               const PhaseCodebook &codebook, int n_rf, const HeuristicOpts &opts, bool freeze_rf)
        {
            check_design_inputs(channels, total_power, codebook, n_rf);
            opts.validate();
            const Real nan = std::numeric_limits<Real>::quiet_NaN();

            AnalogBeamformer analog = initial_analog(channels, codebook, n_rf);
            CMatrix f_bb =
                duality_digital_design(channels.channels, analog.materialize(), channels.noise_vars, total_power, opts.cssm);
            Real rate = sum_rate(channels, analog.materialize(), f_bb);

            AnalogBeamformer best_analog = analog;
            CMatrix best_bb = f_bb;
            Real best_rate = rate;

            DesignResult res;
            res.scheme = scheme;
            res.trace.push_back({0, rate, rate, nan, nan, nan, 0});

            for (int it = 1; it <= opts.outer_max_iters; ++it)
            {
                const AnalogBeamformer next = analog_sweep(channels, analog, f_bb, freeze_rf);
                const CMatrix next_rf = next.materialize();
                int changed = 0;
                for (int i = 0; i < next.nt(); ++i)
                    changed += !(next.row(i) == analog.row(i));

                CMatrix next_bb = f_bb;
                Real next_rate = -1.0;
                try
                {
                    next_bb = duality_digital_design(channels.channels, next_rf, channels.noise_vars, total_power,
                                                     opts.cssm);
                    next_rate = sum_rate(channels, next_rf, next_bb);
                }
                catch (const SingularDualityError &)
                {
                    // keep the previous digital stage, rescaled to the new split
                    next_bb = normalize_to_power(next_rf, f_bb, total_power);
                    next_rate = sum_rate(channels, next_rf, next_bb);
                }

                analog = next;
                f_bb = next_bb;
                rate = next_rate;

                const Real previous_best = best_rate;
                if (rate > best_rate)
                {
                    best_rate = rate;
                    best_analog = analog;
                    best_bb = f_bb;
                }
                else if (rate < best_rate - opts.outer_tol * std::max(1.0, best_rate))
                {
                    analog = best_analog;
                    f_bb = best_bb;
                    rate = best_rate;
                }

                res.trace.push_back({it, best_rate, next_rate, nan, nan, nan, changed});
                res.iterations = it;
                if (std::abs(best_rate - previous_best) < opts.outer_tol * std::max(1.0, previous_best))
                {
                    res.converged = true;
                    break;
                }
            }

            res.f_rf = best_analog.materialize();
            res.analog = best_analog;
            res.f_bb = best_bb;
            res.sum_rate = best_rate;
            return res;
        }
    }

    DesignResult heuristic_design(const ChannelSet &channels, Real total_power, const PhaseCodebook &codebook,
                                  int n_rf, const HeuristicOpts &opts)
    {
        return alternate("heuristic", channels, total_power, codebook, n_rf, opts, false);
    }

    DesignResult fixed_subarray_design(const ChannelSet &channels, Real total_power, const PhaseCodebook &codebook,
                                       int n_rf, const HeuristicOpts &opts)
    {
        return alternate("fixed_subarray", channels, total_power, codebook, n_rf, opts, true);
    }
}
