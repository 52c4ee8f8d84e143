// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/fp_designer.hpp"
#include "hbf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hbf
{
    namespace
    {
        const Real ln2 = std::log(2.0);

        RVector total_received(const CMatrix &gains, const RVector &noise_vars)
        {
            return gains.cwiseAbs2().rowwise().sum() + noise_vars;
        }
    }

    RVector update_r(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb)
    {
        return sinrs(channels, f_rf, f_bb);
    }

    CVector update_t(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb, const RVector &r)
    {
        const CMatrix g = gain_matrix(channels.channels, f_rf, f_bb);
        const RVector c = total_received(g, channels.noise_vars);
        CVector t(g.rows());
        for (Eigen::Index k = 0; k < g.rows(); ++k)
            t(k) = std::sqrt(1.0 + r(k)) * g(k, k) / c(k);
        return t;
    }

    Real fr_value(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb, const RVector &r)
    {
        const CMatrix g = gain_matrix(channels.channels, f_rf, f_bb);
        const RVector c = total_received(g, channels.noise_vars);
        Real v = r.array().log1p().sum() / ln2 - r.sum();
        for (Eigen::Index k = 0; k < g.rows(); ++k)
            v += (1.0 + r(k)) * std::norm(g(k, k)) / c(k);
        return v;
    }

    Real fq_value(const ChannelSet &channels, const CMatrix &f_rf, const CMatrix &f_bb, const RVector &r,
                  const CVector &t)
    {
        const CMatrix g = gain_matrix(channels.channels, f_rf, f_bb);
        const RVector c = total_received(g, channels.noise_vars);
        Real v = r.array().log1p().sum() / ln2 - r.sum();
        for (Eigen::Index k = 0; k < g.rows(); ++k)
            v += 2.0 * std::sqrt(1.0 + r(k)) * (std::conj(t(k)) * g(k, k)).real() - std::norm(t(k)) * c(k);
        return v;
    }

    CMatrix DeltaForm::linear() const
    {
        CMatrix c = channels;
        for (Eigen::Index k = 0; k < c.cols(); ++k)
            c.col(k) *= weights(k) * t(k);
        return c;
    }

    CMatrix DeltaForm::interference() const
    {
        const RVector w = t.cwiseAbs2();
        return channels * w.asDiagonal() * channels.adjoint();
    }

    Real DeltaForm::value_from_gains(const CMatrix &gains) const
    {
        Real v = 0.0;
        const Eigen::Index K = gains.rows();
        for (Eigen::Index k = 0; k < K; ++k)
        {
            v += 2.0 * weights(k) * (std::conj(t(k)) * gains(k, k)).real();
            for (Eigen::Index m = 0; m < K; ++m)
                v -= std::norm(t(m)) * std::norm(gains(m, k));
        }
        return v;
    }

    DeltaForm make_delta_form(const ChannelSet &channels, const RVector &r, const CVector &t)
    {
        if (r.size() != channels.num_users() || t.size() != channels.num_users())
            throw std::invalid_argument("make_delta_form: r and t need one entry per user.");
        if ((r.array() < 0.0).any())
            throw std::invalid_argument("make_delta_form: r must be nonnegative.");
        return {channels.channels, (1.0 + r.array()).sqrt().matrix(), t};
    }

    Real delta_value(const DeltaForm &form, const CMatrix &f_rf, const CMatrix &f_bb)
    {
        const CMatrix x = f_rf * f_bb;
        const CMatrix c = form.linear();
        const CMatrix q = form.interference();
        Real v = 0.0;
        for (Eigen::Index k = 0; k < x.cols(); ++k)
            v += 2.0 * c.col(k).dot(x.col(k)).real() - x.col(k).dot(q * x.col(k)).real();
        return v;
    }

    namespace
    {
        // Adds the contribution of antenna i carrying per-stream values z to G:
        // G(m, k) += conj(h_m(i)) z(k).
        void add_row(CMatrix &g, const CMatrix &channels, int i, const CVector &z, Real sign)
        {
            for (Eigen::Index m = 0; m < g.rows(); ++m)
            {
                const Complex hc = sign * std::conj(channels(i, m));
                g.row(m) += hc * z.transpose();
            }
        }

        CVector row_streams(const PhaseCodebook &codebook, const CMatrix &f_bb, const Assignment &a)
        {
            return codebook.entry(a.phase) * f_bb.row(a.rf).transpose();
        }

        Real tie_slack(Real v) { return 1e-12 * (1.0 + std::abs(v)); }
    }

    AnalogBeamformer solve_analog_coordinate(const DeltaForm &form, const AnalogBeamformer &init,
                                             const CMatrix &f_bb, int *passes)
    {
        if (form.channels.rows() != init.nt() || f_bb.rows() != init.n_rf())
            throw std::invalid_argument("solve_analog_coordinate: inconsistent dimensions.");

        AnalogBeamformer fb = init;
        const PhaseCodebook &cb = fb.codebook();
        CMatrix g = gain_matrix(form.channels, fb.materialize(), f_bb);
        Real current = form.value_from_gains(g);

        int pass = 0;
        for (bool changed = true; changed && pass < 1000; ++pass)
        {
            changed = false;
            for (int i = 0; i < fb.nt(); ++i)
            {
                const Assignment old = fb.row(i);
                CMatrix base = g;
                add_row(base, form.channels, i, row_streams(cb, f_bb, old), -1.0);

                Assignment best = old;
                Real best_value = current;
                Real challenger_value = -std::numeric_limits<Real>::infinity();
                Assignment challenger = old;
                CMatrix trial;
                for (int b = 0; b < cb.size(); ++b)
                    for (int j = 0; j < fb.n_rf(); ++j)
                    {
                        const Assignment a{j, b};
                        if (a == old)
                            continue;
                        trial = base;
                        add_row(trial, form.channels, i, row_streams(cb, f_bb, a), 1.0);
                        const Real v = form.value_from_gains(trial);
                        if (v > challenger_value)
                        {
                            challenger_value = v;
                            challenger = a;
                        }
                    }
                if (challenger_value > best_value + tie_slack(best_value))
                {
                    best = challenger;
                    best_value = challenger_value;
                }
                if (!(best == old))
                {
                    fb.set_row(i, best);
                    g = base;
                    add_row(g, form.channels, i, row_streams(cb, f_bb, best), 1.0);
                    current = form.value_from_gains(g);
                    changed = true;
                }
            }
        }
        if (passes)
            *passes = pass;
        return fb;
    }

    namespace
    {
        // Depth-first search over antennas 0..nt-1. With rows 0..d-1 fixed (gain
        // matrix G_A) and the rest free, write the remaining contributions as D_i.
        // Because quad(.) = sum_{m,k} |t_m|^2 |.|^2 is a PSD form,
        //   delta = val(G_A) + sum_i [lin(D_i) - 2 Re<D_i, G_A>_t] - quad(sum_i D_i)
        //        <= val(G_A) + sum_i max_c [lin(D_{i,c}) - 2 Re<D_{i,c}, G_A>_t],
        // which is separable per row and exact at the leaves.
        struct BranchAndBound
        {
            const DeltaForm &form;
            const PhaseCodebook &codebook;
            int n_rf;
            int nt;
            int K;
            std::vector<Assignment> candidates;
            // contrib[i][c] is the K x K gain increment of antenna i taking candidate c
            std::vector<std::vector<CMatrix>> contrib;
            std::vector<std::vector<Real>> linear;
            RVector t_sq;

            std::vector<Assignment> current;
            std::vector<Assignment> best;
            Real best_value = -std::numeric_limits<Real>::infinity();
            long long nodes = 0;

            BranchAndBound(const DeltaForm &f, const CMatrix &f_bb, const PhaseCodebook &cb, int rf)
                : form(f), codebook(cb), n_rf(rf), nt(static_cast<int>(f.channels.rows())),
                  K(static_cast<int>(f.channels.cols()))
            {
                for (int b = 0; b < cb.size(); ++b)
                    for (int j = 0; j < rf; ++j)
                        candidates.push_back({j, b});
                t_sq = form.t.cwiseAbs2();
                contrib.resize(nt);
                linear.resize(nt);
                for (int i = 0; i < nt; ++i)
                    for (const auto &a : candidates)
                    {
                        CMatrix d = CMatrix::Zero(K, K);
                        add_row(d, form.channels, i, row_streams(cb, f_bb, a), 1.0);
                        Real lin = 0.0;
                        for (int k = 0; k < K; ++k)
                            lin += 2.0 * form.weights(k) * (std::conj(form.t(k)) * d(k, k)).real();
                        contrib[i].push_back(std::move(d));
                        linear[i].push_back(lin);
                    }
                current.resize(nt);
            }

            Real row_term(int i, std::size_t c, const CMatrix &g) const
            {
                const CMatrix &d = contrib[i][c];
                Real cross = 0.0;
                for (int m = 0; m < K; ++m)
                    cross += t_sq(m) * (d.row(m).conjugate().cwiseProduct(g.row(m))).sum().real();
                return linear[i][c] - 2.0 * cross;
            }

            void search(int depth, const CMatrix &g)
            {
                ++nodes;
                const Real value = form.value_from_gains(g);
                if (depth == nt)
                {
                    if (value > best_value + tie_slack(best_value))
                    {
                        best_value = value;
                        best = current;
                    }
                    return;
                }

                Real bound = value;
                for (int i = depth; i < nt; ++i)
                {
                    Real m = -std::numeric_limits<Real>::infinity();
                    for (std::size_t c = 0; c < candidates.size(); ++c)
                        m = std::max(m, row_term(i, c, g));
                    bound += m;
                }
                if (bound <= best_value + tie_slack(best_value))
                    return;

                std::vector<std::pair<Real, std::size_t>> order;
                for (std::size_t c = 0; c < candidates.size(); ++c)
                    order.emplace_back(row_term(depth, c, g), c);
                std::stable_sort(order.begin(), order.end(),
                                 [](const auto &a, const auto &b) { return a.first > b.first; });
                for (const auto &[score, c] : order)
                {
                    current[depth] = candidates[c];
                    search(depth + 1, g + contrib[depth][c]);
                }
            }
        };
    }

    AnalogBeamformer solve_analog_exact(const DeltaForm &form, const CMatrix &f_bb, const PhaseCodebook &codebook,
                                        int n_rf, Real budget, long long *nodes)
    {
        const int nt = static_cast<int>(form.channels.rows());
        if (codebook.nt() != nt || f_bb.rows() != n_rf)
            throw std::invalid_argument("solve_analog_exact: inconsistent dimensions.");
        const Real space = std::pow(Real(n_rf) * codebook.size(), Real(nt));
        if (space > budget)
            throw BudgetExceededError("solve_analog_exact: search space " + std::to_string(space) +
                                      " exceeds budget " + std::to_string(budget) + ".");

        // the contiguous phase-0 beamformer polished by coordinate ascent seeds the incumbent
        const AnalogBeamformer seed =
            solve_analog_coordinate(form, AnalogBeamformer::contiguous(codebook, n_rf), f_bb);

        BranchAndBound bb(form, f_bb, codebook, n_rf);
        bb.best = seed.rows();
        bb.best_value = form.value_from_gains(gain_matrix(form.channels, seed.materialize(), f_bb));
        bb.search(0, CMatrix::Zero(bb.K, bb.K));
        if (nodes)
            *nodes = bb.nodes;
        return AnalogBeamformer(codebook, n_rf, bb.best);
    }

    DigitalSolution solve_digital(const ChannelSet &channels, const CMatrix &f_rf, const RVector &r,
                                  const CVector &t, Real total_power)
    {
        if (!(total_power > 0.0))
            throw std::invalid_argument("solve_digital: transmit power must be > 0.");
        const int K = channels.num_users();
        const int n_rf = static_cast<int>(f_rf.cols());
        DigitalSolution out;
        out.f_bb = CMatrix::Zero(n_rf, K);

        const CMatrix eff = f_rf.adjoint() * channels.channels; // columns h~_k
        const RVector diag = f_rf.colwise().squaredNorm().transpose();

        std::vector<int> chains;
        for (int j = 0; j < n_rf; ++j)
            if (diag(j) > 0.0)
                chains.push_back(j);
        if (chains.empty() || t.cwiseAbs().maxCoeff() == 0.0)
        {
            out.zero_rhs = true;
            return out;
        }

        // whitened coordinates y = D^{1/2} f on the nonempty chains
        const int n = static_cast<int>(chains.size());
        CMatrix w_eff(n, K);
        RVector inv_sqrt_d(n);
        for (int a = 0; a < n; ++a)
        {
            inv_sqrt_d(a) = 1.0 / std::sqrt(diag(chains[a]));
            w_eff.row(a) = inv_sqrt_d(a) * eff.row(chains[a]);
        }
        const RVector t_sq = t.cwiseAbs2();
        const CMatrix a_white = w_eff * t_sq.asDiagonal() * w_eff.adjoint();
        CMatrix rhs(n, K);
        for (int k = 0; k < K; ++k)
            rhs.col(k) = std::sqrt(1.0 + r(k)) * t(k) * w_eff.col(k);

        Eigen::SelfAdjointEigenSolver<CMatrix> eig(a_white);
        const RVector lambda = eig.eigenvalues().cwiseMax(0.0);
        const CMatrix coeff = eig.eigenvectors().adjoint() * rhs;
        const RVector coeff_sq = coeff.cwiseAbs2().rowwise().sum();
        // directions with no curvature carry no right-hand side (b_k lies in range(A))
        const Real floor = 1e-13 * std::max(lambda.maxCoeff(), 1e-300);
        std::vector<bool> keep(n);
        for (int i = 0; i < n; ++i)
            keep[i] = lambda(i) > floor;

        auto power = [&](Real mu) {
            Real p = 0.0;
            for (int i = 0; i < n; ++i)
                if (keep[i])
                    p += coeff_sq(i) / ((lambda(i) + mu) * (lambda(i) + mu));
            return p;
        };
        auto beamformer = [&](Real mu) {
            CMatrix y = CMatrix::Zero(n, K);
            for (int i = 0; i < n; ++i)
                if (keep[i])
                    y.row(i) = coeff.row(i) / (lambda(i) + mu);
            const CMatrix white = eig.eigenvectors() * y;
            CMatrix f = CMatrix::Zero(n_rf, K);
            for (int a = 0; a < n; ++a)
                f.row(chains[a]) = inv_sqrt_d(a) * white.row(a);
            return f;
        };

        const Real p0 = power(0.0);
        if (!(p0 > 0.0))
        {
            out.zero_rhs = true;
            return out;
        }

        Real mu = 0.0;
        if (p0 <= total_power)
        {
            out.rescaled = true;
        }
        else
        {
            Real lo = 0.0, hi = 1.0;
            while (power(hi) >= total_power)
            {
                lo = hi;
                hi *= 2.0;
            }
            for (int it = 0; it < 300; ++it)
            {
                mu = 0.5 * (lo + hi);
                const Real p = power(mu);
                if (std::abs(p - total_power) <= 1e-12 * total_power)
                    break;
                (p > total_power ? lo : hi) = mu;
            }
        }
        out.mu = mu;
        out.f_bb = normalize_to_power(f_rf, beamformer(mu), total_power);
        return out;
    }

    namespace
    {
        int changed_rows(const AnalogBeamformer &a, const AnalogBeamformer &b)
        {
            int n = 0;
            for (int i = 0; i < a.nt(); ++i)
                n += !(a.row(i) == b.row(i));
            return n;
        }
    }

    DesignResult fp_design(const ChannelSet &channels, Real total_power, const PhaseCodebook &codebook, int n_rf,
                           const FpOptions &opts)
    {
        check_design_inputs(channels, total_power, codebook, n_rf);
        if (opts.tol <= 0.0 || opts.max_iters < 1)
            throw std::invalid_argument("fp_design: tol must be > 0 and max_iters >= 1.");

        AnalogBeamformer analog = initial_analog(channels, codebook, n_rf);
        CMatrix f_rf = analog.materialize();
        CMatrix f_bb = duality_digital_design(channels.channels, f_rf, channels.noise_vars, total_power, opts.cssm);
        Real rate = sum_rate(channels, f_rf, f_bb);

        DesignResult res;
        res.scheme = "fp";
        res.trace.push_back({0, rate, rate, std::numeric_limits<Real>::quiet_NaN(), std::numeric_limits<Real>::quiet_NaN(),
                             std::numeric_limits<Real>::quiet_NaN(), 0});

        for (int it = 1; it <= opts.max_iters; ++it)
        {
            const RVector r = update_r(channels, f_rf, f_bb);
            const CVector t = update_t(channels, f_rf, f_bb, r);
            const DeltaForm form = make_delta_form(channels, r, t);

            AnalogBeamformer next = opts.analog == AnalogSolver::Exact
                                        ? solve_analog_exact(form, f_bb, codebook, n_rf, opts.exact_budget)
                                        : solve_analog_coordinate(form, analog, f_bb);
            if (opts.analog == AnalogSolver::Exact &&
                form.value_from_gains(gain_matrix(channels.channels, next.materialize(), f_bb)) <
                    form.value_from_gains(gain_matrix(channels.channels, f_rf, f_bb)))
                next = analog;

            CMatrix next_rf = next.materialize();
            DigitalSolution dig = solve_digital(channels, next_rf, r, t, total_power);
            Real next_rate = dig.zero_rhs ? 0.0 : sum_rate(channels, next_rf, dig.f_bb);

            // A new subarray split can make the previous F_BB exceed the power budget,
            // which breaks the monotone bound chain; redo the digital step on the old split.
            if (next_rate < rate && !(next == analog))
            {
                next = analog;
                next_rf = f_rf;
                dig = solve_digital(channels, next_rf, r, t, total_power);
                next_rate = dig.zero_rhs ? 0.0 : sum_rate(channels, next_rf, dig.f_bb);
            }
            const int changed = changed_rows(analog, next);
            if (next_rate < rate)
            {
                // numerical dead end: keep the incumbent
                res.trace.push_back({it, rate, next_rate, fq_value(channels, f_rf, f_bb, r, t), form.value_from_gains(
                                         gain_matrix(channels.channels, f_rf, f_bb)),
                                     dig.mu, 0});
                res.iterations = it;
                res.converged = true;
                break;
            }

            const Real previous = rate;
            analog = std::move(next);
            f_rf = std::move(next_rf);
            f_bb = std::move(dig.f_bb);
            rate = next_rate;
            res.trace.push_back({it, rate, rate, fq_value(channels, f_rf, f_bb, r, t),
                                 form.value_from_gains(gain_matrix(channels.channels, f_rf, f_bb)), dig.mu, changed});
            res.iterations = it;
            if (std::abs(rate - previous) < opts.tol * std::max(1.0, previous))
            {
                res.converged = true;
                break;
            }
        }

        res.f_rf = f_rf;
        res.analog = analog;
        res.f_bb = f_bb;
        res.sum_rate = rate;
        return res;
    }
}
