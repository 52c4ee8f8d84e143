// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/duality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hbf
{
    namespace
    {
        CMatrix interference_plus_noise(const CMatrix &eff, const RVector &q, Real noise, int k)
        {
            const Eigen::Index dim = eff.rows();
            CMatrix m = noise * CMatrix::Identity(dim, dim);
            for (Eigen::Index j = 0; j < eff.cols(); ++j)
                if (j != k && q(j) > 0.0)
                    m.noalias() += q(j) * eff.col(j) * eff.col(j).adjoint();
            return m;
        }

        void check_inputs(const CMatrix &eff, const RVector &noise_vars)
        {
            if (eff.cols() != noise_vars.size())
                throw std::invalid_argument("duality: one noise variance per effective channel required.");
            if ((noise_vars.array() <= 0.0).any())
                throw std::invalid_argument("duality: noise variances must be > 0.");
        }
    }

    CVector max_sinr_direction(const CMatrix &eff, const RVector &q, const RVector &noise_vars, int k)
    {
        check_inputs(eff, noise_vars);
        const CMatrix m = interference_plus_noise(eff, q, noise_vars(k), k);
        CVector f = m.llt().solve(eff.col(k));
        const Real n = f.norm();
        if (n == 0.0)
        {
            f.setZero();
            f(0) = 1.0;
            return f;
        }
        return f / n;
    }

    Real effective_gain(const CMatrix &eff, const RVector &q, const RVector &noise_vars, int k)
    {
        check_inputs(eff, noise_vars);
        const CMatrix m = interference_plus_noise(eff, q, noise_vars(k), k);
        return std::max(0.0, eff.col(k).dot(m.llt().solve(eff.col(k))).real());
    }

    RVector uplink_sinrs(const CMatrix &eff, const CMatrix &directions, const RVector &q, const RVector &noise_vars)
    {
        check_inputs(eff, noise_vars);
        const Eigen::Index K = eff.cols();
        // cross(j, k) = |f_k^H h~_j|^2
        const RMatrix cross = (eff.adjoint() * directions).cwiseAbs2();
        RVector out(K);
        for (Eigen::Index k = 0; k < K; ++k)
        {
            Real interference = 0.0;
            for (Eigen::Index j = 0; j < K; ++j)
                if (j != k)
                    interference += q(j) * cross(j, k);
            out(k) = q(k) * cross(k, k) / (interference + noise_vars(k));
        }
        return out;
    }

    namespace
    {
        RVector powers_at(const RVector &gains, Real level)
        {
            return (1.0 / level - gains.array().inverse()).max(0.0).matrix();
        }

        void check_waterfill(const RVector &gains, Real total_power)
        {
            if (!(total_power > 0.0))
                throw std::invalid_argument("waterfill: total power must be > 0.");
            if (gains.size() == 0)
                throw std::invalid_argument("waterfill: empty gain vector.");
            if (!(gains.array() > 0.0).all())
                throw std::invalid_argument("waterfill: gains must be > 0.");
        }
    }

    WaterfillResult waterfill(const RVector &gains, Real total_power)
    {
        check_waterfill(gains, total_power);

        // sum(nu_lo) >= P since every term is at least P; sum(nu_hi) = 0
        Real lo = 1.0 / (total_power + gains.array().inverse().sum());
        Real hi = gains.maxCoeff();
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it)
        {
            const Real mid = 0.5 * (lo + hi);
            if (powers_at(gains, mid).sum() > total_power)
                lo = mid;
            else
                hi = mid;
        }

        // closed-form level on the bracketed active set
        const Real nu = 0.5 * (lo + hi);
        Real inv_sum = 0.0;
        int active = 0;
        for (Eigen::Index k = 0; k < gains.size(); ++k)
            if (gains(k) > nu)
            {
                inv_sum += 1.0 / gains(k);
                ++active;
            }
        WaterfillResult out{powers_at(gains, nu), nu};
        if (active > 0)
        {
            const Real level = Real(active) / (total_power + inv_sum);
            bool consistent = true;
            for (Eigen::Index k = 0; k < gains.size(); ++k)
                consistent = consistent && ((gains(k) > nu) == (gains(k) > level));
            if (consistent)
                out = {powers_at(gains, level), level};
        }
        return out;
    }

    WaterfillResult waterfill_closed_form(const RVector &gains, Real total_power)
    {
        check_waterfill(gains, total_power);
        std::vector<Eigen::Index> order(gains.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return gains(a) > gains(b); });

        Real inv_sum = 0.0;
        Real level = 0.0;
        for (std::size_t m = 0; m < order.size(); ++m)
        {
            const Real candidate_inv_sum = inv_sum + 1.0 / gains(order[m]);
            const Real candidate = Real(m + 1) / (total_power + candidate_inv_sum);
            // user m is active iff its floor 1/eps lies below the water line
            if (m > 0 && gains(order[m]) <= candidate)
                break;
            inv_sum = candidate_inv_sum;
            level = candidate;
        }
        return {powers_at(gains, level), level};
    }

    DualState cssm_solve(const CMatrix &eff, const RVector &noise_vars, Real total_power, const CssmOptions &opts)
    {
        check_inputs(eff, noise_vars);
        if (!(total_power > 0.0))
            throw std::invalid_argument("cssm_solve: total power must be > 0.");
        if (opts.tol <= 0.0 || opts.max_iters < 1)
            throw std::invalid_argument("cssm_solve: tol must be > 0 and max_iters >= 1.");

        const int K = static_cast<int>(eff.cols());
        const Real scale = std::max(1.0, total_power);
        DualState st;
        st.uplink_powers = RVector::Constant(K, total_power / K);
        st.directions.resize(eff.rows(), K);

        auto update_directions = [&](const RVector &q) {
            for (int k = 0; k < K; ++k)
                st.directions.col(k) = max_sinr_direction(eff, q, noise_vars, k);
        };

        for (int it = 0; it < opts.max_iters; ++it)
        {
            const RVector q = st.uplink_powers;
            update_directions(q);

            RVector gains(K);
            for (int k = 0; k < K; ++k)
                gains(k) = effective_gain(eff, q, noise_vars, k);

            // users with a vanishing channel take no power
            std::vector<int> alive;
            for (int k = 0; k < K; ++k)
                if (gains(k) > 1e-300)
                    alive.push_back(k);
            RVector q_next = RVector::Zero(K);
            if (!alive.empty())
            {
                RVector g(alive.size());
                for (std::size_t a = 0; a < alive.size(); ++a)
                    g(a) = gains(alive[a]);
                const auto wf = waterfill(g, total_power);
                for (std::size_t a = 0; a < alive.size(); ++a)
                    q_next(alive[a]) = wf.powers(a);
                st.water_level = wf.level;
            }

            st.uplink_powers = q_next;
            st.iterations = it + 1;
            st.rate_trace.push_back(
                uplink_sinrs(eff, st.directions, q_next, noise_vars).array().log1p().sum() / std::log(2.0));
            if ((q_next - q).lpNorm<Eigen::Infinity>() < opts.tol * scale)
            {
                st.converged = true;
                break;
            }
        }

        update_directions(st.uplink_powers);
        st.uplink_sinrs = uplink_sinrs(eff, st.directions, st.uplink_powers, noise_vars);
        return st;
    }

    DownlinkMap downlink_power_map(const DualState &dual, const CMatrix &eff, const RVector &noise_vars)
    {
        check_inputs(eff, noise_vars);
        const int K = static_cast<int>(eff.cols());
        std::vector<int> active;
        for (int k = 0; k < K; ++k)
            if (dual.uplink_powers(k) > 0.0 && dual.uplink_sinrs(k) > 0.0)
                active.push_back(k);

        DownlinkMap out{CMatrix::Zero(eff.rows(), K), RVector::Zero(K)};
        if (active.empty())
            return out;

        // cross(i, j) = |h~_i^H f_j|^2
        const RMatrix cross = (eff.adjoint() * dual.directions).cwiseAbs2();
        const int n = static_cast<int>(active.size());
        RMatrix b(n, n);
        RVector sigma(n);
        for (int a = 0; a < n; ++a)
        {
            const int i = active[a];
            sigma(a) = noise_vars(i);
            for (int c = 0; c < n; ++c)
            {
                const int j = active[c];
                b(a, c) = (i == j) ? cross(i, i) / dual.uplink_sinrs(i) : -cross(i, j);
            }
        }

        Eigen::FullPivLU<RMatrix> lu(b);
        if (!lu.isInvertible())
            throw SingularDualityError("downlink_power_map: power-mapping matrix is singular.");
        const RVector p = lu.solve(sigma);
        if (!p.allFinite() || (p.array() < -1e-12 * std::max(1.0, p.cwiseAbs().maxCoeff())).any())
            throw SingularDualityError("downlink_power_map: degenerate channels give infeasible powers.");

        for (int a = 0; a < n; ++a)
        {
            const int k = active[a];
            out.powers(k) = std::max(0.0, p(a));
            out.beamformer.col(k) = std::sqrt(out.powers(k)) * dual.directions.col(k);
        }
        return out;
    }

    CMatrix normalize_to_power(const CMatrix &f_rf, const CMatrix &f_bb_raw, Real total_power)
    {
        const Real n = (f_rf * f_bb_raw).norm();
        if (!(n > 0.0))
            throw std::invalid_argument("normalize_to_power: beamformer radiates no power.");
        return (std::sqrt(total_power) / n) * f_bb_raw;
    }

    CMatrix duality_digital_design(const CMatrix &channels, const CMatrix &f_rf, const RVector &noise_vars,
                                   Real total_power, const CssmOptions &opts, DualState *state)
    {
        const CMatrix eff = f_rf.adjoint() * channels;
        DualState dual = cssm_solve(eff, noise_vars, total_power, opts);
        const DownlinkMap dl = downlink_power_map(dual, eff, noise_vars);
        if (state)
            *state = std::move(dual);
        return normalize_to_power(f_rf, dl.beamformer, total_power);
    }
}
