// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/fp_designer.hpp"
#include "hbf/metrics.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hbf;

namespace
{
    struct Instance
    {
        ChannelSet set;
        PhaseCodebook cb;
        AnalogBeamformer analog;
        CMatrix f_rf;
        CMatrix f_bb;
    };

    Instance random_instance(std::mt19937_64 &rng, int nx, int ny, int users, int n_rf, int bits)
    {
        ChannelSet set = fixtures::random_channels(rng, nx, ny, users, 0.5);
        PhaseCodebook cb(bits, nx * ny);
        AnalogBeamformer a = fixtures::random_analog(rng, cb, n_rf);
        CMatrix f_rf = a.materialize();
        return {set, cb, a, f_rf, fixtures::random_complex(rng, n_rf, users)};
    }

    // every assignment of a tiny array, in lexicographic order
    std::vector<std::vector<Assignment>> all_assignments(int nt, int n_rf, int width)
    {
        std::vector<std::vector<Assignment>> out;
        const int per_row = n_rf * width;
        int total = 1;
        for (int i = 0; i < nt; ++i)
            total *= per_row;
        for (int code = 0; code < total; ++code)
        {
            std::vector<Assignment> rows(nt);
            int c = code;
            for (int i = 0; i < nt; ++i, c /= per_row)
                rows[i] = {(c % per_row) % n_rf, (c % per_row) / n_rf};
            out.push_back(rows);
        }
        return out;
    }

    DeltaForm form_at(const Instance &inst)
    {
        const RVector r = update_r(inst.set, inst.f_rf, inst.f_bb);
        return make_delta_form(inst.set, r, update_t(inst.set, inst.f_rf, inst.f_bb, r));
    }

    // digital step by dense solves: P(mu) is scanned on a log grid and the crossing refined
    CMatrix digital_oracle(const ChannelSet &set, const CMatrix &f_rf, const RVector &r, const CVector &t, Real p)
    {
        const CMatrix eff = f_rf.adjoint() * set.channels;
        CMatrix a = CMatrix::Zero(f_rf.cols(), f_rf.cols());
        CMatrix b(f_rf.cols(), set.num_users());
        for (int k = 0; k < set.num_users(); ++k)
        {
            a += std::norm(t(k)) * eff.col(k) * eff.col(k).adjoint();
            b.col(k) = std::sqrt(1.0 + r(k)) * t(k) * eff.col(k);
        }
        const CMatrix d = f_rf.adjoint() * f_rf;
        // at mu = 0 the limit of (A + mu D)^{-1} b is the minimum D-norm solution
        RVector w = RVector::Zero(d.rows());
        for (int j = 0; j < d.rows(); ++j)
            if (d(j, j).real() > 0.0)
                w(j) = 1.0 / std::sqrt(d(j, j).real());
        auto solve = [&](Real mu) -> CMatrix {
            if (mu == 0.0)
            {
                const CMatrix white = w.asDiagonal() * a * w.asDiagonal();
                return w.asDiagonal() * Eigen::CompleteOrthogonalDecomposition<CMatrix>(white).solve(w.asDiagonal() * b);
            }
            return (a + mu * d).completeOrthogonalDecomposition().solve(b);
        };
        auto power = [&](Real mu) { return (f_rf * solve(mu)).squaredNorm(); };

        const CMatrix f0 = solve(0.0);
        if (power(0.0) <= p)
            return std::sqrt(p / power(0.0)) * f0;
        Real lo = 0.0, hi = 0.0;
        for (Real mu = 1e-10; mu < 1e12; mu *= 1.5)
        {
            if (power(mu) < p)
            {
                hi = mu;
                break;
            }
            lo = mu;
        }
        for (int it = 0; it < 200; ++it)
        {
            const Real mid = 0.5 * (lo + hi);
            (power(mid) > p ? lo : hi) = mid;
        }
        const CMatrix f = solve(0.5 * (lo + hi));
        return std::sqrt(p / power(0.5 * (lo + hi))) * f;
    }
}

TEST(FpSurrogates, ValueIdentities)
{
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 100; ++rep)
    {
        const Instance inst = random_instance(rng, 4, 4, 3, 3, 2);
        const Real rate = sum_rate(inst.set, inst.f_rf, inst.f_bb);
        const RVector r = update_r(inst.set, inst.f_rf, inst.f_bb);
        const CVector t = update_t(inst.set, inst.f_rf, inst.f_bb, r);
        const Real fr = fr_value(inst.set, inst.f_rf, inst.f_bb, r);
        const Real fq = fq_value(inst.set, inst.f_rf, inst.f_bb, r, t);
        EXPECT_NEAR(fr, rate, 1e-9 * (1.0 + std::abs(rate)));
        EXPECT_NEAR(fq, fr, 1e-9 * (1.0 + std::abs(fr)));
        EXPECT_LT((r - sinrs(inst.set, inst.f_rf, inst.f_bb)).norm(), 1e-15 * (1.0 + r.norm()));
    }
}

TEST(FpSurrogates, QuadraticTransformIsALowerBoundInT)
{
    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 50; ++rep)
    {
        const Instance inst = random_instance(rng, 2, 4, 2, 2, 2);
        const RVector r = update_r(inst.set, inst.f_rf, inst.f_bb);
        const CVector t = update_t(inst.set, inst.f_rf, inst.f_bb, r);
        const Real best = fq_value(inst.set, inst.f_rf, inst.f_bb, r, t);
        for (int probe = 0; probe < 20; ++probe)
        {
            const CVector other = t + 0.3 * fixtures::random_complex(rng, 2, 1) * t.norm();
            EXPECT_LE(fq_value(inst.set, inst.f_rf, inst.f_bb, r, other), best + 1e-12);
        }
    }
}

TEST(FpSurrogates, FqDecomposition)
{
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 50; ++rep)
    {
        const Instance inst = random_instance(rng, 4, 2, 3, 4, 1);
        const RVector r = update_r(inst.set, inst.f_rf, inst.f_bb);
        const CVector t = update_t(inst.set, inst.f_rf, inst.f_bb, r);
        const DeltaForm form = make_delta_form(inst.set, r, t);
        const Real delta = delta_value(form, inst.f_rf, inst.f_bb);
        const Real rhs = r.array().log1p().sum() / std::log(2.0) - r.sum() -
                         t.cwiseAbs2().dot(inst.set.noise_vars) + delta;
        const Real fq = fq_value(inst.set, inst.f_rf, inst.f_bb, r, t);
        EXPECT_NEAR(fq, rhs, 1e-9 * (1.0 + std::abs(fq)));
        EXPECT_NEAR(form.value_from_gains(gain_matrix(inst.set.channels, inst.f_rf, inst.f_bb)), delta,
                    1e-10 * (1.0 + std::abs(delta)));
        // the interference matrix is PSD
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<CMatrix>(form.interference()).eigenvalues().minCoeff(), -1e-12);
    }
}

TEST(FpSurrogates, DegenerateCases)
{
    std::mt19937_64 rng(24);
    const Instance inst = random_instance(rng, 2, 2, 1, 1, 1);
    const CMatrix zero = CMatrix::Zero(1, 1);
    EXPECT_EQ(update_r(inst.set, inst.f_rf, zero)(0), 0.0);
    EXPECT_EQ(update_t(inst.set, inst.f_rf, zero, RVector::Zero(1))(0), Complex(0.0));

    const Real amp = std::norm(inst.set.channels.col(0).dot(inst.f_rf * inst.f_bb.col(0)));
    EXPECT_NEAR(update_r(inst.set, inst.f_rf, inst.f_bb)(0), amp / 0.5, 1e-12 * (1.0 + amp));

    // real positive gain gives a real positive t
    CMatrix aligned = inst.f_bb;
    const Complex g = inst.set.channels.col(0).dot(inst.f_rf * aligned.col(0));
    aligned *= std::conj(g) / std::abs(g);
    const RVector r = update_r(inst.set, inst.f_rf, aligned);
    const Complex t = update_t(inst.set, inst.f_rf, aligned, r)(0);
    EXPECT_GT(t.real(), 0.0);
    EXPECT_NEAR(t.imag(), 0.0, 1e-14);
    EXPECT_THROW(make_delta_form(inst.set, RVector::Constant(1, -1.0), CVector::Zero(1)), std::invalid_argument);
}

TEST(AnalogCoordinate, LocalOptimumAgainstEnumeration)
{
    std::mt19937_64 rng(25);
    const auto everything = all_assignments(4, 2, 2);
    ASSERT_EQ(everything.size(), 256u);
    for (int rep = 0; rep < 30; ++rep)
    {
        const Instance inst = random_instance(rng, 2, 2, 2, 2, 1);
        const DeltaForm form = form_at(inst);
        int passes = 0;
        const AnalogBeamformer out = solve_analog_coordinate(form, inst.analog, inst.f_bb, &passes);
        EXPECT_GE(passes, 1);
        const Real v_out = delta_value(form, out.materialize(), inst.f_bb);
        EXPECT_GE(v_out, delta_value(form, inst.f_rf, inst.f_bb) - 1e-12);

        // no single-row change improves the output
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 2; ++j)
                for (int b = 0; b < 2; ++b)
                {
                    AnalogBeamformer nb = out;
                    nb.set_row(i, {j, b});
                    EXPECT_LE(delta_value(form, nb.materialize(), inst.f_bb), v_out + 1e-10 * (1.0 + std::abs(v_out)));
                }

        Real global = -1e300;
        for (const auto &rows : everything)
            global = std::max(global, delta_value(form, AnalogBeamformer(inst.cb, 2, rows).materialize(), inst.f_bb));
        EXPECT_LE(v_out, global + 1e-12);
    }
}

TEST(AnalogCoordinate, SingleAntennaIsGlobal)
{
    std::mt19937_64 rng(26);
    for (int rep = 0; rep < 20; ++rep)
    {
        const Instance inst = random_instance(rng, 1, 1, 2, 3, 2);
        const DeltaForm form = form_at(inst);
        const AnalogBeamformer out = solve_analog_coordinate(form, inst.analog, inst.f_bb);
        Real best = -1e300;
        for (const auto &rows : all_assignments(1, 3, 4))
            best = std::max(best, delta_value(form, AnalogBeamformer(inst.cb, 3, rows).materialize(), inst.f_bb));
        EXPECT_NEAR(delta_value(form, out.materialize(), inst.f_bb), best, 1e-12 * (1.0 + std::abs(best)));
        EXPECT_EQ(solve_analog_exact(form, inst.f_bb, inst.cb, 3), out);
    }
}

TEST(AnalogCoordinate, FixedPointIsUnchanged)
{
    std::mt19937_64 rng(27);
    const Instance inst = random_instance(rng, 2, 3, 2, 2, 2);
    const DeltaForm form = form_at(inst);
    const AnalogBeamformer once = solve_analog_coordinate(form, inst.analog, inst.f_bb);
    EXPECT_EQ(solve_analog_coordinate(form, once, inst.f_bb), once);
}

TEST(AnalogExact, MatchesEnumeration)
{
    std::mt19937_64 rng(28);
    const auto everything = all_assignments(4, 2, 2);
    for (int rep = 0; rep < 100; ++rep)
    {
        const Instance inst = random_instance(rng, 2, 2, 2, 2, 1);
        const DeltaForm form = form_at(inst);
        Real global = -1e300;
        for (const auto &rows : everything)
            global = std::max(global, delta_value(form, AnalogBeamformer(inst.cb, 2, rows).materialize(), inst.f_bb));
        long long nodes = 0;
        const AnalogBeamformer ex = solve_analog_exact(form, inst.f_bb, inst.cb, 2, 1e6, &nodes);
        const Real v = delta_value(form, ex.materialize(), inst.f_bb);
        EXPECT_NEAR(v, global, 1e-10 * (1.0 + std::abs(global)));
        EXPECT_GT(nodes, 0);
        const AnalogBeamformer co = solve_analog_coordinate(form, inst.analog, inst.f_bb);
        EXPECT_GE(v, delta_value(form, co.materialize(), inst.f_bb) - 1e-10 * (1.0 + std::abs(v)));
    }
}

TEST(AnalogExact, BudgetEnforced)
{
    std::mt19937_64 rng(29);
    const Instance inst = random_instance(rng, 4, 4, 2, 2, 2);
    const DeltaForm form = form_at(inst);
    EXPECT_THROW(solve_analog_exact(form, inst.f_bb, inst.cb, 2), BudgetExceededError);
}

TEST(Digital, MatchesDenseOracle)
{
    std::mt19937_64 rng(30);
    for (int n_rf : {2, 3, 4})
        for (int rep = 0; rep < 20; ++rep)
        {
            const Instance inst = random_instance(rng, 2, 4, 2, n_rf, 2);
            const RVector r = update_r(inst.set, inst.f_rf, inst.f_bb);
            const CVector t = update_t(inst.set, inst.f_rf, inst.f_bb, r);
            for (Real p : {0.1, 3.0, 100.0})
            {
                const DigitalSolution sol = solve_digital(inst.set, inst.f_rf, r, t, p);
                EXPECT_NEAR(transmit_power(inst.f_rf, sol.f_bb), p, 1e-8 * p);
                EXPECT_GE(sol.mu, 0.0);
                const auto sizes = inst.analog.subarray_sizes();
                const CMatrix oracle = digital_oracle(inst.set, inst.f_rf, r, t, p);
                // only the radiated beam is unique when a chain is empty
                const CMatrix x = inst.f_rf * sol.f_bb, y = inst.f_rf * oracle;
                EXPECT_LT((x - y).norm(), 1e-6 * (1.0 + y.norm()));
                for (int j = 0; j < n_rf; ++j)
                    if (sizes[j] == 0)
                        EXPECT_EQ(sol.f_bb.row(j).norm(), 0.0);
            }
        }
}

TEST(Digital, ZeroAuxiliaryGivesZeroBeamformer)
{
    std::mt19937_64 rng(31);
    const Instance inst = random_instance(rng, 2, 2, 2, 2, 1);
    const DigitalSolution sol = solve_digital(inst.set, inst.f_rf, RVector::Zero(2), CVector::Zero(2), 1.0);
    EXPECT_TRUE(sol.zero_rhs);
    EXPECT_EQ(sol.f_bb.norm(), 0.0);
    EXPECT_THROW(solve_digital(inst.set, inst.f_rf, RVector::Zero(2), CVector::Zero(2), 0.0), std::invalid_argument);
}

TEST(Digital, PerturbationsDoNotImproveDelta)
{
    std::mt19937_64 rng(32);
    for (int rep = 0; rep < 20; ++rep)
    {
        const Instance inst = random_instance(rng, 4, 2, 2, 3, 2);
        const RVector r = update_r(inst.set, inst.f_rf, inst.f_bb);
        const CVector t = update_t(inst.set, inst.f_rf, inst.f_bb, r);
        const DeltaForm form = make_delta_form(inst.set, r, t);
        const Real p = 2.0;
        const CMatrix f = solve_digital(inst.set, inst.f_rf, r, t, p).f_bb;
        const Real base = delta_value(form, inst.f_rf, f);
        for (int probe = 0; probe < 50; ++probe)
        {
            const CMatrix g = normalize_to_power(inst.f_rf, f + 1e-3 * fixtures::random_complex(rng, 3, 2), p);
            EXPECT_LE(delta_value(form, inst.f_rf, g), base + 1e-9 * (1.0 + std::abs(base)));
        }
    }
}

TEST(FpDesign, MonotoneAndFeasible)
{
    for (int seed = 0; seed < 20; ++seed)
    {
        const ChannelSet set = generate_channel_set({4, 4, 0.5}, 2, 5, derive_seed(5, seed));
        const PhaseCodebook cb(1 + seed % 2, 16);
        const DesignResult res = fp_design(set, 10.0, cb, 2);
        ASSERT_FALSE(res.trace.empty());
        EXPECT_EQ(res.trace.front().iteration, 0);
        for (std::size_t i = 1; i < res.trace.size(); ++i)
            EXPECT_GE(res.trace[i].sum_rate, res.trace[i - 1].sum_rate - 1e-8);
        EXPECT_NEAR(transmit_power(res.f_rf, res.f_bb), 10.0, 1e-8 * 10.0);
        EXPECT_NEAR(sum_rate(set, res.f_rf, res.f_bb), res.sum_rate, 1e-12 * (1.0 + res.sum_rate));
        ASSERT_TRUE(res.analog.has_value());
        EXPECT_LT((res.analog->materialize() - res.f_rf).norm(), 1e-15);
    }
}

TEST(FpDesign, ExactAnalogOnTinyArray)
{
    for (int seed = 0; seed < 10; ++seed)
    {
        const ChannelSet set = generate_channel_set({2, 2, 0.5}, 2, 3, derive_seed(6, seed));
        const PhaseCodebook cb(1, 4);
        FpOptions opts;
        opts.analog = AnalogSolver::Exact;
        const DesignResult ex = fp_design(set, 10.0, cb, 2, opts);
        for (std::size_t i = 1; i < ex.trace.size(); ++i)
            EXPECT_GE(ex.trace[i].sum_rate, ex.trace[i - 1].sum_rate - 1e-8);
    }
}

TEST(FpDesign, RejectsInvalidInput)
{
    const ChannelSet set = generate_channel_set({2, 2, 0.5}, 3, 2, 1);
    EXPECT_THROW(fp_design(set, 1.0, PhaseCodebook(1, 4), 2), std::invalid_argument);
    EXPECT_THROW(fp_design(set, 0.0, PhaseCodebook(1, 4), 3), std::invalid_argument);
    EXPECT_THROW(fp_design(set, 1.0, PhaseCodebook(1, 5), 3), std::invalid_argument);
    FpOptions bad;
    bad.max_iters = 0;
    EXPECT_THROW(fp_design(set, 1.0, PhaseCodebook(1, 4), 3, bad), std::invalid_argument);
}
