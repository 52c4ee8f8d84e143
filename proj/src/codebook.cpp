// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/codebook.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hbf
{
    PhaseCodebook::PhaseCodebook(int bits, int nt) : bits_(bits), nt_(nt)
    {
        if (bits < 1 || bits > 16)
            throw std::invalid_argument("PhaseCodebook: bits must be in [1, 16].");
        if (nt < 1)
            throw std::invalid_argument("PhaseCodebook: nt must be >= 1.");
        magnitude_ = 1.0 / std::sqrt(Real(nt));
        const int n = 1 << bits;
        entries_.reserve(n);
        for (int b = 0; b < n; ++b)
            entries_.push_back(std::polar(magnitude_, phase(b)));
    }

    Real PhaseCodebook::phase(int index) const
    {
        return 2.0 * pi * Real(index) / Real(1 << bits_);
    }

    int PhaseCodebook::nearest_index(Real angle) const
    {
        const int n = size();
        const Real step = 2.0 * pi / Real(n);
        Real a = std::fmod(angle, 2.0 * pi);
        if (a < 0.0)
            a += 2.0 * pi;
        int best = 0;
        Real best_dist = 4.0 * pi;
        for (int b = 0; b < n; ++b)
        {
            Real d = std::abs(a - b * step);
            d = std::min(d, 2.0 * pi - d);
            if (d < best_dist - 1e-12)
            {
                best = b;
                best_dist = d;
            }
        }
        return best;
    }

    int contiguous_chain(int antenna, int nt, int n_rf)
    {
        // ceil((i + 1) * n_rf / nt) - 1 in integer arithmetic
        return ((antenna + 1) * n_rf + nt - 1) / nt - 1;
    }

    AnalogBeamformer::AnalogBeamformer(PhaseCodebook codebook, int n_rf, std::vector<Assignment> rows)
        : codebook_(std::move(codebook)), n_rf_(n_rf), rows_(std::move(rows))
    {
        if (n_rf < 1)
            throw std::invalid_argument("AnalogBeamformer: n_rf must be >= 1.");
        if (static_cast<int>(rows_.size()) != codebook_.nt())
            throw std::invalid_argument("AnalogBeamformer: need exactly one assignment per antenna.");
        for (const auto &a : rows_)
            check(a);
    }

    AnalogBeamformer AnalogBeamformer::contiguous(const PhaseCodebook &codebook, int n_rf)
    {
        const int nt = codebook.nt();
        std::vector<Assignment> rows(nt);
        for (int i = 0; i < nt; ++i)
            rows[i] = {contiguous_chain(i, nt, n_rf), 0};
        return AnalogBeamformer(codebook, n_rf, std::move(rows));
    }

    void AnalogBeamformer::check(const Assignment &a) const
    {
        if (a.rf < 0 || a.rf >= n_rf_)
            throw std::out_of_range("AnalogBeamformer: rf index out of range.");
        if (a.phase < 0 || a.phase >= codebook_.size())
            throw std::out_of_range("AnalogBeamformer: phase index out of range.");
    }

    void AnalogBeamformer::set_row(int i, Assignment a)
    {
        check(a);
        rows_.at(i) = a;
    }

    CMatrix AnalogBeamformer::materialize() const
    {
        CMatrix f = CMatrix::Zero(nt(), n_rf_);
        for (int i = 0; i < nt(); ++i)
            f(i, rows_[i].rf) = codebook_.entry(rows_[i].phase);
        return f;
    }

    SelectionMatrix AnalogBeamformer::to_selection() const
    {
        const int width = codebook_.size();
        SelectionMatrix s{Mat<int>::Zero(nt(), n_rf_ * width)};
        for (int i = 0; i < nt(); ++i)
            s.bits(i, rows_[i].rf * width + rows_[i].phase) = 1;
        return s;
    }

    AnalogBeamformer AnalogBeamformer::from_selection(const SelectionMatrix &s, const PhaseCodebook &codebook, int n_rf)
    {
        const int width = codebook.size();
        if (s.bits.rows() != codebook.nt() || s.bits.cols() != n_rf * width)
            throw std::invalid_argument("from_selection: selection matrix has the wrong shape.");
        std::vector<Assignment> rows(codebook.nt());
        for (int i = 0; i < codebook.nt(); ++i)
        {
            int count = 0;
            for (int j = 0; j < s.bits.cols(); ++j)
            {
                const int v = s.bits(i, j);
                if (v != 0 && v != 1)
                    throw std::invalid_argument("from_selection: entries must be 0 or 1.");
                if (v == 1)
                {
                    rows[i] = {j / width, j % width};
                    ++count;
                }
            }
            if (count != 1)
                throw std::invalid_argument("from_selection: row " + std::to_string(i) +
                                            " must contain exactly one 1 (has " + std::to_string(count) + ").");
        }
        return AnalogBeamformer(codebook, n_rf, std::move(rows));
    }

    std::vector<int> AnalogBeamformer::subarray_sizes() const
    {
        std::vector<int> n(n_rf_, 0);
        for (const auto &a : rows_)
            ++n[a.rf];
        return n;
    }

    CMatrix phase_set_matrix(const PhaseCodebook &codebook, int n_rf)
    {
        const int width = codebook.size();
        CMatrix f = CMatrix::Zero(n_rf * width, n_rf);
        for (int j = 0; j < n_rf; ++j)
            for (int b = 0; b < width; ++b)
                f(j * width + b, j) = codebook.entry(b);
        return f;
    }

    void write_text(std::ostream &os, const AnalogBeamformer &fb)
    {
        os << fb.nt() << ' ' << fb.n_rf() << ' ' << fb.codebook().bits() << '\n';
        for (int i = 0; i < fb.nt(); ++i)
            os << i << ' ' << fb.row(i).rf << ' ' << fb.row(i).phase << '\n';
    }

    AnalogBeamformer read_text(std::istream &is)
    {
        int nt = 0, n_rf = 0, bits = 0;
        if (!(is >> nt >> n_rf >> bits))
            throw std::invalid_argument("read_text: missing header 'nt n_rf B'.");
        PhaseCodebook codebook(bits, nt);
        std::vector<Assignment> rows(nt);
        std::vector<bool> seen(nt, false);
        for (int line = 0; line < nt; ++line)
        {
            int i = 0;
            Assignment a;
            if (!(is >> i >> a.rf >> a.phase))
                throw std::invalid_argument("read_text: expected " + std::to_string(nt) + " assignment lines.");
            if (i < 0 || i >= nt || seen[i])
                throw std::invalid_argument("read_text: antenna index invalid or repeated: " + std::to_string(i));
            seen[i] = true;
            rows[i] = a;
        }
        return AnalogBeamformer(codebook, n_rf, std::move(rows));
    }

    std::string to_text(const AnalogBeamformer &fb)
    {
        std::ostringstream os;
        write_text(os, fb);
        return os.str();
    }

    AnalogBeamformer from_text(const std::string &text)
    {
        std::istringstream is(text);
        return read_text(is);
    }
}
