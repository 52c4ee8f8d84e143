// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_CODEBOOK_HPP
#define HBF_CODEBOOK_HPP

#include "hbf/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hbf
{
    // The 2^B phases of a B-bit phase shifter at magnitude 1/sqrt(nt).
    class PhaseCodebook
    {
    public:
        PhaseCodebook(int bits, int nt);

        int bits() const { return bits_; }
        int nt() const { return nt_; }
        int size() const { return static_cast<int>(entries_.size()); }
        Real magnitude() const { return magnitude_; }

        const Complex &entry(int index) const { return entries_.at(index); }
        const std::vector<Complex> &entries() const { return entries_; }
        Real phase(int index) const;

        // Codebook index closest in angle to `angle`; ties go to the lower index.
        int nearest_index(Real angle) const;

        bool operator==(const PhaseCodebook &other) const { return bits_ == other.bits_ && nt_ == other.nt_; }

    private:
        int bits_;
        int nt_;
        Real magnitude_;
        std::vector<Complex> entries_;
    };

    struct Assignment
    {
        int rf = 0;
        int phase = 0;

        bool operator==(const Assignment &) const = default;
    };

    // Binary nt x (n_rf * 2^B) matrix; column rf * 2^B + phase selects that slot.
    struct SelectionMatrix
    {
        Mat<int> bits;
    };

    // Dynamic-subarray analog beamformer stored as one (rf chain, phase) pair per antenna.
    class AnalogBeamformer
    {
    public:
        AnalogBeamformer(PhaseCodebook codebook, int n_rf, std::vector<Assignment> rows);

        // Antenna i joins chain ceil((i + 1) * n_rf / nt) - 1 with phase index 0.
        static AnalogBeamformer contiguous(const PhaseCodebook &codebook, int n_rf);

        static AnalogBeamformer from_selection(const SelectionMatrix &s, const PhaseCodebook &codebook, int n_rf);

        int nt() const { return static_cast<int>(rows_.size()); }
        int n_rf() const { return n_rf_; }
        const PhaseCodebook &codebook() const { return codebook_; }
        const std::vector<Assignment> &rows() const { return rows_; }
        const Assignment &row(int i) const { return rows_.at(i); }
        Complex weight(int i) const { return codebook_.entry(rows_.at(i).phase); }

        void set_row(int i, Assignment a);

        CMatrix materialize() const;
        SelectionMatrix to_selection() const;
        std::vector<int> subarray_sizes() const;

        bool operator==(const AnalogBeamformer &other) const
        {
            return codebook_ == other.codebook_ && n_rf_ == other.n_rf_ && rows_ == other.rows_;
        }

    private:
        void check(const Assignment &a) const;

        PhaseCodebook codebook_;
        int n_rf_;
        std::vector<Assignment> rows_;
    };

    int contiguous_chain(int antenna, int nt, int n_rf);

    // Block-diagonal (n_rf * 2^B) x n_rf matrix with the codebook column on each block.
    CMatrix phase_set_matrix(const PhaseCodebook &codebook, int n_rf);

    // Text form: a header line "nt n_rf B" followed by "antenna rf_index phase_index" per line.
    void write_text(std::ostream &os, const AnalogBeamformer &fb);
    AnalogBeamformer read_text(std::istream &is);
    std::string to_text(const AnalogBeamformer &fb);
    AnalogBeamformer from_text(const std::string &text);
}

#endif
