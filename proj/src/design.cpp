// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/design.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>

namespace hbf
{
    AnalogBeamformer initial_analog(const ChannelSet &channels, const PhaseCodebook &codebook, int n_rf)
    {
        check_design_inputs(channels, 1.0, codebook, n_rf);
        Eigen::Index strongest = 0;
        channels.channels.colwise().squaredNorm().maxCoeff(&strongest);

        // h^H F picks up conj(h_i) * e^{j phi}, so phi = arg h_i aligns the antenna
        AnalogBeamformer fb = AnalogBeamformer::contiguous(codebook, n_rf);
        for (int i = 0; i < fb.nt(); ++i)
            fb.set_row(i, {fb.row(i).rf, codebook.nearest_index(std::arg(channels.channels(i, strongest)))});
        return fb;
    }

    void check_design_inputs(const ChannelSet &channels, Real total_power, const PhaseCodebook &codebook, int n_rf)
    {
        channels.validate();
        if (!(total_power > 0.0))
            throw std::invalid_argument("design: transmit power must be > 0.");
        if (codebook.nt() != channels.nt())
            throw std::invalid_argument("design: codebook nt does not match the channel length.");
        if (n_rf < channels.num_users())
            throw std::invalid_argument("design: n_rf must be >= the number of users.");
    }

    void write_trace_jsonl(std::ostream &os, const DesignResult &result)
    {
        auto num = [](Real v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
        for (const auto &rec : result.trace)
        {
            nlohmann::json j;
            j["scheme"] = result.scheme;
            j["iteration"] = rec.iteration;
            j["sum_rate"] = num(rec.sum_rate);
            j["iterate_rate"] = num(rec.iterate_rate);
            j["fq"] = num(rec.fq);
            j["delta"] = num(rec.delta);
            j["mu"] = num(rec.mu);
            j["changed_rows"] = rec.changed_rows < 0 ? nlohmann::json(nullptr) : nlohmann::json(rec.changed_rows);
            os << j.dump() << '\n';
        }
    }
}
