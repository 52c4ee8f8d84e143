// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_HARNESS_HPP
#define HBF_HARNESS_HPP

#include "hbf/baselines.hpp"
#include "hbf/fp_designer.hpp"
#include "hbf/heuristic_designer.hpp"
#include "hbf/metrics.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbf
{
    inline constexpr const char *library_version = "1.0.0";

    enum class Scheme
    {
        Fp,
        Heuristic,
        FixedSubarray,
        FullyDigital
    };

    enum class SweepVariable
    {
        Snr,
        Nt,
        Users,
        Bits
    };

    std::string to_string(Scheme s);
    std::string to_string(SweepVariable v);

    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    struct ExperimentConfig
    {
        ArrayGeometry geometry{4, 4, 0.5};
        int n_rf = 2;
        int users = 2;
        int bits = 2;
        int num_paths = 5;
        std::vector<Real> snr_db{10.0};
        int num_trials = 500;
        std::uint64_t master_seed = 1;
        std::vector<Scheme> schemes{Scheme::Fp, Scheme::Heuristic, Scheme::FixedSubarray, Scheme::FullyDigital};
        SweepVariable sweep = SweepVariable::Snr;
        std::vector<Real> sweep_values; // empty for an SNR sweep means snr_db
        PowerModel power_model;
        std::optional<Real> ee_transmit_power_w; // unset: the design power P
        FpOptions fp;
        HeuristicOpts heuristic;

        void validate() const;
    };

    // JSON object; unknown keys and ill-typed fields are rejected with the field name.
    ExperimentConfig parse_config(const std::string &json_text);
    ExperimentConfig load_config(const std::string &path);
    // "desk" (4x4 array, K = n_rf = 2, 500 trials) or "full" (6x6, K = n_rf = 3, 1e5 trials).
    ExperimentConfig preset_config(const std::string &name);
    std::string config_to_json(const ExperimentConfig &config);

    struct TrialRecord
    {
        int point = 0;
        int trial = 0;
        Scheme scheme = Scheme::Fp;
        Real sum_rate = 0.0;
        Real ee = 0.0;
        int iterations = 0;
        bool converged = false;
        Real wall_ms = 0.0;
        std::string trace; // JSON lines, filled when tracing
    };

    struct ResultRow
    {
        SweepVariable variable = SweepVariable::Snr;
        Real sweep_value = 0.0;
        Scheme scheme = Scheme::Fp;
        int trials = 0;
        Real mean_sum_rate = 0.0;
        Real stderr_sum_rate = 0.0; // from per-trial values
        Real mean_ee = 0.0;
        Real mean_iterations = 0.0;
        Real converged_fraction = 0.0;
        Real mean_wall_ms = 0.0;
    };

    struct RunOptions
    {
        int threads = 1;
        bool trace = false;
        std::ostream *channel_dump = nullptr; // JSON lines, one per (point, trial)
    };

    struct ExperimentOutput
    {
        std::vector<ResultRow> rows;
        std::vector<TrialRecord> trials; // ordered by (point, trial, scheme)
        std::vector<Real> sweep_values;
    };

    // Trial t of every sweep point draws its channels from derive_seed(master_seed, t);
    // all schemes in a trial see the same ChannelSet. Results do not depend on `threads`.
    ExperimentOutput run_experiment(const ExperimentConfig &config, const RunOptions &opts = {});

    enum class OutputFormat
    {
        Csv,
        Jsonl
    };

    // CSV: a "# {metadata}" line, a header, then one row per ResultRow with columns
    //   sweep_variable,sweep_value,scheme,trials,mean_sum_rate,stderr_sum_rate,
    //   mean_ee,mean_iterations,converged_fraction,mean_wall_ms
    // JSONL: a {"type":"metadata",...} record followed by {"type":"result",...} records.
    void emit_results(std::ostream &os, const ExperimentConfig &config, const std::vector<ResultRow> &rows,
                      OutputFormat format);
    void emit_results(const std::string &path, const ExperimentConfig &config, const std::vector<ResultRow> &rows,
                      OutputFormat format);
}

#endif
