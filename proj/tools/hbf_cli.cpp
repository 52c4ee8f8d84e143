// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------
//
// hbf run --config <file> --out <path> [--format csv|jsonl] [--threads N] [--trace]
//         [--dump-channels <path>]
// hbf preset <desk|full>

#include "hbf/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

int main(int argc, char **argv)
{
    CLI::App app{"Hybrid beamformer design benchmarks for dynamic-subarray mmWave MU-MISO downlinks"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv", dump_path;
    int threads = 1;
    bool trace = false;
    auto *run = app.add_subcommand("run", "Run a Monte-Carlo experiment from a config file");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_path, "Result file")->required();
    run->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
    run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    run->add_flag("--trace", trace, "Write per-iteration design traces to <out>.trace.jsonl");
    run->add_option("--dump-channels", dump_path, "Write one replayable channel record per trial (JSON lines)");

    std::string preset_name;
    auto *preset = app.add_subcommand("preset", "Print a preset experiment config");
    preset->add_option("name", preset_name, "desk or full")->required()->check(CLI::IsMember({"desk", "full"}));

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*preset)
        {
            std::cout << hbf::config_to_json(hbf::preset_config(preset_name)) << '\n';
            return 0;
        }

        const hbf::ExperimentConfig config = hbf::load_config(config_path);
        hbf::RunOptions opts;
        opts.threads = threads;
        opts.trace = trace;
        std::unique_ptr<std::ofstream> dump;
        if (!dump_path.empty())
        {
            dump = std::make_unique<std::ofstream>(dump_path);
            if (!*dump)
                throw std::runtime_error("cannot open '" + dump_path + "' for writing.");
            opts.channel_dump = dump.get();
        }

        const hbf::ExperimentOutput result = hbf::run_experiment(config, opts);
        hbf::emit_results(out_path, config, result.rows,
                          format == "jsonl" ? hbf::OutputFormat::Jsonl : hbf::OutputFormat::Csv);
        if (trace)
        {
            std::ofstream t(out_path + ".trace.jsonl");
            for (const auto &rec : result.trials)
                t << rec.trace;
        }
        for (const auto &row : result.rows)
            std::cerr << hbf::to_string(row.variable) << '=' << row.sweep_value << "  " << hbf::to_string(row.scheme)
                      << "  R=" << row.mean_sum_rate << " +- " << row.stderr_sum_rate << "  EE=" << row.mean_ee
                      << '\n';
    }
    catch (const hbf::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
