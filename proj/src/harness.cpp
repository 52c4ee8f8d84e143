// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/harness.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace hbf
{
    using nlohmann::json;

    std::string to_string(Scheme s)
    {
        switch (s)
        {
        case Scheme::Fp:
            return "fp";
        case Scheme::Heuristic:
            return "heuristic";
        case Scheme::FixedSubarray:
            return "fixed_subarray";
        case Scheme::FullyDigital:
            return "fully_digital";
        }
        return "unknown";
    }

    std::string to_string(SweepVariable v)
    {
        switch (v)
        {
        case SweepVariable::Snr:
            return "snr";
        case SweepVariable::Nt:
            return "nt";
        case SweepVariable::Users:
            return "users";
        case SweepVariable::Bits:
            return "bits";
        }
        return "unknown";
    }

    namespace
    {
        Scheme scheme_from(const std::string &s)
        {
            for (auto v : {Scheme::Fp, Scheme::Heuristic, Scheme::FixedSubarray, Scheme::FullyDigital})
                if (to_string(v) == s)
                    return v;
            throw ConfigError("schemes: unknown scheme '" + s + "' (fp, heuristic, fixed_subarray, fully_digital).");
        }

        SweepVariable sweep_from(const std::string &s)
        {
            for (auto v : {SweepVariable::Snr, SweepVariable::Nt, SweepVariable::Users, SweepVariable::Bits})
                if (to_string(v) == s)
                    return v;
            throw ConfigError("sweep.variable: unknown value '" + s + "' (snr, nt, users, bits).");
        }

        struct Point
        {
            ArrayGeometry geometry;
            int users = 0;
            int n_rf = 0;
            int bits = 0;
            Real snr_db = 0.0;
        };

        bool integral(Real v) { return std::floor(v) == v; }

        std::vector<Real> sweep_values_of(const ExperimentConfig &c)
        {
            if (c.sweep == SweepVariable::Snr && c.sweep_values.empty())
                return c.snr_db;
            return c.sweep_values;
        }

        Point point_of(const ExperimentConfig &c, Real value)
        {
            Point p{c.geometry, c.users, c.n_rf, c.bits, c.snr_db.front()};
            switch (c.sweep)
            {
            case SweepVariable::Snr:
                p.snr_db = value;
                break;
            case SweepVariable::Nt:
                p.geometry.nx = static_cast<int>(value) / c.geometry.ny;
                break;
            case SweepVariable::Users:
                p.users = static_cast<int>(value);
                p.n_rf = std::max(c.n_rf, p.users);
                break;
            case SweepVariable::Bits:
                p.bits = static_cast<int>(value);
                break;
            }
            return p;
        }

        template <typename T>
        T get_field(const json &j, const char *key, const std::string &path)
        {
            try
            {
                return j.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw ConfigError(path + key + ": " + e.what());
            }
        }

        void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &path)
        {
            if (!j.is_object())
                throw ConfigError((path.empty() ? std::string("config") : path) + ": expected a JSON object.");
            for (auto it = j.begin(); it != j.end(); ++it)
                if (!known.count(it.key()))
                    throw ConfigError(path + it.key() + ": unknown field.");
        }
    }

    void ExperimentConfig::validate() const
    {
        try
        {
            geometry.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(std::string("nx/ny/spacing_over_wavelength: ") + e.what());
        }
        if (users < 1)
            throw ConfigError("users: must be >= 1.");
        if (bits < 1 || bits > 16)
            throw ConfigError("bits: must be in [1, 16].");
        if (num_paths < 1)
            throw ConfigError("num_paths: must be >= 1.");
        if (num_trials < 1)
            throw ConfigError("trials: must be >= 1.");
        if (schemes.empty())
            throw ConfigError("schemes: at least one scheme required.");
        if (snr_db.empty())
            throw ConfigError("snr_db: at least one value required.");
        if (sweep != SweepVariable::Snr && snr_db.size() != 1)
            throw ConfigError("snr_db: a non-SNR sweep needs exactly one SNR value.");
        if (sweep != SweepVariable::Snr && sweep_values.empty())
            throw ConfigError("sweep.values: required for a " + to_string(sweep) + " sweep.");
        if (ee_transmit_power_w && !(*ee_transmit_power_w > 0.0))
            throw ConfigError("ee_transmit_power_w: must be > 0.");
        try
        {
            power_model.validate();
            heuristic.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(e.what());
        }
        if (fp.tol <= 0.0 || fp.max_iters < 1)
            throw ConfigError("fp: tol must be > 0 and max_iters >= 1.");

        for (Real v : sweep_values_of(*this))
        {
            if (!std::isfinite(v))
                throw ConfigError("sweep.values: values must be finite.");
            if (sweep != SweepVariable::Snr && !integral(v))
                throw ConfigError("sweep.values: " + to_string(sweep) + " values must be integers.");
            if (sweep == SweepVariable::Nt && (v < geometry.ny || static_cast<int>(v) % geometry.ny != 0))
                throw ConfigError("sweep.values: nt values must be positive multiples of ny = " +
                                  std::to_string(geometry.ny) + ".");
            if (sweep == SweepVariable::Bits && (v < 1 || v > 16))
                throw ConfigError("sweep.values: bits must be in [1, 16].");
            if (sweep == SweepVariable::Users && v < 1)
                throw ConfigError("sweep.values: users must be >= 1.");
            const Point p = point_of(*this, v);
            if (p.n_rf < p.users)
                throw ConfigError("n_rf: must be >= users (n_rf = " + std::to_string(p.n_rf) +
                                  ", users = " + std::to_string(p.users) + ").");
        }
    }

    ExperimentConfig preset_config(const std::string &name)
    {
        ExperimentConfig c;
        if (name == "desk")
            return c;
        if (name == "full")
        {
            c.geometry = {6, 6, 0.5};
            c.n_rf = 3;
            c.users = 3;
            c.num_trials = 100000;
            c.snr_db = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
            return c;
        }
        throw ConfigError("preset: unknown preset '" + name + "' (desk, full).");
    }

    ExperimentConfig parse_config(const std::string &json_text)
    {
        json j;
        try
        {
            j = json::parse(json_text);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError(std::string("config: not valid JSON: ") + e.what());
        }
        reject_unknown(j,
                       {"preset", "nx", "ny", "spacing_over_wavelength", "n_rf", "users", "bits", "num_paths", "snr_db",
                        "trials", "seed", "schemes", "sweep", "power_model", "ee_transmit_power_w", "fp", "heuristic",
                        "cssm"},
                       "");

        ExperimentConfig c = j.contains("preset") ? preset_config(get_field<std::string>(j, "preset", ""))
                                                  : ExperimentConfig{};
        if (j.contains("nx"))
            c.geometry.nx = get_field<int>(j, "nx", "");
        if (j.contains("ny"))
            c.geometry.ny = get_field<int>(j, "ny", "");
        if (j.contains("spacing_over_wavelength"))
            c.geometry.spacing_over_wavelength = get_field<Real>(j, "spacing_over_wavelength", "");
        if (j.contains("n_rf"))
            c.n_rf = get_field<int>(j, "n_rf", "");
        if (j.contains("users"))
            c.users = get_field<int>(j, "users", "");
        if (j.contains("bits"))
            c.bits = get_field<int>(j, "bits", "");
        if (j.contains("num_paths"))
            c.num_paths = get_field<int>(j, "num_paths", "");
        if (j.contains("snr_db"))
            c.snr_db = get_field<std::vector<Real>>(j, "snr_db", "");
        if (j.contains("trials"))
            c.num_trials = get_field<int>(j, "trials", "");
        if (j.contains("seed"))
            c.master_seed = get_field<std::uint64_t>(j, "seed", "");
        if (j.contains("schemes"))
        {
            c.schemes.clear();
            for (const auto &s : get_field<std::vector<std::string>>(j, "schemes", ""))
                c.schemes.push_back(scheme_from(s));
        }
        if (j.contains("sweep"))
        {
            const json &s = j["sweep"];
            reject_unknown(s, {"variable", "values"}, "sweep.");
            c.sweep = sweep_from(get_field<std::string>(s, "variable", "sweep."));
            if (s.contains("values"))
                c.sweep_values = get_field<std::vector<Real>>(s, "values", "sweep.");
        }
        if (j.contains("power_model"))
        {
            const json &p = j["power_model"];
            reject_unknown(p, {"p_bb", "p_rf", "p_ps", "p_sw"}, "power_model.");
            if (p.contains("p_bb"))
                c.power_model.p_bb = get_field<Real>(p, "p_bb", "power_model.");
            if (p.contains("p_rf"))
                c.power_model.p_rf = get_field<Real>(p, "p_rf", "power_model.");
            if (p.contains("p_ps"))
                c.power_model.p_ps = get_field<Real>(p, "p_ps", "power_model.");
            if (p.contains("p_sw"))
                c.power_model.p_sw = get_field<Real>(p, "p_sw", "power_model.");
        }
        if (j.contains("ee_transmit_power_w") && !j["ee_transmit_power_w"].is_null())
            c.ee_transmit_power_w = get_field<Real>(j, "ee_transmit_power_w", "");
        if (j.contains("fp"))
        {
            const json &f = j["fp"];
            reject_unknown(f, {"tol", "max_iters", "analog", "exact_budget"}, "fp.");
            if (f.contains("tol"))
                c.fp.tol = get_field<Real>(f, "tol", "fp.");
            if (f.contains("max_iters"))
                c.fp.max_iters = get_field<int>(f, "max_iters", "fp.");
            if (f.contains("exact_budget"))
                c.fp.exact_budget = get_field<Real>(f, "exact_budget", "fp.");
            if (f.contains("analog"))
            {
                const auto a = get_field<std::string>(f, "analog", "fp.");
                if (a == "coordinate")
                    c.fp.analog = AnalogSolver::Coordinate;
                else if (a == "exact")
                    c.fp.analog = AnalogSolver::Exact;
                else
                    throw ConfigError("fp.analog: expected 'coordinate' or 'exact'.");
            }
        }
        if (j.contains("heuristic"))
        {
            const json &h = j["heuristic"];
            reject_unknown(h, {"outer_tol", "outer_max_iters"}, "heuristic.");
            if (h.contains("outer_tol"))
                c.heuristic.outer_tol = get_field<Real>(h, "outer_tol", "heuristic.");
            if (h.contains("outer_max_iters"))
                c.heuristic.outer_max_iters = get_field<int>(h, "outer_max_iters", "heuristic.");
        }
        if (j.contains("cssm"))
        {
            const json &s = j["cssm"];
            reject_unknown(s, {"tol", "max_iters"}, "cssm.");
            CssmOptions o;
            if (s.contains("tol"))
                o.tol = get_field<Real>(s, "tol", "cssm.");
            if (s.contains("max_iters"))
                o.max_iters = get_field<int>(s, "max_iters", "cssm.");
            c.fp.cssm = o;
            c.heuristic.cssm = o;
        }
        c.validate();
        return c;
    }

    ExperimentConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("config: cannot open '" + path + "'.");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str());
    }

    namespace
    {
        json config_json(const ExperimentConfig &c)
        {
            json j;
            j["nx"] = c.geometry.nx;
            j["ny"] = c.geometry.ny;
            j["spacing_over_wavelength"] = c.geometry.spacing_over_wavelength;
            j["n_rf"] = c.n_rf;
            j["users"] = c.users;
            j["bits"] = c.bits;
            j["num_paths"] = c.num_paths;
            j["snr_db"] = c.snr_db;
            j["trials"] = c.num_trials;
            j["seed"] = c.master_seed;
            json schemes = json::array();
            for (auto s : c.schemes)
                schemes.push_back(to_string(s));
            j["schemes"] = schemes;
            j["sweep"] = {{"variable", to_string(c.sweep)}, {"values", sweep_values_of(c)}};
            json pm = {{"p_bb", c.power_model.p_bb}, {"p_rf", c.power_model.p_rf}, {"p_sw", c.power_model.p_sw}};
            if (c.power_model.p_ps)
                pm["p_ps"] = *c.power_model.p_ps;
            j["power_model"] = pm;
            j["ee_transmit_power_w"] = c.ee_transmit_power_w ? json(*c.ee_transmit_power_w) : json(nullptr);
            j["fp"] = {{"tol", c.fp.tol},
                       {"max_iters", c.fp.max_iters},
                       {"analog", c.fp.analog == AnalogSolver::Exact ? "exact" : "coordinate"},
                       {"exact_budget", c.fp.exact_budget}};
            j["heuristic"] = {{"outer_tol", c.heuristic.outer_tol}, {"outer_max_iters", c.heuristic.outer_max_iters}};
            j["cssm"] = {{"tol", c.heuristic.cssm.tol}, {"max_iters", c.heuristic.cssm.max_iters}};
            return j;
        }

        Architecture architecture_of(Scheme s)
        {
            switch (s)
            {
            case Scheme::FullyDigital:
                return Architecture::FullyDigital;
            case Scheme::FixedSubarray:
                return Architecture::FixedSubarray;
            default:
                return Architecture::DynamicSubarray;
            }
        }

        DesignResult run_scheme(Scheme s, const ChannelSet &ch, Real power, const Point &p,
                                const ExperimentConfig &c)
        {
            switch (s)
            {
            case Scheme::Fp:
                return fp_design(ch, power, PhaseCodebook(p.bits, p.geometry.nt()), p.n_rf, c.fp);
            case Scheme::Heuristic:
                return heuristic_design(ch, power, PhaseCodebook(p.bits, p.geometry.nt()), p.n_rf, c.heuristic);
            case Scheme::FixedSubarray:
                return fixed_subarray_design(ch, power, PhaseCodebook(p.bits, p.geometry.nt()), p.n_rf, c.heuristic);
            case Scheme::FullyDigital:
                return fully_digital_design(ch, power, c.heuristic.cssm);
            }
            throw std::logic_error("run_scheme: unknown scheme");
        }

        std::string annotated_trace(const DesignResult &r, int point, int trial)
        {
            std::ostringstream raw;
            write_trace_jsonl(raw, r);
            std::istringstream in(raw.str());
            std::string out, line;
            while (std::getline(in, line))
            {
                json j = json::parse(line);
                j["point"] = point;
                j["trial"] = trial;
                out += j.dump() + "\n";
            }
            return out;
        }
    }

    std::string config_to_json(const ExperimentConfig &config) { return config_json(config).dump(2); }

    ExperimentOutput run_experiment(const ExperimentConfig &config, const RunOptions &opts)
    {
        config.validate();
        ExperimentOutput out;
        out.sweep_values = sweep_values_of(config);
        std::vector<Point> points;
        for (Real v : out.sweep_values)
            points.push_back(point_of(config, v));

        const int n_points = static_cast<int>(points.size());
        const int n_trials = config.num_trials;
        const int n_schemes = static_cast<int>(config.schemes.size());
        const long long n_items = static_cast<long long>(n_points) * n_trials;
        out.trials.resize(static_cast<std::size_t>(n_items * n_schemes));
        std::vector<std::string> dumps(opts.channel_dump ? n_items : 0);

        std::atomic<long long> next{0};
        std::mutex error_mutex;
        std::exception_ptr error;

        auto worker = [&]() {
            for (long long item = next++; item < n_items; item = next++)
            {
                try
                {
                    const int pi = static_cast<int>(item / n_trials);
                    const int trial = static_cast<int>(item % n_trials);
                    const Point &p = points[pi];
                    const std::uint64_t seed = derive_seed(config.master_seed, std::uint64_t(trial));
                    const ChannelSet ch = generate_channel_set(p.geometry, p.users, config.num_paths, seed, 1.0);
                    if (opts.channel_dump)
                        dumps[item] = channel_record_json(ch, seed);

                    // SNR = P / sigma^2 with sigma^2 = 1
                    const Real power = std::pow(10.0, p.snr_db / 10.0);
                    const Real ee_power = config.ee_transmit_power_w.value_or(power);
                    for (int s = 0; s < n_schemes; ++s)
                    {
                        const Scheme scheme = config.schemes[s];
                        const auto t0 = std::chrono::steady_clock::now();
                        const DesignResult r = run_scheme(scheme, ch, power, p, config);
                        const auto t1 = std::chrono::steady_clock::now();

                        TrialRecord &rec = out.trials[static_cast<std::size_t>(item * n_schemes + s)];
                        rec.point = pi;
                        rec.trial = trial;
                        rec.scheme = scheme;
                        rec.sum_rate = r.sum_rate;
                        const int chains = scheme == Scheme::FullyDigital ? p.geometry.nt() : p.n_rf;
                        rec.ee = energy_efficiency(r.sum_rate, architecture_of(scheme), config.power_model, ee_power,
                                                   p.geometry.nt(), chains, p.bits);
                        rec.iterations = r.iterations;
                        rec.converged = r.converged;
                        rec.wall_ms = std::chrono::duration<Real, std::milli>(t1 - t0).count();
                        if (opts.trace)
                            rec.trace = annotated_trace(r, pi, trial);
                    }
                }
                catch (...)
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    next = n_items;
                }
            }
        };

        const int threads = std::max(1, opts.threads);
        if (threads == 1)
            worker();
        else
        {
            std::vector<std::thread> pool;
            for (int i = 0; i < threads; ++i)
                pool.emplace_back(worker);
            for (auto &t : pool)
                t.join();
        }
        if (error)
            std::rethrow_exception(error);

        if (opts.channel_dump)
            for (const auto &d : dumps)
                *opts.channel_dump << d << '\n';

        // fold by trial index
        for (int pi = 0; pi < n_points; ++pi)
            for (int s = 0; s < n_schemes; ++s)
            {
                ResultRow row;
                row.variable = config.sweep;
                row.sweep_value = out.sweep_values[pi];
                row.scheme = config.schemes[s];
                row.trials = n_trials;
                Real sum = 0.0, sum_sq = 0.0;
                for (int t = 0; t < n_trials; ++t)
                {
                    const TrialRecord &rec =
                        out.trials[static_cast<std::size_t>((static_cast<long long>(pi) * n_trials + t) * n_schemes + s)];
                    sum += rec.sum_rate;
                    row.mean_ee += rec.ee;
                    row.mean_iterations += rec.iterations;
                    row.converged_fraction += rec.converged ? 1.0 : 0.0;
                    row.mean_wall_ms += rec.wall_ms;
                }
                row.mean_sum_rate = sum / n_trials;
                for (int t = 0; t < n_trials; ++t)
                {
                    const Real d = out.trials[static_cast<std::size_t>(
                                                  (static_cast<long long>(pi) * n_trials + t) * n_schemes + s)]
                                       .sum_rate -
                                   row.mean_sum_rate;
                    sum_sq += d * d;
                }
                row.stderr_sum_rate = n_trials > 1 ? std::sqrt(sum_sq / (n_trials - 1) / n_trials) : 0.0;
                row.mean_ee /= n_trials;
                row.mean_iterations /= n_trials;
                row.converged_fraction /= n_trials;
                row.mean_wall_ms /= n_trials;
                out.rows.push_back(row);
            }
        return out;
    }

    namespace
    {
        std::string fmt(Real v)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.12g", v);
            return buf;
        }

        json metadata(const ExperimentConfig &config)
        {
            return {{"type", "metadata"},
                    {"library", "hbf"},
                    {"version", library_version},
                    {"master_seed", config.master_seed},
                    {"noise_var", 1.0},
                    {"ee_transmit_power", config.ee_transmit_power_w ? "fixed ee_transmit_power_w [W]"
                                                                     : "design power P = 10^(snr_db/10) [W]"},
                    {"config", config_json(config)}};
        }
    }

    void emit_results(std::ostream &os, const ExperimentConfig &config, const std::vector<ResultRow> &rows,
                      OutputFormat format)
    {
        if (format == OutputFormat::Csv)
        {
            os << "# " << metadata(config).dump() << '\n';
            os << "sweep_variable,sweep_value,scheme,trials,mean_sum_rate,stderr_sum_rate,mean_ee,mean_iterations,"
                  "converged_fraction,mean_wall_ms\n";
            for (const auto &r : rows)
                os << to_string(r.variable) << ',' << fmt(r.sweep_value) << ',' << to_string(r.scheme) << ','
                   << r.trials << ',' << fmt(r.mean_sum_rate) << ',' << fmt(r.stderr_sum_rate) << ','
                   << fmt(r.mean_ee) << ',' << fmt(r.mean_iterations) << ',' << fmt(r.converged_fraction) << ','
                   << fmt(r.mean_wall_ms) << '\n';
            return;
        }
        os << metadata(config).dump() << '\n';
        for (const auto &r : rows)
        {
            json j = {{"type", "result"},
                      {"sweep_variable", to_string(r.variable)},
                      {"sweep_value", r.sweep_value},
                      {"scheme", to_string(r.scheme)},
                      {"trials", r.trials},
                      {"mean_sum_rate", r.mean_sum_rate},
                      {"stderr_sum_rate", r.stderr_sum_rate},
                      {"mean_ee", r.mean_ee},
                      {"mean_iterations", r.mean_iterations},
                      {"converged_fraction", r.converged_fraction},
                      {"mean_wall_ms", r.mean_wall_ms}};
            os << j.dump() << '\n';
        }
    }

    void emit_results(const std::string &path, const ExperimentConfig &config, const std::vector<ResultRow> &rows,
                      OutputFormat format)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("emit_results: cannot open '" + path + "' for writing.");
        emit_results(out, config, rows, format);
        if (!out)
            throw std::runtime_error("emit_results: write to '" + path + "' failed.");
    }
}
