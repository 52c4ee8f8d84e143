// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#include "hbf/channel.hpp"

#include <json.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace hbf
{
    void ArrayGeometry::validate() const
    {
        if (nx < 1 || ny < 1)
            throw std::invalid_argument("ArrayGeometry: nx and ny must be >= 1.");
        if (!(spacing_over_wavelength > 0.0))
            throw std::invalid_argument("ArrayGeometry: spacing_over_wavelength must be > 0.");
    }

    void ChannelSet::validate() const
    {
        geometry.validate();
        if (channels.rows() != geometry.nt())
            throw std::invalid_argument("ChannelSet: channel length does not match geometry.");
        if (noise_vars.size() != channels.cols())
            throw std::invalid_argument("ChannelSet: one noise variance per user required.");
        if ((noise_vars.array() <= 0.0).any())
            throw std::invalid_argument("ChannelSet: noise variances must be > 0.");
        if (!paths.empty() && static_cast<Eigen::Index>(paths.size()) != channels.cols())
            throw std::invalid_argument("ChannelSet: path list must have one entry per user.");
    }

    CVector steering_vector(const ArrayGeometry &geometry, Real azimuth, Real elevation)
    {
        geometry.validate();
        const Real k_d = 2.0 * pi * geometry.spacing_over_wavelength;
        const Real phase_x = k_d * std::sin(elevation) * std::sin(azimuth);
        const Real phase_y = k_d * std::cos(elevation);

        CVector a_x(geometry.nx), a_y(geometry.ny);
        for (int ix = 0; ix < geometry.nx; ++ix)
            a_x(ix) = std::polar(1.0 / std::sqrt(Real(geometry.nx)), ix * phase_x);
        for (int iy = 0; iy < geometry.ny; ++iy)
            a_y(iy) = std::polar(1.0 / std::sqrt(Real(geometry.ny)), iy * phase_y);

        CVector a(geometry.nt());
        for (int ix = 0; ix < geometry.nx; ++ix)
            a.segment(ix * geometry.ny, geometry.ny) = a_x(ix) * a_y;
        return a;
    }

    CVector channel_from_paths(const ArrayGeometry &geometry, const std::vector<PathParams> &paths)
    {
        if (paths.empty())
            throw std::invalid_argument("channel_from_paths: at least one path required.");
        CVector h = CVector::Zero(geometry.nt());
        for (const auto &p : paths)
            h += p.gain * steering_vector(geometry, p.azimuth, p.elevation);
        return std::sqrt(Real(geometry.nt()) / Real(paths.size())) * h;
    }

    UserChannel generate_channel(const ArrayGeometry &geometry, int num_paths, std::uint64_t rng_seed,
                                 const AngleRanges &ranges)
    {
        geometry.validate();
        if (num_paths < 1)
            throw std::invalid_argument("generate_channel: num_paths must be >= 1.");

        std::mt19937_64 engine(rng_seed);
        std::normal_distribution<Real> gauss(0.0, std::sqrt(0.5));
        std::uniform_real_distribution<Real> az(ranges.azimuth_min, ranges.azimuth_max);
        std::uniform_real_distribution<Real> el(ranges.elevation_min, ranges.elevation_max);

        UserChannel out;
        out.paths.reserve(num_paths);
        for (int l = 0; l < num_paths; ++l)
        {
            PathParams p;
            const Real re = gauss(engine);
            const Real im = gauss(engine);
            p.gain = Complex(re, im);
            p.azimuth = az(engine);
            p.elevation = el(engine);
            out.paths.push_back(p);
        }
        out.h = channel_from_paths(geometry, out.paths);
        return out;
    }

    namespace
    {
        std::uint64_t splitmix64(std::uint64_t z)
        {
            z += 0x9e3779b97f4a7c15ULL;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        }
    }

    std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b)
    {
        return splitmix64(splitmix64(splitmix64(master) ^ a) ^ b);
    }

    ChannelSet generate_channel_set(const ArrayGeometry &geometry, int num_users, int num_paths,
                                    std::uint64_t seed, Real noise_var, const AngleRanges &ranges)
    {
        if (num_users < 1)
            throw std::invalid_argument("generate_channel_set: num_users must be >= 1.");
        return generate_channel_set(geometry, std::vector<int>(num_users, num_paths), seed, noise_var, ranges);
    }

    ChannelSet generate_channel_set(const ArrayGeometry &geometry, const std::vector<int> &num_paths,
                                    std::uint64_t seed, Real noise_var, const AngleRanges &ranges)
    {
        geometry.validate();
        const int K = static_cast<int>(num_paths.size());
        if (K < 1)
            throw std::invalid_argument("generate_channel_set: num_users must be >= 1.");

        ChannelSet set;
        set.geometry = geometry;
        set.channels.resize(geometry.nt(), K);
        set.noise_vars = RVector::Constant(K, noise_var);
        set.paths.resize(K);
        for (int k = 0; k < K; ++k)
        {
            auto user = generate_channel(geometry, num_paths[k], derive_seed(seed, std::uint64_t(k)), ranges);
            set.channels.col(k) = user.h;
            set.paths[k] = std::move(user.paths);
        }
        set.validate();
        return set;
    }

    std::string channel_record_json(const ChannelSet &set, std::uint64_t seed)
    {
        using nlohmann::json;
        json rec;
        rec["seed"] = seed;
        rec["geometry"] = {{"nx", set.geometry.nx},
                           {"ny", set.geometry.ny},
                           {"spacing_over_wavelength", set.geometry.spacing_over_wavelength}};
        rec["noise_vars"] = std::vector<Real>(set.noise_vars.data(), set.noise_vars.data() + set.noise_vars.size());
        json users = json::array();
        for (const auto &user : set.paths)
        {
            json list = json::array();
            for (const auto &p : user)
                list.push_back({{"gain", {p.gain.real(), p.gain.imag()}},
                                {"azimuth", p.azimuth},
                                {"elevation", p.elevation}});
            users.push_back(std::move(list));
        }
        rec["paths"] = std::move(users);
        return rec.dump();
    }

    ChannelSet channel_set_from_json(const std::string &record, std::uint64_t *seed)
    {
        using nlohmann::json;
        const json rec = json::parse(record);

        ChannelSet set;
        const auto &g = rec.at("geometry");
        set.geometry.nx = g.at("nx").get<int>();
        set.geometry.ny = g.at("ny").get<int>();
        set.geometry.spacing_over_wavelength = g.at("spacing_over_wavelength").get<Real>();
        set.geometry.validate();

        const auto noise = rec.at("noise_vars").get<std::vector<Real>>();
        const auto &users = rec.at("paths");
        if (users.size() != noise.size())
            throw std::invalid_argument("channel record: paths and noise_vars disagree on the user count.");

        const int K = static_cast<int>(noise.size());
        set.noise_vars = Eigen::Map<const RVector>(noise.data(), K);
        set.channels.resize(set.geometry.nt(), K);
        set.paths.resize(K);
        for (int k = 0; k < K; ++k)
        {
            for (const auto &p : users[k])
            {
                const auto gain = p.at("gain").get<std::vector<Real>>();
                if (gain.size() != 2)
                    throw std::invalid_argument("channel record: gain must be [re, im].");
                set.paths[k].push_back({Complex(gain[0], gain[1]), p.at("azimuth").get<Real>(),
                                        p.at("elevation").get<Real>()});
            }
            set.channels.col(k) = channel_from_paths(set.geometry, set.paths[k]);
        }
        if (seed)
            *seed = rec.at("seed").get<std::uint64_t>();
        set.validate();
        return set;
    }
}
