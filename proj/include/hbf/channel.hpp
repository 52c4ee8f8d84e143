// SPDX-License-Identifier: Apache-2.0
// ------------------------------------------------------------------------

#ifndef HBF_CHANNEL_HPP
#define HBF_CHANNEL_HPP

#include "hbf/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hbf
{
    // Uniform planar array, nx horizontal by ny vertical elements.
    struct ArrayGeometry
    {
        int nx = 1;
        int ny = 1;
        Real spacing_over_wavelength = 0.5;

        int nt() const { return nx * ny; }
        void validate() const;
    };

    struct PathParams
    {
        Complex gain;
        Real azimuth = 0.0;   // horizontal AoD [rad]
        Real elevation = 0.0; // vertical AoD [rad]
    };

    // Sampling ranges for the departure angles; defaults are the usual mmWave sector.
    struct AngleRanges
    {
        Real azimuth_min = -pi / 2;
        Real azimuth_max = pi / 2;
        Real elevation_min = -pi / 4;
        Real elevation_max = pi / 4;
    };

    // K downlink channels, one column per user.
    struct ChannelSet
    {
        CMatrix channels; // nt x K, column k is h_k
        RVector noise_vars;
        ArrayGeometry geometry;
        std::vector<std::vector<PathParams>> paths;

        int num_users() const { return static_cast<int>(channels.cols()); }
        int nt() const { return static_cast<int>(channels.rows()); }
        void validate() const;
    };

    // Array response a_x(az, el) kron a_y(el). Antenna index is ix * ny + iy,
    // so the horizontal index varies slowest. Unit Euclidean norm.
    CVector steering_vector(const ArrayGeometry &geometry, Real azimuth, Real elevation);

    // h = sqrt(nt / L) * sum_l gain_l * a(az_l, el_l)
    CVector channel_from_paths(const ArrayGeometry &geometry, const std::vector<PathParams> &paths);

    struct UserChannel
    {
        CVector h;
        std::vector<PathParams> paths;
    };

    // Draws num_paths paths with CN(0,1) gains and uniform angles. Per path the
    // engine is consumed in the order Re(gain), Im(gain), azimuth, elevation.
    UserChannel generate_channel(const ArrayGeometry &geometry, int num_paths, std::uint64_t rng_seed,
                                 const AngleRanges &ranges = {});

    // Counter-based sub-stream seeds: derive_seed(s, a, b) depends only on (s, a, b).
    std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

    // User k is drawn from derive_seed(seed, k).
    ChannelSet generate_channel_set(const ArrayGeometry &geometry, int num_users, int num_paths,
                                    std::uint64_t seed, Real noise_var = 1.0,
                                    const AngleRanges &ranges = {});

    // Same, with a per-user path count.
    ChannelSet generate_channel_set(const ArrayGeometry &geometry, const std::vector<int> &num_paths,
                                    std::uint64_t seed, Real noise_var = 1.0,
                                    const AngleRanges &ranges = {});

    // One JSON-lines record holding everything needed to replay a trial.
    std::string channel_record_json(const ChannelSet &set, std::uint64_t seed);

    // Rebuilds the channel vectors from the stored paths.
    ChannelSet channel_set_from_json(const std::string &record, std::uint64_t *seed = nullptr);
}

#endif
