#pragma once

#include "greenprec/linalg.hpp"
#include "greenprec/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace greenprec {

/// Network geometry, propagation and power parameters. Defaults are the
/// 100-AP / 60-UE single-antenna deployment on a 1 km square.
struct NetworkConfig {
    double area_side_m = 1000.0;
    int num_aps = 100;
    int antennas_per_ap = 1;
    int num_ues = 60;
    double bandwidth_hz = 20e6;
    double height_diff_m = 10.0;
    double pathloss_exponent = 3.67;
    double gain_at_1km_db = -140.6;
    double shadow_std_db = 4.0;
    double angular_std_deg = 15.0;
    double downlink_power_w = 1.0;
    double noise_figure_db = 7.0;
    // Express channel gains relative to the receiver noise power so that the
    // effective noise variance is 1 (the usual "gain over noise" convention).
    bool normalize_to_noise = true;
    std::uint64_t seed = 1;

    int num_antennas() const { return num_aps * antennas_per_ap; }

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

struct GeometryRealization {
    RealMatrix ap_positions;  // L x 2
    RealMatrix ue_positions;  // K x 2
    RealMatrix distance_m;    // K x L, 3-D wrap-around distance
    RealMatrix azimuth_rad;   // K x L, direction of UE seen from AP
    RealMatrix elevation_rad; // K x L
};

/// Stacked downlink channel and its real-valued lift.
struct ChannelMatrix {
    ComplexMatrix h;   // K x M, row k = [h_k1^T ... h_kL^T]
    RealMatrix h_r;    // 2K x 2M, [Re -Im; Im Re]
    double sigma2 = 1.0;
    double largest_singular_value_sq = 0.0;

    int num_ues() const { return static_cast<int>(h.rows()); }
    int num_antennas() const { return static_cast<int>(h.cols()); }
};

/// Builds the lift and spectral norm for a given complex channel.
ChannelMatrix make_channel(ComplexMatrix h, double sigma2);

/// Planar offset from ap to ue on the torus of the given side (shortest of
/// the nine periodic images).
Eigen::Vector2d wrapped_offset(const Eigen::Vector2d& ue, const Eigen::Vector2d& ap, double side);

double wrapped_distance(const Eigen::Vector2d& ue, const Eigen::Vector2d& ap, double side,
                        double height_diff);

GeometryRealization generate_geometry(const NetworkConfig& cfg, RandomStream& rng);

/// Deterministic part of the large-scale gain in dB plus a given shadowing term.
double large_scale_gain_db(double distance_m, const NetworkConfig& cfg, double shadow_db);

/// Large-scale fading with a freshly drawn log-normal shadowing term,
/// returned as a linear power ratio.
double large_scale_fading(double distance_m, const NetworkConfig& cfg, RandomStream& rng);

/// Unit-diagonal local scattering correlation of a half-wavelength ULA with
/// Gaussian angular spread around (azimuth, elevation).
ComplexMatrix local_scattering_correlation(int n, double azimuth_rad, double elevation_rad,
                                           double azimuth_std_rad, double elevation_std_rad);

/// gain * local scattering correlation, forced Hermitian PSD.
ComplexMatrix spatial_correlation(double gain, double azimuth_rad, double elevation_rad,
                                  const NetworkConfig& cfg);

/// Per AP-UE correlation matrices, index k * L + l.
struct CorrelationSet {
    int num_ues = 0;
    int num_aps = 0;
    int antennas_per_ap = 0;
    std::vector<ComplexMatrix> r;

    const ComplexMatrix& at(int k, int l) const { return r[static_cast<std::size_t>(k * num_aps + l)]; }
};

/// Large-scale gains (with shadowing) and correlations for one geometry.
/// Gains are divided by noise_scale (1 for physical units).
CorrelationSet build_correlations(const GeometryRealization& geo, const NetworkConfig& cfg,
                                  RandomStream& rng, double noise_scale);

/// Hermitian PSD square root via eigendecomposition; negative eigenvalues clipped to 0.
ComplexMatrix psd_sqrt(const ComplexMatrix& r);

ChannelMatrix draw_channel(const CorrelationSet& corr, double sigma2, RandomStream& rng);

/// Thermal noise power in watts: -174 dBm/Hz + 10 log10(B) + NF.
double noise_variance(const NetworkConfig& cfg);

/// Geometry, correlations and one small-scale draw for a network config.
struct ChannelRealization {
    GeometryRealization geometry;
    CorrelationSet correlations;
    ChannelMatrix channel;
};

ChannelRealization generate_channel(const NetworkConfig& cfg, RandomStream& geometry_rng,
                                    RandomStream& channel_rng);

/// Text dump: header "K M sigma2", then K rows of M "re im" pairs, row-major.
void write_channel_text(std::ostream& os, const ChannelMatrix& ch);
ChannelMatrix read_channel_text(std::istream& is);

}  // namespace greenprec
