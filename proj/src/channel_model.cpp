#include "greenprec/channel_model.hpp"

#include "greenprec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace greenprec {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be strictly positive");
}

double deg2rad(double deg) { return deg * kPi / 180.0; }

}  // namespace

void NetworkConfig::validate() const {
    if (num_aps < 1) throw ConfigError("num_aps", "must be >= 1");
    if (antennas_per_ap < 1) throw ConfigError("antennas_per_ap", "must be >= 1");
    if (num_ues < 1) throw ConfigError("num_ues", "must be >= 1");
    require_positive(area_side_m, "area_side_m");
    require_positive(bandwidth_hz, "bandwidth_hz");
    require_positive(height_diff_m, "height_diff_m");
    require_positive(pathloss_exponent, "pathloss_exponent");
    require_positive(downlink_power_w, "downlink_power_w");
    if (!std::isfinite(gain_at_1km_db)) throw ConfigError("gain_at_1km_db", "must be finite");
    if (!(shadow_std_db >= 0.0) || !std::isfinite(shadow_std_db))
        throw ConfigError("shadow_std_db", "must be >= 0");
    if (!(angular_std_deg >= 0.0) || !std::isfinite(angular_std_deg))
        throw ConfigError("angular_std_deg", "must be >= 0");
    if (!std::isfinite(noise_figure_db)) throw ConfigError("noise_figure_db", "must be finite");
}

ChannelMatrix make_channel(ComplexMatrix h, double sigma2) {
    ChannelMatrix ch;
    ch.h_r = lift(h);
    // Singular values of h_r are those of h, each with multiplicity two.
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(h * h.adjoint(), Eigen::EigenvaluesOnly);
    ch.largest_singular_value_sq = std::max(0.0, eig.eigenvalues().maxCoeff());
    ch.h = std::move(h);
    ch.sigma2 = sigma2;
    return ch;
}

Eigen::Vector2d wrapped_offset(const Eigen::Vector2d& ue, const Eigen::Vector2d& ap, double side) {
    Eigen::Vector2d best = ue - ap;
    double best_sq = best.squaredNorm();
    for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
            const Eigen::Vector2d off = ue - (ap + Eigen::Vector2d(dx * side, dy * side));
            const double sq = off.squaredNorm();
            if (sq < best_sq) {
                best_sq = sq;
                best = off;
            }
        }
    }
    return best;
}

double wrapped_distance(const Eigen::Vector2d& ue, const Eigen::Vector2d& ap, double side,
                        double height_diff) {
    return std::sqrt(wrapped_offset(ue, ap, side).squaredNorm() + height_diff * height_diff);
}

GeometryRealization generate_geometry(const NetworkConfig& cfg, RandomStream& rng) {
    cfg.validate();
    const int L = cfg.num_aps, K = cfg.num_ues;
    std::uniform_real_distribution<double> pos(0.0, cfg.area_side_m);

    GeometryRealization geo;
    geo.ap_positions.resize(L, 2);
    geo.ue_positions.resize(K, 2);
    for (int l = 0; l < L; ++l) {
        geo.ap_positions(l, 0) = pos(rng);
        geo.ap_positions(l, 1) = pos(rng);
    }
    for (int k = 0; k < K; ++k) {
        geo.ue_positions(k, 0) = pos(rng);
        geo.ue_positions(k, 1) = pos(rng);
    }

    geo.distance_m.resize(K, L);
    geo.azimuth_rad.resize(K, L);
    geo.elevation_rad.resize(K, L);
    for (int k = 0; k < K; ++k) {
        const Eigen::Vector2d ue = geo.ue_positions.row(k).transpose();
        for (int l = 0; l < L; ++l) {
            const Eigen::Vector2d ap = geo.ap_positions.row(l).transpose();
            const Eigen::Vector2d off = wrapped_offset(ue, ap, cfg.area_side_m);
            const double planar = off.norm();
            geo.distance_m(k, l) = std::sqrt(planar * planar + cfg.height_diff_m * cfg.height_diff_m);
            geo.azimuth_rad(k, l) = std::atan2(off.y(), off.x());
            geo.elevation_rad(k, l) = -std::atan2(cfg.height_diff_m, planar);
        }
    }
    return geo;
}

double large_scale_gain_db(double distance_m, const NetworkConfig& cfg, double shadow_db) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("large_scale_gain_db: degenerate geometry, distance must be > 0");
    return cfg.gain_at_1km_db - 10.0 * cfg.pathloss_exponent * std::log10(distance_m / 1000.0) + shadow_db;
}

double large_scale_fading(double distance_m, const NetworkConfig& cfg, RandomStream& rng) {
    std::normal_distribution<double> shadow(0.0, 1.0);
    const double gain_db = large_scale_gain_db(distance_m, cfg, cfg.shadow_std_db * shadow(rng));
    return std::pow(10.0, gain_db / 10.0);
}

ComplexMatrix local_scattering_correlation(int n, double azimuth_rad, double elevation_rad,
                                           double azimuth_std_rad, double elevation_std_rad) {
    if (n < 1) throw std::invalid_argument("local_scattering_correlation: n must be >= 1");
    constexpr double kSpacing = 0.5;  // antenna spacing in wavelengths

    // Gaussian weights on a truncated uniform grid; a zero spread collapses to one node.
    auto nodes = [](double std_dev) {
        std::vector<std::pair<double, double>> out;
        if (std_dev <= 0.0) {
            out.emplace_back(0.0, 1.0);
            return out;
        }
        constexpr int kHalf = 40;
        constexpr double kWidth = 6.0;
        double total = 0.0;
        for (int i = -kHalf; i <= kHalf; ++i) {
            const double z = kWidth * i / kHalf;
            const double w = std::exp(-0.5 * z * z);
            out.emplace_back(z * std_dev, w);
            total += w;
        }
        for (auto& p : out) p.second /= total;
        return out;
    };
    const auto az_nodes = nodes(azimuth_std_rad);
    const auto el_nodes = nodes(elevation_std_rad);

    // Toeplitz: entry (i, j) depends on i - j only.
    ComplexVector first_col(n);
    first_col[0] = 1.0;
    for (int d = 1; d < n; ++d) {
        Complex acc = 0.0;
        for (const auto& [da, wa] : az_nodes) {
            for (const auto& [de, we] : el_nodes) {
                const double phase = 2.0 * kPi * kSpacing * d * std::sin(azimuth_rad + da) *
                                     std::cos(elevation_rad + de);
                acc += wa * we * std::polar(1.0, phase);
            }
        }
        first_col[d] = acc;
    }
    ComplexMatrix r(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            r(i, j) = i >= j ? first_col[i - j] : std::conj(first_col[j - i]);
        }
    }
    return r;
}

ComplexMatrix spatial_correlation(double gain, double azimuth_rad, double elevation_rad,
                                  const NetworkConfig& cfg) {
    const int n = cfg.antennas_per_ap;
    if (n == 1) return ComplexMatrix::Constant(1, 1, gain);

    const double spread = deg2rad(cfg.angular_std_deg);
    ComplexMatrix r = gain * local_scattering_correlation(n, azimuth_rad, elevation_rad, spread, spread);
    r = 0.5 * (r + r.adjoint()).eval();

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(r);
    const RealVector& ev = eig.eigenvalues();
    if (ev.minCoeff() < 0.0) {
        if (ev.minCoeff() < -1e-12 * std::abs(ev.maxCoeff())) {
            std::clog << "warning: spatial correlation not PSD (min eigenvalue " << ev.minCoeff()
                      << "), clipping\n";
        }
        const RealVector clipped = ev.cwiseMax(0.0);
        r = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().adjoint();
    }
    return r;
}

CorrelationSet build_correlations(const GeometryRealization& geo, const NetworkConfig& cfg,
                                  RandomStream& rng, double noise_scale) {
    const int K = static_cast<int>(geo.distance_m.rows());
    const int L = static_cast<int>(geo.distance_m.cols());
    CorrelationSet set;
    set.num_ues = K;
    set.num_aps = L;
    set.antennas_per_ap = cfg.antennas_per_ap;
    set.r.reserve(static_cast<std::size_t>(K) * L);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            const double gain = large_scale_fading(geo.distance_m(k, l), cfg, rng) / noise_scale;
            set.r.push_back(spatial_correlation(gain, geo.azimuth_rad(k, l), geo.elevation_rad(k, l), cfg));
        }
    }
    return set;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& r) {
    if (r.rows() == 1) return ComplexMatrix::Constant(1, 1, std::sqrt(std::max(0.0, r(0, 0).real())));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (r + r.adjoint()));
    const RealVector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();
}

ChannelMatrix draw_channel(const CorrelationSet& corr, double sigma2, RandomStream& rng) {
    const int K = corr.num_ues, L = corr.num_aps, N = corr.antennas_per_ap;
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    ComplexMatrix h(K, L * N);
    ComplexVector w(N);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            for (int n = 0; n < N; ++n) {
                const double re = normal(rng);
                const double im = normal(rng);
                w[n] = Complex(re, im);
            }
            h.row(k).segment(l * N, N) = (psd_sqrt(corr.at(k, l)) * w).transpose();
        }
    }
    return make_channel(std::move(h), sigma2);
}

double noise_variance(const NetworkConfig& cfg) {
    if (!(cfg.bandwidth_hz > 0.0)) throw ConfigError("bandwidth_hz", "must be strictly positive");
    const double dbm = -174.0 + 10.0 * std::log10(cfg.bandwidth_hz) + cfg.noise_figure_db;
    return std::pow(10.0, dbm / 10.0) / 1000.0;
}

ChannelRealization generate_channel(const NetworkConfig& cfg, RandomStream& geometry_rng,
                                    RandomStream& channel_rng) {
    ChannelRealization out;
    out.geometry = generate_geometry(cfg, geometry_rng);
    const double sigma2_w = noise_variance(cfg);
    const double scale = cfg.normalize_to_noise ? sigma2_w : 1.0;
    out.correlations = build_correlations(out.geometry, cfg, geometry_rng, scale);
    out.channel = draw_channel(out.correlations, sigma2_w / scale, channel_rng);
    return out;
}

void write_channel_text(std::ostream& os, const ChannelMatrix& ch) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << ch.h.rows() << ' ' << ch.h.cols() << ' ' << std::setprecision(17) << ch.sigma2 << '\n';
    for (Eigen::Index k = 0; k < ch.h.rows(); ++k) {
        for (Eigen::Index m = 0; m < ch.h.cols(); ++m) {
            if (m > 0) os << ' ';
            os << ch.h(k, m).real() << ' ' << ch.h(k, m).imag();
        }
        os << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

ChannelMatrix read_channel_text(std::istream& is) {
    Eigen::Index k = 0, m = 0;
    double sigma2 = 0.0;
    if (!(is >> k >> m >> sigma2) || k < 1 || m < 1) throw std::runtime_error("channel dump: bad header");
    ComplexMatrix h(k, m);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            double re = 0.0, im = 0.0;
            if (!(is >> re >> im)) throw std::runtime_error("channel dump: truncated body");
            h(i, j) = Complex(re, im);
        }
    }
    return make_channel(std::move(h), sigma2);
}

}  // namespace greenprec
