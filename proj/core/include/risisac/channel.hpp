#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "risisac/scenario.hpp"
#include "risisac/types.hpp"

namespace risisac {

/// Uniform planar array lying in the horizontal plane. Element (ix, iy) sits
/// at (ix * dx, iy * dy); the index runs iy fastest (Kronecker order x (x) y).
struct ArrayGeometry {
  int nx = 1;
  int ny = 1;
  double dx = 0.0;
  double dy = 0.0;
  double wavelength = 1.0;

  int size() const { return nx * ny; }
};

ArrayGeometry bs_geometry(const ScenarioConfig& cfg);
ArrayGeometry ris_geometry(const ScenarioConfig& cfg);

/// Direction from `from` to `to`: azimuth in the x-y plane and elevation
/// measured from the array normal (z axis), so elevation 0 is boresight.
struct Direction {
  double azimuth = 0.0;
  double elevation = 0.0;
};

Direction direction(const Vec3& from, const Vec3& to);

/// UPA response alpha_x (x) alpha_y with per-axis phase increments
/// (2 pi d / lambda) cos(az) sin(el) and (2 pi d / lambda) sin(az) sin(el).
CVec steering_vector(const ArrayGeometry& geom, double azimuth, double elevation);

/// Power gain ref_gain / d^exponent. Throws std::invalid_argument for d <= 0.
double path_gain(double distance, double exponent, double ref_gain_linear);

/// amplitude * (sqrt(1/(b+1)) h_nlos + sqrt(b/(b+1)) los e^{-j delay_phase}),
/// b = 10^(beta_db/10); beta_db = +inf yields the deterministic LOS term and
/// consumes no randomness.
CVec draw_rician(const CVec& los, double beta_db, double amplitude, double delay_phase,
                 Rng& rng);

/// Unit-modulus RIS reflection coefficients, Phi = diag(v).
struct PhaseShifts {
  CVec v;

  static PhaseShifts zero_phase(int m);
  static PhaseShifts from_angles(const RVec& phi);
  static PhaseShifts random(int m, Rng& rng);

  int size() const { return static_cast<int>(v.size()); }
  /// max_m ||v_m| - 1|
  double modulus_error() const;
};

/// One realization of every link in the network.
struct ChannelSet {
  int num_bs = 0;
  int num_users = 0;
  int num_points = 0;
  int n_antennas = 0;
  int m_elements = 0;

  std::vector<std::vector<CVec>> h_bs_user;    ///< [j][k], C^N
  std::vector<CMat> g_bs_ris;                  ///< [j], C^{M x N}
  std::vector<CVec> h_ris_user;                ///< [k], C^M
  std::vector<std::vector<CVec>> h_bs_target;  ///< [j][l], C^N, carries sqrt(rcs)
  std::vector<CVec> h_ris_target;              ///< [l], C^M, carries sqrt(rcs)
  std::vector<CVec> h_target_rx;               ///< [l], C^N
  std::vector<Vec3> points;                    ///< grid point for each l

  int stacked_dim() const { return n_antennas * num_bs; }
  bool all_finite() const;
};

/// Builds every link from path gain, steering vectors and Rician draws.
/// Draw order is fixed (users, RIS-users, then targets) so a given rng state
/// reproduces the set bit for bit.
ChannelSet realize_channels(const ScenarioConfig& cfg, const std::vector<Vec3>& grid, Rng& rng);

/// Target-side channels for one evaluation point, pure LOS (deterministic).
struct TargetChannels {
  std::vector<CVec> h_bs_target;  ///< [j]
  CVec h_ris_target;
  CVec h_target_rx;
};

TargetChannels los_target_channels(const ScenarioConfig& cfg, const Vec3& point);

/// Copy with every RIS-cascaded path removed.
ChannelSet without_ris(const ChannelSet& set);

/// g_{j,k} = h_{j,k} + G_j^H Phi^H h_{R,k}.
CVec effective_user_channel(const ChannelSet& set, const PhaseShifts& v, int j, int k);

/// g_k stacked over BSs, C^{NJ}.
CVec effective_user_channel(const ChannelSet& set, const PhaseShifts& v, int k);

/// Echo transmit-side vector a with H_0 = h_{0,o} a^H:
/// a = [h_{j,o} + G_j^H Phi^H h_{R,o}]_j.
CVec echo_transmit_vector(const std::vector<CVec>& h_bs_target, const CVec& h_ris_target,
                          const std::vector<CMat>& g_bs_ris, const PhaseShifts& v);

/// H_0(o_l) = [H_{0,1}, ..., H_{0,J}], H_{0,j} = h_{0,o}(h_{j,o}^H + h_{R,o}^H Phi G_j).
CMat echo_matrix(const ChannelSet& set, const PhaseShifts& v, int l);

/// Structured-text (JSON) dump of a ChannelSet for regression fixtures.
void write_channel_dump(const ChannelSet& set, const std::filesystem::path& path);
ChannelSet read_channel_dump(const std::filesystem::path& path);

}  // namespace risisac
