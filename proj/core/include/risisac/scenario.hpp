#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "risisac/types.hpp"

namespace risisac {

/// Propagation link classes. Each carries its own path-loss exponent and
/// Rician factor.
enum class LinkClass { BsUser, BsTarget, BsRis, RisUser, RisTarget, TargetRx };

std::string_view to_string(LinkClass c);
LinkClass link_class_from_string(std::string_view name);

struct LinkParams {
  double pathloss_exponent = 2.0;
  double rician_factor_db = 3.0;  ///< +inf means pure LOS.
};

/// Rectangular sensing region at a fixed altitude, sampled on a lattice.
struct RegionSpec {
  Vec2 center_xy{60.0, 100.0};
  double width_x = 30.0;
  double width_y = 30.0;
  double altitude = 60.0;
  int grid_x = 4;
  int grid_y = 4;

  int num_points() const { return grid_x * grid_y; }
  bool operator==(const RegionSpec&) const = default;
};

/// Area in which users are dropped when positions are not given explicitly.
struct UserArea {
  double x_min = 0.0;
  double x_max = 173.0;
  double y_min = 0.0;
  double y_max = 200.0;
  double exclusion_radius = 50.0;  ///< keep-out disk around every TX BS

  bool operator==(const UserArea&) const = default;
};

struct ScenarioConfig {
  std::vector<Vec3> tx_bs_positions;
  Vec3 rx_bs_position = Vec3::Zero();
  Vec3 ris_position = Vec3::Zero();
  std::vector<Vec3> user_positions;

  std::array<int, 2> bs_array{8, 4};
  std::array<int, 2> ris_array{8, 8};
  double element_spacing_m = 0.0;  ///< 0 on input means half wavelength

  double carrier_frequency_hz = 3.5e9;
  double bandwidth_hz = 100e6;
  double noise_density_dbm_per_hz = -174.0;
  double ref_path_gain_db = -43.0;      ///< zeta, gain at 1 m
  double ris_ref_path_gain_db = -43.0;  ///< kappa, RIS-side links
  std::map<LinkClass, LinkParams> links;
  double rcs_m2 = 2.0;

  RegionSpec region;
  UserArea user_area;

  double r_req_bps_hz = 10.0;
  double gamma_req_db = 10.0;
  std::uint64_t rng_seed = 0;

  /// Counts the dedicated sensing beam as interference at the users.
  bool sensing_interference_at_users = false;

  int num_tx_bs() const { return static_cast<int>(tx_bs_positions.size()); }
  int num_users() const { return static_cast<int>(user_positions.size()); }
  int num_bs_antennas() const { return bs_array[0] * bs_array[1]; }
  int num_ris_elements() const { return ris_array[0] * ris_array[1]; }
  double wavelength() const { return kSpeedOfLight / carrier_frequency_hz; }
  double spe_target() const;       ///< S = 2^R_req - 1
  double gamma_req_linear() const;
  const LinkParams& link(LinkClass c) const { return links.at(c); }

  bool operator==(const ScenarioConfig& other) const;
};

/// Failure while loading or validating a scenario. `field` names the
/// offending key using dotted paths, e.g. "region.grid".
class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { MissingKey, UnknownKey, TypeMismatch, InvariantViolation, Parse };

  ScenarioError(Kind kind, std::string field, const std::string& what);

  Kind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  Kind kind_;
  std::string field_;
};

/// Default link table: bs-user 3.7, bs-target 2.8, everything else 2.0;
/// BS-RIS and RIS-target pure LOS, 3 dB elsewhere.
std::map<LinkClass, LinkParams> default_links();

ScenarioConfig load_scenario(std::string_view document);
ScenarioConfig load_scenario_file(const std::filesystem::path& path);
std::string serialize_scenario(const ScenarioConfig& cfg);

/// Throws ScenarioError(InvariantViolation) on the first broken invariant.
void validate(const ScenarioConfig& cfg);

/// Uniform drop over `area` excluding disks around each TX BS.
std::vector<Vec3> place_users(const UserArea& area, const std::vector<Vec3>& tx_bs,
                              int count, Rng& rng);

ScenarioConfig table1_preset();
ScenarioConfig desk_preset();
ScenarioConfig preset(std::string_view name);

/// Endpoint-inclusive lattice over the region, row-major (x fastest within a
/// row of constant y).
std::vector<Vec3> discretize_region(const RegionSpec& region);

struct NoisePowers {
  double sensing_w = 0.0;
  std::vector<double> user_w;
};

NoisePowers noise_power_watts(const ScenarioConfig& cfg);

/// Hex FNV-1a digest of the canonical serialization.
std::string config_digest(const ScenarioConfig& cfg);

}  // namespace risisac
