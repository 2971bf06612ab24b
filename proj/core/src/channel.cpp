#include "risisac/channel.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace risisac {

using json = nlohmann::json;

ArrayGeometry bs_geometry(const ScenarioConfig& cfg) {
  return {cfg.bs_array[0], cfg.bs_array[1], cfg.element_spacing_m, cfg.element_spacing_m,
          cfg.wavelength()};
}

ArrayGeometry ris_geometry(const ScenarioConfig& cfg) {
  return {cfg.ris_array[0], cfg.ris_array[1], cfg.element_spacing_m, cfg.element_spacing_m,
          cfg.wavelength()};
}

Direction direction(const Vec3& from, const Vec3& to) {
  const Vec3 d = to - from;
  const double dist = d.norm();
  if (dist <= 0.0) throw std::invalid_argument("direction: coincident points");
  Direction out;
  out.azimuth = std::atan2(d.y(), d.x());
  out.elevation = std::acos(std::clamp(d.z() / dist, -1.0, 1.0));
  return out;
}

CVec steering_vector(const ArrayGeometry& geom, double azimuth, double elevation) {
  const double k = 2.0 * kPi / geom.wavelength;
  const double step_x = k * geom.dx * std::cos(azimuth) * std::sin(elevation);
  const double step_y = k * geom.dy * std::sin(azimuth) * std::sin(elevation);
  CVec out(geom.size());
  for (int ix = 0; ix < geom.nx; ++ix) {
    for (int iy = 0; iy < geom.ny; ++iy) {
      out(ix * geom.ny + iy) = std::polar(1.0, -(step_x * ix + step_y * iy));
    }
  }
  return out;
}

double path_gain(double distance, double exponent, double ref_gain_linear) {
  if (!(distance > 0.0)) throw std::invalid_argument("path_gain: distance must be positive");
  return ref_gain_linear / std::pow(distance, exponent);
}

CVec draw_rician(const CVec& los, double beta_db, double amplitude, double delay_phase, Rng& rng) {
  const cd delay = std::polar(1.0, -delay_phase);
  if (std::isinf(beta_db) && beta_db > 0) return amplitude * delay * los;
  const double beta = db_to_linear(beta_db);  // -inf dB -> 0
  const double w_nlos = std::sqrt(1.0 / (beta + 1.0));
  const double w_los = std::sqrt(beta / (beta + 1.0));
  const CVec nlos = complex_normal_vector(los.size(), rng);
  return amplitude * (w_nlos * nlos + (w_los * delay) * los);
}

PhaseShifts PhaseShifts::zero_phase(int m) { return {CVec::Ones(m)}; }

PhaseShifts PhaseShifts::from_angles(const RVec& phi) {
  PhaseShifts p{CVec(phi.size())};
  for (Eigen::Index i = 0; i < phi.size(); ++i) p.v(i) = std::polar(1.0, phi(i));
  return p;
}

PhaseShifts PhaseShifts::random(int m, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  RVec phi(m);
  for (int i = 0; i < m; ++i) phi(i) = u(rng);
  return from_angles(phi);
}

double PhaseShifts::modulus_error() const {
  double err = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) err = std::max(err, std::abs(std::abs(v(i)) - 1.0));
  return err;
}

bool ChannelSet::all_finite() const {
  for (const auto& row : h_bs_user)
    for (const auto& h : row)
      if (!h.allFinite()) return false;
  for (const auto& g : g_bs_ris)
    if (!g.allFinite()) return false;
  for (const auto& h : h_ris_user)
    if (!h.allFinite()) return false;
  for (const auto& row : h_bs_target)
    for (const auto& h : row)
      if (!h.allFinite()) return false;
  for (const auto& h : h_ris_target)
    if (!h.allFinite()) return false;
  for (const auto& h : h_target_rx)
    if (!h.allFinite()) return false;
  return true;
}

namespace {

struct LinkBuilder {
  const ScenarioConfig& cfg;
  double zeta;
  double kappa;

  CVec build(const ArrayGeometry& geom, const Vec3& array_pos, const Vec3& other, LinkClass cls,
             double ref_gain, double extra_gain, Rng& rng, bool force_los = false) const {
    const double dist = (other - array_pos).norm();
    if (!(dist > 0.0))
      throw std::invalid_argument("realize_channels: coincident endpoints on link " +
                                  std::string(to_string(cls)));
    const auto& lp = cfg.link(cls);
    const double amp = std::sqrt(path_gain(dist, lp.pathloss_exponent, ref_gain) * extra_gain);
    const Direction dir = direction(array_pos, other);
    const CVec los = steering_vector(geom, dir.azimuth, dir.elevation);
    const double phase = 2.0 * kPi * cfg.carrier_frequency_hz * dist / kSpeedOfLight;
    const double beta = force_los ? std::numeric_limits<double>::infinity() : lp.rician_factor_db;
    return draw_rician(los, beta, amp, phase, rng);
  }
};

CMat bs_ris_channel(const ScenarioConfig& cfg, const Vec3& bs, double kappa) {
  const ArrayGeometry bs_geom = bs_geometry(cfg);
  const ArrayGeometry ris_geom = ris_geometry(cfg);
  const double dist = (cfg.ris_position - bs).norm();
  if (!(dist > 0.0)) throw std::invalid_argument("realize_channels: BS coincides with the RIS");
  const double amp =
      std::sqrt(path_gain(dist, cfg.link(LinkClass::BsRis).pathloss_exponent, kappa));
  const Direction at_ris = direction(cfg.ris_position, bs);
  const Direction at_bs = direction(bs, cfg.ris_position);
  const CVec a_r = steering_vector(ris_geom, at_ris.azimuth, at_ris.elevation);
  const CVec a_b = steering_vector(bs_geom, at_bs.azimuth, at_bs.elevation);
  const cd delay = std::polar(1.0, -2.0 * kPi * cfg.carrier_frequency_hz * dist / kSpeedOfLight);
  return (amp * delay) * a_r * a_b.adjoint();
}

}  // namespace

ChannelSet realize_channels(const ScenarioConfig& cfg, const std::vector<Vec3>& grid, Rng& rng) {
  const double zeta = db_to_linear(cfg.ref_path_gain_db);
  const double kappa = db_to_linear(cfg.ris_ref_path_gain_db);
  const LinkBuilder lb{cfg, zeta, kappa};
  const ArrayGeometry bs_geom = bs_geometry(cfg);
  const ArrayGeometry ris_geom = ris_geometry(cfg);

  ChannelSet set;
  set.num_bs = cfg.num_tx_bs();
  set.num_users = cfg.num_users();
  set.num_points = static_cast<int>(grid.size());
  set.n_antennas = cfg.num_bs_antennas();
  set.m_elements = cfg.num_ris_elements();
  set.points = grid;

  set.h_bs_user.resize(set.num_bs);
  for (int j = 0; j < set.num_bs; ++j)
    for (int k = 0; k < set.num_users; ++k)
      set.h_bs_user[j].push_back(lb.build(bs_geom, cfg.tx_bs_positions[j], cfg.user_positions[k],
                                          LinkClass::BsUser, zeta, 1.0, rng));

  for (int j = 0; j < set.num_bs; ++j)
    set.g_bs_ris.push_back(bs_ris_channel(cfg, cfg.tx_bs_positions[j], kappa));

  for (int k = 0; k < set.num_users; ++k)
    set.h_ris_user.push_back(lb.build(ris_geom, cfg.ris_position, cfg.user_positions[k],
                                      LinkClass::RisUser, kappa, 1.0, rng));

  set.h_bs_target.resize(set.num_bs);
  for (int l = 0; l < set.num_points; ++l) {
    for (int j = 0; j < set.num_bs; ++j)
      set.h_bs_target[j].push_back(lb.build(bs_geom, cfg.tx_bs_positions[j], grid[l],
                                            LinkClass::BsTarget, zeta, cfg.rcs_m2, rng));
    set.h_ris_target.push_back(
        lb.build(ris_geom, cfg.ris_position, grid[l], LinkClass::RisTarget, kappa, cfg.rcs_m2, rng));
    set.h_target_rx.push_back(
        lb.build(bs_geom, cfg.rx_bs_position, grid[l], LinkClass::TargetRx, zeta, 1.0, rng));
  }
  return set;
}

TargetChannels los_target_channels(const ScenarioConfig& cfg, const Vec3& point) {
  const double zeta = db_to_linear(cfg.ref_path_gain_db);
  const double kappa = db_to_linear(cfg.ris_ref_path_gain_db);
  const LinkBuilder lb{cfg, zeta, kappa};
  const ArrayGeometry bs_geom = bs_geometry(cfg);
  const ArrayGeometry ris_geom = ris_geometry(cfg);
  Rng unused(0);
  TargetChannels out;
  for (const auto& bs : cfg.tx_bs_positions)
    out.h_bs_target.push_back(
        lb.build(bs_geom, bs, point, LinkClass::BsTarget, zeta, cfg.rcs_m2, unused, true));
  out.h_ris_target =
      lb.build(ris_geom, cfg.ris_position, point, LinkClass::RisTarget, kappa, cfg.rcs_m2, unused, true);
  out.h_target_rx =
      lb.build(bs_geom, cfg.rx_bs_position, point, LinkClass::TargetRx, zeta, 1.0, unused, true);
  return out;
}

ChannelSet without_ris(const ChannelSet& set) {
  ChannelSet out = set;
  for (auto& g : out.g_bs_ris) g.setZero();
  for (auto& h : out.h_ris_user) h.setZero();
  for (auto& h : out.h_ris_target) h.setZero();
  return out;
}

CVec effective_user_channel(const ChannelSet& set, const PhaseShifts& v, int j, int k) {
  // G^H Phi^H h_R = G^H (conj(v) .* h_R)
  const CVec reflected = v.v.conjugate().cwiseProduct(set.h_ris_user[k]);
  return set.h_bs_user[j][k] + set.g_bs_ris[j].adjoint() * reflected;
}

CVec effective_user_channel(const ChannelSet& set, const PhaseShifts& v, int k) {
  const int n = set.n_antennas;
  CVec g(set.stacked_dim());
  for (int j = 0; j < set.num_bs; ++j) g.segment(j * n, n) = effective_user_channel(set, v, j, k);
  return g;
}

CVec echo_transmit_vector(const std::vector<CVec>& h_bs_target, const CVec& h_ris_target,
                          const std::vector<CMat>& g_bs_ris, const PhaseShifts& v) {
  const int num_bs = static_cast<int>(h_bs_target.size());
  const int n = num_bs > 0 ? static_cast<int>(h_bs_target[0].size()) : 0;
  // (h_R^H Phi G)^H = G^H Phi^H h_R
  const CVec reflected = v.v.conjugate().cwiseProduct(h_ris_target);
  CVec a(n * num_bs);
  for (int j = 0; j < num_bs; ++j)
    a.segment(j * n, n) = h_bs_target[j] + g_bs_ris[j].adjoint() * reflected;
  return a;
}

CMat echo_matrix(const ChannelSet& set, const PhaseShifts& v, int l) {
  std::vector<CVec> h_bs(set.num_bs);
  for (int j = 0; j < set.num_bs; ++j) h_bs[j] = set.h_bs_target[j][l];
  const CVec a = echo_transmit_vector(h_bs, set.h_ris_target[l], set.g_bs_ris, v);
  return set.h_target_rx[l] * a.adjoint();
}

namespace {

json put_vec(const CVec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
  return arr;
}

json put_mat(const CMat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(put_vec(m.row(r).transpose()));
  return rows;
}

CVec get_vec(const json& arr) {
  CVec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(i) = {arr[i][0].get<double>(), arr[i][1].get<double>()};
  return v;
}

CMat get_mat(const json& rows) {
  if (rows.empty()) return CMat();
  CMat m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) m.row(r) = get_vec(rows[r]).transpose();
  return m;
}

}  // namespace

void write_channel_dump(const ChannelSet& set, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "risisac-channels/1";
  doc["num_bs"] = set.num_bs;
  doc["num_users"] = set.num_users;
  doc["num_points"] = set.num_points;
  doc["n_antennas"] = set.n_antennas;
  doc["m_elements"] = set.m_elements;
  auto nested = [](const std::vector<std::vector<CVec>>& v) {
    json out = json::array();
    for (const auto& row : v) {
      json r = json::array();
      for (const auto& h : row) r.push_back(put_vec(h));
      out.push_back(r);
    }
    return out;
  };
  auto flat = [](const std::vector<CVec>& v) {
    json out = json::array();
    for (const auto& h : v) out.push_back(put_vec(h));
    return out;
  };
  doc["h_bs_user"] = nested(set.h_bs_user);
  doc["g_bs_ris"] = json::array();
  for (const auto& g : set.g_bs_ris) doc["g_bs_ris"].push_back(put_mat(g));
  doc["h_ris_user"] = flat(set.h_ris_user);
  doc["h_bs_target"] = nested(set.h_bs_target);
  doc["h_ris_target"] = flat(set.h_ris_target);
  doc["h_target_rx"] = flat(set.h_target_rx);
  doc["points"] = json::array();
  for (const auto& p : set.points) doc["points"].push_back({p.x(), p.y(), p.z()});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump() << '\n';
}

ChannelSet read_channel_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const json doc = json::parse(in);
  if (doc.value("format", "") != "risisac-channels/1")
    throw std::runtime_error(path.string() + ": not a channel dump");
  ChannelSet set;
  set.num_bs = doc["num_bs"];
  set.num_users = doc["num_users"];
  set.num_points = doc["num_points"];
  set.n_antennas = doc["n_antennas"];
  set.m_elements = doc["m_elements"];
  for (const auto& row : doc["h_bs_user"]) {
    set.h_bs_user.emplace_back();
    for (const auto& h : row) set.h_bs_user.back().push_back(get_vec(h));
  }
  for (const auto& g : doc["g_bs_ris"]) set.g_bs_ris.push_back(get_mat(g));
  for (const auto& h : doc["h_ris_user"]) set.h_ris_user.push_back(get_vec(h));
  for (const auto& row : doc["h_bs_target"]) {
    set.h_bs_target.emplace_back();
    for (const auto& h : row) set.h_bs_target.back().push_back(get_vec(h));
  }
  for (const auto& h : doc["h_ris_target"]) set.h_ris_target.push_back(get_vec(h));
  for (const auto& h : doc["h_target_rx"]) set.h_target_rx.push_back(get_vec(h));
  for (const auto& p : doc["points"]) set.points.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  return set;
}

}  // namespace risisac
