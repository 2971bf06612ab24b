#include "risisac/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace risisac {

using json = nlohmann::json;

namespace {

constexpr std::array<std::pair<LinkClass, std::string_view>, 6> kLinkNames{{
    {LinkClass::BsUser, "bs_user"},
    {LinkClass::BsTarget, "bs_target"},
    {LinkClass::BsRis, "bs_ris"},
    {LinkClass::RisUser, "ris_user"},
    {LinkClass::RisTarget, "ris_target"},
    {LinkClass::TargetRx, "target_rx"},
}};

[[noreturn]] void fail(ScenarioError::Kind kind, const std::string& field, const std::string& msg) {
  throw ScenarioError(kind, field, field + ": " + msg);
}

void invariant(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) fail(ScenarioError::Kind::InvariantViolation, field, msg);
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(ScenarioError::Kind::TypeMismatch, field, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(ScenarioError::Kind::TypeMismatch, field, "expected an integer");
  return j.get<int>();
}

// JSON has no infinity literal: +inf is "inf" (or null), -inf is "-inf".
double get_extended(const json& j, const std::string& field) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
    fail(ScenarioError::Kind::TypeMismatch, field, "expected a number, \"inf\" or \"-inf\"");
  }
  return get_number(j, field);
}

json put_extended(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

template <int Dim>
Eigen::Matrix<double, Dim, 1> get_point(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != Dim)
    fail(ScenarioError::Kind::TypeMismatch, field,
         "expected an array of " + std::to_string(Dim) + " numbers");
  Eigen::Matrix<double, Dim, 1> p;
  for (int i = 0; i < Dim; ++i) p(i) = get_number(j[i], field + "[" + std::to_string(i) + "]");
  return p;
}

std::vector<Vec3> get_points(const json& j, const std::string& field) {
  if (!j.is_array()) fail(ScenarioError::Kind::TypeMismatch, field, "expected an array of points");
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_point<3>(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

std::array<int, 2> get_pair(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2)
    fail(ScenarioError::Kind::TypeMismatch, field, "expected [count_x, count_y]");
  return {get_int(j[0], field + "[0]"), get_int(j[1], field + "[1]")};
}

json put_point(const Vec3& p) { return json::array({p.x(), p.y(), p.z()}); }

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key))
      fail(ScenarioError::Kind::UnknownKey, prefix + key, "unknown key");
  }
}

const json& require(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ScenarioError::Kind::MissingKey, key, "required key is missing");
  return *it;
}

}  // namespace

std::string_view to_string(LinkClass c) {
  for (const auto& [cls, name] : kLinkNames)
    if (cls == c) return name;
  return "unknown";
}

LinkClass link_class_from_string(std::string_view name) {
  for (const auto& [cls, n] : kLinkNames)
    if (n == name) return cls;
  fail(ScenarioError::Kind::UnknownKey, "links." + std::string(name), "unknown link class");
}

ScenarioError::ScenarioError(Kind kind, std::string field, const std::string& what)
    : std::runtime_error(what), kind_(kind), field_(std::move(field)) {}

double ScenarioConfig::spe_target() const { return std::pow(2.0, r_req_bps_hz) - 1.0; }

double ScenarioConfig::gamma_req_linear() const { return db_to_linear(gamma_req_db); }

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  auto links_equal = [&] {
    if (links.size() != o.links.size()) return false;
    for (const auto& [cls, p] : links) {
      auto it = o.links.find(cls);
      if (it == o.links.end()) return false;
      if (p.pathloss_exponent != it->second.pathloss_exponent ||
          p.rician_factor_db != it->second.rician_factor_db)
        return false;
    }
    return true;
  };
  return tx_bs_positions == o.tx_bs_positions && rx_bs_position == o.rx_bs_position &&
         ris_position == o.ris_position && user_positions == o.user_positions &&
         bs_array == o.bs_array && ris_array == o.ris_array &&
         element_spacing_m == o.element_spacing_m &&
         carrier_frequency_hz == o.carrier_frequency_hz && bandwidth_hz == o.bandwidth_hz &&
         noise_density_dbm_per_hz == o.noise_density_dbm_per_hz &&
         ref_path_gain_db == o.ref_path_gain_db &&
         ris_ref_path_gain_db == o.ris_ref_path_gain_db && links_equal() &&
         rcs_m2 == o.rcs_m2 && region == o.region && user_area == o.user_area &&
         r_req_bps_hz == o.r_req_bps_hz && gamma_req_db == o.gamma_req_db &&
         rng_seed == o.rng_seed &&
         sensing_interference_at_users == o.sensing_interference_at_users;
}

std::map<LinkClass, LinkParams> default_links() {
  const double inf = std::numeric_limits<double>::infinity();
  return {
      {LinkClass::BsUser, {3.7, 3.0}},    {LinkClass::BsTarget, {2.8, 3.0}},
      {LinkClass::BsRis, {2.0, inf}},     {LinkClass::RisUser, {2.0, 3.0}},
      {LinkClass::RisTarget, {2.0, inf}}, {LinkClass::TargetRx, {2.0, 3.0}},
  };
}

void validate(const ScenarioConfig& cfg) {
  invariant(cfg.num_tx_bs() >= 1, "tx_bs_positions", "at least one TX BS is required");
  for (int j = 0; j < cfg.num_tx_bs(); ++j)
    invariant(cfg.tx_bs_positions[j].z() > 0.0,
              "tx_bs_positions[" + std::to_string(j) + "]", "BS height must be positive");
  invariant(cfg.rx_bs_position.z() > 0.0, "rx_bs_position", "BS height must be positive");
  invariant(cfg.ris_position.z() > 0.0, "ris_position", "RIS height must be positive");
  for (int k = 0; k < cfg.num_users(); ++k)
    invariant(cfg.user_positions[k].z() == 0.0, "user_positions[" + std::to_string(k) + "]",
              "users must lie on the ground (z = 0)");
  for (const auto& p : cfg.tx_bs_positions)
    invariant(p.allFinite(), "tx_bs_positions", "coordinates must be finite");
  invariant(cfg.bs_array[0] >= 1 && cfg.bs_array[1] >= 1, "bs_array", "antenna counts must be >= 1");
  invariant(cfg.ris_array[0] >= 1 && cfg.ris_array[1] >= 1, "ris_array",
            "element counts must be >= 1");
  invariant(cfg.element_spacing_m > 0.0, "element_spacing_m", "spacing must be positive");
  invariant(cfg.carrier_frequency_hz > 0.0, "carrier_frequency_hz", "must be positive");
  invariant(cfg.bandwidth_hz > 0.0, "bandwidth_hz", "bandwidth must be positive");
  invariant(std::isfinite(cfg.noise_density_dbm_per_hz), "noise_density_dbm_per_hz", "must be finite");
  invariant(std::isfinite(cfg.ref_path_gain_db), "ref_path_gain_db", "must be finite");
  invariant(std::isfinite(cfg.ris_ref_path_gain_db), "ris_ref_path_gain_db", "must be finite");
  invariant(cfg.rcs_m2 > 0.0, "rcs_m2", "RCS must be positive");
  for (const auto& [cls, name] : kLinkNames) {
    auto it = cfg.links.find(cls);
    invariant(it != cfg.links.end(), "links." + std::string(name), "link class not configured");
    invariant(it->second.pathloss_exponent > 0.0 && std::isfinite(it->second.pathloss_exponent),
              "links." + std::string(name) + ".pathloss_exponent", "must be positive");
    invariant(!std::isnan(it->second.rician_factor_db), "links." + std::string(name) + ".rician_factor_db",
              "must be a number or +-inf");
  }
  const auto& r = cfg.region;
  invariant(r.width_x > 0.0 && r.width_y > 0.0, "region.width", "widths must be positive");
  invariant(r.altitude > 0.0, "region.altitude", "altitude must be positive");
  invariant(r.grid_x >= 1 && r.grid_y >= 1, "region.grid", "grid counts must be >= 1");
  invariant(cfg.user_area.x_max > cfg.user_area.x_min && cfg.user_area.y_max > cfg.user_area.y_min,
            "user_area", "area must be non-empty");
  invariant(cfg.r_req_bps_hz > 0.0 && std::isfinite(cfg.r_req_bps_hz), "r_req_bps_hz",
            "must be positive");
  invariant(std::isfinite(cfg.gamma_req_db), "gamma_req_db", "must be finite");
}

std::vector<Vec3> place_users(const UserArea& area, const std::vector<Vec3>& tx_bs, int count,
                              Rng& rng) {
  std::uniform_real_distribution<double> ux(area.x_min, area.x_max);
  std::uniform_real_distribution<double> uy(area.y_min, area.y_max);
  std::vector<Vec3> users;
  users.reserve(count);
  constexpr int kMaxAttempts = 1'000'000;
  for (int attempt = 0; static_cast<int>(users.size()) < count; ++attempt) {
    if (attempt > kMaxAttempts)
      fail(ScenarioError::Kind::InvariantViolation, "user_area",
           "exclusion disks cover the whole user area");
    const Vec3 p(ux(rng), uy(rng), 0.0);
    bool excluded = false;
    for (const auto& bs : tx_bs) {
      if ((p.head<2>() - bs.head<2>()).norm() < area.exclusion_radius) {
        excluded = true;
        break;
      }
    }
    if (!excluded) users.push_back(p);
  }
  return users;
}

ScenarioConfig load_scenario(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ScenarioError(ScenarioError::Kind::Parse, "", std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) fail(ScenarioError::Kind::TypeMismatch, "", "top level must be an object");

  reject_unknown(doc,
                 {"tx_bs_positions", "rx_bs_position", "ris_position", "user_positions",
                  "num_users", "bs_array", "ris_array", "num_bs_antennas", "num_ris_elements",
                  "element_spacing_m", "carrier_frequency_hz", "bandwidth_hz",
                  "noise_density_dbm_per_hz", "ref_path_gain_db", "ris_ref_path_gain_db",
                  "links", "rcs_m2", "region", "user_area", "r_req_bps_hz", "gamma_req_db",
                  "rng_seed", "sensing_interference_at_users"},
                 "");

  ScenarioConfig cfg;
  cfg.links = default_links();

  cfg.tx_bs_positions = get_points(require(doc, "tx_bs_positions"), "tx_bs_positions");
  cfg.rx_bs_position = get_point<3>(require(doc, "rx_bs_position"), "rx_bs_position");
  cfg.ris_position = get_point<3>(require(doc, "ris_position"), "ris_position");

  auto number = [&](const char* key, double& dst) {
    if (auto it = doc.find(key); it != doc.end()) dst = get_number(*it, key);
  };
  number("carrier_frequency_hz", cfg.carrier_frequency_hz);
  number("bandwidth_hz", cfg.bandwidth_hz);
  number("noise_density_dbm_per_hz", cfg.noise_density_dbm_per_hz);
  number("ref_path_gain_db", cfg.ref_path_gain_db);
  cfg.ris_ref_path_gain_db = cfg.ref_path_gain_db;
  number("ris_ref_path_gain_db", cfg.ris_ref_path_gain_db);
  number("rcs_m2", cfg.rcs_m2);
  number("r_req_bps_hz", cfg.r_req_bps_hz);
  number("gamma_req_db", cfg.gamma_req_db);
  number("element_spacing_m", cfg.element_spacing_m);
  if (auto it = doc.find("rng_seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
      fail(ScenarioError::Kind::TypeMismatch, "rng_seed", "expected a non-negative integer");
    cfg.rng_seed = it->get<std::uint64_t>();
  }
  if (auto it = doc.find("sensing_interference_at_users"); it != doc.end()) {
    if (!it->is_boolean())
      fail(ScenarioError::Kind::TypeMismatch, "sensing_interference_at_users", "expected a boolean");
    cfg.sensing_interference_at_users = it->get<bool>();
  }

  if (auto it = doc.find("bs_array"); it != doc.end()) cfg.bs_array = get_pair(*it, "bs_array");
  if (auto it = doc.find("ris_array"); it != doc.end()) cfg.ris_array = get_pair(*it, "ris_array");
  if (auto it = doc.find("num_bs_antennas"); it != doc.end())
    invariant(get_int(*it, "num_bs_antennas") == cfg.num_bs_antennas(), "num_bs_antennas",
              "does not equal bs_array[0] * bs_array[1]");
  if (auto it = doc.find("num_ris_elements"); it != doc.end())
    invariant(get_int(*it, "num_ris_elements") == cfg.num_ris_elements(), "num_ris_elements",
              "does not equal ris_array[0] * ris_array[1]");
  if (cfg.element_spacing_m == 0.0 && cfg.carrier_frequency_hz > 0.0)
    cfg.element_spacing_m = cfg.wavelength() / 2.0;

  if (auto it = doc.find("links"); it != doc.end()) {
    if (!it->is_object()) fail(ScenarioError::Kind::TypeMismatch, "links", "expected an object");
    for (const auto& [name, entry] : it->items()) {
      const LinkClass cls = link_class_from_string(name);
      const std::string prefix = "links." + name;
      if (!entry.is_object()) fail(ScenarioError::Kind::TypeMismatch, prefix, "expected an object");
      reject_unknown(entry, {"pathloss_exponent", "rician_factor_db"}, prefix + ".");
      auto& p = cfg.links[cls];
      if (auto e = entry.find("pathloss_exponent"); e != entry.end())
        p.pathloss_exponent = get_number(*e, prefix + ".pathloss_exponent");
      if (auto e = entry.find("rician_factor_db"); e != entry.end())
        p.rician_factor_db = get_extended(*e, prefix + ".rician_factor_db");
    }
  }

  if (auto it = doc.find("region"); it != doc.end()) {
    const json& r = *it;
    if (!r.is_object()) fail(ScenarioError::Kind::TypeMismatch, "region", "expected an object");
    reject_unknown(r, {"center_xy", "width_x", "width_y", "altitude", "grid"}, "region.");
    if (auto e = r.find("center_xy"); e != r.end()) cfg.region.center_xy = get_point<2>(*e, "region.center_xy");
    if (auto e = r.find("width_x"); e != r.end()) cfg.region.width_x = get_number(*e, "region.width_x");
    if (auto e = r.find("width_y"); e != r.end()) cfg.region.width_y = get_number(*e, "region.width_y");
    if (auto e = r.find("altitude"); e != r.end()) cfg.region.altitude = get_number(*e, "region.altitude");
    if (auto e = r.find("grid"); e != r.end()) {
      const auto g = get_pair(*e, "region.grid");
      cfg.region.grid_x = g[0];
      cfg.region.grid_y = g[1];
    }
  }

  if (auto it = doc.find("user_area"); it != doc.end()) {
    const json& a = *it;
    if (!a.is_object()) fail(ScenarioError::Kind::TypeMismatch, "user_area", "expected an object");
    reject_unknown(a, {"x_min", "x_max", "y_min", "y_max", "exclusion_radius"}, "user_area.");
    auto field = [&](const char* key, double& dst) {
      if (auto e = a.find(key); e != a.end()) dst = get_number(*e, std::string("user_area.") + key);
    };
    field("x_min", cfg.user_area.x_min);
    field("x_max", cfg.user_area.x_max);
    field("y_min", cfg.user_area.y_min);
    field("y_max", cfg.user_area.y_max);
    field("exclusion_radius", cfg.user_area.exclusion_radius);
  }

  const auto users_it = doc.find("user_positions");
  const auto count_it = doc.find("num_users");
  if (users_it != doc.end()) {
    cfg.user_positions = get_points(*users_it, "user_positions");
    if (count_it != doc.end())
      invariant(get_int(*count_it, "num_users") == cfg.num_users(), "num_users",
                "does not match the length of user_positions");
  } else if (count_it != doc.end()) {
    const int count = get_int(*count_it, "num_users");
    invariant(count >= 0, "num_users", "must be non-negative");
    Rng rng = make_rng(cfg.rng_seed, Stream::Users);
    cfg.user_positions = place_users(cfg.user_area, cfg.tx_bs_positions, count, rng);
  } else {
    fail(ScenarioError::Kind::MissingKey, "user_positions",
         "either user_positions or num_users is required");
  }

  validate(cfg);
  return cfg;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::Parse, path.string(), "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  json doc;
  doc["tx_bs_positions"] = json::array();
  for (const auto& p : cfg.tx_bs_positions) doc["tx_bs_positions"].push_back(put_point(p));
  doc["rx_bs_position"] = put_point(cfg.rx_bs_position);
  doc["ris_position"] = put_point(cfg.ris_position);
  doc["user_positions"] = json::array();
  for (const auto& p : cfg.user_positions) doc["user_positions"].push_back(put_point(p));
  doc["bs_array"] = cfg.bs_array;
  doc["ris_array"] = cfg.ris_array;
  doc["element_spacing_m"] = cfg.element_spacing_m;
  doc["carrier_frequency_hz"] = cfg.carrier_frequency_hz;
  doc["bandwidth_hz"] = cfg.bandwidth_hz;
  doc["noise_density_dbm_per_hz"] = cfg.noise_density_dbm_per_hz;
  doc["ref_path_gain_db"] = cfg.ref_path_gain_db;
  doc["ris_ref_path_gain_db"] = cfg.ris_ref_path_gain_db;
  doc["links"] = json::object();
  for (const auto& [cls, p] : cfg.links)
    doc["links"][std::string(to_string(cls))] = {{"pathloss_exponent", p.pathloss_exponent},
                                                 {"rician_factor_db", put_extended(p.rician_factor_db)}};
  doc["rcs_m2"] = cfg.rcs_m2;
  doc["region"] = {{"center_xy", {cfg.region.center_xy.x(), cfg.region.center_xy.y()}},
                   {"width_x", cfg.region.width_x},
                   {"width_y", cfg.region.width_y},
                   {"altitude", cfg.region.altitude},
                   {"grid", {cfg.region.grid_x, cfg.region.grid_y}}};
  doc["user_area"] = {{"x_min", cfg.user_area.x_min},
                      {"x_max", cfg.user_area.x_max},
                      {"y_min", cfg.user_area.y_min},
                      {"y_max", cfg.user_area.y_max},
                      {"exclusion_radius", cfg.user_area.exclusion_radius}};
  doc["r_req_bps_hz"] = cfg.r_req_bps_hz;
  doc["gamma_req_db"] = cfg.gamma_req_db;
  doc["rng_seed"] = cfg.rng_seed;
  doc["sensing_interference_at_users"] = cfg.sensing_interference_at_users;
  return doc.dump(2);
}

ScenarioConfig table1_preset() {
  ScenarioConfig cfg;
  cfg.tx_bs_positions = {Vec3(0, 0, 30), Vec3(0, 200, 30), Vec3(173, 100, 30)};
  cfg.rx_bs_position = Vec3(58, 100, 40);
  cfg.ris_position = Vec3(65, 95, 40);
  cfg.bs_array = {8, 4};
  cfg.ris_array = {8, 8};
  cfg.element_spacing_m = cfg.wavelength() / 2.0;
  cfg.links = default_links();
  cfg.region = RegionSpec{};
  cfg.r_req_bps_hz = 10.0;
  cfg.gamma_req_db = 10.0;
  Rng rng = make_rng(cfg.rng_seed, Stream::Users);
  cfg.user_positions = place_users(cfg.user_area, cfg.tx_bs_positions, 10, rng);
  return cfg;
}

ScenarioConfig desk_preset() {
  ScenarioConfig cfg = table1_preset();
  cfg.tx_bs_positions.resize(2);
  cfg.bs_array = {4, 2};
  cfg.ris_array = {4, 4};
  cfg.region.grid_x = 2;
  cfg.region.grid_y = 2;
  cfg.r_req_bps_hz = 6.0;
  Rng rng = make_rng(cfg.rng_seed, Stream::Users);
  cfg.user_positions = place_users(cfg.user_area, cfg.tx_bs_positions, 3, rng);
  return cfg;
}

ScenarioConfig preset(std::string_view name) {
  if (name == "table1") return table1_preset();
  if (name == "desk") return desk_preset();
  throw ScenarioError(ScenarioError::Kind::InvariantViolation, "preset",
                      "unknown preset '" + std::string(name) + "' (expected table1 or desk)");
}

std::vector<Vec3> discretize_region(const RegionSpec& region) {
  auto axis = [](double center, double width, int count) {
    std::vector<double> v(count);
    if (count == 1) {
      v[0] = center;
      return v;
    }
    const double lo = center - width / 2.0;
    const double step = width / (count - 1);
    for (int i = 0; i < count; ++i) v[i] = lo + step * i;
    v[count - 1] = center + width / 2.0;
    return v;
  };
  const auto xs = axis(region.center_xy.x(), region.width_x, region.grid_x);
  const auto ys = axis(region.center_xy.y(), region.width_y, region.grid_y);
  std::vector<Vec3> points;
  points.reserve(xs.size() * ys.size());
  for (double y : ys)
    for (double x : xs) points.emplace_back(x, y, region.altitude);
  return points;
}

NoisePowers noise_power_watts(const ScenarioConfig& cfg) {
  const double dbm = cfg.noise_density_dbm_per_hz + 10.0 * std::log10(cfg.bandwidth_hz);
  NoisePowers out;
  out.sensing_w = dbm_to_watts(dbm);
  out.user_w.assign(cfg.num_users(), out.sensing_w);
  return out;
}

std::string config_digest(const ScenarioConfig& cfg) {
  const std::string text = serialize_scenario(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace risisac
