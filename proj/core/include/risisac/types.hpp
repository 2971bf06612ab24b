#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace risisac {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Pseudo-random engine used throughout. Every consumer takes it by reference
/// so callers control stream splitting.
using Rng = std::mt19937_64;

/// Deterministic child seed from (base, stream). SplitMix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Named RNG streams so that e.g. channel draws do not shift when the number
/// of randomization candidates changes.
enum class Stream : std::uint64_t {
  Users = 1,
  Channels = 2,
  InitialPhases = 3,
  Beamforming = 4,
  Phases = 5,
  Baseline = 6,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(derive_seed(seed, static_cast<std::uint64_t>(stream)));
}

/// Circularly-symmetric standard complex normal, E|z|^2 = 1.
inline cd complex_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline CVec complex_normal_vector(Eigen::Index n, Rng& rng) {
  CVec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = complex_normal(rng);
  return out;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kPi = 3.14159265358979323846;

}  // namespace risisac
