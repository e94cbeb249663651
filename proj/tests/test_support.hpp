#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "amcckf/filter_core.hpp"
#include "amcckf/fusion.hpp"

namespace amcckf::test {

using Mat = MatrixX<double>;
using Vec = VectorX<double>;

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                         double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

/// A A' + eps I, with eigenvalues spread over a few decades.
inline Mat random_spd(std::mt19937_64& rng, Eigen::Index n, double eps = 1e-3) {
  const Mat A = random_matrix(rng, n, n);
  Mat S = A * A.transpose() + eps * Mat::Identity(n, n);
  return 0.5 * (S + S.transpose());
}

inline Mat random_diag_spd(std::mt19937_64& rng, Eigen::Index n,
                           double lo = 0.05, double hi = 5.0) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  Vec d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = std::exp(u(rng));
  return d.asDiagonal();
}

inline double max_rel_diff(const Mat& a, const Mat& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Linear measurement model z = H x with the given noise.
inline MeasurementModel<double> linear_measurement(const std::string& id, const Mat& H,
                                                   const Mat& R, const Vec& bandwidth) {
  MeasurementModel<double> m;
  m.sensor_id = id;
  m.observe = [H](const Vec& x) -> Vec { return H * x; };
  m.jacobian = [H](const Vec&) -> Mat { return H; };
  m.noise = R;
  m.bandwidth = bandwidth;
  return m;
}

/// Linear process x' = F x.
inline ProcessModel<double> linear_process(const Mat& F, const Mat& Q) {
  ProcessModel<double> p;
  p.transition = [F](const Vec& x, const Vec&, double) -> Vec { return F * x; };
  p.jacobian = [F](const Vec&, const Vec&, double) -> Mat { return F; };
  p.noise = Q;
  return p;
}

inline Nominal apply_rotation(const Eigen::Quaterniond& rot, const Nominal& x) {
  Nominal out = x;
  out.p = rot * x.p;
  out.v = rot * x.v;
  out.q = (rot * x.q).normalized();
  return out;
}

}  // namespace amcckf::test
