#pragma once

#include <algorithm>

#include "amcckf/types.hpp"

namespace amcckf {

enum class KernelMode {
  kNone,      // all correntropy weights fixed at one (plain Kalman correction)
  kStatic,    // fixed bandwidth
  kAdaptive,  // bandwidth recomputed before every correction
};

template <typename Scalar>
struct BandwidthLimits {
  Scalar min = Scalar(1e-3);
  Scalar max = Scalar(1e6);
};

template <typename Scalar>
struct KernelConfig {
  KernelMode mode = KernelMode::kAdaptive;
  Scalar static_bandwidth = Scalar(2);
  BandwidthLimits<Scalar> limits;
};

/// Per-dimension adaptive bandwidth
///   sigma_mu = 1 / (y_mu^2 / R_prev(mu, mu) + H_mu P_prior H_mu'),
/// clamped to [limits.min, limits.max]. Both terms in the denominator are
/// non-negative, so the result is positive before and after clamping.
template <typename Scalar>
VectorX<Scalar> adapt_bandwidth(const VectorX<Scalar>& innovation,
                                const MatrixX<Scalar>& R_prev,
                                const MatrixX<Scalar>& H,
                                const MatrixX<Scalar>& P_prior,
                                const BandwidthLimits<Scalar>& limits = {}) {
  const Eigen::Index m = innovation.size();
  VectorX<Scalar> sigma(m);
  for (Eigen::Index mu = 0; mu < m; ++mu) {
    const Scalar projected = H.row(mu) * P_prior * H.row(mu).transpose();
    const Scalar denom = innovation(mu) * innovation(mu) / R_prev(mu, mu) +
                         std::max(projected, Scalar(0));
    // denom == 0 means a perfect, fully certain prediction: widest kernel.
    const Scalar raw = denom > Scalar(0) ? Scalar(1) / denom : limits.max;
    sigma(mu) = std::clamp(raw, limits.min, limits.max);
  }
  return sigma;
}

/// Bandwidth used for the next correction under `config`. Returns an empty
/// vector in KernelMode::kNone.
template <typename Scalar>
VectorX<Scalar> select_bandwidth(const KernelConfig<Scalar>& config,
                                 const VectorX<Scalar>& innovation,
                                 const MatrixX<Scalar>& R_prev,
                                 const MatrixX<Scalar>& H,
                                 const MatrixX<Scalar>& P_prior) {
  switch (config.mode) {
    case KernelMode::kNone:
      return {};
    case KernelMode::kStatic:
      return VectorX<Scalar>::Constant(innovation.size(), config.static_bandwidth);
    case KernelMode::kAdaptive:
      break;
  }
  return adapt_bandwidth<Scalar>(innovation, R_prev, H, P_prior, config.limits);
}

}  // namespace amcckf
