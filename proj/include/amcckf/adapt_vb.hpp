#pragma once

// Variational-Bayes noise adaptation over a sliding window of corrections:
// a Rauch-Tung-Striebel backward pass produces smoothed states, whose
// sufficient statistics feed inverse-Wishart posteriors for Q and each R.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amcckf/filter_core.hpp"
#include "amcckf/linalg.hpp"

namespace amcckf {

/// Inverse-Wishart posterior summarized by its degrees of freedom and inverse
/// scale matrix. The point estimate is scale / dof.
template <typename Scalar>
struct InverseWishart {
  Scalar dof = Scalar(0);
  MatrixX<Scalar> scale;

  bool ready() const { return dof > Scalar(0); }
};

template <typename Scalar>
struct WishartNoiseState {
  InverseWishart<Scalar> process;      // (t, T)
  InverseWishart<Scalar> measurement;  // (b, B)
};

template <typename Scalar>
struct SmoothedWindow {
  std::vector<VectorX<Scalar>> means;        // x_{j|k}
  std::vector<MatrixX<Scalar>> covariances;  // P_{j|k}
  std::vector<MatrixX<Scalar>> gains;        // gains[j] = G_j, size N-1
  std::vector<MatrixX<Scalar>> cross;        // cross[j] = P_{j-1,j|k}; cross[0] empty
  bool regularized = false;
};

/// RTS backward pass over the window. Each snapshot stores its own prior
/// (x_prior, P_prior) and the transition F from the previous snapshot, so the
/// recursion also handles transitions with a known input offset
///   u_j = x_prior_j - F_j x_post_{j-1}
/// (an error-state filter whose nominal state absorbed the previous
/// correction has x_prior_j = 0 and u_j = -F_j x_post_{j-1}).
template <typename Scalar>
SmoothedWindow<Scalar> backward_smooth(
    std::span<const WindowSnapshot<Scalar>> window) {
  if (window.empty()) {
    throw AdaptationNotReady("backward_smooth: empty window");
  }
  const std::size_t N = window.size();
  SmoothedWindow<Scalar> out;
  out.means.resize(N);
  out.covariances.resize(N);
  out.gains.resize(N - 1);
  out.cross.resize(N);

  out.means[N - 1] = window[N - 1].x_post;
  out.covariances[N - 1] = window[N - 1].P_post;
  for (std::size_t j = N - 1; j >= 1; --j) {
    const auto& prev = window[j - 1];
    const auto& cur = window[j];
    const MatrixX<Scalar> P_prior_inv = spd_inverse(cur.P_prior, &out.regularized);
    const MatrixX<Scalar> G = prev.P_post * cur.F.transpose() * P_prior_inv;
    out.means[j - 1] = prev.x_post + G * (out.means[j] - cur.x_prior);
    MatrixX<Scalar> P = prev.P_post +
                        G * (out.covariances[j] - cur.P_prior) * G.transpose();
    symmetrize(P);
    out.covariances[j - 1] = std::move(P);
    out.cross[j] = G * out.covariances[j];
    out.gains[j - 1] = G;
  }
  return out;
}

/// Sum over window transitions of
///   O_j = P_j - F P_{j-1,j} - P_{j-1,j}' F' + F P_{j-1} F' + e e',
///   e   = x_j - F x_{j-1} - u_j,
/// all smoothed. Projected onto the PSD cone.
template <typename Scalar>
MatrixX<Scalar> process_statistic(std::span<const WindowSnapshot<Scalar>> window,
                                  const SmoothedWindow<Scalar>& smoothed) {
  const Eigen::Index n = window.front().x_post.size();
  MatrixX<Scalar> sum = MatrixX<Scalar>::Zero(n, n);
  for (std::size_t j = 1; j < window.size(); ++j) {
    const auto& F = window[j].F;
    const VectorX<Scalar> input = window[j].x_prior - F * window[j - 1].x_post;
    const VectorX<Scalar> e =
        smoothed.means[j] - F * smoothed.means[j - 1] - input;
    const MatrixX<Scalar> FC = F * smoothed.cross[j];
    sum += smoothed.covariances[j] - FC - FC.transpose() +
           F * smoothed.covariances[j - 1] * F.transpose() + e * e.transpose();
  }
  return project_psd(sum);
}

/// Number of elementary process steps spanned by the window transitions.
template <typename Scalar>
Scalar process_count(std::span<const WindowSnapshot<Scalar>> window) {
  Scalar count = Scalar(0);
  for (std::size_t j = 1; j < window.size(); ++j) {
    count += Scalar(window[j].process_steps);
  }
  return count;
}

/// Sum over snapshots (of `sensor`, or all when empty) of
///   M_j = L_j r_j r_j' L_j + H_j P_{j|k} H_j'
/// with r_j the residual against the smoothed state.
template <typename Scalar>
MatrixX<Scalar> measurement_statistic(
    std::span<const WindowSnapshot<Scalar>> window,
    const SmoothedWindow<Scalar>& smoothed, std::string_view sensor = {},
    Scalar* count = nullptr) {
  MatrixX<Scalar> sum;
  Scalar terms = Scalar(0);
  for (std::size_t j = 0; j < window.size(); ++j) {
    const auto& s = window[j];
    if (!sensor.empty() && s.sensor_id != sensor) continue;
    const VectorX<Scalar> r =
        s.residual - s.H * (smoothed.means[j] - s.x_post);
    const VectorX<Scalar> lr = s.weights.unweighted.cwiseProduct(r);
    MatrixX<Scalar> M = lr * lr.transpose() +
                        s.H * smoothed.covariances[j] * s.H.transpose();
    if (sum.size() == 0) {
      sum = std::move(M);
    } else {
      sum += M;
    }
    terms += Scalar(1);
  }
  if (count) *count = terms;
  if (sum.size() > 0) symmetrize(sum);
  return sum;
}

/// dof <- rho * dof + count, scale <- rho * scale + statistic.
template <typename Scalar>
void accumulate(InverseWishart<Scalar>& iw, const MatrixX<Scalar>& statistic,
                Scalar rho, Scalar count) {
  iw.dof = rho * iw.dof + count;
  if (iw.scale.size() == 0) {
    iw.scale = statistic;
  } else {
    iw.scale = rho * iw.scale + statistic;
  }
}

template <typename Scalar>
WishartNoiseState<Scalar> wishart_update(const WishartNoiseState<Scalar>& state,
                                         const MatrixX<Scalar>& O_sum,
                                         const MatrixX<Scalar>& M_sum,
                                         Scalar rho, int window) {
  if (rho < Scalar(0.9) || rho > Scalar(1)) {
    throw ValidationError("wishart_update: rho must lie in [0.9, 1]");
  }
  if (window < 1) {
    throw ValidationError("wishart_update: window must be at least 1");
  }
  WishartNoiseState<Scalar> out = state;
  accumulate(out.process, O_sum, rho, Scalar(window));
  accumulate(out.measurement, M_sum, rho, Scalar(window));
  return out;
}

template <typename Scalar>
MatrixX<Scalar> posterior_mean(const InverseWishart<Scalar>& iw) {
  if (!iw.ready() || iw.scale.size() == 0) {
    throw AdaptationNotReady("inverse-Wishart posterior has no degrees of freedom");
  }
  return project_psd(MatrixX<Scalar>(iw.scale / iw.dof));
}

template <typename Scalar>
struct NoiseEstimate {
  MatrixX<Scalar> Q;
  MatrixX<Scalar> R;
};

template <typename Scalar>
NoiseEstimate<Scalar> extract_noise(const WishartNoiseState<Scalar>& state) {
  return {posterior_mean(state.process), posterior_mean(state.measurement)};
}

template <typename Scalar>
struct VbConfig {
  int window = 10;
  Scalar rho = Scalar(0.97);
  bool adapt_process_noise = true;
  bool diagonal_r = false;  // keep only the per-channel variances of R
};

/// Sliding-window VB adaptation shared by all sensors of one filter. The
/// window holds up to window+1 corrections from any sensor in time order; a
/// single process posterior is shared and every sensor owns its own
/// measurement posterior.
template <typename Scalar>
class VbAdapter {
 public:
  VbAdapter(VbConfig<Scalar> config, MatrixX<Scalar> Q0)
      : config_(config), Q_(std::move(Q0)) {
    if (config_.window < 1) throw ValidationError("vb: window must be >= 1");
    if (config_.rho < Scalar(0.9) || config_.rho > Scalar(1)) {
      throw ValidationError("vb: rho must lie in [0.9, 1]");
    }
  }

  void add_sensor(const std::string& id, MatrixX<Scalar> R0) {
    sensors_[id] = SensorState{InverseWishart<Scalar>{}, std::move(R0)};
  }

  void push(WindowSnapshot<Scalar> snapshot) {
    auto it = sensors_.find(snapshot.sensor_id);
    if (it == sensors_.end()) {
      throw ValidationError("vb: unknown sensor '" + snapshot.sensor_id + "'");
    }
    window_.push_back(std::move(snapshot));
    if (window_.size() > static_cast<std::size_t>(config_.window) + 1) {
      window_.erase(window_.begin());
    }

    const std::span<const WindowSnapshot<Scalar>> view(window_);
    const SmoothedWindow<Scalar> smoothed = backward_smooth(view);
    regularized_ = smoothed.regularized;

    if (config_.adapt_process_noise && window_.size() > 1) {
      const Scalar steps = process_count(view);
      if (steps > Scalar(0)) {
        accumulate(process_, process_statistic(view, smoothed), config_.rho,
                   steps);
        Q_ = posterior_mean(process_);
      }
    }

    for (auto& [id, state] : sensors_) {
      Scalar count = Scalar(0);
      MatrixX<Scalar> M = measurement_statistic(view, smoothed, id, &count);
      if (count == Scalar(0)) continue;
      accumulate(state.posterior, M, config_.rho, count);
      state.R = posterior_mean(state.posterior);
      if (config_.diagonal_r) state.R = MatrixX<Scalar>(state.R.diagonal().asDiagonal());
    }
  }

  const MatrixX<Scalar>& process_noise() const { return Q_; }
  const MatrixX<Scalar>& measurement_noise(const std::string& id) const {
    return sensors_.at(id).R;
  }
  const InverseWishart<Scalar>& process_posterior() const { return process_; }
  const InverseWishart<Scalar>& measurement_posterior(const std::string& id) const {
    return sensors_.at(id).posterior;
  }
  std::size_t window_size() const { return window_.size(); }
  bool last_regularized() const { return regularized_; }

 private:
  struct SensorState {
    InverseWishart<Scalar> posterior;
    MatrixX<Scalar> R;
  };

  VbConfig<Scalar> config_;
  MatrixX<Scalar> Q_;
  InverseWishart<Scalar> process_;
  std::map<std::string, SensorState> sensors_;
  std::vector<WindowSnapshot<Scalar>> window_;
  bool regularized_ = false;
};

}  // namespace amcckf
