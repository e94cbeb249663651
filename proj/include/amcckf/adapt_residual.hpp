#pragma once

// Residual-based noise adaptation: correntropy-weighted sliding-window
// maximum-likelihood estimates of R and Q.

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <string>

#include "amcckf/filter_core.hpp"
#include "amcckf/linalg.hpp"

namespace amcckf {

inline constexpr double kNoiseDiagonalFloor = 1e-12;

template <typename Scalar>
struct ResidualEntry {
  MatrixX<Scalar> residual_outer;    // L r r' L
  MatrixX<Scalar> innovation_outer;  // L y y' L
  MatrixX<Scalar> H;
  MatrixX<Scalar> P_post;
  MatrixX<Scalar> P_prior;
  MatrixX<Scalar> K;
};

template <typename Scalar>
class ResidualWindow {
 public:
  explicit ResidualWindow(std::size_t capacity = 10) : capacity_(capacity) {
    if (capacity_ == 0) throw ValidationError("residual window capacity must be >= 1");
  }

  void push(const InnovationRecord<Scalar>& record) {
    const VectorX<Scalar> lr = record.weights.unweighted.cwiseProduct(record.residual);
    const VectorX<Scalar> ly = record.weights.unweighted.cwiseProduct(record.innovation);
    entries_.push_back(ResidualEntry<Scalar>{lr * lr.transpose(),
                                             ly * ly.transpose(), record.H,
                                             record.P_post, record.P_prior,
                                             record.K});
    if (entries_.size() > capacity_) entries_.pop_front();
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const ResidualEntry<Scalar>& latest() const { return entries_.back(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::size_t capacity_;
  std::deque<ResidualEntry<Scalar>> entries_;
};

/// Gamma = mean of L r r' L over the window.
template <typename Scalar>
MatrixX<Scalar> gamma_residual(const ResidualWindow<Scalar>& window) {
  if (window.empty()) throw AdaptationNotReady("gamma_residual: empty window");
  MatrixX<Scalar> sum = MatrixX<Scalar>::Zero(window.latest().residual_outer.rows(),
                                              window.latest().residual_outer.cols());
  for (const auto& e : window) sum += e.residual_outer;
  return sum / Scalar(window.size());
}

/// Gamma = mean of L y y' L over the window.
template <typename Scalar>
MatrixX<Scalar> gamma_innovation(const ResidualWindow<Scalar>& window) {
  if (window.empty()) throw AdaptationNotReady("gamma_innovation: empty window");
  MatrixX<Scalar> sum = MatrixX<Scalar>::Zero(window.latest().innovation_outer.rows(),
                                              window.latest().innovation_outer.cols());
  for (const auto& e : window) sum += e.innovation_outer;
  return sum / Scalar(window.size());
}

/// R = Gamma_res + H P_post H' using the latest snapshot.
template <typename Scalar>
MatrixX<Scalar> estimate_R(const MatrixX<Scalar>& gamma_res,
                           const ResidualWindow<Scalar>& window) {
  const auto& last = window.latest();
  MatrixX<Scalar> R = gamma_res + last.H * last.P_post * last.H.transpose();
  symmetrize(R);
  floor_diagonal(R, Scalar(kNoiseDiagonalFloor));
  return R;
}

/// Q = K Gamma_inn K' using the latest gain, projected to PSD.
template <typename Scalar>
MatrixX<Scalar> estimate_Q(const ResidualWindow<Scalar>& window,
                           const MatrixX<Scalar>& gamma_inn,
                           bool diagonal_only = false) {
  const auto& K = window.latest().K;
  MatrixX<Scalar> Q = project_psd(MatrixX<Scalar>(K * gamma_inn * K.transpose()));
  if (diagonal_only) Q = MatrixX<Scalar>(Q.diagonal().asDiagonal());
  floor_diagonal(Q, Scalar(kNoiseDiagonalFloor));
  return Q;
}

/// max |Gamma^-1 y - R^-1 r| for one update. Zero (to rounding) for an
/// optimal-gain Kalman update with Gamma = H P_prior H' + R.
template <typename Scalar>
Scalar check_identity_A1(const InnovationRecord<Scalar>& record,
                         const MatrixX<Scalar>& R, const MatrixX<Scalar>& gamma) {
  const auto gamma_lu = gamma.fullPivLu();
  const auto R_lu = R.fullPivLu();
  if (!gamma_lu.isInvertible() || !R_lu.isInvertible()) {
    throw Error("check_identity_A1: singular innovation or noise covariance");
  }
  const VectorX<Scalar> lhs = gamma_lu.solve(record.innovation);
  const VectorX<Scalar> rhs = R_lu.solve(record.residual);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

enum class GammaSource { kInnovation, kResidual };

template <typename Scalar>
struct ResidualConfig {
  int window = 10;
  Scalar beta = Scalar(1);  // R <- (1 - beta) R_prev + beta R_new
  GammaSource q_gamma = GammaSource::kInnovation;
  bool diagonal_q = false;
  bool diagonal_r = false;  // keep only the per-channel variances of R
  bool adapt_process_noise = true;
};

/// Per-sensor residual windows plus one Q estimate. Q is refreshed on
/// corrections of the primary sensor (the first sensor registered) from the
/// K Gamma K' terms of all corrections since the previous refresh.
template <typename Scalar>
class ResidualAdapter {
 public:
  ResidualAdapter(ResidualConfig<Scalar> config, MatrixX<Scalar> Q0)
      : config_(config), Q_(std::move(Q0)) {
    if (config_.window < 1) throw ValidationError("residual: window must be >= 1");
    if (!(config_.beta > Scalar(0)) || config_.beta > Scalar(1)) {
      throw ValidationError("residual: beta must lie in (0, 1]");
    }
  }

  void add_sensor(const std::string& id, MatrixX<Scalar> R0) {
    if (primary_.empty()) primary_ = id;
    sensors_.insert_or_assign(
        id, SensorState{ResidualWindow<Scalar>(static_cast<std::size_t>(config_.window)),
                        std::move(R0)});
  }

  void push(const InnovationRecord<Scalar>& record) {
    auto it = sensors_.find(record.sensor_id);
    if (it == sensors_.end()) {
      throw ValidationError("residual: unknown sensor '" + record.sensor_id + "'");
    }
    auto& state = it->second;
    state.window.push(record);
    steps_since_primary_ += record.process_steps;

    MatrixX<Scalar> R_new = estimate_R(gamma_residual(state.window), state.window);
    if (config_.diagonal_r) R_new = MatrixX<Scalar>(R_new.diagonal().asDiagonal());
    if (config_.beta == Scalar(1)) {
      state.R = R_new;
    } else {
      state.R = (Scalar(1) - config_.beta) * state.R + config_.beta * R_new;
    }

    if (config_.adapt_process_noise) {
      // Every correction removes K Gamma K' from the covariance; the primary
      // sensor closes the cycle and spreads the total over its process steps.
      const MatrixX<Scalar> gamma = config_.q_gamma == GammaSource::kInnovation
                                        ? gamma_innovation(state.window)
                                        : gamma_residual(state.window);
      const MatrixX<Scalar> q = estimate_Q(state.window, gamma, config_.diagonal_q);
      q_cycle_ = q_cycle_.size() == 0 ? q : MatrixX<Scalar>(q_cycle_ + q);
      if (record.sensor_id == primary_) {
        if (steps_since_primary_ > 0) {
          Q_ = q_cycle_ / Scalar(steps_since_primary_);
          floor_diagonal(Q_, Scalar(kNoiseDiagonalFloor));
        }
        q_cycle_.resize(0, 0);
        steps_since_primary_ = 0;
      }
    }
  }

  const MatrixX<Scalar>& process_noise() const { return Q_; }
  const MatrixX<Scalar>& measurement_noise(const std::string& id) const {
    return sensors_.at(id).R;
  }
  const ResidualWindow<Scalar>& window(const std::string& id) const {
    return sensors_.at(id).window;
  }
  const std::string& primary_sensor() const { return primary_; }

 private:
  struct SensorState {
    ResidualWindow<Scalar> window;
    MatrixX<Scalar> R;
  };

  ResidualConfig<Scalar> config_;
  MatrixX<Scalar> Q_;
  std::map<std::string, SensorState> sensors_;
  std::string primary_;
  MatrixX<Scalar> q_cycle_;
  int steps_since_primary_ = 0;
};

}  // namespace amcckf
