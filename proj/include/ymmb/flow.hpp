#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ymmb/objective.hpp"

namespace ymmb {

enum class FlowStatus { Converged, MaxTime, CutLocus, EnergyIncrease, Stopped };

std::string to_string(FlowStatus s);

struct FlowController {
  double tol_g = 1e-10;
  double s_max = 1e3;
  double h_initial = 1e-2;
  double h_max = 0.1;
  double h_min = 1e-12;
  double growth = 1.5;
  /// Accept a step iff E_new <= E_old + energy_slack (1 + |E_old|).
  double energy_slack = 1e-12;
  /// Largest coordinate change per step (a proxy for the curvature jump).
  double max_jump = M_PI / 4;
  long max_steps = 2000000;
  /// Keep every record_stride-th accepted point (energies and gradient norms are always kept).
  int record_stride = 1;
};

struct Trajectory {
  std::vector<double> s;
  std::vector<Vector> points;  // aligned with s when record_stride == 1
  std::vector<double> energy;
  std::vector<double> grad_norm;
  FlowStatus status = FlowStatus::MaxTime;
  long rejected_steps = 0;
  std::optional<int> limit_id;

  const Vector& end() const { return points.back(); }
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientTail : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Called after each accepted step; returning true stops the flow with status Stopped.
using FlowObserver = std::function<bool(double s, const Vector& p, double energy, double grad_norm)>;

/// Negative gradient flow by RK4 in trivialized coordinates with a retraction
/// at every stage. Steps are halved on energy increase or large jumps and grown
/// after acceptance.
Trajectory integrate(const Objective& f, const Vector& start, const FlowController& controller = {},
                     const FlowObserver& observer = nullptr);

struct RefineOptions {
  double precondition = 1e-3;
  double target = 1e-11;
  double kernel_threshold = 1e-6;  // relative to the spectral radius
  int max_iterations = 50;
};

/// Gauss-Newton on the gradient, off the numerical Hessian kernel.
Vector refine_critical(const Objective& f, const Vector& guess, const RefineOptions& options = {});

struct Spectrum {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // coord_dim x manifold_dim, columns in trivialized coordinates
  int kernel = 0;
  int negative = 0;
  double threshold = 0.0;
  /// Smallest eigenvalue above the kernel threshold; 0 if none.
  double spectral_gap = 0.0;
};

/// Eigen-decomposition of the Hessian in the frame; kernel uses |lambda| <= rel * max(1, |lambda|_max),
/// index counts lambda < -index_threshold.
Spectrum hessian_spectrum(const Objective& f, const Vector& p, double rel_kernel = 1e-6, double index_threshold = 1e-6);

struct DecayFit {
  double rate = 0.0;
  double s_begin = 0.0;
  double s_end = 0.0;
  double correlation = 0.0;
  int samples = 0;
  double spectral_gap = 0.0;
  bool agrees = false;
  /// Some nonzero eigenvalue sits within 10x of the gap in the kernel neighbourhood; deviation is reported, not failed.
  bool near_kernel = false;
  std::optional<int> limit_id;
};

struct DecayOptions {
  double upper = 1e-3;  // tail starts when the gradient norm drops below this
  double lower = 1e-9;  // and ignores samples below this (round-off floor)
  int min_samples = 8;
  double min_correlation = 0.99;
};

/// Least-squares slope of log(gradient norm) over the tail, compared with the spectral gap
/// at the trajectory's end.
DecayFit decay_fit(const Trajectory& traj, const Spectrum& limit_spectrum, const DecayOptions& options = {});

/// Flows from retract(x, epsilon * direction); direction must be a unit vector in the
/// negative eigenspace of the Hessian at x.
Trajectory shoot_unstable(const Objective& f, const Vector& x, const Vector& direction, double epsilon,
                          const FlowController& controller = {}, const FlowObserver& observer = nullptr,
                          double contamination_tol = 1e-6);

}  // namespace ymmb
