#pragma once

#include <atomic>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "ymmb/ym_core.hpp"

namespace ymmb {

/// Smooth bump rho: R -> [0, 1], rho = 1 on [-1, 1], supp rho in [-4, 4],
/// max |rho'| = 2/3. rho(x) = 1 - S((|x| - 1) / 3) with the exponential
/// smoothstep S(t) = psi(t) / (psi(t) + psi(1 - t)), psi(t) = exp(-1/t).
double bump(double x);
double bump_prime(double x);

/// rho_k(r) = rho(k^2 r) and its derivative in r.
double cutoff(double r, int k);
double cutoff_prime(double r, int k);

class NotInDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// alpha_e = log((c^{-1} U0_e c)^{-1} U_e) on free edges, with c minimizing
/// the weighted orbit distance sum_e w_e |alpha_e|^2.
struct SliceCoordinates {
  TangentField alpha;
  GroupElement c = GroupElement::Identity();
  double residual = 0.0;
  double distance() const;  // weighted norm of alpha, set by slice_coordinates
  double norm_sq = 0.0;
};

SliceCoordinates slice_coordinates(const Connection& a, const Connection& reference, const SpanningTree& tree);

struct ModelPerturbation {
  Connection reference;
  TangentField eta;
  int k = 1;
  double constant = 0.0;  // empirical C_l

  /// Support radius in slice distance: 2 / k.
  double support_radius() const { return 2.0 / k; }
};

/// Removes from eta the conjugation-orbit directions at the reference and
/// zeroes tree edges.
TangentField orbit_orthogonal(const Connection& reference, const TangentField& eta, const SpanningTree& tree);

ModelPerturbation make_model_perturbation(const Connection& reference, const TangentField& eta_raw, int k,
                                          const SpanningTree& tree);

/// Value and gradient of a single term (coefficient 1):
/// rho_k(|alpha|^2) <alpha, ad(c, eta)>, with eta carried by the minimizer c
/// so the value is invariant under residual conjugation.
double term_value(const ModelPerturbation& term, const Connection& a, const SpanningTree& tree);
TangentField term_gradient(const ModelPerturbation& term, const Connection& a, const SpanningTree& tree);

class PerturbationBank {
 public:
  struct Entry {
    ModelPerturbation term;
    double lambda = 0.0;
  };

  PerturbationBank() = default;
  explicit PerturbationBank(SpanningTree tree) : tree_(std::move(tree)) {}

  void add(ModelPerturbation term, double lambda) { entries_.push_back({std::move(term), lambda}); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  bool empty() const { return entries_.empty(); }
  const SpanningTree& tree() const { return tree_; }

  double value(const Connection& a) const;
  TangentField gradient(const Connection& a, const SpanningTree& tree) const;
  /// Central differences of the analytic gradient; zero when every term is
  /// outside its support.
  Eigen::MatrixXd hessian(const Connection& a, const SpanningTree& tree) const;

  /// ||V|| = sum C_l |lambda_l|.
  double norm() const;

  /// Concatenation of two banks over the same tree.
  PerturbationBank concatenated(const PerturbationBank& other) const;

  long not_in_domain_count() const { return not_in_domain_->load(); }

 private:
  SpanningTree tree_;
  std::vector<Entry> entries_;
  std::shared_ptr<std::atomic<long>> not_in_domain_ = std::make_shared<std::atomic<long>>(0);
};

/// Empirical surrogate for the analytic sup bounds: twice the maximum of
/// |V_l|, ||grad V_l|| and ||grad V_l|| / (1 + ||F||) over Haar samples and
/// samples inside the support ball, floored at 1e-12.
double estimate_constant(const ModelPerturbation& term, const SpanningTree& tree, int sample_count,
                         std::mt19937_64& rng);

/// True iff every term with lambda != 0 has its support ball at slice
/// distance more than 2/k + epsilon from every critical representative.
bool is_admissible(const PerturbationBank& bank, const std::vector<Connection>& critical_representatives,
                   double epsilon);

}  // namespace ymmb
