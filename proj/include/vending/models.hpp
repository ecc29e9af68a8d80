#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "vending/prob.hpp"

namespace vending {

// Per-letter distortion d(x, xhat) >= 0. D_max is the table maximum.
struct DistortionTable {
  FiniteAlphabet source;
  FiniteAlphabet recon;
  Eigen::MatrixXd values;  // |source| x |recon|

  double d_max() const { return values.size() ? values.maxCoeff() : 0.0; }

  static DistortionTable hamming(const FiniteAlphabet& source, const FiniteAlphabet& recon);
};

// Per-action cost Lambda(a) >= 0. Lambda_max is the table maximum.
struct CostTable {
  FiniteAlphabet action;
  Eigen::VectorXd values;

  double lambda_max() const { return values.size() ? values.maxCoeff() : 0.0; }

  static CostTable zero(const FiniteAlphabet& action);
};

// Node 1 sees (X, Y), Node 2 sees Y, Node 3 measures Z through the
// vending machine p(z | a, y).
struct CascadeVendingModel {
  FiniteAlphabet x, y, z, a, x1, x2;
  JointPmf source;        // over (X, Y)
  CondKernel vm_channel;  // (A, Y) -> Z
  DistortionTable d1;     // X x X1
  DistortionTable d2;     // X x X2
  CostTable cost;         // over A
};

// The vending machine p(y | a, x) sits at Node 2; reconstructions are
// common (reproducible at Node 1).
struct BroadcastCRModel {
  FiniteAlphabet x, y, a, x1, x2;
  JointPmf source;        // over (X)
  CondKernel vm_channel;  // (A, X) -> Y
  DistortionTable d1;     // X x X1
  DistortionTable d2;     // X x X2
  CostTable cost;         // over A
};

struct ConstraintBudget {
  double d1 = 0.0;
  double d2 = 0.0;
  double gamma = 0.0;
};

struct Violation {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_model(const CascadeVendingModel& m);
ValidationReport validate_model(const BroadcastCRModel& m);
ValidationReport validate_budget(const ConstraintBudget& b);

// E[d(S, R)] under the (S, R) marginal of j.
double expected_distortion(const JointPmf& j, const DistortionTable& table, const std::string& source_axis,
                           const std::string& recon_axis);

// E[Lambda(A)] under the A marginal of j.
double expected_cost(const JointPmf& j, const CostTable& cost, const std::string& action_axis);

}  // namespace vending
