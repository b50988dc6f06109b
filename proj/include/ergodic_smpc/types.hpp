#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ergodic_smpc {

/// Point in the state space R^d. Finiteness is enforced at the boundaries
/// that produce states (steppers, parsers), not by the type.
using StateVector = Eigen::VectorXd;
using ControlVector = Eigen::VectorXd;
/// Realisation t of a continuously indexed IFS.
using Parameter = Eigen::VectorXd;

/// Map index of a discrete IFS step, or the parameter of a continuous one.
using Selection = std::variant<std::size_t, Parameter>;

struct Trajectory {
  std::vector<StateVector> states;  // n_steps + 1 entries, states[0] = x0
  std::uint64_t seed = 0;
  std::vector<Selection> selections;  // selections[k] produced states[k + 1]

  std::size_t dimension() const { return states.empty() ? 0 : static_cast<std::size_t>(states.front().size()); }
  std::size_t n_steps() const { return states.empty() ? 0 : states.size() - 1; }
};

inline bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) { return v.allFinite(); }

inline StateVector scalar_state(double x) { return StateVector::Constant(1, x); }

}  // namespace ergodic_smpc
