#pragma once

// Feedback laws: the fidelity-gradient law u = -tr(i[H_f, rho] rho_d), the
// hysteresis switching controller built on it, the two-parameter reduction
// of the law, and constant open-loop inputs.

#include "qstab/core.hpp"
#include "qstab/superop.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace qstab {

/// -tr(i[H_f, rho] rho_d). Throws InvalidStateError if the trace is not real
/// to within 1e-12 (relative to the operand norms).
double continuous_law(const CMatrix& rho, const CMatrix& rho_d, const Operator& H_f);

/// Same law for a pure target |psi><psi|, evaluated as
/// 2 Im(<psi| H_f rho |psi>) with <psi| H_f cached. Used in the integrator.
class FidelityGradientLaw {
 public:
  FidelityGradientLaw() = default;
  FidelityGradientLaw(const CMatrix& rho_d, const Operator& H_f);

  double operator()(const CMatrix& rho) const;
  double fidelity(const CMatrix& rho) const;

 private:
  CVector psi_;
  Eigen::RowVectorXcd psi_h_;  // psi^dag H_f
  mutable CVector work_;
};

enum class Region { High, Low, Band };
enum class BandEntry { FromHigh, FromLow };

std::string to_string(Region r);
std::string to_string(BandEntry e);

/// Hysteresis memory. region is empty until the first observation.
struct SwitchingState {
  double gamma = 0.5;
  std::optional<Region> region;
  BandEntry band_entry = BandEntry::FromLow;

  explicit SwitchingState(double g = 0.5);
  /// "High", "Low", "Band:FromHigh", "Band:FromLow" or "" before the first step.
  std::string label() const;
};

/// Region update for an observed fidelity. Pure function of its inputs.
SwitchingState next_switching_state(double fidelity, const SwitchingState& prev);

/// True when the state dictates the fidelity-gradient law, false for u = 1.
bool uses_gradient_law(const SwitchingState& s);

/// One step of the switching law: updates the region for tr(rho rho_d) and
/// returns the control of the new region.
std::pair<double, SwitchingState> switching_controller(const CMatrix& rho,
                                                       const SwitchingState& state,
                                                       const CMatrix& rho_d,
                                                       const Operator& H_f);

/// Law specialised to the S (+) C (+) Z block form where H_f only couples S
/// and C: u = 2 Im(H_{f,U} conj(rho_U)). rho_S selects the switching region
/// and does not enter the value.
double reduced_law(double rho_S, cplx rho_U, cplx H_fU);

enum class ControllerType { Constant, Continuous, Switching };

std::string to_string(ControllerType t);
ControllerType controller_type_from_string(std::string_view s);

struct ControllerSpec {
  ControllerType type = ControllerType::Constant;
  double gamma = 0.5;
  double value = 0.0;

  bool operator==(const ControllerSpec&) const = default;
};

struct ConstantController {
  double value = 0.0;
  double operator()(const CMatrix&) const { return value; }
};

struct ContinuousController {
  FidelityGradientLaw law;
  double operator()(const CMatrix& rho) const { return law(rho); }
};

struct SwitchingController {
  FidelityGradientLaw law;
  SwitchingState state;
  double operator()(const CMatrix& rho);
};

/// Per-trajectory controller instance; copy one per trajectory.
using Controller = std::variant<ConstantController, ContinuousController, SwitchingController>;

inline ConstantController constant_controller(double value) { return {value}; }

Controller make_controller(const ControllerSpec& spec, const ControlModel& model);

/// Control for the current state (advances switching memory).
double evaluate(Controller& c, const CMatrix& rho);

/// Region label after the last evaluation ("" for non-switching controllers).
std::string region_label(const Controller& c);

}  // namespace qstab
