#include "qstab/control.hpp"

#include <cmath>
#include <stdexcept>

namespace qstab {

namespace {

const cplx kI(0.0, 1.0);

CVector pure_vector(const CMatrix& rho_d) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho_d + rho_d.adjoint()));
  const Eigen::Index top = rho_d.rows() - 1;  // eigenvalues ascend
  return es.eigenvectors().col(top);
}

}  // namespace

double continuous_law(const CMatrix& rho, const CMatrix& rho_d, const Operator& H_f) {
  if (rho.rows() != H_f.rows() || rho_d.rows() != H_f.rows()) {
    throw DimensionError("continuous_law: dimension mismatch");
  }
  const CMatrix comm = kI * (H_f * rho - rho * H_f);
  const cplx value = -trace_product(comm, rho_d);
  const double scale = std::max(1.0, H_f.norm() * rho.norm() * rho_d.norm());
  if (std::abs(value.imag()) > 1e-12 * scale) {
    throw InvalidStateError("continuous_law: non-real control, inputs are not Hermitian");
  }
  return value.real();
}

FidelityGradientLaw::FidelityGradientLaw(const CMatrix& rho_d, const Operator& H_f)
    : psi_(pure_vector(rho_d)),
      psi_h_(psi_.adjoint() * H_f),
      work_(rho_d.rows()) {}

double FidelityGradientLaw::operator()(const CMatrix& rho) const {
  work_.noalias() = rho * psi_;
  const cplx v = psi_h_ * work_;
  return 2.0 * v.imag();
}

double FidelityGradientLaw::fidelity(const CMatrix& rho) const {
  work_.noalias() = rho * psi_;
  return psi_.dot(work_).real();
}

std::string to_string(Region r) {
  switch (r) {
    case Region::High: return "High";
    case Region::Low: return "Low";
    case Region::Band: return "Band";
  }
  return "unknown";
}

std::string to_string(BandEntry e) {
  return e == BandEntry::FromHigh ? "FromHigh" : "FromLow";
}

SwitchingState::SwitchingState(double g) : gamma(g) {
  if (!(g > 0.0 && g < 1.0)) {
    throw std::invalid_argument("switching gamma must lie in (0, 1)");
  }
}

std::string SwitchingState::label() const {
  if (!region) return "";
  if (*region == Region::Band) return "Band:" + to_string(band_entry);
  return to_string(*region);
}

SwitchingState next_switching_state(double fidelity, const SwitchingState& prev) {
  SwitchingState next = prev;
  if (fidelity >= prev.gamma) {
    next.region = Region::High;
  } else if (fidelity <= 0.5 * prev.gamma) {
    next.region = Region::Low;
  } else {
    next.region = Region::Band;
    if (!prev.region) {
      next.band_entry = BandEntry::FromLow;
    } else if (*prev.region == Region::High) {
      next.band_entry = BandEntry::FromHigh;
    } else if (*prev.region == Region::Low) {
      next.band_entry = BandEntry::FromLow;
    }
  }
  return next;
}

bool uses_gradient_law(const SwitchingState& s) {
  if (!s.region) return false;
  switch (*s.region) {
    case Region::High: return true;
    case Region::Low: return false;
    case Region::Band: return s.band_entry == BandEntry::FromHigh;
  }
  return false;
}

std::pair<double, SwitchingState> switching_controller(const CMatrix& rho,
                                                       const SwitchingState& state,
                                                       const CMatrix& rho_d,
                                                       const Operator& H_f) {
  const double fid = trace_product_real(rho, rho_d);
  SwitchingState next = next_switching_state(fid, state);
  const double u = uses_gradient_law(next) ? continuous_law(rho, rho_d, H_f) : 1.0;
  return {u, next};
}

double reduced_law(double /*rho_S*/, cplx rho_U, cplx H_fU) {
  return 2.0 * (H_fU * std::conj(rho_U)).imag();
}

std::string to_string(ControllerType t) {
  switch (t) {
    case ControllerType::Constant: return "constant";
    case ControllerType::Continuous: return "continuous";
    case ControllerType::Switching: return "switching";
  }
  return "unknown";
}

ControllerType controller_type_from_string(std::string_view s) {
  if (s == "constant") return ControllerType::Constant;
  if (s == "continuous") return ControllerType::Continuous;
  if (s == "switching") return ControllerType::Switching;
  throw std::invalid_argument("unknown controller type '" + std::string(s) + "'");
}

double SwitchingController::operator()(const CMatrix& rho) {
  state = next_switching_state(law.fidelity(rho), state);
  return uses_gradient_law(state) ? law(rho) : 1.0;
}

Controller make_controller(const ControllerSpec& spec, const ControlModel& model) {
  switch (spec.type) {
    case ControllerType::Constant:
      return ConstantController{spec.value};
    case ControllerType::Continuous:
      return ContinuousController{FidelityGradientLaw(model.target(), model.H_f)};
    case ControllerType::Switching:
      return SwitchingController{FidelityGradientLaw(model.target(), model.H_f),
                                 SwitchingState(spec.gamma)};
  }
  throw std::invalid_argument("unknown controller type");
}

double evaluate(Controller& c, const CMatrix& rho) {
  return std::visit([&rho](auto& ctl) { return ctl(rho); }, c);
}

std::string region_label(const Controller& c) {
  if (const auto* sw = std::get_if<SwitchingController>(&c)) return sw->state.label();
  return "";
}

}  // namespace qstab
