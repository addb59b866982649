#pragma once

// Unit system used throughout the library:
//   capacitance  aF
//   energy       ueV
//   voltage      mV
//   temperature  K
//   length       nm

namespace qdarray::units {

inline constexpr double kElementaryCharge = 1.602176634e-19;  // C

/// e^2 / (1 aF) expressed in ueV.
inline constexpr double kE2PerAttofarad = kElementaryCharge / 1e-18 * 1e6;

/// Charge (in units of e) carried by 1 aF at 1 mV.
inline constexpr double kElectronsPerAttofaradMillivolt = 1e-21 / kElementaryCharge;

inline constexpr double kPlanckUeVPerGHz = 4.135667696;  // h in ueV/GHz
inline constexpr double kBoltzmannUeVPerK = 86.173303;   // k_B in ueV/K

/// Vacuum permittivity in aF/nm.
inline constexpr double kVacuumPermittivity = 8.8541878128e-3;

inline constexpr double ueV_to_GHz(double e) { return e / kPlanckUeVPerGHz; }
inline constexpr double GHz_to_ueV(double f) { return f * kPlanckUeVPerGHz; }
inline constexpr double kelvin_to_ueV(double t) { return t * kBoltzmannUeVPerK; }

}  // namespace qdarray::units
