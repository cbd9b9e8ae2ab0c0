#ifndef VDW_OTOC_PRESETS_HPP
#define VDW_OTOC_PRESETS_HPP

// Named starting points for run configurations.  A configuration may name a
// preset and override any of its fields.

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace vdw_otoc::presets {

inline constexpr double hartree_in_inverse_cm = 219474.6313632;
inline constexpr double electron_masses_per_dalton = 1822.888486209;

// Rb ground-state dispersion coefficient (atomic units).
inline constexpr double rb_c6 = 4698.0;
// Well depth of the Rb2 X(1)Sigma_g+ state, 3993.53 cm^-1.
inline constexpr double rb2_depth = 3993.53 / hartree_in_inverse_cm;
// Reduced mass of 87Rb2: half of 86.909180527 u.
inline constexpr double rb87_2_reduced_mass = 0.5 * 86.909180527 * electron_masses_per_dalton;

// Lennard-Jones well with the Rb C6 and the Rb2 depth, 87Rb2 reduced mass.
inline nlohmann::json paper_lj() {
  return {
      {"potential", {{"kind", "lennard_jones"}, {"C6", rb_c6}, {"depth", rb2_depth}}},
      {"reduced_mass_au", rb87_2_reduced_mass},
      {"grid", {{"policy", "auto"}, {"N", 3000}}},
  };
}

// Unit oscillator centred at r = 10 (mu = omega = 1).
inline nlohmann::json harmonic() {
  return {
      {"potential", {{"kind", "harmonic"}, {"center", 10.0}, {"k", 1.0}}},
      {"reduced_mass_au", 1.0},
      {"grid", {{"policy", "explicit"}, {"a", 0.5}, {"b", 19.5}, {"N", 400},
                {"energy_ceiling", 20.0}}},
      {"otoc", {{"t_max", 4.0 * 3.141592653589793}, {"t_points", 400}}},
  };
}

inline std::optional<nlohmann::json> find(std::string_view name) {
  if (name == "paper-lj" || name == "paper_lj") return paper_lj();
  if (name == "harmonic") return harmonic();
  return std::nullopt;
}

}  // namespace vdw_otoc::presets

#endif  // VDW_OTOC_PRESETS_HPP
