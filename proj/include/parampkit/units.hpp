#pragma once

#include <cmath>

namespace parampkit {

namespace phys {
// CODATA 2018 exact / derived values.
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double planck = 6.62607015e-34;     // J s
inline constexpr double electron_charge = 1.602176634e-19;  // C
inline constexpr double boltzmann = 1.380649e-23;    // J/K
inline constexpr double flux_quantum = planck / (2.0 * electron_charge);        // Wb
inline constexpr double resistance_quantum = hbar / (4.0 * electron_charge * electron_charge);  // Ohm
}  // namespace phys

inline constexpr double two_pi = 6.283185307179586476925286766559;

// Angular frequency (rad/s) from tabulated display units.
inline double ang_from_ghz(double f_ghz) { return two_pi * 1e9 * f_ghz; }
inline double ang_from_mhz(double f_mhz) { return two_pi * 1e6 * f_mhz; }
inline double ang_from_khz(double f_khz) { return two_pi * 1e3 * f_khz; }
inline double ghz_from_ang(double w) { return w / (two_pi * 1e9); }
inline double mhz_from_ang(double w) { return w / (two_pi * 1e6); }
inline double khz_from_ang(double w) { return w / (two_pi * 1e3); }

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

// Power ratios.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

inline double uev_to_joule(double uev) { return uev * 1e-6 * phys::electron_charge; }
inline double joule_to_uev(double j) { return j / (1e-6 * phys::electron_charge); }

}  // namespace parampkit
