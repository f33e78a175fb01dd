#pragma once

#include <vector>

namespace parampkit {

// Amplification-chain description for the effective-attenuator referral.
struct NoiseChain {
    double insertion_loss = 1.0;   // lambda, linear power ratio in (0, 1]
    double stage_temp_k = 0.0;     // attenuator bath T_Th
    double hemt_temp_k = 0.0;      // T_H
    double hemt_gain_db = 0.0;     // G_H
    double paramp_gain_db = 0.0;   // G0
    double paramp_noise_k = 0.0;   // T_gr
    double source_noise_k = 0.0;   // T_s accompanying the pilot

    void validate() const;
};

struct PSDTrace {
    std::vector<double> offset_hz;      // uniform grid of offsets from the pilot
    std::vector<double> psd_dbm_hz;
    double pilot_power_dbm = 0.0;       // calibrated power at the device input
    double pilot_freq_ghz = 0.0;

    void validate() const;
    double bin_width_hz() const;
};

struct InputNoiseResult {
    double floor_temp_k = 0.0;          // median input-referred floor
    double chain_gain_db = 0.0;
    size_t pilot_bin = 0;
    std::vector<double> offset_hz;      // pilot region excluded
    std::vector<double> temp_k;
};

// Converts a measured PSD to input-referred noise temperature using the pilot
// tone as the absolute power reference. The pilot bin (and exclude_bins
// neighbours on each side) is removed from the floor statistics.
InputNoiseResult psd_to_input_temperature(const PSDTrace& trace, int exclude_bins = 3);

// n = k_B T / (h f).
double input_referred_photons(double temp_k, double freq_ghz);
double temperature_from_photons(double photons, double freq_ghz);

// Quantum limit for phase-preserving amplification: one photon input-referred,
// half from vacuum fluctuations and half added by the idler.
struct QuantumLimit {
    double total_photons = 1.0;
    double vacuum_photons = 0.5;
    double added_photons = 0.5;
    double temp_k = 0.0;
};
QuantumLimit quantum_limit(double freq_ghz);

// SNR improvement from the pump-off/pump-on floor ratio.
double delta_snr_db(double floor_on_k, double floor_off_k);

struct ReferredNoise {
    double t_in_k = 0.0;
    double source_term_k = 0.0;      // T_s
    double attenuator_term_k = 0.0;  // (1-lambda)/lambda T_Th
    double paramp_term_k = 0.0;      // T_gr / lambda
    double hemt_term_k = 0.0;        // T_H / (lambda G0)
};

// T_in = T_s + ((1-lambda)/lambda) T_Th + T_gr/lambda + T_H/(lambda G0),
// with the individual contributions reported separately.
ReferredNoise refer_through_attenuator(const NoiseChain& chain);

// Same referral starting from the noise temperature measured at the chain
// output: T_in = T_out / (lambda G0 G_H).
ReferredNoise refer_through_attenuator(const NoiseChain& chain, double t_out_k);

// Inverse mode: insertion loss that reconciles a measured input-referred
// temperature with the rest of the chain. Returns lambda in dB (positive loss).
double solve_insertion_loss_db(const NoiseChain& chain_without_lambda, double t_in_k);

}  // namespace parampkit
