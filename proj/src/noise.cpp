#include "parampkit/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "parampkit/units.hpp"

namespace parampkit {

void NoiseChain::validate() const {
    if (!(insertion_loss > 0.0) || insertion_loss > 1.0) {
        throw std::invalid_argument("insertion loss lambda must lie in (0, 1]");
    }
    for (double t : {stage_temp_k, hemt_temp_k, paramp_noise_k, source_noise_k}) {
        if (t < 0.0) throw std::invalid_argument("chain temperatures must be >= 0");
    }
}

void PSDTrace::validate() const {
    if (offset_hz.size() != psd_dbm_hz.size()) {
        throw std::invalid_argument("PSD trace arrays differ in length");
    }
    if (offset_hz.size() < 8) throw std::invalid_argument("PSD trace needs at least 8 bins");
    const double step = offset_hz[1] - offset_hz[0];
    if (!(step > 0.0)) throw std::invalid_argument("PSD offsets must be increasing");
    for (size_t i = 1; i < offset_hz.size(); ++i) {
        const double d = offset_hz[i] - offset_hz[i - 1];
        if (std::abs(d - step) > 1e-6 * step) {
            throw std::invalid_argument("PSD offset grid must be uniform");
        }
    }
}

double PSDTrace::bin_width_hz() const { return offset_hz[1] - offset_hz[0]; }

InputNoiseResult psd_to_input_temperature(const PSDTrace& trace, int exclude_bins) {
    trace.validate();
    const size_t n = trace.offset_hz.size();

    const size_t pilot_bin = static_cast<size_t>(std::distance(
        trace.psd_dbm_hz.begin(), std::max_element(trace.psd_dbm_hz.begin(), trace.psd_dbm_hz.end())));

    std::vector<double> floor_bins;
    floor_bins.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (std::llabs(static_cast<long long>(i) - static_cast<long long>(pilot_bin)) <=
            exclude_bins) {
            continue;
        }
        floor_bins.push_back(trace.psd_dbm_hz[i]);
    }
    if (floor_bins.size() < 2) throw std::invalid_argument("too few bins outside the pilot region");

    std::nth_element(floor_bins.begin(), floor_bins.begin() + floor_bins.size() / 2,
                     floor_bins.end());
    const double floor_dbm_hz = floor_bins[floor_bins.size() / 2];

    if (trace.psd_dbm_hz[pilot_bin] - floor_dbm_hz < 10.0) {
        throw std::runtime_error("pilot tone not found at least 10 dB above the noise floor");
    }
    // Pilot power collected in its bin, with the broadband floor removed.
    const double pilot_out_w =
        (dbm_to_watt(trace.psd_dbm_hz[pilot_bin]) - dbm_to_watt(floor_dbm_hz)) *
        trace.bin_width_hz();
    const double chain_gain_db = watt_to_dbm(pilot_out_w) - trace.pilot_power_dbm;

    const auto to_temp = [&](double psd_dbm) {
        const double input_dbm_hz = psd_dbm - chain_gain_db;
        return dbm_to_watt(input_dbm_hz) / phys::boltzmann;  // W/Hz -> K
    };

    InputNoiseResult out;
    out.pilot_bin = pilot_bin;
    out.chain_gain_db = chain_gain_db;
    out.floor_temp_k = to_temp(floor_dbm_hz);
    for (size_t i = 0; i < n; ++i) {
        if (std::llabs(static_cast<long long>(i) - static_cast<long long>(pilot_bin)) <=
            exclude_bins) {
            continue;
        }
        out.offset_hz.push_back(trace.offset_hz[i]);
        out.temp_k.push_back(to_temp(trace.psd_dbm_hz[i]));
    }
    return out;
}

double input_referred_photons(double temp_k, double freq_ghz) {
    if (!(freq_ghz > 0.0)) throw std::invalid_argument("frequency must be > 0");
    return phys::boltzmann * temp_k / (phys::planck * freq_ghz * 1e9);
}

double temperature_from_photons(double photons, double freq_ghz) {
    if (!(freq_ghz > 0.0)) throw std::invalid_argument("frequency must be > 0");
    return photons * phys::planck * freq_ghz * 1e9 / phys::boltzmann;
}

QuantumLimit quantum_limit(double freq_ghz) {
    QuantumLimit q;
    q.temp_k = temperature_from_photons(q.total_photons, freq_ghz);
    return q;
}

double delta_snr_db(double floor_on_k, double floor_off_k) {
    if (!(floor_on_k > 0.0) || !(floor_off_k > 0.0)) {
        throw std::invalid_argument("noise floors must be > 0");
    }
    return linear_to_db(floor_off_k / floor_on_k);
}

ReferredNoise refer_through_attenuator(const NoiseChain& chain) {
    chain.validate();
    const double lam = chain.insertion_loss;
    const double g0 = db_to_linear(chain.paramp_gain_db);
    if (!(g0 > 0.0)) throw std::invalid_argument("paramp gain must be positive");

    ReferredNoise out;
    out.source_term_k = chain.source_noise_k;
    out.attenuator_term_k = (1.0 - lam) / lam * chain.stage_temp_k;
    out.paramp_term_k = chain.paramp_noise_k / lam;
    out.hemt_term_k = chain.hemt_temp_k / (lam * g0);
    out.t_in_k = out.source_term_k + out.attenuator_term_k + out.paramp_term_k + out.hemt_term_k;
    return out;
}

ReferredNoise refer_through_attenuator(const NoiseChain& chain, double t_out_k) {
    chain.validate();
    if (!(t_out_k >= 0.0)) throw std::invalid_argument("output temperature must be >= 0");
    ReferredNoise out = refer_through_attenuator(chain);
    const double denom = chain.insertion_loss * db_to_linear(chain.paramp_gain_db) *
                         db_to_linear(chain.hemt_gain_db);
    out.t_in_k = t_out_k / denom;
    return out;
}

double solve_insertion_loss_db(const NoiseChain& chain, double t_in_k) {
    if (!(t_in_k > 0.0)) throw std::invalid_argument("input temperature must be > 0");
    const double g0 = db_to_linear(chain.paramp_gain_db);
    // T_in = T_s - T_Th + (T_Th + T_gr + T_H/G0) / lambda.
    const double numerator = chain.stage_temp_k + chain.paramp_noise_k + chain.hemt_temp_k / g0;
    const double denominator = t_in_k - chain.source_noise_k + chain.stage_temp_k;
    const double lam = numerator / denominator;
    if (!(lam > 0.0) || lam > 1.0) {
        throw std::runtime_error("inconsistent chain: solved insertion loss outside (0, 1]");
    }
    return -linear_to_db(lam);
}

}  // namespace parampkit
