#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "parampkit/config.hpp"
#include "parampkit/csv.hpp"
#include "parampkit/field.hpp"
#include "parampkit/fit.hpp"
#include "parampkit/material.hpp"
#include "parampkit/noise.hpp"
#include "parampkit/pump.hpp"
#include "parampkit/report.hpp"
#include "parampkit/synth.hpp"
#include "parampkit/units.hpp"

namespace fs = std::filesystem;
using namespace parampkit;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    uint64_t seed = 1;
    std::string format = "csv";
};

int g_exit_code = 0;

void note_warnings(const RunReport& report) {
    if (report.has_warnings() && g_exit_code == 0) g_exit_code = 2;
}

fs::path out_file(const CommonArgs& common, const std::string& name) {
    fs::create_directories(common.out_dir);
    return fs::path(common.out_dir) / name;
}

GridSpec parse_grid(const std::string& spec) {
    GridSpec g;
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw std::runtime_error("grid must be 'lo:hi:n', got '" + spec + "'");
    }
    g.lo = std::stod(spec.substr(0, c1));
    g.hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    g.n = std::stoi(spec.substr(c2 + 1));
    if (g.n < 1) throw std::runtime_error("grid needs at least one point");
    return g;
}

ReflectionTrace trace_from_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    ReflectionTrace trace;
    trace.freqs_ghz = t.column("freq_GHz");
    const auto re = t.column("re_s11");
    const auto im = t.column("im_s11");
    for (size_t i = 0; i < re.size(); ++i) trace.s11.emplace_back(re[i], im[i]);
    trace.validate();
    return trace;
}

void cmd_design(const CommonArgs& common) {
    const DeviceConfig cfg = parse_config(common.config_path);
    RunReport report("design");
    report.add_input("config", common.config_path);

    if (cfg.film && cfg.film->gap_uev) {
        report.set_result("sheet_inductance_nH", sheet_inductance_nh(*cfg.film));
    }
    if (cfg.strip) {
        report.set_result("strip_squares", cfg.strip->squares());
        report.set_result("strip_inductance_nH", cfg.strip->inductance_nh());
    }
    const DimerSpec& dimer = cfg.require_dimer();
    report.set_result("participation_left", dimer.left.participation());
    report.set_result("participation_right", dimer.right.participation());
    if (cfg.strip) {
        report.set_result("kerr_model_left_kHz",
                          jj_array_kerr_khz(dimer.left.strip, dimer.left.frequency_ghz));
        report.set_result("kerr_model_right_kHz",
                          jj_array_kerr_khz(dimer.right.strip, dimer.right.frequency_ghz));
    }

    const HybridModes modes = hybridize(dimer);
    report.set_result("freq_plus_GHz", modes.freq_plus_ghz);
    report.set_result("freq_minus_GHz", modes.freq_minus_ghz);
    report.set_result("kappa_plus_MHz", modes.kappa_plus_mhz);
    report.set_result("kappa_minus_MHz", modes.kappa_minus_mhz);
    report.set_result("kappa_eq_MHz", modes.kappa_eq_mhz);
    report.set_result("asymmetry", modes.asymmetry);

    const DesignReport check = design_check(dimer);
    report.set_result("design_pass", check.pass());
    for (const auto& w : check.warnings()) report.add_warning(w);

    report.write(out_file(common, "design_summary.json").string());
    std::cout << report.to_json();
    note_warnings(report);
}

void cmd_hybridize(const CommonArgs& common, bool invert, const std::vector<double>& measured) {
    RunReport report("hybridize");
    if (invert) {
        if (measured.size() != 4) {
            throw std::runtime_error("--measured needs f+ f- k+ k- (GHz GHz MHz MHz)");
        }
        const DimerCore core = dehybridize(measured[0], measured[1], measured[2], measured[3]);
        report.set_result("omega_left_GHz", core.omega_left_ghz);
        report.set_result("omega_right_GHz", core.omega_right_ghz);
        report.set_result("hopping_MHz", core.hopping_mhz);
        report.set_result("kappa_MHz", core.kappa_mhz);
    } else {
        const DeviceConfig cfg = parse_config(common.config_path);
        report.add_input("config", common.config_path);
        const HybridModes modes = hybridize(cfg.require_dimer());
        report.set_result("freq_plus_GHz", modes.freq_plus_ghz);
        report.set_result("freq_minus_GHz", modes.freq_minus_ghz);
        report.set_result("kappa_plus_MHz", modes.kappa_plus_mhz);
        report.set_result("kappa_minus_MHz", modes.kappa_minus_mhz);
        report.set_result("kappa_eq_MHz", modes.kappa_eq_mhz);
        report.set_result("asymmetry", modes.asymmetry);
    }
    report.write(out_file(common, "hybridize_summary.json").string());
    std::cout << report.to_json();
}

void cmd_gain(const CommonArgs& common, std::optional<double> pump_freq,
              std::optional<double> pump_power, std::optional<double> target_g0,
              const std::string& grid_spec) {
    const DeviceConfig cfg = parse_config(common.config_path);
    const DimerSpec& dimer = cfg.require_dimer();

    PumpDrive drive;
    if (target_g0) {
        const OperatingPoint op = calibrate_pump(dimer, *target_g0, pump_freq);
        drive = op.drive;
    } else {
        if (!pump_freq || !pump_power) {
            throw std::runtime_error("gain needs --pump-freq and --pump-power, or --target-g0");
        }
        drive = PumpDrive{*pump_freq, *pump_power};
    }

    const GridSpec grid = parse_grid(grid_spec);
    const GainProfile profile = gain_profile(dimer, drive, grid.values());

    CsvTable t;
    t.columns = {"freq_GHz", "gain_dB"};
    for (size_t i = 0; i < profile.signal_freqs_ghz.size(); ++i) {
        t.rows.push_back({profile.signal_freqs_ghz[i], profile.gain_db[i]});
    }
    write_csv(out_file(common, "gain_profile.csv").string(), t);

    RunReport report("gain");
    report.add_input("config", common.config_path);
    report.set_result("pump_freq_GHz", drive.frequency_ghz);
    report.set_result("pump_power_dBm", drive.power_dbm);
    report.set_result("g0_db", profile.fitted_g0_db);
    report.set_result("bw_mhz", profile.fitted_bw_mhz);
    report.set_result("center_ghz", profile.fitted_center_ghz);
    report.set_result("product_mhz", profile.product_mhz());
    if (!profile.fit_ok) report.add_warning("lorentzian fit failed: " + profile.fit_message);
    report.write(out_file(common, "gain_summary.json").string());
    std::cout << report.to_json();
    note_warnings(report);
}

void cmd_saturate(const CommonArgs& common, double g0, std::optional<double> pump_freq) {
    const DeviceConfig cfg = parse_config(common.config_path);
    const DimerSpec& dimer = cfg.require_dimer();

    const OperatingPoint op = calibrate_pump(dimer, g0, pump_freq);
    const CompressionResult comp =
        compression_point(dimer, op.drive, op.peak_freq_ghz, op.g0_db);

    RunReport report("saturate");
    report.add_input("config", common.config_path);
    report.set_result("pump_freq_GHz", op.drive.frequency_ghz);
    report.set_result("pump_power_dBm", op.drive.power_dbm);
    report.set_result("g0_db", op.g0_db);
    report.set_result("signal_freq_GHz", comp.signal_freq_ghz);
    report.set_result("p1db_dbm", comp.p1db_dbm);
    report.write(out_file(common, "saturate_summary.json").string());
    std::cout << report.to_json();
}

void cmd_opmap(const CommonArgs& common, const std::string& pfreq_spec,
               const std::string& ppow_spec, int threads) {
    const DeviceConfig cfg = parse_config(common.config_path);
    const DimerSpec& dimer = cfg.require_dimer();
    const OpMap map =
        operational_region(dimer, parse_grid(pfreq_spec), parse_grid(ppow_spec), 20.0, threads);

    CsvTable t;
    t.columns = {"pfreq_GHz", "ppow_dBm", "g0_dB", "multistable"};
    for (const auto& cell : map.cells) {
        t.rows.push_back({cell.pump_freq_ghz, cell.pump_power_dbm,
                          cell.ok && cell.stable_branch ? cell.g0_db : 0.0,
                          cell.multistable ? 1.0 : 0.0});
    }
    write_csv(out_file(common, "opmap.csv").string(), t);

    RunReport report("opmap");
    report.add_input("config", common.config_path);
    report.set_result("ridge_cells", static_cast<double>(map.ridge_cells));
    report.set_result("tunability_mhz", map.ridge_tunability_mhz);
    report.write(out_file(common, "opmap_summary.json").string());
    std::cout << report.to_json();
}

void cmd_field(const CommonArgs& common, const std::string& fit_csv, double b_max, int n) {
    const DeviceConfig cfg = parse_config(common.config_path);
    RunReport report("field");
    report.add_input("config", common.config_path);

    if (!fit_csv.empty()) {
        const CsvTable data = read_csv(fit_csv);
        report.add_input("data", fit_csv);
        const auto b = data.column("b_par_T");
        const auto f = data.column("freq_GHz");
        std::vector<std::pair<double, double>> pairs;
        for (size_t i = 0; i < b.size(); ++i) pairs.emplace_back(b[i], f[i]);
        const CriticalFieldFit fit = fit_critical_field(pairs);
        report.set_result("b_c_T", fit.critical_field_t);
        report.set_result("sigma_b_c_T", fit.sigma_critical_field_t);
        report.set_result("f0_GHz", fit.zero_field_frequency_ghz);
        report.set_result("sigma_f0_GHz", fit.sigma_zero_field_frequency_ghz);
        report.set_result("residual_norm", fit.residual_norm);
    } else {
        const FieldModel& model = cfg.require_field();
        CsvTable t;
        const bool have_kappa = !cfg.kappa_vs_field.empty();
        t.columns = have_kappa ? std::vector<std::string>{"b_par_T", "freq_GHz", "gap_ueV",
                                                          "kappa_MHz"}
                               : std::vector<std::string>{"b_par_T", "freq_GHz", "gap_ueV"};
        for (int i = 0; i < n; ++i) {
            const double b = b_max * i / std::max(n - 1, 1);
            std::vector<double> row = {b, freq_vs_field_ghz(model, b), gap_vs_field_uev(model, b)};
            if (have_kappa) row.push_back(cfg.kappa_vs_field.kappa_mhz_at(b));
            t.rows.push_back(std::move(row));
        }
        write_csv(out_file(common, "field_response.csv").string(), t);
        report.set_result("points", static_cast<double>(n));
    }
    report.write(out_file(common, "field_summary.json").string());
    std::cout << report.to_json();
}

void cmd_align(const CommonArgs& common, const std::string& sweeps_csv) {
    const CsvTable data = read_csv(sweeps_csv);
    const auto b_par = data.column("b_par_T");
    const auto b_perp = data.column("b_perp_mT");
    const auto phase = data.column("dphase_rad");

    std::vector<CompensationSweep> sweeps;
    for (size_t i = 0; i < b_par.size(); ++i) {
        if (sweeps.empty() || sweeps.back().b_par_t != b_par[i]) {
            sweeps.push_back(CompensationSweep{b_par[i], {}, {}});
        }
        sweeps.back().b_perp_mt.push_back(b_perp[i]);
        sweeps.back().dphase_rad.push_back(phase[i]);
    }
    const CompensationResult result = compensation_analysis(sweeps);

    CsvTable t;
    t.columns = {"b_par_T", "vertex_mT", "usable"};
    for (const auto& v : result.vertices) {
        t.rows.push_back({v.b_par_t, v.vertex_mt, v.usable ? 1.0 : 0.0});
    }
    write_csv(out_file(common, "align_vertices.csv").string(), t);

    RunReport report("align");
    report.add_input("sweeps", sweeps_csv);
    report.set_result("slope_mT_per_T", result.slope_mt_per_t);
    report.set_result("misalignment_deg", result.misalignment_deg);
    report.set_result("excluded_sweeps", static_cast<double>(result.excluded));
    for (const auto& v : result.vertices) {
        if (!v.usable) {
            report.add_warning("sweep at B_par = " + std::to_string(v.b_par_t) + " T excluded: " +
                               std::string(v.reason()));
        }
    }
    report.write(out_file(common, "align_summary.json").string());
    std::cout << report.to_json();
    note_warnings(report);
}

PSDTrace psd_from_csv(const std::string& path, double pilot_dbm, double pilot_ghz) {
    const CsvTable t = read_csv(path);
    PSDTrace trace;
    trace.offset_hz = t.column("offset_Hz");
    trace.psd_dbm_hz = t.column("psd_dBm_per_Hz");
    trace.pilot_power_dbm = pilot_dbm;
    trace.pilot_freq_ghz = pilot_ghz;
    trace.validate();
    return trace;
}

void cmd_noise(const CommonArgs& common, const std::string& psd_on, const std::string& psd_off,
               double pilot_dbm, double pilot_ghz) {
    const InputNoiseResult on =
        psd_to_input_temperature(psd_from_csv(psd_on, pilot_dbm, pilot_ghz));
    const InputNoiseResult off =
        psd_to_input_temperature(psd_from_csv(psd_off, pilot_dbm, pilot_ghz));

    CsvTable t;
    t.columns = {"offset_Hz", "t_in_K", "n_in"};
    for (size_t i = 0; i < on.offset_hz.size(); ++i) {
        t.rows.push_back({on.offset_hz[i], on.temp_k[i],
                          input_referred_photons(on.temp_k[i], pilot_ghz)});
    }
    write_csv(out_file(common, "noise_spectrum.csv").string(), t);

    RunReport report("noise");
    report.add_input("psd_on", psd_on);
    report.add_input("psd_off", psd_off);
    const QuantumLimit ql = quantum_limit(pilot_ghz);
    report.set_result("t_on_K", on.floor_temp_k);
    report.set_result("t_off_K", off.floor_temp_k);
    report.set_result("n_in", input_referred_photons(on.floor_temp_k, pilot_ghz));
    report.set_result("n_off", input_referred_photons(off.floor_temp_k, pilot_ghz));
    report.set_result("delta_snr_db", delta_snr_db(on.floor_temp_k, off.floor_temp_k));
    report.set_result("quantum_limit_K", ql.temp_k);
    report.set_result("quantum_limit_vacuum_photons", ql.vacuum_photons);
    report.set_result("quantum_limit_added_photons", ql.added_photons);
    report.write(out_file(common, "noise_summary.json").string());
    std::cout << report.to_json();
}

void cmd_fit_circle(const CommonArgs& common, const std::string& trace_csv, double fano) {
    const CircleFitResult fit = circle_fit(trace_from_csv(trace_csv), fano);
    RunReport report("fit-circle");
    report.add_input("trace", trace_csv);
    report.set_result("f_r_GHz", fit.f_r_ghz);
    report.set_result("q_loaded", fit.q_loaded);
    report.set_result("q_c", fit.q_c);
    report.set_result("q_i", fit.q_i);
    report.set_result("sigma_q_i", fit.sigma_q_i);
    report.set_result("q_i_lower_bound", fit.q_i_lower_bound);
    report.set_result("q_i_upper_bound", fit.q_i_upper_bound);
    report.set_result("residual_norm", fit.residual_norm);
    if (fit.overcoupled) {
        report.add_warning("mode is overcoupled: Q_i is a lower bound with Fano inflation");
    }
    report.write(out_file(common, "fit_circle_summary.json").string());
    std::cout << report.to_json();
    note_warnings(report);
}

void cmd_fit_gain(const CommonArgs& common, const std::string& trace_csv) {
    const CsvTable t = read_csv(trace_csv);
    const auto fit = lorentzian_fit(t.column("freq_GHz"), t.column("gain_dB"));
    RunReport report("fit-gain");
    report.add_input("trace", trace_csv);
    report.set_result("g0_db", fit.g0_db);
    report.set_result("bw_mhz", fit.bw_mhz);
    report.set_result("center_ghz", fit.center_ghz);
    report.set_result("product_mhz", std::sqrt(db_to_linear(fit.g0_db)) * fit.bw_mhz);
    report.set_result("residual_norm", fit.residual_norm);
    report.write(out_file(common, "fit_gain_summary.json").string());
    std::cout << report.to_json();
}

void cmd_fit_fluorescence(const CommonArgs& common, const std::string& trace_csv,
                          double kappa_mhz, double gamma_mhz, double fge_ghz) {
    const auto fit = fluorescence_fit(trace_from_csv(trace_csv), kappa_mhz, gamma_mhz, fge_ghz);
    RunReport report("fit-fluorescence");
    report.add_input("trace", trace_csv);
    report.set_result("rabi_mhz", fit.rabi_mhz);
    report.set_result("sigma_rabi_mhz", fit.sigma_rabi_mhz);
    report.set_result("residual_norm", fit.residual_norm);
    report.write(out_file(common, "fit_fluorescence_summary.json").string());
    std::cout << report.to_json();
}

void cmd_attenuation_line(const CommonArgs& common, const std::string& points_csv,
                          double predict_ghz) {
    const CsvTable t = read_csv(points_csv);
    std::vector<AttenuationPoint> points;
    const auto f = t.column("freq_GHz");
    const auto a = t.column("attenuation_dB");
    const auto s = t.column("sigma_dB");
    for (size_t i = 0; i < f.size(); ++i) points.push_back({f[i], a[i], s[i]});
    const AttenuationLine line = attenuation_vs_frequency(points);
    const auto pred = line.predict(predict_ghz);

    RunReport report("calibrate-attenuation --line");
    report.add_input("points", points_csv);
    report.set_result("intercept_db", line.intercept_db);
    report.set_result("slope_db_per_ghz", line.slope_db_per_ghz);
    report.set_result("predict_ghz", predict_ghz);
    report.set_result("predicted_db", pred.attenuation_db);
    report.set_result("predicted_sigma_db", pred.sigma_db);
    if (pred.extrapolated) {
        report.add_warning("prediction extrapolates beyond the calibrated frequency range");
    }
    report.write(out_file(common, "attenuation_line_summary.json").string());
    std::cout << report.to_json();
    note_warnings(report);
}

void cmd_calibrate_attenuation(const CommonArgs& common, const std::string& manifest_path,
                               double kappa_mhz, double gamma_mhz, double fge_ghz) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
    nlohmann::json manifest;
    in >> manifest;

    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<std::pair<double, double>> points;
    RunReport report("calibrate-attenuation");
    report.add_input("manifest", manifest_path);
    for (const auto& entry : manifest) {
        const std::string trace_file = entry.at("trace").get<std::string>();
        const double p_rt = entry.at("p_rt_dbm").get<double>();
        const fs::path trace_path = base / trace_file;
        const auto fit =
            fluorescence_fit(trace_from_csv(trace_path.string()), kappa_mhz, gamma_mhz, fge_ghz);
        points.emplace_back(p_rt, fit.rabi_mhz);
    }
    const auto fit = rabi_attenuation_fit(points, fge_ghz, kappa_mhz + gamma_mhz);
    report.set_result("attenuation_db", fit.attenuation_db);
    report.set_result("sigma_db", fit.sigma_db);
    report.set_result("points", static_cast<double>(points.size()));
    report.write(out_file(common, "attenuation_summary.json").string());
    std::cout << report.to_json();
}

void cmd_report(const CommonArgs& common, const std::string& summary_path) {
    std::ifstream in(summary_path);
    if (!in) throw std::runtime_error("cannot open summary: " + summary_path);
    nlohmann::ordered_json doc;
    in >> doc;
    if (!doc.contains("schema") || doc["schema"] != kReportSchema) {
        throw std::runtime_error("summary is not a " + std::string(kReportSchema) + " report");
    }
    if (common.format == "csv") {
        CsvTable t;
        t.columns = {"value"};
        std::cout << "key,value\n";
        for (const auto& [key, value] : doc["results"].items()) {
            std::cout << key << "," << value.dump() << "\n";
        }
    } else {
        std::cout << doc.dump(2) << "\n";
    }
    if (!doc["warnings"].empty()) g_exit_code = 2;
}

struct SynthArgs {
    double g0 = 20.0, bw = 2.25, center = 8.39, span = 40.0, noise = 0.0;
    double qi = 1e5, qc = 1e3, fr = 8.3, linewidths = 8.0;
    double kappa = 0.828, gamma = 0.155, fge = 8.287, attenuation = -89.3;
    double floor_k = 4.0, gain_db = 60.0, pilot_dbm = -120.0, pilot_ghz = 8.193;
    double binwidth = 1e3;
    double f0 = 8.31, bc = 3.0, bmax = 1.0;
    double slope = 1.0;
    int points = 401, bins = 801;
};

void cmd_synth_impl(const CommonArgs& common, const std::string& kind, const SynthArgs& a) {
    RunReport report("synth " + kind);
    if (kind == "circle") {
        CircleSynthParams p;
        p.f_r_ghz = a.fr;
        p.q_i = a.qi;
        p.q_c = a.qc;
        p.span_linewidths = a.linewidths;
        p.points = a.points;
        p.noise = a.noise;
        write_csv(out_file(common, "circle_trace.csv").string(), synth_circle(p, common.seed));
        report.set_result("file", std::string("circle_trace.csv"));
    } else if (kind == "lorentzian") {
        LorentzianSynthParams p;
        p.g0_db = a.g0;
        p.bw_mhz = a.bw;
        p.center_ghz = a.center;
        p.span_mhz = a.span;
        p.points = a.points;
        p.noise = a.noise;
        write_csv(out_file(common, "lorentzian_trace.csv").string(),
                  synth_lorentzian(p, common.seed));
        report.set_result("file", std::string("lorentzian_trace.csv"));
    } else if (kind == "fluorescence") {
        FluorescenceSynthParams p;
        p.f_ge_ghz = a.fge;
        p.kappa_mhz = a.kappa;
        p.gamma_mhz = a.gamma;
        p.attenuation_db = a.attenuation;
        p.points = a.points;
        p.noise = a.noise;
        const auto result = synth_fluorescence(p, common.seed);
        nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
        for (size_t i = 0; i < result.traces.size(); ++i) {
            const std::string name = "fluorescence_" + std::to_string(i) + ".csv";
            write_csv(out_file(common, name).string(), result.traces[i]);
            manifest.push_back({{"trace", name}, {"p_rt_dbm", result.p_rt_dbm[i]}});
        }
        std::ofstream m(out_file(common, "fluorescence_manifest.json"));
        m << manifest.dump(2) << "\n";
        report.set_result("traces", static_cast<double>(result.traces.size()));
        report.set_result("manifest", std::string("fluorescence_manifest.json"));
    } else if (kind == "psd") {
        PsdSynthParams p;
        p.floor_temp_k = a.floor_k;
        p.chain_gain_db = a.gain_db;
        p.pilot_power_dbm = a.pilot_dbm;
        p.pilot_freq_ghz = a.pilot_ghz;
        p.bins = a.bins;
        p.bin_width_hz = a.binwidth;
        p.noise_db = a.noise;
        write_csv(out_file(common, "psd_trace.csv").string(), synth_psd(p, common.seed));
        report.set_result("file", std::string("psd_trace.csv"));
    } else if (kind == "field-sweep") {
        FieldSweepSynthParams p;
        p.zero_field_frequency_ghz = a.f0;
        p.critical_field_t = a.bc;
        p.b_max_t = a.bmax;
        p.points = a.points;
        p.noise_rel = a.noise;
        write_csv(out_file(common, "field_sweep.csv").string(), synth_field_sweep(p, common.seed));
        report.set_result("file", std::string("field_sweep.csv"));
    } else if (kind == "compensation") {
        CompensationSynthParams p;
        p.vertex_slope_mt_per_t = a.slope;
        p.noise_rad = a.noise;
        write_csv(out_file(common, "compensation.csv").string(),
                  synth_compensation(p, common.seed));
        report.set_result("file", std::string("compensation.csv"));
    } else {
        throw std::runtime_error("unknown synth kind: " + kind);
    }
    report.set_result("seed", static_cast<double>(common.seed));
    report.write(out_file(common, "synth_summary.json").string());
    std::cout << report.to_json();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parampkit: kinetic-inductance dimer parametric amplifier toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonArgs common;
    app.add_option("--config", common.config_path, "device description file");
    app.add_option("--out", common.out_dir, "output directory");
    app.add_option("--seed", common.seed, "random seed for synthetic data");
    app.add_option("--format", common.format, "output format: csv|json");

    auto* design = app.add_subcommand("design", "material-to-dimer design checks");

    auto* hyb = app.add_subcommand("hybridize", "hybridization forward/inverse map");
    bool invert = false;
    std::vector<double> measured;
    hyb->add_flag("--invert", invert, "recover bare parameters from measured modes");
    hyb->add_option("--measured", measured, "f+ f- k+ k- (GHz GHz MHz MHz)")->expected(4);

    auto* gain = app.add_subcommand("gain", "driven gain profile");
    std::optional<double> pump_freq, pump_power, target_g0;
    std::string grid_spec = "8.33:8.45:601";
    gain->add_option("--pump-freq", pump_freq, "pump frequency (GHz)");
    gain->add_option("--pump-power", pump_power, "pump power (dBm)");
    gain->add_option("--target-g0", target_g0, "calibrate pump for this peak gain (dB)");
    gain->add_option("--grid", grid_spec, "signal grid fmin:fmax:n (GHz)");

    auto* saturate = app.add_subcommand("saturate", "1-dB compression point");
    double sat_g0 = 20.0;
    std::optional<double> sat_pump_freq;
    saturate->add_option("--g0", sat_g0, "operating gain (dB)");
    saturate->add_option("--pump-freq", sat_pump_freq, "pump frequency override (GHz)");

    auto* opmap = app.add_subcommand("opmap", "gain and multistability map");
    std::string pfreq_spec, ppow_spec;
    int threads = 0;
    opmap->add_option("--pfreq", pfreq_spec, "pump frequency grid lo:hi:n (GHz)")->required();
    opmap->add_option("--ppow", ppow_spec, "pump power grid lo:hi:n (dBm)")->required();
    opmap->add_option("--threads", threads, "max worker threads (default PARAMPKIT_THREADS)");

    auto* field = app.add_subcommand("field", "field response tables and B_c fits");
    std::string field_fit_csv;
    double field_bmax = 1.0;
    int field_n = 21;
    field->add_option("--fit", field_fit_csv, "fit B_c from a (b_par_T, freq_GHz) CSV");
    field->add_option("--bmax", field_bmax, "maximum field for the table (T)");
    field->add_option("--n", field_n, "table points");

    auto* align = app.add_subcommand("align", "field-alignment compensation analysis");
    std::string sweeps_csv;
    align->add_option("--sweeps", sweeps_csv, "long-format compensation CSV")->required();

    auto* noise = app.add_subcommand("noise", "PSD to input-referred noise");
    std::string psd_on, psd_off;
    double pilot_dbm = -120.0, pilot_ghz = 8.193;
    noise->add_option("--psd-on", psd_on, "pump-on PSD CSV")->required();
    noise->add_option("--psd-off", psd_off, "pump-off PSD CSV")->required();
    noise->add_option("--pilot-dbm", pilot_dbm, "calibrated pilot power at input (dBm)");
    noise->add_option("--pilot-ghz", pilot_ghz, "pilot frequency (GHz)");

    auto* fit_circle_cmd = app.add_subcommand("fit-circle", "single-port circle fit");
    std::string circle_trace;
    double fano = 1.0;
    fit_circle_cmd->add_option("--trace", circle_trace, "reflection trace CSV")->required();
    fit_circle_cmd->add_option("--fano", fano, "multiplicative Q_i uncertainty bound");

    auto* fit_gain_cmd = app.add_subcommand("fit-gain", "Lorentzian gain fit");
    std::string gain_trace;
    fit_gain_cmd->add_option("--trace", gain_trace, "gain profile CSV")->required();

    auto* fit_fluor = app.add_subcommand("fit-fluorescence", "resonance fluorescence fit");
    std::string fluor_trace;
    double fl_kappa = 0.828, fl_gamma = 0.155, fl_fge = 8.287;
    fit_fluor->add_option("--trace", fluor_trace, "reflection trace CSV")->required();
    fit_fluor->add_option("--kappa-mhz", fl_kappa, "external coupling (MHz)");
    fit_fluor->add_option("--gamma-mhz", fl_gamma, "internal loss (MHz)");
    fit_fluor->add_option("--fge-ghz", fl_fge, "qubit frequency (GHz)");

    auto* calib = app.add_subcommand("calibrate-attenuation", "Rabi-vs-power attenuation fit");
    std::string manifest_path, line_csv;
    double predict_ghz = 8.287;
    calib->add_option("--manifest", manifest_path, "JSON list of {trace, p_rt_dbm}");
    calib->add_option("--kappa-mhz", fl_kappa, "external coupling (MHz)");
    calib->add_option("--gamma-mhz", fl_gamma, "internal loss (MHz)");
    calib->add_option("--fge-ghz", fl_fge, "qubit frequency (GHz)");
    calib->add_option("--line", line_csv, "fit A(f) from a (freq_GHz, attenuation_dB, sigma_dB) CSV");
    calib->add_option("--predict", predict_ghz, "frequency for the A(f) prediction (GHz)");

    auto* synth = app.add_subcommand("synth", "deterministic synthetic fixtures");
    std::string synth_kind;
    SynthArgs sa;
    synth->add_option("--kind", synth_kind,
                      "circle|lorentzian|fluorescence|psd|field-sweep|compensation")
        ->required();
    synth->add_option("--g0", sa.g0, "peak gain (dB)");
    synth->add_option("--bw", sa.bw, "FWHM (MHz)");
    synth->add_option("--center", sa.center, "center (GHz)");
    synth->add_option("--span", sa.span, "span (MHz)");
    synth->add_option("--noise", sa.noise, "noise level (kind-specific units)");
    synth->add_option("--qi", sa.qi, "internal quality factor");
    synth->add_option("--qc", sa.qc, "coupling quality factor");
    synth->add_option("--fr", sa.fr, "resonance (GHz)");
    synth->add_option("--linewidths", sa.linewidths, "trace span in linewidths");
    synth->add_option("--kappa-mhz", sa.kappa, "qubit external coupling (MHz)");
    synth->add_option("--gamma-mhz", sa.gamma, "qubit internal loss (MHz)");
    synth->add_option("--fge-ghz", sa.fge, "qubit frequency (GHz)");
    synth->add_option("--attenuation-db", sa.attenuation, "line attenuation (dB)");
    synth->add_option("--floor-k", sa.floor_k, "noise floor temperature (K)");
    synth->add_option("--gain-db", sa.gain_db, "chain gain (dB)");
    synth->add_option("--pilot-dbm", sa.pilot_dbm, "pilot power at input (dBm)");
    synth->add_option("--pilot-ghz", sa.pilot_ghz, "pilot frequency (GHz)");
    synth->add_option("--bins", sa.bins, "PSD bins");
    synth->add_option("--binwidth-hz", sa.binwidth, "PSD bin width (Hz)");
    synth->add_option("--f0", sa.f0, "zero-field frequency (GHz)");
    synth->add_option("--bc", sa.bc, "critical field (T)");
    synth->add_option("--bmax", sa.bmax, "maximum field (T)");
    synth->add_option("--slope", sa.slope, "compensation vertex slope (mT/T)");
    synth->add_option("--points", sa.points, "points per trace");

    auto* report_cmd = app.add_subcommand("report", "re-emit a JSON run summary");
    std::string summary_path;
    report_cmd->add_option("--summary", summary_path, "summary JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (design->parsed()) cmd_design(common);
        if (hyb->parsed()) cmd_hybridize(common, invert, measured);
        if (gain->parsed()) cmd_gain(common, pump_freq, pump_power, target_g0, grid_spec);
        if (saturate->parsed()) cmd_saturate(common, sat_g0, sat_pump_freq);
        if (opmap->parsed()) cmd_opmap(common, pfreq_spec, ppow_spec, threads);
        if (field->parsed()) cmd_field(common, field_fit_csv, field_bmax, field_n);
        if (align->parsed()) cmd_align(common, sweeps_csv);
        if (noise->parsed()) cmd_noise(common, psd_on, psd_off, pilot_dbm, pilot_ghz);
        if (fit_circle_cmd->parsed()) cmd_fit_circle(common, circle_trace, fano);
        if (fit_gain_cmd->parsed()) cmd_fit_gain(common, gain_trace);
        if (fit_fluor->parsed()) cmd_fit_fluorescence(common, fluor_trace, fl_kappa, fl_gamma, fl_fge);
        if (calib->parsed()) {
            if (!line_csv.empty()) {
                cmd_attenuation_line(common, line_csv, predict_ghz);
            } else if (!manifest_path.empty()) {
                cmd_calibrate_attenuation(common, manifest_path, fl_kappa, fl_gamma, fl_fge);
            } else {
                throw std::runtime_error("calibrate-attenuation needs --manifest or --line");
            }
        }
        if (synth->parsed()) cmd_synth_impl(common, synth_kind, sa);
        if (report_cmd->parsed()) cmd_report(common, summary_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return g_exit_code;
}
