#include "parampkit/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace parampkit {

namespace {

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double to_number(const std::string& path, const Entry& e, const std::string& key) {
    try {
        size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument(e.value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(path, e.line, "key '" + key + "' has non-numeric value '" + e.value + "'");
    }
}

class SectionReader {
public:
    SectionReader(const std::string& path, const std::string& name, Section& section)
        : path_(path), name_(name), section_(section) {}

    double number(const std::string& key) {
        auto it = section_.find(key);
        if (it == section_.end()) {
            throw ConfigError(path_, 0, "section [" + name_ + "] is missing key '" + key + "'");
        }
        it->second.used = true;
        return to_number(path_, it->second, key);
    }

    std::optional<double> optional_number(const std::string& key) {
        auto it = section_.find(key);
        if (it == section_.end()) return std::nullopt;
        it->second.used = true;
        return to_number(path_, it->second, key);
    }

    std::string raw(const std::string& key) {
        auto it = section_.find(key);
        if (it == section_.end()) {
            throw ConfigError(path_, 0, "section [" + name_ + "] is missing key '" + key + "'");
        }
        it->second.used = true;
        return it->second.value;
    }

    void reject_unknown() const {
        for (const auto& [key, entry] : section_) {
            if (!entry.used) {
                throw ConfigError(path_, entry.line,
                                  "unknown key '" + key + "' in section [" + name_ + "]");
            }
        }
    }

private:
    const std::string& path_;
    std::string name_;
    Section& section_;
};

}  // namespace

DeviceConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);

    std::map<std::string, Section> sections;
    std::string current;
    std::string line;
    int lineno = 0;
    int meaningful = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        const std::string t = trim(line);
        if (t.empty()) continue;
        ++meaningful;

        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(path, lineno, "unterminated section header");
            current = trim(t.substr(1, t.size() - 2));
            if (current.empty()) throw ConfigError(path, lineno, "empty section name");
            sections[current];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path, lineno, "expected 'key = value', got '" + t + "'");
        }
        if (current.empty()) throw ConfigError(path, lineno, "key outside any [section]");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(path, lineno, "empty key");
        auto& section = sections[current];
        if (section.count(key)) {
            throw ConfigError(path, lineno, "duplicate key '" + key + "' in [" + current + "]");
        }
        section[key] = Entry{value, lineno, false};
    }
    if (meaningful == 0) throw ConfigError(path, lineno, "config file is empty");

    static const std::set<std::string> known = {
        "film",   "strip", "resonator.left", "resonator.right",
        "dimer",  "chain", "field",          "kappa_vs_field"};
    for (const auto& [name, _] : sections) {
        if (!known.count(name)) {
            throw std::runtime_error(path + ": unknown section [" + name + "]");
        }
    }

    DeviceConfig cfg;
    cfg.source_path = path;

    if (sections.count("film")) {
        SectionReader r(path, "film", sections["film"]);
        FilmSpec film;
        film.resistivity_uohm_cm = r.number("resistivity");
        film.thickness_nm = r.number("thickness");
        film.gap_uev = r.optional_number("gap");
        r.reject_unknown();
        film.validate();
        cfg.film = film;
    }
    if (sections.count("strip")) {
        SectionReader r(path, "strip", sections["strip"]);
        StripSpec strip;
        strip.width_um = r.number("width");
        strip.length_um = r.number("length");
        strip.sheet_inductance_nh = r.number("sheet_inductance");
        strip.critical_current_ua = r.number("critical_current");
        r.reject_unknown();
        strip.validate();
        cfg.strip = strip;
    }
    const auto read_resonator = [&](const std::string& name) -> std::optional<ResonatorSpec> {
        if (!sections.count(name)) return std::nullopt;
        if (!cfg.strip) {
            throw std::runtime_error(path + ": [" + name + "] requires a [strip] section");
        }
        SectionReader r(path, name, sections[name]);
        ResonatorSpec res;
        res.strip = *cfg.strip;
        res.frequency_ghz = r.number("frequency");
        res.pad_inductance_nh = r.number("pad_inductance");
        res.kerr_khz = r.number("kerr");
        r.reject_unknown();
        res.validate();
        return res;
    };
    cfg.left = read_resonator("resonator.left");
    cfg.right = read_resonator("resonator.right");

    if (sections.count("dimer")) {
        if (!cfg.left || !cfg.right) {
            throw std::runtime_error(path + ": [dimer] requires both resonator sections");
        }
        SectionReader r(path, "dimer", sections["dimer"]);
        DimerSpec d;
        d.left = *cfg.left;
        d.right = *cfg.right;
        d.hopping_mhz = r.number("hopping");
        d.external_coupling_mhz = r.number("external_coupling");
        d.internal_loss_plus_mhz = r.number("internal_loss_plus");
        d.internal_loss_minus_mhz = r.number("internal_loss_minus");
        r.reject_unknown();
        d.validate();
        cfg.dimer_spec = d;
    }
    if (sections.count("chain")) {
        SectionReader r(path, "chain", sections["chain"]);
        NoiseChain c;
        c.insertion_loss = r.number("insertion_loss");
        c.stage_temp_k = r.number("stage_temp");
        c.hemt_temp_k = r.number("hemt_temp");
        c.hemt_gain_db = r.number("hemt_gain");
        c.paramp_gain_db = r.number("paramp_gain");
        c.paramp_noise_k = r.number("paramp_noise");
        c.source_noise_k = r.number("source_noise");
        r.reject_unknown();
        c.validate();
        cfg.chain = c;
    }
    if (sections.count("field")) {
        SectionReader r(path, "field", sections["field"]);
        FieldModel f;
        f.critical_field_t = r.number("critical_field");
        f.zero_field_gap_uev = r.number("zero_field_gap");
        f.zero_field_frequency_ghz = r.number("zero_field_frequency");
        r.reject_unknown();
        f.validate();
        cfg.field = f;
    }
    if (sections.count("kappa_vs_field")) {
        SectionReader r(path, "kappa_vs_field", sections["kappa_vs_field"]);
        // points = b1:k1, b2:k2, ... (Tesla : MHz)
        const std::string spec = r.raw("points");
        r.reject_unknown();
        std::vector<std::pair<double, double>> pts;
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string p = trim(item);
            if (p.empty()) continue;
            const auto colon = p.find(':');
            if (colon == std::string::npos) {
                throw std::runtime_error(path + ": kappa_vs_field points need 'B:kappa' pairs");
            }
            pts.emplace_back(std::stod(p.substr(0, colon)), std::stod(p.substr(colon + 1)));
        }
        if (pts.empty()) throw std::runtime_error(path + ": kappa_vs_field has no points");
        cfg.kappa_vs_field = KappaFieldTable(std::move(pts));
    }
    return cfg;
}

const FilmSpec& DeviceConfig::require_film() const {
    if (!film) throw std::runtime_error(source_path + ": missing [film] section");
    return *film;
}

const DimerSpec& DeviceConfig::require_dimer() const {
    if (!dimer_spec) throw std::runtime_error(source_path + ": missing [dimer] section");
    return *dimer_spec;
}

const NoiseChain& DeviceConfig::require_chain() const {
    if (!chain) throw std::runtime_error(source_path + ": missing [chain] section");
    return *chain;
}

const FieldModel& DeviceConfig::require_field() const {
    if (!field) throw std::runtime_error(source_path + ": missing [field] section");
    return *field;
}

}  // namespace parampkit
