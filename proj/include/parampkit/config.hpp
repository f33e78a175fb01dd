#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "parampkit/field.hpp"
#include "parampkit/material.hpp"
#include "parampkit/noise.hpp"

namespace parampkit {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, int line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

// Parsed device description. Sections are optional; each subcommand asks for
// the ones it needs and parsing fails loudly on unknown keys.
struct DeviceConfig {
    std::optional<FilmSpec> film;
    std::optional<StripSpec> strip;
    std::optional<ResonatorSpec> left;
    std::optional<ResonatorSpec> right;
    std::optional<DimerSpec> dimer_spec;
    std::optional<NoiseChain> chain;
    std::optional<FieldModel> field;
    KappaFieldTable kappa_vs_field;
    std::string source_path;

    const FilmSpec& require_film() const;
    const DimerSpec& require_dimer() const;
    const NoiseChain& require_chain() const;
    const FieldModel& require_field() const;
};

// Strict key = value parser for the [film]/[strip]/[resonator.*]/[dimer]/
// [chain]/[field]/[kappa_vs_field] sections.
DeviceConfig parse_config(const std::string& path);

}  // namespace parampkit
