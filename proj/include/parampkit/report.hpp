#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace parampkit {

inline constexpr const char* kReportSchema = "parampkit/v1";

// FNV-1a over the raw file bytes; used to pin inputs in run reports.
uint64_t fnv1a_file(const std::string& path);
std::string hex64(uint64_t value);

// Deterministic run summary: command echo, input hashes, scalar results and
// warnings, emitted as ordered JSON.
class RunReport {
public:
    explicit RunReport(std::string command);

    void add_input(const std::string& label, const std::string& path);
    void add_warning(const std::string& message);
    void set_result(const std::string& key, double value);
    void set_result(const std::string& key, const std::string& value);
    void set_result(const std::string& key, bool value);

    bool has_warnings() const { return !warnings_.empty(); }
    std::string to_json() const;
    void write(const std::string& path) const;

private:
    nlohmann::ordered_json doc_;
    std::vector<std::string> warnings_;
};

}  // namespace parampkit
