#include "parampkit/report.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace parampkit {

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file: " + path);
    uint64_t h = 1469598103934665603ull;
    char c;
    while (in.get(c)) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(uint64_t value) {
    std::ostringstream out;
    out << std::hex << value;
    return out.str();
}

RunReport::RunReport(std::string command) {
    doc_["schema"] = kReportSchema;
    doc_["command"] = std::move(command);
    doc_["inputs"] = nlohmann::ordered_json::object();
    doc_["results"] = nlohmann::ordered_json::object();
    doc_["warnings"] = nlohmann::ordered_json::array();
}

void RunReport::add_input(const std::string& label, const std::string& path) {
    doc_["inputs"][label] = hex64(fnv1a_file(path));
}

void RunReport::add_warning(const std::string& message) {
    warnings_.push_back(message);
    doc_["warnings"].push_back(message);
}

void RunReport::set_result(const std::string& key, double value) { doc_["results"][key] = value; }
void RunReport::set_result(const std::string& key, const std::string& value) {
    doc_["results"][key] = value;
}
void RunReport::set_result(const std::string& key, bool value) { doc_["results"][key] = value; }

std::string RunReport::to_json() const { return doc_.dump(2) + "\n"; }

void RunReport::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << to_json();
}

}  // namespace parampkit
