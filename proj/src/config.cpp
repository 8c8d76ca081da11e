#include "photonpano/config.hpp"

#include <fstream>
#include <sstream>

namespace photonpano {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

FlatConfig FlatConfig::parse(std::istream& in, const std::string& origin) {
    FlatConfig cfg;
    cfg.origin_ = origin;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        const size_t eq = trimmed.find('=');
        if (eq == std::string::npos)
            raise(ErrorKind::config,
                  origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(trimmed.substr(0, eq));
        const std::string value = trim(trimmed.substr(eq + 1));
        if (key.empty())
            raise(ErrorKind::config, origin + ":" + std::to_string(line_no) + ": empty key");
        if (cfg.entries_.count(key))
            raise(ErrorKind::config,
                  origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        cfg.entries_[key] = Entry{value, line_no, false};
    }
    return cfg;
}

FlatConfig FlatConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::io, "cannot open " + path.string());
    return parse(in, path.string());
}

bool FlatConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

std::optional<std::string> FlatConfig::consume(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.consumed = true;
    return it->second.value;
}

void FlatConfig::missing(const std::string& key) const {
    raise(ErrorKind::config, origin_ + ": missing required key '" + key + "'");
}

double FlatConfig::parse_double(const std::string& key, const std::string& value) const {
    try {
        size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        raise(ErrorKind::config, origin_ + ": key '" + key + "' is not a number: '" + value + "'");
    }
}

int64_t FlatConfig::parse_int(const std::string& key, const std::string& value) const {
    try {
        size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return static_cast<int64_t>(v);
    } catch (...) {
        raise(ErrorKind::config, origin_ + ": key '" + key + "' is not an integer: '" + value + "'");
    }
}

std::string FlatConfig::require_string(const std::string& key) {
    auto v = consume(key);
    if (!v) missing(key);
    return *v;
}

double FlatConfig::require_double(const std::string& key) {
    return parse_double(key, require_string(key));
}

int64_t FlatConfig::require_int(const std::string& key) {
    return parse_int(key, require_string(key));
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) {
    auto v = consume(key);
    return v ? *v : fallback;
}

double FlatConfig::get_double(const std::string& key, double fallback) {
    auto v = consume(key);
    return v ? parse_double(key, *v) : fallback;
}

int64_t FlatConfig::get_int(const std::string& key, int64_t fallback) {
    auto v = consume(key);
    return v ? parse_int(key, *v) : fallback;
}

std::vector<std::string> FlatConfig::consume_indexed(const std::string& prefix) {
    std::vector<std::string> values;
    for (size_t i = 0;; ++i) {
        auto v = consume(prefix + std::to_string(i));
        if (!v) break;
        values.push_back(*v);
    }
    return values;
}

void FlatConfig::ensure_all_consumed() const {
    for (const auto& [key, entry] : entries_)
        if (!entry.consumed)
            raise(ErrorKind::config, origin_ + ":" + std::to_string(entry.line) +
                                         ": unknown key '" + key + "'");
}

std::string format_flat(const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ostringstream out;
    for (const auto& [key, value] : entries) out << key << " = " << value << "\n";
    return out.str();
}

void write_flat_file(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::io, "cannot write " + path.string());
    out << format_flat(entries);
}

}  // namespace photonpano
