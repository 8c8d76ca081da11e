#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "photonpano/error.hpp"

namespace photonpano {

// Flat "key = value" text file. Blank lines and '#' comments are allowed.
// Consumers call the typed getters and finish with ensure_all_consumed(),
// which turns leftover (unknown) keys into errors with their line numbers.
class FlatConfig {
public:
    static FlatConfig parse(std::istream& in, const std::string& origin = "<config>");
    static FlatConfig parse_file(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    std::optional<std::string> consume(const std::string& key);

    std::string require_string(const std::string& key);
    double require_double(const std::string& key);
    int64_t require_int(const std::string& key);

    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key, double fallback);
    int64_t get_int(const std::string& key, int64_t fallback);

    // Keys matching prefix + index, consumed in increasing index order
    // starting at 0 (e.g. "knot.0", "knot.1", ...).
    std::vector<std::string> consume_indexed(const std::string& prefix);

    void ensure_all_consumed() const;

    const std::string& origin() const { return origin_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
        bool consumed = false;
    };
    std::string origin_;
    std::map<std::string, Entry> entries_;

    [[noreturn]] void missing(const std::string& key) const;
    double parse_double(const std::string& key, const std::string& value) const;
    int64_t parse_int(const std::string& key, const std::string& value) const;
};

// Writes "key = value" lines in the given order (metrics files, manifests).
void write_flat_file(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, std::string>>& entries);
std::string format_flat(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace photonpano
