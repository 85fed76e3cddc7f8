#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>

namespace rv {

// Shortest round-trippable decimal form of a double; keeps CSV output
// deterministic and byte-comparable across runs.
std::string fmt_double(double v);

uint64_t fnv1a64(const std::string& s);

// Line-based "key = value" configuration. Keys are kept sorted so the
// canonical form (and its hash) is stable.
struct KvConfig {
    std::map<std::string, std::string> kv;

    static KvConfig from_file(const std::string& path);
    void merge(const KvConfig& other);  // other wins

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    void set(const std::string& key, const std::string& value) { kv[key] = value; }
    void set_double(const std::string& key, double v) { kv[key] = fmt_double(v); }
    void set_int(const std::string& key, int64_t v) { kv[key] = std::to_string(v); }

    std::string get_str(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key, double def) const;
    int get_int(const std::string& key, int def) const;
    uint64_t get_u64(const std::string& key, uint64_t def) const;
    bool get_bool(const std::string& key, bool def) const;

    std::string canonical() const;  // sorted "key = value" lines
    std::string hash_hex() const;   // fnv1a64 of canonical(), hex
    void write(const std::string& path) const;
};

// Append-only run directory: creation fails if the path already exists.
// Holds config.txt, seed.txt, CSV/SVG outputs and checkpoints/.
struct RunDir {
    std::string root;

    static RunDir create(const std::string& path);
    static RunDir open_existing(const std::string& path);

    std::string file(const std::string& name) const { return root + "/" + name; }
    std::string checkpoints() const { return root + "/checkpoints"; }

    void write_config(const KvConfig& cfg) const;
    void write_seed(uint64_t seed) const;
};

// Opens a CSV and writes the "# config_hash=..." line followed by the header.
std::ofstream open_csv(const std::string& path, const std::string& header,
                       const std::string& config_hash);

}  // namespace rv
