#include "rv/runio.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace rv {

std::string fmt_double(double v) {
    char buf[64];
    // %.17g round-trips; trim to the shortest form that still does.
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) break;
    }
    return buf;
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {
std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
}  // namespace

KvConfig KvConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("KvConfig: cannot open " + path);
    KvConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("KvConfig: missing '=' at " + path + ":" + std::to_string(lineno));
        c.kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return c;
}

void KvConfig::merge(const KvConfig& other) {
    for (const auto& [k, v] : other.kv) kv[k] = v;
}

std::string KvConfig::get_str(const std::string& key, const std::string& def) const {
    auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
}

double KvConfig::get_double(const std::string& key, double def) const {
    auto it = kv.find(key);
    if (it == kv.end()) return def;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw std::runtime_error("KvConfig: bad numeric value for " + key + ": " + it->second);
    }
}

int KvConfig::get_int(const std::string& key, int def) const {
    auto it = kv.find(key);
    if (it == kv.end()) return def;
    try {
        return std::stoi(it->second);
    } catch (...) {
        throw std::runtime_error("KvConfig: bad integer value for " + key + ": " + it->second);
    }
}

uint64_t KvConfig::get_u64(const std::string& key, uint64_t def) const {
    auto it = kv.find(key);
    if (it == kv.end()) return def;
    try {
        return std::stoull(it->second);
    } catch (...) {
        throw std::runtime_error("KvConfig: bad integer value for " + key + ": " + it->second);
    }
}

bool KvConfig::get_bool(const std::string& key, bool def) const {
    auto it = kv.find(key);
    if (it == kv.end()) return def;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw std::runtime_error("KvConfig: bad boolean value for " + key + ": " + v);
}

std::string KvConfig::canonical() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    return os.str();
}

std::string KvConfig::hash_hex() const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

void KvConfig::write(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("KvConfig: cannot write " + path);
    os << canonical();
}

RunDir RunDir::create(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::exists(path))
        throw std::runtime_error("RunDir: refusing to overwrite existing run directory " + path);
    fs::create_directories(path);
    fs::create_directories(path + "/checkpoints");
    return RunDir{path};
}

RunDir RunDir::open_existing(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("RunDir: no such run directory " + path);
    return RunDir{path};
}

void RunDir::write_config(const KvConfig& cfg) const { cfg.write(file("config.txt")); }

void RunDir::write_seed(uint64_t seed) const {
    std::ofstream os(file("seed.txt"));
    os << seed << "\n";
}

std::ofstream open_csv(const std::string& path, const std::string& header,
                       const std::string& config_hash) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("open_csv: cannot open " + path);
    os << "# config_hash=" << config_hash << "\n" << header << "\n";
    return os;
}

}  // namespace rv
