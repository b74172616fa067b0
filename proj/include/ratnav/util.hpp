#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ratnav {

constexpr double kPi = 3.14159265358979323846;

// wrap to (-pi, pi]
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    else if (a > kPi) a -= 2.0 * kPi;
    return a;
}

// wrap a real coordinate into [0, dim)
inline double wrap_coord(double x, int dim) {
    double d = static_cast<double>(dim);
    x = std::fmod(x, d);
    if (x < 0) x += d;
    if (x >= d) x -= d;  // fmod can land exactly on d after the += above
    return x;
}

inline int wrap_index(int i, int dim) {
    i %= dim;
    return i < 0 ? i + dim : i;
}

// shortest signed distance from a to b on a ring of size dim
inline double ring_diff(double a, double b, int dim) {
    double d = std::fmod(a - b, static_cast<double>(dim));
    if (d > dim / 2.0) d -= dim;
    if (d < -dim / 2.0) d += dim;
    return d;
}

struct Se2 {
    double x = 0, y = 0, theta = 0;
};

// rigid-body composition: b expressed in a's frame
inline Se2 se2_compose(const Se2& a, const Se2& b) {
    double c = std::cos(a.theta), s = std::sin(a.theta);
    return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, wrap_angle(a.theta + b.theta)};
}

// unicycle step: rotate by dtheta, then advance ds along the new heading.
// The same convention is used by the dataset generator, dead reckoning and
// map-frame odometry accumulation, so they agree exactly.
inline Se2 se2_advance(const Se2& p, double ds, double dtheta) {
    Se2 out;
    out.theta = wrap_angle(p.theta + dtheta);
    out.x = p.x + ds * std::cos(out.theta);
    out.y = p.y + ds * std::sin(out.theta);
    return out;
}

// --- deterministic RNG (fixed across platforms, unlike <random> distributions) ---

struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

struct Rng {
    SplitMix64 sm;
    bool have_spare = false;
    double spare = 0;

    explicit Rng(uint64_t seed) : sm(seed) {}

    // in [0, 1)
    double uniform() {
        return static_cast<double>(sm.next() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive bounds
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(sm.next() % span);
    }
    // Box-Muller, standard normal
    double gaussian() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u1 = 0;
        while (u1 <= 0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare = r * std::sin(2.0 * kPi * u2);
        have_spare = true;
        return r * std::cos(2.0 * kPi * u2);
    }
};

// stream-independent derived seed, so e.g. per-frame noise does not depend on
// how many draws earlier frames consumed
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    SplitMix64 s(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    return s.next();
}

// --- number formatting (shortest round-trip; locale-proof, reproducible) ---

inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_int(int64_t v) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad number: '" + std::string(s) + "'");
    return v;
}

inline int64_t parse_int(std::string_view s) {
    int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad integer: '" + std::string(s) + "'");
    return v;
}

inline std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t p = s.find(sep, start);
        if (p == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

// key=value file with '#' comments and blank lines; duplicate keys keep the last value
inline std::map<std::string, std::string> parse_kv_text(const std::string& text, const std::string& what) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(what + ": line " + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(what + ": line " + std::to_string(lineno) + ": empty key");
        out[key] = val;
    }
    return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
    return parse_kv_text(read_text_file(path), path.string());
}

}  // namespace ratnav
