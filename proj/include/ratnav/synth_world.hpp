#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratnav/image.hpp"
#include "ratnav/util.hpp"

namespace ratnav {

struct ScenarioSpec {
    std::vector<std::pair<double, double>> waypoints;
    double speed = 1.0;          // m/s
    double rate = 1.0;           // frames per second
    int laps = 1;
    int n_scenes = 16;           // distinct visual scenes along one lap
    double drift_bias = 0.0;     // rad/s added to reported heading change
    double noise_sigma_s = 0.0;  // odometry translation noise, per step
    double noise_sigma_theta = 0.0;
    double image_noise = 0.01;   // per-pixel intensity noise
    std::uint64_t seed = 1;
    int image_width = 320;
    int image_height = 240;
};

inline ScenarioSpec load_scenario(const std::filesystem::path& path) {
    auto kv = parse_kv_file(path);
    ScenarioSpec sp;
    for (const auto& [key, value] : kv) {
        if (key == "waypoints") {
            for (const auto& token : split(value, ';')) {
                auto xy = split(trim(token), ',');
                if (xy.size() != 2) throw std::runtime_error("waypoints: expected x,y pairs");
                sp.waypoints.emplace_back(parse_double(trim(xy[0])), parse_double(trim(xy[1])));
            }
        } else if (key == "speed") sp.speed = parse_double(value);
        else if (key == "rate") sp.rate = parse_double(value);
        else if (key == "laps") sp.laps = static_cast<int>(parse_int(value));
        else if (key == "n_scenes") sp.n_scenes = static_cast<int>(parse_int(value));
        else if (key == "drift_bias") sp.drift_bias = parse_double(value);
        else if (key == "noise_sigma_s") sp.noise_sigma_s = parse_double(value);
        else if (key == "noise_sigma_theta") sp.noise_sigma_theta = parse_double(value);
        else if (key == "image_noise") sp.image_noise = parse_double(value);
        else if (key == "seed") sp.seed = static_cast<std::uint64_t>(parse_int(value));
        else if (key == "image_width") sp.image_width = static_cast<int>(parse_int(value));
        else if (key == "image_height") sp.image_height = static_cast<int>(parse_int(value));
        else throw std::runtime_error("scenario: unknown key '" + key + "'");
    }
    if (sp.waypoints.size() < 2) throw std::runtime_error("scenario: need at least two waypoints");
    if (sp.speed <= 0 || sp.rate <= 0) throw std::runtime_error("scenario: speed and rate must be positive");
    if (sp.laps < 1 || sp.n_scenes < 1) throw std::runtime_error("scenario: laps and n_scenes must be >= 1");
    return sp;
}

namespace detail {

struct Polyline {
    std::vector<std::pair<double, double>> pts;
    std::vector<double> cum;  // cumulative arc length, cum[0] = 0

    double length() const { return cum.empty() ? 0.0 : cum.back(); }

    std::pair<double, double> at(double s) const {
        s = std::clamp(s, 0.0, length());
        auto it = std::upper_bound(cum.begin(), cum.end(), s);
        size_t k = it == cum.begin() ? 0 : static_cast<size_t>(it - cum.begin() - 1);
        if (k + 1 >= pts.size()) return pts.back();
        double seg = cum[k + 1] - cum[k];
        double f = seg > 0 ? (s - cum[k]) / seg : 0.0;
        return {pts[k].first + f * (pts[k + 1].first - pts[k].first),
                pts[k].second + f * (pts[k + 1].second - pts[k].second)};
    }
};

inline Polyline build_polyline(const std::vector<std::pair<double, double>>& wps, int laps) {
    Polyline pl;
    for (int lap = 0; lap < laps; ++lap) {
        for (size_t i = 0; i < wps.size(); ++i) {
            if (!pl.pts.empty() && pl.pts.back() == wps[i]) continue;
            pl.pts.push_back(wps[i]);
        }
    }
    pl.cum.resize(pl.pts.size(), 0.0);
    for (size_t i = 1; i < pl.pts.size(); ++i)
        pl.cum[i] = pl.cum[i - 1] + std::hypot(pl.pts[i].first - pl.pts[i - 1].first,
                                               pl.pts[i].second - pl.pts[i - 1].second);
    if (pl.length() <= 0) throw std::runtime_error("scenario: path has zero length");
    return pl;
}

inline Image render_scene(const ScenarioSpec& sp, int scene, std::uint64_t frame) {
    constexpr int kBlocksX = 8, kBlocksY = 6;
    double blocks[kBlocksY][kBlocksX];
    Rng pat(mix_seed(sp.seed, 1000 + static_cast<std::uint64_t>(scene)));
    for (int by = 0; by < kBlocksY; ++by)
        for (int bx = 0; bx < kBlocksX; ++bx) blocks[by][bx] = 0.15 + 0.7 * pat.uniform();

    Image img;
    img.width = sp.image_width;
    img.height = sp.image_height;
    img.pixels.resize(static_cast<size_t>(img.width) * img.height);
    Rng noise(mix_seed(sp.seed, 2000000 + frame));
    for (int y = 0; y < img.height; ++y) {
        int by = y * kBlocksY / img.height;
        for (int x = 0; x < img.width; ++x) {
            int bx = x * kBlocksX / img.width;
            double v = blocks[by][bx];
            if (sp.image_noise > 0) v += noise.gaussian() * sp.image_noise;
            v = std::clamp(v, 0.0, 1.0);
            img.pixels[static_cast<size_t>(y) * img.width + x] =
                static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    return img;
}

}  // namespace detail

struct SynthResult {
    int n_frames = 0;
    double path_length = 0;
};

// Drives a unicycle along the waypoint polyline, emitting frames, odometry and
// ground truth in the on-disk dataset layout.  The reported odometry is the
// exact motion plus the configured bias and noise, so dead-reckoning the clean
// deltas reproduces the truth; the biased deltas drift away from it.
inline SynthResult generate_dataset(const ScenarioSpec& sp, const std::filesystem::path& out_dir) {
    auto full = detail::build_polyline(sp.waypoints, sp.laps);
    auto lap = detail::build_polyline(sp.waypoints, 1);
    double step_len = sp.speed / sp.rate;
    double lookahead = std::max(2.0 * step_len, 2.0);
    double max_turn = 1.0;  // rad per step
    int n_steps = static_cast<int>(std::floor(full.length() / step_len));

    // scene anchors sit at evenly spaced arc lengths along a single lap, so a
    // later lap passes the same scenes again
    std::vector<std::pair<double, double>> anchors;
    for (int i = 0; i < sp.n_scenes; ++i)
        anchors.push_back(lap.at((i + 0.5) * lap.length() / sp.n_scenes));
    auto nearest_scene = [&anchors](double x, double y) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < anchors.size(); ++i) {
            double d = std::hypot(anchors[i].first - x, anchors[i].second - y);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        return best;
    };

    std::filesystem::create_directories(out_dir / "images");
    Rng odo_noise(mix_seed(sp.seed, 3));

    Se2 pose{sp.waypoints[0].first, sp.waypoints[0].second, 0.0};
    {
        auto p1 = full.at(std::min(step_len, full.length()));
        pose.theta = std::atan2(p1.second - pose.y, p1.first - pose.x);
    }
    double progress = 0;

    std::string frames_csv = "timestamp,filename\n";
    std::string odo_csv = "timestamp,delta_s,delta_theta\n";
    std::string gt_csv = "timestamp,x,y\n";
    double dt = 1.0 / sp.rate;

    for (int k = 0; k <= n_steps; ++k) {
        double t = k * dt;
        double ds = 0, dth = 0;
        if (k > 0) {
            auto carrot = full.at(std::min(progress + lookahead, full.length()));
            double desired = std::atan2(carrot.second - pose.y, carrot.first - pose.x);
            dth = std::clamp(wrap_angle(desired - pose.theta), -max_turn, max_turn);
            ds = step_len;
            pose = se2_advance(pose, ds, dth);
            progress += step_len;
        }

        char name[32];
        std::snprintf(name, sizeof(name), "%06d.pgm", k);
        int scene = nearest_scene(pose.x, pose.y);
        write_pgm(out_dir / "images" / name,
                  detail::render_scene(sp, scene, static_cast<std::uint64_t>(k)));
        frames_csv += fmt_double(t) + "," + name + "\n";

        double rep_s = ds, rep_th = dth;
        if (k > 0) {
            rep_th += sp.drift_bias * dt;
            if (sp.noise_sigma_s > 0) rep_s += odo_noise.gaussian() * sp.noise_sigma_s;
            if (sp.noise_sigma_theta > 0) rep_th += odo_noise.gaussian() * sp.noise_sigma_theta;
        }
        odo_csv += fmt_double(t) + "," + fmt_double(rep_s) + "," + fmt_double(rep_th) + "\n";
        gt_csv += fmt_double(t) + "," + fmt_double(pose.x) + "," + fmt_double(pose.y) + "\n";
    }

    write_text_file(out_dir / "frames.csv", frames_csv);
    write_text_file(out_dir / "odometry.csv", odo_csv);
    write_text_file(out_dir / "groundtruth.csv", gt_csv);
    write_text_file(out_dir / "dataset.toml",
                    "frames_csv = frames.csv\n"
                    "odometry_csv = odometry.csv\n"
                    "groundtruth_csv = groundtruth.csv\n"
                    "groundtruth_format = xy\n"
                    "image_dir = images\n"
                    "image_format = pgm\n"
                    "odometry_format = delta\n");

    SynthResult res;
    res.n_frames = n_steps + 1;
    res.path_length = full.length();
    return res;
}

}  // namespace ratnav
