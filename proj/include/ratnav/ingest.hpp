#pragma once

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratnav/util.hpp"

namespace ratnav {

constexpr double kEarthRadius = 6378137.0;  // equatorial, meters
constexpr double kGtJoinWindow = 0.75;      // seconds

// equirectangular local plane; x east, y north
inline std::pair<double, double> gps_to_local(double lat, double lon, double lat0, double lon0) {
    if (std::fabs(lat) > 90 || std::fabs(lon) > 180 || std::fabs(lat0) > 90 || std::fabs(lon0) > 180)
        throw std::runtime_error("gps coordinates out of range");
    double x = kEarthRadius * std::cos(lat0 * kPi / 180.0) * (lon - lon0) * kPi / 180.0;
    double y = kEarthRadius * (lat - lat0) * kPi / 180.0;
    return {x, y};
}

inline std::pair<double, double> local_to_gps(double x, double y, double lat0, double lon0) {
    double lat = lat0 + (y / kEarthRadius) * 180.0 / kPi;
    double lon = lon0 + (x / (kEarthRadius * std::cos(lat0 * kPi / 180.0))) * 180.0 / kPi;
    return {lat, lon};
}

struct FrameRef {
    double timestamp = 0;
    std::filesystem::path file;
};

struct OdomRow {
    double timestamp = 0;
    double delta_s = 0, delta_theta = 0;
};

struct GtPoint {
    double timestamp = 0;
    double x = 0, y = 0;  // local meters (converted from lat/lon at load when needed)
};

struct DatasetStream {
    std::vector<FrameRef> frames;
    std::vector<OdomRow> odometry;
    std::vector<GtPoint> ground_truth;
    bool has_gt_origin = false;
    double origin_lat = 0, origin_lon = 0;
};

struct SyncedStep {
    double timestamp = 0;
    int frame_index = 0;
    std::filesystem::path image;
    double delta_s = 0, delta_theta = 0;
    double dt = 0;
    bool has_gt = false;
    double gt_x = 0, gt_y = 0;
};

namespace detail {

// csv rows of doubles except one optional string column; a leading header line is skipped
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        auto cells = split(t, ',');
        for (auto& c : cells) c = trim(c);
        if (first) {
            first = false;
            bool header = false;
            try {
                parse_double(cells.at(0));
            } catch (const std::exception&) {
                header = true;
            }
            if (header) continue;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline void check_monotonic(const std::vector<double>& ts, const std::string& what) {
    for (size_t i = 1; i < ts.size(); ++i)
        if (!(ts[i] > ts[i - 1]))
            throw std::runtime_error(what + ": timestamps not strictly increasing at row " +
                                     std::to_string(i));
}

}  // namespace detail

inline DatasetStream load_dataset(const std::filesystem::path& root) {
    auto manifest_path = root / "dataset.toml";
    if (!std::filesystem::exists(manifest_path))
        throw std::runtime_error("missing manifest: " + manifest_path.string());
    auto kv = parse_kv_file(manifest_path);
    auto get = [&kv](const std::string& key, const std::string& def) {
        auto it = kv.find(key);
        return it == kv.end() ? def : it->second;
    };

    DatasetStream ds;
    std::filesystem::path image_dir = root / get("image_dir", "images");

    auto frame_rows = detail::read_csv(root / get("frames_csv", "frames.csv"));
    if (frame_rows.empty()) throw std::runtime_error("dataset has no frames");
    std::vector<double> ts;
    for (const auto& row : frame_rows) {
        if (row.size() < 2) throw std::runtime_error("frames csv: expected timestamp,filename");
        FrameRef f;
        f.timestamp = parse_double(row[0]);
        f.file = image_dir / row[1];
        ts.push_back(f.timestamp);
        ds.frames.push_back(std::move(f));
    }
    detail::check_monotonic(ts, "frames");

    std::string odo_format = get("odometry_format", "delta");
    auto odo_rows = detail::read_csv(root / get("odometry_csv", "odometry.csv"));
    if (odo_rows.empty()) throw std::runtime_error("dataset has no odometry");
    ts.clear();
    for (const auto& row : odo_rows) {
        if (row.size() < 3) throw std::runtime_error("odometry csv: expected 3 columns");
        ts.push_back(parse_double(row[0]));
    }
    detail::check_monotonic(ts, "odometry");
    if (odo_format == "delta") {
        for (const auto& row : odo_rows)
            ds.odometry.push_back({parse_double(row[0]), parse_double(row[1]), parse_double(row[2])});
    } else if (odo_format == "heading") {
        // rows carry (heading, speed); difference into per-row deltas
        double prev_h = 0, prev_t = 0;
        for (size_t i = 0; i < odo_rows.size(); ++i) {
            double t = parse_double(odo_rows[i][0]);
            double h = parse_double(odo_rows[i][1]);
            double v = parse_double(odo_rows[i][2]);
            OdomRow r;
            r.timestamp = t;
            if (i > 0) {
                r.delta_theta = wrap_angle(h - prev_h);
                r.delta_s = v * (t - prev_t);
            }
            prev_h = h;
            prev_t = t;
            ds.odometry.push_back(r);
        }
    } else {
        throw std::runtime_error("odometry_format must be delta or heading");
    }

    std::string gt_csv = get("groundtruth_csv", "");
    if (!gt_csv.empty() && std::filesystem::exists(root / gt_csv)) {
        std::string gt_format = get("groundtruth_format", "latlon");
        auto gt_rows = detail::read_csv(root / gt_csv);
        ts.clear();
        for (const auto& row : gt_rows) ts.push_back(parse_double(row.at(0)));
        detail::check_monotonic(ts, "groundtruth");
        if (gt_format == "xy") {
            for (const auto& row : gt_rows)
                ds.ground_truth.push_back({parse_double(row[0]), parse_double(row[1]), parse_double(row[2])});
        } else if (gt_format == "latlon") {
            for (const auto& row : gt_rows) {
                double lat = parse_double(row[1]), lon = parse_double(row[2]);
                if (!ds.has_gt_origin) {
                    ds.has_gt_origin = true;
                    ds.origin_lat = lat;
                    ds.origin_lon = lon;
                }
                auto [x, y] = gps_to_local(lat, lon, ds.origin_lat, ds.origin_lon);
                ds.ground_truth.push_back({parse_double(row[0]), x, y});
            }
        } else {
            throw std::runtime_error("groundtruth_format must be latlon or xy");
        }
    }
    return ds;
}

// one step per frame; odometry rows between consecutive frame timestamps are
// integrated, trailing rows fold into the final step
inline std::vector<SyncedStep> synchronize(const DatasetStream& ds) {
    std::vector<SyncedStep> steps;
    steps.reserve(ds.frames.size());
    size_t oi = 0;
    size_t gi = 0;
    double prev_t = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < ds.frames.size(); ++i) {
        SyncedStep st;
        st.timestamp = ds.frames[i].timestamp;
        st.frame_index = static_cast<int>(i);
        st.image = ds.frames[i].file;
        st.dt = std::isinf(prev_t) ? 0.0 : st.timestamp - prev_t;
        bool last = i + 1 == ds.frames.size();
        double sum_s = 0, sum_th = 0;
        bool any = false;
        while (oi < ds.odometry.size() && (ds.odometry[oi].timestamp <= st.timestamp || last)) {
            sum_s += ds.odometry[oi].delta_s;
            sum_th += ds.odometry[oi].delta_theta;
            any = true;
            ++oi;
        }
        if (!any && i > 0)
            std::cerr << "warning: no odometry rows in (" << prev_t << ", " << st.timestamp
                      << "], assuming zero motion\n";
        st.delta_s = sum_s;
        st.delta_theta = wrap_angle(sum_th);

        // nearest ground truth within the join window
        while (gi + 1 < ds.ground_truth.size() &&
               std::fabs(ds.ground_truth[gi + 1].timestamp - st.timestamp) <=
                   std::fabs(ds.ground_truth[gi].timestamp - st.timestamp))
            ++gi;
        if (gi < ds.ground_truth.size() &&
            std::fabs(ds.ground_truth[gi].timestamp - st.timestamp) <= kGtJoinWindow) {
            st.has_gt = true;
            st.gt_x = ds.ground_truth[gi].x;
            st.gt_y = ds.ground_truth[gi].y;
        }
        prev_t = st.timestamp;
        steps.push_back(std::move(st));
    }
    return steps;
}

}  // namespace ratnav
