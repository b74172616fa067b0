#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ratnav/config.hpp"
#include "ratnav/experience_map.hpp"
#include "ratnav/image.hpp"
#include "ratnav/ingest.hpp"
#include "ratnav/local_view.hpp"
#include "ratnav/pose_cells.hpp"
#include "ratnav/util.hpp"

namespace ratnav {

struct PipelineOptions {
    std::filesystem::path out_dir;  // empty: run in memory only
    bool dump_volumes = false;
};

struct StepRecord {
    int step = 0;
    double timestamp = 0;
    int active_experience = 0;
    int active_template = 0;
    int n_experiences = 0;
    int n_templates = 0;
    std::string event;
};

struct PipelineResult {
    int n_steps = 0;
    int n_templates = 0;
    int n_experiences = 0;
    int n_loop_closures = 0;
    double map_residual = 0;
    std::vector<StepRecord> log;
};

namespace detail {

inline std::string overlay_svg(const ExperienceMap& map, const std::vector<SyncedStep>& steps) {
    std::vector<std::pair<double, double>> est, gt;
    for (const auto& e : map.experiences()) est.emplace_back(e.pose.x, e.pose.y);
    for (const auto& st : steps)
        if (st.has_gt) gt.emplace_back(st.gt_x, st.gt_y);

    double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
    bool first = true;
    auto grow = [&](const std::pair<double, double>& p) {
        if (first) {
            min_x = max_x = p.first;
            min_y = max_y = p.second;
            first = false;
        } else {
            min_x = std::min(min_x, p.first);
            max_x = std::max(max_x, p.first);
            min_y = std::min(min_y, p.second);
            max_y = std::max(max_y, p.second);
        }
    };
    for (const auto& p : est) grow(p);
    for (const auto& p : gt) grow(p);
    double span = std::max({max_x - min_x, max_y - min_y, 1.0});
    double margin = 0.05 * span;

    // y is negated so the map reads with north up
    auto polyline = [](const std::vector<std::pair<double, double>>& pts, const char* color) {
        std::string s = "<polyline fill=\"none\" stroke=\"";
        s += color;
        s += "\" stroke-width=\"0.5%\" points=\"";
        for (size_t i = 0; i < pts.size(); ++i) {
            if (i) s += ' ';
            s += fmt_double(pts[i].first) + "," + fmt_double(-pts[i].second);
        }
        s += "\"/>\n";
        return s;
    };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"";
    svg += fmt_double(min_x - margin) + " " + fmt_double(-(max_y + margin)) + " " +
           fmt_double(max_x - min_x + 2 * margin) + " " + fmt_double(max_y - min_y + 2 * margin);
    svg += "\">\n";
    if (!gt.empty()) svg += polyline(gt, "#999999");
    if (!est.empty()) svg += polyline(est, "#1f77b4");
    for (const auto& p : est)
        svg += "<circle cx=\"" + fmt_double(p.first) + "\" cy=\"" + fmt_double(-p.second) +
               "\" r=\"0.4%\" fill=\"#d62728\"/>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace detail

inline PipelineResult run_pipeline(const std::filesystem::path& dataset_root, const RunConfig& cfg,
                                   const PipelineOptions& opt = {}) {
    validate_config(cfg);
    DatasetStream ds = load_dataset(dataset_root);
    std::vector<SyncedStep> steps = synchronize(ds);

    PoseCellNetwork pcn(cfg);
    TemplateStore store;
    ExperienceMap map(cfg);

    bool write_files = !opt.out_dir.empty();
    if (write_files) {
        std::filesystem::create_directories(opt.out_dir);
        if (opt.dump_volumes) std::filesystem::create_directories(opt.out_dir / "volumes");
    }

    PipelineResult res;
    std::string steplog = "step,timestamp,active_experience,active_template,n_experiences,n_templates,event\n";
    for (size_t i = 0; i < steps.size(); ++i) {
        const auto& st = steps[i];
        Image frame = read_image(st.image);
        ViewEvent ve = observe(frame, store, pcn.pose(), cfg);

        std::vector<ViewLink> injections;
        if (!ve.created)
            injections.push_back({store.templates[static_cast<size_t>(ve.id)].beta_pose, ve.strength});
        PackedPose pose = pcn.step(st.delta_s, st.delta_theta, injections);

        MapEvent me = map.update(pose, ve.id, st.delta_s, st.delta_theta, st.dt, st.timestamp);

        std::string event = (ve.created ? "vt_new:" : "vt_match:") + std::to_string(ve.id);
        if (me.kind == MapEvent::kCreated) {
            event += ";exp_new:" + std::to_string(me.id);
        } else if (me.kind == MapEvent::kLoopClosed) {
            event += ";loop:" + std::to_string(me.from) + "->" + std::to_string(me.to);
            ++res.n_loop_closures;
        }

        StepRecord rec;
        rec.step = static_cast<int>(i);
        rec.timestamp = st.timestamp;
        rec.active_experience = map.active_id();
        rec.active_template = ve.id;
        rec.n_experiences = static_cast<int>(map.experiences().size());
        rec.n_templates = static_cast<int>(store.templates.size());
        rec.event = event;
        res.log.push_back(rec);

        steplog += std::to_string(rec.step) + "," + fmt_double(rec.timestamp) + "," +
                   std::to_string(rec.active_experience) + "," + std::to_string(rec.active_template) +
                   "," + std::to_string(rec.n_experiences) + "," + std::to_string(rec.n_templates) +
                   "," + rec.event + "\n";

        if (write_files && opt.dump_volumes) {
            char name[32];
            std::snprintf(name, sizeof(name), "step_%06zu.bin", i);
            dump_volume(pcn.volume(), opt.out_dir / "volumes" / name);
        }
    }

    res.n_steps = static_cast<int>(steps.size());
    res.n_templates = static_cast<int>(store.templates.size());
    res.n_experiences = static_cast<int>(map.experiences().size());
    res.map_residual = map.residual();

    if (write_files) {
        write_text_file(opt.out_dir / "steplog.csv", steplog);
        write_text_file(opt.out_dir / "experiences.txt", map.export_experiences());
        write_text_file(opt.out_dir / "links.txt", map.export_links());
        write_text_file(opt.out_dir / "templates.txt", export_templates(store));
        std::string traj = "id,timestamp,x,y,theta\n";
        for (const auto& e : map.experiences())
            traj += std::to_string(e.id) + "," + fmt_double(e.timestamp) + "," + fmt_double(e.pose.x) +
                    "," + fmt_double(e.pose.y) + "," + fmt_double(e.pose.theta) + "\n";
        write_text_file(opt.out_dir / "trajectory.csv", traj);
        write_text_file(opt.out_dir / "overlay.svg", detail::overlay_svg(map, steps));
    }
    return res;
}

}  // namespace ratnav
