#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ratnav/config.hpp"
#include "ratnav/eval.hpp"
#include "ratnav/pipeline.hpp"
#include "ratnav/synth_world.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kBadInput = 2;
constexpr int kMissingData = 3;

int fail(int code, const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    return code;
}

ratnav::RunConfig build_config(const std::string& config_path,
                               const std::vector<std::string>& overrides) {
    ratnav::RunConfig cfg;
    if (!config_path.empty()) cfg = ratnav::load_config(config_path);
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--set expects key=value, got '" + kv + "'");
        ratnav::set_config_key(cfg, ratnav::trim(kv.substr(0, eq)), ratnav::trim(kv.substr(eq + 1)));
    }
    ratnav::validate_config(cfg);
    return cfg;
}

struct TrajRow {
    double timestamp = 0;
    ratnav::Point2 p;
};

std::vector<TrajRow> read_trajectory(const std::filesystem::path& file) {
    std::vector<TrajRow> rows;
    std::istringstream in(ratnav::read_text_file(file));
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::string t = ratnav::trim(line);
        if (t.empty()) continue;
        if (first) {
            first = false;
            if (t.rfind("id,", 0) == 0) continue;
        }
        auto cells = ratnav::split(t, ',');
        if (cells.size() < 4) throw std::runtime_error("trajectory csv: expected id,timestamp,x,y,theta");
        TrajRow r;
        r.timestamp = ratnav::parse_double(ratnav::trim(cells[1]));
        r.p.x = ratnav::parse_double(ratnav::trim(cells[2]));
        r.p.y = ratnav::parse_double(ratnav::trim(cells[3]));
        rows.push_back(r);
    }
    return rows;
}

int cmd_run(const std::string& data_dir, const std::string& out_dir, const std::string& config_path,
            const std::vector<std::string>& overrides, bool dump_volumes) {
    if (!std::filesystem::exists(data_dir)) return fail(kMissingData, "dataset directory not found: " + data_dir);
    if (!std::filesystem::exists(std::filesystem::path(data_dir) / "dataset.toml"))
        return fail(kMissingData, "no dataset.toml in " + data_dir);
    if (!config_path.empty() && !std::filesystem::exists(config_path))
        return fail(kMissingData, "config file not found: " + config_path);

    ratnav::RunConfig cfg;
    try {
        cfg = build_config(config_path, overrides);
    } catch (const std::exception& e) {
        return fail(kBadInput, e.what());
    }

    try {
        ratnav::PipelineOptions opt;
        opt.out_dir = out_dir;
        opt.dump_volumes = dump_volumes;
        ratnav::PipelineResult res = ratnav::run_pipeline(data_dir, cfg, opt);
        std::cout << "steps = " << res.n_steps << "\n"
                  << "templates = " << res.n_templates << "\n"
                  << "experiences = " << res.n_experiences << "\n"
                  << "loop_closures = " << res.n_loop_closures << "\n"
                  << "map_residual = " << ratnav::fmt_double(res.map_residual) << "\n";
    } catch (const std::exception& e) {
        return fail(kRuntimeError, e.what());
    }
    return kOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, long long seed_override) {
    if (!std::filesystem::exists(spec_path)) return fail(kMissingData, "scenario file not found: " + spec_path);
    ratnav::ScenarioSpec sp;
    try {
        sp = ratnav::load_scenario(spec_path);
        if (seed_override >= 0) sp.seed = static_cast<std::uint64_t>(seed_override);
    } catch (const std::exception& e) {
        return fail(kBadInput, e.what());
    }
    try {
        ratnav::SynthResult res = ratnav::generate_dataset(sp, out_dir);
        std::cout << "frames = " << res.n_frames << "\n"
                  << "path_length = " << ratnav::fmt_double(res.path_length) << "\n";
    } catch (const std::exception& e) {
        return fail(kRuntimeError, e.what());
    }
    return kOk;
}

int cmd_eval(const std::string& run_dir, const std::string& data_dir, const std::string& out_dir,
             bool do_align) {
    auto traj_file = std::filesystem::path(run_dir) / "trajectory.csv";
    if (!std::filesystem::exists(traj_file)) return fail(kMissingData, "no trajectory.csv in " + run_dir);
    if (!std::filesystem::exists(std::filesystem::path(data_dir) / "dataset.toml"))
        return fail(kMissingData, "no dataset.toml in " + data_dir);

    std::vector<TrajRow> traj;
    std::vector<ratnav::SyncedStep> steps;
    try {
        traj = read_trajectory(traj_file);
        steps = ratnav::synchronize(ratnav::load_dataset(data_dir));
    } catch (const std::exception& e) {
        return fail(kBadInput, e.what());
    }
    if (traj.empty()) return fail(kBadInput, "trajectory is empty");

    std::vector<ratnav::Point2> gt;
    std::vector<double> gt_ts;
    for (const auto& st : steps)
        if (st.has_gt) {
            gt.push_back({st.gt_x, st.gt_y});
            gt_ts.push_back(st.timestamp);
        }
    if (gt.empty()) return fail(kMissingData, "dataset has no ground truth");

    try {
        std::vector<ratnav::Point2> est;
        for (const auto& r : traj) est.push_back(r.p);

        // dead reckoning integrates the raw odometry from the dataset origin
        std::vector<ratnav::Point2> dead;
        std::vector<double> dead_ts;
        ratnav::Se2 pose;
        for (const auto& st : steps) {
            pose = ratnav::se2_advance(pose, st.delta_s, st.delta_theta);
            dead.push_back({pose.x, pose.y});
            dead_ts.push_back(st.timestamp);
        }

        auto pair_by_time = [&](const std::vector<ratnav::Point2>& pts, const std::vector<double>& ts,
                                std::vector<ratnav::Point2>& a, std::vector<ratnav::Point2>& b) {
            size_t gi = 0;
            for (size_t i = 0; i < pts.size(); ++i) {
                while (gi + 1 < gt_ts.size() &&
                       std::fabs(gt_ts[gi + 1] - ts[i]) <= std::fabs(gt_ts[gi] - ts[i]))
                    ++gi;
                if (std::fabs(gt_ts[gi] - ts[i]) <= ratnav::kGtJoinWindow) {
                    a.push_back(pts[i]);
                    b.push_back(gt[gi]);
                }
            }
        };

        double d_est_raw = ratnav::hausdorff(est, gt);
        double d_dead_raw = ratnav::hausdorff(dead, gt);

        nlohmann::json rep;
        rep["n_est"] = est.size();
        rep["n_gt"] = gt.size();
        rep["d_hausdorff_raw"] = d_est_raw;
        rep["d_deadreckon_raw"] = d_dead_raw;
        std::string text;
        text += "n_est = " + std::to_string(est.size()) + "\n";
        text += "n_gt = " + std::to_string(gt.size()) + "\n";
        text += "d_hausdorff_raw = " + ratnav::fmt_double(d_est_raw) + "\n";
        text += "d_deadreckon_raw = " + ratnav::fmt_double(d_dead_raw) + "\n";

        double d_headline = d_est_raw;
        if (do_align) {
            std::vector<double> est_ts;
            for (const auto& r : traj) est_ts.push_back(r.timestamp);
            std::vector<ratnav::Point2> pe, pg;
            pair_by_time(est, est_ts, pe, pg);
            ratnav::Alignment al = ratnav::align_rigid(pe, pg);
            double d_est_al = ratnav::hausdorff(ratnav::apply_alignment(al, est), gt);

            std::vector<ratnav::Point2> pd, pdg;
            pair_by_time(dead, dead_ts, pd, pdg);
            ratnav::Alignment ald = ratnav::align_rigid(pd, pdg);
            double d_dead_al = ratnav::hausdorff(ratnav::apply_alignment(ald, dead), gt);

            d_headline = d_est_al;
            rep["d_hausdorff_aligned"] = d_est_al;
            rep["d_deadreckon_aligned"] = d_dead_al;
            rep["align_theta"] = al.theta;
            rep["align_tx"] = al.tx;
            rep["align_ty"] = al.ty;
            text += "d_hausdorff_aligned = " + ratnav::fmt_double(d_est_al) + "\n";
            text += "d_deadreckon_aligned = " + ratnav::fmt_double(d_dead_al) + "\n";
            text += "align_theta = " + ratnav::fmt_double(al.theta) + "\n";
            text += "align_tx = " + ratnav::fmt_double(al.tx) + "\n";
            text += "align_ty = " + ratnav::fmt_double(al.ty) + "\n";
        }
        rep["d_hausdorff"] = d_headline;
        text += "d_hausdorff = " + ratnav::fmt_double(d_headline) + "\n";

        std::cout << text;
        std::filesystem::path out = out_dir.empty() ? std::filesystem::path(run_dir)
                                                    : std::filesystem::path(out_dir);
        std::filesystem::create_directories(out);
        ratnav::write_text_file(out / "report.txt", text);
        ratnav::write_text_file(out / "report.json", rep.dump(2) + "\n");
    } catch (const std::exception& e) {
        return fail(kRuntimeError, e.what());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trajectory mapping pipeline: dataset ingest, attractor localization, "
                 "experience map, evaluation"};
    app.require_subcommand(1);

    std::string data_dir, out_dir, config_path, spec_path, run_dir;
    std::vector<std::string> overrides;
    bool dump_volumes = false, do_align = false;
    long long seed_override = -1;

    auto* run = app.add_subcommand("run", "process a recorded dataset into an experience map");
    run->add_option("data", data_dir, "dataset directory")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--config", config_path, "config file (key = value)");
    run->add_option("--set", overrides, "override a config key, key=value")->take_all();
    run->add_flag("--dump-volumes", dump_volumes, "write per-step activity volume snapshots");

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset from a scenario file");
    synth->add_option("scenario", spec_path, "scenario file")->required();
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--seed", seed_override, "override the scenario seed");

    auto* eval = app.add_subcommand("eval", "compare a run against dataset ground truth");
    eval->add_option("run_dir", run_dir, "run output directory (with trajectory.csv)")->required();
    eval->add_option("data", data_dir, "dataset directory")->required();
    eval->add_option("--out", out_dir, "report directory (default: run_dir)");
    eval->add_flag("--align", do_align, "rigidly align the estimate to ground truth first");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kBadInput;
    }

    if (run->parsed()) return cmd_run(data_dir, out_dir, config_path, overrides, dump_volumes);
    if (synth->parsed()) return cmd_synth(spec_path, out_dir, seed_override);
    if (eval->parsed()) return cmd_eval(run_dir, data_dir, out_dir, do_align);
    return kBadInput;
}
