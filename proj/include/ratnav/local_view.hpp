#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ratnav/config.hpp"
#include "ratnav/image.hpp"
#include "ratnav/pose_cells.hpp"
#include "ratnav/util.hpp"

namespace ratnav {

struct TemplateVector {
    int tx = 0, ty = 0;
    std::vector<double> values;  // row-major, values[y*tx + x]

    double at(int x, int y) const { return values[static_cast<size_t>(y) * tx + x]; }
    double& at(int x, int y) { return values[static_cast<size_t>(y) * tx + x]; }
};

struct VisualTemplate {
    int id = 0;
    TemplateVector data;
    PackedPose beta_pose;   // pose cell coordinate bound at creation
    double activity = 0;    // saturation state
};

struct TemplateStore {
    std::vector<VisualTemplate> templates;
};

// crop -> block-average downsample -> optional global/patch normalization
inline TemplateVector preprocess(const Image& frame, const RunConfig& cfg) {
    if (cfg.image_crop_x_min < 0 || cfg.image_crop_x_max > frame.width ||
        cfg.image_crop_y_min < 0 || cfg.image_crop_y_max > frame.height)
        throw std::runtime_error("image crop window outside frame");
    int cw = cfg.image_crop_x_max - cfg.image_crop_x_min;
    int ch = cfg.image_crop_y_max - cfg.image_crop_y_min;
    int tx = cfg.template_x_size, ty = cfg.template_y_size;
    if (cw < tx || ch < ty) throw std::runtime_error("crop window smaller than template grid");

    TemplateVector t;
    t.tx = tx;
    t.ty = ty;
    t.values.resize(static_cast<size_t>(tx) * ty);
    for (int j = 0; j < ty; ++j) {
        int y0 = cfg.image_crop_y_min + static_cast<int>(static_cast<int64_t>(j) * ch / ty);
        int y1 = cfg.image_crop_y_min + static_cast<int>(static_cast<int64_t>(j + 1) * ch / ty);
        for (int i = 0; i < tx; ++i) {
            int x0 = cfg.image_crop_x_min + static_cast<int>(static_cast<int64_t>(i) * cw / tx);
            int x1 = cfg.image_crop_x_min + static_cast<int>(static_cast<int64_t>(i + 1) * cw / tx);
            double sum = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) sum += frame.intensity(x, y);
            t.at(i, j) = sum / (static_cast<double>(x1 - x0) * (y1 - y0));
        }
    }

    if (cfg.vt_normalisation > 0) {
        // brightness-only correction: pull the mean toward 0.5, contrast untouched
        double mean = 0;
        for (double v : t.values) mean += v;
        mean /= static_cast<double>(t.values.size());
        double shift = cfg.vt_normalisation * (0.5 - mean);
        for (double& v : t.values) v += shift;
    }

    if (cfg.vt_patch_normalise > 0) {
        int r = cfg.vt_patch_normalise;
        TemplateVector out = t;
        for (int j = 0; j < ty; ++j)
            for (int i = 0; i < tx; ++i) {
                int x0 = std::max(0, i - r), x1 = std::min(tx - 1, i + r);
                int y0 = std::max(0, j - r), y1 = std::min(ty - 1, j + r);
                double mean = 0, m2 = 0;
                int n = 0;
                for (int y = y0; y <= y1; ++y)
                    for (int x = x0; x <= x1; ++x) {
                        mean += t.at(x, y);
                        m2 += t.at(x, y) * t.at(x, y);
                        ++n;
                    }
                mean /= n;
                double var = m2 / n - mean * mean;
                if (var < 1e-6) var = 1e-6;
                double z = (t.at(i, j) - mean) / std::sqrt(var);
                // map +-3 sigma onto [0,1]
                double v = 0.5 + z / 6.0;
                out.at(i, j) = v < 0 ? 0 : (v > 1 ? 1 : v);
            }
        t = out;
    }
    return t;
}

struct CompareResult {
    double score = std::numeric_limits<double>::infinity();
    int best_shift = 0;
};

// mean absolute difference over the overlap, scanning horizontal shifts;
// score(s) compares a[x] against b[x+s], so a positive shift means b moved right
inline CompareResult compare(const TemplateVector& a, const TemplateVector& b, const RunConfig& cfg) {
    if (a.tx != b.tx || a.ty != b.ty) throw std::runtime_error("compare: template dims differ");
    CompareResult best;
    int kmax = cfg.vt_step_match > 0 ? cfg.vt_shift_match / cfg.vt_step_match : 0;
    for (int k = -kmax; k <= kmax; ++k) {
        int s = k * cfg.vt_step_match;
        double sum = 0;
        int count = 0;
        if (cfg.vt_panoramic) {
            for (int y = 0; y < a.ty; ++y)
                for (int x = 0; x < a.tx; ++x) {
                    sum += std::fabs(a.at(x, y) - b.at(wrap_index(x + s, a.tx), y));
                    ++count;
                }
        } else {
            int x_lo = s < 0 ? -s : 0;
            int x_hi = a.tx - (s > 0 ? s : 0);
            for (int y = 0; y < a.ty; ++y)
                for (int x = x_lo; x < x_hi; ++x) {
                    sum += std::fabs(a.at(x, y) - b.at(x + s, y));
                    ++count;
                }
        }
        if (count == 0) continue;
        double score = sum / count;
        if (score < best.score) {
            best.score = score;
            best.best_shift = s;
        }
    }
    return best;
}

struct ViewEvent {
    bool created = false;
    int id = -1;
    double strength = 0;  // injection strength after saturation; 0 for created
};

// match the frame against the store or learn a new template bound to the current pose
inline ViewEvent observe(const Image& frame, TemplateStore& store, const PackedPose& current_pc,
                         const RunConfig& cfg) {
    TemplateVector t = preprocess(frame, cfg);

    int best_id = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& vt : store.templates) {
        double s = compare(t, vt.data, cfg).score;
        if (s < best_score) {
            best_score = s;
            best_id = vt.id;
        }
    }

    // per-step restoration: every template's saturation relaxes toward zero
    for (auto& vt : store.templates)
        vt.activity = std::max(0.0, vt.activity - cfg.pc_vt_restore);

    ViewEvent ev;
    if (best_id >= 0 && best_score <= cfg.vt_match_threshold) {
        VisualTemplate& vt = store.templates[best_id];
        ev.created = false;
        ev.id = best_id;
        ev.strength = 1.0 / (1.0 + vt.activity);
        vt.activity += cfg.vt_active_decay;
    } else {
        VisualTemplate vt;
        vt.id = static_cast<int>(store.templates.size());
        vt.data = std::move(t);
        vt.beta_pose = current_pc;
        vt.activity = 0;
        store.templates.push_back(std::move(vt));
        ev.created = true;
        ev.id = store.templates.back().id;
        ev.strength = 0;
    }
    return ev;
}

// one template per line: id, beta pose, activity, then the template values
inline std::string export_templates(const TemplateStore& store) {
    std::string out = "# id beta_x beta_y beta_theta activity values...\n";
    for (const auto& vt : store.templates) {
        out += fmt_int(vt.id);
        out += " " + fmt_double(vt.beta_pose.x_c);
        out += " " + fmt_double(vt.beta_pose.y_c);
        out += " " + fmt_double(vt.beta_pose.theta_c);
        out += " " + fmt_double(vt.activity);
        for (double v : vt.data.values) {
            out += " ";
            out += fmt_double(v);
        }
        out += "\n";
    }
    return out;
}

}  // namespace ratnav
