#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ratnav/config.hpp"
#include "ratnav/pose_cells.hpp"
#include "ratnav/util.hpp"

namespace ratnav {

using MapPose = Se2;  // x, y in meters; theta wrapped to (-pi, pi]

struct Experience {
    int id = 0;
    PackedPose pc_pose;
    int view_id = 0;
    MapPose pose;
    double timestamp = 0;
    std::vector<int> out_links, in_links;
};

struct Link {
    int from_id = 0, to_id = 0;
    MapPose delta;      // relative transform in the source experience's frame
    double delta_t = 0;
};

struct MapEvent {
    enum Kind { kStayed, kCreated, kLoopClosed } kind = kStayed;
    int id = -1;         // created id, or the active experience after the event
    int from = -1, to = -1;  // loop closure endpoints
};

class ExperienceMap {
  public:
    explicit ExperienceMap(const RunConfig& cfg) : cfg_(cfg) {}

    // S^i = |P^i - P| + mu_v * [view differs]; view mismatch dominates any plausible cell distance
    std::vector<double> score_all(const PackedPose& pc, int view_id) const {
        double mu_v = 10.0 * cfg_.pc_dim_xy;
        std::vector<double> scores;
        scores.reserve(experiences_.size());
        for (const auto& e : experiences_) {
            double dx = ring_diff(e.pc_pose.x_c, pc.x_c, cfg_.pc_dim_xy);
            double dy = ring_diff(e.pc_pose.y_c, pc.y_c, cfg_.pc_dim_xy);
            double dt = ring_diff(e.pc_pose.theta_c, pc.theta_c, cfg_.pc_dim_th);
            double s = std::sqrt(dx * dx + dy * dy + dt * dt);
            if (e.view_id != view_id) s += mu_v;
            scores.push_back(s);
        }
        return scores;
    }

    MapEvent update(const PackedPose& pc, int view_id, double delta_s, double delta_theta, double delta_t,
                    double timestamp) {
        accum_ = se2_advance(accum_, delta_s, delta_theta);
        accum_t_ += delta_t;

        MapEvent ev;
        if (experiences_.empty()) {
            MapPose origin{0, 0, wrap_angle(cfg_.exp_initial_em_deg * kPi / 180.0)};
            ev.kind = MapEvent::kCreated;
            ev.id = add_experience(pc, view_id, origin, timestamp);
            active_id_ = ev.id;
            reset_accum();
            return ev;
        }

        std::vector<double> scores = score_all(pc, view_id);
        int best = 0;
        for (int i = 1; i < static_cast<int>(scores.size()); ++i)
            if (scores[i] < scores[best]) best = i;

        if (scores[best] >= cfg_.exp_delta_pc_threshold) {
            MapPose pose = se2_compose(experiences_[active_id_].pose, accum_);
            int id = add_experience(pc, view_id, pose, timestamp);
            add_link(active_id_, id, accum_, accum_t_);
            active_id_ = id;
            reset_accum();
            ev.kind = MapEvent::kCreated;
            ev.id = id;
            return ev;
        }

        if (best == active_id_) {
            ev.kind = MapEvent::kStayed;
            ev.id = active_id_;
            return ev;
        }

        // re-entered a known experience: constrain it with the odometry since the
        // last transition and relax the whole graph
        add_link(active_id_, best, accum_, accum_t_);
        relax();
        ev.kind = MapEvent::kLoopClosed;
        ev.from = active_id_;
        ev.to = best;
        ev.id = best;
        active_id_ = best;
        reset_accum();
        return ev;
    }

    // one Jacobi pass of the correction rule; every node moves by alpha times the
    // mean of its incident link residuals, all computed from the same snapshot
    double relax_once(double alpha) {
        size_t n = experiences_.size();
        std::vector<double> cx(n, 0), cy(n, 0), cth(n, 0);
        std::vector<int> deg(n, 0);
        for (const auto& l : links_) {
            const MapPose& pi = experiences_[l.from_id].pose;
            const MapPose& pj = experiences_[l.to_id].pose;
            MapPose pred = se2_compose(pi, l.delta);  // where the link says the target sits
            double rx = pj.x - pred.x, ry = pj.y - pred.y;
            double rth = wrap_angle(pj.theta - pred.theta);
            cx[l.to_id] -= rx;
            cy[l.to_id] -= ry;
            cth[l.to_id] -= rth;
            cx[l.from_id] += rx;
            cy[l.from_id] += ry;
            cth[l.from_id] += rth;
            ++deg[l.from_id];
            ++deg[l.to_id];
        }
        double max_corr = 0;
        for (size_t i = 0; i < n; ++i) {
            if (deg[i] == 0) continue;
            double s = alpha / deg[i];
            double dx = s * cx[i], dy = s * cy[i];
            experiences_[i].pose.x += dx;
            experiences_[i].pose.y += dy;
            experiences_[i].pose.theta = wrap_angle(experiences_[i].pose.theta + s * cth[i]);
            max_corr = std::max(max_corr, std::sqrt(dx * dx + dy * dy));
        }
        return max_corr;
    }

    double relax() {
        for (int i = 0; i < cfg_.exp_loops; ++i) relax_once(cfg_.exp_correction);
        return residual();
    }

    // total link disagreement: sqrt of summed squared translation and wrapped angle errors
    double residual() const {
        double e = 0;
        for (const auto& l : links_) {
            MapPose pred = se2_compose(experiences_[l.from_id].pose, l.delta);
            const MapPose& pj = experiences_[l.to_id].pose;
            double rx = pj.x - pred.x, ry = pj.y - pred.y;
            double rth = wrap_angle(pj.theta - pred.theta);
            e += rx * rx + ry * ry + rth * rth;
        }
        return std::sqrt(e);
    }

    std::vector<std::pair<int, MapPose>> trajectory() const {
        std::vector<std::pair<int, MapPose>> out;
        out.reserve(experiences_.size());
        for (const auto& e : experiences_) out.emplace_back(e.id, e.pose);
        return out;
    }

    const std::vector<Experience>& experiences() const { return experiences_; }
    std::vector<Experience>& experiences() { return experiences_; }
    const std::vector<Link>& links() const { return links_; }
    int active_id() const { return active_id_; }

    // test hook: build a graph directly
    int add_experience(const PackedPose& pc, int view_id, const MapPose& pose, double timestamp) {
        Experience e;
        e.id = static_cast<int>(experiences_.size());
        e.pc_pose = pc;
        e.view_id = view_id;
        e.pose = pose;
        e.timestamp = timestamp;
        experiences_.push_back(std::move(e));
        return experiences_.back().id;
    }

    void add_link(int from, int to, const MapPose& delta, double delta_t) {
        if (from == to) throw std::runtime_error("link endpoints must differ");
        Link l;
        l.from_id = from;
        l.to_id = to;
        l.delta = delta;
        l.delta_t = delta_t;
        int id = static_cast<int>(links_.size());
        links_.push_back(l);
        experiences_[from].out_links.push_back(id);
        experiences_[to].in_links.push_back(id);
    }

    std::string export_experiences() const {
        std::string out = "# id x y theta view_id pc_x pc_y pc_theta timestamp\n";
        for (const auto& e : experiences_) {
            out += fmt_int(e.id);
            out += " " + fmt_double(e.pose.x) + " " + fmt_double(e.pose.y) + " " + fmt_double(e.pose.theta);
            out += " " + fmt_int(e.view_id);
            out += " " + fmt_double(e.pc_pose.x_c) + " " + fmt_double(e.pc_pose.y_c) + " " +
                   fmt_double(e.pc_pose.theta_c);
            out += " " + fmt_double(e.timestamp);
            out += "\n";
        }
        return out;
    }

    std::string export_links() const {
        std::string out = "# from to dx dy dtheta dt\n";
        for (const auto& l : links_) {
            out += fmt_int(l.from_id) + " " + fmt_int(l.to_id);
            out += " " + fmt_double(l.delta.x) + " " + fmt_double(l.delta.y) + " " + fmt_double(l.delta.theta);
            out += " " + fmt_double(l.delta_t);
            out += "\n";
        }
        return out;
    }

  private:
    void reset_accum() {
        accum_ = Se2{};
        accum_t_ = 0;
    }

    RunConfig cfg_;
    std::vector<Experience> experiences_;
    std::vector<Link> links_;
    int active_id_ = -1;
    Se2 accum_;          // odometry in the frame of the last transition's experience
    double accum_t_ = 0;
};

}  // namespace ratnav
