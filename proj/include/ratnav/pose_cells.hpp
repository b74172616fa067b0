#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "ratnav/config.hpp"
#include "ratnav/util.hpp"

namespace ratnav {

// 3-D activity grid over (x', y', theta'); all axes wrap
struct ActivityVolume {
    int nx = 0, ny = 0, nth = 0;
    std::vector<double> v;

    ActivityVolume() = default;
    ActivityVolume(int nx_, int ny_, int nth_)
        : nx(nx_), ny(ny_), nth(nth_), v(static_cast<size_t>(nx_) * ny_ * nth_, 0.0) {}

    size_t idx(int x, int y, int t) const {
        return (static_cast<size_t>(x) * ny + y) * nth + t;
    }
    double& at(int x, int y, int t) { return v[idx(x, y, t)]; }
    double at(int x, int y, int t) const { return v[idx(x, y, t)]; }
    size_t size() const { return v.size(); }
};

struct Kernel3 {
    int dim = 0;
    double sigma = 0;
    std::vector<double> weights;  // dim^3 cube, same layout as ActivityVolume
    std::vector<double> axis;     // normalized 1-D Gaussian factor; cube = outer product
};

struct PackedPose {
    double x_c = 0, y_c = 0, theta_c = 0;
};

inline Kernel3 build_kernel(double sigma, int dim) {
    if (dim <= 0 || dim % 2 == 0) throw std::runtime_error("kernel dim must be odd and positive");
    if (!(sigma > 0)) throw std::runtime_error("kernel sigma must be positive");
    Kernel3 k;
    k.dim = dim;
    k.sigma = sigma;
    int r = (dim - 1) / 2;
    k.axis.resize(dim);
    double sum = 0;
    for (int a = -r; a <= r; ++a) {
        double w = std::exp(-(static_cast<double>(a) * a) / (2.0 * sigma * sigma));
        k.axis[a + r] = w;
        sum += w;
    }
    for (double& w : k.axis) w /= sum;
    k.weights.resize(static_cast<size_t>(dim) * dim * dim);
    size_t i = 0;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
            for (int c = 0; c < dim; ++c) k.weights[i++] = k.axis[a] * k.axis[b] * k.axis[c];
    return k;
}

namespace detail {

// wrapped 1-D convolution along one axis with a symmetric kernel factor
inline void convolve_axis(const ActivityVolume& src, ActivityVolume& dst, const std::vector<double>& axis,
                          int which) {
    int dims[3] = {src.nx, src.ny, src.nth};
    int n = dims[which];
    int r = (static_cast<int>(axis.size()) - 1) / 2;
    std::fill(dst.v.begin(), dst.v.end(), 0.0);
    for (int x = 0; x < src.nx; ++x)
        for (int y = 0; y < src.ny; ++y)
            for (int t = 0; t < src.nth; ++t) {
                double acc = 0;
                int c[3] = {x, y, t};
                int base = c[which];
                for (int o = -r; o <= r; ++o) {
                    c[which] = wrap_index(base - o, n);
                    acc += axis[o + r] * src.at(c[0], c[1], c[2]);
                }
                c[which] = base;
                dst.at(c[0], c[1], c[2]) = acc;
            }
}

inline void check_kernel_fits(const ActivityVolume& P, const Kernel3& k) {
    if (k.dim > P.nx || k.dim > P.ny || k.dim > P.nth)
        throw std::runtime_error("kernel dims exceed grid dims");
}

}  // namespace detail

// circular convolution P * kernel, computed as three separable wrapped passes
inline ActivityVolume convolve3(const ActivityVolume& P, const Kernel3& k) {
    detail::check_kernel_fits(P, k);
    ActivityVolume a(P.nx, P.ny, P.nth), b(P.nx, P.ny, P.nth);
    detail::convolve_axis(P, a, k.axis, 0);
    detail::convolve_axis(a, b, k.axis, 1);
    detail::convolve_axis(b, a, k.axis, 2);
    return a;
}

// excitation delta; caller adds it to P
inline ActivityVolume excite(const ActivityVolume& P, const Kernel3& eps) {
    return convolve3(P, eps);
}

// inhibition delta (negative), including the global term; caller adds it to P
inline ActivityVolume inhibit(const ActivityVolume& P, const Kernel3& psi, double phi) {
    ActivityVolume d = convolve3(P, psi);
    for (double& x : d.v) x = -x - phi;
    return d;
}

inline void clip_normalize(ActivityVolume& P) {
    double sum = 0;
    for (double& x : P.v) {
        if (x < 0) x = 0;
        sum += x;
    }
    if (sum <= 0)
        throw std::runtime_error("pose cell network collapsed: no activity left after clipping");
    for (double& x : P.v) x /= sum;
}

// shift activity by odometry: each theta layer translates along its own heading,
// then the whole volume shifts along theta; fractional parts spread bilinearly
inline ActivityVolume path_integrate(const ActivityVolume& P, double delta_s, double delta_theta,
                                     const RunConfig& cfg) {
    if (!std::isfinite(delta_s) || !std::isfinite(delta_theta))
        throw std::runtime_error("path_integrate: non-finite odometry");
    ActivityVolume out(P.nx, P.ny, P.nth);
    for (int t = 0; t < P.nth; ++t) {
        double heading = 2.0 * kPi * t / P.nth;
        double dx = delta_s * std::cos(heading) / cfg.pc_cell_x_size;
        double dy = delta_s * std::sin(heading) / cfg.pc_cell_x_size;
        int ix = static_cast<int>(std::floor(dx)), iy = static_cast<int>(std::floor(dy));
        double fx = dx - ix, fy = dy - iy;
        for (int x = 0; x < P.nx; ++x)
            for (int y = 0; y < P.ny; ++y) {
                double m = P.at(x, y, t);
                if (m == 0) continue;
                int x0 = wrap_index(x + ix, P.nx), x1 = wrap_index(x + ix + 1, P.nx);
                int y0 = wrap_index(y + iy, P.ny), y1 = wrap_index(y + iy + 1, P.ny);
                out.at(x0, y0, t) += m * (1 - fx) * (1 - fy);
                out.at(x1, y0, t) += m * fx * (1 - fy);
                out.at(x0, y1, t) += m * (1 - fx) * fy;
                out.at(x1, y1, t) += m * fx * fy;
            }
    }
    double dt = delta_theta * P.nth / (2.0 * kPi);
    int it = static_cast<int>(std::floor(dt));
    double ft = dt - it;
    if (it == 0 && ft == 0) return out;
    ActivityVolume rot(P.nx, P.ny, P.nth);
    for (int x = 0; x < P.nx; ++x)
        for (int y = 0; y < P.ny; ++y)
            for (int t = 0; t < P.nth; ++t) {
                double m = out.at(x, y, t);
                if (m == 0) continue;
                int t0 = wrap_index(t + it, P.nth), t1 = wrap_index(t + it + 1, P.nth);
                rot.at(x, y, t0) += m * (1 - ft);
                rot.at(x, y, t1) += m * ft;
            }
    return rot;
}

struct ViewLink {
    PackedPose pose;
    double strength = 0;
};

// add delta*strength around each linked pose coordinate, spread trilinearly
inline void inject(ActivityVolume& P, const std::vector<ViewLink>& links, double delta) {
    for (const auto& l : links) {
        if (l.pose.x_c < 0 || l.pose.x_c >= P.nx || l.pose.y_c < 0 || l.pose.y_c >= P.ny ||
            l.pose.theta_c < 0 || l.pose.theta_c >= P.nth)
            throw std::runtime_error("inject: pose coordinate out of wrapped range");
        double amount = delta * l.strength;
        int x0 = static_cast<int>(std::floor(l.pose.x_c));
        int y0 = static_cast<int>(std::floor(l.pose.y_c));
        int t0 = static_cast<int>(std::floor(l.pose.theta_c));
        double fx = l.pose.x_c - x0, fy = l.pose.y_c - y0, ft = l.pose.theta_c - t0;
        for (int a = 0; a <= 1; ++a)
            for (int b = 0; b <= 1; ++b)
                for (int c = 0; c <= 1; ++c) {
                    double w = (a ? fx : 1 - fx) * (b ? fy : 1 - fy) * (c ? ft : 1 - ft);
                    if (w == 0) continue;
                    P.at(wrap_index(x0 + a, P.nx), wrap_index(y0 + b, P.ny), wrap_index(t0 + c, P.nth)) +=
                        amount * w;
                }
    }
}

// energy-weighted circular mean over a wrapped box around the argmax
// (ties broken toward the lowest linear index)
inline PackedPose centroid(const ActivityVolume& P, int radius) {
    size_t best = 0;
    for (size_t i = 1; i < P.v.size(); ++i)
        if (P.v[i] > P.v[best]) best = i;
    int bt = static_cast<int>(best % P.nth);
    int by = static_cast<int>((best / P.nth) % P.ny);
    int bx = static_cast<int>(best / (static_cast<size_t>(P.nth) * P.ny));
    auto reff = [radius](int dim) {
        int m = (dim - 1) / 2;
        return radius < m ? radius : m;
    };
    int rx = reff(P.nx), ry = reff(P.ny), rt = reff(P.nth);
    double mass = 0, sx = 0, sy = 0, st = 0;
    for (int a = -rx; a <= rx; ++a)
        for (int b = -ry; b <= ry; ++b)
            for (int c = -rt; c <= rt; ++c) {
                double m = P.at(wrap_index(bx + a, P.nx), wrap_index(by + b, P.ny), wrap_index(bt + c, P.nth));
                mass += m;
                sx += m * a;
                sy += m * b;
                st += m * c;
            }
    PackedPose pose;
    if (mass <= 0) {
        pose.x_c = bx;
        pose.y_c = by;
        pose.theta_c = bt;
        return pose;
    }
    pose.x_c = wrap_coord(bx + sx / mass, P.nx);
    pose.y_c = wrap_coord(by + sy / mass, P.ny);
    pose.theta_c = wrap_coord(bt + st / mass, P.nth);
    return pose;
}

// one full update: inject -> excite -> inhibit -> clip+normalize -> path integrate
inline PackedPose step_volume(ActivityVolume& P, double delta_s, double delta_theta,
                              const std::vector<ViewLink>& links, const Kernel3& eps, const Kernel3& psi,
                              const RunConfig& cfg) {
    inject(P, links, cfg.pc_vt_inject_energy);
    ActivityVolume d = excite(P, eps);
    for (size_t i = 0; i < P.v.size(); ++i) P.v[i] += d.v[i];
    d = inhibit(P, psi, cfg.pc_global_inhibit);
    for (size_t i = 0; i < P.v.size(); ++i) P.v[i] += d.v[i];
    clip_normalize(P);
    P = path_integrate(P, delta_s, delta_theta, cfg);
    return centroid(P, (cfg.pc_w_e_dim - 1) / 2);
}

class PoseCellNetwork {
  public:
    explicit PoseCellNetwork(const RunConfig& cfg)
        : cfg_(cfg),
          eps_(build_kernel(cfg.pc_sigma_e, cfg.pc_w_e_dim)),
          psi_(build_kernel(cfg.pc_sigma_i, cfg.pc_w_i_dim)),
          P_(cfg.pc_dim_xy, cfg.pc_dim_xy, cfg.pc_dim_th) {
        // start with all activity in one central cell; the attractor shapes it into a packet
        P_.at(cfg.pc_dim_xy / 2, cfg.pc_dim_xy / 2, 0) = 1.0;
    }

    PackedPose step(double delta_s, double delta_theta, const std::vector<ViewLink>& links) {
        return step_volume(P_, delta_s, delta_theta, links, eps_, psi_, cfg_);
    }

    PackedPose pose() const { return centroid(P_, (cfg_.pc_w_e_dim - 1) / 2); }
    const ActivityVolume& volume() const { return P_; }
    ActivityVolume& volume() { return P_; }

  private:
    RunConfig cfg_;
    Kernel3 eps_, psi_;
    ActivityVolume P_;
};

// debug snapshot: three little-endian uint64 dims, then row-major 64-bit floats
inline void dump_volume(const ActivityVolume& P, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    uint64_t dims[3] = {static_cast<uint64_t>(P.nx), static_cast<uint64_t>(P.ny),
                        static_cast<uint64_t>(P.nth)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(P.v.data()), static_cast<std::streamsize>(P.v.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace ratnav
