#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ratnav/pose_cells.hpp"

using namespace ratnav;

namespace {

// independent reference: full wrapped triple-sum against the kernel cube
ActivityVolume convolve_oracle(const ActivityVolume& P, const Kernel3& k) {
    ActivityVolume out(P.nx, P.ny, P.nth);
    int r = (k.dim - 1) / 2;
    for (int x = 0; x < P.nx; ++x)
        for (int y = 0; y < P.ny; ++y)
            for (int t = 0; t < P.nth; ++t) {
                double acc = 0;
                for (int a = -r; a <= r; ++a)
                    for (int b = -r; b <= r; ++b)
                        for (int c = -r; c <= r; ++c) {
                            double w = k.weights[(static_cast<size_t>(a + r) * k.dim + (b + r)) * k.dim + (c + r)];
                            acc += w * P.at(wrap_index(x - a, P.nx), wrap_index(y - b, P.ny),
                                            wrap_index(t - c, P.nth));
                        }
                out.at(x, y, t) = acc;
            }
    return out;
}

ActivityVolume random_volume(int nx, int ny, int nth, uint64_t seed, bool normalized = false) {
    ActivityVolume P(nx, ny, nth);
    Rng rng(seed);
    double sum = 0;
    for (auto& x : P.v) {
        x = rng.uniform();
        sum += x;
    }
    if (normalized)
        for (auto& x : P.v) x /= sum;
    return P;
}

double max_abs_diff(const ActivityVolume& a, const ActivityVolume& b) {
    double m = 0;
    for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
    return m;
}

double volume_sum(const ActivityVolume& P) {
    double s = 0;
    for (double x : P.v) s += x;
    return s;
}

RunConfig default_cfg() { return RunConfig{}; }

ActivityVolume converged_volume(const RunConfig& cfg, int warmup = 30) {
    PoseCellNetwork net(cfg);
    for (int i = 0; i < warmup; ++i) net.step(0, 0, {});
    return net.volume();
}

}  // namespace

TEST_CASE("build_kernel degenerate and closed-form cases") {
    Kernel3 k1 = build_kernel(1.0, 1);
    REQUIRE(k1.weights.size() == 1);
    CHECK(k1.weights[0] == Catch::Approx(1.0).margin(1e-15));

    Kernel3 k3 = build_kernel(1.0, 3);
    double a = std::exp(-0.5);
    double center_expected = 1.0 / (1.0 + 6 * a + 12 * a * a + 8 * a * a * a);
    // center of the cube sits at offset (0,0,0) = linear index (1*3+1)*3+1
    CHECK(k3.weights[13] == Catch::Approx(center_expected).margin(1e-14));
    double ks = 0;
    for (double w : k3.weights) ks += w;
    CHECK(ks == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("kernel weights are symmetric under axis negation") {
    Kernel3 k = build_kernel(2.3, 7);
    int d = k.dim;
    auto w = [&](int a, int b, int c) {
        return k.weights[(static_cast<size_t>(a) * d + b) * d + c];
    };
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c)
                CHECK(w(a, b, c) == Catch::Approx(w(d - 1 - a, d - 1 - b, d - 1 - c)).margin(1e-15));
}

TEST_CASE("build_kernel rejects bad parameters") {
    CHECK_THROWS(build_kernel(1.0, 4));
    CHECK_THROWS(build_kernel(1.0, 0));
    CHECK_THROWS(build_kernel(0.0, 3));
    CHECK_THROWS(build_kernel(-2.0, 5));
}

TEST_CASE("excite preserves a uniform field") {
    ActivityVolume P(6, 5, 4);
    double u = 1.0 / P.size();
    for (auto& x : P.v) x = u;
    Kernel3 k = build_kernel(1.1, 3);
    ActivityVolume d = excite(P, k);
    for (double x : d.v) CHECK(x == Catch::Approx(u).margin(1e-14));
}

TEST_CASE("excite impulse response reproduces the wrapped kernel") {
    ActivityVolume P(6, 6, 6);
    P.at(0, 0, 0) = 1.0;
    Kernel3 k = build_kernel(0.9, 3);
    ActivityVolume d = excite(P, k);
    int dim = k.dim;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c) {
                double w = k.weights[(static_cast<size_t>(a + 1) * dim + (b + 1)) * dim + (c + 1)];
                CHECK(d.at(wrap_index(a, 6), wrap_index(b, 6), wrap_index(c, 6)) ==
                      Catch::Approx(w).margin(1e-14));
            }
    CHECK(volume_sum(d) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("excite and inhibit match the triple-sum reference") {
    Rng rng(31);
    for (int trial = 0; trial < 12; ++trial) {
        int nx = static_cast<int>(rng.uniform_int(3, 7));
        int ny = static_cast<int>(rng.uniform_int(3, 7));
        int nth = static_cast<int>(rng.uniform_int(3, 7));
        int kd = 1 + 2 * static_cast<int>(rng.uniform_int(0, (std::min({nx, ny, nth}) - 1) / 2));
        ActivityVolume P = random_volume(nx, ny, nth, 1000 + trial);
        Kernel3 k = build_kernel(rng.uniform(0.4, 3.0), kd);
        CHECK(max_abs_diff(excite(P, k), convolve_oracle(P, k)) <= 1e-12);

        double phi = rng.uniform(0, 0.01);
        ActivityVolume inh = inhibit(P, k, phi);
        ActivityVolume ref = convolve_oracle(P, k);
        for (auto& x : ref.v) x = -x - phi;
        CHECK(max_abs_diff(inh, ref) <= 1e-12);
    }
}

TEST_CASE("inhibit uniform and zero-activity cases") {
    ActivityVolume P(4, 4, 4);
    double u = 1.0 / P.size();
    for (auto& x : P.v) x = u;
    Kernel3 k = build_kernel(1.0, 3);
    ActivityVolume d = inhibit(P, k, 0.0);
    for (double x : d.v) CHECK(x == Catch::Approx(-u).margin(1e-14));

    ActivityVolume Z(4, 4, 4);
    ActivityVolume dz = inhibit(Z, k, 0.1);
    for (double x : dz.v) CHECK(x == Catch::Approx(-0.1).margin(1e-15));
}

TEST_CASE("convolution rejects kernels larger than the grid") {
    ActivityVolume P(3, 3, 3);
    Kernel3 k = build_kernel(1.0, 5);
    CHECK_THROWS(excite(P, k));
}

TEST_CASE("clip_normalize pinned cases") {
    ActivityVolume P(3, 3, 3);
    for (auto& x : P.v) x = -1.0;
    P.at(1, 2, 0) = 2.0;
    clip_normalize(P);
    CHECK(P.at(1, 2, 0) == 1.0);
    CHECK(volume_sum(P) == Catch::Approx(1.0).margin(1e-12));

    ActivityVolume Q(2, 2, 2);
    for (auto& x : Q.v) x = 0.5;
    clip_normalize(Q);
    for (double x : Q.v) CHECK(x == Catch::Approx(0.125).margin(1e-15));

    // idempotence on an already-normalized volume
    ActivityVolume R = random_volume(4, 3, 5, 77, true);
    ActivityVolume R2 = R;
    clip_normalize(R2);
    CHECK(max_abs_diff(R, R2) <= 1e-12);

    ActivityVolume dead(2, 2, 2);
    CHECK_THROWS_WITH(clip_normalize(dead), Catch::Matchers::ContainsSubstring("collapsed"));
    for (auto& x : dead.v) x = -0.3;
    CHECK_THROWS(clip_normalize(dead));
}

TEST_CASE("path_integrate identity and integer shifts") {
    RunConfig cfg = default_cfg();
    ActivityVolume P = random_volume(18, 18, 17, 4, true);
    ActivityVolume same = path_integrate(P, 0, 0, cfg);
    CHECK(max_abs_diff(P, same) <= 1e-15);

    // mass on the theta=0 layer moves +1 in x for delta_s of one cell
    ActivityVolume L(18, 18, 17);
    L.at(3, 5, 0) = 0.7;
    L.at(9, 11, 0) = 0.3;
    ActivityVolume moved = path_integrate(L, cfg.pc_cell_x_size, 0, cfg);
    CHECK(moved.at(4, 5, 0) == Catch::Approx(0.7).margin(1e-15));
    CHECK(moved.at(10, 11, 0) == Catch::Approx(0.3).margin(1e-15));

    // integer shift is a permutation: sorted multiset of values preserved exactly
    // (mass on the theta=0 layer, whose heading is axis-aligned)
    ActivityVolume R(18, 18, 17);
    Rng rng(5);
    for (int x = 0; x < R.nx; ++x)
        for (int y = 0; y < R.ny; ++y) R.at(x, y, 0) = rng.uniform();
    ActivityVolume shifted = path_integrate(R, cfg.pc_cell_x_size, 0, cfg);
    auto a = R.v, b = shifted.v;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    bool equal = true;
    for (size_t i = 0; i < a.size(); ++i) equal = equal && a[i] == b[i];
    CHECK(equal);
}

TEST_CASE("path_integrate half-cell split") {
    RunConfig cfg = default_cfg();
    ActivityVolume P(18, 18, 17);
    P.at(4, 7, 0) = 1.0;
    ActivityVolume out = path_integrate(P, 0.5 * cfg.pc_cell_x_size, 0, cfg);
    CHECK(out.at(4, 7, 0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(out.at(5, 7, 0) == Catch::Approx(0.5).margin(1e-15));
    PackedPose c = centroid(out, 2);
    CHECK(c.x_c == Catch::Approx(4.5).margin(1e-12));
    CHECK(c.y_c == Catch::Approx(7.0).margin(1e-12));
}

TEST_CASE("path_integrate full-layer rotation permutes theta layers") {
    RunConfig cfg = default_cfg();
    ActivityVolume P = random_volume(18, 18, 17, 6, true);
    double one_layer = 2.0 * kPi / P.nth;
    ActivityVolume rot = path_integrate(P, 0, one_layer, cfg);
    for (int x = 0; x < P.nx; ++x)
        for (int y = 0; y < P.ny; ++y)
            for (int t = 0; t < P.nth; ++t)
                CHECK(rot.at(x, y, wrap_index(t + 1, P.nth)) == Catch::Approx(P.at(x, y, t)).margin(1e-15));
}

TEST_CASE("path_integrate conserves energy for arbitrary motion") {
    RunConfig cfg = default_cfg();
    Rng rng(8);
    ActivityVolume P = random_volume(18, 18, 17, 7, true);
    for (int i = 0; i < 20; ++i) {
        P = path_integrate(P, rng.uniform(-2, 2), rng.uniform(-kPi, kPi), cfg);
        CHECK(volume_sum(P) == Catch::Approx(1.0).margin(1e-9));
    }
    CHECK_THROWS(path_integrate(P, std::nan(""), 0, cfg));
}

TEST_CASE("path_integrate respects cell size") {
    RunConfig cfg = default_cfg();
    cfg.pc_cell_x_size = 0.25;
    ActivityVolume P(18, 18, 17);
    P.at(2, 2, 0) = 1.0;
    ActivityVolume out = path_integrate(P, 0.25, 0, cfg);
    CHECK(out.at(3, 2, 0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("inject pinned cases") {
    ActivityVolume P(18, 18, 17);
    inject(P, {}, 0.2);
    CHECK(volume_sum(P) == 0.0);

    inject(P, {{{3, 4, 5}, 1.0}}, 0.2);
    CHECK(P.at(3, 4, 5) == Catch::Approx(0.2).margin(1e-15));
    CHECK(volume_sum(P) == Catch::Approx(0.2).margin(1e-12));

    ActivityVolume Q(18, 18, 17);
    inject(Q, {{{1.5, 2, 3}, 1.0}}, 0.2);
    CHECK(Q.at(1, 2, 3) == Catch::Approx(0.1).margin(1e-15));
    CHECK(Q.at(2, 2, 3) == Catch::Approx(0.1).margin(1e-15));
    CHECK(volume_sum(Q) == Catch::Approx(0.2).margin(1e-12));

    CHECK_THROWS(inject(Q, {{{-0.5, 0, 0}, 1.0}}, 0.2));
    CHECK_THROWS(inject(Q, {{{0, 18, 0}, 1.0}}, 0.2));
}

TEST_CASE("inject scales with strength and sums over links") {
    ActivityVolume P(6, 6, 6);
    inject(P, {{{1, 1, 1}, 0.5}, {{4, 4, 4}, 2.0}}, 0.2);
    CHECK(P.at(1, 1, 1) == Catch::Approx(0.1).margin(1e-15));
    CHECK(P.at(4, 4, 4) == Catch::Approx(0.4).margin(1e-15));
}

TEST_CASE("centroid pinned cases") {
    ActivityVolume P(18, 18, 17);
    P.at(3, 4, 5) = 1.0;
    PackedPose c = centroid(P, 2);
    CHECK(c.x_c == Catch::Approx(3.0).margin(1e-12));
    CHECK(c.y_c == Catch::Approx(4.0).margin(1e-12));
    CHECK(c.theta_c == Catch::Approx(5.0).margin(1e-12));

    ActivityVolume Q(18, 18, 17);
    Q.at(0, 0, 0) = 0.5;
    Q.at(1, 0, 0) = 0.5;
    CHECK(centroid(Q, 2).x_c == Catch::Approx(0.5).margin(1e-12));

    // packet straddling the x wrap boundary
    ActivityVolume W(18, 18, 17);
    W.at(17, 2, 2) = 0.5;
    W.at(0, 2, 2) = 0.5;
    CHECK(centroid(W, 2).x_c == Catch::Approx(17.5).margin(1e-12));
}

TEST_CASE("centroid tie-break picks the lowest linear index") {
    ActivityVolume P(4, 4, 4);
    for (auto& x : P.v) x = 1.0 / P.size();
    PackedPose c = centroid(P, 1);
    // all-equal volume: argmax at linear index 0, neighborhood symmetric
    CHECK(c.x_c == Catch::Approx(0.0).margin(1e-12));
    CHECK(c.y_c == Catch::Approx(0.0).margin(1e-12));
    CHECK(c.theta_c == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("step keeps the volume normalized and nonnegative under random input") {
    RunConfig cfg = default_cfg();
    PoseCellNetwork net(cfg);
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        std::vector<ViewLink> links;
        if (rng.uniform() < 0.3)
            links.push_back({{rng.uniform(0, cfg.pc_dim_xy - 1e-9), rng.uniform(0, cfg.pc_dim_xy - 1e-9),
                              rng.uniform(0, cfg.pc_dim_th - 1e-9)},
                             rng.uniform(0, 1)});
        net.step(rng.uniform(-2, 2), rng.uniform(-kPi, kPi), links);
        const ActivityVolume& P = net.volume();
        double mn = *std::min_element(P.v.begin(), P.v.end());
        CHECK(volume_sum(P) == Catch::Approx(1.0).margin(1e-9));
        CHECK(mn >= 0.0);
    }
}

TEST_CASE("converged packet stays put without input") {
    RunConfig cfg = default_cfg();
    ActivityVolume P = converged_volume(cfg);
    Kernel3 eps = build_kernel(cfg.pc_sigma_e, cfg.pc_w_e_dim);
    Kernel3 psi = build_kernel(cfg.pc_sigma_i, cfg.pc_w_i_dim);
    PackedPose prev = centroid(P, 2);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        PackedPose c = step_volume(P, 0, 0, {}, eps, psi, cfg);
        double d = std::hypot(ring_diff(c.x_c, prev.x_c, cfg.pc_dim_xy),
                              ring_diff(c.y_c, prev.y_c, cfg.pc_dim_xy));
        d = std::hypot(d, ring_diff(c.theta_c, prev.theta_c, cfg.pc_dim_th));
        worst = std::max(worst, d);
        prev = c;
    }
    CHECK(worst < 0.05);
}

TEST_CASE("constant forward odometry advances the centroid at the commanded rate") {
    RunConfig cfg = default_cfg();
    ActivityVolume P = converged_volume(cfg);
    Kernel3 eps = build_kernel(cfg.pc_sigma_e, cfg.pc_w_e_dim);
    Kernel3 psi = build_kernel(cfg.pc_sigma_i, cfg.pc_w_i_dim);
    PackedPose start = centroid(P, 2);
    PackedPose c = start;
    double traveled = 0;
    for (int i = 0; i < 8; ++i) {
        PackedPose next = step_volume(P, 1.0, 0, {}, eps, psi, cfg);
        traveled += ring_diff(next.x_c, c.x_c, cfg.pc_dim_xy);
        c = next;
    }
    // packet sits on the theta=0 layer (heading 0), so it advances in +x
    CHECK(traveled == Catch::Approx(8.0).margin(0.5));
    CHECK(std::fabs(ring_diff(c.y_c, start.y_c, cfg.pc_dim_xy)) < 0.3);
}

TEST_CASE("repeated injection relocates the packet") {
    RunConfig cfg = default_cfg();
    ActivityVolume P = converged_volume(cfg);
    Kernel3 eps = build_kernel(cfg.pc_sigma_e, cfg.pc_w_e_dim);
    Kernel3 psi = build_kernel(cfg.pc_sigma_i, cfg.pc_w_i_dim);
    PackedPose target{2, 15, 8};
    PackedPose c{};
    for (int i = 0; i < 10; ++i) c = step_volume(P, 0, 0, {{target, 1.0}}, eps, psi, cfg);
    CHECK(std::fabs(ring_diff(c.x_c, target.x_c, cfg.pc_dim_xy)) <= 1.0);
    CHECK(std::fabs(ring_diff(c.y_c, target.y_c, cfg.pc_dim_xy)) <= 1.0);
    CHECK(std::fabs(ring_diff(c.theta_c, target.theta_c, cfg.pc_dim_th)) <= 1.0);
}

TEST_CASE("stepping commutes with integer rolls of the volume") {
    RunConfig cfg = default_cfg();
    Kernel3 eps = build_kernel(cfg.pc_sigma_e, cfg.pc_w_e_dim);
    Kernel3 psi = build_kernel(cfg.pc_sigma_i, cfg.pc_w_i_dim);
    auto roll = [](const ActivityVolume& P, int dx, int dy, int dt) {
        ActivityVolume out(P.nx, P.ny, P.nth);
        for (int x = 0; x < P.nx; ++x)
            for (int y = 0; y < P.ny; ++y)
                for (int t = 0; t < P.nth; ++t)
                    out.at(wrap_index(x + dx, P.nx), wrap_index(y + dy, P.ny), wrap_index(t + dt, P.nth)) =
                        P.at(x, y, t);
        return out;
    };
    ActivityVolume P = random_volume(18, 18, 17, 123, true);
    ActivityVolume A = roll(P, 5, -3, 7);
    step_volume(A, 0, 0, {}, eps, psi, cfg);
    ActivityVolume B = P;
    step_volume(B, 0, 0, {}, eps, psi, cfg);
    B = roll(B, 5, -3, 7);
    CHECK(max_abs_diff(A, B) <= 1e-12);
}

TEST_CASE("volume dump writes dims header plus row-major doubles") {
    auto dir = std::filesystem::temp_directory_path() / "ratnav_pc_dump";
    std::filesystem::create_directories(dir);
    ActivityVolume P = random_volume(4, 3, 2, 55);
    dump_volume(P, dir / "v.bin");
    std::ifstream in(dir / "v.bin", std::ios::binary);
    uint64_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    CHECK(dims[0] == 4);
    CHECK(dims[1] == 3);
    CHECK(dims[2] == 2);
    std::vector<double> vals(P.v.size());
    in.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(vals.size() * sizeof(double)));
    CHECK(in.gcount() == static_cast<std::streamsize>(vals.size() * sizeof(double)));
    CHECK(vals == P.v);
    std::filesystem::remove_all(dir);
}
