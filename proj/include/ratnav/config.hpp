#pragma once

#include <string>
#include <vector>

#include "ratnav/util.hpp"

namespace ratnav {

struct RunConfig {
    // local view
    int image_crop_x_min = 40;
    int image_crop_x_max = 600;
    int image_crop_y_min = 150;   // printed bounds swapped in the source table; kept as [150, 300)
    int image_crop_y_max = 300;
    int template_x_size = 60;
    int template_y_size = 20;
    int vt_shift_match = 25;
    int vt_step_match = 5;
    double vt_match_threshold = 0.073;
    double vt_normalisation = 0.0;
    int vt_patch_normalise = 2;
    int vt_panoramic = 0;

    // pose cells
    int pc_dim_xy = 18;
    int pc_dim_th = 17;
    double pc_cell_x_size = 1.0;
    double pc_vt_inject_energy = 0.2;
    double pc_vt_restore = 0.05;
    double vt_active_decay = 1.0;
    int pc_w_e_dim = 5;
    int pc_w_i_dim = 17;
    double pc_sigma_e = 0.58;
    double pc_sigma_i = 15.0;
    double pc_global_inhibit = 0.000215;

    // experience map
    double exp_delta_pc_threshold = 2.0;
    int exp_loops = 50;
    double exp_correction = 0.5;
    double exp_initial_em_deg = 180.0;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

struct ConfigField {
    const char* name;
    bool is_int;
    int RunConfig::*ip;
    double RunConfig::*dp;
};

inline const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = {
        {"image_crop_x_min", true, &RunConfig::image_crop_x_min, nullptr},
        {"image_crop_x_max", true, &RunConfig::image_crop_x_max, nullptr},
        {"image_crop_y_min", true, &RunConfig::image_crop_y_min, nullptr},
        {"image_crop_y_max", true, &RunConfig::image_crop_y_max, nullptr},
        {"template_x_size", true, &RunConfig::template_x_size, nullptr},
        {"template_y_size", true, &RunConfig::template_y_size, nullptr},
        {"vt_shift_match", true, &RunConfig::vt_shift_match, nullptr},
        {"vt_step_match", true, &RunConfig::vt_step_match, nullptr},
        {"vt_match_threshold", false, nullptr, &RunConfig::vt_match_threshold},
        {"vt_normalisation", false, nullptr, &RunConfig::vt_normalisation},
        {"vt_patch_normalise", true, &RunConfig::vt_patch_normalise, nullptr},
        {"vt_panoramic", true, &RunConfig::vt_panoramic, nullptr},
        {"pc_dim_xy", true, &RunConfig::pc_dim_xy, nullptr},
        {"pc_dim_th", true, &RunConfig::pc_dim_th, nullptr},
        {"pc_cell_x_size", false, nullptr, &RunConfig::pc_cell_x_size},
        {"pc_vt_inject_energy", false, nullptr, &RunConfig::pc_vt_inject_energy},
        {"pc_vt_restore", false, nullptr, &RunConfig::pc_vt_restore},
        {"vt_active_decay", false, nullptr, &RunConfig::vt_active_decay},
        {"pc_w_e_dim", true, &RunConfig::pc_w_e_dim, nullptr},
        {"pc_w_i_dim", true, &RunConfig::pc_w_i_dim, nullptr},
        {"pc_sigma_e", false, nullptr, &RunConfig::pc_sigma_e},
        {"pc_sigma_i", false, nullptr, &RunConfig::pc_sigma_i},
        {"pc_global_inhibit", false, nullptr, &RunConfig::pc_global_inhibit},
        {"exp_delta_pc_threshold", false, nullptr, &RunConfig::exp_delta_pc_threshold},
        {"exp_loops", true, &RunConfig::exp_loops, nullptr},
        {"exp_correction", false, nullptr, &RunConfig::exp_correction},
        {"exp_initial_em_deg", false, nullptr, &RunConfig::exp_initial_em_deg},
    };
    return fields;
}

}  // namespace detail

inline void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& f : detail::config_fields()) {
        if (key == f.name) {
            if (f.is_int)
                cfg.*(f.ip) = static_cast<int>(parse_int(value));
            else
                cfg.*(f.dp) = parse_double(value);
            return;
        }
    }
    throw std::runtime_error("unknown config key: " + key);
}

inline void validate_config(const RunConfig& c) {
    auto fail = [](const std::string& msg) { throw std::runtime_error("config: " + msg); };
    if (c.image_crop_x_min < 0 || c.image_crop_x_min >= c.image_crop_x_max)
        fail("image crop x bounds must satisfy 0 <= min < max");
    if (c.image_crop_y_min < 0 || c.image_crop_y_min >= c.image_crop_y_max)
        fail("image crop y bounds must satisfy 0 <= min < max");
    if (c.template_x_size <= 0 || c.template_y_size <= 0) fail("template sizes must be positive");
    if (c.vt_shift_match < 0) fail("vt_shift_match must be >= 0");
    if (c.vt_step_match <= 0) fail("vt_step_match must be positive");
    if (c.vt_match_threshold < 0) fail("vt_match_threshold must be >= 0");
    if (c.vt_normalisation < 0) fail("vt_normalisation must be >= 0");
    if (c.vt_patch_normalise < 0) fail("vt_patch_normalise must be >= 0");
    if (c.vt_panoramic != 0 && c.vt_panoramic != 1) fail("vt_panoramic must be 0 or 1");
    if (c.pc_dim_xy <= 0 || c.pc_dim_th <= 0) fail("pose cell dims must be positive");
    if (c.pc_cell_x_size <= 0) fail("pc_cell_x_size must be positive");
    if (c.pc_vt_inject_energy < 0) fail("pc_vt_inject_energy must be >= 0");
    if (c.pc_vt_restore < 0) fail("pc_vt_restore must be >= 0");
    if (c.vt_active_decay < 0) fail("vt_active_decay must be >= 0");
    if (c.pc_w_e_dim <= 0 || c.pc_w_e_dim % 2 == 0) fail("pc_w_e_dim must be odd and positive");
    if (c.pc_w_i_dim <= 0 || c.pc_w_i_dim % 2 == 0) fail("pc_w_i_dim must be odd and positive");
    if (c.pc_w_e_dim > c.pc_dim_xy || c.pc_w_e_dim > c.pc_dim_th)
        fail("pc_w_e_dim must not exceed grid dims");
    if (c.pc_w_i_dim > c.pc_dim_xy || c.pc_w_i_dim > c.pc_dim_th)
        fail("pc_w_i_dim must not exceed grid dims");
    if (!(c.pc_sigma_e > 0)) fail("pc_sigma_e must be positive");
    if (!(c.pc_sigma_i > c.pc_sigma_e)) fail("pc_sigma_i must exceed pc_sigma_e");
    if (c.pc_global_inhibit < 0) fail("pc_global_inhibit must be >= 0");
    if (c.exp_delta_pc_threshold <= 0) fail("exp_delta_pc_threshold must be positive");
    if (c.exp_loops < 1) fail("exp_loops must be >= 1");
    if (!(c.exp_correction > 0) || c.exp_correction > 1) fail("exp_correction must be in (0, 1]");
}

inline RunConfig config_from_kv(const std::map<std::string, std::string>& kv) {
    RunConfig cfg;
    for (const auto& [key, value] : kv) set_config_key(cfg, key, value);
    validate_config(cfg);
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    return config_from_kv(parse_kv_file(path));
}

inline std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& f : detail::config_fields()) {
        out += f.name;
        out += " = ";
        out += f.is_int ? fmt_int(cfg.*(f.ip)) : fmt_double(cfg.*(f.dp));
        out += "\n";
    }
    return out;
}

}  // namespace ratnav
