#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gtvc/kmeans.hpp"
#include "gtvc/panel.hpp"
#include "gtvc/shapley.hpp"
#include "gtvc/tvc.hpp"

namespace gtvc {

// Plain-text key = value configuration; '#' starts a comment.
struct KeyValueConfig {
    std::map<std::string, std::string> values;

    static KeyValueConfig load(const std::string& path);
    static KeyValueConfig parse(const std::string& text);

    bool has(const std::string& key) const { return values.count(key) > 0; }
    std::string get(const std::string& key, const std::string& dflt) const;
    int get_int(const std::string& key, int dflt) const;
    double get_double(const std::string& key, double dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
};

struct RunConfig {
    std::string input;
    std::string assignment;
    std::string truth;  // optional truth curves for simulation diagnostics
    std::string out_dir = "out";
    CsvSchema schema;  // column mapping, adjustable for foreign exports
    Quantile quantile = Quantile::Top5;
    Quantile classify_quantile = Quantile::Top10;
    int num_basis = 8;
    int degree = 3;
    int penalty_order = 2;
    int grid_points = 101;
    double psi_min = 1e-4;
    double psi_max = 1e6;
    int psi_grid_points = 13;
    bool refine_psi = true;
    int groups = 0;  // 0: select G by the information criterion
    int G_max = 5;
    double zeta = 3.0;
    int n_init = 100;
    std::uint64_t seed = 1;
    int min_group_size = 4;
    int min_obs = 10;
    SdConvention sd_convention = SdConvention::Sample;
    ShapleyMode shapley_mode = ShapleyMode::Exact;
    bool shapley_period_average = false;
    bool shapley_emit_observations = false;
    int mc_replications = 0;

    static RunConfig from(const KeyValueConfig& kv);
    TvcConfig tvc_config() const;
    std::string manifest_text() const;  // serialized verbatim, key = value
};

}  // namespace gtvc
