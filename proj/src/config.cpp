#include "gtvc/config.hpp"

#include <fstream>
#include <sstream>

#include "gtvc/errors.hpp"

namespace gtvc {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + " is not 'key = value': " + line);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key on config line " + std::to_string(lineno));
        cfg.values[key] = value;
    }
    return cfg;
}

std::string KeyValueConfig::get(const std::string& key, const std::string& dflt) const {
    const auto it = values.find(key);
    return it == values.end() ? dflt : it->second;
}

int KeyValueConfig::get_int(const std::string& key, int dflt) const {
    const auto it = values.find(key);
    if (it == values.end()) return dflt;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
    }
}

double KeyValueConfig::get_double(const std::string& key, double dflt) const {
    const auto it = values.find(key);
    if (it == values.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number: " + it->second);
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool dflt) const {
    const auto it = values.find(key);
    if (it == values.end()) return dflt;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: " + it->second);
}

RunConfig RunConfig::from(const KeyValueConfig& kv) {
    RunConfig rc;
    rc.input = kv.get("input", rc.input);
    rc.assignment = kv.get("assignment", rc.assignment);
    rc.truth = kv.get("truth", rc.truth);
    rc.out_dir = kv.get("out", rc.out_dir);
    rc.schema.country = kv.get("col_country", rc.schema.country);
    rc.schema.year = kv.get("col_year", rc.schema.year);
    rc.schema.top10 = kv.get("col_top10", rc.schema.top10);
    rc.schema.top5 = kv.get("col_top5", rc.schema.top5);
    rc.schema.top1 = kv.get("col_top1", rc.schema.top1);
    rc.schema.capital_share = kv.get("col_capital_share", rc.schema.capital_share);
    rc.schema.profit_tax_rate = kv.get("col_profit_tax_rate", rc.schema.profit_tax_rate);
    rc.quantile = parse_quantile(kv.get("quantile", "top5"));
    rc.classify_quantile = parse_quantile(kv.get("classify_quantile", "top10"));
    rc.num_basis = kv.get_int("num_basis", rc.num_basis);
    rc.degree = kv.get_int("degree", rc.degree);
    rc.penalty_order = kv.get_int("penalty_order", rc.penalty_order);
    rc.grid_points = kv.get_int("grid_points", rc.grid_points);
    rc.psi_min = kv.get_double("psi_min", rc.psi_min);
    rc.psi_max = kv.get_double("psi_max", rc.psi_max);
    rc.psi_grid_points = kv.get_int("psi_grid_points", rc.psi_grid_points);
    rc.refine_psi = kv.get_bool("refine_psi", rc.refine_psi);
    rc.groups = kv.get_int("groups", rc.groups);
    rc.G_max = kv.get_int("g_max", rc.G_max);
    rc.zeta = kv.get_double("zeta", rc.zeta);
    rc.n_init = kv.get_int("n_init", rc.n_init);
    rc.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<int>(rc.seed)));
    rc.min_group_size = kv.get_int("min_group_size", rc.min_group_size);
    rc.min_obs = kv.get_int("min_obs", rc.min_obs);
    const std::string sd = kv.get("sd_convention", "sample");
    if (sd == "sample") {
        rc.sd_convention = SdConvention::Sample;
    } else if (sd == "population") {
        rc.sd_convention = SdConvention::Population;
    } else {
        throw ConfigError("sd_convention must be 'sample' or 'population', got '" + sd + "'");
    }
    const std::string mode = kv.get("shapley_mode", "exact");
    if (mode == "exact") {
        rc.shapley_mode = ShapleyMode::Exact;
    } else if (mode == "thirds") {
        rc.shapley_mode = ShapleyMode::Thirds;
    } else {
        throw ConfigError("shapley_mode must be 'exact' or 'thirds', got '" + mode + "'");
    }
    rc.shapley_period_average = kv.get_bool("shapley_period_average", rc.shapley_period_average);
    rc.shapley_emit_observations = kv.get_bool("shapley_emit_observations", rc.shapley_emit_observations);
    rc.mc_replications = kv.get_int("mc_replications", rc.mc_replications);
    return rc;
}

TvcConfig RunConfig::tvc_config() const {
    TvcConfig cfg;
    cfg.num_basis = num_basis;
    cfg.degree = degree;
    cfg.penalty_order = penalty_order;
    cfg.grid_points = grid_points;
    cfg.psi_min = psi_min;
    cfg.psi_max = psi_max;
    cfg.psi_grid_points = psi_grid_points;
    cfg.refine_psi = refine_psi;
    cfg.min_group_size = min_group_size;
    return cfg;
}

std::string RunConfig::manifest_text() const {
    std::ostringstream os;
    os << "input = " << input << "\n";
    os << "assignment = " << assignment << "\n";
    os << "truth = " << truth << "\n";
    os << "out = " << out_dir << "\n";
    os << "col_country = " << schema.country << "\n";
    os << "col_year = " << schema.year << "\n";
    os << "col_top10 = " << schema.top10 << "\n";
    os << "col_top5 = " << schema.top5 << "\n";
    os << "col_top1 = " << schema.top1 << "\n";
    os << "col_capital_share = " << schema.capital_share << "\n";
    os << "col_profit_tax_rate = " << schema.profit_tax_rate << "\n";
    os << "quantile = " << quantile_name(quantile) << "\n";
    os << "classify_quantile = " << quantile_name(classify_quantile) << "\n";
    os << "num_basis = " << num_basis << "\n";
    os << "degree = " << degree << "\n";
    os << "penalty_order = " << penalty_order << "\n";
    os << "grid_points = " << grid_points << "\n";
    os << "psi_min = " << psi_min << "\n";
    os << "psi_max = " << psi_max << "\n";
    os << "psi_grid_points = " << psi_grid_points << "\n";
    os << "refine_psi = " << (refine_psi ? "true" : "false") << "\n";
    os << "groups = " << groups << "\n";
    os << "g_max = " << G_max << "\n";
    os << "zeta = " << zeta << "\n";
    os << "n_init = " << n_init << "\n";
    os << "seed = " << seed << "\n";
    os << "min_group_size = " << min_group_size << "\n";
    os << "min_obs = " << min_obs << "\n";
    os << "sd_convention = " << (sd_convention == SdConvention::Sample ? "sample" : "population") << "\n";
    os << "shapley_mode = " << (shapley_mode == ShapleyMode::Exact ? "exact" : "thirds") << "\n";
    os << "shapley_period_average = " << (shapley_period_average ? "true" : "false") << "\n";
    os << "shapley_emit_observations = " << (shapley_emit_observations ? "true" : "false") << "\n";
    os << "mc_replications = " << mc_replications << "\n";
    return os.str();
}

}  // namespace gtvc
