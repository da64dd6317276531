#include "gtvc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "gtvc/errors.hpp"

namespace gtvc {

namespace {

constexpr double kPi = 3.14159265358979323846;

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace

double Curve::operator()(double tau) const {
    switch (kind) {
        case Kind::Constant: return a;
        case Kind::Linear: return a + b * tau;
        case Kind::Sine: return a + b * std::sin(kPi * tau);
        case Kind::CenteredSine: return a * std::sin(2.0 * kPi * tau);
        case Kind::CenteredCos: return a * std::cos(kPi * tau);
        case Kind::CenteredLinear: return a * (tau - 0.5);
    }
    return a;
}

bool Curve::centered() const {
    return kind == Kind::CenteredSine || kind == Kind::CenteredCos || kind == Kind::CenteredLinear;
}

std::string Curve::token() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Constant: os << "constant:" << a; break;
        case Kind::Linear: os << "linear:" << a << ":" << b; break;
        case Kind::Sine: os << "sine:" << a << ":" << b; break;
        case Kind::CenteredSine: os << "csine:" << a; break;
        case Kind::CenteredCos: os << "ccos:" << a; break;
        case Kind::CenteredLinear: os << "clinear:" << a; break;
    }
    return os.str();
}

Curve Curve::parse(const std::string& token) {
    const auto parts = split(token, ':');
    auto num = [&](size_t i) {
        if (i >= parts.size()) throw ConfigError("curve token '" + token + "' is missing a parameter");
        return std::stod(parts[i]);
    };
    Curve c;
    if (parts[0] == "constant") {
        c.kind = Kind::Constant;
        c.a = num(1);
    } else if (parts[0] == "linear") {
        c.kind = Kind::Linear;
        c.a = num(1);
        c.b = num(2);
    } else if (parts[0] == "sine") {
        c.kind = Kind::Sine;
        c.a = num(1);
        c.b = num(2);
    } else if (parts[0] == "csine") {
        c.kind = Kind::CenteredSine;
        c.a = num(1);
    } else if (parts[0] == "ccos") {
        c.kind = Kind::CenteredCos;
        c.a = num(1);
    } else if (parts[0] == "clinear") {
        c.kind = Kind::CenteredLinear;
        c.a = num(1);
    } else {
        throw ConfigError("unknown curve kind '" + parts[0] + "'");
    }
    return c;
}

void DgpSpec::validate() const {
    if (n_countries < 1 || n_years < 2) throw ConfigError("need at least 1 country and 2 years");
    if (n_groups < 1 || n_groups > n_countries) throw ConfigError("invalid group count");
    if (static_cast<int>(delta.size()) != n_groups || static_cast<int>(omega.size()) != n_groups ||
        static_cast<int>(cs_level.size()) != n_groups) {
        throw ConfigError("delta/omega/cs_level must have one entry per group");
    }
    if (!proportions.empty()) {
        if (static_cast<int>(proportions.size()) != n_groups) {
            throw ConfigError("group proportions must have one entry per group");
        }
        double sum = 0.0;
        for (double p : proportions) sum += p;
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("group proportions must sum to 1");
    }
    for (const auto& w : omega) {
        if (!w.centered()) {
            throw ConfigError("labor-component curve '" + w.token() + "' does not integrate to 0");
        }
    }
    for (double level : cs_level) {
        if (!(level > 0.0 && level < 1.0)) throw ConfigError("capital share levels must lie in (0,1)");
    }
    if (mu_sd < 0 || cs_sigma < 0 || ex_sd < 0 || ey_sd < 0 || eps_sd < 0 || iv_noise_sd < 0 ||
        iv_slope_sd < 0 || iv_intercept_sd < 0) {
        throw ConfigError("all scale parameters must be nonnegative");
    }
    if (std::abs(cs_rho) >= 1.0) throw ConfigError("capital share persistence must satisfy |rho| < 1");
}

DgpSpec DgpSpec::from_config(const std::map<std::string, std::string>& kv) {
    DgpSpec spec;
    auto get = [&](const std::string& key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto geti = [&](const std::string& key, int dflt) {
        const auto* v = get(key);
        return v ? std::stoi(*v) : dflt;
    };
    auto getd = [&](const std::string& key, double dflt) {
        const auto* v = get(key);
        return v ? std::stod(*v) : dflt;
    };
    spec.n_countries = geti("n", spec.n_countries);
    spec.n_years = geti("t", spec.n_years);
    spec.n_groups = geti("g", spec.n_groups);
    if (const auto* v = get("proportions")) {
        for (const auto& p : split(*v, ',')) spec.proportions.push_back(std::stod(p));
    }
    for (int g = 1; g <= spec.n_groups; ++g) {
        if (const auto* v = get("delta" + std::to_string(g))) spec.delta.push_back(Curve::parse(*v));
        if (const auto* v = get("omega" + std::to_string(g))) spec.omega.push_back(Curve::parse(*v));
        if (const auto* v = get("cs_level" + std::to_string(g))) spec.cs_level.push_back(std::stod(*v));
    }
    spec.mu_mean = getd("mu_mean", spec.mu_mean);
    spec.mu_sd = getd("mu_sd", spec.mu_sd);
    spec.cs_rho = getd("cs_rho", spec.cs_rho);
    spec.cs_sigma = getd("cs_sigma", spec.cs_sigma);
    spec.ex_sd = getd("ex_sd", spec.ex_sd);
    spec.ey_sd = getd("ey_sd", spec.ey_sd);
    spec.eps_sd = getd("eps_sd", spec.eps_sd);
    spec.with_instrument = geti("instrument", spec.with_instrument ? 1 : 0) != 0;
    spec.iv_slope_mean = getd("iv_slope_mean", spec.iv_slope_mean);
    spec.iv_slope_sd = getd("iv_slope_sd", spec.iv_slope_sd);
    spec.iv_noise_sd = getd("iv_noise_sd", spec.iv_noise_sd);
    spec.iv_intercept_sd = getd("iv_intercept_sd", spec.iv_intercept_sd);
    spec.ptr_start_year = geti("ptr_start_year", spec.ptr_start_year);
    spec.base_year = geti("base_year", spec.base_year);
    spec.seed = static_cast<std::uint64_t>(geti("seed", static_cast<int>(spec.seed)));
    return spec;
}

namespace {

void apply_defaults(DgpSpec& spec) {
    static const char* kDelta[] = {"linear:0.1:0.2", "sine:0.3:-0.15", "constant:0.2",
                                   "linear:0.25:-0.1", "constant:0.15"};
    static const char* kOmega[] = {"csine:0.01", "ccos:0.015", "csine:-0.012", "ccos:-0.01",
                                   "clinear:0.02"};
    static const double kLevel[] = {0.2, 0.35, 0.5, 0.28, 0.42};
    for (int g = static_cast<int>(spec.delta.size()); g < spec.n_groups; ++g) {
        spec.delta.push_back(Curve::parse(kDelta[g % 5]));
    }
    for (int g = static_cast<int>(spec.omega.size()); g < spec.n_groups; ++g) {
        spec.omega.push_back(Curve::parse(kOmega[g % 5]));
    }
    for (int g = static_cast<int>(spec.cs_level.size()); g < spec.n_groups; ++g) {
        spec.cs_level.push_back(kLevel[g % 5]);
    }
}

}  // namespace

SimulatedPanel generate(const DgpSpec& input) {
    DgpSpec spec = input;
    apply_defaults(spec);
    spec.validate();

    const int N = spec.n_countries;
    const int T = spec.n_years;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Deterministic block assignment by cumulative proportions.
    std::vector<int> labels(static_cast<size_t>(N));
    {
        std::vector<double> props = spec.proportions;
        if (props.empty()) props.assign(static_cast<size_t>(spec.n_groups), 1.0 / spec.n_groups);
        double cum = 0.0;
        int g = 0;
        std::vector<int> cutoffs;
        for (int k = 0; k < spec.n_groups; ++k) {
            cum += props[static_cast<size_t>(k)];
            cutoffs.push_back(std::min(N, static_cast<int>(std::lround(cum * N))));
        }
        cutoffs.back() = N;
        for (int i = 0; i < N; ++i) {
            while (i >= cutoffs[static_cast<size_t>(g)]) ++g;
            labels[static_cast<size_t>(i)] = g + 1;
        }
    }

    GroundTruth truth;
    truth.labels = labels;
    truth.mu.resize(static_cast<size_t>(N));

    std::vector<PanelRow> rows;
    rows.reserve(static_cast<size_t>(N * T));
    truth.true_cs.reserve(static_cast<size_t>(N * T));
    int clamped = 0;
    auto clamp01 = [&clamped](double v, double lo, double hi) {
        if (v < lo || v > hi) {
            ++clamped;
            return std::min(hi, std::max(lo, v));
        }
        return v;
    };

    char name[16];
    for (int i = 0; i < N; ++i) {
        const int g = labels[static_cast<size_t>(i)] - 1;
        const double level = spec.cs_level[static_cast<size_t>(g)];
        const double mu = spec.mu_mean + spec.mu_sd * gauss(rng);
        truth.mu[static_cast<size_t>(i)] = mu;

        // the intercept centers the implied tax rate at 0.5 for headroom
        double iv_slope = 0.0, iv_intercept = 0.0;
        if (spec.with_instrument) {
            iv_slope = spec.iv_slope_mean + spec.iv_slope_sd * gauss(rng);
            if (std::abs(iv_slope) < 0.05) iv_slope = iv_slope < 0.0 ? -0.05 : 0.05;
            iv_intercept = level - 0.5 * iv_slope + spec.iv_intercept_sd * gauss(rng);
        }

        const double z_mean = logit(level);
        double z = z_mean + (spec.cs_sigma / std::sqrt(1.0 - spec.cs_rho * spec.cs_rho)) * gauss(rng);
        std::snprintf(name, sizeof(name), "C%03d", i);

        for (int t = 0; t < T; ++t) {
            if (t > 0) z = z_mean * (1.0 - spec.cs_rho) + spec.cs_rho * z + spec.cs_sigma * gauss(rng);
            const double tau = static_cast<double>(t) / (T - 1);
            const double cs_true = sigmoid(z);
            const double eps = spec.eps_sd * gauss(rng);
            const double e_x = spec.ex_sd * gauss(rng);
            const double e_y = spec.ey_sd * gauss(rng);

            const double s_raw = spec.delta[static_cast<size_t>(g)](tau) * cs_true + mu +
                                 spec.omega[static_cast<size_t>(g)](tau) + eps + e_y;
            const double cs_obs = clamp01(cs_true + e_x, 1e-4, 1.0 - 1e-4);
            const double s_obs = clamp01(s_raw, 1e-4, 1.0 - 1e-4);

            PanelRow row;
            row.country = name;
            row.year = spec.base_year + t;
            row.top10 = row.top5 = row.top1 = s_obs;
            row.capital_share = cs_obs;
            if (spec.with_instrument && (spec.ptr_start_year < 0 || row.year >= spec.ptr_start_year)) {
                const double u = spec.iv_noise_sd * gauss(rng);
                const double ptr = (cs_true - iv_intercept - u) / iv_slope;
                row.profit_tax_rate = clamp01(ptr, 0.0, 1.0);
            }
            truth.true_cs.push_back(cs_true);
            rows.push_back(std::move(row));
        }
    }

    truth.clamped = clamped;
    const double frac = static_cast<double>(clamped) / (static_cast<double>(N) * T);
    if (frac > 0.001) {
        throw DataError("DGP produced " + std::to_string(clamped) +
                        " out-of-range draws (>0.1%); choose scales keeping shares in (0,1)");
    }
    return SimulatedPanel{PanelDataset(std::move(rows), 1), std::move(truth)};
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 over the master seed advanced by the index
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

// Greedy max-overlap matching of estimated onto true groups.
std::vector<int> match_groups(const std::vector<int>& est, const std::vector<int>& truth, int Ge,
                              int Gt) {
    std::vector<std::vector<int>> counts(static_cast<size_t>(Ge), std::vector<int>(static_cast<size_t>(Gt), 0));
    for (size_t i = 0; i < est.size(); ++i) {
        ++counts[static_cast<size_t>(est[i] - 1)][static_cast<size_t>(truth[i] - 1)];
    }
    std::vector<int> map_to(static_cast<size_t>(Ge), 0);
    std::vector<bool> est_used(static_cast<size_t>(Ge), false), true_used(static_cast<size_t>(Gt), false);
    for (int round = 0; round < std::min(Ge, Gt); ++round) {
        int best = -1, be = 0, bt = 0;
        for (int e = 0; e < Ge; ++e) {
            if (est_used[static_cast<size_t>(e)]) continue;
            for (int t = 0; t < Gt; ++t) {
                if (true_used[static_cast<size_t>(t)]) continue;
                if (counts[static_cast<size_t>(e)][static_cast<size_t>(t)] > best) {
                    best = counts[static_cast<size_t>(e)][static_cast<size_t>(t)];
                    be = e;
                    bt = t;
                }
            }
        }
        est_used[static_cast<size_t>(be)] = true;
        true_used[static_cast<size_t>(bt)] = true;
        map_to[static_cast<size_t>(be)] = bt + 1;
    }
    for (int e = 0; e < Ge; ++e) {
        if (map_to[static_cast<size_t>(e)] == 0) {
            int arg = 0;
            for (int t = 1; t < Gt; ++t) {
                if (counts[static_cast<size_t>(e)][static_cast<size_t>(t)] > counts[static_cast<size_t>(e)][static_cast<size_t>(arg)]) arg = t;
            }
            map_to[static_cast<size_t>(e)] = arg + 1;
        }
    }
    return map_to;
}

}  // namespace

McSummary replicate_study(const DgpSpec& spec, const McOptions& options, int R) {
    if (R < 1) throw ConfigError("replication count must be >= 1");

    McSummary summary;
    summary.reps.reserve(static_cast<size_t>(R));

    for (int rep = 0; rep < R; ++rep) {
        McRep r;
        try {
            DgpSpec rep_spec = spec;
            rep_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(rep));
            SimulatedPanel sim = generate(rep_spec);

            const auto moments = time_averages(sim.data, options.classify_quantile);
            const Standardized std_points = standardize_features(moments);
            const std::uint64_t cluster_seed = derive_seed(rep_spec.seed, 0xC1);

            GroupAssignment assignment;
            if (options.use_true_labels) {
                assignment.G = spec.n_groups;
                assignment.labels = sim.truth.labels;
                assignment.centers.resize(static_cast<size_t>(spec.n_groups), Point2{0.0, 0.0});
                r.selected_G = spec.n_groups;
            } else if (options.fixed_G > 0) {
                assignment = lloyd_kmeans(std_points.points, options.fixed_G, options.n_init, cluster_seed);
                r.selected_G = options.fixed_G;
            } else {
                BicSelection sel = bic_select(std_points.points, options.G_max, options.zeta,
                                              options.n_init, cluster_seed);
                assignment = std::move(sel.assignment);
                r.selected_G = sel.table.selected_G;
            }

            const auto map_to = match_groups(assignment.labels, sim.truth.labels, assignment.G,
                                             spec.n_groups);
            int correct = 0;
            for (size_t i = 0; i < assignment.labels.size(); ++i) {
                if (map_to[static_cast<size_t>(assignment.labels[i] - 1)] == sim.truth.labels[i]) ++correct;
            }
            r.label_accuracy = static_cast<double>(correct) / static_cast<double>(assignment.labels.size());

            if (!options.cluster_only) {
                DgpSpec full = spec;
                apply_defaults(full);
                TvcResult fit = fit_tvc(sim.data, assignment, options.quantile, options.tvc);

                const int stride = std::max(1, (static_cast<int>(fit.grid.size()) - 1) /
                                                   std::max(1, options.coverage_points - 1));
                double ise = 0.0, bias = 0.0, covered = 0.0, cov_n = 0.0;
                for (size_t gi = 0; gi < fit.groups.size(); ++gi) {
                    const auto& gf = fit.groups[gi];
                    const Curve truth_curve =
                        full.delta[static_cast<size_t>(map_to[static_cast<size_t>(gf.group - 1)] - 1)];
                    double sq = 0.0;
                    for (const auto& pt : gf.inference.curve) {
                        const double d = pt.delta - truth_curve(pt.tau);
                        sq += d * d;
                    }
                    ise += sq / static_cast<double>(gf.inference.curve.size());
                    for (size_t k = 0; k < gf.inference.curve.size(); k += static_cast<size_t>(stride)) {
                        const auto& pt = gf.inference.curve[k];
                        const double tv = truth_curve(pt.tau);
                        covered += (tv >= pt.delta_lo && tv <= pt.delta_hi) ? 1.0 : 0.0;
                        cov_n += 1.0;
                    }

                    const auto weights = observation_weights(fit.design.groups[gi], fit.grid,
                                                             fit.design.window);
                    double true_avg = 0.0, wsum = 0.0;
                    for (size_t k = 0; k < fit.grid.size(); ++k) {
                        true_avg += weights[k] * truth_curve(fit.grid[k]);
                        wsum += weights[k];
                    }
                    true_avg /= wsum;
                    bias += gf.avg.estimate - true_avg;
                    r.avg_effect += gf.avg.estimate;
                }
                const double ng = static_cast<double>(fit.groups.size());
                r.ise = ise / ng;
                r.bias = bias / ng;
                r.avg_effect /= ng;
                r.coverage = cov_n > 0.0 ? covered / cov_n : 0.0;

                if (options.fit_iv) {
                    TvcIvResult iv = fit_tvc_iv(sim.data, assignment, options.quantile, options.tvc);
                    double bias_iv = 0.0;
                    for (size_t gi = 0; gi < iv.tvc.groups.size(); ++gi) {
                        const auto& gf = iv.tvc.groups[gi];
                        const Curve truth_curve =
                            full.delta[static_cast<size_t>(map_to[static_cast<size_t>(gf.group - 1)] - 1)];
                        const auto weights = observation_weights(iv.tvc.design.groups[gi],
                                                                 iv.tvc.grid, iv.tvc.design.window);
                        double true_avg = 0.0, wsum = 0.0;
                        for (size_t k = 0; k < iv.tvc.grid.size(); ++k) {
                            true_avg += weights[k] * truth_curve(iv.tvc.grid[k]);
                            wsum += weights[k];
                        }
                        true_avg /= wsum;
                        bias_iv += gf.avg.estimate - true_avg;
                        r.avg_effect_iv += gf.avg.estimate;
                    }
                    r.bias_iv = bias_iv / static_cast<double>(iv.tvc.groups.size());
                    r.avg_effect_iv /= static_cast<double>(iv.tvc.groups.size());
                }
            }
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
        summary.reps.push_back(std::move(r));
    }

    int ok = 0;
    std::vector<double> rises;
    double cov = 0.0;
    for (const auto& r : summary.reps) {
        if (!r.ok) continue;
        ++ok;
        summary.rmise += r.ise;
        rises.push_back(std::sqrt(r.ise));
        summary.mean_bias += r.bias;
        cov += r.coverage;
        summary.mean_label_accuracy += r.label_accuracy;
        ++summary.selection_freq[r.selected_G];
    }
    if (ok > 0) {
        summary.rmise = std::sqrt(summary.rmise / ok);
        summary.mean_bias /= ok;
        summary.coverage = cov / ok;
        summary.mean_label_accuracy /= ok;
        std::sort(rises.begin(), rises.end());
        summary.rmise_median = rises[rises.size() / 2];
    }
    summary.failure_rate = 1.0 - static_cast<double>(ok) / static_cast<double>(R);
    return summary;
}

void write_panel_csv(const std::string& path, const PanelDataset& ds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write panel file: " + path);
    out << "country,year,top10,top5,top1,capital_share,profit_tax_rate\n";
    char buf[512];
    for (const auto& r : ds.rows()) {
        if (r.profit_tax_rate) {
            std::snprintf(buf, sizeof(buf), "%s,%d,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                          r.country.c_str(), r.year, r.top10, r.top5, r.top1, r.capital_share,
                          *r.profit_tax_rate);
        } else {
            std::snprintf(buf, sizeof(buf), "%s,%d,%.12g,%.12g,%.12g,%.12g,\n", r.country.c_str(),
                          r.year, r.top10, r.top5, r.top1, r.capital_share);
        }
        out << buf;
    }
}

void write_truth_csv(const std::string& path, const DgpSpec& input, const GroundTruth&,
                     int grid_points) {
    DgpSpec spec = input;
    apply_defaults(spec);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write truth file: " + path);
    out << "group,tau,delta,omega\n";
    char buf[256];
    for (int g = 0; g < spec.n_groups; ++g) {
        for (int k = 0; k < grid_points; ++k) {
            const double tau = static_cast<double>(k) / (grid_points - 1);
            std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g\n", g + 1, tau,
                          spec.delta[static_cast<size_t>(g)](tau), spec.omega[static_cast<size_t>(g)](tau));
            out << buf;
        }
    }
}

void write_mc_csv(const std::string& path, const McSummary& summary) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write Monte Carlo results: " + path);
    out << "rep,ok,selected_G,label_accuracy,bias,bias_iv,avg_effect,avg_effect_iv,ise,coverage,error\n";
    char buf[512];
    for (size_t i = 0; i < summary.reps.size(); ++i) {
        const auto& r = summary.reps[i];
        std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%s\n", i,
                      r.ok ? 1 : 0, r.selected_G, r.label_accuracy, r.bias, r.bias_iv, r.avg_effect,
                      r.avg_effect_iv, r.ise, r.coverage, r.error.c_str());
        out << buf;
    }
    out << "\nsummary,rmise,rmise_median,mean_bias,coverage,label_accuracy,failure_rate\n";
    std::snprintf(buf, sizeof(buf), "summary,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", summary.rmise,
                  summary.rmise_median, summary.mean_bias, summary.coverage,
                  summary.mean_label_accuracy, summary.failure_rate);
    out << buf;
}

}  // namespace gtvc
