#include "gtvc/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gtvc/baselines.hpp"
#include "gtvc/config.hpp"
#include "gtvc/errors.hpp"
#include "gtvc/kmeans.hpp"
#include "gtvc/panel.hpp"
#include "gtvc/shapley.hpp"
#include "gtvc/simulate.hpp"
#include "gtvc/svg.hpp"
#include "gtvc/tvc.hpp"

namespace fs = std::filesystem;

namespace gtvc::cli {

namespace {

struct CommonArgs {
    std::string config_path;
    std::string input;
    std::string assignment;
    std::string truth;
    std::string out_dir;
    std::string quantile;
    std::int64_t seed = -1;
};

RunConfig resolve_config(const CommonArgs& args, KeyValueConfig* kv_out = nullptr) {
    KeyValueConfig kv;
    if (!args.config_path.empty()) kv = KeyValueConfig::load(args.config_path);
    if (!args.input.empty()) kv.values["input"] = args.input;
    if (!args.assignment.empty()) kv.values["assignment"] = args.assignment;
    if (!args.truth.empty()) kv.values["truth"] = args.truth;
    if (!args.out_dir.empty()) kv.values["out"] = args.out_dir;
    if (!args.quantile.empty()) kv.values["quantile"] = args.quantile;
    if (args.seed >= 0) kv.values["seed"] = std::to_string(args.seed);
    if (kv_out) *kv_out = kv;
    return RunConfig::from(kv);
}

void ensure_out_dir(const RunConfig& rc) {
    std::error_code ec;
    fs::create_directories(rc.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + rc.out_dir + "': " + ec.message());
}

std::string out_path(const RunConfig& rc, const std::string& name) {
    return (fs::path(rc.out_dir) / name).string();
}

void write_manifest(const RunConfig& rc, const std::vector<std::string>& extra) {
    std::ofstream out(out_path(rc, "manifest.txt"));
    if (!out) throw IoError("cannot write manifest");
    out << rc.manifest_text();
    for (const auto& line : extra) out << line << "\n";
}

LoadResult load_input(const RunConfig& rc) {
    if (rc.input.empty()) throw ConfigError("no input file given (config key 'input' or --input)");
    CsvSchema schema = rc.schema;
    schema.min_obs = rc.min_obs;
    return load_csv(rc.input, schema);
}

GroupAssignment classify(const PanelDataset& ds, const RunConfig& rc, BicTable* table_out) {
    const auto moments = time_averages(ds, rc.classify_quantile);
    const Standardized std_points = standardize_features(moments, rc.sd_convention);
    GroupAssignment assignment;
    if (rc.groups > 0) {
        assignment = lloyd_kmeans(std_points.points, rc.groups, rc.n_init, rc.seed);
    } else {
        BicSelection sel = bic_select(std_points.points, rc.G_max, rc.zeta, rc.n_init, rc.seed);
        if (table_out) *table_out = sel.table;
        assignment = std::move(sel.assignment);
    }
    assignment.feature_scaling = std_points.scaling;
    flag_small_groups(assignment, rc.min_group_size);
    return assignment;
}

int cmd_validate(const CommonArgs& args, std::ostream& out) {
    const RunConfig rc = resolve_config(args);
    ensure_out_dir(rc);
    try {
        LoadResult result = load_input(rc);
        write_rejection_report(out_path(rc, "rejected.csv"), result.rejected);
        out << "countries=" << result.dataset.n_countries() << " rows=" << result.dataset.n_rows()
            << " window=" << result.dataset.year_min() << "-" << result.dataset.year_max()
            << " rejected=" << result.rejected.size() << "\n";
        for (const auto& [id, n] : result.dataset.dropped_countries()) {
            out << "dropped country " << id << " (" << n << " rows)\n";
        }
        write_manifest(rc, {"countries = " + std::to_string(result.dataset.n_countries()),
                            "rows = " + std::to_string(result.dataset.n_rows()),
                            "rejected = " + std::to_string(result.rejected.size())});
        return 0;
    } catch (const PanelLoadError& e) {
        write_rejection_report(out_path(rc, "rejected.csv"), e.diagnostics());
        throw;
    }
}

void export_fit(const RunConfig& rc, const PanelDataset& ds, const TvcResult& fit,
                std::vector<std::string>& manifest, const std::string& prefix) {
    char buf[256];
    for (const auto& gf : fit.groups) {
        const std::string name = prefix + "group" + std::to_string(gf.group) + ".csv";
        write_curve_csv(out_path(rc, name), gf.inference.curve);
        std::snprintf(buf, sizeof(buf),
                      "%sgroup%d: psi1_hat = %.6g, psi2_hat = %.6g, edf = %.6g, v2 = %.6g, "
                      "avg_effect = %.6g, t = %.3f",
                      prefix.c_str(), gf.group, gf.pls.psi1, gf.pls.psi2, gf.pls.edf,
                      gf.inference.v2, gf.avg.estimate, gf.avg.t_stat);
        manifest.push_back(buf);
    }
    write_shifts_csv(out_path(rc, prefix + "shifts.csv"), ds, fit);
    std::snprintf(buf, sizeof(buf), "%spooled_avg_effect = %.6g (t = %.3f)", prefix.c_str(),
                  fit.pooled.estimate, fit.pooled.t_stat);
    manifest.push_back(buf);
    for (int g : fit.design.skipped_groups) {
        manifest.push_back(prefix + "group" + std::to_string(g) +
                           ": skipped (below minimum group size)");
    }
}

// Mean squared distance between fitted and true transmission curves, matched
// by group label; meaningful when the assignment came from the simulator.
double rmise_against_truth(const TvcResult& fit, const std::string& truth_path) {
    std::ifstream in(truth_path);
    if (!in) throw IoError("cannot open truth file: " + truth_path);
    std::string line;
    std::getline(in, line);
    std::map<int, std::vector<std::pair<double, double>>> truth;  // group -> (tau, delta)
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int g;
        double tau, delta, omega;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &g, &tau, &delta, &omega) != 4) {
            throw DataError("malformed truth line: " + line);
        }
        truth[g].emplace_back(tau, delta);
    }
    double total = 0.0;
    int groups = 0;
    for (const auto& gf : fit.groups) {
        const auto it = truth.find(gf.group);
        if (it == truth.end()) continue;
        double sq = 0.0;
        for (const auto& pt : gf.inference.curve) {
            double best = 1e300, tv = 0.0;
            for (const auto& [tau, delta] : it->second) {
                if (std::abs(tau - pt.tau) < best) {
                    best = std::abs(tau - pt.tau);
                    tv = delta;
                }
            }
            sq += (pt.delta - tv) * (pt.delta - tv);
        }
        total += sq / static_cast<double>(gf.inference.curve.size());
        ++groups;
    }
    if (groups == 0) throw DataError("truth file shares no group labels with the fit");
    return std::sqrt(total / groups);
}

int cmd_cluster(const CommonArgs& args, std::ostream& out) {
    const RunConfig rc = resolve_config(args);
    ensure_out_dir(rc);
    LoadResult result = load_input(rc);
    BicTable table;
    GroupAssignment assignment = classify(result.dataset, rc, &table);
    if (rc.groups == 0) write_bic_csv(out_path(rc, "bic.csv"), table);
    write_assignment_csv(out_path(rc, "assignment.csv"), result.dataset, assignment);

    std::vector<std::string> manifest;
    if (rc.groups == 0) {
        manifest.push_back("selected_G = " + std::to_string(table.selected_G));
        manifest.push_back("sigma2_hat = " + std::to_string(table.sigma2_hat));
    }
    manifest.push_back("objective = " + std::to_string(assignment.objective));
    for (int g : assignment.outlier_groups) {
        manifest.push_back("group" + std::to_string(g) + " flagged as outlier (below min size)");
    }
    write_manifest(rc, manifest);
    out << "G=" << assignment.G << " objective=" << assignment.objective << "\n";
    return 0;
}

int cmd_fit(const CommonArgs& args, std::ostream& out, bool iv) {
    const RunConfig rc = resolve_config(args);
    ensure_out_dir(rc);
    LoadResult result = load_input(rc);

    GroupAssignment assignment;
    if (!rc.assignment.empty()) {
        assignment = read_assignment_csv(rc.assignment, result.dataset);
    } else {
        assignment = classify(result.dataset, rc, nullptr);
    }

    std::vector<std::string> manifest;
    if (iv) {
        TvcIvResult res = fit_tvc_iv(result.dataset, assignment, rc.quantile, rc.tvc_config());
        // country indices in the fit refer to the instrument subsample
        export_fit(rc, res.first_stage.iv_data, res.tvc, manifest, "iv_");
        manifest.push_back("first_stage_strength_f = " + std::to_string(res.first_stage.strength_f));
        manifest.push_back("iv_sample_rows = " + std::to_string(res.first_stage.iv_data.n_rows()));
        if (!rc.truth.empty()) {
            manifest.push_back("rmise = " + std::to_string(rmise_against_truth(res.tvc, rc.truth)));
        }
        out << "iv fit: groups=" << res.tvc.groups.size()
            << " pooled_avg=" << res.tvc.pooled.estimate << "\n";
    } else {
        TvcResult res = fit_tvc(result.dataset, assignment, rc.quantile, rc.tvc_config());
        export_fit(rc, result.dataset, res, manifest, "fit_");
        if (!rc.truth.empty()) {
            manifest.push_back("rmise = " + std::to_string(rmise_against_truth(res, rc.truth)));
        }
        out << "fit: groups=" << res.groups.size() << " pooled_avg=" << res.pooled.estimate << "\n";
    }
    write_manifest(rc, manifest);
    return 0;
}

int cmd_shapley(const CommonArgs& args, std::ostream& out) {
    const RunConfig rc = resolve_config(args);
    ensure_out_dir(rc);
    LoadResult result = load_input(rc);
    GroupAssignment assignment;
    if (!rc.assignment.empty()) {
        assignment = read_assignment_csv(rc.assignment, result.dataset);
    } else {
        assignment = classify(result.dataset, rc, nullptr);
    }
    TvcResult fit = fit_tvc(result.dataset, assignment, rc.quantile, rc.tvc_config());
    ShapleyReport report = summarize_proportions(fit, rc.shapley_mode, rc.shapley_period_average);
    write_shapley_csv(out_path(rc, "shapley.csv"), result.dataset, report);
    if (rc.shapley_emit_observations) {
        write_attributions_csv(out_path(rc, "attributions.csv"), result.dataset, report.attributions);
    }
    write_manifest(rc, {"shapley_countries = " + std::to_string(report.proportions.size())});
    out << "shapley: countries=" << report.proportions.size() << "\n";
    return 0;
}

int cmd_simulate(const CommonArgs& args, std::ostream& out) {
    KeyValueConfig kv;
    const RunConfig rc = resolve_config(args, &kv);
    ensure_out_dir(rc);
    DgpSpec spec = DgpSpec::from_config(kv.values);
    spec.seed = rc.seed;

    if (rc.mc_replications > 0) {
        McOptions options;
        options.fixed_G = rc.groups;
        options.fit_iv = kv.get_bool("mc_iv", false);
        options.cluster_only = kv.get_bool("mc_cluster_only", false);
        options.use_true_labels = kv.get_bool("mc_true_labels", false);
        options.n_init = rc.n_init;
        options.zeta = rc.zeta;
        options.G_max = rc.G_max;
        options.quantile = rc.quantile;
        options.classify_quantile = rc.classify_quantile;
        options.tvc = rc.tvc_config();
        McSummary summary = replicate_study(spec, options, rc.mc_replications);
        write_mc_csv(out_path(rc, "mc_results.csv"), summary);
        write_manifest(rc, {"rmise = " + std::to_string(summary.rmise),
                            "coverage = " + std::to_string(summary.coverage),
                            "failure_rate = " + std::to_string(summary.failure_rate)});
        out << "mc: R=" << rc.mc_replications << " rmise=" << summary.rmise
            << " coverage=" << summary.coverage << "\n";
        return 0;
    }

    SimulatedPanel sim = generate(spec);
    write_panel_csv(out_path(rc, "panel.csv"), sim.data);
    write_truth_csv(out_path(rc, "truth.csv"), spec, sim.truth, rc.grid_points);
    GroupAssignment truth_labels;
    truth_labels.G = spec.n_groups;
    truth_labels.labels = sim.truth.labels;
    write_assignment_csv(out_path(rc, "truth_labels.csv"), sim.data, truth_labels);
    write_manifest(rc, {"countries = " + std::to_string(sim.data.n_countries()),
                        "rows = " + std::to_string(sim.data.n_rows()),
                        "clamped = " + std::to_string(sim.truth.clamped)});
    out << "simulated: countries=" << sim.data.n_countries() << " rows=" << sim.data.n_rows() << "\n";
    return 0;
}

void plot_curve_file(const RunConfig& rc, const std::string& csv_path, const std::string& stem) {
    const auto curve = read_curve_csv(csv_path);
    CurveSeries delta{"transmission coefficient", {}, {}, {}, {}};
    CurveSeries omega{"labor inequality component", {}, {}, {}, {}};
    for (const auto& p : curve) {
        delta.x.push_back(p.tau);
        delta.y.push_back(p.delta);
        delta.lo.push_back(p.delta_lo);
        delta.hi.push_back(p.delta_hi);
        omega.x.push_back(p.tau);
        omega.y.push_back(p.omega);
        omega.lo.push_back(p.omega_lo);
        omega.hi.push_back(p.omega_hi);
    }
    write_svg(out_path(rc, stem + "_delta.svg"), delta);
    write_svg(out_path(rc, stem + "_omega.svg"), omega);
}

int cmd_plot(const CommonArgs& args, std::ostream& out) {
    const RunConfig rc = resolve_config(args);
    ensure_out_dir(rc);
    if (rc.input.empty()) throw ConfigError("plot needs --input pointing at a curve CSV");
    if (!fs::exists(rc.input)) throw IoError("missing curve file: " + rc.input);
    const std::string stem = fs::path(rc.input).stem().string();
    plot_curve_file(rc, rc.input, stem);
    out << "wrote " << stem << "_delta.svg and " << stem << "_omega.svg\n";
    return 0;
}

int cmd_replicate(const CommonArgs& args, std::ostream& out) {
    const RunConfig rc = resolve_config(args);
    ensure_out_dir(rc);
    LoadResult result = load_input(rc);
    const PanelDataset& ds = result.dataset;

    BicTable table;
    GroupAssignment assignment = classify(ds, rc, &table);
    if (rc.groups == 0) write_bic_csv(out_path(rc, "bic.csv"), table);
    write_assignment_csv(out_path(rc, "assignment.csv"), ds, assignment);

    GroupAssignment pooled;  // the G = 1 estimation sample
    pooled.G = 1;
    pooled.labels.assign(static_cast<size_t>(ds.n_countries()), 1);
    pooled.centers.resize(1, Point2{0.0, 0.0});

    std::vector<std::string> manifest;
    char buf[256];

    // Full-panel summary in the four-estimator layout.
    {
        std::ofstream t2(out_path(rc, "table2.csv"));
        if (!t2) throw IoError("cannot write table2.csv");
        t2 << "estimator,quantile,estimate,t_stat,bic\n";
        for (Quantile q : {Quantile::Top10, Quantile::Top5, Quantile::Top1}) {
            const MgResult ols = mg_ols(ds, q);
            const MgResult cce = cce_mg(ds, q);
            std::snprintf(buf, sizeof(buf), "ols,%s,%.4g,%.4g,%.4g\n", quantile_name(q),
                          ols.estimate, ols.t_stat, ols.bic);
            t2 << buf;
            std::snprintf(buf, sizeof(buf), "cce,%s,%.4g,%.4g,%.4g\n", quantile_name(q),
                          cce.estimate, cce.t_stat, cce.bic);
            t2 << buf;

            TvcConfig cfg = rc.tvc_config();
            cfg.min_group_size = 1;
            const TvcResult tvc = fit_tvc(ds, pooled, q, cfg);
            double rss = 0.0, edf = 0.0;
            int n = 0, nc = 0;
            for (const auto& gf : tvc.groups) {
                rss += gf.pls.rss;
                edf += gf.pls.edf;
            }
            for (const auto& gd : tvc.design.groups) {
                n += gd.n_obs();
                nc += gd.n_countries();
            }
            std::snprintf(buf, sizeof(buf), "tvc,%s,%.4g,%.4g,%.4g\n", quantile_name(q),
                          tvc.pooled.estimate, tvc.pooled.t_stat, model_bic(rss, edf + nc, n));
            t2 << buf;

            const TvcIvResult iv = fit_tvc_iv(ds, pooled, q, cfg);
            rss = edf = 0.0;
            n = nc = 0;
            for (const auto& gf : iv.tvc.groups) {
                rss += gf.pls.rss;
                edf += gf.pls.edf;
            }
            for (const auto& gd : iv.tvc.design.groups) {
                n += gd.n_obs();
                nc += gd.n_countries();
            }
            std::snprintf(buf, sizeof(buf), "tvc_iv,%s,%.4g,%.4g,%.4g\n", quantile_name(q),
                          iv.tvc.pooled.estimate, iv.tvc.pooled.t_stat, model_bic(rss, edf + nc, n));
            t2 << buf;

            if (q == rc.quantile) {
                for (const auto& gf : tvc.groups) {
                    write_curve_csv(out_path(rc, "full_sample.csv"), gf.inference.curve);
                    plot_curve_file(rc, out_path(rc, "full_sample.csv"), "full_sample");
                }
            }
        }
    }

    // Grouped estimates for the configured quantile.
    {
        std::ofstream t3(out_path(rc, "table3.csv"));
        if (!t3) throw IoError("cannot write table3.csv");
        t3 << "estimator,group,estimate,t_stat,bic\n";

        const TvcResult grouped = fit_tvc(ds, assignment, rc.quantile, rc.tvc_config());
        const TvcIvResult grouped_iv = fit_tvc_iv(ds, assignment, rc.quantile, rc.tvc_config());

        for (const auto& gf : grouped.groups) {
            // Subset the dataset to the group's countries for the baselines.
            std::vector<PanelRow> rows;
            const auto& gd = grouped.design.groups[&gf - grouped.groups.data()];
            for (int c : gd.countries) {
                const auto [begin, end] = ds.country_range(c);
                for (int r = begin; r < end; ++r) rows.push_back(ds.rows()[static_cast<size_t>(r)]);
            }
            const PanelDataset sub(std::move(rows), 1);
            const MgResult ols = mg_ols(sub, rc.quantile);
            const MgResult cce = cce_mg(sub, rc.quantile);
            std::snprintf(buf, sizeof(buf), "ols,%d,%.4g,%.4g,%.4g\n", gf.group, ols.estimate,
                          ols.t_stat, ols.bic);
            t3 << buf;
            std::snprintf(buf, sizeof(buf), "cce,%d,%.4g,%.4g,%.4g\n", gf.group, cce.estimate,
                          cce.t_stat, cce.bic);
            t3 << buf;
            std::snprintf(buf, sizeof(buf), "tvc,%d,%.4g,%.4g,%.4g\n", gf.group, gf.avg.estimate,
                          gf.avg.t_stat,
                          model_bic(gf.pls.rss, gf.pls.edf + gd.n_countries(), gd.n_obs()));
            t3 << buf;
        }
        for (const auto& gf : grouped_iv.tvc.groups) {
            const auto& gd = grouped_iv.tvc.design.groups[&gf - grouped_iv.tvc.groups.data()];
            std::snprintf(buf, sizeof(buf), "tvc_iv,%d,%.4g,%.4g,%.4g\n", gf.group, gf.avg.estimate,
                          gf.avg.t_stat,
                          model_bic(gf.pls.rss, gf.pls.edf + gd.n_countries(), gd.n_obs()));
            t3 << buf;
        }

        std::vector<std::string> fit_manifest;
        export_fit(rc, ds, grouped, fit_manifest, "grouped_");
        manifest.insert(manifest.end(), fit_manifest.begin(), fit_manifest.end());
        for (const auto& gf : grouped.groups) {
            const std::string csv = out_path(rc, "grouped_group" + std::to_string(gf.group) + ".csv");
            plot_curve_file(rc, csv, "grouped_group" + std::to_string(gf.group));
        }

        const ShapleyReport report =
            summarize_proportions(grouped, rc.shapley_mode, rc.shapley_period_average);
        write_shapley_csv(out_path(rc, "table4.csv"), ds, report);
    }

    if (rc.groups == 0) manifest.push_back("selected_G = " + std::to_string(table.selected_G));
    write_manifest(rc, manifest);
    out << "replication artifacts written to " << rc.out_dir << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"grouped time-varying-coefficient panel toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string subcommand;
    for (const auto& name : {"validate", "cluster", "fit", "iv-fit", "shapley", "simulate",
                             "replicate", "plot"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", common.config_path, "key = value configuration file");
        sub->add_option("--input", common.input, "input CSV");
        sub->add_option("--assignment", common.assignment, "country,group CSV");
        sub->add_option("--truth", common.truth, "truth curves CSV from simulate");
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--quantile", common.quantile, "top10|top5|top1");
        sub->add_option("--seed", common.seed, "random seed");
        sub->callback([&subcommand, name] { subcommand = name; });
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error category=config-error msg=\"" << e.what() << "\"\n";
        return static_cast<int>(ErrorCategory::Config);
    }

    try {
        if (subcommand == "validate") return cmd_validate(common, out);
        if (subcommand == "cluster") return cmd_cluster(common, out);
        if (subcommand == "fit") return cmd_fit(common, out, false);
        if (subcommand == "iv-fit") return cmd_fit(common, out, true);
        if (subcommand == "shapley") return cmd_shapley(common, out);
        if (subcommand == "simulate") return cmd_simulate(common, out);
        if (subcommand == "replicate") return cmd_replicate(common, out);
        if (subcommand == "plot") return cmd_plot(common, out);
        err << "error category=config-error msg=\"unknown subcommand\"\n";
        return static_cast<int>(ErrorCategory::Config);
    } catch (const Error& e) {
        const std::string what = e.what();
        const auto newline = what.find('\n');
        err << "error category=" << category_name(e.category()) << " msg=\""
            << what.substr(0, newline) << "\"\n";
        if (newline != std::string::npos) err << what.substr(newline + 1) << "\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        err << "error category=numeric-error msg=\"" << e.what() << "\"\n";
        return static_cast<int>(ErrorCategory::Numeric);
    }
}

}  // namespace gtvc::cli
