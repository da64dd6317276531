// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// gated criterion fails. The conditional replication criterion runs only when
// GTVC_REPLICATION_CSV points at the assembled panel.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gtvc/baselines.hpp"
#include "gtvc/errors.hpp"
#include "gtvc/kmeans.hpp"
#include "gtvc/panel.hpp"
#include "gtvc/shapley.hpp"
#include "gtvc/simulate.hpp"
#include "gtvc/spline.hpp"
#include "gtvc/tvc.hpp"

using namespace gtvc;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!pass) ++failures;
}

void report_skip(int criterion, const std::string& detail) {
    std::printf("[SKIP] criterion %d: %s\n", criterion, detail.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GroupAssignment trivial_assignment(int n) {
    GroupAssignment a;
    a.G = 1;
    a.labels.assign(static_cast<size_t>(n), 1);
    a.centers.resize(1, Point2{0.0, 0.0});
    return a;
}

// --- criterion 1: spline correctness -----------------------------------------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    char buf[256];

    double worst_pu = 0.0;
    SplineBasis basis(8, 3);
    for (int i = 0; i < 10000; ++i) {
        const double tau = static_cast<double>(i) / 9999.0;
        worst_pu = std::max(worst_pu, std::abs(basis.evaluate(tau).sum() - 1.0));
    }

    // cubic reproduction by the unpenalized fit
    const auto grid = unit_grid(300);
    const Eigen::MatrixXd B = basis.evaluate_grid(grid);
    Eigen::VectorXd y(300);
    for (int i = 0; i < 300; ++i) {
        const double t = grid[static_cast<size_t>(i)];
        y[i] = 0.2 + 1.7 * t - 2.9 * t * t + 1.1 * t * t * t;
    }
    const Eigen::VectorXd coef = (B.transpose() * B).ldlt().solve(B.transpose() * y);
    const double worst_poly = (B * coef - y).cwiseAbs().maxCoeff();

    // exact null space of the second-order penalty
    const Eigen::MatrixXd P = penalty_matrix(basis, 2);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
    Eigen::VectorXd ramp(8);
    for (int i = 0; i < 8; ++i) ramp[i] = -1.0 + 0.5 * i;
    const double null_const = std::abs(ones.dot(P * ones));
    const double null_lin = std::abs(ramp.dot(P * ramp));
    Eigen::VectorXd kink = Eigen::VectorXd::Zero(8);
    kink[3] = 1.0;
    const bool kink_penalized = kink.dot(P * kink) > 0.0;

    const double elapsed = seconds_since(t0);
    const bool pass = worst_pu < 1e-12 && worst_poly < 1e-8 && null_const < 1e-20 &&
                      null_lin < 1e-12 && kink_penalized && elapsed < 1.0;
    std::snprintf(buf, sizeof(buf),
                  "spline correctness (partition-of-unity %.2e, cubic reproduction %.2e, "
                  "null space %.1e/%.1e, %.2fs)",
                  worst_pu, worst_poly, null_const, null_lin, elapsed);
    report(1, pass, buf);
}

// --- criterion 2: kmeans oracle equivalence ----------------------------------

double brute_force_two_groups(const std::vector<Point2>& pts) {
    const int n = static_cast<int>(pts.size());
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
        if (!(mask & 1u)) continue;
        Point2 ca{0, 0}, cb{0, 0};
        int na = 0, nb = 0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                ca[0] += pts[static_cast<size_t>(i)][0];
                ca[1] += pts[static_cast<size_t>(i)][1];
                ++na;
            } else {
                cb[0] += pts[static_cast<size_t>(i)][0];
                cb[1] += pts[static_cast<size_t>(i)][1];
                ++nb;
            }
        }
        if (na == 0 || nb == 0) continue;
        ca[0] /= na;
        ca[1] /= na;
        cb[0] /= nb;
        cb[1] /= nb;
        double obj = 0.0;
        for (int i = 0; i < n; ++i) {
            const Point2& c = (mask & (1u << i)) ? ca : cb;
            obj += (pts[static_cast<size_t>(i)][0] - c[0]) * (pts[static_cast<size_t>(i)][0] - c[0]) +
                   (pts[static_cast<size_t>(i)][1] - c[1]) * (pts[static_cast<size_t>(i)][1] - c[1]);
        }
        best = std::min(best, obj / n);
    }
    return best;
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20250810);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    int hits = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point2> pts(8);
        for (auto& p : pts) p = {u(rng), u(rng)};
        const GroupAssignment a = lloyd_kmeans(pts, 2, 100, derive_seed(7, static_cast<std::uint64_t>(trial)));
        if (std::abs(a.objective - brute_force_two_groups(pts)) <= 1e-12) ++hits;
    }
    const double elapsed = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "kmeans oracle equivalence (%d/20 instances, %.2fs)", hits,
                  elapsed);
    report(2, hits >= 19 && elapsed < 5.0, buf);
}

// --- criterion 3: information-criterion selection -----------------------------

DgpSpec separation3_spec() {
    DgpSpec spec;
    spec.n_countries = 60;
    spec.n_years = 40;
    spec.n_groups = 3;
    spec.delta = {Curve::parse("constant:0.1"), Curve::parse("constant:0.22"),
                  Curve::parse("constant:0.35")};
    spec.omega = {Curve::parse("csine:0.005"), Curve::parse("ccos:0.005"),
                  Curve::parse("csine:-0.005")};
    spec.cs_level = {0.3, 0.5, 0.7};
    spec.mu_sd = 0.012;
    spec.cs_sigma = 0.18;
    spec.eps_sd = 0.004;
    spec.mu_mean = 0.15;
    spec.seed = 31;
    return spec;
}

std::pair<int, double> selection_run(double zeta, int reps) {
    const DgpSpec spec = separation3_spec();
    McOptions opt;
    opt.fixed_G = 0;
    opt.cluster_only = true;
    opt.zeta = zeta;
    opt.n_init = 100;
    opt.G_max = 5;
    const McSummary s = replicate_study(spec, opt, reps);
    int correct = 0;
    double acc = 0.0;
    int acc_n = 0;
    for (const auto& r : s.reps) {
        if (!r.ok) continue;
        if (r.selected_G == 3) {
            ++correct;
            acc += r.label_accuracy;
            ++acc_n;
        }
    }
    return {correct, acc_n > 0 ? acc / acc_n : 0.0};
}

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [correct, acc] = selection_run(3.0, 100);
    const double elapsed = seconds_since(t0);
    const bool pass = correct >= 90 && (correct == 0 || acc >= 0.95) && elapsed < 120.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "group-number selection at zeta=3 (G=3 chosen in %d/100, label accuracy when "
                  "correct %.3f, %.1fs)",
                  correct, acc, elapsed);
    report(3, pass, buf);
    if (!pass) {
        const auto [c9, acc9] = selection_run(9.0, 100);
        std::printf("       note: selection machinery check at zeta=9 gives %d/100 (accuracy %.3f); "
                    "the printed penalty at zeta=3 is dominated by the over-split fit gain at N=60\n",
                    c9, acc9);
    }
}

// --- criterion 4: PLS and GCV oracle equivalence -------------------------------

PanelDataset tiny_panel(int n_countries, int n_years, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    std::vector<PanelRow> rows;
    for (int c = 0; c < n_countries; ++c) {
        for (int t = 0; t < n_years; ++t) {
            PanelRow r;
            r.country = "C" + std::to_string(c);
            r.year = 2000 + t;
            const double cs = 0.3 + 0.05 * c + 0.2 * u(rng) + 0.002 * t;
            const double tau = static_cast<double>(t) / (n_years - 1);
            r.capital_share = cs;
            const double s = 0.15 + 0.02 * c + (0.1 + 0.2 * tau) * cs + u(rng) * 0.1;
            r.top10 = r.top5 = r.top1 = s;
            rows.push_back(r);
        }
    }
    return PanelDataset(std::move(rows), 1);
}

void criterion_4(std::vector<TvcResult>* fits_for_invariants) {
    double worst_beta = 0.0;
    bool gcv_ok = true;

    for (int trial = 0; trial < 10; ++trial) {
        const PanelDataset ds = tiny_panel(2, 8, 500 + static_cast<unsigned>(trial));
        TvcConfig cfg;
        cfg.num_basis = 4;
        cfg.min_group_size = 1;
        const DesignSet set = assemble_design(ds, trivial_assignment(2), Quantile::Top5, cfg);
        const Eigen::MatrixXd A = penalty_matrix(set.basis, 2);
        const PlsFit fit = fit_pls(set.groups[0], A, A, 0.5, 2.0);

        // independent dense construction and LU solve
        const int J = 4;
        const auto grid = unit_grid(cfg.grid_points);
        Eigen::VectorXd offsets = Eigen::VectorXd::Zero(J);
        for (double tau : grid) offsets += set.basis.evaluate(tau);
        offsets /= static_cast<double>(grid.size());
        const int n = ds.n_rows();
        Eigen::MatrixXd X(n, 2 * J);
        Eigen::VectorXd y(n);
        for (int r = 0; r < n; ++r) {
            const auto& row = ds.rows()[static_cast<size_t>(r)];
            const double tau = normalize_time(row.year, ds.window());
            const Eigen::VectorXd b = set.basis.evaluate(tau);
            X.row(r).head(J) = (b - offsets).transpose();
            X.row(r).tail(J) = (row.capital_share * b).transpose();
            y[r] = row.share(Quantile::Top5);
        }
        Eigen::MatrixXd Xd = X;
        Eigen::VectorXd yd = y;
        for (int c = 0; c < 2; ++c) {
            const auto [begin, end] = ds.country_range(c);
            const Eigen::RowVectorXd xm = X.middleRows(begin, end - begin).colwise().mean();
            const double ym = y.segment(begin, end - begin).mean();
            for (int r = begin; r < end; ++r) {
                Xd.row(r) -= xm;
                yd[r] -= ym;
            }
        }
        Eigen::MatrixXd M = Xd.transpose() * Xd;
        M.topLeftCorner(J, J) += 0.5 * A;
        M.bottomRightCorner(J, J) += 2.0 * A;
        Eigen::VectorXd pin = Eigen::VectorXd::Zero(2 * J);
        pin.head(J).setOnes();
        M += pin * pin.transpose();
        const Eigen::VectorXd oracle = Eigen::FullPivLU<Eigen::MatrixXd>(M).solve(Xd.transpose() * yd);
        worst_beta = std::max(worst_beta, (fit.beta - oracle).cwiseAbs().maxCoeff());

        // brute-force re-evaluation of a small smoothing grid
        const std::vector<double> psi_grid = {1e-3, 1e-1, 10.0, 1e3};
        const GcvResult got = gcv_select(set.groups[0], A, A, psi_grid, false);
        double best = std::numeric_limits<double>::infinity();
        double b1 = 0.0, b2 = 0.0;
        const double n_eff = set.groups[0].n_eff();
        for (double p1 : psi_grid) {
            for (double p2 : psi_grid) {
                const PlsFit f = fit_pls(set.groups[0], A, A, p1, p2);
                const double score = n_eff * f.rss / ((n_eff - f.edf) * (n_eff - f.edf));
                if (score <= best) {
                    best = score;
                    b1 = p1;
                    b2 = p2;
                }
            }
        }
        if (got.grid_argmin.psi1 != b1 || got.grid_argmin.psi2 != b2) gcv_ok = false;

        TvcResult full = fit_tvc(ds, trivial_assignment(2), Quantile::Top5, cfg);
        fits_for_invariants->push_back(std::move(full));
    }

    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "PLS oracle equivalence (max |beta - dense solve| = %.2e, GCV argmin %s)",
                  worst_beta, gcv_ok ? "matches brute force" : "MISMATCH");
    report(4, worst_beta < 1e-10 && gcv_ok, buf);
}

// --- criterion 5: fit invariants ----------------------------------------------

void criterion_5(const std::vector<TvcResult>& fits) {
    double worst_omega = 0.0, worst_recon = 0.0;
    int checked = 0;
    for (const auto& fit : fits) {
        for (const auto& gf : fit.groups) {
            double mean_omega = 0.0;
            for (const auto& pt : gf.inference.curve) mean_omega += pt.omega;
            mean_omega /= static_cast<double>(gf.inference.curve.size());
            worst_omega = std::max(worst_omega, std::abs(mean_omega));
            for (const auto& of : gf.obs_fit) {
                const double rebuilt = of.delta * of.cs + of.mu + of.omega + of.resid;
                worst_recon = std::max(worst_recon, std::abs(rebuilt - of.s));
            }
            ++checked;
        }
    }
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "identification and reconstruction on %d fitted groups (max |mean omega| = %.2e, "
                  "max reconstruction error = %.2e)",
                  checked, worst_omega, worst_recon);
    report(5, checked > 0 && worst_omega < 1e-10 && worst_recon < 1e-10, buf);
}

// --- criterion 6: estimation quality -------------------------------------------

void criterion_6(std::vector<TvcResult>* fits_for_invariants) {
    const auto t0 = std::chrono::steady_clock::now();
    DgpSpec spec;
    spec.n_countries = 60;
    spec.n_years = 40;
    spec.n_groups = 3;
    spec.delta = {Curve::parse("linear:0.1:0.2"), Curve::parse("sine:0.3:-0.15"),
                  Curve::parse("constant:0.2")};
    spec.omega = {Curve::parse("csine:0.01"), Curve::parse("ccos:0.015"),
                  Curve::parse("csine:-0.012")};
    spec.cs_level = {0.25, 0.45, 0.65};
    spec.mu_sd = 0.005;
    spec.cs_sigma = 0.15;
    spec.eps_sd = 0.02;
    spec.mu_mean = 0.15;
    spec.seed = 20250810;

    McOptions opt;
    opt.fixed_G = 3;
    opt.n_init = 100;
    const McSummary s = replicate_study(spec, opt, 200);
    const double elapsed = seconds_since(t0);

    const bool pass = s.failure_rate == 0.0 && s.rmise < 0.05 && s.coverage >= 0.85 &&
                      s.coverage <= 0.99 && elapsed < 600.0;
    char buf[224];
    std::snprintf(buf, sizeof(buf),
                  "estimation quality on the three-shape process (RMISE %.4f, band coverage %.3f, "
                  "label accuracy %.3f, %.1fs for 200 replications)",
                  s.rmise, s.coverage, s.mean_label_accuracy, elapsed);
    report(6, pass, buf);

    // keep one representative fit for the invariant sweep
    SimulatedPanel sim = generate(spec);
    GroupAssignment truth;
    truth.G = 3;
    truth.labels = sim.truth.labels;
    truth.centers.resize(3, Point2{0, 0});
    TvcConfig cfg;
    cfg.min_group_size = 4;
    fits_for_invariants->push_back(fit_tvc(sim.data, truth, Quantile::Top5, cfg));
}

// --- criterion 7: instrumental-variable bias reduction --------------------------

void criterion_7(std::vector<TvcResult>* fits_for_invariants) {
    const auto t0 = std::chrono::steady_clock::now();
    DgpSpec spec;
    spec.n_countries = 60;
    spec.n_years = 40;
    spec.n_groups = 1;
    spec.delta = {Curve::parse("constant:0.3")};
    spec.omega = {Curve::parse("csine:0.01")};
    spec.cs_level = {0.4};
    spec.cs_sigma = 0.3;
    spec.eps_sd = 0.005;
    spec.ex_sd = 0.05;  // classical measurement error on the capital share
    spec.with_instrument = true;
    spec.iv_noise_sd = 0.01;
    spec.mu_mean = 0.15;
    spec.seed = 777;

    McOptions opt;
    opt.use_true_labels = true;
    opt.fit_iv = true;
    const McSummary s = replicate_study(spec, opt, 200);

    int ok = 0, iv_better = 0, sign_ok = 0;
    for (const auto& r : s.reps) {
        if (!r.ok) continue;
        ++ok;
        if (std::abs(r.bias_iv) < std::abs(r.bias)) ++iv_better;
        if (r.avg_effect < r.avg_effect_iv) ++sign_ok;
    }
    const double elapsed = seconds_since(t0);
    // conformity is counted over all 200 replications; estimator failures are
    // recorded, not fatal
    const bool pass = iv_better >= 160 && sign_ok >= 160;
    char buf[224];
    std::snprintf(buf, sizeof(buf),
                  "IV bias reduction under measurement error (|bias| smaller in %d/200, "
                  "attenuation sign in %d/200, %d replications succeeded, %.1fs)",
                  iv_better, sign_ok, ok, elapsed);
    report(7, pass, buf);

    SimulatedPanel sim = generate(spec);
    TvcConfig cfg;
    cfg.min_group_size = 1;
    fits_for_invariants->push_back(
        fit_tvc_iv(sim.data, trivial_assignment(spec.n_countries), Quantile::Top5, cfg).tvc);
}

// --- criterion 8: Shapley exactness ----------------------------------------------

void criterion_8() {
    DgpSpec spec;
    spec.n_countries = 12;
    spec.n_years = 20;
    spec.n_groups = 2;
    spec.delta = {Curve::parse("linear:0.1:0.2"), Curve::parse("constant:0.25")};
    spec.omega = {Curve::parse("csine:0.01"), Curve::parse("ccos:0.012")};
    spec.cs_level = {0.3, 0.45};
    spec.eps_sd = 0.004;
    spec.seed = 99;
    const SimulatedPanel sim = generate(spec);
    GroupAssignment a;
    a.G = 2;
    a.labels = sim.truth.labels;
    a.centers.resize(2, Point2{0, 0});
    TvcConfig cfg;
    cfg.min_group_size = 1;
    const TvcResult fit = fit_tvc(sim.data, a, Quantile::Top5, cfg);

    const auto exact = decompose(fit, ShapleyMode::Exact);
    const auto literal = decompose(fit, ShapleyMode::Thirds);

    double worst_eff = 0.0, worst_ratio = 0.0, worst_perm = 0.0;
    size_t idx = 0;
    for (const auto& gf : fit.groups) {
        const double delta_bar = gf.avg.estimate;
        for (const auto& of : gf.obs_fit) {
            const auto& e = exact[idx];
            const auto& l = literal[idx];
            const double prediction = of.delta * of.cs + of.mu + of.omega;
            worst_eff = std::max(worst_eff,
                                 std::abs(e.phi_dev + e.phi_level + e.phi_labor - (prediction - of.mu)));
            worst_ratio = std::max({worst_ratio,
                                    std::abs(l.phi_dev - 4.0 / 3.0 * e.phi_dev),
                                    std::abs(l.phi_level - 4.0 / 3.0 * e.phi_level),
                                    std::abs(l.phi_labor - 4.0 / 3.0 * e.phi_labor)});
            // permutation-average definition over all 3! orderings
            const std::array<double, 3> values = {(of.delta - delta_bar) * of.cs,
                                                  delta_bar * of.cs, of.omega};
            std::array<int, 3> order = {0, 1, 2};
            std::array<double, 3> phi{0.0, 0.0, 0.0};
            int count = 0;
            do {
                double prefix = of.mu;
                for (int v : order) {
                    const double with_v = prefix + values[static_cast<size_t>(v)];
                    phi[static_cast<size_t>(v)] += with_v - prefix;
                    prefix = with_v;
                }
                ++count;
            } while (std::next_permutation(order.begin(), order.end()));
            for (auto& p : phi) p /= count;
            worst_perm = std::max({worst_perm, std::abs(phi[0] - e.phi_dev),
                                   std::abs(phi[1] - e.phi_level), std::abs(phi[2] - e.phi_labor)});
            ++idx;
        }
    }

    const ShapleyReport report_rows = summarize_proportions(fit, ShapleyMode::Exact);
    double worst_sum = 0.0;
    for (const auto& p : report_rows.proportions) {
        if (p.defined) {
            worst_sum = std::max(worst_sum, std::abs(p.prop_delta + p.prop_cs + p.prop_omega - 1.0));
        }
    }

    char buf[224];
    std::snprintf(buf, sizeof(buf),
                  "Shapley exactness (efficiency %.1e, permutation oracle %.1e, literal ratio "
                  "%.1e, proportion row sums %.1e)",
                  worst_eff, worst_perm, worst_ratio, worst_sum);
    report(8, worst_eff < 1e-12 && worst_perm < 1e-12 && worst_ratio < 1e-12 && worst_sum < 1e-9,
           buf);
}

// --- criterion 9: baseline sanity --------------------------------------------------

void criterion_9() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.2, 0.5);
    std::vector<PanelRow> rows;
    for (int c = 0; c < 8; ++c) {
        for (int t = 0; t < 15; ++t) {
            PanelRow r;
            r.country = "C" + std::to_string(c);
            r.year = 1990 + t;
            const double cs = u(rng);
            r.capital_share = cs;
            const double s = 0.1 + (0.2 + 0.02 * c) * cs + 0.01 * u(rng);
            r.top10 = r.top5 = r.top1 = s;
            rows.push_back(r);
        }
    }
    const PanelDataset ds(rows, 1);
    const MgResult mg = mg_ols(ds, Quantile::Top5);
    double worst_slope = 0.0;
    for (int c = 0; c < 8; ++c) {
        const auto [begin, end] = ds.country_range(c);
        double mx = 0.0, my = 0.0;
        for (int r = begin; r < end; ++r) {
            mx += ds.rows()[static_cast<size_t>(r)].capital_share;
            my += ds.rows()[static_cast<size_t>(r)].top5;
        }
        mx /= (end - begin);
        my /= (end - begin);
        double cov = 0.0, var = 0.0;
        for (int r = begin; r < end; ++r) {
            const double dx = ds.rows()[static_cast<size_t>(r)].capital_share - mx;
            cov += dx * (ds.rows()[static_cast<size_t>(r)].top5 - my);
            var += dx * dx;
        }
        worst_slope = std::max(worst_slope, std::abs(mg.slopes[static_cast<size_t>(c)] - cov / var));
    }

    // constant cross-sectional averages collapse the augmented regression
    std::vector<PanelRow> mirrored;
    for (int t = 0; t < 12; ++t) {
        const double d = 0.01 * std::sin(0.9 * t) + 0.001 * t - 0.006;
        PanelRow a;
        a.country = "AAA";
        a.year = 1990 + t;
        a.capital_share = 0.35 + d;
        a.top10 = a.top5 = a.top1 = 0.25 + 0.3 * d;
        PanelRow b = a;
        b.country = "BBB";
        b.capital_share = 0.35 - d;
        b.top10 = b.top5 = b.top1 = 0.25 - 0.3 * d;
        mirrored.push_back(a);
        mirrored.push_back(b);
    }
    const PanelDataset flat(mirrored, 1);
    const double gap = std::abs(cce_mg(flat, Quantile::Top5).estimate -
                                mg_ols(flat, Quantile::Top5).estimate);

    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "baseline sanity (mean-group slope vs covariance ratio %.1e, CCE collapse gap "
                  "%.1e)",
                  worst_slope, gap);
    report(9, worst_slope < 1e-12 && gap < 1e-12, buf);
}

// --- criterion 10: conditional replication ------------------------------------------

void criterion_10() {
    const char* path = std::getenv("GTVC_REPLICATION_CSV");
    if (path == nullptr || std::string(path).empty()) {
        report_skip(10, "conditional replication (set GTVC_REPLICATION_CSV to the assembled panel)");
        return;
    }
    try {
        const LoadResult loaded = load_csv(path);
        const PanelDataset& ds = loaded.dataset;

        const auto moments = time_averages(ds, Quantile::Top10);
        const Standardized std_points = standardize_features(moments);
        const BicSelection sel = bic_select(std_points.points, 5, 3.0, 100, 1);

        GroupAssignment pooled = trivial_assignment(ds.n_countries());
        TvcConfig cfg;
        cfg.min_group_size = 1;
        const TvcResult tvc = fit_tvc(ds, pooled, Quantile::Top5, cfg);
        const TvcIvResult iv = fit_tvc_iv(ds, pooled, Quantile::Top5, cfg);

        GroupAssignment grouped = sel.assignment;
        flag_small_groups(grouped, 4);
        TvcConfig gcfg;
        const TvcResult gfit = fit_tvc(ds, grouped, Quantile::Top5, gcfg);
        const ShapleyReport shap = summarize_proportions(gfit, ShapleyMode::Exact);
        double group1_cs = 0.0;
        for (const auto& gm : shap.group_means) {
            if (gm.group == 1) group1_cs = gm.prop_cs;
        }

        // BIC ranking per quantile: the varying-coefficient model attains the smallest
        bool ranking = true;
        for (Quantile q : {Quantile::Top10, Quantile::Top5, Quantile::Top1}) {
            const MgResult ols = mg_ols(ds, q);
            const MgResult cce = cce_mg(ds, q);
            const TvcResult t = fit_tvc(ds, pooled, q, cfg);
            double rss = 0.0, edf = 0.0;
            int n = 0, nc = 0;
            for (const auto& gf : t.groups) {
                rss += gf.pls.rss;
                edf += gf.pls.edf;
            }
            for (const auto& gd : t.design.groups) {
                n += gd.n_obs();
                nc += gd.n_countries();
            }
            const double tvc_bic = model_bic(rss, edf + nc, n);
            if (!(tvc_bic < ols.bic && tvc_bic < cce.bic)) ranking = false;
        }

        const bool pass = std::abs(tvc.pooled.estimate - 0.17) <= 0.05 &&
                          std::abs(iv.tvc.pooled.estimate - 0.28) <= 0.07 &&
                          sel.table.selected_G == 4 && std::abs(group1_cs - 0.50) <= 0.10 && ranking;
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "conditional replication (TVC top5 %.3f, TVC-IV %.3f, selected G=%d, "
                      "group-1 capital-share proportion %.3f, ranking %s)",
                      tvc.pooled.estimate, iv.tvc.pooled.estimate, sel.table.selected_G, group1_cs,
                      ranking ? "ok" : "violated");
        report(10, pass, buf);
    } catch (const std::exception& e) {
        report(10, false, std::string("conditional replication failed: ") + e.what());
    }
}

}  // namespace

int main() {
    std::vector<TvcResult> fits;
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4(&fits);
    criterion_6(&fits);
    criterion_7(&fits);
    criterion_5(fits);
    criterion_8();
    criterion_9();
    criterion_10();
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all gated criteria passed\n");
    return 0;
}
