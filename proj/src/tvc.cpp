#include "gtvc/tvc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "gtvc/errors.hpp"

namespace gtvc {

namespace {

// Penalized normal matrix: gram + block-embedded penalties + the rank-one pin
// on the labor block's constant direction.
Eigen::MatrixXd penalized_matrix(const Eigen::MatrixXd& XtX, const Eigen::MatrixXd& A1,
                                 const Eigen::MatrixXd& A2, double psi1, double psi2) {
    const Eigen::Index J = A1.rows();
    Eigen::MatrixXd M = XtX;
    M.topLeftCorner(J, J) += psi1 * A1;
    M.bottomRightCorner(J, J) += psi2 * A2;
    for (Eigen::Index a = 0; a < J; ++a) {
        for (Eigen::Index b = 0; b < J; ++b) M(a, b) += 1.0;
    }
    return M;
}

struct CandidateFit {
    Eigen::VectorXd beta;
    double rss = 0.0;
    double edf = 0.0;
    bool ok = false;
    double smallest_eig = 0.0;
};

CandidateFit solve_candidate(const Eigen::MatrixXd& XtX, const Eigen::VectorXd& Xty, double yty,
                             const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2, double psi1,
                             double psi2) {
    CandidateFit out;
    const Eigen::MatrixXd M = penalized_matrix(XtX, A1, A2, psi1, psi2);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    out.smallest_eig = lo;
    if (!(lo > 1e-12 * std::max(1.0, hi))) return out;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    out.beta = ldlt.solve(Xty);
    out.rss = std::max(0.0, yty - 2.0 * out.beta.dot(Xty) + out.beta.dot(XtX * out.beta));
    out.edf = ldlt.solve(XtX).trace();
    out.ok = true;
    return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(static_cast<size_t>(n));
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    const double step = std::log(hi / lo) / (n - 1);
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i)] = lo * std::exp(step * i);
    return g;
}

}  // namespace

std::vector<double> TvcConfig::psi_grid() const {
    return log_grid(psi_min, psi_max, psi_grid_points);
}

DesignSet assemble_design(const PanelDataset& ds, const GroupAssignment& assignment, Quantile q,
                          const TvcConfig& cfg, const std::vector<double>* cs_override,
                          std::optional<std::pair<int, int>> window_override) {
    if (static_cast<int>(assignment.labels.size()) != ds.n_countries()) {
        throw DataError("assignment covers " + std::to_string(assignment.labels.size()) +
                        " countries but the dataset has " + std::to_string(ds.n_countries()));
    }
    if (cs_override && static_cast<int>(cs_override->size()) != ds.n_rows()) {
        throw DataError("capital-share override does not match the dataset rows");
    }

    const auto window = window_override.value_or(ds.window());
    DesignSet set{SplineBasis(cfg.num_basis, cfg.degree),
                  CenteredBasis{},
                  {},
                  {},
                  window};
    set.centered = center_basis(set.basis, unit_grid(cfg.grid_points));

    const int J = cfg.num_basis;
    std::vector<int> group_sizes(static_cast<size_t>(assignment.G), 0);
    for (int l : assignment.labels) ++group_sizes.at(static_cast<size_t>(l - 1));

    for (int g = 1; g <= assignment.G; ++g) {
        if (group_sizes[static_cast<size_t>(g - 1)] == 0) continue;
        if (group_sizes[static_cast<size_t>(g - 1)] < cfg.min_group_size) {
            set.skipped_groups.push_back(g);
            continue;
        }
        GroupDesign gd;
        gd.group = g;
        for (int c = 0; c < ds.n_countries(); ++c) {
            if (assignment.labels[static_cast<size_t>(c)] == g) gd.countries.push_back(c);
        }
        int total = 0;
        for (int c : gd.countries) {
            const auto [begin, end] = ds.country_range(c);
            gd.country_rows.emplace_back(total, total + (end - begin));
            total += end - begin;
            for (int k = begin; k < end; ++k) {
                const auto& row = ds.rows()[static_cast<size_t>(k)];
                ObsInfo o;
                o.country = c;
                o.year = row.year;
                o.tau = normalize_time(row.year, window);
                o.cs = cs_override ? (*cs_override)[static_cast<size_t>(k)] : row.capital_share;
                o.s = row.share(q);
                gd.obs.push_back(o);
            }
        }

        gd.X.resize(total, 2 * J);
        gd.y.resize(total);
        for (int r = 0; r < total; ++r) {
            const auto& o = gd.obs[static_cast<size_t>(r)];
            const Eigen::VectorXd b = set.basis.evaluate(o.tau);
            gd.X.row(r).head(J) = (b - set.centered.offsets).transpose();
            gd.X.row(r).tail(J) = (o.cs * b).transpose();
            gd.y[r] = o.s;
        }

        gd.Xt = gd.X;
        gd.yt = gd.y;
        for (size_t ci = 0; ci < gd.countries.size(); ++ci) {
            const auto [begin, end] = gd.country_rows[ci];
            const auto rows = Eigen::seq(begin, end - 1);
            const Eigen::RowVectorXd xmean = gd.X(rows, Eigen::all).colwise().mean();
            const double ymean = gd.y(rows).mean();
            gd.Xt(rows, Eigen::all).rowwise() -= xmean;
            gd.yt(rows).array() -= ymean;
        }
        set.groups.push_back(std::move(gd));
    }

    if (set.groups.empty()) {
        throw DataError("no group reaches the minimum size of " +
                        std::to_string(cfg.min_group_size) + " countries");
    }
    return set;
}

PlsFit fit_pls(const GroupDesign& design, const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2,
               double psi1, double psi2) {
    if (psi1 < 0.0 || psi2 < 0.0) throw ConfigError("smoothing weights must be nonnegative");
    const Eigen::Index p = design.X.cols();
    if (design.n_obs() <= static_cast<int>(p)) {
        throw DataError("stacked system needs more rows than coefficients: " +
                        std::to_string(design.n_obs()) + " rows for " + std::to_string(p) +
                        " coefficients");
    }

    const Eigen::MatrixXd XtX = design.Xt.transpose() * design.Xt;
    const Eigen::VectorXd Xty = design.Xt.transpose() * design.yt;
    const double yty = design.yt.squaredNorm();

    CandidateFit cand = solve_candidate(XtX, Xty, yty, A1, A2, psi1, psi2);
    if (!cand.ok) {
        throw NumericError("singular penalized normal system (smallest eigenvalue " +
                           std::to_string(cand.smallest_eig) + ")");
    }

    PlsFit fit;
    fit.beta = cand.beta;
    fit.psi1 = psi1;
    fit.psi2 = psi2;
    fit.M = penalized_matrix(XtX, A1, A2, psi1, psi2);
    fit.XtX = XtX;
    fit.edf = cand.edf;

    fit.residuals = design.yt - design.Xt * fit.beta;
    fit.rss = fit.residuals.squaredNorm();
    fit.mu.resize(design.countries.size());
    const Eigen::VectorXd raw_resid = design.y - design.X * fit.beta;
    for (size_t ci = 0; ci < design.countries.size(); ++ci) {
        const auto [begin, end] = design.country_rows[ci];
        fit.mu[ci] = raw_resid.segment(begin, end - begin).mean();
    }
    return fit;
}

GcvResult gcv_select(const GroupDesign& design, const Eigen::MatrixXd& A1,
                     const Eigen::MatrixXd& A2, const std::vector<double>& grid, bool refine) {
    if (grid.empty()) throw ConfigError("empty smoothing grid");

    const Eigen::MatrixXd XtX = design.Xt.transpose() * design.Xt;
    const Eigen::VectorXd Xty = design.Xt.transpose() * design.yt;
    const double yty = design.yt.squaredNorm();
    const double n_eff = design.n_eff();

    GcvResult out;
    auto evaluate = [&](double p1, double p2) {
        GcvCandidate c;
        c.psi1 = p1;
        c.psi2 = p2;
        const CandidateFit fit = solve_candidate(XtX, Xty, yty, A1, A2, p1, p2);
        if (fit.ok && n_eff - fit.edf > 0.0) {
            c.rss = fit.rss;
            c.edf = fit.edf;
            c.score = n_eff * fit.rss / ((n_eff - fit.edf) * (n_eff - fit.edf));
            c.valid = true;
        }
        out.trace.push_back(c);
        return c;
    };

    // Exact score ties go to the later candidate; with both axes ascending that
    // is the lexicographically larger (psi1, psi2), i.e. the smoother fit.
    GcvCandidate best;
    best.score = std::numeric_limits<double>::infinity();
    auto consider = [&](const GcvCandidate& c) {
        if (c.valid && (!best.valid || c.score <= best.score)) best = c;
    };

    for (double p1 : grid) {
        for (double p2 : grid) consider(evaluate(p1, p2));
    }
    if (!best.valid) throw NumericError("all smoothing candidates are singular");
    out.grid_argmin = best;

    if (refine && grid.size() > 1) {
        auto neighbors = [&](double v) {
            size_t i = 0;
            for (size_t k = 0; k < grid.size(); ++k) {
                if (grid[k] == v) i = k;
            }
            const double lo = grid[i > 0 ? i - 1 : 0];
            const double hi = grid[i + 1 < grid.size() ? i + 1 : grid.size() - 1];
            return log_grid(lo, hi, 7);
        };
        for (double p1 : neighbors(best.psi1)) {
            for (double p2 : neighbors(best.psi2)) consider(evaluate(p1, p2));
        }
    }

    out.psi1_hat = best.psi1;
    out.psi2_hat = best.psi2;
    return out;
}

GroupInference posterior_covariance(const GroupDesign& design, const PlsFit& fit,
                                    const SplineBasis& basis, const CenteredBasis& centered,
                                    const std::vector<double>& grid, double band_z) {
    const double n_eff = design.n_eff();
    const double denom = n_eff - fit.edf;
    if (denom <= 0.0) throw NumericError("nonpositive degrees of freedom for the error variance");
    GroupInference inf;
    inf.v2 = fit.rss / denom;
    if (!(inf.v2 > 0.0)) throw NumericError("degenerate residuals: error variance is not positive");

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.M);
    inf.Sigma = ldlt.solve(Eigen::MatrixXd::Identity(fit.M.rows(), fit.M.cols())) * inf.v2;

    const int J = basis.num_basis();
    const auto omega_cov = inf.Sigma.topLeftCorner(J, J);
    const auto delta_cov = inf.Sigma.bottomRightCorner(J, J);
    inf.curve.reserve(grid.size());
    for (double tau : grid) {
        const Eigen::VectorXd b = basis.evaluate(tau);
        const Eigen::VectorXd bc = b - centered.offsets;
        CurvePoint pt;
        pt.tau = tau;
        pt.delta = b.dot(fit.beta.tail(J));
        pt.omega = bc.dot(fit.beta.head(J));
        const double sd_d = std::sqrt(std::max(0.0, b.dot(delta_cov * b)));
        const double sd_o = std::sqrt(std::max(0.0, bc.dot(omega_cov * bc)));
        pt.delta_lo = pt.delta - band_z * sd_d;
        pt.delta_hi = pt.delta + band_z * sd_d;
        pt.omega_lo = pt.omega - band_z * sd_o;
        pt.omega_hi = pt.omega + band_z * sd_o;
        inf.curve.push_back(pt);
    }

    // Shift variance: sampling noise of the country mean plus the coefficient
    // uncertainty propagated through the country's average regressor row.
    inf.mu_se.resize(design.countries.size());
    for (size_t ci = 0; ci < design.countries.size(); ++ci) {
        const auto [begin, end] = design.country_rows[ci];
        const double t_i = end - begin;
        const Eigen::VectorXd xbar =
            design.X.middleRows(begin, end - begin).colwise().mean().transpose();
        const double var = inf.v2 / t_i + xbar.dot(inf.Sigma * xbar);
        inf.mu_se[ci] = std::sqrt(std::max(0.0, var));
    }
    return inf;
}

Eigen::MatrixXd robust_covariance(const GroupDesign& design, const PlsFit& fit,
                                  RobustFlavor flavor, int bandwidth) {
    if (bandwidth < 0) throw ConfigError("HAC bandwidth must be nonnegative");
    const Eigen::Index p = design.Xt.cols();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);

    const int L = flavor == RobustFlavor::White ? 0 : bandwidth;
    for (size_t ci = 0; ci < design.countries.size(); ++ci) {
        const auto [begin, end] = design.country_rows[ci];
        for (int t = begin; t < end; ++t) {
            const Eigen::VectorXd xt = design.Xt.row(t).transpose() * fit.residuals[t];
            meat += xt * design.Xt.row(t) * fit.residuals[t];
            for (int l = 1; l <= L && t + l < end; ++l) {
                const double w = 1.0 - static_cast<double>(l) / (L + 1);
                const Eigen::MatrixXd cross =
                    w * fit.residuals[t] * fit.residuals[t + l] * design.Xt.row(t).transpose() *
                    design.Xt.row(t + l);
                meat += cross + cross.transpose();
            }
        }
    }

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.M);
    const Eigen::MatrixXd bread_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    return bread_inv * meat * bread_inv;
}

std::vector<double> observation_weights(const GroupDesign& design, const std::vector<double>& grid,
                                        std::pair<int, int> window) {
    std::map<int, int> year_counts;
    for (const auto& o : design.obs) ++year_counts[o.year];

    std::vector<double> weights(grid.size(), 0.0);
    double total = 0.0;
    for (size_t k = 0; k < grid.size(); ++k) {
        const int year = window.first +
                         static_cast<int>(std::lround(grid[k] * (window.second - window.first)));
        const auto it = year_counts.find(year);
        weights[k] = it == year_counts.end() ? 0.0 : it->second;
        total += weights[k];
    }
    if (total <= 0.0) std::fill(weights.begin(), weights.end(), 1.0);
    return weights;
}

AverageEffect average_effect(const GroupDesign& design, const PlsFit& fit,
                             const GroupInference& inference, const SplineBasis& basis,
                             const std::vector<double>& grid, std::pair<int, int> window) {
    const int J = basis.num_basis();
    const std::vector<double> weights = observation_weights(design, grid, window);
    double total = 0.0;
    for (double w : weights) total += w;

    Eigen::VectorXd a = Eigen::VectorXd::Zero(J);
    for (size_t k = 0; k < grid.size(); ++k) {
        if (weights[k] > 0.0) a += (weights[k] / total) * basis.evaluate(grid[k]);
    }

    AverageEffect eff;
    eff.estimate = a.dot(fit.beta.tail(J));
    const auto delta_cov = inference.Sigma.bottomRightCorner(J, J);
    eff.se = std::sqrt(std::max(0.0, a.dot(delta_cov * a)));
    eff.t_stat = eff.se > 0.0 ? eff.estimate / eff.se : 0.0;
    return eff;
}

namespace {

GroupFit fit_group(const GroupDesign& gd, const DesignSet& set, const TvcConfig& cfg,
                   const std::vector<double>& grid) {
    const Eigen::MatrixXd A = penalty_matrix(set.basis, cfg.penalty_order);

    GroupFit gf;
    gf.group = gd.group;
    gf.gcv = gcv_select(gd, A, A, cfg.psi_grid(), cfg.refine_psi);
    gf.pls = fit_pls(gd, A, A, gf.gcv.psi1_hat, gf.gcv.psi2_hat);
    gf.inference = posterior_covariance(gd, gf.pls, set.basis, set.centered, grid, cfg.band_z);
    gf.avg = average_effect(gd, gf.pls, gf.inference, set.basis, grid, set.window);

    const int J = set.basis.num_basis();
    gf.obs_fit.reserve(gd.obs.size());
    for (size_t r = 0; r < gd.obs.size(); ++r) {
        const auto& o = gd.obs[r];
        size_t ci = 0;
        while (gd.country_rows[ci].second <= static_cast<int>(r)) ++ci;
        const Eigen::VectorXd b = set.basis.evaluate(o.tau);
        ObsFit of;
        of.country = o.country;
        of.year = o.year;
        of.tau = o.tau;
        of.cs = o.cs;
        of.s = o.s;
        of.delta = b.dot(gf.pls.beta.tail(J));
        of.omega = (b - set.centered.offsets).dot(gf.pls.beta.head(J));
        of.mu = gf.pls.mu[ci];
        of.resid = o.s - of.delta * o.cs - of.mu - of.omega;
        gf.obs_fit.push_back(of);
    }
    return gf;
}

TvcResult fit_design(DesignSet set, const TvcConfig& cfg) {
    TvcResult result{std::move(set), {}, {}, unit_grid(cfg.grid_points)};
    double total = 0.0;
    for (const auto& gd : result.design.groups) {
        result.groups.push_back(fit_group(gd, result.design, cfg, result.grid));
        total += gd.n_obs();
    }
    double est = 0.0, var = 0.0;
    for (size_t i = 0; i < result.groups.size(); ++i) {
        const double w = result.design.groups[i].n_obs() / total;
        est += w * result.groups[i].avg.estimate;
        var += w * w * result.groups[i].avg.se * result.groups[i].avg.se;
    }
    result.pooled.estimate = est;
    result.pooled.se = std::sqrt(var);
    result.pooled.t_stat = result.pooled.se > 0.0 ? est / result.pooled.se : 0.0;
    return result;
}

}  // namespace

TvcResult fit_tvc(const PanelDataset& ds, const GroupAssignment& assignment, Quantile q,
                  const TvcConfig& cfg) {
    return fit_design(assemble_design(ds, assignment, q, cfg), cfg);
}

FirstStageFit first_stage(const PanelDataset& ds, int min_ptr_obs) {
    PanelDataset iv = ds.instrument_subsample(min_ptr_obs);
    const int n = iv.n_rows();
    const int nc = iv.n_countries();

    std::vector<double> ptr(static_cast<size_t>(n)), cs(static_cast<size_t>(n));
    std::vector<int> year_of(static_cast<size_t>(n));
    std::map<int, std::vector<int>> rows_by_year;
    for (int r = 0; r < n; ++r) {
        ptr[static_cast<size_t>(r)] = *iv.rows()[static_cast<size_t>(r)].profit_tax_rate;
        cs[static_cast<size_t>(r)] = iv.rows()[static_cast<size_t>(r)].capital_share;
        year_of[static_cast<size_t>(r)] = iv.rows()[static_cast<size_t>(r)].year;
        rows_by_year[iv.rows()[static_cast<size_t>(r)].year].push_back(r);
    }

    // Iterated two-way demeaning of both variables.
    auto double_demean = [&](std::vector<double> v) {
        for (int pass = 0; pass < 10000; ++pass) {
            double change = 0.0;
            for (int c = 0; c < nc; ++c) {
                const auto [begin, end] = iv.country_range(c);
                double m = 0.0;
                for (int r = begin; r < end; ++r) m += v[static_cast<size_t>(r)];
                m /= (end - begin);
                for (int r = begin; r < end; ++r) v[static_cast<size_t>(r)] -= m;
                change = std::max(change, std::abs(m));
            }
            for (const auto& [year, rows] : rows_by_year) {
                double m = 0.0;
                for (int r : rows) m += v[static_cast<size_t>(r)];
                m /= static_cast<double>(rows.size());
                for (int r : rows) v[static_cast<size_t>(r)] -= m;
                change = std::max(change, std::abs(m));
            }
            if (change < 1e-12) break;
        }
        return v;
    };
    const std::vector<double> ptr_dd = double_demean(ptr);
    const std::vector<double> cs_dd = double_demean(cs);

    FirstStageFit fs{.iv_data = std::move(iv)};
    fs.countries = fs.iv_data.country_ids();
    std::vector<int> country_of(static_cast<size_t>(n));
    for (int c = 0; c < nc; ++c) {
        const auto [begin, end] = fs.iv_data.country_range(c);
        for (int r = begin; r < end; ++r) country_of[static_cast<size_t>(r)] = c;
    }
    fs.slope.resize(static_cast<size_t>(nc));
    fs.r2.resize(static_cast<size_t>(nc));
    for (int c = 0; c < nc; ++c) {
        const auto [begin, end] = fs.iv_data.country_range(c);
        double sxx = 0.0, sxy = 0.0;
        for (int r = begin; r < end; ++r) {
            sxx += ptr_dd[static_cast<size_t>(r)] * ptr_dd[static_cast<size_t>(r)];
            sxy += ptr_dd[static_cast<size_t>(r)] * cs_dd[static_cast<size_t>(r)];
        }
        if (sxx < 1e-12) {
            throw DataError("zero within-country variance of the instrument for country '" +
                            fs.countries[static_cast<size_t>(c)] + "'");
        }
        fs.slope[static_cast<size_t>(c)] = sxy / sxx;
    }

    // Joint projection on {instrument-by-country, country dummies, year
    // dummies}: the demeaned slopes above are only the warm-start intuition,
    // the exact solve makes residuals orthogonal to the instrument within
    // every country. One year dummy is dropped against the country dummies.
    std::vector<int> years;
    for (const auto& [year, rows] : rows_by_year) years.push_back(year);
    const int ny = static_cast<int>(years.size());
    std::map<int, int> year_col;
    for (int k = 1; k < ny; ++k) year_col[years[static_cast<size_t>(k)]] = 2 * nc + k - 1;

    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, 2 * nc + ny - 1);
    Eigen::VectorXd target(n);
    for (int r = 0; r < n; ++r) {
        const size_t rr = static_cast<size_t>(r);
        const int c = country_of[rr];
        Z(r, c) = ptr[rr];
        Z(r, nc + c) = 1.0;
        const auto it = year_col.find(year_of[rr]);
        if (it != year_col.end()) Z(r, it->second) = 1.0;
        target[r] = cs[rr];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    if (qr.rank() < Z.cols()) {
        throw DataError("first-stage projection is not identified (instrument collinear with "
                        "country and year effects)");
    }
    const Eigen::VectorXd coef = qr.solve(target);

    fs.country_effect.assign(static_cast<size_t>(nc), 0.0);
    std::map<int, double> b;
    for (int c = 0; c < nc; ++c) {
        fs.slope[static_cast<size_t>(c)] = coef[c];
        fs.country_effect[static_cast<size_t>(c)] = coef[nc + c];
    }
    b[years[0]] = 0.0;
    for (int k = 1; k < ny; ++k) b[years[static_cast<size_t>(k)]] = coef[2 * nc + k - 1];

    // Normalize year effects to observation-weighted mean zero.
    double bmean = 0.0;
    for (int r = 0; r < n; ++r) bmean += b[year_of[static_cast<size_t>(r)]];
    bmean /= n;
    for (auto& [year, value] : b) value -= bmean;
    for (double& a : fs.country_effect) a += bmean;
    fs.year_effect = b;

    fs.fitted_cs.resize(static_cast<size_t>(n));
    for (int c = 0; c < nc; ++c) {
        const auto [begin, end] = fs.iv_data.country_range(c);
        double cs_mean = 0.0;
        for (int r = begin; r < end; ++r) cs_mean += cs[static_cast<size_t>(r)];
        cs_mean /= (end - begin);
        double tss = 0.0, rss_c = 0.0;
        for (int r = begin; r < end; ++r) {
            const size_t rr = static_cast<size_t>(r);
            fs.fitted_cs[rr] = fs.slope[static_cast<size_t>(c)] * ptr[rr] +
                               fs.country_effect[static_cast<size_t>(c)] + b[year_of[rr]];
            tss += (cs[rr] - cs_mean) * (cs[rr] - cs_mean);
            rss_c += (cs[rr] - fs.fitted_cs[rr]) * (cs[rr] - fs.fitted_cs[rr]);
        }
        fs.r2[static_cast<size_t>(c)] = tss > 0.0 ? 1.0 - rss_c / tss : 0.0;
    }

    // Pooled strength statistic: explained instrument variation against the
    // residual variance, a heuristic first-stage F.
    double ess = 0.0, rss = 0.0;
    for (int c = 0; c < nc; ++c) {
        const auto [begin, end] = fs.iv_data.country_range(c);
        for (int r = begin; r < end; ++r) {
            const size_t rr = static_cast<size_t>(r);
            const double s = fs.slope[static_cast<size_t>(c)];
            ess += s * ptr_dd[rr] * s * ptr_dd[rr];
            const double e = cs[rr] - fs.fitted_cs[rr];
            rss += e * e;
        }
    }
    const double df2 = std::max(1.0, static_cast<double>(n - 2 * nc - static_cast<int>(b.size()) + 1));
    fs.strength_f = rss > 0.0 ? (ess / nc) / (rss / df2) : std::numeric_limits<double>::infinity();
    return fs;
}

TvcIvResult fit_tvc_iv(const PanelDataset& ds, const GroupAssignment& assignment, Quantile q,
                       const TvcConfig& cfg) {
    FirstStageFit fs = first_stage(ds);

    // Carry labels over to the instrument subsample by country id.
    std::map<std::string, int> label_of;
    for (int c = 0; c < ds.n_countries(); ++c) {
        label_of[ds.country_ids()[static_cast<size_t>(c)]] = assignment.labels[static_cast<size_t>(c)];
    }
    GroupAssignment iv_assignment;
    iv_assignment.G = assignment.G;
    for (const auto& id : fs.iv_data.country_ids()) {
        const auto it = label_of.find(id);
        if (it == label_of.end()) throw DataError("country '" + id + "' missing from assignment");
        iv_assignment.labels.push_back(it->second);
    }
    iv_assignment.centers.resize(static_cast<size_t>(assignment.G), Point2{0.0, 0.0});

    DesignSet set = assemble_design(fs.iv_data, iv_assignment, q, cfg, &fs.fitted_cs, ds.window());
    TvcResult tvc = fit_design(std::move(set), cfg);
    return TvcIvResult{std::move(fs), std::move(tvc)};
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curve file: " + path);
    out << "tau,delta,delta_lo,delta_hi,omega,omega_lo,omega_hi\n";
    char buf[256];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", p.tau,
                      p.delta, p.delta_lo, p.delta_hi, p.omega, p.omega_lo, p.omega_hi);
        out << buf;
    }
}

std::vector<CurvePoint> read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open curve file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty curve file: " + path);
    std::vector<CurvePoint> curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CurvePoint p;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &p.tau, &p.delta, &p.delta_lo,
                        &p.delta_hi, &p.omega, &p.omega_lo, &p.omega_hi) != 7) {
            throw DataError("malformed curve line: " + line);
        }
        curve.push_back(p);
    }
    return curve;
}

void write_shifts_csv(const std::string& path, const PanelDataset& ds, const TvcResult& result) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write shifts file: " + path);
    out << "country,mu_hat,se\n";
    char buf[256];
    for (size_t gi = 0; gi < result.groups.size(); ++gi) {
        const auto& gd = result.design.groups[gi];
        const auto& gf = result.groups[gi];
        for (size_t ci = 0; ci < gd.countries.size(); ++ci) {
            std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g\n",
                          ds.country_ids()[static_cast<size_t>(gd.countries[ci])].c_str(),
                          gf.pls.mu[ci], gf.inference.mu_se[ci]);
            out << buf;
        }
    }
}

}  // namespace gtvc
