#include "gtvc/baselines.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>

#include "gtvc/errors.hpp"

namespace gtvc {

namespace {

void finalize_mean_group(MgResult& out) {
    const int N = static_cast<int>(out.slopes.size());
    if (N == 0) throw DataError("no country usable for the mean-group estimate");
    double mean = 0.0;
    for (double s : out.slopes) mean += s;
    mean /= N;
    out.estimate = mean;
    if (N < 2) throw DataError("need N >= 2 for the mean-group variance");
    double ss = 0.0;
    for (double s : out.slopes) ss += (s - mean) * (s - mean);
    out.variance = ss / (static_cast<double>(N) * (N - 1));
    out.t_stat = out.variance > 0.0 ? mean / std::sqrt(out.variance) : 0.0;
    out.bic = model_bic(out.rss, out.n_params, out.n_obs);
}

}  // namespace

MgResult mg_ols(const PanelDataset& ds, Quantile q, int min_obs_per_country) {
    MgResult out;
    for (int c = 0; c < ds.n_countries(); ++c) {
        const auto [begin, end] = ds.country_range(c);
        const int t = end - begin;
        const std::string& id = ds.country_ids()[static_cast<size_t>(c)];
        if (t < min_obs_per_country) {
            out.dropped.push_back(id + ": fewer than " + std::to_string(min_obs_per_country) + " observations");
            continue;
        }
        double sx = 0.0, sy = 0.0;
        for (int r = begin; r < end; ++r) {
            sx += ds.rows()[static_cast<size_t>(r)].capital_share;
            sy += ds.rows()[static_cast<size_t>(r)].share(q);
        }
        const double mx = sx / t, my = sy / t;
        double sxx = 0.0, sxy = 0.0;
        for (int r = begin; r < end; ++r) {
            const double dx = ds.rows()[static_cast<size_t>(r)].capital_share - mx;
            const double dy = ds.rows()[static_cast<size_t>(r)].share(q) - my;
            sxx += dx * dx;
            sxy += dx * dy;
        }
        if (sxx < 1e-14 * t) {
            out.dropped.push_back(id + ": zero within-country capital share variance");
            continue;
        }
        const double slope = sxy / sxx;
        out.countries.push_back(id);
        out.slopes.push_back(slope);
        const double intercept = my - slope * mx;
        for (int r = begin; r < end; ++r) {
            const double e = ds.rows()[static_cast<size_t>(r)].share(q) - intercept -
                             slope * ds.rows()[static_cast<size_t>(r)].capital_share;
            out.rss += e * e;
        }
        out.n_obs += t;
        out.n_params += 2;
    }
    finalize_mean_group(out);
    return out;
}

MgResult cce_mg(const PanelDataset& ds, Quantile q, int min_obs_per_country) {
    // Cross-sectional averages over countries observed in each year.
    std::map<int, std::pair<double, double>> sums;
    std::map<int, int> counts;
    for (const auto& row : ds.rows()) {
        sums[row.year].first += row.share(q);
        sums[row.year].second += row.capital_share;
        ++counts[row.year];
    }
    std::map<int, std::pair<double, double>> bars;
    for (const auto& [year, sum] : sums) {
        bars[year] = {sum.first / counts[year], sum.second / counts[year]};
    }

    MgResult out;
    for (int c = 0; c < ds.n_countries(); ++c) {
        const auto [begin, end] = ds.country_range(c);
        const int t = end - begin;
        const std::string& id = ds.country_ids()[static_cast<size_t>(c)];
        if (t < min_obs_per_country) {
            out.dropped.push_back(id + ": fewer than " + std::to_string(min_obs_per_country) + " observations");
            continue;
        }

        Eigen::MatrixXd X(t, 4);
        Eigen::VectorXd y(t);
        for (int r = begin; r < end; ++r) {
            const auto& row = ds.rows()[static_cast<size_t>(r)];
            const auto& bar = bars.at(row.year);
            const int i = r - begin;
            X(i, 0) = 1.0;
            X(i, 1) = row.capital_share;
            X(i, 2) = bar.first;
            X(i, 3) = bar.second;
            y(i) = row.share(q);
        }

        // Constant averages make the augmentation collinear with the intercept.
        const bool aug_constant =
            (X.col(2).maxCoeff() - X.col(2).minCoeff()) < 1e-12 &&
            (X.col(3).maxCoeff() - X.col(3).minCoeff()) < 1e-12;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        const bool deficient = qr.rank() < 4;

        Eigen::MatrixXd Xu = X;
        int k = 4;
        if (aug_constant || deficient) {
            Xu = X.leftCols(2);
            k = 2;
            out.warnings.push_back(id + ": collinear augmentation dropped, using plain OLS");
            if ((Xu.col(1).maxCoeff() - Xu.col(1).minCoeff()) < 1e-12) {
                out.dropped.push_back(id + ": zero within-country capital share variance");
                out.warnings.pop_back();
                continue;
            }
            qr.compute(Xu);
            if (qr.rank() < 2) {
                out.dropped.push_back(id + ": rank-deficient regression");
                continue;
            }
        }
        const Eigen::VectorXd coef = qr.solve(y);
        out.countries.push_back(id);
        out.slopes.push_back(coef(1));
        out.rss += (y - Xu * coef).squaredNorm();
        out.n_obs += t;
        out.n_params += k;
    }
    finalize_mean_group(out);
    return out;
}

double elasticity_to_marginal(double elasticity, double x_over_y) {
    if (!(x_over_y > 0.0)) throw DataError("levels ratio must be positive");
    return elasticity * x_over_y;
}

double model_bic(double rss, double k, double n) {
    if (!(n > 0.0)) throw ConfigError("sample size must be positive");
    if (!(rss > 0.0)) throw NumericError("zero residual sum of squares: BIC undefined");
    return std::log(rss / n) + k * std::log(n) / n;
}

}  // namespace gtvc
