#pragma once

#include <string>
#include <vector>

#include "gtvc/panel.hpp"

namespace gtvc {

struct MgResult {
    std::vector<std::string> countries;  // included in the mean group
    std::vector<double> slopes;          // per included country
    double estimate = 0.0;
    double variance = 0.0;  // nonparametric mean-group variance
    double t_stat = 0.0;
    double rss = 0.0;
    int n_obs = 0;
    int n_params = 0;
    double bic = 0.0;
    std::vector<std::string> dropped;   // with the reason appended
    std::vector<std::string> warnings;  // e.g. augmentation fallbacks
};

// Mean-Group OLS: per-country slope of the top share on the capital share,
// averaged across countries.
MgResult mg_ols(const PanelDataset& ds, Quantile q, int min_obs_per_country = 3);

// CCE Mean-Group: per-country regressions augmented with cross-sectional
// averages of the response and the regressor; collinear augmentations fall
// back to the plain per-country regression with a warning.
MgResult cce_mg(const PanelDataset& ds, Quantile q, int min_obs_per_country = 4);

// dx/dy from an elasticity and the levels ratio x/y.
double elasticity_to_marginal(double elasticity, double x_over_y);

// log(RSS/n) + k log(n)/n. Rankings within one dataset are the contract; the
// level is not comparable across datasets.
double model_bic(double rss, double k, double n);

}  // namespace gtvc
