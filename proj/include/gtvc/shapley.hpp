#pragma once

#include <array>
#include <string>
#include <vector>

#include "gtvc/panel.hpp"
#include "gtvc/tvc.hpp"

namespace gtvc {

enum class ShapleyMode { Exact, Thirds };

// Per-observation attribution of the model prediction over the three
// time-varying components: the transmission-coefficient deviation around its
// time average, the capital-share level effect, and the labor component.
struct Attribution {
    int country = 0;
    int group = 0;
    int year = 0;
    double baseline_mu = 0.0;
    double phi_dev = 0.0;
    double phi_level = 0.0;
    double phi_labor = 0.0;
};

std::vector<Attribution> decompose(const TvcResult& fit, ShapleyMode mode);

struct CountryProportions {
    int country = 0;
    int group = 0;
    double prop_delta = 0.0;
    double prop_cs = 0.0;
    double prop_omega = 0.0;
    bool defined = true;  // false when the contributions cancel to ~0
};

struct GroupProportionMeans {
    int group = 0;
    double prop_delta = 0.0, prop_cs = 0.0, prop_omega = 0.0;
    int n_countries = 0;
};

struct ShapleyReport {
    std::vector<Attribution> attributions;
    std::vector<CountryProportions> proportions;
    std::vector<GroupProportionMeans> group_means;
};

// Per-country contribution of a component = its attribution change from the
// first to the last observed year; proportions are signed shares of the total
// change. period_average instead uses the per-country time averages of the
// attributions (a sensitivity mode).
ShapleyReport summarize_proportions(const TvcResult& fit, ShapleyMode mode,
                                    bool period_average = false);

void write_shapley_csv(const std::string& path, const PanelDataset& ds, const ShapleyReport& report);
void write_attributions_csv(const std::string& path, const PanelDataset& ds,
                            const std::vector<Attribution>& attributions);

}  // namespace gtvc
