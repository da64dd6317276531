#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "gtvc/panel.hpp"

namespace gtvc {

using Point2 = std::array<double, 2>;

enum class SdConvention { Sample, Population };

struct FeatureScaling {
    Point2 mean{0.0, 0.0};
    Point2 sd{1.0, 1.0};
    SdConvention convention = SdConvention::Sample;
};

struct Standardized {
    std::vector<Point2> points;
    FeatureScaling scaling;
};

// Scales each feature to mean 0, sd 1 across countries.
Standardized standardize_features(const std::vector<std::pair<double, double>>& moments,
                                  SdConvention convention = SdConvention::Sample);

struct GroupAssignment {
    int G = 0;
    std::vector<int> labels;     // per country, 1-based in {1..G}
    std::vector<Point2> centers;  // standardized feature space
    double objective = 0.0;       // mean squared distance to the assigned center
    FeatureScaling feature_scaling;
    std::vector<double> objective_history;  // per-iteration objective of the winning run

    // Groups too small for downstream estimation (flagged, not removed).
    std::vector<int> outlier_groups;
};

// Lloyd iterations from n_init random starts (G distinct points sampled as
// initial centers per run); returns the lowest-objective run, ties broken by
// restart index. Deterministic given the seed. Group labels are canonical:
// sorted by first-member index.
GroupAssignment lloyd_kmeans(const std::vector<Point2>& points, int G, int n_init, std::uint64_t seed);

struct BicRow {
    int G = 0;
    double fit = 0.0;      // kmeans objective at G
    double penalty = 0.0;  // sigma2 * 2G * zeta * log(N) / N
    double bic = 0.0;
};

struct BicTable {
    std::vector<BicRow> rows;
    int selected_G = 0;
    double sigma2_hat = 0.0;
    double zeta = 3.0;
    int G_max = 5;
};

struct BicSelection {
    BicTable table;
    GroupAssignment assignment;  // at selected_G
};

// Evaluates the information criterion over G in {2..G_max}; ties break toward
// smaller G. sigma2 comes from the G_max solution.
BicSelection bic_select(const std::vector<Point2>& points, int G_max, double zeta, int n_init,
                        std::uint64_t seed);

// Marks groups with fewer than min_size members as outliers.
void flag_small_groups(GroupAssignment& assignment, int min_size);

void write_assignment_csv(const std::string& path, const PanelDataset& ds,
                          const GroupAssignment& assignment);
GroupAssignment read_assignment_csv(const std::string& path, const PanelDataset& ds);
void write_bic_csv(const std::string& path, const BicTable& table);

}  // namespace gtvc
