#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gtvc/kmeans.hpp"
#include "gtvc/panel.hpp"
#include "gtvc/tvc.hpp"

namespace gtvc {

// Closed-form curves for the data-generating process. The Centered* kinds
// integrate to zero on [0,1] exactly, as the labor component requires.
struct Curve {
    enum class Kind { Constant, Linear, Sine, CenteredSine, CenteredCos, CenteredLinear };
    Kind kind = Kind::Constant;
    double a = 0.0;
    double b = 0.0;

    double operator()(double tau) const;
    bool centered() const;
    std::string token() const;
    static Curve parse(const std::string& token);
};

struct DgpSpec {
    int n_countries = 60;
    int n_years = 40;
    int n_groups = 3;
    std::vector<double> proportions;  // empty = equal
    std::vector<Curve> delta;         // per group
    std::vector<Curve> omega;         // per group, centered kinds only
    double mu_mean = 0.15;  // keeps generated shares inside (0,1)
    double mu_sd = 0.01;
    std::vector<double> cs_level;     // per group mean capital share
    double cs_rho = 0.8;              // logit-scale AR(1) persistence
    double cs_sigma = 0.3;            // logit-scale innovation sd
    double ex_sd = 0.0;               // measurement error on the capital share
    double ey_sd = 0.0;               // measurement error on the top share
    double eps_sd = 0.005;            // idiosyncratic noise
    bool with_instrument = false;
    double iv_slope_mean = -1.0;
    double iv_slope_sd = 0.1;
    double iv_noise_sd = 0.01;
    double iv_intercept_sd = 0.02;
    int ptr_start_year = -1;  // -1: instrument observed in every year
    int base_year = 1980;
    std::uint64_t seed = 1;

    void validate() const;
    static DgpSpec from_config(const std::map<std::string, std::string>& kv);
};

struct GroundTruth {
    std::vector<int> labels;       // per country, 1-based
    std::vector<double> mu;        // per country
    std::vector<double> true_cs;   // per row, canonical order
    int clamped = 0;               // draws pulled back into range
};

struct SimulatedPanel {
    PanelDataset data;
    GroundTruth truth;
};

// Deterministic given the spec (seed included). Errors out if more than 0.1%
// of the generated values fall outside their admissible ranges.
SimulatedPanel generate(const DgpSpec& spec);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct McOptions {
    int fixed_G = 0;            // 0: select G by the information criterion
    bool use_true_labels = false;
    bool cluster_only = false;  // stop after the classification step
    bool fit_iv = false;
    int n_init = 100;
    double zeta = 3.0;
    int G_max = 5;
    Quantile quantile = Quantile::Top5;
    Quantile classify_quantile = Quantile::Top10;
    TvcConfig tvc;
    int coverage_points = 21;
};

struct McRep {
    bool ok = false;
    std::string error;
    int selected_G = 0;
    double label_accuracy = 0.0;
    double bias = 0.0;     // average-effect bias, averaged over groups
    double bias_iv = 0.0;  // only when fit_iv is set
    double avg_effect = 0.0;
    double avg_effect_iv = 0.0;
    double ise = 0.0;       // grid MSE of the transmission curve, averaged over groups
    double coverage = 0.0;  // pointwise band coverage over the coverage grid
};

struct McSummary {
    std::vector<McRep> reps;
    double rmise = 0.0;         // sqrt of the mean ISE over successful reps
    double rmise_median = 0.0;  // median of the per-rep root ISE
    double mean_bias = 0.0;
    double coverage = 0.0;
    double mean_label_accuracy = 0.0;
    std::map<int, int> selection_freq;
    double failure_rate = 0.0;
};

// Runs the full generate -> classify -> estimate pipeline R times with seeds
// derived from the spec's master seed, and aggregates bias, RMISE, coverage
// and selection frequencies against the known truth.
McSummary replicate_study(const DgpSpec& spec, const McOptions& options, int R);

void write_panel_csv(const std::string& path, const PanelDataset& ds);
void write_truth_csv(const std::string& path, const DgpSpec& spec, const GroundTruth& truth,
                     int grid_points);
void write_mc_csv(const std::string& path, const McSummary& summary);

}  // namespace gtvc
