#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gtvc/kmeans.hpp"
#include "gtvc/panel.hpp"
#include "gtvc/spline.hpp"

namespace gtvc {

struct TvcConfig {
    int num_basis = 8;
    int degree = 3;
    int penalty_order = 2;
    int grid_points = 101;  // curve grid; also the centering grid, so the
                            // labor component has exact zero grid mean
    double psi_min = 1e-4;
    double psi_max = 1e6;
    int psi_grid_points = 13;
    bool refine_psi = true;
    int min_group_size = 4;
    double band_z = 1.96;  // 95% pointwise bands

    std::vector<double> psi_grid() const;
};

struct ObsInfo {
    int country = 0;  // index into the dataset's country_ids
    int year = 0;
    double tau = 0.0;
    double cs = 0.0;  // regressor actually used (fitted values under IV)
    double s = 0.0;
};

// Stacked per-group regression tables. Raw rows are [centered B(tau) | cs*B(tau)];
// the demeaned copies subtract per-country means of every column and of the
// response. Row order is country-major, year ascending.
struct GroupDesign {
    int group = 0;                // 1-based label
    std::vector<int> countries;   // dataset country indices, in dataset order
    std::vector<ObsInfo> obs;
    std::vector<std::pair<int, int>> country_rows;  // [begin,end) per country
    Eigen::MatrixXd X, Xt;
    Eigen::VectorXd y, yt;

    int n_obs() const { return static_cast<int>(obs.size()); }
    int n_countries() const { return static_cast<int>(countries.size()); }
    int n_eff() const { return n_obs() - n_countries(); }  // within-demeaned size
};

struct DesignSet {
    SplineBasis basis;
    CenteredBasis centered;
    std::vector<GroupDesign> groups;
    std::vector<int> skipped_groups;  // below the minimum size
    std::pair<int, int> window{0, 0};
};

// Optional per-row regressor override (aligned with ds.rows()), used to swap
// the observed capital share for its first-stage projection.
DesignSet assemble_design(const PanelDataset& ds, const GroupAssignment& assignment, Quantile q,
                          const TvcConfig& cfg,
                          const std::vector<double>* cs_override = nullptr,
                          std::optional<std::pair<int, int>> window_override = std::nullopt);

struct PlsFit {
    Eigen::VectorXd beta;  // 2J; first J = labor block, last J = transmission block
    double psi1 = 0.0, psi2 = 0.0;
    Eigen::MatrixXd M;    // penalized normal matrix (includes the constant-direction pin)
    Eigen::MatrixXd XtX;  // gram of the demeaned design
    double rss = 0.0;
    double edf = 0.0;  // trace of the influence operator
    std::vector<double> mu;  // per group country, same order as design.countries
    Eigen::VectorXd residuals;
};

// Solves (Xt'Xt + psi1*A1 + psi2*A2) beta = Xt'yt with A1 on the labor block
// and A2 on the transmission block. The centered labor basis sums to zero
// pointwise, so its constant coefficient direction is unidentified; a rank-one
// pin u u' (u = ones on the labor block) makes the system nonsingular without
// changing any fitted curve or value.
PlsFit fit_pls(const GroupDesign& design, const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2,
               double psi1, double psi2);

struct GcvCandidate {
    double psi1 = 0.0, psi2 = 0.0;
    double score = 0.0;
    double edf = 0.0, rss = 0.0;
    bool valid = false;
};

struct GcvResult {
    double psi1_hat = 0.0, psi2_hat = 0.0;
    GcvCandidate grid_argmin;  // best candidate of the base grid, pre-refinement
    std::vector<GcvCandidate> trace;
};

// Grid search of n_eff*RSS/(n_eff - edf)^2 over the psi grid; exact ties break
// toward the lexicographically larger (psi1, psi2) pair. One local refinement
// pass around the grid argmin when cfg.refine_psi is set.
GcvResult gcv_select(const GroupDesign& design, const Eigen::MatrixXd& A1,
                     const Eigen::MatrixXd& A2, const std::vector<double>& grid,
                     bool refine);

struct CurvePoint {
    double tau = 0.0;
    double delta = 0.0, delta_lo = 0.0, delta_hi = 0.0;
    double omega = 0.0, omega_lo = 0.0, omega_hi = 0.0;
};

struct GroupInference {
    Eigen::MatrixXd Sigma;  // posterior covariance of beta
    double v2 = 0.0;        // error variance estimate
    std::vector<double> mu_se;
    std::vector<CurvePoint> curve;
};

GroupInference posterior_covariance(const GroupDesign& design, const PlsFit& fit,
                                    const SplineBasis& basis, const CenteredBasis& centered,
                                    const std::vector<double>& grid, double band_z);

enum class RobustFlavor { White, Hac };

// Sandwich covariance bread^{-1} meat bread^{-1} with bread the penalized
// normal matrix; HAC uses Bartlett-weighted autocovariances within country
// (bandwidth 0 reduces to White).
Eigen::MatrixXd robust_covariance(const GroupDesign& design, const PlsFit& fit,
                                  RobustFlavor flavor, int bandwidth = 0);

struct AverageEffect {
    double estimate = 0.0;
    double se = 0.0;
    double t_stat = 0.0;
};

// Grid weights for time averaging: each grid point carries the group's
// observation count at its nearest calendar year (uniform fallback when the
// group has no observation at any mapped year).
std::vector<double> observation_weights(const GroupDesign& design, const std::vector<double>& grid,
                                        std::pair<int, int> window);

// Observation-weighted time average of the transmission coefficient: grid
// points are weighted by the group's observation count at the nearest year.
AverageEffect average_effect(const GroupDesign& design, const PlsFit& fit,
                             const GroupInference& inference, const SplineBasis& basis,
                             const std::vector<double>& grid, std::pair<int, int> window);

// Per-observation fitted components (reconstruction: s = delta*cs + mu + omega + resid).
struct ObsFit {
    int country = 0;
    int year = 0;
    double tau = 0.0, cs = 0.0, s = 0.0;
    double delta = 0.0, omega = 0.0, mu = 0.0, resid = 0.0;
    double kappa() const { return delta + mu + omega; }  // capital income inequality
};

struct GroupFit {
    int group = 0;
    PlsFit pls;
    GcvResult gcv;
    GroupInference inference;
    AverageEffect avg;
    std::vector<ObsFit> obs_fit;
};

struct TvcResult {
    DesignSet design;
    std::vector<GroupFit> groups;
    AverageEffect pooled;  // observation-count weighted across groups
    std::vector<double> grid;
};

TvcResult fit_tvc(const PanelDataset& ds, const GroupAssignment& assignment, Quantile q,
                  const TvcConfig& cfg);

struct FirstStageFit {
    std::vector<std::string> countries;  // included in the instrument sample
    std::vector<double> slope;           // heterogeneous instrument slopes
    std::vector<double> country_effect;
    std::map<int, double> year_effect;
    std::vector<double> fitted_cs;  // aligned with iv_data.rows()
    std::vector<double> r2;         // per country, on doubly demeaned data
    double strength_f = 0.0;
    PanelDataset iv_data;
};

// Heterogeneous-slope two-way projection of the capital share on the profit
// tax rate. Starts from the doubly demeaned per-country slopes, then
// alternates slope and effect updates until the joint least-squares fixed
// point, so residuals are orthogonal to the instrument within every country.
FirstStageFit first_stage(const PanelDataset& ds, int min_ptr_obs = 3);

struct TvcIvResult {
    FirstStageFit first_stage;
    TvcResult tvc;
};

TvcIvResult fit_tvc_iv(const PanelDataset& ds, const GroupAssignment& assignment, Quantile q,
                       const TvcConfig& cfg);

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> read_curve_csv(const std::string& path);
void write_shifts_csv(const std::string& path, const PanelDataset& ds, const TvcResult& result);

}  // namespace gtvc
