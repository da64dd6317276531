#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gtvc/errors.hpp"

namespace gtvc {

enum class Quantile { Top10, Top5, Top1 };

const char* quantile_name(Quantile q);
Quantile parse_quantile(const std::string& tag);

struct PanelRow {
    std::string country;
    int year = 0;
    double top10 = 0.0;
    double top5 = 0.0;
    double top1 = 0.0;
    double capital_share = 0.0;
    std::optional<double> profit_tax_rate;

    double share(Quantile q) const {
        switch (q) {
            case Quantile::Top10: return top10;
            case Quantile::Top5: return top5;
            case Quantile::Top1: return top1;
        }
        return top5;
    }
};

struct RejectedRow {
    int row = 0;  // 1-based line number in the source file
    std::string reason;
};

// Structural load failure carrying per-row diagnostics, so callers can still
// write the rejection report before aborting.
class PanelLoadError : public DataError {
  public:
    PanelLoadError(const std::string& message, std::vector<RejectedRow> diagnostics)
        : DataError(message), diagnostics_(std::move(diagnostics)) {}
    const std::vector<RejectedRow>& diagnostics() const { return diagnostics_; }

  private:
    std::vector<RejectedRow> diagnostics_;
};

// Unbalanced country-year panel. Immutable after construction; rows are kept
// in canonical order (country first-appearance, then year ascending) so all
// derived quantities are independent of the input row order.
class PanelDataset {
  public:
    PanelDataset(std::vector<PanelRow> rows, int min_obs = 10);

    const std::vector<std::string>& country_ids() const { return country_ids_; }
    const std::vector<PanelRow>& rows() const { return rows_; }
    int year_min() const { return year_min_; }
    int year_max() const { return year_max_; }
    std::pair<int, int> window() const { return {year_min_, year_max_}; }

    int n_countries() const { return static_cast<int>(country_ids_.size()); }
    int n_rows() const { return static_cast<int>(rows_.size()); }

    // Contiguous [begin, end) row range of a country, in canonical order.
    std::pair<int, int> country_range(int country_index) const;
    int country_index(const std::string& id) const;  // -1 when absent

    // Countries dropped for having fewer than min_obs rows, with their counts.
    const std::vector<std::pair<std::string, int>>& dropped_countries() const {
        return dropped_countries_;
    }

    // Restriction to rows with an observed profit tax rate; countries with
    // fewer than min_rows_per_country such rows are excluded entirely.
    PanelDataset instrument_subsample(int min_rows_per_country) const;

  private:
    std::vector<std::string> country_ids_;
    std::vector<PanelRow> rows_;
    std::vector<std::pair<int, int>> ranges_;
    std::vector<std::pair<std::string, int>> dropped_countries_;
    int year_min_ = 0, year_max_ = 0;
    int min_obs_ = 10;
};

struct CsvSchema {
    std::string country = "country";
    std::string year = "year";
    std::string top10 = "top10";
    std::string top5 = "top5";
    std::string top1 = "top1";
    std::string capital_share = "capital_share";
    std::string profit_tax_rate = "profit_tax_rate";
    int min_obs = 10;
};

struct LoadResult {
    PanelDataset dataset;
    std::vector<RejectedRow> rejected;
};

// Loads and validates a CSV panel. Structural problems (missing file,
// malformed numeric cells, duplicate (country,year) pairs, nothing parsable)
// throw; rows failing the range invariants and rows of under-observed
// countries are diverted to the rejection report instead.
LoadResult load_csv(const std::string& path, const CsvSchema& schema = CsvSchema());

void write_rejection_report(const std::string& path, const std::vector<RejectedRow>& rejected);

// Per-country means of (top share, capital share), aligned with country_ids.
std::vector<std::pair<double, double>> time_averages(const PanelDataset& ds, Quantile q);

// Affine map of a calendar year onto [0,1] over the sample window.
double normalize_time(int year, std::pair<int, int> window);

struct DemeanResult {
    std::vector<std::vector<double>> demeaned;
    std::vector<double> means;
};

// Removes each series' own mean; the means allow exact reconstruction.
DemeanResult within_demean(const std::vector<std::vector<double>>& series);

}  // namespace gtvc
