#include "gtvc/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "gtvc/errors.hpp"

namespace gtvc {

const char* quantile_name(Quantile q) {
    switch (q) {
        case Quantile::Top10: return "top10";
        case Quantile::Top5: return "top5";
        case Quantile::Top1: return "top1";
    }
    return "top5";
}

Quantile parse_quantile(const std::string& tag) {
    if (tag == "top10" || tag == "10") return Quantile::Top10;
    if (tag == "top5" || tag == "5") return Quantile::Top5;
    if (tag == "top1" || tag == "1") return Quantile::Top1;
    throw ConfigError("unknown quantile tag '" + tag + "' (expected top10|top5|top1)");
}

PanelDataset::PanelDataset(std::vector<PanelRow> rows, int min_obs) : min_obs_(min_obs) {
    if (rows.empty()) throw DataError("empty dataset after filtering");

    // Canonical order: countries by first appearance, years ascending within.
    std::vector<std::string> order;
    std::unordered_map<std::string, int> pos;
    for (const auto& r : rows) {
        if (pos.emplace(r.country, static_cast<int>(order.size())).second) order.push_back(r.country);
    }
    std::stable_sort(rows.begin(), rows.end(), [&](const PanelRow& a, const PanelRow& b) {
        const int pa = pos[a.country], pb = pos[b.country];
        if (pa != pb) return pa < pb;
        return a.year < b.year;
    });

    std::unordered_map<std::string, int> counts;
    for (const auto& r : rows) ++counts[r.country];

    for (const auto& id : order) {
        if (counts[id] < min_obs_) dropped_countries_.emplace_back(id, counts[id]);
    }
    std::set<std::string> dropped;
    for (const auto& [id, n] : dropped_countries_) dropped.insert(id);

    for (auto& r : rows) {
        if (!dropped.count(r.country)) rows_.push_back(std::move(r));
    }
    if (rows_.empty()) throw DataError("empty dataset after filtering");

    for (const auto& id : order) {
        if (!dropped.count(id)) country_ids_.push_back(id);
    }
    ranges_.resize(country_ids_.size());
    int k = 0;
    for (size_t c = 0; c < country_ids_.size(); ++c) {
        const int begin = k;
        while (k < static_cast<int>(rows_.size()) && rows_[static_cast<size_t>(k)].country == country_ids_[c]) ++k;
        ranges_[c] = {begin, k};
    }

    year_min_ = rows_.front().year;
    year_max_ = rows_.front().year;
    for (const auto& r : rows_) {
        year_min_ = std::min(year_min_, r.year);
        year_max_ = std::max(year_max_, r.year);
    }
}

std::pair<int, int> PanelDataset::country_range(int country_index) const {
    return ranges_.at(static_cast<size_t>(country_index));
}

int PanelDataset::country_index(const std::string& id) const {
    for (size_t i = 0; i < country_ids_.size(); ++i) {
        if (country_ids_[i] == id) return static_cast<int>(i);
    }
    return -1;
}

PanelDataset PanelDataset::instrument_subsample(int min_rows_per_country) const {
    std::map<std::string, int> ptr_counts;
    for (const auto& r : rows_) {
        if (r.profit_tax_rate.has_value()) ++ptr_counts[r.country];
    }
    std::vector<PanelRow> kept;
    for (const auto& r : rows_) {
        if (r.profit_tax_rate.has_value() && ptr_counts[r.country] >= min_rows_per_country) {
            kept.push_back(r);
        }
    }
    if (kept.empty()) throw DataError("no usable instrument observations in the panel");
    return PanelDataset(std::move(kept), /*min_obs=*/min_rows_per_country);
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [p, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && p == end;
}

bool parse_int(const std::string& s, int& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [p, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && p == end;
}

}  // namespace

LoadResult load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input file: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError("no parsable rows in " + path);
    const auto header = split_csv_line(header_line);

    auto find_col = [&](const std::string& name, bool required) -> int {
        for (size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        if (required) throw DataError("missing required column '" + name + "' in " + path);
        return -1;
    };
    const int c_country = find_col(schema.country, true);
    const int c_year = find_col(schema.year, true);
    const int c_top10 = find_col(schema.top10, true);
    const int c_top5 = find_col(schema.top5, true);
    const int c_top1 = find_col(schema.top1, true);
    const int c_cs = find_col(schema.capital_share, true);
    const int c_ptr = find_col(schema.profit_tax_rate, false);

    std::vector<PanelRow> rows;
    std::vector<RejectedRow> rejected;
    std::vector<RejectedRow> fatal;
    std::set<std::pair<std::string, int>> seen;

    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        auto field = [&](int col) -> std::string {
            return col >= 0 && col < static_cast<int>(fields.size()) ? fields[static_cast<size_t>(col)] : "";
        };

        PanelRow r;
        r.country = field(c_country);
        bool malformed = false;
        auto need_double = [&](int col, const std::string& name, double& out) {
            const std::string cell = field(col);
            if (cell.empty() || !parse_double(cell, out)) {
                fatal.push_back({lineno, "malformed numeric field '" + name + "' = '" + cell + "'"});
                malformed = true;
            }
        };
        if (r.country.empty()) {
            fatal.push_back({lineno, "empty country identifier"});
            malformed = true;
        }
        {
            const std::string cell = field(c_year);
            if (cell.empty() || !parse_int(cell, r.year)) {
                fatal.push_back({lineno, "malformed numeric field 'year' = '" + cell + "'"});
                malformed = true;
            }
        }
        need_double(c_top10, schema.top10, r.top10);
        need_double(c_top5, schema.top5, r.top5);
        need_double(c_top1, schema.top1, r.top1);
        need_double(c_cs, schema.capital_share, r.capital_share);
        if (c_ptr >= 0) {
            const std::string cell = field(c_ptr);
            if (!cell.empty()) {
                double v;
                if (!parse_double(cell, v)) {
                    fatal.push_back({lineno, "malformed numeric field '" + schema.profit_tax_rate +
                                                 "' = '" + cell + "'"});
                    malformed = true;
                } else {
                    r.profit_tax_rate = v;
                }
            }
        }
        if (malformed) continue;

        if (!seen.emplace(r.country, r.year).second) {
            fatal.push_back({lineno, "duplicate (country,year) pair (" + r.country + "," +
                                         std::to_string(r.year) + ")"});
            continue;
        }

        // Range invariants divert the row to the rejection report.
        std::string reason;
        if (!(r.top1 > 0.0 && r.top1 <= r.top5 && r.top5 <= r.top10 && r.top10 < 1.0)) {
            reason = "top share ordering violated (need 0 < top1 <= top5 <= top10 < 1)";
        } else if (!(r.capital_share > 0.0 && r.capital_share < 1.0)) {
            reason = "capital_share outside (0,1)";
        } else if (r.profit_tax_rate && (*r.profit_tax_rate < 0.0 || *r.profit_tax_rate > 1.0)) {
            reason = "profit_tax_rate outside [0,1]";
        }
        if (!reason.empty()) {
            rejected.push_back({lineno, reason});
            continue;
        }
        rows.push_back(std::move(r));
    }

    if (!fatal.empty()) {
        std::ostringstream os;
        os << "structural errors in " << path << ":";
        for (const auto& f : fatal) os << "\n  row " << f.row << ": " << f.reason;
        throw PanelLoadError(os.str(), fatal);
    }
    if (rows.empty() && rejected.empty()) throw DataError("no parsable rows in " + path);
    if (rows.empty()) throw DataError("empty dataset after filtering: " + path);

    // Row numbers of each country, so dropped countries can be reported per row.
    std::map<std::string, std::vector<int>> country_lines;
    {
        std::ifstream in2(path);
        std::string l2;
        int ln = 0;
        std::set<std::pair<std::string, int>> kept;
        for (const auto& r : rows) kept.emplace(r.country, r.year);
        std::getline(in2, l2);
        ln = 1;
        while (std::getline(in2, l2)) {
            ++ln;
            if (trim(l2).empty()) continue;
            const auto fields = split_csv_line(l2);
            if (c_country < static_cast<int>(fields.size())) {
                int y;
                if (c_year < static_cast<int>(fields.size()) && parse_int(fields[static_cast<size_t>(c_year)], y) &&
                    kept.count({fields[static_cast<size_t>(c_country)], y})) {
                    country_lines[fields[static_cast<size_t>(c_country)]].push_back(ln);
                }
            }
        }
    }

    PanelDataset ds(std::move(rows), schema.min_obs);
    for (const auto& [id, n] : ds.dropped_countries()) {
        for (int ln : country_lines[id]) {
            rejected.push_back({ln, "country '" + id + "' has only " + std::to_string(n) +
                                        " rows (min_obs=" + std::to_string(schema.min_obs) + ")"});
        }
    }
    std::sort(rejected.begin(), rejected.end(),
              [](const RejectedRow& a, const RejectedRow& b) { return a.row < b.row; });
    return {std::move(ds), std::move(rejected)};
}

void write_rejection_report(const std::string& path, const std::vector<RejectedRow>& rejected) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write rejection report: " + path);
    out << "row,reason\n";
    for (const auto& r : rejected) {
        std::string reason = r.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        out << r.row << "," << reason << "\n";
    }
}

std::vector<std::pair<double, double>> time_averages(const PanelDataset& ds, Quantile q) {
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<size_t>(ds.n_countries()));
    for (int c = 0; c < ds.n_countries(); ++c) {
        const auto [begin, end] = ds.country_range(c);
        double s = 0.0, cs = 0.0;
        for (int k = begin; k < end; ++k) {
            s += ds.rows()[static_cast<size_t>(k)].share(q);
            cs += ds.rows()[static_cast<size_t>(k)].capital_share;
        }
        const double n = end - begin;
        out.emplace_back(s / n, cs / n);
    }
    return out;
}

double normalize_time(int year, std::pair<int, int> window) {
    const auto [lo, hi] = window;
    if (lo >= hi) throw ConfigError("degenerate time window [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
    if (year < lo || year > hi) {
        throw DataError("year " + std::to_string(year) + " outside window [" + std::to_string(lo) +
                        "," + std::to_string(hi) + "]");
    }
    return static_cast<double>(year - lo) / static_cast<double>(hi - lo);
}

DemeanResult within_demean(const std::vector<std::vector<double>>& series) {
    DemeanResult out;
    out.demeaned.reserve(series.size());
    out.means.reserve(series.size());
    for (const auto& s : series) {
        if (s.empty()) throw DataError("cannot demean an empty series");
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(s.size());
        std::vector<double> d(s.size());
        for (size_t i = 0; i < s.size(); ++i) d[i] = s[i] - mean;
        out.demeaned.push_back(std::move(d));
        out.means.push_back(mean);
    }
    return out;
}

}  // namespace gtvc
