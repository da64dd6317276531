#include "gtvc/shapley.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "gtvc/errors.hpp"

namespace gtvc {

namespace {

// Shapley attribution of three additive components by explicit subset
// enumeration. The value function is the prediction from the baseline plus the
// included components, so the loops are exercised exactly as the oracle tests
// expect rather than shortcut through additivity.
std::array<double, 3> shapley_three(double baseline, const std::array<double, 3>& values,
                                    ShapleyMode mode) {
    static const double factorial[4] = {1.0, 1.0, 2.0, 6.0};
    std::array<double, 3> phi{0.0, 0.0, 0.0};
    for (int v = 0; v < 3; ++v) {
        for (int mask = 0; mask < 8; ++mask) {
            if (mask & (1 << v)) continue;  // subsets of the other components
            int size = 0;
            double with_v = baseline + values[static_cast<size_t>(v)];
            double without_v = baseline;
            for (int m = 0; m < 3; ++m) {
                if (mask & (1 << m)) {
                    ++size;
                    with_v += values[static_cast<size_t>(m)];
                    without_v += values[static_cast<size_t>(m)];
                }
            }
            const double weight = mode == ShapleyMode::Exact
                                      ? factorial[size] * factorial[3 - size - 1] / factorial[3]
                                      : 1.0 / 3.0;
            phi[static_cast<size_t>(v)] += weight * (with_v - without_v);
        }
    }
    return phi;
}

}  // namespace

std::vector<Attribution> decompose(const TvcResult& fit, ShapleyMode mode) {
    std::vector<Attribution> out;
    for (const auto& gf : fit.groups) {
        const double delta_bar = gf.avg.estimate;
        for (const auto& of : gf.obs_fit) {
            Attribution a;
            a.country = of.country;
            a.group = gf.group;
            a.year = of.year;
            a.baseline_mu = of.mu;
            const std::array<double, 3> values = {(of.delta - delta_bar) * of.cs,
                                                  delta_bar * of.cs, of.omega};
            const auto phi = shapley_three(of.mu, values, mode);
            a.phi_dev = phi[0];
            a.phi_level = phi[1];
            a.phi_labor = phi[2];
            out.push_back(a);
        }
    }
    return out;
}

ShapleyReport summarize_proportions(const TvcResult& fit, ShapleyMode mode, bool period_average) {
    ShapleyReport report;
    report.attributions = decompose(fit, mode);

    // Group attributions per country, kept in observation order.
    std::map<int, std::vector<const Attribution*>> by_country;
    std::map<int, int> group_of;
    for (const auto& a : report.attributions) {
        by_country[a.country].push_back(&a);
        group_of[a.country] = a.group;
    }

    std::map<int, std::array<double, 4>> group_sums;  // three props + count
    for (const auto& [country, rows] : by_country) {
        if (rows.size() < 2) {
            throw DataError("Shapley summary needs at least 2 fitted years per country");
        }
        std::array<double, 3> contrib{};
        if (period_average) {
            for (const auto* a : rows) {
                contrib[0] += a->phi_dev;
                contrib[1] += a->phi_level;
                contrib[2] += a->phi_labor;
            }
            for (auto& c : contrib) c /= static_cast<double>(rows.size());
        } else {
            const Attribution* first = rows.front();
            const Attribution* last = rows.back();
            contrib = {last->phi_dev - first->phi_dev, last->phi_level - first->phi_level,
                       last->phi_labor - first->phi_labor};
        }
        const double total = contrib[0] + contrib[1] + contrib[2];
        CountryProportions p;
        p.country = country;
        p.group = group_of[country];
        if (std::abs(total) < 1e-12) {
            p.defined = false;
        } else {
            p.prop_delta = contrib[0] / total;
            p.prop_cs = contrib[1] / total;
            p.prop_omega = contrib[2] / total;
            auto& gs = group_sums[p.group];
            gs[0] += p.prop_delta;
            gs[1] += p.prop_cs;
            gs[2] += p.prop_omega;
            gs[3] += 1.0;
        }
        report.proportions.push_back(p);
    }

    for (const auto& [group, gs] : group_sums) {
        GroupProportionMeans gm;
        gm.group = group;
        gm.n_countries = static_cast<int>(gs[3]);
        gm.prop_delta = gs[0] / gs[3];
        gm.prop_cs = gs[1] / gs[3];
        gm.prop_omega = gs[2] / gs[3];
        report.group_means.push_back(gm);
    }
    return report;
}

void write_shapley_csv(const std::string& path, const PanelDataset& ds,
                       const ShapleyReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write Shapley report: " + path);
    out << "country,group,prop_delta,prop_cs,prop_omega\n";
    char buf[256];
    for (const auto& p : report.proportions) {
        if (!p.defined) {
            out << ds.country_ids()[static_cast<size_t>(p.country)] << "," << p.group << ",,,\n";
            continue;
        }
        std::snprintf(buf, sizeof(buf), "%s,%d,%.12g,%.12g,%.12g\n",
                      ds.country_ids()[static_cast<size_t>(p.country)].c_str(), p.group,
                      p.prop_delta, p.prop_cs, p.prop_omega);
        out << buf;
    }
    for (const auto& gm : report.group_means) {
        std::snprintf(buf, sizeof(buf), "group%d_mean,%d,%.12g,%.12g,%.12g\n", gm.group, gm.group,
                      gm.prop_delta, gm.prop_cs, gm.prop_omega);
        out << buf;
    }
}

void write_attributions_csv(const std::string& path, const PanelDataset& ds,
                            const std::vector<Attribution>& attributions) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write attribution file: " + path);
    out << "country,group,year,mu,phi_delta,phi_cs,phi_omega\n";
    char buf[256];
    for (const auto& a : attributions) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.12g,%.12g,%.12g,%.12g\n",
                      ds.country_ids()[static_cast<size_t>(a.country)].c_str(), a.group, a.year,
                      a.baseline_mu, a.phi_dev, a.phi_level, a.phi_labor);
        out << buf;
    }
}

}  // namespace gtvc
