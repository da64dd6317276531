#include "gtvc/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "gtvc/errors.hpp"

namespace gtvc {

namespace {

double sq_dist(const Point2& a, const Point2& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

struct RunResult {
    std::vector<int> labels;  // 0-based
    std::vector<Point2> centers;
    double objective = std::numeric_limits<double>::infinity();
    std::vector<double> history;
};

double objective_of(const std::vector<Point2>& points, const std::vector<int>& labels,
                    const std::vector<Point2>& centers) {
    double total = 0.0;
    for (size_t i = 0; i < points.size(); ++i) total += sq_dist(points[i], centers[static_cast<size_t>(labels[i])]);
    return total / static_cast<double>(points.size());
}

RunResult lloyd_once(const std::vector<Point2>& points, int G, std::mt19937_64& rng) {
    const int N = static_cast<int>(points.size());
    RunResult run;

    // Sample G distinct points as starting centers.
    std::vector<int> idx(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) idx[static_cast<size_t>(i)] = i;
    for (int k = 0; k < G; ++k) {
        std::uniform_int_distribution<int> pick(k, N - 1);
        std::swap(idx[static_cast<size_t>(k)], idx[static_cast<size_t>(pick(rng))]);
    }
    run.centers.resize(static_cast<size_t>(G));
    for (int k = 0; k < G; ++k) run.centers[static_cast<size_t>(k)] = points[static_cast<size_t>(idx[static_cast<size_t>(k)])];

    run.labels.assign(static_cast<size_t>(N), -1);
    for (int iter = 0; iter < 500; ++iter) {
        // Assignment step.
        bool changed = false;
        for (int i = 0; i < N; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int k = 0; k < G; ++k) {
                const double d = sq_dist(points[static_cast<size_t>(i)], run.centers[static_cast<size_t>(k)]);
                if (d < best) {
                    best = d;
                    arg = k;
                }
            }
            if (run.labels[static_cast<size_t>(i)] != arg) {
                run.labels[static_cast<size_t>(i)] = arg;
                changed = true;
            }
        }
        run.history.push_back(objective_of(points, run.labels, run.centers));
        if (!changed) break;

        // Update step; an emptied cluster is reseeded at the point farthest
        // from its current center.
        std::vector<Point2> sums(static_cast<size_t>(G), Point2{0.0, 0.0});
        std::vector<int> counts(static_cast<size_t>(G), 0);
        for (int i = 0; i < N; ++i) {
            const auto k = static_cast<size_t>(run.labels[static_cast<size_t>(i)]);
            sums[k][0] += points[static_cast<size_t>(i)][0];
            sums[k][1] += points[static_cast<size_t>(i)][1];
            ++counts[k];
        }
        for (int k = 0; k < G; ++k) {
            if (counts[static_cast<size_t>(k)] > 0) {
                run.centers[static_cast<size_t>(k)][0] = sums[static_cast<size_t>(k)][0] / counts[static_cast<size_t>(k)];
                run.centers[static_cast<size_t>(k)][1] = sums[static_cast<size_t>(k)][1] / counts[static_cast<size_t>(k)];
            } else {
                double far = -1.0;
                int arg = 0;
                for (int i = 0; i < N; ++i) {
                    const double d = sq_dist(points[static_cast<size_t>(i)],
                                             run.centers[static_cast<size_t>(run.labels[static_cast<size_t>(i)])]);
                    if (d > far) {
                        far = d;
                        arg = i;
                    }
                }
                run.centers[static_cast<size_t>(k)] = points[static_cast<size_t>(arg)];
            }
        }
    }
    run.objective = run.history.back();
    return run;
}

}  // namespace

Standardized standardize_features(const std::vector<std::pair<double, double>>& moments,
                                  SdConvention convention) {
    const int N = static_cast<int>(moments.size());
    if (N < 2) throw DataError("standardization needs at least 2 countries");
    Standardized out;
    out.scaling.convention = convention;
    for (int f = 0; f < 2; ++f) {
        double mean = 0.0;
        for (const auto& m : moments) mean += (f == 0 ? m.first : m.second);
        mean /= N;
        double ss = 0.0;
        for (const auto& m : moments) {
            const double d = (f == 0 ? m.first : m.second) - mean;
            ss += d * d;
        }
        const double denom = convention == SdConvention::Sample ? N - 1 : N;
        const double sd = std::sqrt(ss / denom);
        if (sd <= 0.0) {
            throw DataError(std::string("zero variance in feature '") +
                            (f == 0 ? "top share" : "capital share") + "'");
        }
        out.scaling.mean[static_cast<size_t>(f)] = mean;
        out.scaling.sd[static_cast<size_t>(f)] = sd;
    }
    out.points.reserve(static_cast<size_t>(N));
    for (const auto& m : moments) {
        out.points.push_back({(m.first - out.scaling.mean[0]) / out.scaling.sd[0],
                              (m.second - out.scaling.mean[1]) / out.scaling.sd[1]});
    }
    return out;
}

GroupAssignment lloyd_kmeans(const std::vector<Point2>& points, int G, int n_init, std::uint64_t seed) {
    const int N = static_cast<int>(points.size());
    if (N == 0) throw DataError("kmeans on empty input");
    if (G < 1 || G > N) {
        throw DataError("invalid number of groups G=" + std::to_string(G) + " for N=" + std::to_string(N));
    }
    if (n_init < 1) throw ConfigError("n_init must be >= 1");

    std::mt19937_64 rng(seed);
    RunResult best;
    for (int r = 0; r < n_init; ++r) {
        RunResult run = lloyd_once(points, G, rng);
        if (run.objective < best.objective) best = std::move(run);
    }

    // Canonical labels: groups ordered by their first member.
    std::vector<int> order;
    std::vector<int> remap(static_cast<size_t>(G), -1);
    for (int i = 0; i < N; ++i) {
        const int k = best.labels[static_cast<size_t>(i)];
        if (remap[static_cast<size_t>(k)] < 0) {
            remap[static_cast<size_t>(k)] = static_cast<int>(order.size());
            order.push_back(k);
        }
    }
    // Empty groups (possible only when points coincide) keep their slots at the end.
    for (int k = 0; k < G; ++k) {
        if (remap[static_cast<size_t>(k)] < 0) {
            remap[static_cast<size_t>(k)] = static_cast<int>(order.size());
            order.push_back(k);
        }
    }

    GroupAssignment out;
    out.G = G;
    out.labels.resize(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) out.labels[static_cast<size_t>(i)] = remap[static_cast<size_t>(best.labels[static_cast<size_t>(i)])] + 1;
    out.centers.resize(static_cast<size_t>(G));
    for (int k = 0; k < G; ++k) out.centers[static_cast<size_t>(remap[static_cast<size_t>(k)])] = best.centers[static_cast<size_t>(k)];
    out.objective = best.objective;
    out.objective_history = std::move(best.history);
    return out;
}

BicSelection bic_select(const std::vector<Point2>& points, int G_max, double zeta, int n_init,
                        std::uint64_t seed) {
    const int N = static_cast<int>(points.size());
    if (N <= G_max) {
        throw DataError("need N > G_max for group selection (N=" + std::to_string(N) +
                        ", G_max=" + std::to_string(G_max) + ")");
    }

    std::map<int, GroupAssignment> fits;
    for (int G = 2; G <= G_max; ++G) fits.emplace(G, lloyd_kmeans(points, G, n_init, seed));

    // sigma2 from the most generous fit.
    const double sigma2 = fits.at(G_max).objective * N / (2.0 * (N - G_max));

    BicSelection out;
    out.table.sigma2_hat = sigma2;
    out.table.zeta = zeta;
    out.table.G_max = G_max;
    double best = std::numeric_limits<double>::infinity();
    for (int G = 2; G <= G_max; ++G) {
        BicRow row;
        row.G = G;
        row.fit = fits.at(G).objective;
        row.penalty = sigma2 * 2.0 * G * zeta * std::log(static_cast<double>(N)) / N;
        row.bic = row.fit + row.penalty;
        out.table.rows.push_back(row);
        if (row.bic < best) {  // strict: ties keep the smaller G
            best = row.bic;
            out.table.selected_G = G;
        }
    }
    out.assignment = fits.at(out.table.selected_G);
    return out;
}

void flag_small_groups(GroupAssignment& assignment, int min_size) {
    std::vector<int> counts(static_cast<size_t>(assignment.G), 0);
    for (int l : assignment.labels) ++counts[static_cast<size_t>(l - 1)];
    assignment.outlier_groups.clear();
    for (int g = 1; g <= assignment.G; ++g) {
        if (counts[static_cast<size_t>(g - 1)] < min_size) assignment.outlier_groups.push_back(g);
    }
}

void write_assignment_csv(const std::string& path, const PanelDataset& ds,
                          const GroupAssignment& assignment) {
    if (static_cast<int>(assignment.labels.size()) != ds.n_countries()) {
        throw DataError("assignment/dataset size mismatch");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write assignment file: " + path);
    out << "country,group\n";
    for (int i = 0; i < ds.n_countries(); ++i) {
        out << ds.country_ids()[static_cast<size_t>(i)] << "," << assignment.labels[static_cast<size_t>(i)] << "\n";
    }
}

GroupAssignment read_assignment_csv(const std::string& path, const PanelDataset& ds) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open assignment file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty assignment file: " + path);

    std::map<std::string, int> labels;
    int max_label = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("malformed assignment line: " + line);
        const std::string country = line.substr(0, comma);
        const int label = std::stoi(line.substr(comma + 1));
        labels[country] = label;
        max_label = std::max(max_label, label);
    }

    GroupAssignment out;
    out.G = max_label;
    out.labels.resize(static_cast<size_t>(ds.n_countries()));
    for (int i = 0; i < ds.n_countries(); ++i) {
        const auto it = labels.find(ds.country_ids()[static_cast<size_t>(i)]);
        if (it == labels.end()) {
            throw DataError("country '" + ds.country_ids()[static_cast<size_t>(i)] + "' missing from assignment file");
        }
        out.labels[static_cast<size_t>(i)] = it->second;
    }
    out.centers.resize(static_cast<size_t>(out.G), Point2{0.0, 0.0});
    return out;
}

void write_bic_csv(const std::string& path, const BicTable& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write BIC table: " + path);
    out << "G,fit,penalty,bic,selected\n";
    for (const auto& row : table.rows) {
        out << row.G << "," << row.fit << "," << row.penalty << "," << row.bic << ","
            << (row.G == table.selected_G ? 1 : 0) << "\n";
    }
}

}  // namespace gtvc
