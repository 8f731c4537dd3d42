#include "actsafe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "actsafe/error.hpp"

namespace actsafe {

namespace {

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void require_cohort(const std::vector<std::vector<double>>& schedules) {
    if (schedules.size() < 2) throw EmptyCohort("need at least two schedules, got " + std::to_string(schedules.size()));
}

}  // namespace

std::vector<double> schedule_vector(const RhbLog& log, std::string_view behavior, int x) {
    if (x < 1) throw std::invalid_argument("window must be >= 1 minute");
    const auto occ = log.of(behavior);
    std::vector<double> out;
    for (std::size_t i = 1; i < occ.size(); ++i)
        out.push_back(static_cast<double>(std::max<std::int64_t>(0, occ[i].start - occ[i - 1].stop)) / x);
    return out;
}

double schedule_similarity(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n == 0) throw EmptySchedule("schedule vector with fewer than two occurrences");
    a = a.first(n);
    b = b.first(n);
    if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double regularity(std::size_t patient, const std::vector<std::vector<double>>& schedules) {
    require_cohort(schedules);
    if (patient >= schedules.size()) throw std::out_of_range("patient index out of range");
    double sum = 0;
    for (std::size_t j = 0; j < schedules.size(); ++j)
        if (j != patient) sum += schedule_similarity(schedules[patient], schedules[j]);
    return sum;
}

std::vector<double> regularity_scores(const std::vector<std::vector<double>>& schedules) {
    const auto h = similarity_heatmap(schedules);
    std::vector<double> out;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        double sum = 0;
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            if (j != i) sum += h(i, j);
        out.push_back(sum);
    }
    return out;
}

Eigen::MatrixXd similarity_heatmap(const std::vector<std::vector<double>>& schedules) {
    require_cohort(schedules);
    const auto n = static_cast<Eigen::Index>(schedules.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            h(i, j) = h(j, i) = schedule_similarity(schedules[static_cast<std::size_t>(i)], schedules[static_cast<std::size_t>(j)]);
    return h;
}

double sparsity(const BasisMatrix& bv) {
    const std::size_t cells = bv.rows() * bv.cols();
    return cells == 0 ? 1.0 : static_cast<double>(bv.zeros()) / static_cast<double>(cells);
}

std::string format_heatmap(const std::vector<std::string>& ids, const Eigen::MatrixXd& h) {
    if (static_cast<Eigen::Index>(ids.size()) != h.rows() || h.rows() != h.cols())
        throw LengthMismatch("heatmap ids and matrix disagree");
    std::string out = "patient";
    for (const auto& id : ids) out += "\t" + id;
    out += "\n";
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        out += ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < h.cols(); ++j) out += "\t" + fixed(h(i, j));
        out += "\n";
    }
    return out;
}

std::string format_regularity(const std::vector<std::string>& ids, const std::vector<double>& scores) {
    if (ids.size() != scores.size()) throw LengthMismatch("regularity ids and scores disagree");
    std::string out = "patient\tregularity\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + "\t" + fixed(scores[i]) + "\n";
    return out;
}

std::string format_sparsity(const std::vector<std::string>& ids, const std::vector<int>& windows,
                            const std::vector<std::vector<double>>& values) {
    if (ids.size() != values.size()) throw LengthMismatch("sparsity ids and rows disagree");
    std::string out = "patient";
    for (int x : windows) out += "\tx" + std::to_string(x);
    out += "\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (values[i].size() != windows.size()) throw LengthMismatch("sparsity row width");
        out += ids[i];
        for (double v : values[i]) out += "\t" + fixed(v);
        out += "\n";
    }
    return out;
}

}  // namespace actsafe
