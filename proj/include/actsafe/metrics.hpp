#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "actsafe/rhb.hpp"

namespace actsafe {

/// Gaps between consecutive occurrences of `behavior`, in x-minute windows:
/// (start[i+1] - stop[i]) / x, negative (overlapping) gaps clamped to 0.
/// Length is occurrences - 1.
std::vector<double> schedule_vector(const RhbLog& log, std::string_view behavior, int x);

/// Cosine of the two gap vectors after truncating both to the shorter length.
/// Exactly 1 for equal truncated vectors; 0 when either is all zeros and they
/// differ. Throws EmptySchedule when either is empty.
double schedule_similarity(std::span<const double> a, std::span<const double> b);

/// Sum of the patient's similarity to every other cohort member. Throws
/// EmptyCohort for fewer than two schedules.
double regularity(std::size_t patient, const std::vector<std::vector<double>>& schedules);
std::vector<double> regularity_scores(const std::vector<std::vector<double>>& schedules);

/// H(i, j) = similarity(i, j); symmetric with a unit diagonal. Throws EmptyCohort.
Eigen::MatrixXd similarity_heatmap(const std::vector<std::vector<double>>& schedules);

/// Fraction of zero cells; 1 for an empty matrix.
double sparsity(const BasisMatrix& bv);

/// Tab-separated tables for external plotting.
std::string format_heatmap(const std::vector<std::string>& ids, const Eigen::MatrixXd& h);
std::string format_regularity(const std::vector<std::string>& ids, const std::vector<double>& scores);
/// One row per patient, one column per window size.
std::string format_sparsity(const std::vector<std::string>& ids, const std::vector<int>& windows,
                            const std::vector<std::vector<double>>& values);

}  // namespace actsafe
