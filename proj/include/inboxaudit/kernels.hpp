#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

// Hot loops in two flavours: `serial` is the reference, `omp` the
// OpenMP-parallel version. Both must agree bit for bit.
namespace inboxaudit::kernels {

namespace serial {

/// Direct DFT, X[k] = Σ x[n]·exp(−2πi·kn/N), all N bins.
std::vector<std::complex<double>> dft(std::span<const double> x);

/// Per-point silhouette values; labels in [0, k).
std::vector<double> silhouette_samples(const Eigen::MatrixXd& points, std::span<const int> labels, int k);

/// Nearest centroid (lowest index on ties) and squared distance per row.
void assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& labels,
                    std::vector<double>& dist2);

} // namespace serial

namespace omp {

std::vector<std::complex<double>> dft(std::span<const double> x);
std::vector<double> silhouette_samples(const Eigen::MatrixXd& points, std::span<const int> labels, int k);
void assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& labels,
                    std::vector<double>& dist2);

} // namespace omp

} // namespace inboxaudit::kernels
