#include "inboxaudit/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace inboxaudit::kernels {

namespace {

// Twiddle for index (k·n mod N), so large products never lose precision.
std::vector<std::complex<double>> twiddles(std::size_t n) {
    std::vector<std::complex<double>> w(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        w[j] = {std::cos(angle), std::sin(angle)};
    }
    return w;
}

std::complex<double> dft_bin(std::span<const double> x, const std::vector<std::complex<double>>& w, std::size_t k) {
    const std::size_t n = x.size();
    std::complex<double> acc{0.0, 0.0};
    std::size_t idx = 0;
    for (std::size_t j = 0; j < n; ++j) {
        acc += x[j] * w[idx];
        idx += k;
        if (idx >= n) idx -= n;
    }
    return acc;
}

double silhouette_point(const Eigen::MatrixXd& points, std::span<const int> labels, int k,
                        const std::vector<std::size_t>& sizes, Eigen::Index i) {
    const int own = labels[static_cast<std::size_t>(i)];
    if (sizes[static_cast<std::size_t>(own)] <= 1) return 0.0;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
        if (j == i) continue;
        sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += (points.row(i) - points.row(j)).norm();
    }
    const double a = sum[static_cast<std::size_t>(own)] / static_cast<double>(sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
        if (c == own || sizes[static_cast<std::size_t>(c)] == 0) continue;
        b = std::min(b, sum[static_cast<std::size_t>(c)] / static_cast<double>(sizes[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    return denom > 0.0 ? (b - a) / denom : 0.0;
}

std::vector<std::size_t> cluster_sizes(std::span<const int> labels, int k) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
}

void assign_row(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, Eigen::Index i, int& label,
                double& d2) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best) {
            best = d;
            arg = static_cast<int>(c);
        }
    }
    label = arg;
    d2 = best;
}

} // namespace

namespace serial {

std::vector<std::complex<double>> dft(std::span<const double> x) {
    const auto w = twiddles(x.size());
    std::vector<std::complex<double>> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = dft_bin(x, w, k);
    return out;
}

std::vector<double> silhouette_samples(const Eigen::MatrixXd& points, std::span<const int> labels, int k) {
    const auto sizes = cluster_sizes(labels, k);
    std::vector<double> s(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) s[static_cast<std::size_t>(i)] = silhouette_point(points, labels, k, sizes, i);
    return s;
}

void assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& labels,
                    std::vector<double>& dist2) {
    labels.resize(static_cast<std::size_t>(points.rows()));
    dist2.resize(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        assign_row(points, centroids, i, labels[static_cast<std::size_t>(i)], dist2[static_cast<std::size_t>(i)]);
}

} // namespace serial

namespace omp {

std::vector<std::complex<double>> dft(std::span<const double> x) {
    const auto w = twiddles(x.size());
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    std::vector<std::complex<double>> out(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = dft_bin(x, w, static_cast<std::size_t>(k));
    return out;
}

std::vector<double> silhouette_samples(const Eigen::MatrixXd& points, std::span<const int> labels, int k) {
    const auto sizes = cluster_sizes(labels, k);
    std::vector<double> s(static_cast<std::size_t>(points.rows()));
    const Eigen::Index n = points.rows();
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = silhouette_point(points, labels, k, sizes, i);
    return s;
}

void assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& labels,
                    std::vector<double>& dist2) {
    labels.resize(static_cast<std::size_t>(points.rows()));
    dist2.resize(static_cast<std::size_t>(points.rows()));
    const Eigen::Index n = points.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i)
        assign_row(points, centroids, i, labels[static_cast<std::size_t>(i)], dist2[static_cast<std::size_t>(i)]);
}

} // namespace omp

} // namespace inboxaudit::kernels
