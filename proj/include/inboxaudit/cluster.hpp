#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inboxaudit/classify.hpp"
#include "inboxaudit/corpus.hpp"
#include "inboxaudit/netintel.hpp"

namespace inboxaudit::cluster {

inline constexpr std::size_t kFeatureCount = 36;

/// hour_00..hour_23, dow_0..dow_6, marketing_flag, mix_promotional,
/// mix_crm, mix_alert, total_volume.
const std::vector<std::string>& feature_names();

struct FeatureMatrix {
    std::vector<std::string> companies; // row labels, name-sorted
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
};

/// One row per service with at least one email. `labels` maps message_id
/// to its content class; records missing from it count as unclassified.
FeatureMatrix build_features(const corpus::CorpusStore& store, const netintel::ProfileSet& profiles,
                             const std::map<std::string, classify::ContentLabel>& labels);

struct Standardized {
    Eigen::MatrixXd values;
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev; // population
    std::vector<std::size_t> zero_variance_columns;
};

Standardized standardize(const Eigen::MatrixXd& x);

struct PcaTarget {
    enum class Mode { FixedComponents, VarianceThreshold };
    Mode mode = Mode::FixedComponents;
    std::size_t components = 5;
    double threshold = 0.80;

    static PcaTarget fixed(std::size_t m) { return {Mode::FixedComponents, m, 0.0}; }
    static PcaTarget variance(double t) { return {Mode::VarianceThreshold, 0, t}; }
};

struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;          // m × d, orthonormal rows
    Eigen::VectorXd explained_variance;  // eigenvalues of kept components
    Eigen::VectorXd explained_variance_ratio;
    Eigen::VectorXd all_eigenvalues;     // descending, all d
    std::vector<std::string> warnings;

    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& scores) const;
};

/// Eigen-decomposition of the (n − 1)-normalized covariance. Each
/// component's largest-magnitude entry is made positive.
PcaModel pca_fit(const Eigen::MatrixXd& x, const PcaTarget& target = {});

struct KMeansResult {
    int k = 0;
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> inertia_history; // best restart, one entry per Lloyd step
    int best_restart = 0;
};

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 300;
    bool parallel = true;
};

/// k-means++ seeding plus Lloyd iterations, best of `restarts` by inertia.
/// Labels are renumbered by first appearance in row order.
KMeansResult kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Mean silhouette (Euclidean). Throws Undefined for fewer than 2 clusters.
double silhouette(const Eigen::MatrixXd& x, const std::vector<int>& labels, bool parallel = true);

struct ClusterModel {
    int k = 0;
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double silhouette = 0.0;
    double inertia = 0.0;
};

struct SelectKResult {
    ClusterModel best;
    std::vector<std::pair<int, double>> silhouettes; // (k, score) per tried k
    std::vector<std::string> warnings;
};

/// Fits k = k_min..k_max (clamped to [2, rows − 1]); maximal silhouette
/// wins, ties go to the smaller k.
SelectKResult select_k(const Eigen::MatrixXd& x, std::uint64_t seed, int k_min = 2, int k_max = 10,
                       const KMeansOptions& options = {});

struct ComponentLoading {
    std::size_t component = 0;
    double explained_variance_ratio = 0.0;
    std::vector<std::pair<std::string, double>> top_features; // by |loading|
};

struct ClusterScores {
    int cluster = 0;
    std::size_t size = 0;
    std::vector<double> mean_scores; // one per component
};

struct LoadingsReport {
    std::vector<ClusterScores> clusters;
    std::vector<ComponentLoading> components;
};

/// `x` is the matrix the PCA was fitted on; `labels` assign its rows.
LoadingsReport loadings_report(const PcaModel& pca, const Eigen::MatrixXd& x, const std::vector<int>& labels,
                               const std::vector<std::string>& feature_names, std::size_t top_n = 5);

} // namespace inboxaudit::cluster
