#include "inboxaudit/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "inboxaudit/error.hpp"
#include "inboxaudit/kernels.hpp"

namespace inboxaudit::cluster {

namespace {

double unit_uniform(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

struct Run {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> history;
};

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& x, int k, std::mt19937_64& gen) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd c(k, x.cols());
    auto first = static_cast<Eigen::Index>(unit_uniform(gen) * static_cast<double>(n));
    first = std::min(first, n - 1);
    c.row(0) = x.row(first);
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (x.row(i) - c.row(0)).squaredNorm();
    for (int j = 1; j < k; ++j) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double target = unit_uniform(gen) * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::min(static_cast<Eigen::Index>(unit_uniform(gen) * static_cast<double>(n)), n - 1);
        }
        c.row(j) = x.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - c.row(j)).squaredNorm());
    }
    return c;
}

Run lloyd(const Eigen::MatrixXd& x, int k, std::mt19937_64& gen, int max_iterations, bool parallel) {
    const Eigen::Index n = x.rows();
    auto assign = parallel ? kernels::omp::assign_nearest : kernels::serial::assign_nearest;
    Run run;
    run.centroids = seed_plus_plus(x, k, gen);
    std::vector<double> d2;
    assign(x, run.centroids, run.labels, d2);

    for (int it = 1; it <= max_iterations; ++it) {
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, x.cols());
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int l = run.labels[static_cast<std::size_t>(i)];
            next.row(l) += x.row(i);
            ++counts[static_cast<std::size_t>(l)];
        }
        std::set<Eigen::Index> taken;
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
                continue;
            }
            // Empty cluster: move it onto the worst-served point.
            Eigen::Index far = -1;
            for (Eigen::Index i = 0; i < n; ++i)
                if (!taken.count(i) && (far < 0 || d2[static_cast<std::size_t>(i)] > d2[static_cast<std::size_t>(far)])) far = i;
            taken.insert(far);
            next.row(c) = x.row(far);
        }
        run.centroids = std::move(next);
        std::vector<int> labels;
        assign(x, run.centroids, labels, d2);
        run.inertia = std::accumulate(d2.begin(), d2.end(), 0.0);
        run.history.push_back(run.inertia);
        run.iterations = it;
        const bool stable = labels == run.labels;
        run.labels = std::move(labels);
        if (stable) break;
    }
    return run;
}

} // namespace

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        char buf[16];
        for (int h = 0; h < 24; ++h) {
            std::snprintf(buf, sizeof buf, "hour_%02d", h);
            v.emplace_back(buf);
        }
        for (int d = 0; d < 7; ++d) v.push_back("dow_" + std::to_string(d));
        v.insert(v.end(), {"marketing_flag", "mix_promotional", "mix_crm", "mix_alert", "total_volume"});
        return v;
    }();
    return names;
}

FeatureMatrix build_features(const corpus::CorpusStore& store, const netintel::ProfileSet& profiles,
                             const std::map<std::string, classify::ContentLabel>& labels) {
    std::map<std::string, bool> marketing;
    for (const auto& p : profiles.profiles) marketing[p.service_name] = p.uses_marketing_provider;

    FeatureMatrix fm;
    fm.columns = feature_names();
    for (const auto& [service, idx] : store.by_service())
        if (service != kUnmatched && !idx.empty()) fm.companies.push_back(service);
    if (fm.companies.size() < 2)
        fail(ErrorKind::InsufficientData, "feature matrix needs at least 2 companies with email, got " +
                                              std::to_string(fm.companies.size()));

    fm.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(fm.companies.size()), static_cast<Eigen::Index>(kFeatureCount));
    const auto& records = store.records();
    for (std::size_t row = 0; row < fm.companies.size(); ++row) {
        auto r = fm.values.row(static_cast<Eigen::Index>(row));
        double mix[3] = {0, 0, 0};
        const auto& idx = store.by_service().at(fm.companies[row]);
        for (auto i : idx) {
            const auto& rec = records[i];
            if (rec.received_local) {
                r(rec.received_local->hour) += 1.0;
                r(24 + rec.received_local->weekday) += 1.0;
            }
            if (auto it = labels.find(rec.message_id); it != labels.end()) mix[static_cast<int>(it->second)] += 1.0;
        }
        if (auto it = marketing.find(fm.companies[row]); it != marketing.end() && it->second) r(31) = 1.0;
        const double classified = mix[0] + mix[1] + mix[2];
        if (classified > 0.0)
            for (int j = 0; j < 3; ++j) r(32 + j) = mix[j] / classified;
        r(35) = static_cast<double>(idx.size());
    }
    return fm;
}

Standardized standardize(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) fail(ErrorKind::InsufficientData, "standardize needs at least 2 rows");
    Standardized s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean().transpose();
    s.stddev = Eigen::VectorXd::Zero(x.cols());
    s.values = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto centered = x.col(j).array() - s.mean(j);
        const double sd = std::sqrt(centered.square().sum() / n);
        s.stddev(j) = sd;
        if (sd <= 1e-12 * std::max(1.0, std::abs(s.mean(j)))) {
            s.zero_variance_columns.push_back(static_cast<std::size_t>(j));
            continue;
        }
        s.values.col(j) = centered / sd;
    }
    return s;
}

Eigen::MatrixXd PcaModel::transform(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()) * components.transpose();
}

Eigen::MatrixXd PcaModel::inverse_transform(const Eigen::MatrixXd& scores) const {
    return (scores * components).rowwise() + mean.transpose();
}

PcaModel pca_fit(const Eigen::MatrixXd& x, const PcaTarget& target) {
    if (x.rows() < 2) fail(ErrorKind::InsufficientData, "PCA needs at least 2 rows");
    PcaModel m;
    m.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - m.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) fail(ErrorKind::Undefined, "covariance eigen-decomposition failed");

    const Eigen::Index d = x.cols();
    Eigen::VectorXd values(d);
    Eigen::MatrixXd vectors(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        values(i) = std::max(0.0, solver.eigenvalues()(d - 1 - i));
        vectors.col(i) = solver.eigenvectors().col(d - 1 - i);
    }
    m.all_eigenvalues = values;
    const double total = values.sum();
    if (!(total > 0.0)) fail(ErrorKind::Undefined, "PCA input has no variance");
    Eigen::Index rank = 0;
    while (rank < d && values(rank) > values(0) * 1e-10) ++rank;

    Eigen::Index keep = 0;
    if (target.mode == PcaTarget::Mode::FixedComponents) {
        if (target.components == 0) fail(ErrorKind::Range, "PCA needs at least one component");
        keep = static_cast<Eigen::Index>(target.components);
        if (keep > rank) {
            m.warnings.push_back("requested " + std::to_string(keep) + " components but data rank is " +
                                 std::to_string(rank) + "; clamped");
            keep = rank;
        }
    } else {
        if (!(target.threshold > 0.0 && target.threshold <= 1.0)) fail(ErrorKind::Range, "variance threshold must lie in (0, 1]");
        double cum = 0.0;
        while (keep < rank) {
            cum += values(keep) / total;
            ++keep;
            if (cum >= target.threshold - 1e-12) break;
        }
    }

    m.components.resize(keep, d);
    m.explained_variance.resize(keep);
    m.explained_variance_ratio.resize(keep);
    for (Eigen::Index i = 0; i < keep; ++i) {
        Eigen::VectorXd v = vectors.col(i).normalized();
        Eigen::Index arg = 0;
        for (Eigen::Index j = 1; j < d; ++j)
            if (std::abs(v(j)) > std::abs(v(arg)) + 1e-12) arg = j;
        if (v(arg) < 0) v = -v;
        m.components.row(i) = v.transpose();
        m.explained_variance(i) = values(i);
        m.explained_variance_ratio(i) = values(i) / total;
    }
    return m;
}

KMeansResult kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const KMeansOptions& options) {
    if (k < 2) fail(ErrorKind::Range, "k-means needs k >= 2");
    if (x.rows() < k)
        fail(ErrorKind::Infeasible, "k-means with k=" + std::to_string(k) + " on " + std::to_string(x.rows()) + " rows");
    if (options.restarts < 1 || options.max_iterations < 1) fail(ErrorKind::Range, "k-means restarts and iterations must be >= 1");

    std::vector<Run> runs(static_cast<std::size_t>(options.restarts));
    auto one = [&](int r) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(r)};
        std::mt19937_64 gen(seq);
        runs[static_cast<std::size_t>(r)] = lloyd(x, k, gen, options.max_iterations, false);
    };
    if (options.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int r = 0; r < options.restarts; ++r) one(r);
    } else {
        for (int r = 0; r < options.restarts; ++r) one(r);
    }

    int best = 0;
    for (int r = 1; r < options.restarts; ++r)
        if (runs[static_cast<std::size_t>(r)].inertia < runs[static_cast<std::size_t>(best)].inertia) best = r;
    auto& run = runs[static_cast<std::size_t>(best)];

    // Renumber clusters by first appearance.
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (int l : run.labels)
        if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
    for (auto& r : remap)
        if (r < 0) r = next++;

    KMeansResult out;
    out.k = k;
    out.labels.reserve(run.labels.size());
    for (int l : run.labels) out.labels.push_back(remap[static_cast<std::size_t>(l)]);
    out.centroids.resize(k, x.cols());
    for (int c = 0; c < k; ++c) out.centroids.row(remap[static_cast<std::size_t>(c)]) = run.centroids.row(c);
    out.inertia = run.inertia;
    out.iterations = run.iterations;
    out.inertia_history = std::move(run.history);
    out.best_restart = best;
    return out;
}

double silhouette(const Eigen::MatrixXd& x, const std::vector<int>& labels, bool parallel) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) fail(ErrorKind::Shape, "silhouette: one label per row required");
    std::map<int, int> dense;
    for (int l : labels) dense.emplace(l, 0);
    if (dense.size() < 2) fail(ErrorKind::Undefined, "silhouette needs at least 2 clusters");
    int next = 0;
    for (auto& [l, d] : dense) d = next++;
    std::vector<int> mapped;
    mapped.reserve(labels.size());
    for (int l : labels) mapped.push_back(dense[l]);
    const auto s = parallel ? kernels::omp::silhouette_samples(x, mapped, next)
                            : kernels::serial::silhouette_samples(x, mapped, next);
    return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

SelectKResult select_k(const Eigen::MatrixXd& x, std::uint64_t seed, int k_min, int k_max, const KMeansOptions& options) {
    const auto n = static_cast<int>(x.rows());
    if (n < 3) fail(ErrorKind::Infeasible, "model selection needs at least 3 rows, got " + std::to_string(n));
    SelectKResult out;
    const int lo = std::max(2, k_min);
    const int hi = std::min(k_max, n - 1);
    if (lo != k_min || hi != k_max)
        out.warnings.push_back("k range " + std::to_string(k_min) + ".." + std::to_string(k_max) + " clamped to " +
                               std::to_string(lo) + ".." + std::to_string(hi) + " for " + std::to_string(n) + " rows");
    if (lo > hi) fail(ErrorKind::Infeasible, "empty k range after clamping");

    bool have = false;
    for (int k = lo; k <= hi; ++k) {
        auto km = kmeans(x, k, seed, options);
        double s = 0.0;
        try {
            s = silhouette(x, km.labels, options.parallel);
        } catch (const AuditError& e) {
            out.warnings.push_back("k=" + std::to_string(k) + " skipped: " + e.what());
            continue;
        }
        out.silhouettes.emplace_back(k, s);
        if (!have || s > out.best.silhouette + 1e-12) {
            have = true;
            out.best = {k, std::move(km.labels), std::move(km.centroids), s, km.inertia};
        }
    }
    if (!have) fail(ErrorKind::Infeasible, "no k produced a valid clustering");
    return out;
}

LoadingsReport loadings_report(const PcaModel& pca, const Eigen::MatrixXd& x, const std::vector<int>& labels,
                               const std::vector<std::string>& feature_names, std::size_t top_n) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) fail(ErrorKind::Shape, "loadings: one label per row required");
    const Eigen::MatrixXd scores = pca.transform(x);
    LoadingsReport rep;
    std::map<int, std::vector<Eigen::Index>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<Eigen::Index>(i));
    for (const auto& [c, rows] : members) {
        ClusterScores cs{c, rows.size(), std::vector<double>(static_cast<std::size_t>(scores.cols()), 0.0)};
        for (auto r : rows)
            for (Eigen::Index j = 0; j < scores.cols(); ++j) cs.mean_scores[static_cast<std::size_t>(j)] += scores(r, j);
        for (auto& v : cs.mean_scores) v /= static_cast<double>(rows.size());
        rep.clusters.push_back(std::move(cs));
    }
    for (Eigen::Index i = 0; i < pca.components.rows(); ++i) {
        std::vector<std::size_t> order(static_cast<std::size_t>(pca.components.cols()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(pca.components(i, static_cast<Eigen::Index>(a))) > std::abs(pca.components(i, static_cast<Eigen::Index>(b)));
        });
        ComponentLoading cl{static_cast<std::size_t>(i), pca.explained_variance_ratio(i), {}};
        for (std::size_t t = 0; t < std::min(top_n, order.size()); ++t) {
            const auto j = order[t];
            cl.top_features.emplace_back(j < feature_names.size() ? feature_names[j] : "f" + std::to_string(j),
                                         pca.components(i, static_cast<Eigen::Index>(j)));
        }
        rep.components.push_back(std::move(cl));
    }
    return rep;
}

} // namespace inboxaudit::cluster
