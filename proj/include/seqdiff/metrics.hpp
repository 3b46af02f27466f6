#pragma once

#include "diffusion.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace seqdiff {

constexpr std::size_t kFeatureDim = 16;

// Handcrafted trajectory descriptor; a fixed, deterministic function of the
// sequence. Stands in for a learned motion encoder at desk scale.
inline Matrix feature_vector(const Sequence& seq) {
    if (seq.rows() < 1) throw std::invalid_argument("feature_vector: empty sequence");
    const std::size_t n = seq.rows();
    std::vector<double> speed(n), vx(n), vy(n), x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = seq(i, 0);
        y[i] = seq(i, 1);
        vx[i] = seq(i, 2);
        vy[i] = seq(i, 3);
        speed[i] = std::sqrt(vx[i] * vx[i] + vy[i] * vy[i]);
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double e : v) s += e;
        return s / static_cast<double>(v.size());
    };
    auto stddev = [&](const std::vector<double>& v) {
        const double m = mean(v);
        double s = 0.0;
        for (double e : v) s += (e - m) * (e - m);
        return std::sqrt(s / static_cast<double>(v.size()));
    };

    std::vector<double> dheading;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (speed[i] < 1e-8 || speed[i + 1] < 1e-8) {
            dheading.push_back(0.0);
            continue;
        }
        const double cross = vx[i] * vy[i + 1] - vy[i] * vx[i + 1];
        const double dot = vx[i] * vx[i + 1] + vy[i] * vy[i + 1];
        dheading.push_back(std::atan2(cross, dot));
    }
    if (dheading.empty()) dheading.push_back(0.0);
    std::vector<double> abs_dheading(dheading.size());
    for (std::size_t i = 0; i < dheading.size(); ++i) abs_dheading[i] = std::abs(dheading[i]);

    double path = 0.0;
    double min_x = x[0], max_x = x[0], min_y = y[0], max_y = y[0];
    for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 < n) path += std::hypot(x[i + 1] - x[i], y[i + 1] - y[i]);
        min_x = std::min(min_x, x[i]);
        max_x = std::max(max_x, x[i]);
        min_y = std::min(min_y, y[i]);
        max_y = std::max(max_y, y[i]);
    }

    Matrix f(1, kFeatureDim);
    f(0, 0) = mean(speed);
    f(0, 1) = stddev(speed);
    f(0, 2) = mean(dheading);
    f(0, 3) = stddev(dheading);
    f(0, 4) = std::hypot(x[n - 1] - x[0], y[n - 1] - y[0]);  // net displacement
    f(0, 5) = path;
    f(0, 6) = std::hypot(vx[n - 1] - vx[0], vy[n - 1] - vy[0]);  // terminal-vs-initial velocity
    f(0, 7) = stddev(x) * stddev(x);
    f(0, 8) = stddev(y) * stddev(y);
    f(0, 9) = mean(vx);
    f(0, 10) = mean(vy);
    f(0, 11) = speed[0];
    f(0, 12) = speed[n - 1];
    f(0, 13) = max_x - min_x;
    f(0, 14) = max_y - min_y;
    f(0, 15) = mean(abs_dheading);
    return f;
}

inline Matrix feature_matrix(const std::vector<Sequence>& seqs) {
    if (seqs.empty()) throw std::invalid_argument("feature_matrix: no sequences");
    Matrix out(seqs.size(), kFeatureDim);
    for (std::size_t i = 0; i < seqs.size(); ++i) out.set_row_block(i, feature_vector(seqs[i]));
    return out;
}

// Euclidean distance between the boundary frames of two adjacent sequences,
// over all d coordinates. No alignment applied.
inline double transition_distance(const Sequence& first, const Sequence& second) {
    if (first.rows() < 1 || second.rows() < 1)
        throw std::invalid_argument("transition_distance: empty sequence");
    if (first.cols() != second.cols())
        throw std::invalid_argument("transition_distance: frame dim mismatch");
    double s = 0.0;
    for (std::size_t c = 0; c < first.cols(); ++c) {
        const double d = first(first.rows() - 1, c) - second(0, c);
        s += d * d;
    }
    return std::sqrt(s);
}

namespace detail {

inline void fit_gaussian(const Matrix& feats, Matrix& mu, Matrix& cov) {
    const std::size_t n = feats.rows(), k = feats.cols();
    mu = Matrix(1, k);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < k; ++c) mu(0, c) += feats(r, c);
    for (std::size_t c = 0; c < k; ++c) mu(0, c) /= static_cast<double>(n);
    cov = Matrix(k, k);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t a = 0; a < k; ++a) {
            const double da = feats(r, a) - mu(0, a);
            for (std::size_t b = 0; b < k; ++b) cov(a, b) += da * (feats(r, b) - mu(0, b));
        }
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < cov.size(); ++i) cov.at(i) *= inv;
    for (std::size_t i = 0; i < k; ++i) cov(i, i) += 1e-6;  // regularizer
}

}  // namespace detail

// Frechet distance between Gaussian fits of two feature sets:
// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 sqrt(S_a S_b)), with the product
// symmetrized before the PSD square root.
inline double frechet_distance(const Matrix& feats_a, const Matrix& feats_b) {
    if (feats_a.cols() != feats_b.cols())
        throw std::invalid_argument("frechet_distance: feature width mismatch");
    if (feats_a.rows() < 2 || feats_b.rows() < 2)
        throw std::invalid_argument("frechet_distance: need at least 2 vectors per side");
    Matrix mu_a, cov_a, mu_b, cov_b;
    detail::fit_gaussian(feats_a, mu_a, cov_a);
    detail::fit_gaussian(feats_b, mu_b, cov_b);
    double mean_term = 0.0;
    for (std::size_t c = 0; c < mu_a.cols(); ++c) {
        const double d = mu_a(0, c) - mu_b(0, c);
        mean_term += d * d;
    }
    Matrix prod = matmul(cov_a, cov_b);
    Matrix sym(prod.rows(), prod.cols());
    for (std::size_t r = 0; r < prod.rows(); ++r)
        for (std::size_t c = 0; c < prod.cols(); ++c)
            sym(r, c) = 0.5 * (prod(r, c) + prod(c, r));
    Matrix root = psd_sqrt(sym, /*clamp_negative=*/true);
    double trace_term = 0.0;
    for (std::size_t i = 0; i < cov_a.rows(); ++i)
        trace_term += cov_a(i, i) + cov_b(i, i) - 2.0 * root(i, i);
    const double fd = mean_term + trace_term;
    return fd < 0.0 ? 0.0 : fd;
}

// Mean Euclidean distance over randomly drawn disjoint pairs.
inline double diversity(const Matrix& feats, std::size_t num_pairs, GaussianRng& rng) {
    if (feats.rows() < 2) throw std::invalid_argument("diversity: need at least 2 vectors");
    double total = 0.0;
    for (std::size_t p = 0; p < num_pairs; ++p) {
        const std::size_t i = rng.index(feats.rows());
        std::size_t j = rng.index(feats.rows() - 1);
        if (j >= i) ++j;
        double s = 0.0;
        for (std::size_t c = 0; c < feats.cols(); ++c) {
            const double d = feats(i, c) - feats(j, c);
            s += d * d;
        }
        total += std::sqrt(s);
    }
    return total / static_cast<double>(num_pairs);
}

// Nearest-centroid label check in standardized feature space; the label-
// consistency analog of retrieval precision.
class LabelCentroids {
public:
    static LabelCentroids fit(const Matrix& train_feats, const std::vector<std::size_t>& labels,
                              std::size_t vocab) {
        if (train_feats.rows() != labels.size())
            throw std::invalid_argument("LabelCentroids::fit: feature/label count mismatch");
        LabelCentroids lc;
        lc.scale_mu_ = Matrix(1, train_feats.cols());
        lc.scale_sd_ = Matrix(1, train_feats.cols(), 1.0);
        for (std::size_t c = 0; c < train_feats.cols(); ++c) {
            double m = 0.0;
            for (std::size_t r = 0; r < train_feats.rows(); ++r) m += train_feats(r, c);
            m /= static_cast<double>(train_feats.rows());
            double v = 0.0;
            for (std::size_t r = 0; r < train_feats.rows(); ++r) {
                const double d = train_feats(r, c) - m;
                v += d * d;
            }
            v /= static_cast<double>(train_feats.rows());
            lc.scale_mu_(0, c) = m;
            lc.scale_sd_(0, c) = std::sqrt(v) > 1e-12 ? std::sqrt(v) : 1.0;
        }
        lc.centroids_ = Matrix(vocab, train_feats.cols());
        std::vector<std::size_t> counts(vocab, 0);
        for (std::size_t r = 0; r < train_feats.rows(); ++r) {
            if (labels[r] >= vocab)
                throw std::invalid_argument("LabelCentroids::fit: label id out of range");
            ++counts[labels[r]];
            for (std::size_t c = 0; c < train_feats.cols(); ++c)
                lc.centroids_(labels[r], c) += lc.standardize(train_feats(r, c), c);
        }
        for (std::size_t l = 0; l < vocab; ++l) {
            if (counts[l] == 0) continue;
            for (std::size_t c = 0; c < train_feats.cols(); ++c)
                lc.centroids_(l, c) /= static_cast<double>(counts[l]);
        }
        lc.present_.assign(vocab, false);
        for (std::size_t l = 0; l < vocab; ++l) lc.present_[l] = counts[l] > 0;
        return lc;
    }

    std::size_t nearest(const Matrix& feat) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < centroids_.rows(); ++l) {
            if (!present_[l]) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < centroids_.cols(); ++c) {
                const double d = standardize(feat(0, c), c) - centroids_(l, c);
                s += d * d;
            }
            if (s < best_d) {
                best_d = s;
                best = l;
            }
        }
        return best;
    }

    // Fraction of segments whose nearest centroid matches the intended label.
    double consistency(const std::vector<Sequence>& segments,
                       const std::vector<std::size_t>& intended) const {
        if (segments.size() != intended.size() || segments.empty())
            throw std::invalid_argument("LabelCentroids::consistency: bad inputs");
        std::size_t hit = 0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (intended[i] >= centroids_.rows())
                throw std::invalid_argument("LabelCentroids::consistency: unknown label");
            if (nearest(feature_vector(segments[i])) == intended[i]) ++hit;
        }
        return static_cast<double>(hit) / static_cast<double>(segments.size());
    }

private:
    double standardize(double v, std::size_t c) const {
        return (v - scale_mu_(0, c)) / scale_sd_(0, c);
    }

    Matrix centroids_;
    Matrix scale_mu_, scale_sd_;
    std::vector<bool> present_;
};

}  // namespace seqdiff
