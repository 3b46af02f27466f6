#pragma once

#include <cmath>

#include "matrix.hpp"

namespace seqdiff {

struct AdamWConfig {
    double lr = 1e-4;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Decoupled weight decay with bias correction. One state per parameter list;
// moments are lazily shaped on the first step.
class AdamWState {
public:
    std::uint64_t step_count() const { return step_; }

    // Returns false and leaves params/state untouched when any gradient is
    // non-finite.
    bool step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
              const AdamWConfig& cfg) {
        if (params.size() != grads.size())
            throw std::invalid_argument("AdamWState::step: param/grad count mismatch");
        for (std::size_t p = 0; p < params.size(); ++p) {
            check_same_shape(params[p], grads[p], "AdamWState::step");
            if (!grads[p].all_finite()) return false;
        }
        if (m_.empty()) {
            for (const auto& prm : params) {
                m_.emplace_back(prm.rows(), prm.cols());
                v_.emplace_back(prm.rows(), prm.cols());
            }
        }
        ++step_;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
        for (std::size_t p = 0; p < params.size(); ++p) {
            for (std::size_t i = 0; i < params[p].size(); ++i) {
                const double g = grads[p].at(i);
                double& m = m_[p].at(i);
                double& v = v_[p].at(i);
                m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
                v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
                const double mhat = m / bc1;
                const double vhat = v / bc2;
                double& th = params[p].at(i);
                th -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * th);
            }
        }
        return true;
    }

private:
    std::vector<Matrix> m_, v_;
    std::uint64_t step_ = 0;
};

}  // namespace seqdiff
