#pragma once

#include <cmath>
#include <vector>

#include "matrix.hpp"

namespace seqdiff {

// Precomputed noise schedule. Index convention: tables are 1-based in t and
// stored at [t-1]; alpha_bar(0) == 1 by definition.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
        const std::size_t T = betas_.size();
        if (T < 2) throw std::invalid_argument("NoiseSchedule: T must be >= 2");
        alphas_.resize(T);
        alpha_bars_.resize(T);
        posterior_vars_.resize(T);
        double prod = 1.0;
        for (std::size_t i = 0; i < T; ++i) {
            if (!(betas_[i] > 0.0 && betas_[i] <= 0.999))
                throw std::invalid_argument("NoiseSchedule: beta out of (0, 0.999]");
            alphas_[i] = 1.0 - betas_[i];
            prod *= alphas_[i];
            alpha_bars_[i] = prod;
            const double abar_prev = (i == 0) ? 1.0 : alpha_bars_[i - 1];
            posterior_vars_[i] = (1.0 - abar_prev) / (1.0 - alpha_bars_[i]) * betas_[i];
        }
    }

    std::size_t steps() const { return betas_.size(); }

    double beta(std::size_t t) const { return betas_[check(t) - 1]; }
    double alpha(std::size_t t) const { return alphas_[check(t) - 1]; }
    double alpha_bar(std::size_t t) const {
        if (t == 0) return 1.0;
        return alpha_bars_[check(t) - 1];
    }
    double posterior_var(std::size_t t) const { return posterior_vars_[check(t) - 1]; }

    struct Entry {
        double beta, alpha, alpha_bar, alpha_bar_prev, posterior_var;
    };

    Entry lookup(std::size_t t) const {
        check(t);
        return Entry{beta(t), alpha(t), alpha_bar(t), alpha_bar(t - 1), posterior_var(t)};
    }

private:
    std::size_t check(std::size_t t) const {
        if (t < 1 || t > betas_.size())
            throw std::out_of_range("NoiseSchedule: t out of [1, T]");
        return t;
    }

    std::vector<double> betas_, alphas_, alpha_bars_, posterior_vars_;
};

// Cosine schedule: alpha_bar(t) = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2),
// offset s = 0.008, betas clipped at 0.999.
inline NoiseSchedule cosine_schedule(std::size_t T) {
    if (T < 2) throw std::invalid_argument("cosine_schedule: T must be >= 2");
    constexpr double offset = 0.008;
    auto f = [&](double t) {
        const double x = ((t / static_cast<double>(T)) + offset) / (1.0 + offset) * M_PI / 2.0;
        const double c = std::cos(x);
        return c * c;
    };
    const double f0 = f(0.0);
    std::vector<double> betas(T);
    double abar_prev = 1.0;
    for (std::size_t t = 1; t <= T; ++t) {
        const double abar = f(static_cast<double>(t)) / f0;
        double beta = 1.0 - abar / abar_prev;
        if (beta > 0.999) beta = 0.999;
        betas[t - 1] = beta;
        abar_prev *= (1.0 - beta);
    }
    return NoiseSchedule(std::move(betas));
}

}  // namespace seqdiff
