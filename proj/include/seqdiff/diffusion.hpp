#pragma once

#include <cmath>

#include "matrix.hpp"
#include "rng.hpp"
#include "schedule.hpp"

namespace seqdiff {

// A sequence is an L x d frame matrix; toy frame is (x, y, vx, vy), d = 4.
using Sequence = Matrix;

constexpr std::size_t kFrameDim = 4;

struct GuidanceConfig {
    double scale = 1.0;
};

// Closed-form forward marginal: x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
inline Sequence q_sample(const Sequence& x0, std::size_t t, const Sequence& eps,
                         const NoiseSchedule& schedule) {
    check_same_shape(x0, eps, "q_sample");
    const double abar = schedule.alpha_bar(t);
    const double a = std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    Sequence out(x0.rows(), x0.cols());
    for (std::size_t i = 0; i < x0.size(); ++i) out.at(i) = a * x0.at(i) + b * eps.at(i);
    return out;
}

inline Sequence x0_from_eps(const Sequence& x_t, const Sequence& eps, std::size_t t,
                            const NoiseSchedule& schedule) {
    check_same_shape(x_t, eps, "x0_from_eps");
    const double abar = schedule.alpha_bar(t);
    const double inv_sqrt_abar = 1.0 / std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    Sequence out(x_t.rows(), x_t.cols());
    for (std::size_t i = 0; i < x_t.size(); ++i)
        out.at(i) = (x_t.at(i) - b * eps.at(i)) * inv_sqrt_abar;
    return out;
}

inline Sequence eps_from_x0(const Sequence& x_t, const Sequence& x0, std::size_t t,
                            const NoiseSchedule& schedule) {
    check_same_shape(x_t, x0, "eps_from_x0");
    const double abar = schedule.alpha_bar(t);
    if (!(abar < 1.0)) throw std::invalid_argument("eps_from_x0: alpha_bar must be < 1");
    const double a = std::sqrt(abar);
    const double inv_b = 1.0 / std::sqrt(1.0 - abar);
    Sequence out(x_t.rows(), x_t.cols());
    for (std::size_t i = 0; i < x_t.size(); ++i)
        out.at(i) = (x_t.at(i) - a * x0.at(i)) * inv_b;
    return out;
}

// Posterior mean in x0-parameterization:
// mu = (sqrt(abar_{t-1}) beta_t x0hat + sqrt(alpha_t) (1 - abar_{t-1}) x_t) / (1 - abar_t).
inline Sequence posterior_mean(const Sequence& x_t, const Sequence& x0_hat, std::size_t t,
                               const NoiseSchedule& schedule) {
    check_same_shape(x_t, x0_hat, "posterior_mean");
    const auto e = schedule.lookup(t);
    const double c0 = std::sqrt(e.alpha_bar_prev) * e.beta / (1.0 - e.alpha_bar);
    const double ct = std::sqrt(e.alpha) * (1.0 - e.alpha_bar_prev) / (1.0 - e.alpha_bar);
    Sequence out(x_t.rows(), x_t.cols());
    for (std::size_t i = 0; i < x_t.size(); ++i)
        out.at(i) = c0 * x0_hat.at(i) + ct * x_t.at(i);
    return out;
}

// One ancestral step x_t -> x_{t-1}. Terminal step (t = 1) adds no noise,
// so x_0 = x0_hat exactly.
inline Sequence ancestral_step(const Sequence& x_t, const Sequence& x0_hat, std::size_t t,
                               const NoiseSchedule& schedule, GaussianRng& rng) {
    Sequence mean = posterior_mean(x_t, x0_hat, t, schedule);
    const double var = schedule.posterior_var(t);
    if (var == 0.0) return mean;
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < mean.size(); ++i) mean.at(i) += sd * rng.normal();
    return mean;
}

// Classifier-free guidance in x0-space: out = s*cond - (s-1)*uncond.
inline Sequence cfg_combine(const Sequence& pred_cond, const Sequence& pred_uncond,
                            const GuidanceConfig& g) {
    check_same_shape(pred_cond, pred_uncond, "cfg_combine");
    const double s = g.scale;
    Sequence out(pred_cond.rows(), pred_cond.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.at(i) = s * pred_cond.at(i) - (s - 1.0) * pred_uncond.at(i);
    return out;
}

}  // namespace seqdiff
