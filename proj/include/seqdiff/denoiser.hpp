#pragma once

#include <cstdint>
#include <vector>

#include "diffusion.hpp"
#include "matrix.hpp"
#include "schedule.hpp"

namespace seqdiff {

// Segment label, or the distinguished unconditional token used for
// classifier-free guidance.
struct Condition {
    std::size_t label_id = 0;
    bool is_unconditional = false;

    static Condition label(std::size_t id) { return Condition{id, false}; }
    static Condition unconditional() { return Condition{0, true}; }
};

// Last h frames of the previous segment; h = 0 means absent (first segment).
struct PastContext {
    Matrix frames;  // h x d

    PastContext() : frames(0, kFrameDim) {}
    explicit PastContext(Matrix f) : frames(std::move(f)) {}

    std::size_t h() const { return frames.rows(); }
    static PastContext none() { return PastContext(); }
};

// x0-predicting denoiser contract: pure function of (params, inputs),
// output shape equals the input frame-block shape.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Sequence predict_x0(const Sequence& x_t, std::size_t t, const Condition& cond,
                                const PastContext& past) const = 0;
};

// Closed-form posterior mean E[x0 | x_t] when per-label data is N(mu_c, sigma0^2 I):
//   x0hat = (sqrt(abar_t) sigma0^2 x_t + (1 - abar_t) mu_c) / (abar_t sigma0^2 + 1 - abar_t).
// Verification oracle for the sampling strategies.
class AnalyticGaussianDenoiser : public Denoiser {
public:
    struct LabelParams {
        double mu = 0.0;
        double sigma0 = 1.0;
    };

    AnalyticGaussianDenoiser(std::vector<LabelParams> labels, const NoiseSchedule& schedule,
                             LabelParams uncond = {0.0, 1.0})
        : labels_(std::move(labels)), uncond_(uncond), schedule_(&schedule) {}

    Sequence predict_x0(const Sequence& x_t, std::size_t t, const Condition& cond,
                        const PastContext& /*past*/) const override {
        const LabelParams& lp = resolve(cond);
        const double abar = schedule_->alpha_bar(t);
        const double s2 = lp.sigma0 * lp.sigma0;
        const double denom = abar * s2 + (1.0 - abar);
        const double cx = std::sqrt(abar) * s2 / denom;
        const double cm = (1.0 - abar) / denom;
        Sequence out(x_t.rows(), x_t.cols());
        for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = cx * x_t.at(i) + cm * lp.mu;
        return out;
    }

private:
    const LabelParams& resolve(const Condition& cond) const {
        if (cond.is_unconditional) return uncond_;
        if (cond.label_id >= labels_.size())
            throw std::invalid_argument("AnalyticGaussianDenoiser: unknown label " +
                                        std::to_string(cond.label_id));
        return labels_[cond.label_id];
    }

    std::vector<LabelParams> labels_;
    LabelParams uncond_;
    const NoiseSchedule* schedule_;
};

}  // namespace seqdiff
