#pragma once

#include <functional>
#include <string>

#include "denoiser.hpp"
#include "diffusion.hpp"
#include "rng.hpp"

namespace seqdiff {

struct PromptEntry {
    Condition cond;
    std::size_t length = 0;
};

using PromptStream = std::vector<PromptEntry>;

inline void validate_stream(const PromptStream& stream) {
    if (stream.empty()) throw std::invalid_argument("prompt stream is empty");
    for (const auto& e : stream)
        if (e.length < 1) throw std::invalid_argument("prompt stream: segment length must be >= 1");
}

struct GenerationResult {
    Sequence frames;                     // concatenated long sequence, sum(L_i) x d
    std::vector<std::size_t> boundaries; // start index of segments 2..N, strictly increasing
    std::string sampler;
    std::vector<double> transition_distances;  // one per boundary
};

inline double boundary_distance(const Sequence& m, std::size_t boundary) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const double d = m(boundary, c) - m(boundary - 1, c);
        s += d * d;
    }
    return std::sqrt(s);
}

inline void finish_result(GenerationResult& r, const std::vector<std::size_t>& lengths) {
    std::size_t off = 0;
    for (std::size_t i = 0; i + 1 < lengths.size(); ++i) {
        off += lengths[i];
        r.boundaries.push_back(off);
        r.transition_distances.push_back(boundary_distance(r.frames, off));
    }
}

// Conditional prediction with classifier-free guidance applied in x0-space.
// s = 1 short-circuits to the conditional call.
inline Sequence guided_predict(const Denoiser& den, const Sequence& x_t, std::size_t t,
                               const Condition& cond, const PastContext& past,
                               const GuidanceConfig& g) {
    Sequence c = den.predict_x0(x_t, t, cond, past);
    if (g.scale == 1.0 || cond.is_unconditional) return c;
    Sequence u = den.predict_x0(x_t, t, Condition::unconditional(), past);
    return cfg_combine(c, u, g);
}

// Plain ancestral chain of length L from pure noise.
inline Sequence sample_chain(const Denoiser& den, const Condition& cond, const PastContext& past,
                             std::size_t length, const NoiseSchedule& schedule,
                             const GuidanceConfig& g, GaussianRng& rng) {
    Sequence x = gaussian_sample(rng, length, kFrameDim);
    for (std::size_t t = schedule.steps(); t >= 1; --t) {
        Sequence x0_hat = guided_predict(den, x, t, cond, past, g);
        x = ancestral_step(x, x0_hat, t, schedule, rng);
    }
    return x;
}

// Autoregressive sampling: each segment is a fresh chain; segments after the
// first may condition on the last h frames of the previous generated segment.
// h = 0 reproduces the independent baseline.
inline GenerationResult sample_autoregressive(const Denoiser& den, const PromptStream& stream,
                                              const NoiseSchedule& schedule,
                                              const GuidanceConfig& g, std::size_t h,
                                              std::uint64_t seed) {
    validate_stream(stream);
    std::vector<std::size_t> lengths;
    std::size_t total = 0;
    for (const auto& e : stream) {
        lengths.push_back(e.length);
        total += e.length;
    }
    GenerationResult result;
    result.sampler = h == 0 ? "independent" : "autoregressive";
    result.frames = Sequence(total, kFrameDim);
    std::size_t off = 0;
    Sequence prev;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        GaussianRng rng(derive_seed(seed, i));
        PastContext past = PastContext::none();
        if (h > 0 && i > 0) {
            if (prev.rows() < h)
                throw std::invalid_argument("sample_autoregressive: previous segment shorter than h");
            past = PastContext(prev.row_block(prev.rows() - h, prev.rows()));
        }
        Sequence seg = sample_chain(den, stream[i].cond, past, stream[i].length, schedule, g, rng);
        result.frames.set_row_block(off, seg);
        off += seg.rows();
        prev = std::move(seg);
    }
    finish_result(result, lengths);
    return result;
}

// ---------------------------------------------------------------------------
// Past Inpainting Sampling

struct InpaintMask {
    std::size_t history = 0;  // first `history` frames are 1, the rest 0
    std::size_t total = 0;

    bool masked(std::size_t i) const { return i < history; }
};

struct InpaintInputs {
    Sequence reference;  // (h + L_Y) x d: previous tail then zeros
    InpaintMask mask;
};

inline InpaintInputs build_inpaint_inputs(const Matrix& x_prev_tail, std::size_t l_y) {
    const std::size_t h = x_prev_tail.rows();
    if (h < 1) throw std::invalid_argument("build_inpaint_inputs: history must have h >= 1 frames");
    if (l_y < 1) throw std::invalid_argument("build_inpaint_inputs: L_Y must be >= 1");
    InpaintInputs out;
    out.reference = Sequence(h + l_y, x_prev_tail.cols());
    out.reference.set_row_block(0, x_prev_tail);
    out.mask = InpaintMask{h, h + l_y};
    return out;
}

// Reverse chain over h + L_Y frames; the predicted clean sequence has its
// first h frames overwritten with the reference at every step. Returns the
// final L_Y frames. `observe` (if set) sees the overwritten x0hat at each step.
inline Sequence sample_past_inpainting(
    const Denoiser& den, const Condition& cond_y, const Matrix& x_prev_tail, std::size_t l_y,
    const NoiseSchedule& schedule, const GuidanceConfig& g, GaussianRng& rng,
    const PastContext& past = PastContext::none(),
    const std::function<void(std::size_t, const Sequence&)>& observe = nullptr) {
    InpaintInputs in = build_inpaint_inputs(x_prev_tail, l_y);
    const std::size_t h = in.mask.history;
    Sequence x = gaussian_sample(rng, in.mask.total, kFrameDim);
    for (std::size_t t = schedule.steps(); t >= 1; --t) {
        Sequence x0_hat = guided_predict(den, x, t, cond_y, past, g);
        x0_hat.set_row_block(0, x_prev_tail);  // m .* X_ref + (1 - m) .* x0hat
        if (observe) observe(t, x0_hat);
        x = ancestral_step(x, x0_hat, t, schedule, rng);
    }
    return x.row_block(h, h + l_y);
}

// Whole-stream inpainting sampler: plain chain for the first segment, past
// inpainting for each following one.
inline GenerationResult sample_inpainting(const Denoiser& den, const PromptStream& stream,
                                          std::size_t h, const NoiseSchedule& schedule,
                                          const GuidanceConfig& g, std::uint64_t seed,
                                          std::size_t model_past_frames = 0) {
    validate_stream(stream);
    if (h < 1) throw std::invalid_argument("sample_inpainting: h must be >= 1");
    std::vector<std::size_t> lengths;
    std::size_t total = 0;
    for (const auto& e : stream) {
        lengths.push_back(e.length);
        total += e.length;
    }
    GenerationResult result;
    result.sampler = "inpainting";
    result.frames = Sequence(total, kFrameDim);
    std::size_t off = 0;
    Sequence prev;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        GaussianRng rng(derive_seed(seed, i));
        Sequence seg;
        if (i == 0) {
            seg = sample_chain(den, stream[i].cond, PastContext::none(), stream[i].length, schedule,
                               g, rng);
        } else {
            if (prev.rows() < h)
                throw std::invalid_argument("sample_inpainting: previous segment shorter than h");
            Matrix tail = prev.row_block(prev.rows() - h, prev.rows());
            PastContext past = PastContext::none();
            if (model_past_frames > 0 && prev.rows() >= model_past_frames)
                past = PastContext(prev.row_block(prev.rows() - model_past_frames, prev.rows()));
            seg = sample_past_inpainting(den, stream[i].cond, tail, stream[i].length, schedule, g,
                                         rng, past);
        }
        result.frames.set_row_block(off, seg);
        off += seg.rows();
        prev = std::move(seg);
    }
    finish_result(result, lengths);
    return result;
}

// ---------------------------------------------------------------------------
// Compositional Transition Sampling

// Overlapping per-segment views over the concatenated sequence M: view i is
// the segment extended by L_Tr/2 frames into each neighbour, clipped to M.
struct SegmentPlan {
    std::vector<std::size_t> offsets;  // segment start indices in M
    std::vector<std::size_t> lengths;
    std::size_t l_tr = 0;
    std::size_t total = 0;

    struct View {
        std::size_t begin, end;  // half-open frame range in M
    };

    static SegmentPlan make(const std::vector<std::size_t>& lengths, std::size_t l_tr) {
        if (lengths.empty()) throw std::invalid_argument("SegmentPlan: no segments");
        if (l_tr % 2 != 0) throw std::invalid_argument("SegmentPlan: L_Tr must be even");
        SegmentPlan p;
        p.l_tr = l_tr;
        p.lengths = lengths;
        for (std::size_t len : lengths) {
            if (len < 1) throw std::invalid_argument("SegmentPlan: empty segment");
            if (len < l_tr)
                throw std::invalid_argument("SegmentPlan: L_Tr exceeds a segment length");
            p.offsets.push_back(p.total);
            p.total += len;
        }
        return p;
    }

    std::size_t segments() const { return lengths.size(); }

    View view(std::size_t i) const {
        const std::size_t half = l_tr / 2;
        const std::size_t begin = i == 0 ? 0 : offsets[i] - half;
        const std::size_t end =
            i + 1 == lengths.size() ? total : offsets[i] + lengths[i] + half;
        return View{begin, end};
    }

    std::size_t covering_views(std::size_t frame) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < segments(); ++i) {
            View v = view(i);
            if (frame >= v.begin && frame < v.end) ++n;
        }
        return n;
    }
};

inline std::vector<Sequence> split(const Sequence& m, const SegmentPlan& plan) {
    if (m.rows() != plan.total) throw std::invalid_argument("split: plan does not match M");
    std::vector<Sequence> views;
    for (std::size_t i = 0; i < plan.segments(); ++i) {
        SegmentPlan::View v = plan.view(i);
        views.push_back(m.row_block(v.begin, v.end));
    }
    return views;
}

// Weight of the left view at frame i around the boundary between segments k
// and k+1: 1 left-only, 1/2 in the L_Tr overlap, 0 right-only.
inline double weight_on_left(std::size_t frame, const SegmentPlan& plan, std::size_t k) {
    if (k + 1 >= plan.segments()) throw std::invalid_argument("weight_on_left: bad boundary");
    const SegmentPlan::View left = plan.view(k);
    const SegmentPlan::View right = plan.view(k + 1);
    if (frame < right.begin) return 1.0;
    if (frame >= left.end) return 0.0;
    return 0.5;
}

enum class PastMode {
    kNone,            // no past token during composition
    kCurrentIterate,  // feed the h frames of M_t preceding each view
};

// One-shot joint sampling over the whole concatenated sequence: per step,
// denoise each overlapping view under its own condition, convert to per-frame
// posterior means, average the means in the overlaps, then draw the next
// iterate with variance beta_tilde.
inline GenerationResult sample_compositional(const Denoiser& den, const PromptStream& stream,
                                             std::size_t l_tr, const NoiseSchedule& schedule,
                                             const GuidanceConfig& g, std::uint64_t seed,
                                             PastMode past_mode = PastMode::kNone,
                                             std::size_t past_h = 0) {
    validate_stream(stream);
    std::vector<std::size_t> lengths;
    for (const auto& e : stream) lengths.push_back(e.length);
    SegmentPlan plan = SegmentPlan::make(lengths, l_tr);
    const std::size_t n = plan.segments();

    // per-segment seed streams; noise is always drawn per segment block so the
    // L_Tr = 0 case is bit-identical to independent sampling
    std::vector<GaussianRng> rngs;
    for (std::size_t i = 0; i < n; ++i) rngs.emplace_back(derive_seed(seed, i));

    Sequence m(plan.total, kFrameDim);
    for (std::size_t i = 0; i < n; ++i)
        m.set_row_block(plan.offsets[i], gaussian_sample(rngs[i], plan.lengths[i], kFrameDim));

    for (std::size_t t = schedule.steps(); t >= 1; --t) {
        std::vector<Sequence> means(n);
        for (std::size_t i = 0; i < n; ++i) {
            SegmentPlan::View v = plan.view(i);
            Sequence x_view = m.row_block(v.begin, v.end);
            PastContext past = PastContext::none();
            if (past_mode == PastMode::kCurrentIterate && past_h > 0 && v.begin >= past_h)
                past = PastContext(m.row_block(v.begin - past_h, v.begin));
            Sequence x0_hat = guided_predict(den, x_view, t, stream[i].cond, past, g);
            means[i] = posterior_mean(x_view, x0_hat, t, schedule);
        }
        Sequence composed(plan.total, kFrameDim);
        for (std::size_t f = 0; f < plan.total; ++f) {
            std::size_t cover = 0;
            std::size_t only = 0;
            for (std::size_t i = 0; i < n; ++i) {
                SegmentPlan::View v = plan.view(i);
                if (f >= v.begin && f < v.end) {
                    ++cover;
                    only = i;
                }
            }
            if (cover == 1) {
                SegmentPlan::View v = plan.view(only);
                for (std::size_t c = 0; c < kFrameDim; ++c)
                    composed(f, c) = means[only](f - v.begin, c);
            } else {
                const double w = 1.0 / static_cast<double>(cover);
                for (std::size_t i = 0; i < n; ++i) {
                    SegmentPlan::View v = plan.view(i);
                    if (f >= v.begin && f < v.end)
                        for (std::size_t c = 0; c < kFrameDim; ++c)
                            composed(f, c) += w * means[i](f - v.begin, c);
                }
            }
        }
        const double var = schedule.posterior_var(t);
        if (var > 0.0) {
            const double sd = std::sqrt(var);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t f = plan.offsets[i]; f < plan.offsets[i] + plan.lengths[i]; ++f)
                    for (std::size_t c = 0; c < kFrameDim; ++c)
                        composed(f, c) += sd * rngs[i].normal();
        }
        m = std::move(composed);
    }

    GenerationResult result;
    result.sampler = "compositional";
    result.frames = std::move(m);
    finish_result(result, lengths);
    return result;
}

}  // namespace seqdiff
