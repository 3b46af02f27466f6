#include <algorithm>
#include <catch_amalgamated.hpp>

#include "seqdiff/sampling.hpp"

using namespace seqdiff;

namespace {
const NoiseSchedule& sched100() {
    static NoiseSchedule s = cosine_schedule(100);
    return s;
}

AnalyticGaussianDenoiser two_label_denoiser() {
    return AnalyticGaussianDenoiser({{2.0, 0.5}, {-2.0, 0.5}}, sched100(), {0.0, 1.0});
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}
}  // namespace

TEST_CASE("segment plan views with a symmetric overlap") {
    SegmentPlan p = SegmentPlan::make({32, 32}, 8);
    REQUIRE(p.view(0).begin == 0);
    REQUIRE(p.view(0).end == 36);
    REQUIRE(p.view(1).begin == 28);
    REQUIRE(p.view(1).end == 64);

    SegmentPlan p3 = SegmentPlan::make({32, 32, 32}, 8);
    REQUIRE(p3.view(1).begin == 28);
    REQUIRE(p3.view(1).end == 68);
    REQUIRE(p3.view(2).begin == 60);
    REQUIRE(p3.view(2).end == 96);

    SegmentPlan p0 = SegmentPlan::make({5, 7}, 0);
    REQUIRE(p0.view(0).begin == 0);
    REQUIRE(p0.view(0).end == 5);
    REQUIRE(p0.view(1).begin == 5);
    REQUIRE(p0.view(1).end == 12);
}

TEST_CASE("segment plan validation") {
    REQUIRE_THROWS_AS(SegmentPlan::make({}, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(SegmentPlan::make({8, 8}, 3), std::invalid_argument);
    REQUIRE_THROWS_AS(SegmentPlan::make({8, 4}, 6), std::invalid_argument);
    REQUIRE_THROWS_AS(SegmentPlan::make({8, 0}, 0), std::invalid_argument);
}

TEST_CASE("covering view counts and left weights") {
    SegmentPlan p = SegmentPlan::make({32, 32}, 8);
    REQUIRE(p.covering_views(0) == 1);
    REQUIRE(p.covering_views(27) == 1);
    REQUIRE(p.covering_views(28) == 2);
    REQUIRE(p.covering_views(35) == 2);
    REQUIRE(p.covering_views(36) == 1);
    REQUIRE(p.covering_views(63) == 1);

    REQUIRE(weight_on_left(10, p, 0) == 1.0);
    REQUIRE(weight_on_left(28, p, 0) == 0.5);
    REQUIRE(weight_on_left(35, p, 0) == 0.5);
    REQUIRE(weight_on_left(36, p, 0) == 0.0);
    REQUIRE_THROWS_AS(weight_on_left(0, p, 1), std::invalid_argument);
}

TEST_CASE("split produces the planned views") {
    SegmentPlan p = SegmentPlan::make({6, 6}, 2);
    GaussianRng rng(1);
    Sequence m = gaussian_sample(rng, 12, kFrameDim);
    std::vector<Sequence> views = split(m, p);
    REQUIRE(views.size() == 2);
    REQUIRE(views[0].rows() == 7);
    REQUIRE(views[1].rows() == 7);
    REQUIRE(max_abs_diff(views[0], m.row_block(0, 7)) == 0.0);
    REQUIRE(max_abs_diff(views[1], m.row_block(5, 12)) == 0.0);
    REQUIRE_THROWS_AS(split(gaussian_sample(rng, 5, kFrameDim), p), std::invalid_argument);
}

TEST_CASE("inpaint inputs carry the reference and the history mask") {
    Matrix tail(2, kFrameDim, {1, 2, 3, 4, 5, 6, 7, 8});
    InpaintInputs in = build_inpaint_inputs(tail, 4);
    REQUIRE(in.reference.rows() == 6);
    REQUIRE(max_abs_diff(in.reference.row_block(0, 2), tail) == 0.0);
    REQUIRE(frobenius_norm(in.reference.row_block(2, 6)) == 0.0);
    const bool expect[6] = {true, true, false, false, false, false};
    for (std::size_t i = 0; i < 6; ++i) REQUIRE(in.mask.masked(i) == expect[i]);
    REQUIRE_THROWS_AS(build_inpaint_inputs(Matrix(0, kFrameDim), 4), std::invalid_argument);
    REQUIRE_THROWS_AS(build_inpaint_inputs(tail, 0), std::invalid_argument);
}

TEST_CASE("inpainting keeps the history frames pinned at every step") {
    AnalyticGaussianDenoiser den = two_label_denoiser();
    GaussianRng rng(7);
    Matrix tail = gaussian_sample(rng, 2, kFrameDim);
    GaussianRng srng(8);
    std::size_t calls = 0;
    Sequence out = sample_past_inpainting(
        den, Condition::label(0), tail, 5, sched100(), {2.0}, srng, PastContext::none(),
        [&](std::size_t, const Sequence& x0_hat) {
            ++calls;
            REQUIRE(max_abs_diff(x0_hat.row_block(0, 2), tail) == 0.0);
        });
    REQUIRE(calls == sched100().steps());
    REQUIRE(out.rows() == 5);
    REQUIRE(out.all_finite());
}

TEST_CASE("inpainting sampler is deterministic in its seed") {
    AnalyticGaussianDenoiser den = two_label_denoiser();
    PromptStream stream{{Condition::label(0), 8}, {Condition::label(1), 8}};
    GenerationResult a = sample_inpainting(den, stream, 2, sched100(), {2.0}, 5);
    GenerationResult b = sample_inpainting(den, stream, 2, sched100(), {2.0}, 5);
    GenerationResult c = sample_inpainting(den, stream, 2, sched100(), {2.0}, 6);
    REQUIRE(max_abs_diff(a.frames, b.frames) == 0.0);
    REQUIRE(max_abs_diff(a.frames, c.frames) > 0.0);
    REQUIRE(a.sampler == "inpainting");
    REQUIRE(a.boundaries == std::vector<std::size_t>{8});
    REQUIRE(a.transition_distances.size() == 1);
}

TEST_CASE("guided prediction: scale 1 is the conditional call, scale 2 extrapolates") {
    AnalyticGaussianDenoiser den = two_label_denoiser();
    GaussianRng rng(9);
    Sequence x_t = gaussian_sample(rng, 3, kFrameDim);
    Sequence cond = den.predict_x0(x_t, 40, Condition::label(0), PastContext::none());
    Sequence uncond = den.predict_x0(x_t, 40, Condition::unconditional(), PastContext::none());
    Sequence g1 = guided_predict(den, x_t, 40, Condition::label(0), PastContext::none(), {1.0});
    REQUIRE(max_abs_diff(g1, cond) == 0.0);
    Sequence g2 = guided_predict(den, x_t, 40, Condition::label(0), PastContext::none(), {2.0});
    Sequence manual = 2.0 * cond - uncond;
    REQUIRE(max_abs_diff(g2, manual) < 1e-14);
}

TEST_CASE("compositional with zero overlap equals independent sampling bit for bit") {
    AnalyticGaussianDenoiser den = two_label_denoiser();
    PromptStream stream{{Condition::label(0), 12}, {Condition::label(1), 10}};
    const std::uint64_t seed = 21;
    GenerationResult indep = sample_autoregressive(den, stream, sched100(), {1.0}, 0, seed);
    GenerationResult comp =
        sample_compositional(den, stream, 0, sched100(), {1.0}, seed);
    REQUIRE(indep.sampler == "independent");
    REQUIRE(comp.sampler == "compositional");
    REQUIRE(max_abs_diff(indep.frames, comp.frames) == 0.0);
}

TEST_CASE("compositional with one segment equals a plain chain bit for bit") {
    AnalyticGaussianDenoiser den = two_label_denoiser();
    PromptStream stream{{Condition::label(1), 9}};
    const std::uint64_t seed = 3;
    GenerationResult comp = sample_compositional(den, stream, 4, sched100(), {2.0}, seed);
    GaussianRng rng(derive_seed(seed, 0));
    Sequence chain =
        sample_chain(den, Condition::label(1), PastContext::none(), 9, sched100(), {2.0}, rng);
    REQUIRE(max_abs_diff(comp.frames, chain) == 0.0);
    REQUIRE(comp.boundaries.empty());
}

TEST_CASE("compositional overlap averaging pulls the boundary toward the joint mean") {
    // symmetric +/-2 labels: in the overlap the composed terminal mean is near 0,
    // so the boundary jump is far smaller than with independent segments
    AnalyticGaussianDenoiser den = two_label_denoiser();
    PromptStream stream{{Condition::label(0), 16}, {Condition::label(1), 16}};
    std::vector<double> d_comp, d_indep;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        d_comp.push_back(
            sample_compositional(den, stream, 8, sched100(), {1.0}, seed).transition_distances[0]);
        d_indep.push_back(
            sample_autoregressive(den, stream, sched100(), {1.0}, 0, seed).transition_distances[0]);
    }
    REQUIRE(median(d_comp) < median(d_indep));
}

TEST_CASE("inpainting shrinks the boundary jump versus independent sampling") {
    AnalyticGaussianDenoiser den = two_label_denoiser();
    PromptStream stream{{Condition::label(0), 16}, {Condition::label(1), 16}};
    std::vector<double> d_inp, d_indep;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        d_inp.push_back(
            sample_inpainting(den, stream, 2, sched100(), {1.0}, seed).transition_distances[0]);
        d_indep.push_back(
            sample_autoregressive(den, stream, sched100(), {1.0}, 0, seed).transition_distances[0]);
    }
    REQUIRE(median(d_inp) < median(d_indep));
}

TEST_CASE("stream validation and result bookkeeping") {
    AnalyticGaussianDenoiser den = two_label_denoiser();
    REQUIRE_THROWS_AS(sample_autoregressive(den, {}, sched100(), {1.0}, 0, 0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        sample_autoregressive(den, {{Condition::label(0), 0}}, sched100(), {1.0}, 0, 0),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        sample_inpainting(den, {{Condition::label(0), 4}}, 0, sched100(), {1.0}, 0),
        std::invalid_argument);

    PromptStream stream{{Condition::label(0), 4}, {Condition::label(1), 5},
                        {Condition::label(0), 6}};
    GenerationResult r = sample_autoregressive(den, stream, sched100(), {1.0}, 2, 1);
    REQUIRE(r.sampler == "autoregressive");
    REQUIRE(r.frames.rows() == 15);
    REQUIRE(r.boundaries == std::vector<std::size_t>{4, 9});
    REQUIRE(r.transition_distances.size() == 2);
}
