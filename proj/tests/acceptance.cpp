// Acceptance suite: one pass/fail line per criterion, exit 0 only if all pass.

#include <chrono>
#include <iostream>

#include "seqdiff/data.hpp"
#include "seqdiff/eval.hpp"
#include "seqdiff/metrics.hpp"
#include "seqdiff/sampling.hpp"
#include "seqdiff/train.hpp"

using namespace seqdiff;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int g_failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << " " << what;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++g_failures;
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

// ---------------------------------------------------------------------------
// 1. Gaussian-oracle sampling recovers the data distribution.

void criterion_1_oracle_sampling(const NoiseSchedule& schedule) {
    const auto start = Clock::now();
    AnalyticGaussianDenoiser den({{3.0, 0.5}}, schedule);
    const std::size_t chains = 10000;
    std::vector<double> terminal;
    terminal.reserve(chains * kFrameDim);
    for (std::size_t i = 0; i < chains; ++i) {
        GaussianRng rng(derive_seed(11, i));
        Sequence x = sample_chain(den, Condition::label(0), PastContext::none(), 1, schedule,
                                  {1.0}, rng);
        for (std::size_t c = 0; c < kFrameDim; ++c) terminal.push_back(x(0, c));
    }
    double mean = 0.0;
    for (double v : terminal) mean += v;
    mean /= static_cast<double>(terminal.size());
    double var = 0.0;
    for (double v : terminal) var += (v - mean) * (v - mean);
    var /= static_cast<double>(terminal.size());
    const double sd = std::sqrt(var);
    const double elapsed = seconds_since(start);
    const bool ok = std::abs(mean - 3.0) <= 0.02 && std::abs(sd - 0.5) <= 0.05 * 0.5 &&
                    elapsed < 60.0;
    report(1, ok, "oracle sampling recovers N(3, 0.5^2)",
           "mean " + fmt(mean) + ", sd " + fmt(sd) + ", " + fmt(elapsed) + "s");
}

// ---------------------------------------------------------------------------
// 2. Composition oracle: averaged posterior means of symmetric denoisers give
//    overlap terminal mean 0, non-overlap frames keep their own means.

void criterion_2_composition_oracle(const NoiseSchedule& schedule) {
    AnalyticGaussianDenoiser den({{-2.0, 0.5}, {2.0, 0.5}}, schedule);
    PromptStream stream{{Condition::label(0), 8}, {Condition::label(1), 8}};
    const std::size_t l_tr = 4;
    SegmentPlan plan = SegmentPlan::make({8, 8}, l_tr);
    const std::size_t chains = 10000;
    Sequence sum(16, kFrameDim);
    for (std::size_t i = 0; i < chains; ++i) {
        GenerationResult r =
            sample_compositional(den, stream, l_tr, schedule, {1.0}, derive_seed(22, i));
        sum = sum + r.frames;
    }
    const double inv = 1.0 / static_cast<double>(chains);
    double worst_overlap = 0.0, worst_left = 0.0, worst_right = 0.0;
    for (std::size_t f = 0; f < 16; ++f) {
        for (std::size_t c = 0; c < kFrameDim; ++c) {
            const double m = sum(f, c) * inv;
            if (plan.covering_views(f) == 2)
                worst_overlap = std::max(worst_overlap, std::abs(m - 0.0));
            else if (f < 8)
                worst_left = std::max(worst_left, std::abs(m - (-2.0)));
            else
                worst_right = std::max(worst_right, std::abs(m - 2.0));
        }
    }
    const bool ok = worst_overlap <= 0.05 && worst_left <= 0.05 && worst_right <= 0.05;
    report(2, ok, "composed overlap mean is 0, flanks keep their targets",
           "overlap " + fmt(worst_overlap) + ", left " + fmt(worst_left) + ", right " +
               fmt(worst_right));
}

// ---------------------------------------------------------------------------
// 3. Inpainting pins the history frames exactly at every reverse step.

void criterion_3_inpainting_exactness(const NoiseSchedule& schedule) {
    AnalyticGaussianDenoiser den({{1.0, 0.5}}, schedule);
    GaussianRng tail_rng(31);
    Matrix tail = gaussian_sample(tail_rng, 2, kFrameDim);
    GaussianRng rng(32);
    std::size_t steps_checked = 0;
    bool pinned = true;
    Sequence final_full;
    sample_past_inpainting(den, Condition::label(0), tail, 6, schedule, {1.0}, rng,
                           PastContext::none(),
                           [&](std::size_t t, const Sequence& x0_hat) {
                               ++steps_checked;
                               for (std::size_t r = 0; r < 2; ++r)
                                   for (std::size_t c = 0; c < kFrameDim; ++c)
                                       if (x0_hat(r, c) != tail(r, c)) pinned = false;
                               if (t == 1) final_full = x0_hat;
                           });
    // the t = 1 step has zero posterior variance, so the chain's final state is
    // exactly the last overwritten prediction: its prefix is the tail, bitwise
    bool prefix_exact = final_full.rows() == 8 &&
                        max_abs_diff(final_full.row_block(0, 2), tail) == 0.0;
    const bool ok = pinned && prefix_exact && steps_checked == schedule.steps();
    report(3, ok, "inpainting pins history frames to the reference at every step",
           std::to_string(steps_checked) + " steps checked");
}

// ---------------------------------------------------------------------------
// 4. Transition-distance ordering with the trained toy model.

struct ToyWorld {
    PCMDM model;
    std::vector<LabeledStream> train_streams;
    std::vector<LabeledStream> test_streams;
    EvalReport report;
    double train_seconds = 0.0;
    double eval_seconds = 0.0;
};

ToyWorld build_toy_world(const NoiseSchedule& schedule) {
    ToyWorld w;
    GeneratorConfig gcfg;
    gcfg.num_streams = 250;
    gcfg.min_segments = 2;
    gcfg.max_segments = 2;
    gcfg.min_length = 16;
    gcfg.max_length = 16;
    gcfg.seed = 1001;
    w.train_streams = gen_dataset(gcfg);
    gcfg.num_streams = 120;
    gcfg.seed = 2002;
    w.test_streams = gen_dataset(gcfg);

    PCMDMConfig mcfg;
    mcfg.token_dim = 32;
    mcfg.blocks = 2;
    mcfg.heads = 4;
    mcfg.ff_dim = 64;
    mcfg.vocab = 8;
    mcfg.past_frames = 2;
    GaussianRng init_rng(41);
    w.model = PCMDM::init(mcfg, init_rng);

    TrainOptions opt;
    opt.steps = 1200;
    opt.batch = 8;
    opt.lr = 2e-3;
    opt.log_every = 0;
    GaussianRng train_rng(42);
    const auto t0 = Clock::now();
    train_pcmdm(w.model, make_train_items(w.train_streams, 2), schedule, opt, train_rng);
    w.train_seconds = seconds_since(t0);

    SamplerSpec indep;
    indep.kind = "independent";
    indep.s = 2.0;
    SamplerSpec inp = indep;
    inp.kind = "inpainting";
    inp.h = 2;
    inp.model_past_frames = 2;
    SamplerSpec comp = indep;
    comp.kind = "compositional";
    comp.l_tr = 4;
    comp.model_past_frames = 2;
    const auto t1 = Clock::now();
    w.report = run_eval(w.model, {indep, inp, comp}, w.train_streams, w.test_streams, schedule,
                        200, 77);
    w.eval_seconds = seconds_since(t1);
    return w;
}

const EvalRow* find_row(const EvalReport& report, const std::string& kind) {
    for (const auto& r : report.rows)
        if (r.sampler == kind) return &r;
    return nullptr;
}

void criterion_4_ordering(const ToyWorld& w) {
    const EvalRow* ind = find_row(w.report, "independent");
    const EvalRow* inp = find_row(w.report, "inpainting");
    const EvalRow* comp = find_row(w.report, "compositional");
    const double total = w.train_seconds + w.eval_seconds;
    bool ok = ind && inp && comp && total < 600.0;
    if (ok)
        ok = comp->transition_median < 0.2 * ind->transition_median &&
             inp->transition_median < 0.7 * ind->transition_median &&
             comp->transition_median < inp->transition_median;
    report(4, ok, "median transition distance: compositional < inpainting < independent",
           "comp " + fmt(comp ? comp->transition_median : -1.0) + ", inp " +
               fmt(inp ? inp->transition_median : -1.0) + ", indep " +
               fmt(ind ? ind->transition_median : -1.0) + ", " + fmt(total) + "s");
}

// ---------------------------------------------------------------------------
// 5. Exact reductions.

void criterion_5_reductions(const NoiseSchedule& schedule) {
    AnalyticGaussianDenoiser den({{-2.0, 0.5}, {2.0, 0.5}}, schedule);
    PromptStream stream{{Condition::label(0), 10}, {Condition::label(1), 12}};
    GenerationResult indep = sample_autoregressive(den, stream, schedule, {1.0}, 0, 91);
    GenerationResult comp = sample_compositional(den, stream, 0, schedule, {1.0}, 91);
    const bool ltr0_exact = max_abs_diff(indep.frames, comp.frames) == 0.0;

    // s = 1 chain vs an explicit conditional-only chain on the same rng stream
    GaussianRng r1(55), r2(55);
    Sequence guided = sample_chain(den, Condition::label(1), PastContext::none(), 7, schedule,
                                   {1.0}, r1);
    Sequence x = gaussian_sample(r2, 7, kFrameDim);
    for (std::size_t t = schedule.steps(); t >= 1; --t) {
        Sequence x0_hat = den.predict_x0(x, t, Condition::label(1), PastContext::none());
        x = ancestral_step(x, x0_hat, t, schedule, r2);
    }
    const bool s1_exact = max_abs_diff(guided, x) == 0.0;
    report(5, ltr0_exact && s1_exact,
           "L_Tr = 0 equals independent and s = 1 equals conditional-only, bit for bit",
           std::string("ltr0 ") + (ltr0_exact ? "exact" : "differs") + ", s1 " +
               (s1_exact ? "exact" : "differs"));
}

// ---------------------------------------------------------------------------
// 6. Full-network gradients vs central finite differences, 5 random batches.

void criterion_6_gradients() {
    PCMDMConfig cfg;
    cfg.token_dim = 8;
    cfg.blocks = 2;
    cfg.heads = 2;
    cfg.ff_dim = 16;
    cfg.vocab = 3;
    cfg.past_frames = 2;
    GaussianRng rng(61);
    PCMDM model = PCMDM::init(cfg, rng);

    double worst = 0.0;
    for (int batch = 0; batch < 5; ++batch) {
        Matrix x_t = gaussian_sample(rng, 4, kFrameDim);
        Matrix y0 = gaussian_sample(rng, 4, kFrameDim);
        Condition cond = batch % 3 == 2 ? Condition::unconditional()
                                        : Condition::label(static_cast<std::size_t>(batch) % 3);
        PastContext past = batch % 2 == 0 ? PastContext(gaussian_sample(rng, 2, kFrameDim))
                                          : PastContext::none();
        const std::size_t t = 1 + static_cast<std::size_t>(batch) * 19;

        auto loss_value = [&]() {
            Tape tape;
            auto pids = model.leaf_params(tape);
            auto loss = tape.mse(model.forward(tape, pids, x_t, t, cond, past), tape.leaf(y0));
            return tape.value(loss)(0, 0);
        };
        Tape tape;
        auto pids = model.leaf_params(tape);
        auto loss = tape.mse(model.forward(tape, pids, x_t, t, cond, past), tape.leaf(y0));
        tape.backward(loss);

        for (std::size_t p = 0; p < model.params.size(); ++p) {
            const Matrix& grad = tape.grad(pids[p]);
            for (std::size_t i = 0; i < model.params[p].size(); ++i) {
                const double step = 1e-5;
                const double orig = model.params[p].at(i);
                model.params[p].at(i) = orig + step;
                const double lp = loss_value();
                model.params[p].at(i) = orig - step;
                const double lm = loss_value();
                model.params[p].at(i) = orig;
                const double fd = (lp - lm) / (2.0 * step);
                const double g = grad.size() > 0 ? grad.at(i) : 0.0;
                const double denom = std::max(1.0, std::max(std::abs(g), std::abs(fd)));
                worst = std::max(worst, std::abs(g - fd) / denom);
            }
        }
    }
    report(6, worst < 1e-4, "full-network gradients match finite differences",
           "max rel err " + fmt(worst));
}

// ---------------------------------------------------------------------------
// 7. Metric sanity.

void criterion_7_metrics(const ToyWorld& w) {
    GaussianRng rng(71);
    Matrix feats = gaussian_sample(rng, 64, kFeatureDim);
    const bool self_ok = frechet_distance(feats, feats) < 1e-8;

    const std::size_t n = 100000;
    Matrix a(n, 1), b(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, 0) = rng.normal();
        b(i, 0) = 1.0 + rng.normal();
    }
    const double oned = frechet_distance(a, b);
    const bool oned_ok = std::abs(oned - 1.0) <= 0.02;

    const EvalRow* ind = find_row(w.report, "independent");
    const bool order_ok = ind && w.report.real_vs_real_frechet < ind->frechet;
    report(7, self_ok && oned_ok && order_ok,
           "frechet distance: self ~0, 1-D oracle ~1, real-real < real-generated",
           "1-D " + fmt(oned) + ", real-real " + fmt(w.report.real_vs_real_frechet) +
               ", real-indep " + fmt(ind ? ind->frechet : -1.0));
}

// ---------------------------------------------------------------------------
// 8. Schedule and diffusion algebra.

void criterion_8_schedule_algebra(const NoiseSchedule& schedule) {
    bool monotone = true;
    for (std::size_t t = 2; t <= schedule.steps(); ++t)
        if (schedule.alpha_bar(t) >= schedule.alpha_bar(t - 1)) monotone = false;
    const bool endpoints = schedule.alpha_bar(1) >= 0.99 && schedule.alpha_bar(100) <= 0.01;

    GaussianRng rng(81);
    double worst_rt = 0.0, worst_eq = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t t = 1 + rng.index(schedule.steps());
        Matrix x0 = gaussian_sample(rng, 1, kFrameDim);
        Matrix eps = gaussian_sample(rng, 1, kFrameDim);
        Sequence x_t = q_sample(x0, t, eps, schedule);
        worst_rt = std::max(worst_rt, max_abs_diff(x0_from_eps(x_t, eps, t, schedule), x0));

        Sequence mu_x0 = posterior_mean(x_t, x0, t, schedule);
        Sequence eps_hat = eps_from_x0(x_t, x0, t, schedule);
        auto e = schedule.lookup(t);
        Sequence mu_eps(1, kFrameDim);
        for (std::size_t i = 0; i < kFrameDim; ++i)
            mu_eps.at(i) =
                (x_t.at(i) - e.beta / std::sqrt(1.0 - e.alpha_bar) * eps_hat.at(i)) /
                std::sqrt(e.alpha);
        worst_eq = std::max(worst_eq, max_abs_diff(mu_x0, mu_eps));
    }
    const bool ok = monotone && endpoints && worst_rt < 1e-10 && worst_eq < 1e-10;
    report(8, ok, "schedule endpoints, marginal round trip, mean-form equivalence",
           "round trip " + fmt(worst_rt) + ", eps/x0 form " + fmt(worst_eq));
}

// ---------------------------------------------------------------------------
// 9. Ablation harness completes over the full grid with a well-formed table.

void criterion_9_ablation(const ToyWorld& w, const NoiseSchedule& schedule) {
    AblationGrid grid = parse_grid("h=2,4,8,12;ltr=2,4,8,12;s=1,2,3,5");
    SamplerSpec base;
    base.s = 2.0;
    base.l_tr = 4;
    base.model_past_frames = 2;
    bool ok = true;
    std::string detail;
    try {
        auto points = run_ablation(w.model, grid, base, w.train_streams, w.test_streams, schedule,
                                   2, 99);
        ok = points.size() == 12;
        for (const auto& p : points) {
            if (p.axis != "h" && p.axis != "ltr" && p.axis != "s") ok = false;
            if (!std::isfinite(p.row.transition_median) || !std::isfinite(p.row.frechet) ||
                !std::isfinite(p.row.diversity) || !std::isfinite(p.row.label_consistency))
                ok = false;
        }
        const std::string csv = format_ablation_csv(points);
        std::size_t lines = 0;
        for (char ch : csv)
            if (ch == '\n') ++lines;
        if (lines != 13) ok = false;
        if (csv.find("axis,value,sampler,transition_median") != 0) ok = false;
        detail = std::to_string(points.size()) + " grid points, " + std::to_string(lines) +
                 " csv lines";
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    report(9, ok, "h/ltr/s ablation grid completes with a well-formed table", detail);
}

}  // namespace

int main() {
    const NoiseSchedule schedule = cosine_schedule(100);
    const NoiseSchedule toy_schedule = cosine_schedule(50);

    criterion_1_oracle_sampling(schedule);
    criterion_2_composition_oracle(schedule);
    criterion_3_inpainting_exactness(schedule);

    ToyWorld world = build_toy_world(toy_schedule);
    criterion_4_ordering(world);
    criterion_5_reductions(schedule);
    criterion_6_gradients();
    criterion_7_metrics(world);
    criterion_8_schedule_algebra(schedule);
    criterion_9_ablation(world, toy_schedule);

    if (g_failures > 0) {
        std::cout << g_failures << " criteria failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
