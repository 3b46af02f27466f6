#pragma once

#include <algorithm>

#include "data.hpp"
#include "metrics.hpp"
#include "sampling.hpp"

namespace seqdiff {

struct SamplerSpec {
    std::string kind;  // independent | autoregressive | inpainting | compositional
    std::size_t h = 2;
    std::size_t l_tr = 2;
    double s = 1.0;
    PastMode past_mode = PastMode::kNone;
    std::size_t model_past_frames = 0;  // h consumed by the model's past encoder, 0 = none
};

inline GenerationResult run_sampler(const Denoiser& den, const SamplerSpec& spec,
                                    const PromptStream& stream, const NoiseSchedule& schedule,
                                    std::uint64_t seed) {
    GuidanceConfig g{spec.s};
    if (spec.kind == "independent")
        return sample_autoregressive(den, stream, schedule, g, 0, seed);
    if (spec.kind == "autoregressive")
        return sample_autoregressive(den, stream, schedule, g, spec.model_past_frames, seed);
    if (spec.kind == "inpainting")
        return sample_inpainting(den, stream, spec.h, schedule, g, seed, spec.model_past_frames);
    if (spec.kind == "compositional")
        return sample_compositional(den, stream, spec.l_tr, schedule, g, seed, spec.past_mode,
                                    spec.model_past_frames);
    throw std::invalid_argument("unknown sampler kind '" + spec.kind + "'");
}

struct EvalRow {
    std::string sampler;
    double transition_median = 0.0;
    double transition_mean = 0.0;
    double frechet = 0.0;
    double diversity = 0.0;
    double label_consistency = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double real_vs_real_frechet = 0.0;  // train features vs test features
    bool ordering_flag = false;         // compositional < inpainting < independent (median)
};

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<Sequence> collect_real_segments(const std::vector<LabeledStream>& streams,
                                                   std::vector<std::size_t>* labels = nullptr) {
    std::vector<Sequence> segs;
    for (const auto& stream : streams)
        for (const auto& rec : stream.segments) {
            segs.push_back(stream.frames.row_block(rec.start, rec.start + rec.len));
            if (labels) labels->push_back(label_id(rec.label));
        }
    return segs;
}

// Evaluates each sampler on n two-segment prompt streams taken from the test
// pairs: transition distance (median + mean), Frechet distance of generated
// segment features vs real test features, diversity, and label consistency.
inline EvalReport run_eval(const Denoiser& den, std::vector<SamplerSpec> samplers,
                           const std::vector<LabeledStream>& train_streams,
                           const std::vector<LabeledStream>& test_streams,
                           const NoiseSchedule& schedule, std::size_t n, std::uint64_t seed,
                           std::size_t diversity_pairs = 1000) {
    std::vector<SegmentPair> pairs;
    for (const auto& stream : test_streams)
        for (auto& p : make_pairs(stream, 1)) pairs.push_back(std::move(p));
    if (pairs.empty()) throw std::invalid_argument("run_eval: test set has no pairs");

    std::vector<std::size_t> train_labels;
    Matrix train_feats = feature_matrix(collect_real_segments(train_streams, &train_labels));
    Matrix test_feats = feature_matrix(collect_real_segments(test_streams));
    LabelCentroids centroids = LabelCentroids::fit(train_feats, train_labels, label_names().size());

    EvalReport report;
    report.real_vs_real_frechet = frechet_distance(train_feats, test_feats);

    for (const auto& spec : samplers) {
        std::vector<double> tds;
        std::vector<Sequence> gen_segments;
        std::vector<std::size_t> intended;
        for (std::size_t j = 0; j < n; ++j) {
            const SegmentPair& pr = pairs[j % pairs.size()];
            PromptStream stream{{Condition::label(pr.first_label), pr.first.rows()},
                                {Condition::label(pr.second_label), pr.second.rows()}};
            GenerationResult r = run_sampler(den, spec, stream, schedule, derive_seed(seed, j));
            for (double td : r.transition_distances) tds.push_back(td);
            std::size_t off = 0;
            std::size_t k = 0;
            for (std::size_t b = 0; b <= r.boundaries.size(); ++b) {
                const std::size_t end = b < r.boundaries.size() ? r.boundaries[b] : r.frames.rows();
                gen_segments.push_back(r.frames.row_block(off, end));
                intended.push_back(k == 0 ? pr.first_label : pr.second_label);
                off = end;
                ++k;
            }
        }
        Matrix gen_feats = feature_matrix(gen_segments);
        GaussianRng div_rng(derive_seed(seed, 0xd1ull));
        EvalRow row;
        row.sampler = spec.kind;
        row.transition_median = median_of(tds);
        double mean = 0.0;
        for (double td : tds) mean += td;
        row.transition_mean = tds.empty() ? 0.0 : mean / static_cast<double>(tds.size());
        row.frechet = frechet_distance(gen_feats, test_feats);
        row.diversity = diversity(gen_feats, diversity_pairs, div_rng);
        row.label_consistency = centroids.consistency(gen_segments, intended);
        report.rows.push_back(std::move(row));
    }

    auto find_row = [&](const std::string& kind) -> const EvalRow* {
        for (const auto& r : report.rows)
            if (r.sampler == kind) return &r;
        return nullptr;
    };
    const EvalRow* comp = find_row("compositional");
    const EvalRow* inp = find_row("inpainting");
    const EvalRow* ind = find_row("independent");
    if (comp && inp && ind)
        report.ordering_flag = comp->transition_median < inp->transition_median &&
                               inp->transition_median < ind->transition_median;
    return report;
}

inline std::string format_report(const EvalReport& report) {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "real_vs_real_frechet = " << report.real_vs_real_frechet << "\n";
    out << "ordering_compositional_lt_inpainting_lt_independent = "
        << (report.ordering_flag ? "true" : "false") << "\n";
    for (const auto& r : report.rows) {
        out << "sampler." << r.sampler << ".transition_median = " << r.transition_median << "\n";
        out << "sampler." << r.sampler << ".transition_mean = " << r.transition_mean << "\n";
        out << "sampler." << r.sampler << ".frechet = " << r.frechet << "\n";
        out << "sampler." << r.sampler << ".diversity = " << r.diversity << "\n";
        out << "sampler." << r.sampler << ".label_consistency = " << r.label_consistency << "\n";
    }
    return out.str();
}

inline std::string format_report_csv(const EvalReport& report) {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "sampler,transition_median,transition_mean,frechet,diversity,label_consistency\n";
    for (const auto& r : report.rows)
        out << r.sampler << "," << r.transition_median << "," << r.transition_mean << ","
            << r.frechet << "," << r.diversity << "," << r.label_consistency << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Ablation grid: h values run the inpainting sampler, ltr values the
// compositional sampler, s values the compositional sampler at the default ltr.

struct AblationPoint {
    std::string axis;  // "h" | "ltr" | "s"
    double value = 0.0;
    EvalRow row;
};

struct AblationGrid {
    std::vector<std::size_t> h_values;
    std::vector<std::size_t> ltr_values;
    std::vector<double> s_values;
};

inline AblationGrid parse_grid(const std::string& text) {
    AblationGrid grid;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("malformed grid: expected axis=v1,v2,... in '" + part + "'");
        const std::string axis = part.substr(0, eq);
        std::stringstream vs(part.substr(eq + 1));
        std::string v;
        while (std::getline(vs, v, ',')) {
            try {
                if (axis == "h") grid.h_values.push_back(std::stoull(v));
                else if (axis == "ltr") grid.ltr_values.push_back(std::stoull(v));
                else if (axis == "s") grid.s_values.push_back(std::stod(v));
                else throw std::invalid_argument("unknown grid axis '" + axis + "'");
            } catch (const std::invalid_argument&) {
                throw;
            } catch (...) {
                throw std::invalid_argument("malformed grid value '" + v + "'");
            }
        }
    }
    if (grid.h_values.empty() && grid.ltr_values.empty() && grid.s_values.empty())
        throw std::invalid_argument("malformed grid: no axes");
    return grid;
}

inline std::vector<AblationPoint> run_ablation(const Denoiser& den, const AblationGrid& grid,
                                               const SamplerSpec& base,
                                               const std::vector<LabeledStream>& train_streams,
                                               const std::vector<LabeledStream>& test_streams,
                                               const NoiseSchedule& schedule, std::size_t n,
                                               std::uint64_t seed) {
    std::vector<AblationPoint> points;
    auto eval_one = [&](const SamplerSpec& spec, const std::string& axis, double value) {
        EvalReport rep = run_eval(den, {spec}, train_streams, test_streams, schedule, n, seed);
        points.push_back(AblationPoint{axis, value, rep.rows.at(0)});
    };
    for (std::size_t h : grid.h_values) {
        SamplerSpec spec = base;
        spec.kind = "inpainting";
        spec.h = h;
        eval_one(spec, "h", static_cast<double>(h));
    }
    for (std::size_t ltr : grid.ltr_values) {
        SamplerSpec spec = base;
        spec.kind = "compositional";
        spec.l_tr = ltr;
        eval_one(spec, "ltr", static_cast<double>(ltr));
    }
    for (double s : grid.s_values) {
        SamplerSpec spec = base;
        spec.kind = "compositional";
        spec.s = s;
        eval_one(spec, "s", s);
    }
    return points;
}

inline std::string format_ablation_csv(const std::vector<AblationPoint>& points) {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "axis,value,sampler,transition_median,transition_mean,frechet,diversity,"
           "label_consistency\n";
    for (const auto& p : points)
        out << p.axis << "," << p.value << "," << p.row.sampler << "," << p.row.transition_median
            << "," << p.row.transition_mean << "," << p.row.frechet << "," << p.row.diversity
            << "," << p.row.label_consistency << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Exports

// 2D position trace colored per segment, boundary markers as circles.
inline std::string render_svg(const GenerationResult& r) {
    static const char* palette[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3",
                                    "#ff7f00", "#a65628", "#f781bf", "#999999"};
    double min_x = r.frames(0, 0), max_x = min_x, min_y = r.frames(0, 1), max_y = min_y;
    for (std::size_t i = 0; i < r.frames.rows(); ++i) {
        min_x = std::min(min_x, r.frames(i, 0));
        max_x = std::max(max_x, r.frames(i, 0));
        min_y = std::min(min_y, r.frames(i, 1));
        max_y = std::max(max_y, r.frames(i, 1));
    }
    const double span = std::max({max_x - min_x, max_y - min_y, 1e-6});
    const double scale = 400.0 / span;
    auto sx = [&](double x) { return 20.0 + (x - min_x) * scale; };
    auto sy = [&](double y) { return 420.0 - (y - min_y) * scale; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"440\" height=\"440\">\n";
    std::size_t begin = 0;
    for (std::size_t s = 0; s <= r.boundaries.size(); ++s) {
        const std::size_t end = s < r.boundaries.size() ? r.boundaries[s] : r.frames.rows();
        out << "  <polyline fill=\"none\" stroke=\"" << palette[s % 8]
            << "\" stroke-width=\"2\" points=\"";
        // include the first frame of the next segment so traces connect visually
        const std::size_t draw_end = std::min(end + 1, static_cast<std::size_t>(r.frames.rows()));
        for (std::size_t i = begin; i < draw_end; ++i)
            out << sx(r.frames(i, 0)) << "," << sy(r.frames(i, 1)) << " ";
        out << "\"/>\n";
        begin = end;
    }
    for (std::size_t b : r.boundaries)
        out << "  <circle cx=\"" << sx(r.frames(b, 0)) << "\" cy=\"" << sy(r.frames(b, 1))
            << "\" r=\"4\" fill=\"black\"/>\n";
    out << "</svg>\n";
    return out.str();
}

inline std::string render_csv(const GenerationResult& r) {
    std::ostringstream out;
    out.precision(17);
    out << "frame,segment,x,y,vx,vy\n";
    std::size_t seg = 0;
    for (std::size_t i = 0; i < r.frames.rows(); ++i) {
        if (seg < r.boundaries.size() && i >= r.boundaries[seg]) ++seg;
        out << i << "," << seg << "," << r.frames(i, 0) << "," << r.frames(i, 1) << ","
            << r.frames(i, 2) << "," << r.frames(i, 3) << "\n";
    }
    return out.str();
}

}  // namespace seqdiff
