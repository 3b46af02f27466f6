#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "diffusion.hpp"
#include "rng.hpp"
#include "train.hpp"

namespace seqdiff {

// Planar trajectory labels. Each one is a velocity-field controller; segments
// integrate it from the previous segment's terminal state, so ground-truth
// streams are continuous across boundaries.
inline const std::vector<std::string>& label_names() {
    static const std::vector<std::string> names = {"walk_east", "walk_north", "circle_cw",
                                                   "circle_ccw", "zigzag",    "spiral",
                                                   "halt",       "weave"};
    return names;
}

inline std::size_t label_id(const std::string& name) {
    const auto& names = label_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw std::invalid_argument("unknown label: " + name);
}

struct SegmentRecord {
    std::string label;
    std::size_t start = 0;
    std::size_t len = 0;
};

struct LabeledStream {
    Sequence frames;  // full continuous sequence
    std::vector<SegmentRecord> segments;
};

struct GeneratorConfig {
    std::size_t num_streams = 2000;
    std::size_t min_segments = 2;
    std::size_t max_segments = 4;
    std::size_t min_length = 16;
    std::size_t max_length = 32;
    std::vector<std::string> labels = label_names();
    std::uint64_t seed = 0;

    // dynamics
    double dt = 0.1;
    double speed = 0.8;
    double max_accel = 0.08;  // per-frame velocity change bound
    double step_bound() const {
        return std::sqrt(speed * speed * dt * dt + max_accel * max_accel) + 1e-9;
    }
};

namespace detail {

// Target velocity of a label field given current state and local frame index.
inline void label_target(std::size_t id, double vx, double vy, std::size_t l, double speed,
                         double& tx, double& ty) {
    auto rotate_heading = [&](double angle) {
        double nx = vx, ny = vy;
        const double n = std::sqrt(nx * nx + ny * ny);
        if (n < 1e-9) {
            nx = 1.0;
            ny = 0.0;
        } else {
            nx /= n;
            ny /= n;
        }
        const double c = std::cos(angle), s = std::sin(angle);
        tx = speed * (c * nx - s * ny);
        ty = speed * (s * nx + c * ny);
    };
    switch (id) {
        case 0:  // walk_east
            tx = speed;
            ty = 0.0;
            break;
        case 1:  // walk_north
            tx = 0.0;
            ty = speed;
            break;
        case 2:  // circle_cw
            rotate_heading(-0.12);
            break;
        case 3:  // circle_ccw
            rotate_heading(0.12);
            break;
        case 4: {  // zigzag: heading flips about east every 8 frames
            const double theta = ((l / 8) % 2 == 0) ? M_PI / 4.0 : -M_PI / 4.0;
            tx = speed * std::cos(theta);
            ty = speed * std::sin(theta);
            break;
        }
        case 5: {  // spiral: turning with decaying speed
            rotate_heading(0.25);
            const double decay = std::exp(-static_cast<double>(l) / 24.0);
            tx *= decay;
            ty *= decay;
            break;
        }
        case 6:  // halt
            tx = 0.0;
            ty = 0.0;
            break;
        case 7: {  // weave: eastward at constant speed with a swaying heading
            const double angle = 0.5 * std::sin(0.4 * static_cast<double>(l));
            tx = speed * std::cos(angle);
            ty = speed * std::sin(angle);
            break;
        }
        default:
            throw std::invalid_argument("label_target: bad label id");
    }
}

}  // namespace detail

inline LabeledStream gen_stream(const GeneratorConfig& cfg, GaussianRng& rng) {
    const std::size_t n_segs = cfg.min_segments + rng.index(cfg.max_segments - cfg.min_segments + 1);
    LabeledStream stream;
    std::size_t total = 0;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> lens;
    for (std::size_t s = 0; s < n_segs; ++s) {
        const std::string& name = cfg.labels[rng.index(cfg.labels.size())];
        ids.push_back(label_id(name));
        const std::size_t len = cfg.min_length + rng.index(cfg.max_length - cfg.min_length + 1);
        stream.segments.push_back(SegmentRecord{name, total, len});
        lens.push_back(len);
        total += len;
    }
    stream.frames = Sequence(total, kFrameDim);

    double px = 2.0 * rng.uniform() - 1.0;
    double py = 2.0 * rng.uniform() - 1.0;
    double vx = 0.0, vy = 0.0;
    std::size_t row = 0;
    for (std::size_t s = 0; s < n_segs; ++s) {
        for (std::size_t l = 0; l < lens[s]; ++l) {
            stream.frames(row, 0) = px;
            stream.frames(row, 1) = py;
            stream.frames(row, 2) = vx;
            stream.frames(row, 3) = vy;
            ++row;
            double tx, ty;
            detail::label_target(ids[s], vx, vy, l, cfg.speed, tx, ty);
            double dvx = tx - vx, dvy = ty - vy;
            const double dn = std::sqrt(dvx * dvx + dvy * dvy);
            if (dn > cfg.max_accel) {
                dvx *= cfg.max_accel / dn;
                dvy *= cfg.max_accel / dn;
            }
            vx += dvx;
            vy += dvy;
            px += vx * cfg.dt;
            py += vy * cfg.dt;
        }
    }
    return stream;
}

inline std::vector<LabeledStream> gen_dataset(const GeneratorConfig& cfg) {
    if (cfg.min_length < 8 || cfg.max_length > 64 || cfg.min_length > cfg.max_length)
        throw std::invalid_argument("gen_dataset: length range must lie within [8, 64]");
    if (cfg.labels.size() < 4)
        throw std::invalid_argument("gen_dataset: need at least 4 labels");
    if (cfg.min_segments < 1 || cfg.min_segments > cfg.max_segments)
        throw std::invalid_argument("gen_dataset: bad segment count range");
    for (const auto& name : cfg.labels) label_id(name);  // validate
    std::vector<LabeledStream> out;
    out.reserve(cfg.num_streams);
    for (std::size_t i = 0; i < cfg.num_streams; ++i) {
        GaussianRng rng(derive_seed(cfg.seed, i));
        out.push_back(gen_stream(cfg, rng));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adjacent-pair extraction

struct SegmentPair {
    Sequence first;
    std::size_t first_label = 0;
    Sequence second;
    std::size_t second_label = 0;
    Matrix tail;  // last h frames of the first segment
};

inline std::vector<SegmentPair> make_pairs(const LabeledStream& stream, std::size_t h) {
    std::vector<SegmentPair> pairs;
    for (std::size_t s = 0; s + 1 < stream.segments.size(); ++s) {
        const SegmentRecord& a = stream.segments[s];
        const SegmentRecord& b = stream.segments[s + 1];
        if (h > a.len)
            throw std::invalid_argument("make_pairs: h exceeds first segment length");
        SegmentPair p;
        p.first = stream.frames.row_block(a.start, a.start + a.len);
        p.first_label = label_id(a.label);
        p.second = stream.frames.row_block(b.start, b.start + b.len);
        p.second_label = label_id(b.label);
        p.tail = stream.frames.row_block(a.start + a.len - h, a.start + a.len);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

// Training items per the pairing discipline: each stream's first segment
// trains without past context; every pair's second segment trains with the
// previous tail.
inline std::vector<TrainItem> make_train_items(const std::vector<LabeledStream>& streams,
                                               std::size_t h) {
    std::vector<TrainItem> items;
    for (const auto& stream : streams) {
        if (stream.segments.empty()) continue;
        const SegmentRecord& first = stream.segments[0];
        items.push_back(TrainItem{stream.frames.row_block(first.start, first.start + first.len),
                                  label_id(first.label), Matrix(0, kFrameDim)});
        for (const auto& p : make_pairs(stream, h))
            items.push_back(TrainItem{p.second, p.second_label, p.tail});
    }
    return items;
}

// ---------------------------------------------------------------------------
// File format: one JSON object per line,
// {"frames": [[x, y, vx, vy], ...], "segments": [{"label": ..., "start": ..., "len": ...}]}

inline void write_dataset(const std::string& path, const std::vector<LabeledStream>& streams) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
    for (const auto& stream : streams) {
        nlohmann::json j;
        auto frames = nlohmann::json::array();
        for (std::size_t r = 0; r < stream.frames.rows(); ++r) {
            auto row = nlohmann::json::array();
            for (std::size_t c = 0; c < stream.frames.cols(); ++c) row.push_back(stream.frames(r, c));
            frames.push_back(std::move(row));
        }
        j["frames"] = std::move(frames);
        auto segs = nlohmann::json::array();
        for (const auto& s : stream.segments)
            segs.push_back({{"label", s.label}, {"start", s.start}, {"len", s.len}});
        j["segments"] = std::move(segs);
        out << j.dump() << "\n";
    }
}

inline std::vector<LabeledStream> read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
    std::vector<LabeledStream> streams;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            LabeledStream stream;
            const auto& frames = j.at("frames");
            stream.frames = Sequence(frames.size(), kFrameDim);
            for (std::size_t r = 0; r < frames.size(); ++r) {
                const auto& row = frames.at(r);
                if (row.size() != kFrameDim) throw std::runtime_error("bad frame width");
                for (std::size_t c = 0; c < kFrameDim; ++c)
                    stream.frames(r, c) = row.at(c).get<double>();
            }
            std::size_t expected_start = 0;
            for (const auto& s : j.at("segments")) {
                SegmentRecord rec{s.at("label").get<std::string>(),
                                  s.at("start").get<std::size_t>(), s.at("len").get<std::size_t>()};
                label_id(rec.label);  // rejects unknown labels by name
                if (rec.start != expected_start)
                    throw std::runtime_error("segments do not tile the stream");
                expected_start += rec.len;
                stream.segments.push_back(std::move(rec));
            }
            if (expected_start != stream.frames.rows())
                throw std::runtime_error("segments do not cover all frames");
            streams.push_back(std::move(stream));
        } catch (const std::exception& e) {
            throw std::runtime_error("read_dataset: " + path + ":" + std::to_string(line_no) +
                                     ": " + e.what());
        }
    }
    return streams;
}

}  // namespace seqdiff
