#pragma once

#include <map>
#include <string>

#include "autodiff.hpp"
#include "denoiser.hpp"
#include "rng.hpp"

namespace seqdiff {

struct PCMDMConfig {
    std::size_t frame_dim = kFrameDim;
    std::size_t token_dim = 64;
    std::size_t blocks = 2;
    std::size_t heads = 4;
    std::size_t ff_dim = 128;
    std::size_t vocab = 8;       // label vocabulary, excluding the unconditional token
    std::size_t past_frames = 2; // h consumed by the past encoder
    std::size_t past_tokens = 1; // tokens emitted by the past encoder

    std::size_t head_dim() const {
        if (token_dim % heads != 0)
            throw std::invalid_argument("PCMDMConfig: token_dim must divide by heads");
        return token_dim / heads;
    }
};

// Sinusoidal embedding of an index (timestep or frame position), dim must be even-ish;
// odd last slot is sin-only.
inline Matrix sinusoidal_embedding(double pos, std::size_t dim) {
    Matrix out(1, dim);
    for (std::size_t i = 0; 2 * i < dim; ++i) {
        const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) /
                                                   static_cast<double>(dim));
        out(0, 2 * i) = std::sin(pos * freq);
        if (2 * i + 1 < dim) out(0, 2 * i + 1) = std::cos(pos * freq);
    }
    return out;
}

// Transformer-encoder denoiser with a condition token (label + timestep
// embedding), a past-encoder token over the previous segment's last h frames,
// and per-frame tokens carrying fixed sinusoidal positions. Predicts the clean
// sequence directly.
class PCMDM : public Denoiser {
public:
    PCMDMConfig cfg;
    std::vector<std::string> names;
    std::vector<Matrix> params;

    static PCMDM init(const PCMDMConfig& cfg, GaussianRng& rng) {
        PCMDM m;
        m.cfg = cfg;
        const std::size_t D = cfg.token_dim;
        auto add = [&](const std::string& name, std::size_t r, std::size_t c, double scale) {
            Matrix w(r, c);
            if (scale > 0.0)
                for (std::size_t i = 0; i < w.size(); ++i) w.at(i) = scale * rng.normal();
            m.names.push_back(name);
            m.params.push_back(std::move(w));
        };
        auto add_ones = [&](const std::string& name, std::size_t c) {
            Matrix w(1, c, 1.0);
            m.names.push_back(name);
            m.params.push_back(std::move(w));
        };
        const double ws = 0.02;
        add("label_emb", cfg.vocab + 1, D, ws);  // last row is the unconditional token
        add("time.w", D, D, ws);
        add("time.b", 1, D, 0.0);
        add("past.w", cfg.past_frames * cfg.frame_dim, D * cfg.past_tokens, ws);
        add("past.b", 1, D * cfg.past_tokens, 0.0);
        add("in.w", cfg.frame_dim, D, ws);
        add("in.b", 1, D, 0.0);
        const std::size_t dh = cfg.head_dim();
        for (std::size_t b = 0; b < cfg.blocks; ++b) {
            const std::string p = "blk" + std::to_string(b) + ".";
            add_ones(p + "ln1.g", D);
            for (std::size_t h = 0; h < cfg.heads; ++h) {
                const std::string hp = p + "attn.h" + std::to_string(h) + ".";
                add(hp + "q", D, dh, ws);
                add(hp + "k", D, dh, ws);
                add(hp + "v", D, dh, ws);
            }
            add(p + "attn.o", D, D, ws);
            add(p + "attn.ob", 1, D, 0.0);
            add_ones(p + "ln2.g", D);
            add(p + "ff.w1", D, cfg.ff_dim, ws);
            add(p + "ff.b1", 1, cfg.ff_dim, 0.0);
            add(p + "ff.w2", cfg.ff_dim, D, ws);
            add(p + "ff.b2", 1, D, 0.0);
        }
        add_ones("lnf.g", D);
        add("out.w", D, cfg.frame_dim, ws);
        add("out.b", 1, cfg.frame_dim, 0.0);
        m.build_index();
        return m;
    }

    void build_index() {
        index_.clear();
        for (std::size_t i = 0; i < names.size(); ++i) index_[names[i]] = i;
    }

    std::size_t param_index(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::invalid_argument("PCMDM: no parameter " + name);
        return it->second;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.size();
        return n;
    }

    // Leafs every parameter onto the tape (shared across batch items).
    std::vector<Tape::NodeId> leaf_params(Tape& tape) const {
        std::vector<Tape::NodeId> ids;
        ids.reserve(params.size());
        for (const auto& p : params) ids.push_back(tape.leaf(p));
        return ids;
    }

    // Forward pass on an existing tape. Returns the L x d output node.
    Tape::NodeId forward(Tape& tape, const std::vector<Tape::NodeId>& pids, const Sequence& x_t,
                         std::size_t t, const Condition& cond, const PastContext& past) const {
        const std::size_t L = x_t.rows();
        if (L == 0) throw std::invalid_argument("PCMDM: empty frame block");
        if (x_t.cols() != cfg.frame_dim)
            throw std::invalid_argument("PCMDM: frame dim mismatch");
        if (past.h() != 0 && past.h() != cfg.past_frames)
            throw std::invalid_argument("PCMDM: past context must hold exactly " +
                                        std::to_string(cfg.past_frames) + " frames");
        const std::size_t D = cfg.token_dim;
        auto p = [&](const std::string& n) { return pids[param_index(n)]; };

        // condition token: label embedding + projected timestep embedding
        const std::size_t row = cond.is_unconditional ? cfg.vocab : cond.label_id;
        if (row > cfg.vocab) throw std::invalid_argument("PCMDM: unknown label");
        Tape::NodeId label_tok = tape.slice_rows(p("label_emb"), row, row + 1);
        Tape::NodeId time_in = tape.leaf(sinusoidal_embedding(static_cast<double>(t), D));
        Tape::NodeId z = tape.add(label_tok, tape.affine(time_in, p("time.w"), p("time.b")));

        std::vector<Tape::NodeId> tokens{z};
        std::size_t n_cond = 1;
        if (past.h() > 0) {
            Matrix flat(1, past.h() * cfg.frame_dim, past.frames.data());
            Tape::NodeId past_tok = tape.affine(tape.leaf(std::move(flat)), p("past.w"), p("past.b"));
            if (cfg.past_tokens > 1) {
                // the encoder emits k*D columns; split them into k tokens
                for (std::size_t k = 0; k < cfg.past_tokens; ++k)
                    tokens.push_back(tape.slice_cols(past_tok, k * D, (k + 1) * D));
                n_cond += cfg.past_tokens;
            } else {
                tokens.push_back(past_tok);
                n_cond += 1;
            }
        }
        Tape::NodeId frames = tape.affine(tape.leaf(x_t), p("in.w"), p("in.b"));
        Matrix pos(L, D);
        for (std::size_t l = 0; l < L; ++l)
            pos.set_row_block(l, sinusoidal_embedding(static_cast<double>(l), D));
        frames = tape.add(frames, tape.leaf(std::move(pos)));
        tokens.push_back(frames);
        Tape::NodeId h = tape.concat_rows(tokens);

        const std::size_t dh = cfg.head_dim();
        const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));
        for (std::size_t b = 0; b < cfg.blocks; ++b) {
            const std::string bp = "blk" + std::to_string(b) + ".";
            Tape::NodeId a = tape.layer_norm_rows(h, p(bp + "ln1.g"));
            std::vector<Tape::NodeId> heads;
            for (std::size_t hd = 0; hd < cfg.heads; ++hd) {
                const std::string hp = bp + "attn.h" + std::to_string(hd) + ".";
                Tape::NodeId q = tape.matmul_op(a, p(hp + "q"));
                Tape::NodeId k = tape.matmul_op(a, p(hp + "k"));
                Tape::NodeId v = tape.matmul_op(a, p(hp + "v"));
                Tape::NodeId scores = tape.softmax_rows(tape.scale(tape.matmul_nt(q, k), attn_scale));
                heads.push_back(tape.matmul_op(scores, v));
            }
            Tape::NodeId cat = cfg.heads == 1 ? heads[0] : tape.concat_cols(heads);
            h = tape.add(h, tape.affine(cat, p(bp + "attn.o"), p(bp + "attn.ob")));
            Tape::NodeId a2 = tape.layer_norm_rows(h, p(bp + "ln2.g"));
            Tape::NodeId ff = tape.affine(tape.gelu(tape.affine(a2, p(bp + "ff.w1"), p(bp + "ff.b1"))),
                                          p(bp + "ff.w2"), p(bp + "ff.b2"));
            h = tape.add(h, ff);
        }
        Tape::NodeId out_tokens = tape.slice_rows(tape.layer_norm_rows(h, p("lnf.g")), n_cond,
                                                  n_cond + L);
        return tape.affine(out_tokens, p("out.w"), p("out.b"));
    }

    Sequence predict_x0(const Sequence& x_t, std::size_t t, const Condition& cond,
                        const PastContext& past) const override {
        Tape tape;
        auto pids = leaf_params(tape);
        Tape::NodeId out = forward(tape, pids, x_t, t, cond, past);
        return tape.value(out);
    }

private:
    std::map<std::string, std::size_t> index_;
};

}  // namespace seqdiff
