#pragma once

#include <fstream>

#include <json.hpp>

#include "pcmdm.hpp"

namespace seqdiff {

// Checkpoint container: JSON with the model config echoed, all named parameter
// tensors, the training-step counter, and a seed note. Doubles are emitted at
// round-trip precision, so save -> load -> predict is bit-identical.
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    PCMDMConfig config;
    PCMDM model;
    std::uint64_t train_steps = 0;
    std::uint64_t seed = 0;
};

inline void save_checkpoint(const std::string& path, const PCMDM& model,
                            std::uint64_t train_steps, std::uint64_t seed) {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["config"] = {{"frame_dim", model.cfg.frame_dim}, {"token_dim", model.cfg.token_dim},
                   {"blocks", model.cfg.blocks},       {"heads", model.cfg.heads},
                   {"ff_dim", model.cfg.ff_dim},       {"vocab", model.cfg.vocab},
                   {"past_frames", model.cfg.past_frames},
                   {"past_tokens", model.cfg.past_tokens}};
    j["train_steps"] = train_steps;
    j["seed"] = seed;
    nlohmann::json tensors = nlohmann::json::object();
    for (std::size_t i = 0; i < model.names.size(); ++i) {
        tensors[model.names[i]] = {{"rows", model.params[i].rows()},
                                   {"cols", model.params[i].cols()},
                                   {"data", model.params[i].data()}};
    }
    j["tensors"] = std::move(tensors);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << j.dump() << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("format_version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("load_checkpoint: unsupported format version");
    Checkpoint ck;
    const auto& c = j.at("config");
    ck.config.frame_dim = c.at("frame_dim").get<std::size_t>();
    ck.config.token_dim = c.at("token_dim").get<std::size_t>();
    ck.config.blocks = c.at("blocks").get<std::size_t>();
    ck.config.heads = c.at("heads").get<std::size_t>();
    ck.config.ff_dim = c.at("ff_dim").get<std::size_t>();
    ck.config.vocab = c.at("vocab").get<std::size_t>();
    ck.config.past_frames = c.at("past_frames").get<std::size_t>();
    ck.config.past_tokens = c.at("past_tokens").get<std::size_t>();
    ck.train_steps = j.at("train_steps").get<std::uint64_t>();
    ck.seed = j.at("seed").get<std::uint64_t>();

    GaussianRng dummy(0);
    ck.model = PCMDM::init(ck.config, dummy);
    const auto& tensors = j.at("tensors");
    for (std::size_t i = 0; i < ck.model.names.size(); ++i) {
        const auto& t = tensors.at(ck.model.names[i]);
        Matrix m(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>(),
                 t.at("data").get<std::vector<double>>());
        if (!m.same_shape(ck.model.params[i]))
            throw std::runtime_error("load_checkpoint: tensor shape mismatch for " +
                                     ck.model.names[i]);
        ck.model.params[i] = std::move(m);
    }
    return ck;
}

}  // namespace seqdiff
