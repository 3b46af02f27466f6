#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "data.hpp"
#include "pcmdm.hpp"
#include "sampling.hpp"
#include "train.hpp"

namespace seqdiff {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key-value run configuration. Unknown keys are rejected on load;
// dump() emits every key so a dumped file reloads to identical behavior.
struct RunConfig {
    // schedule
    std::string schedule_kind = "cosine";
    std::size_t schedule_T = 100;
    // model
    std::size_t model_token_dim = 64;
    std::size_t model_blocks = 2;
    std::size_t model_heads = 4;
    std::size_t model_ff_dim = 128;
    std::size_t model_past_tokens = 1;
    // training
    double train_lr = 1e-3;
    double train_wd = 1e-4;
    std::size_t train_batch = 16;
    std::size_t train_steps = 2000;
    double train_p_drop = 0.1;
    // sampler
    std::string sampler_kind = "compositional";
    std::size_t sampler_h = 2;
    std::size_t sampler_ltr = 2;
    double sampler_s = 2.0;
    std::string sampler_past_mode = "none";
    // data
    std::size_t data_train_streams = 2000;
    std::size_t data_test_streams = 500;
    std::size_t data_min_segments = 2;
    std::size_t data_max_segments = 4;
    std::size_t data_min_length = 16;
    std::size_t data_max_length = 32;
    std::string data_labels;  // comma-separated; empty = full label set
    // global
    std::uint64_t seed = 0;

    NoiseSchedule make_schedule() const {
        if (schedule_kind != "cosine")
            throw ConfigError("schedule.kind: unknown kind '" + schedule_kind + "'");
        return cosine_schedule(schedule_T);
    }

    PCMDMConfig make_model_config() const {
        PCMDMConfig c;
        c.token_dim = model_token_dim;
        c.blocks = model_blocks;
        c.heads = model_heads;
        c.ff_dim = model_ff_dim;
        c.past_tokens = model_past_tokens;
        c.past_frames = sampler_h;
        c.vocab = parse_labels().size();
        return c;
    }

    std::vector<std::string> parse_labels() const {
        if (data_labels.empty()) return label_names();
        std::vector<std::string> out;
        std::stringstream ss(data_labels);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                label_id(item);
            } catch (const std::exception&) {
                throw ConfigError("data.labels: unknown label '" + item + "'");
            }
            out.push_back(item);
        }
        return out;
    }

    GeneratorConfig make_generator_config(bool test_split) const {
        GeneratorConfig g;
        g.num_streams = test_split ? data_test_streams : data_train_streams;
        g.min_segments = data_min_segments;
        g.max_segments = data_max_segments;
        g.min_length = data_min_length;
        g.max_length = data_max_length;
        g.labels = parse_labels();
        // split by stream: disjoint seed streams for train and test
        g.seed = derive_seed(seed, test_split ? 1 : 0, 0x5eedda7aull);
        return g;
    }

    PastMode parse_past_mode() const {
        if (sampler_past_mode == "none") return PastMode::kNone;
        if (sampler_past_mode == "current") return PastMode::kCurrentIterate;
        throw ConfigError("sampler.past_mode: expected 'none' or 'current'");
    }

    void set(const std::string& key, const std::string& value) {
        auto to_size = [&](const std::string& v) -> std::size_t {
            try {
                return static_cast<std::size_t>(std::stoull(v));
            } catch (...) {
                throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
            }
        };
        auto to_real = [&](const std::string& v) -> double {
            try {
                return std::stod(v);
            } catch (...) {
                throw ConfigError(key + ": expected a number, got '" + v + "'");
            }
        };
        if (key == "schedule.kind") schedule_kind = value;
        else if (key == "schedule.T") schedule_T = to_size(value);
        else if (key == "model.token_dim") model_token_dim = to_size(value);
        else if (key == "model.blocks") model_blocks = to_size(value);
        else if (key == "model.heads") model_heads = to_size(value);
        else if (key == "model.ff_dim") model_ff_dim = to_size(value);
        else if (key == "model.past_tokens") model_past_tokens = to_size(value);
        else if (key == "train.lr") train_lr = to_real(value);
        else if (key == "train.wd") train_wd = to_real(value);
        else if (key == "train.batch") train_batch = to_size(value);
        else if (key == "train.steps") train_steps = to_size(value);
        else if (key == "train.p_drop") train_p_drop = to_real(value);
        else if (key == "sampler.kind") sampler_kind = value;
        else if (key == "sampler.h") sampler_h = to_size(value);
        else if (key == "sampler.ltr") sampler_ltr = to_size(value);
        else if (key == "sampler.s") sampler_s = to_real(value);
        else if (key == "sampler.past_mode") sampler_past_mode = value;
        else if (key == "data.train_streams") data_train_streams = to_size(value);
        else if (key == "data.test_streams") data_test_streams = to_size(value);
        else if (key == "data.min_segments") data_min_segments = to_size(value);
        else if (key == "data.max_segments") data_max_segments = to_size(value);
        else if (key == "data.min_length") data_min_length = to_size(value);
        else if (key == "data.max_length") data_max_length = to_size(value);
        else if (key == "data.labels") data_labels = value;
        else if (key == "seed") seed = to_size(value);
        else throw ConfigError("unknown config key '" + key + "'");
    }

    std::string dump() const {
        std::ostringstream out;
        out.precision(17);
        out << "schedule.kind = " << schedule_kind << "\n";
        out << "schedule.T = " << schedule_T << "\n";
        out << "model.token_dim = " << model_token_dim << "\n";
        out << "model.blocks = " << model_blocks << "\n";
        out << "model.heads = " << model_heads << "\n";
        out << "model.ff_dim = " << model_ff_dim << "\n";
        out << "model.past_tokens = " << model_past_tokens << "\n";
        out << "train.lr = " << train_lr << "\n";
        out << "train.wd = " << train_wd << "\n";
        out << "train.batch = " << train_batch << "\n";
        out << "train.steps = " << train_steps << "\n";
        out << "train.p_drop = " << train_p_drop << "\n";
        out << "sampler.kind = " << sampler_kind << "\n";
        out << "sampler.h = " << sampler_h << "\n";
        out << "sampler.ltr = " << sampler_ltr << "\n";
        out << "sampler.s = " << sampler_s << "\n";
        out << "sampler.past_mode = " << sampler_past_mode << "\n";
        out << "data.train_streams = " << data_train_streams << "\n";
        out << "data.test_streams = " << data_test_streams << "\n";
        out << "data.min_segments = " << data_min_segments << "\n";
        out << "data.max_segments = " << data_max_segments << "\n";
        out << "data.min_length = " << data_min_length << "\n";
        out << "data.max_length = " << data_max_length << "\n";
        out << "data.labels = " << data_labels << "\n";
        out << "seed = " << seed << "\n";
        return out.str();
    }
};

inline RunConfig parse_config_text(std::istream& in, const std::string& origin = "<config>") {
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    return parse_config_text(in, path);
}

}  // namespace seqdiff
