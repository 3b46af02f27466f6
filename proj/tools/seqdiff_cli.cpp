// Command-line surface for the sequence-diffusion engine: data generation,
// training, sampling, evaluation, and ablation grids.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "seqdiff/checkpoint.hpp"
#include "seqdiff/config.hpp"
#include "seqdiff/data.hpp"
#include "seqdiff/eval.hpp"
#include "seqdiff/metrics.hpp"
#include "seqdiff/sampling.hpp"
#include "seqdiff/train.hpp"

namespace {

using namespace seqdiff;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
}

PromptStream parse_stream_spec(const std::string& spec) {
    PromptStream stream;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("stream spec: expected label:length in '" + part + "'");
        const std::string label = part.substr(0, colon);
        std::size_t length = 0;
        try {
            length = std::stoull(part.substr(colon + 1));
        } catch (...) {
            throw std::invalid_argument("stream spec: bad length in '" + part + "'");
        }
        stream.push_back(PromptEntry{Condition::label(label_id(label)), length});
    }
    if (stream.empty()) throw std::invalid_argument("stream spec: empty");
    return stream;
}

RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return RunConfig{};
    return load_config(path);
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg = load_config_or_default(config_path);
    std::filesystem::create_directories(out_dir);
    auto train = gen_dataset(cfg.make_generator_config(false));
    auto test = gen_dataset(cfg.make_generator_config(true));
    write_dataset(out_dir + "/train.jsonl", train);
    write_dataset(out_dir + "/test.jsonl", test);
    std::size_t train_pairs = 0, test_pairs = 0;
    for (const auto& s : train) train_pairs += s.segments.size() - 1;
    for (const auto& s : test) test_pairs += s.segments.size() - 1;
    std::cout << "train_streams = " << train.size() << "\n"
              << "train_pairs = " << train_pairs << "\n"
              << "test_streams = " << test.size() << "\n"
              << "test_pairs = " << test_pairs << "\n";
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_path, long long steps_override) {
    RunConfig cfg = load_config_or_default(config_path);
    auto streams = read_dataset(data_path);
    auto items = make_train_items(streams, cfg.sampler_h);
    NoiseSchedule schedule = cfg.make_schedule();
    GaussianRng rng(derive_seed(cfg.seed, 0x7e41ull));
    PCMDM model = PCMDM::init(cfg.make_model_config(), rng);

    TrainOptions opt;
    opt.steps = steps_override >= 0 ? static_cast<std::size_t>(steps_override) : cfg.train_steps;
    opt.batch = cfg.train_batch;
    opt.lr = cfg.train_lr;
    opt.weight_decay = cfg.train_wd;
    opt.p_drop = cfg.train_p_drop;

    std::ofstream log(out_path + ".log");
    auto on_log = [&](std::size_t step, double loss) {
        log << "step " << step << " loss " << loss << "\n";
        std::cout << "step " << step << " loss " << loss << "\n";
    };
    if (opt.steps > 0) train_pcmdm(model, items, schedule, opt, rng, on_log);
    save_checkpoint(out_path, model, opt.steps, cfg.seed);
    std::cout << "params = " << model.param_count() << "\n"
              << "checkpoint = " << out_path << "\n";
    return kExitOk;
}

int cmd_sample(const std::string& ckpt_path, const std::string& stream_spec,
               const std::string& sampler, std::size_t h, std::size_t ltr, double s,
               const std::string& past_mode, std::uint64_t seed, std::size_t T,
               const std::string& out_path, const std::string& svg_path,
               const std::string& csv_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    PromptStream stream = parse_stream_spec(stream_spec);
    NoiseSchedule schedule = cosine_schedule(T);

    SamplerSpec spec;
    spec.kind = sampler;
    spec.h = h;
    spec.l_tr = ltr;
    spec.s = s;
    spec.past_mode = past_mode == "current" ? PastMode::kCurrentIterate : PastMode::kNone;
    spec.model_past_frames = ck.config.past_frames;
    GenerationResult r = run_sampler(ck.model, spec, stream, schedule, seed);

    nlohmann::json j;
    j["sampler"] = r.sampler;
    j["boundaries"] = r.boundaries;
    j["transition_distances"] = r.transition_distances;
    auto frames = nlohmann::json::array();
    for (std::size_t i = 0; i < r.frames.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (std::size_t c = 0; c < r.frames.cols(); ++c) row.push_back(r.frames(i, c));
        frames.push_back(std::move(row));
    }
    j["frames"] = std::move(frames);
    write_text_file(out_path, j.dump() + "\n");
    if (!svg_path.empty()) write_text_file(svg_path, render_svg(r));
    if (!csv_path.empty()) write_text_file(csv_path, render_csv(r));
    for (double td : r.transition_distances) std::cout << "transition_distance = " << td << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& ckpt_path, const std::string& test_path,
             const std::string& train_path, const std::string& samplers_list, std::size_t n,
             std::uint64_t seed, std::size_t T, std::size_t h, std::size_t ltr, double s,
             const std::string& out_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    auto test_streams = read_dataset(test_path);
    auto train_streams = read_dataset(train_path);
    NoiseSchedule schedule = cosine_schedule(T);

    std::vector<SamplerSpec> specs;
    std::stringstream ss(samplers_list);
    std::string kind;
    while (std::getline(ss, kind, ',')) {
        SamplerSpec spec;
        spec.kind = kind;
        spec.h = h;
        spec.l_tr = ltr;
        spec.s = s;
        spec.model_past_frames = ck.config.past_frames;
        specs.push_back(spec);
    }
    EvalReport report = run_eval(ck.model, specs, train_streams, test_streams, schedule, n, seed);
    const std::string text = format_report(report);
    write_text_file(out_path, text);
    write_text_file(out_path + ".csv", format_report_csv(report));
    std::cout << text;
    return kExitOk;
}

int cmd_ablate(const std::string& ckpt_path, const std::string& grid_text,
               const std::string& test_path, const std::string& train_path, std::size_t n,
               std::uint64_t seed, std::size_t T, double s, std::size_t ltr,
               const std::string& out_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    AblationGrid grid = parse_grid(grid_text);
    auto test_streams = read_dataset(test_path);
    auto train_streams = read_dataset(train_path);
    NoiseSchedule schedule = cosine_schedule(T);

    SamplerSpec base;
    base.s = s;
    base.l_tr = ltr;
    base.model_past_frames = ck.config.past_frames;
    auto points = run_ablation(ck.model, grid, base, train_streams, test_streams, schedule, n, seed);
    const std::string csv = format_ablation_csv(points);
    write_text_file(out_path, csv);
    std::cout << csv;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional sequence-diffusion engine with coherent sampling"};
    app.require_subcommand(1);
    // --h is a sampler option below, so help is long-form only
    app.set_help_flag("--help", "Print help");

    std::string config_path, data_path, out_path, ckpt_path, stream_spec, svg_path, csv_path;
    std::string sampler = "compositional", samplers_list = "independent,inpainting,compositional";
    std::string train_path, grid_text, past_mode = "none";
    std::size_t h = 2, ltr = 2, n = 200, T = 100;
    double s = 2.0;
    std::uint64_t seed = 0;
    long long steps_override = -1;

    auto* gen = app.add_subcommand("gen-data", "Generate synthetic train/test datasets");
    gen->set_help_flag("--help", "Print help");
    gen->add_option("--config", config_path, "Run config file");
    gen->add_option("--out", out_path, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Train the denoiser");
    train->set_help_flag("--help", "Print help");
    train->add_option("--config", config_path, "Run config file");
    train->add_option("--data", data_path, "Training dataset (jsonl)")->required();
    train->add_option("--out", out_path, "Checkpoint output path")->required();
    train->add_option("--steps", steps_override, "Override training step count");

    auto* sample = app.add_subcommand("sample", "Generate a long sequence from a prompt stream");
    sample->set_help_flag("--help", "Print help");
    sample->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
    sample->add_option("--stream", stream_spec, "Prompt stream, label:length[,label:length]...")
        ->required();
    sample->add_option("--sampler", sampler, "independent|autoregressive|inpainting|compositional");
    sample->add_option("--h", h, "Inpainting history frames");
    sample->add_option("--ltr", ltr, "Transition length for compositional sampling");
    sample->add_option("--s", s, "Guidance scale");
    sample->add_option("--past-mode", past_mode, "Compositional past mode: none|current");
    sample->add_option("--seed", seed, "Seed");
    sample->add_option("--T", T, "Diffusion steps");
    sample->add_option("--out", out_path, "Result path (json)")->required();
    sample->add_option("--svg", svg_path, "Optional SVG plot path");
    sample->add_option("--csv", csv_path, "Optional CSV frame dump path");

    auto* eval = app.add_subcommand("eval", "Evaluate samplers on the test set");
    eval->set_help_flag("--help", "Print help");
    eval->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
    eval->add_option("--data", data_path, "Test dataset (jsonl)")->required();
    eval->add_option("--train-data", train_path, "Training dataset (jsonl)")->required();
    eval->add_option("--samplers", samplers_list, "Comma list of samplers");
    eval->add_option("--n", n, "Number of generated two-segment streams per sampler");
    eval->add_option("--seed", seed, "Seed");
    eval->add_option("--T", T, "Diffusion steps");
    eval->add_option("--h", h, "Inpainting history frames");
    eval->add_option("--ltr", ltr, "Transition length");
    eval->add_option("--s", s, "Guidance scale");
    eval->add_option("--out", out_path, "Report path")->required();

    auto* ablate = app.add_subcommand("ablate", "Run an h/ltr/s ablation grid");
    ablate->set_help_flag("--help", "Print help");
    ablate->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
    ablate->add_option("--grid", grid_text, "Grid, e.g. h=2,4,8,12;ltr=2,4,8,12;s=1,2,3,5")
        ->required();
    ablate->add_option("--data", data_path, "Test dataset (jsonl)")->required();
    ablate->add_option("--train-data", train_path, "Training dataset (jsonl)")->required();
    ablate->add_option("--n", n, "Streams per grid point");
    ablate->add_option("--seed", seed, "Seed");
    ablate->add_option("--T", T, "Diffusion steps");
    ablate->add_option("--s", s, "Base guidance scale");
    ablate->add_option("--ltr", ltr, "Base transition length");
    ablate->add_option("--out", out_path, "Table path (csv)")->required();

    auto* dump = app.add_subcommand("dump-config", "Print the effective config");
    dump->set_help_flag("--help", "Print help");
    dump->add_option("--config", config_path, "Run config file");
    dump->add_option("--out", out_path, "Optional output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_path);
        if (train->parsed()) return cmd_train(config_path, data_path, out_path, steps_override);
        if (sample->parsed())
            return cmd_sample(ckpt_path, stream_spec, sampler, h, ltr, s, past_mode, seed, T,
                              out_path, svg_path, csv_path);
        if (eval->parsed())
            return cmd_eval(ckpt_path, data_path, train_path, samplers_list, n, seed, T, h, ltr, s,
                            out_path);
        if (ablate->parsed())
            return cmd_ablate(ckpt_path, grid_text, data_path, train_path, n, seed, T, s, ltr,
                              out_path);
        if (dump->parsed()) {
            RunConfig cfg = load_config_or_default(config_path);
            const std::string text = cfg.dump();
            if (!out_path.empty()) write_text_file(out_path, text);
            std::cout << text;
            return kExitOk;
        }
    } catch (const seqdiff::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const seqdiff::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::out_of_range& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
