#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "bdekit/brnet.hpp"
#include "bdekit/checkpoint.hpp"
#include "bdekit/dataset.hpp"
#include "bdekit/metrics.hpp"
#include "bdekit/png_io.hpp"
#include "bdekit/training.hpp"

namespace fs = std::filesystem;
using namespace bdekit;

namespace {

uint64_t env_seed() {
    const char* env = std::getenv("BDEKIT_SEED");
    if (!env || !*env) return 0;
    try {
        return std::stoull(env);
    } catch (const std::exception&) {
        throw ConfigError("BDEKIT_SEED is not an integer");
    }
}

/// Every run prints its resolved settings so results can be reproduced.
void announce(const std::string& command,
              const std::vector<std::pair<std::string, std::string>>& kv) {
    std::cout << "bdekit " << command << "\n";
    for (const auto& [k, v] : kv) std::cout << "  " << k << " = " << v << "\n";
}

std::vector<std::pair<std::string, std::string>>
input_files(const std::string& in, const std::string& out) {
    std::vector<std::pair<std::string, std::string>> pairs;
    if (fs::is_directory(in)) {
        fs::create_directories(out);
        for (const auto& name : list_pngs(in))
            pairs.emplace_back((fs::path(in) / name).string(),
                               (fs::path(out) / name).string());
        if (pairs.empty()) throw IoError("no PNG images in " + in);
    } else {
        if (const fs::path parent = fs::path(out).parent_path();
            !parent.empty())
            fs::create_directories(parent);
        pairs.emplace_back(in, out);
    }
    return pairs;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_degrade(const std::string& in, const std::string& out, int bits,
                int max_bits) {
    const BitSpec spec{max_bits, bits};
    spec.validate();
    announce("degrade", {{"in", in},
                         {"out", out},
                         {"missing_bits", std::to_string(bits)},
                         {"max_bits", std::to_string(max_bits)}});
    for (const auto& [src, dst] : input_files(in, out)) {
        ImageBuffer img = decode_png(src);
        encode_png(degrade(img, spec), dst);
        std::cout << src << ": kept " << spec.input_bits() << " of "
                  << spec.max_bits << " bits (missing " << spec.missing_bits
                  << ")\n";
    }
    return 0;
}

int cmd_restore(const std::string& in, const std::string& out, int bits,
                const std::string& checkpoint, bool emit_weightmap) {
    const nn::CheckpointMeta meta = nn::read_checkpoint_meta(checkpoint);
    const ModelConfig config = ModelConfig::from_text(meta.config_text);
    BrNet<float> model(config);
    nn::load_checkpoint(checkpoint, model.params());
    const BitSpec spec{config.max_bits, bits};
    spec.validate();
    announce("restore",
             {{"in", in},
              {"out", out},
              {"missing_bits", std::to_string(bits)},
              {"checkpoint", checkpoint},
              {"model", "filters=" + std::to_string(config.base_filters) +
                            " max_bits=" + std::to_string(config.max_bits)},
              {"emit_weightmap", emit_weightmap ? "true" : "false"}});

    for (const auto& [src, dst] : input_files(in, out)) {
        const ImageBuffer lbd = decode_png(src);
        const WeightingMap map = model.weighting_map(lbd, spec);
        const ImageBuffer restored = apply_weighting(lbd, spec, map);
        if (!high_bits_equal(restored, lbd, spec))
            throw InternalError("bit-preservation self-check failed on " +
                                src);
        encode_png(restored, dst);
        std::cout << src << " -> " << dst << "\n";
        if (emit_weightmap) {
            const int32_t peak = lbd.max_value();
            for (int c = 0; c < 3; ++c) {
                ImageBuffer gray(lbd.width, lbd.height, lbd.max_bits);
                for (int y = 0; y < lbd.height; ++y)
                    for (int x = 0; x < lbd.width; ++x) {
                        const auto v = static_cast<int32_t>(
                            std::lround(map.at(x, y, c) * peak));
                        for (int cc = 0; cc < 3; ++cc)
                            gray.at(x, y, cc) = std::clamp(v, 0, peak);
                    }
                fs::path wm_path = dst;
                wm_path.replace_extension(".w" + std::to_string(c) + ".png");
                encode_png(gray, wm_path.string());
                std::cout << "  weighting map channel " << c << " -> "
                          << wm_path.string() << "\n";
            }
        }
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data,
              const std::string& out_dir, const std::string& model_config_path,
              bool no_progressive, const std::string& mode,
              const std::string& resume, bool seed_given, uint64_t seed,
              int jobs) {
    TrainConfig config = TrainConfig::from_text(read_text_file(config_path));
    if (no_progressive) config.progressive = false;
    if (mode == "value") config.value_mode = true;
    if (mode == "weight") config.value_mode = false;
    if (seed_given)
        config.seed = seed;
    else if (config.seed == 0)
        config.seed = env_seed();

    ModelConfig model_config;
    if (!model_config_path.empty())
        model_config = ModelConfig::from_text(read_text_file(model_config_path));

    announce("train", {{"config", config_path},
                       {"data", data},
                       {"out_dir", out_dir},
                       {"resume", resume.empty() ? "(none)" : resume}});
    std::cout << "resolved model config:\n" << model_config.to_text();
    std::cout << "resolved train config:\n" << config.to_text();

    std::vector<NamedImage> dataset = load_dataset(data, nullptr, jobs);
    std::cout << "dataset: " << dataset.size() << " images\n";
    Trainer trainer(model_config, config, std::move(dataset), out_dir,
                    config.seed);
    if (!resume.empty()) {
        trainer.resume(resume);
        std::cout << "resumed at epoch " << trainer.next_epoch() << "\n";
    }
    trainer.run(std::cout);
    std::cout << "final checkpoint: " << (fs::path(out_dir) / "final.bdek")
              << "\n";
    return 0;
}

int cmd_evaluate(const std::string& data, const std::string& checkpoint,
                 bool baseline_zero, const std::vector<int>& input_depths,
                 const std::string& report_path, const std::string& manifest_path,
                 const std::string& dataset_name, int jobs) {
    if (baseline_zero == !checkpoint.empty())
        throw ConfigError(
            "pass exactly one of --checkpoint or --baseline zero");

    std::shared_ptr<BrNet<float>> model;
    int max_bits = 8;
    if (!checkpoint.empty()) {
        const nn::CheckpointMeta meta = nn::read_checkpoint_meta(checkpoint);
        model = std::make_shared<BrNet<float>>(
            ModelConfig::from_text(meta.config_text));
        nn::load_checkpoint(checkpoint, model->params());
        max_bits = model->config().max_bits;
    }

    std::optional<DatasetManifest> manifest;
    if (!manifest_path.empty())
        manifest = DatasetManifest::read_file(manifest_path, dataset_name);
    std::vector<NamedImage> dataset =
        load_dataset(data, manifest ? &*manifest : nullptr, jobs);
    if (baseline_zero) max_bits = dataset[0].image.max_bits;

    std::vector<BitSpec> specs;
    for (int depth : input_depths) {
        BitSpec spec{max_bits, max_bits - depth};
        spec.validate();
        specs.push_back(spec);
    }

    std::ostringstream bits_text;
    for (size_t i = 0; i < input_depths.size(); ++i)
        bits_text << (i ? "," : "") << input_depths[i];
    announce("evaluate",
             {{"data", data},
              {"restorer", baseline_zero ? "zero-padding baseline"
                                         : "checkpoint " + checkpoint},
              {"input_depths", bits_text.str()},
              {"images", std::to_string(dataset.size())},
              {"report", report_path},
              {"jobs", std::to_string(jobs)}});

    Restorer restorer;
    if (baseline_zero) {
        restorer = [](const ImageBuffer& lbd, const BitSpec&) { return lbd; };
    } else {
        restorer = [model](const ImageBuffer& lbd, const BitSpec& spec) {
            return model->restore(lbd, spec);
        };
    }

    const MetricReport report =
        evaluate_dataset(restorer, dataset, specs, jobs);
    if (!report_path.empty()) {
        if (const fs::path parent = fs::path(report_path).parent_path();
            !parent.empty())
            fs::create_directories(parent);
        std::ofstream out(report_path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + report_path);
        report.write_csv(out);
        std::cout << "per-image report: " << report_path << "\n";
    }
    std::cout << "bits_in  missing  psnr_db   ssim      wdis\n";
    for (const auto& agg : report.aggregates())
        std::cout << "  " << (max_bits - agg.bits_missing) << "        "
                  << agg.bits_missing << "      " << std::fixed
                  << std::setprecision(2) << agg.psnr_db << "    "
                  << std::setprecision(4) << agg.ssim_value << "    "
                  << std::setprecision(4) << agg.wdis_value << "\n";
    std::cout << report.summary_text();
    return 0;
}

int cmd_hist(const std::string& a_path, const std::string& b_path,
             const std::string& out_prefix) {
    const ImageBuffer a = decode_png(a_path);
    const ImageBuffer b = decode_png(b_path);
    if (a.max_bits != b.max_bits)
        throw BitSpecError("histogram inputs differ in bit depth");
    announce("hist", {{"a", a_path}, {"b", b_path}, {"out", out_prefix}});
    const std::string pa = out_prefix + ".a.csv";
    const std::string pb = out_prefix + ".b.csv";
    std::ofstream fa(pa, std::ios::trunc), fb(pb, std::ios::trunc);
    if (!fa || !fb) throw IoError("cannot write histogram CSVs");
    histogram_plot_data(a, fa);
    histogram_plot_data(b, fb);
    std::cout << "wrote " << pa << " and " << pb << "\n";
    std::cout << "wdis = " << wdis(a, b) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bdekit: bit-depth expansion toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // --seed/--jobs may follow the subcommand name

    uint64_t seed = 0;
    int jobs = 1;
    auto* seed_opt = app.add_option(
        "--seed", seed, "RNG seed (falls back to BDEKIT_SEED, then 0)");
    app.add_option("--jobs", jobs, "worker threads for batch steps")
        ->check(CLI::PositiveNumber);

    std::string in, out, checkpoint;
    int bits = 4;
    int max_bits = 8;

    auto* degrade_cmd =
        app.add_subcommand("degrade", "zero out the low bits of PNG images");
    degrade_cmd->add_option("--in", in, "input PNG or directory")->required();
    degrade_cmd->add_option("--out", out, "output PNG or directory")
        ->required();
    degrade_cmd->add_option("--bits", bits, "number of missing low bits")
        ->required();
    degrade_cmd->add_option("--max-bits", max_bits,
                            "full bit depth of the originals (8 or 16)");

    bool emit_weightmap = false;
    auto* restore_cmd =
        app.add_subcommand("restore", "restore missing low bits with a model");
    restore_cmd->add_option("--in", in, "degraded PNG or directory")
        ->required();
    restore_cmd->add_option("--out", out, "output PNG or directory")
        ->required();
    restore_cmd->add_option("--bits", bits, "number of missing low bits")
        ->required();
    restore_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")
        ->required();
    restore_cmd->add_flag("--emit-weightmap", emit_weightmap,
                          "also write per-channel weighting map PNGs");

    std::string config_path, model_config_path, resume, mode;
    bool no_progressive = false;
    auto* train_cmd = app.add_subcommand("train", "train a restoration model");
    train_cmd->add_option("--config", config_path, "training config file")
        ->required();
    train_cmd->add_option("--data", in, "training image directory")
        ->required();
    train_cmd->add_option("--out-dir", out, "checkpoint/log directory")
        ->required();
    train_cmd->add_option("--model-config", model_config_path,
                          "model config file (default: 8-bit, 64 filters)");
    train_cmd->add_flag("--no-progressive", no_progressive,
                        "sample bit depths uniformly instead of on a schedule");
    train_cmd
        ->add_option("--mode", mode,
                     "loss domain: weight (default) or value")
        ->check(CLI::IsMember({"weight", "value"}));
    train_cmd->add_option("--resume", resume, "checkpoint to resume from");

    bool baseline_zero = false;
    std::vector<int> input_depths;
    std::string report_path, manifest_path, dataset_name;
    auto* eval_cmd =
        app.add_subcommand("evaluate", "score a restorer on a dataset");
    eval_cmd->add_option("--data", in, "evaluation image directory")
        ->required();
    eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint");
    eval_cmd->add_flag_callback(
        "--baseline-zero", [&] { baseline_zero = true; },
        "score the zero-padding baseline instead of a model");
    eval_cmd
        ->add_option("--bits", input_depths,
                     "input bit depths to evaluate, e.g. 3,4,5")
        ->required()
        ->delimiter(',');
    eval_cmd->add_option("--report", report_path, "per-image CSV output path");
    eval_cmd->add_option("--manifest", manifest_path,
                         "verify the dataset against this manifest");
    eval_cmd->add_option("--dataset-name", dataset_name,
                         "expected dataset name in the manifest");

    std::string b_path, out_prefix;
    auto* hist_cmd = app.add_subcommand(
        "hist", "emit per-channel histogram CSVs for two images");
    hist_cmd->add_option("--a", in, "first PNG")->required();
    hist_cmd->add_option("--b", b_path, "second PNG")->required();
    hist_cmd->add_option("--out", out_prefix, "output CSV path prefix")
        ->required();

    try {
        app.parse(argc, argv);
        if (degrade_cmd->parsed()) return cmd_degrade(in, out, bits, max_bits);
        if (restore_cmd->parsed())
            return cmd_restore(in, out, bits, checkpoint, emit_weightmap);
        if (train_cmd->parsed())
            return cmd_train(config_path, in, out, model_config_path,
                             no_progressive, mode, resume, !seed_opt->empty(),
                             seed, jobs);
        if (eval_cmd->parsed())
            return cmd_evaluate(in, checkpoint, baseline_zero, input_depths,
                                report_path, manifest_path, dataset_name,
                                jobs);
        if (hist_cmd->parsed()) return cmd_hist(in, b_path, out_prefix);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const std::logic_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
