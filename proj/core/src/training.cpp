#include "bdekit/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bdekit/checkpoint.hpp"
#include "bdekit/config_text.hpp"

namespace bdekit {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (patch_size < 4 || patch_size % 4 != 0)
        throw ConfigError("patch_size must be a positive multiple of 4");
    if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
    if (lr_half_life != 200)
        throw ConfigError("lr_half_life is fixed at 200 epochs");
    if (patches_per_epoch < 1)
        throw ConfigError("patches_per_epoch must be positive");
    if (checkpoint_every < 1)
        throw ConfigError("checkpoint_every must be positive");
}

std::string TrainConfig::to_text() const {
    std::ostringstream out;
    out << "epochs = " << epochs << "\n";
    out << "batch_size = " << batch_size << "\n";
    out << "patch_size = " << patch_size << "\n";
    out << "base_lr = " << base_lr << "\n";
    out << "lr_half_life = " << lr_half_life << "\n";
    out << "seed = " << seed << "\n";
    out << "progressive = " << (progressive ? "true" : "false") << "\n";
    out << "value_mode = " << (value_mode ? "true" : "false") << "\n";
    out << "patches_per_epoch = " << patches_per_epoch << "\n";
    out << "checkpoint_every = " << checkpoint_every << "\n";
    return out.str();
}

TrainConfig TrainConfig::from_text(const std::string& text) {
    const KeyValues kv = parse_key_values(text);
    TrainConfig config;
    auto set_int = [&](const char* key, int& field) {
        if (auto v = find_value(kv, key))
            field = static_cast<int>(parse_int(*v, key));
    };
    set_int("epochs", config.epochs);
    set_int("batch_size", config.batch_size);
    set_int("patch_size", config.patch_size);
    set_int("lr_half_life", config.lr_half_life);
    set_int("patches_per_epoch", config.patches_per_epoch);
    set_int("checkpoint_every", config.checkpoint_every);
    if (auto v = find_value(kv, "base_lr"))
        config.base_lr = parse_real(*v, "base_lr");
    if (auto v = find_value(kv, "seed"))
        config.seed = static_cast<uint64_t>(parse_int(*v, "seed"));
    if (auto v = find_value(kv, "progressive"))
        config.progressive = parse_bool(*v, "progressive");
    if (auto v = find_value(kv, "value_mode"))
        config.value_mode = parse_bool(*v, "value_mode");
    config.validate();
    return config;
}

BitSpec progressive_bits(int epoch, int b_max, Rng& rng) {
    if (epoch < 0) throw ConfigError("epoch must be non-negative");
    const TrainSchedule schedule{epoch, b_max};
    BitSpec spec;
    spec.max_bits = b_max;
    spec.missing_bits =
        static_cast<int>(rng.uniform_int(1, schedule.bits_upper_bound()));
    return spec;
}

BitSpec uniform_bits(int b_max, Rng& rng) {
    BitSpec spec;
    spec.max_bits = b_max;
    spec.missing_bits = static_cast<int>(rng.uniform_int(1, b_max - 1));
    return spec;
}

double learning_rate_at(const TrainConfig& config, int epoch) {
    return config.base_lr * std::pow(0.5, epoch / config.lr_half_life);
}

TrainingPair make_training_pair(const ImageBuffer& original, int epoch,
                                const TrainConfig& config, Rng& rng) {
    original.validate();
    if (original.width < config.patch_size ||
        original.height < config.patch_size)
        throw ShapeError("image smaller than the training patch size");
    const BitSpec spec = config.progressive
                             ? progressive_bits(epoch, original.max_bits, rng)
                             : uniform_bits(original.max_bits, rng);
    const int y0 = static_cast<int>(
        rng.uniform_int(0, original.height - config.patch_size));
    const int x0 = static_cast<int>(
        rng.uniform_int(0, original.width - config.patch_size));
    ImageBuffer patch = crop_region(original, x0, y0, config.patch_size,
                                    config.patch_size);
    return TrainingPair{degrade(patch, spec), spec, std::move(patch)};
}

nn::Tensor4<float> to_tensor_images(std::span<const ImageBuffer> images,
                                    double scale) {
    if (images.empty()) throw ShapeError("to_tensor_images: empty batch");
    const int h = images[0].height, w = images[0].width;
    auto out = nn::Tensor4<float>::zeros(
        {static_cast<int>(images.size()), 3, h, w});
    float* dst = out.values().data();
    const size_t plane = static_cast<size_t>(h) * w;
    for (size_t i = 0; i < images.size(); ++i) {
        if (images[i].height != h || images[i].width != w)
            throw ShapeError("to_tensor_images: mixed sizes in batch");
        for (int c = 0; c < 3; ++c)
            for (size_t p = 0; p < plane; ++p)
                dst[(i * 3 + c) * plane + p] = static_cast<float>(
                    images[i].data[p * 3 + c] * scale);
    }
    return out;
}

nn::Tensor4<float> to_tensor_maps(std::span<const WeightingMap> maps) {
    if (maps.empty()) throw ShapeError("to_tensor_maps: empty batch");
    const int h = maps[0].height, w = maps[0].width;
    auto out =
        nn::Tensor4<float>::zeros({static_cast<int>(maps.size()), 3, h, w});
    float* dst = out.values().data();
    const size_t plane = static_cast<size_t>(h) * w;
    for (size_t i = 0; i < maps.size(); ++i) {
        if (maps[i].height != h || maps[i].width != w)
            throw ShapeError("to_tensor_maps: mixed sizes in batch");
        for (int c = 0; c < 3; ++c)
            for (size_t p = 0; p < plane; ++p)
                dst[(i * 3 + c) * plane + p] = maps[i].data[p * 3 + c];
    }
    return out;
}

EpochStats train_epoch(BrNet<float>& model, std::span<const NamedImage> dataset,
                       int epoch, const TrainConfig& config,
                       nn::AdamState<float>& adam) {
    config.validate();
    if (dataset.empty()) throw Error("train_epoch: empty dataset");
    const int b_max = model.config().max_bits;
    for (const auto& named : dataset)
        if (named.image.max_bits != b_max)
            throw BitSpecError("dataset image " + named.name +
                               " does not match the model depth");

    Rng rng(mix_seed(config.seed, static_cast<uint64_t>(epoch)));
    const int batches =
        std::max(1, config.patches_per_epoch / config.batch_size);
    const double denom = static_cast<double>((1 << b_max) - 1);
    adam.learning_rate = static_cast<float>(learning_rate_at(config, epoch));

    double loss_sum = 0.0;
    for (int batch = 0; batch < batches; ++batch) {
        std::vector<ImageBuffer> lbds, originals;
        std::vector<BitSpec> specs;
        std::vector<WeightingMap> targets;
        for (int s = 0; s < config.batch_size; ++s) {
            const size_t idx = rng.uniform_int(0, dataset.size() - 1);
            TrainingPair pair =
                make_training_pair(dataset[idx].image, epoch, config, rng);
            if (!config.value_mode)
                targets.push_back(
                    exact_weighting(pair.original, pair.lbd, pair.spec));
            specs.push_back(pair.spec);
            originals.push_back(std::move(pair.original));
            lbds.push_back(std::move(pair.lbd));
        }

        auto input = model.make_input(lbds, specs);
        auto w = model.forward_map(input);
        nn::Tensor4<float> loss;
        if (config.value_mode) {
            // reconstruct normalized values: lbd/L + w * (2^b/L)
            auto lbd_norm = to_tensor_images(lbds, 1.0 / denom);
            auto bounds = nn::Tensor4<float>::zeros(w.shape());
            const size_t per_sample = static_cast<size_t>(w.shape().c) *
                                      w.shape().h * w.shape().w;
            for (int s = 0; s < config.batch_size; ++s)
                std::fill_n(bounds.values().begin() + s * per_sample,
                            per_sample,
                            static_cast<float>(
                                residual_bound(specs[s]).value / denom));
            auto pred = nn::add(lbd_norm, nn::mul(w, bounds));
            loss = nn::l1_loss(pred, to_tensor_images(originals, 1.0 / denom));
        } else {
            loss = nn::l1_loss(w, to_tensor_maps(targets));
        }

        model.params().zero_grad();
        nn::backward(loss);
        nn::adam_step(model.params(), adam);
        loss_sum += loss.item();
    }

    EpochStats stats;
    stats.mean_loss = loss_sum / batches;
    stats.lr = adam.learning_rate;
    stats.b_ub = config.progressive
                     ? TrainSchedule{epoch, b_max}.bits_upper_bound()
                     : b_max - 1;
    return stats;
}

Trainer::Trainer(ModelConfig model_config, TrainConfig config,
                 std::vector<NamedImage> dataset, std::string out_dir,
                 uint64_t model_seed)
    : config_(config), model_(model_config, model_seed),
      dataset_(std::move(dataset)), out_dir_(std::move(out_dir)) {
    config_.validate();
    if (dataset_.empty()) throw Error("Trainer: empty dataset");
    fs::create_directories(out_dir_);
    adam_.learning_rate = static_cast<float>(config_.base_lr);
}

void Trainer::save(const std::string& filename, int next_epoch) const {
    nn::save_checkpoint((fs::path(out_dir_) / filename).string(),
                        model_.config().to_text(), model_.params(),
                        /*with_schedule=*/true,
                        static_cast<uint32_t>(next_epoch),
                        static_cast<uint64_t>(adam_.t));
}

void Trainer::resume(const std::string& checkpoint_path) {
    const std::string expected = model_.config().to_text();
    const nn::CheckpointMeta meta = nn::load_checkpoint(
        checkpoint_path, model_.params(), &expected, /*load_moments=*/true);
    if (!meta.has_schedule)
        throw CheckpointError("checkpoint has no training state: " +
                              checkpoint_path);
    adam_.t = static_cast<int64_t>(meta.adam_t);
    next_epoch_ = static_cast<int>(meta.epoch);
}

void Trainer::run(std::ostream& log) {
    const fs::path csv_path = fs::path(out_dir_) / "loss.csv";
    const bool fresh = !fs::exists(csv_path) || fs::file_size(csv_path) == 0;
    std::ofstream csv(csv_path, std::ios::app);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    if (fresh) csv << "epoch,mean_loss,lr,b_ub\n";

    for (int epoch = next_epoch_; epoch < config_.epochs; ++epoch) {
        const EpochStats stats =
            train_epoch(model_, dataset_, epoch, config_, adam_);
        csv << epoch << ',' << stats.mean_loss << ',' << stats.lr << ','
            << stats.b_ub << '\n';
        csv.flush();
        log << "epoch " << epoch << " loss " << stats.mean_loss << " lr "
            << stats.lr << " b_ub " << stats.b_ub << "\n";

        if ((epoch + 1) % config_.checkpoint_every == 0)
            save("checkpoint-" + std::to_string(epoch + 1) + ".bdek",
                 epoch + 1);
        save("last.bdek", epoch + 1);
        next_epoch_ = epoch + 1;
    }
    save("final.bdek", config_.epochs);
}

} // namespace bdekit
