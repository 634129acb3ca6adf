#ifndef BDEKIT_TRAINING_HPP
#define BDEKIT_TRAINING_HPP

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bdekit/brnet.hpp"
#include "bdekit/dataset.hpp"

namespace bdekit {

struct TrainConfig {
    int epochs = 100;
    int batch_size = 16;
    int patch_size = 96;     // must be divisible by 4
    double base_lr = 1e-4;
    int lr_half_life = 200;  // fixed by the method; kept explicit in configs
    uint64_t seed = 0;
    bool progressive = true; // false runs the uniform-bits ablation arm
    bool value_mode = false; // L1 on normalized values instead of the map
    int patches_per_epoch = 1000;
    int checkpoint_every = 25;

    void validate() const;
    std::string to_text() const;
    static TrainConfig from_text(const std::string& text);
};

/// Progressive curriculum state: the epoch-dependent upper bound of the
/// missing-bits draw.
struct TrainSchedule {
    int epoch = 0;
    int b_max = 8;

    int bits_upper_bound() const {
        const int ub = 4 + epoch / 20;
        return ub < b_max - 1 ? ub : b_max - 1;
    }
};

/// Draws missing_bits uniformly from [1, min(4 + floor(E/20), b_max - 1)],
/// both ends inclusive.
BitSpec progressive_bits(int epoch, int b_max, Rng& rng);

/// The no-curriculum arm: uniform over [1, b_max - 1].
BitSpec uniform_bits(int b_max, Rng& rng);

/// base_lr halved once per completed half-life.
double learning_rate_at(const TrainConfig& config, int epoch);

struct TrainingPair {
    ImageBuffer lbd;
    BitSpec spec;
    ImageBuffer original;
};

/// Draws a bit spec (progressive or uniform per config), crops a random
/// patch, and degrades it. Draw order: spec, then y0, then x0.
TrainingPair make_training_pair(const ImageBuffer& original, int epoch,
                                const TrainConfig& config, Rng& rng);

/// Planar (B,3,H,W) leaf tensor from images, each sample multiplied by
/// `scale`; used for loss targets and value-mode reconstruction.
nn::Tensor4<float> to_tensor_images(std::span<const ImageBuffer> images,
                                    double scale);
nn::Tensor4<float> to_tensor_maps(std::span<const WeightingMap> maps);

struct EpochStats {
    double mean_loss = 0.0;
    double lr = 0.0;
    int b_ub = 0;
};

/// One epoch: patches_per_epoch random patches in batches, L1 loss in the
/// weighting-map domain (or on normalized values in value mode), one Adam
/// step per batch at the epoch's learning rate. Deterministic given
/// config.seed and the epoch number.
EpochStats train_epoch(BrNet<float>& model, std::span<const NamedImage> dataset,
                       int epoch, const TrainConfig& config,
                       nn::AdamState<float>& adam);

/// Epoch loop with loss CSV, periodic checkpoints, and exact resume.
class Trainer {
public:
    Trainer(ModelConfig model_config, TrainConfig config,
            std::vector<NamedImage> dataset, std::string out_dir,
            uint64_t model_seed = 0);

    /// Continues from a checkpoint written by run(); restores parameters,
    /// optimizer moments, step count, and the next epoch index.
    void resume(const std::string& checkpoint_path);

    void run(std::ostream& log);

    BrNet<float>& model() { return model_; }
    const TrainConfig& config() const { return config_; }
    int next_epoch() const { return next_epoch_; }

private:
    void save(const std::string& filename, int next_epoch) const;

    TrainConfig config_;
    BrNet<float> model_;
    std::vector<NamedImage> dataset_;
    std::string out_dir_;
    nn::AdamState<float> adam_;
    int next_epoch_ = 0;
};

} // namespace bdekit

#endif
