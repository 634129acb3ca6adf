#ifndef BDEKIT_CHECKPOINT_HPP
#define BDEKIT_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <string_view>

#include "bdekit/param_store.hpp"

namespace bdekit::nn {

inline constexpr uint16_t kCheckpointVersion = 1;

/// FNV-1a 64-bit digest; guards the embedded config text.
uint64_t fnv1a64(std::string_view bytes);

/// Header fields plus the optional training-schedule trailer. The exact
/// byte layout is documented in docs/file-formats.md.
struct CheckpointMeta {
    uint16_t version = kCheckpointVersion;
    uint64_t config_digest = 0;
    std::string config_text;
    bool has_schedule = false;
    uint32_t epoch = 0;   // next epoch to run when resuming
    uint64_t adam_t = 0;  // completed optimizer steps
};

/// Writes parameters (and, when with_schedule, the epoch counter, Adam step
/// count, and per-parameter moments) in store order.
void save_checkpoint(const std::string& path, const std::string& config_text,
                     const ParamStore<float>& params,
                     bool with_schedule = false, uint32_t epoch = 0,
                     uint64_t adam_t = 0);

/// Reads only the header; used to discover the embedded model config before
/// constructing a model.
CheckpointMeta read_checkpoint_meta(const std::string& path);

/// Loads parameter values (and moments, when present and requested) into an
/// already-built store whose paths and shapes must match the file. When
/// expected_config_text is non-null its digest must match the stored one.
CheckpointMeta load_checkpoint(const std::string& path,
                               ParamStore<float>& params,
                               const std::string* expected_config_text = nullptr,
                               bool load_moments = false);

} // namespace bdekit::nn

#endif
