#ifndef BDEKIT_DATASET_HPP
#define BDEKIT_DATASET_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bdekit/errors.hpp"
#include "bdekit/image.hpp"

namespace bdekit {

/// Text manifest pinning a benchmark directory: one `filename sha256` line
/// per image. Known benchmark names carry an expected image count.
struct DatasetManifest {
    std::string name;
    std::vector<std::pair<std::string, std::string>> files;

    /// 24 for kodak, 5 for set5, 14 for set14, 100 for b100,
    /// 900 for div2k-train; nullopt for unknown names.
    static std::optional<int> expected_count(const std::string& name);

    static DatasetManifest read_file(const std::string& path,
                                     const std::string& name);
    void write_file(const std::string& path) const;

    /// Checks the expected count, that every listed file exists with a
    /// matching digest, and that the directory holds no extra PNGs. Throws
    /// ManifestError naming the first offending file.
    void verify_dir(const std::string& dir) const;
};

/// SHA-256 of a file's bytes as lowercase hex.
std::string sha256_hex_file(const std::string& path);

/// Builds a manifest from the PNGs currently in a directory.
DatasetManifest make_manifest(const std::string& name, const std::string& dir);

/// Lexicographically sorted PNG filenames in a directory.
std::vector<std::string> list_pngs(const std::string& dir);

/// Decodes every PNG in the directory in lexicographic filename order.
/// With a manifest, the directory is verified first. jobs > 1 decodes in
/// parallel; the returned order is deterministic either way.
std::vector<NamedImage> load_dataset(const std::string& dir,
                                     const DatasetManifest* manifest = nullptr,
                                     int jobs = 1);

} // namespace bdekit

#endif
