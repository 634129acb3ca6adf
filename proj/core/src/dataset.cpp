#include "bdekit/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bdekit/errors.hpp"
#include "bdekit/png_io.hpp"

namespace bdekit {

namespace fs = std::filesystem;

std::optional<int> DatasetManifest::expected_count(const std::string& name) {
    if (name == "kodak") return 24;
    if (name == "set5") return 5;
    if (name == "set14") return 14;
    if (name == "b100") return 100;
    if (name == "div2k-train") return 900;
    return std::nullopt;
}

DatasetManifest DatasetManifest::read_file(const std::string& path,
                                           const std::string& name) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    DatasetManifest manifest;
    manifest.name = name;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string filename, digest;
        if (!(fields >> filename >> digest) || digest.size() != 64)
            throw ManifestError(path + " line " + std::to_string(lineno) +
                                ": expected \"filename sha256\"");
        manifest.files.emplace_back(std::move(filename), std::move(digest));
    }
    if (const auto expected = expected_count(name);
        expected && *expected != static_cast<int>(manifest.files.size()))
        throw ManifestError(path + ": " + name + " should list " +
                            std::to_string(*expected) + " files, found " +
                            std::to_string(manifest.files.size()));
    return manifest;
}

void DatasetManifest::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path);
    for (const auto& [filename, digest] : files)
        out << filename << ' ' << digest << '\n';
    if (!out) throw IoError("manifest write failed: " + path);
}

void DatasetManifest::verify_dir(const std::string& dir) const {
    if (const auto expected = expected_count(name);
        expected && *expected != static_cast<int>(files.size()))
        throw ManifestError(name + " manifest should list " +
                            std::to_string(*expected) + " files, lists " +
                            std::to_string(files.size()));
    std::set<std::string> listed;
    for (const auto& [filename, digest] : files) {
        listed.insert(filename);
        const fs::path path = fs::path(dir) / filename;
        if (!fs::exists(path))
            throw ManifestError("manifest mismatch: missing file " + filename);
        const std::string actual = sha256_hex_file(path.string());
        if (actual != digest)
            throw ManifestError("manifest mismatch: digest differs for " +
                                filename);
    }
    for (const auto& filename : list_pngs(dir))
        if (!listed.count(filename))
            throw ManifestError("manifest mismatch: unlisted file " + filename);
}

std::string sha256_hex_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for digest: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw InternalError("EVP_MD_CTX_new failed");
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw InternalError("EVP_DigestInit_ex failed");
    }
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0 &&
            EVP_DigestUpdate(ctx, buf, static_cast<size_t>(in.gcount())) != 1) {
            EVP_MD_CTX_free(ctx);
            throw InternalError("EVP_DigestUpdate failed");
        }
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw InternalError("EVP_DigestFinal_ex failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char hex[] = "0123456789abcdef";
    std::string out(len * 2, '0');
    for (unsigned int i = 0; i < len; ++i) {
        out[2 * i] = hex[md[i] >> 4];
        out[2 * i + 1] = hex[md[i] & 0xf];
    }
    return out;
}

DatasetManifest make_manifest(const std::string& name, const std::string& dir) {
    DatasetManifest manifest;
    manifest.name = name;
    for (const auto& filename : list_pngs(dir))
        manifest.files.emplace_back(
            filename, sha256_hex_file((fs::path(dir) / filename).string()));
    return manifest;
}

std::vector<std::string> list_pngs(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw IoError("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

std::vector<NamedImage> load_dataset(const std::string& dir,
                                     const DatasetManifest* manifest,
                                     int jobs) {
    if (manifest) manifest->verify_dir(dir);
    const auto names = list_pngs(dir);
    if (names.empty()) throw IoError("no PNG images in " + dir);

    std::vector<NamedImage> images(names.size());
    if (jobs <= 1) {
        for (size_t i = 0; i < names.size(); ++i)
            images[i] = {names[i],
                         decode_png((fs::path(dir) / names[i]).string())};
        return images;
    }
    std::vector<std::string> failures(names.size());
    const int n = static_cast<int>(names.size());
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (int i = 0; i < n; ++i) {
        try {
            images[i] = {names[i],
                         decode_png((fs::path(dir) / names[i]).string())};
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    }
    for (const auto& f : failures)
        if (!f.empty()) throw IoError(f);
    return images;
}

} // namespace bdekit
