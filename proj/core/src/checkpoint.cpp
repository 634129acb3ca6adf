#include "bdekit/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "bdekit/errors.hpp"

namespace bdekit::nn {

namespace {

constexpr char kMagic[6] = {'B', 'D', 'E', 'K', 'I', 'T'};

void put_u16(std::ostream& out, uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff),
                       static_cast<char>(v >> 8)};
    out.write(b, 2);
}

void put_u32(std::ostream& out, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void put_f32_array(std::ostream& out, const float* data, size_t count) {
    static_assert(sizeof(float) == 4);
    for (size_t i = 0; i < count; ++i) {
        uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        put_u32(out, bits);
    }
}

struct Reader {
    std::ifstream in;
    std::string path;

    void read_bytes(void* dst, size_t n) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw CheckpointTruncatedError("checkpoint truncated: " + path);
    }
    uint16_t u16() {
        unsigned char b[2];
        read_bytes(b, 2);
        return static_cast<uint16_t>(b[0] | (b[1] << 8));
    }
    uint32_t u32() {
        unsigned char b[4];
        read_bytes(b, 4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        unsigned char b[8];
        read_bytes(b, 8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
        return v;
    }
    std::string str(size_t n) {
        std::string s(n, '\0');
        if (n) read_bytes(s.data(), n);
        return s;
    }
    void f32_array(float* dst, size_t count) {
        for (size_t i = 0; i < count; ++i) {
            const uint32_t bits = u32();
            std::memcpy(&dst[i], &bits, 4);
        }
    }
};

Reader open_reader(const std::string& path) {
    Reader r{std::ifstream(path, std::ios::binary), path};
    if (!r.in) throw IoError("cannot open checkpoint: " + path);
    char magic[6];
    r.read_bytes(magic, 6);
    if (std::memcmp(magic, kMagic, 6) != 0)
        throw CheckpointError("not a checkpoint file (bad magic): " + path);
    return r;
}

CheckpointMeta read_header(Reader& r) {
    CheckpointMeta meta;
    meta.version = r.u16();
    if (meta.version != kCheckpointVersion)
        throw CheckpointVersionError(
            "checkpoint format version " + std::to_string(meta.version) +
            " unsupported (expected " + std::to_string(kCheckpointVersion) +
            "): " + r.path);
    meta.config_digest = r.u64();
    const uint32_t config_len = r.u32();
    meta.config_text = r.str(config_len);
    if (fnv1a64(meta.config_text) != meta.config_digest)
        throw CheckpointDigestError(
            "embedded config does not match its digest: " + r.path);
    return meta;
}

} // namespace

uint64_t fnv1a64(std::string_view bytes) {
    uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

void save_checkpoint(const std::string& path, const std::string& config_text,
                     const ParamStore<float>& params, bool with_schedule,
                     uint32_t epoch, uint64_t adam_t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, 6);
    put_u16(out, kCheckpointVersion);
    put_u64(out, fnv1a64(config_text));
    put_u32(out, static_cast<uint32_t>(config_text.size()));
    out.write(config_text.data(),
              static_cast<std::streamsize>(config_text.size()));

    const auto& entries = params.entries();
    put_u32(out, static_cast<uint32_t>(entries.size()));
    for (const auto& e : entries) {
        if (e.path.size() > 0xffff)
            throw CheckpointError("parameter path too long: " + e.path);
        put_u16(out, static_cast<uint16_t>(e.path.size()));
        out.write(e.path.data(), static_cast<std::streamsize>(e.path.size()));
        const Shape4 s = e.tensor.shape();
        put_u32(out, static_cast<uint32_t>(s.n));
        put_u32(out, static_cast<uint32_t>(s.c));
        put_u32(out, static_cast<uint32_t>(s.h));
        put_u32(out, static_cast<uint32_t>(s.w));
        const auto& v = e.tensor.values();
        put_u64(out, static_cast<uint64_t>(v.size()) * 4);
        put_f32_array(out, v.data(), v.size());
    }

    out.put(with_schedule ? '\x01' : '\x00');
    if (with_schedule) {
        put_u32(out, epoch);
        put_u64(out, adam_t);
        for (const auto& e : entries) {
            std::vector<float> m = e.m, v = e.v;
            // a parameter never stepped yet has empty moments; store zeros
            // so the record shape is uniform
            if (m.empty()) m.assign(e.tensor.numel(), 0.0f);
            if (v.empty()) v.assign(e.tensor.numel(), 0.0f);
            put_u64(out, static_cast<uint64_t>(m.size()) * 4);
            put_f32_array(out, m.data(), m.size());
            put_f32_array(out, v.data(), v.size());
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
    Reader r = open_reader(path);
    return read_header(r);
}

CheckpointMeta load_checkpoint(const std::string& path,
                               ParamStore<float>& params,
                               const std::string* expected_config_text,
                               bool load_moments) {
    Reader r = open_reader(path);
    CheckpointMeta meta = read_header(r);
    if (expected_config_text &&
        fnv1a64(*expected_config_text) != meta.config_digest)
        throw CheckpointDigestError(
            "checkpoint was saved for a different model config: " + path);

    auto& entries = params.entries();
    const uint32_t count = r.u32();
    if (count != entries.size())
        throw CheckpointError("checkpoint holds " + std::to_string(count) +
                              " parameters, model expects " +
                              std::to_string(entries.size()) + ": " + path);
    for (auto& e : entries) {
        const uint16_t path_len = r.u16();
        const std::string name = r.str(path_len);
        if (name != e.path)
            throw CheckpointError("parameter order mismatch: file has \"" +
                                  name + "\", model expects \"" + e.path +
                                  "\"");
        const Shape4 s{static_cast<int>(r.u32()), static_cast<int>(r.u32()),
                       static_cast<int>(r.u32()), static_cast<int>(r.u32())};
        if (!(s == e.tensor.shape()))
            throw CheckpointError("shape mismatch for " + e.path + ": file " +
                                  s.str() + ", model " +
                                  e.tensor.shape().str());
        const uint64_t bytes = r.u64();
        if (bytes != static_cast<uint64_t>(e.tensor.numel()) * 4)
            throw CheckpointError("data length mismatch for " + e.path);
        r.f32_array(e.tensor.values().data(), e.tensor.numel());
    }

    unsigned char flag;
    r.read_bytes(&flag, 1);
    if (flag == 1) {
        meta.has_schedule = true;
        meta.epoch = r.u32();
        meta.adam_t = r.u64();
        for (auto& e : entries) {
            const uint64_t bytes = r.u64();
            if (bytes != static_cast<uint64_t>(e.tensor.numel()) * 4)
                throw CheckpointError("moment length mismatch for " + e.path);
            if (load_moments) {
                e.m.resize(e.tensor.numel());
                e.v.resize(e.tensor.numel());
                r.f32_array(e.m.data(), e.m.size());
                r.f32_array(e.v.data(), e.v.size());
            } else {
                std::vector<float> skip(e.tensor.numel() * 2);
                r.f32_array(skip.data(), skip.size());
            }
        }
    } else if (flag != 0) {
        throw CheckpointError("unknown trailer flag in " + path);
    }
    return meta;
}

} // namespace bdekit::nn
