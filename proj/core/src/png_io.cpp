#include "bdekit/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <iostream>
#include <memory>
#include <vector>

#include "bdekit/errors.hpp"

namespace bdekit {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngState {
    std::string error;
    bool truncated = false;
    bool unsupported = false;
};

void error_fn(png_structp png, png_const_charp msg) {
    auto* state = static_cast<PngState*>(png_get_error_ptr(png));
    if (state && state->error.empty()) state->error = msg;
    longjmp(png_jmpbuf(png), 1);
}

void warn_fn(png_structp, png_const_charp) {}

struct ReadSource {
    std::FILE* file;
    PngState* state;
};

void read_fn(png_structp png, png_bytep out, png_size_t n) {
    auto* src = static_cast<ReadSource*>(png_get_io_ptr(png));
    if (std::fread(out, 1, n, src->file) != n) {
        src->state->truncated = true;
        png_error(png, "unexpected end of file");
    }
}

/// Raw decode output: packed big-endian rows plus the post-transform format.
struct DecodeBuffers {
    std::vector<unsigned char> bytes;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0;
    int channels = 0;
    bool alpha_dropped = false;
};

/// All libpng read calls live in this frame so the longjmp error path never
/// crosses a frame owning nontrivial locals. Returns false when the error
/// handler fired; `state` then says why.
bool decode_into(std::FILE* file, PngState& state, DecodeBuffers& buf) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state,
                                             error_fn, warn_fn);
    if (!png) {
        state.error = "png_create_read_struct failed";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        state.error = "png_create_info_struct failed";
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    ReadSource src{file, &state};
    png_set_read_fn(png, &src, read_fn);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    bool has_alpha = (color & PNG_COLOR_MASK_ALPHA) != 0;
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png);
        has_alpha = true;
    }
    if (has_alpha) {
        png_set_strip_alpha(png);
        buf.alpha_dropped = true;
    }
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    buf.width = png_get_image_width(png, info);
    buf.height = png_get_image_height(png, info);
    buf.bit_depth = png_get_bit_depth(png, info);
    buf.channels = png_get_channels(png, info);
    if (buf.channels != 3 || (buf.bit_depth != 8 && buf.bit_depth != 16)) {
        state.unsupported = true;
        state.error = "unsupported color layout after expansion (channels=" +
                      std::to_string(buf.channels) +
                      ", depth=" + std::to_string(buf.bit_depth) + ")";
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }

    const size_t rowbytes = png_get_rowbytes(png, info);
    buf.bytes.resize(rowbytes * buf.height);
    buf.rows.resize(buf.height);
    for (png_uint_32 y = 0; y < buf.height; ++y)
        buf.rows[y] = buf.bytes.data() + static_cast<size_t>(y) * rowbytes;
    png_read_image(png, buf.rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

[[noreturn]] void throw_png(const PngState& state, const std::string& path) {
    if (state.truncated)
        throw PngTruncatedError("truncated PNG: " + path);
    if (state.unsupported)
        throw PngUnsupportedError(path + ": " + state.error);
    throw PngError(path + ": " +
                   (state.error.empty() ? "decode failed" : state.error));
}

/// Mirror of decode_into for the write path.
bool encode_from(std::FILE* file, PngState& state, const ImageBuffer& img,
                 const std::vector<png_bytep>& rows) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state,
                                              error_fn, warn_fn);
    if (!png) {
        state.error = "png_create_write_struct failed";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        state.error = "png_create_info_struct failed";
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, file);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), img.max_bits,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytep*>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

} // namespace

ImageBuffer decode_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("cannot open image: " + path);

    PngState state;
    DecodeBuffers buf;
    if (!decode_into(file.get(), state, buf)) throw_png(state, path);
    if (buf.alpha_dropped)
        std::cerr << "warning: " << path << ": alpha channel dropped\n";

    ImageBuffer img(static_cast<int>(buf.width), static_cast<int>(buf.height),
                    buf.bit_depth);
    const size_t rowsamples = buf.width * 3;
    for (png_uint_32 y = 0; y < buf.height; ++y) {
        const unsigned char* row = buf.rows[y];
        int32_t* dst = img.data.data() + static_cast<size_t>(y) * rowsamples;
        if (buf.bit_depth == 8) {
            for (size_t i = 0; i < rowsamples; ++i) dst[i] = row[i];
        } else {
            // PNG stores 16-bit samples big-endian
            for (size_t i = 0; i < rowsamples; ++i)
                dst[i] = (static_cast<int32_t>(row[2 * i]) << 8) | row[2 * i + 1];
        }
    }
    img.validate();
    return img;
}

void encode_png(const ImageBuffer& img, const std::string& path) {
    // depth first: storability as PNG is this function's own contract
    if (img.max_bits != 8 && img.max_bits != 16)
        throw PngUnsupportedError("PNG output supports 8- or 16-bit images, "
                                  "got max_bits=" +
                                  std::to_string(img.max_bits));
    img.validate();

    const size_t rowsamples = static_cast<size_t>(img.width) * 3;
    const size_t rowbytes = rowsamples * (img.max_bits / 8);
    std::vector<unsigned char> bytes(rowbytes * img.height);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) {
        unsigned char* row = bytes.data() + static_cast<size_t>(y) * rowbytes;
        rows[y] = row;
        const int32_t* src =
            img.data.data() + static_cast<size_t>(y) * rowsamples;
        if (img.max_bits == 8) {
            for (size_t i = 0; i < rowsamples; ++i)
                row[i] = static_cast<unsigned char>(src[i]);
        } else {
            for (size_t i = 0; i < rowsamples; ++i) {
                row[2 * i] = static_cast<unsigned char>(src[i] >> 8);
                row[2 * i + 1] = static_cast<unsigned char>(src[i] & 0xff);
            }
        }
    }

    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot write image: " + path);
    PngState state;
    if (!encode_from(file.get(), state, img, rows))
        throw PngError(path + ": " +
                       (state.error.empty() ? "encode failed" : state.error));
}

} // namespace bdekit
