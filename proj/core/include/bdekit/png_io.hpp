#ifndef BDEKIT_PNG_IO_HPP
#define BDEKIT_PNG_IO_HPP

#include <string>

#include "bdekit/errors.hpp"
#include "bdekit/image.hpp"

namespace bdekit {

/// Decodes an 8- or 16-bit PNG into a 3-channel buffer. Grayscale and
/// palette images are promoted to RGB; an alpha channel is dropped with a
/// warning on stderr.
ImageBuffer decode_png(const std::string& path);

/// Writes a buffer as RGB PNG at its native depth (8 or 16 bit).
void encode_png(const ImageBuffer& img, const std::string& path);

} // namespace bdekit

#endif
