#pragma once

#include <string>

#include "fervit/image.hpp"
#include "fervit/manifest.hpp"

namespace fervit {

// Decode a raster file (png/jpg/tiff/bmp/pgm...) into a raw_0_255 float
// image, RGB channel order, 1 or 3 channels.
ImageTensor decode_image_file(const std::string& path);

// Resolve any manifest sample to pixels: filesystem decode for path refs,
// CSV row extraction for fer2013:// refs, procedural render for
// synthetic:// refs. FER-2013 rows come back single-channel.
ImageTensor load_sample_image(const Sample& sample);

} // namespace fervit
