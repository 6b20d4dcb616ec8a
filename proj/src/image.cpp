// Copyright (c) the freqres project authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "freqres/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace freqres {

namespace {

std::string Lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string Extension(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  return Lowercase(path.substr(dot + 1));
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
bool NextToken(std::istream& in, std::string& tok) {
  tok.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) break;
  }
  if (c == EOF) return false;
  do {
    tok.push_back(static_cast<char>(c));
  } while ((c = in.get()) != EOF && !std::isspace(c));
  return true;
}

int ParsePnmInt(std::istream& in, const std::string& path) {
  std::string tok;
  if (!NextToken(in, tok)) throw DataError(path + ": truncated header");
  try {
    size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ": bad header token '" + tok + "'");
  }
}

ImageBuffer LoadPnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": unreadable file");
  std::string magic;
  if (!NextToken(in, magic)) throw DataError(path + ": truncated header");
  int planes;
  if (magic == "P5") {
    planes = 1;
  } else if (magic == "P6") {
    planes = 3;
  } else {
    throw DataError(path + ": unsupported format '" + magic + "'");
  }
  int w = ParsePnmInt(in, path);
  int h = ParsePnmInt(in, path);
  int maxval = ParsePnmInt(in, path);
  if (w <= 0 || h <= 0) throw DataError(path + ": bad dimensions");
  if (maxval != 255) {
    throw DataError(path + ": unsupported bit depth (maxval " +
                    std::to_string(maxval) + ")");
  }
  // Exactly one whitespace byte separates the header from the payload;
  // NextToken has already consumed it.
  size_t n = static_cast<size_t>(w) * h * planes;
  std::vector<unsigned char> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw DataError(path + ": truncated pixel data");
  }
  ImageBuffer img(w, h, planes, Domain::kU8);
  // PNM payload is interleaved; our storage is planar.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int p = 0; p < planes; ++p) {
        img.at(p, y, x) = raw[(static_cast<size_t>(y) * w + x) * planes + p];
      }
    }
  }
  return img;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageBuffer LoadPng(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError(path + ": unreadable file");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DataError(path + ": png init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError(path + ": png init failed");
  }
  std::vector<png_bytep> rows;
  std::vector<unsigned char> raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path + ": png decode error");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path + ": unsupported bit depth (16)");
  }
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path + ": unsupported channel count");
  }
  raw.resize(static_cast<size_t>(w) * h * channels);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageBuffer img(w, h, channels, Domain::kU8);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int p = 0; p < channels; ++p) {
        img.at(p, y, x) = raw[(static_cast<size_t>(y) * w + x) * channels + p];
      }
    }
  }
  return img;
}

void SavePnm(const ImageBuffer& img, const std::string& path, int planes) {
  if (img.planes != planes) {
    throw DataError(path + ": plane count " + std::to_string(img.planes) +
                    " does not fit this format");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": unwritable path");
  out << (planes == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(static_cast<size_t>(img.width) * img.height * planes);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int p = 0; p < planes; ++p) {
        raw[(static_cast<size_t>(y) * img.width + x) * planes + p] =
            static_cast<unsigned char>(ClampU8(img.at(p, y, x)));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError(path + ": write failed");
}

void SavePng(const ImageBuffer& img, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw DataError(path + ": unwritable path");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DataError(path + ": png init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError(path + ": png init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError(path + ": png encode error");
  }
  png_init_io(png, fp.get());
  const int color = img.planes == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.width, img.height, 8, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<size_t>(img.width) * img.planes);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int p = 0; p < img.planes; ++p) {
        row[static_cast<size_t>(x) * img.planes + p] =
            static_cast<unsigned char>(ClampU8(img.at(p, y, x)));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageBuffer LoadImage(const std::string& path) {
  const std::string ext = Extension(path);
  if (ext == "png") return LoadPng(path);
  if (ext == "pgm" || ext == "ppm") return LoadPnm(path);
  // Unknown extension: sniff the magic bytes.
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError(path + ": unreadable file");
  char magic[2] = {0, 0};
  probe.read(magic, 2);
  probe.close();
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) return LoadPnm(path);
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') return LoadPng(path);
  throw DataError(path + ": unsupported format");
}

void SaveImage(const ImageBuffer& img, const std::string& path) {
  if (img.planes != 1 && img.planes != 3) {
    throw DataError(path + ": plane count must be 1 or 3");
  }
  const std::string ext = Extension(path);
  if (ext == "pgm") {
    SavePnm(img, path, 1);
  } else if (ext == "ppm") {
    SavePnm(img, path, 3);
  } else if (ext == "png") {
    SavePng(img, path);
  } else {
    throw DataError(path + ": unknown output extension '" + ext + "'");
  }
}

ImageBuffer RgbToLuma(const ImageBuffer& img) {
  if (img.planes != 3) throw DataError("rgb_to_luma: expected 3 planes");
  ImageBuffer out(img.width, img.height, 1, Domain::kReal);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(0, y, x) = 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) +
                        0.114 * img.at(2, y, x);
    }
  }
  return out;
}

namespace {

inline double LaplacianAt(const ImageBuffer& img, int y, int x) {
  const int w = img.width, h = img.height;
  // Replicate padding: out-of-range neighbors clamp to the border pixel.
  const double up = img.at(0, y > 0 ? y - 1 : 0, x);
  const double dn = img.at(0, y < h - 1 ? y + 1 : y, x);
  const double lf = img.at(0, y, x > 0 ? x - 1 : 0);
  const double rt = img.at(0, y, x < w - 1 ? x + 1 : x);
  return up + dn + lf + rt - 4.0 * img.at(0, y, x);
}

}  // namespace

ImageBuffer Laplacian(const ImageBuffer& img) {
  if (img.planes != 1) throw DataError("laplacian: expected 1 plane");
  ImageBuffer out(img.width, img.height, 1, Domain::kReal);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(0, y, x) = LaplacianAt(img, y, x);
    }
  }
  return out;
}

ImageBuffer LaplacianSerial(const ImageBuffer& img) {
  if (img.planes != 1) throw DataError("laplacian: expected 1 plane");
  ImageBuffer out(img.width, img.height, 1, Domain::kReal);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(0, y, x) = LaplacianAt(img, y, x);
    }
  }
  return out;
}

ImageBuffer ToU8(const ImageBuffer& img) {
  ImageBuffer out(img.width, img.height, img.planes, Domain::kU8);
  for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = ClampU8(img.data[i]);
  return out;
}

ImageBuffer FlipHorizontal(const ImageBuffer& img) {
  ImageBuffer out(img.width, img.height, img.planes, img.domain);
  for (int p = 0; p < img.planes; ++p) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        out.at(p, y, x) = img.at(p, y, img.width - 1 - x);
      }
    }
  }
  return out;
}

ImageBuffer CenterCrop(const ImageBuffer& img, int w, int h) {
  if (w > img.width || h > img.height) {
    throw DataError("center_crop: image smaller than crop size");
  }
  const int x0 = (img.width - w) / 2;
  const int y0 = (img.height - h) / 2;
  ImageBuffer out(w, h, img.planes, img.domain);
  for (int p = 0; p < img.planes; ++p) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.at(p, y, x) = img.at(p, y0 + y, x0 + x);
      }
    }
  }
  return out;
}

ImageBuffer ResizeBilinear(const ImageBuffer& img, int w, int h) {
  if (img.width < 1 || img.height < 1) throw DataError("resize: empty image");
  ImageBuffer out(w, h, img.planes, Domain::kReal);
  const double sx = static_cast<double>(img.width) / w;
  const double sy = static_cast<double>(img.height) / h;
  for (int p = 0; p < img.planes; ++p) {
    for (int y = 0; y < h; ++y) {
      // Half-pixel centers.
      double fy = (y + 0.5) * sy - 0.5;
      fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
      const int y0 = static_cast<int>(fy);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const double wy = fy - y0;
      for (int x = 0; x < w; ++x) {
        double fx = (x + 0.5) * sx - 0.5;
        fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
        const int x0 = static_cast<int>(fx);
        const int x1 = std::min(x0 + 1, img.width - 1);
        const double wx = fx - x0;
        const double top = (1.0 - wx) * img.at(p, y0, x0) + wx * img.at(p, y0, x1);
        const double bot = (1.0 - wx) * img.at(p, y1, x0) + wx * img.at(p, y1, x1);
        out.at(p, y, x) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

}  // namespace freqres
