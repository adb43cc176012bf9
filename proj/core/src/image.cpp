// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/image.hpp"

#include <png.h>
#include <stdio.h>
#include <jpeglib.h>

#include <array>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <memory>

#include "sg3d/error.hpp"

namespace sg3d {

namespace {

bool is_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  in.read(reinterpret_cast<char*>(sig.data()), sig.size());
  return in.gcount() == 8 && png_sig_cmp(sig.data(), 0, 8) == 0;
}

struct FileCloser {
  void operator()(FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

RgbImage read_jpeg(const std::filesystem::path& path, bool header_only) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  jpeg_decompress_struct cinfo;
  JpegError jerr;
  cinfo.err = jpeg_std_error(&jerr.mgr);
  jerr.mgr.error_exit = [](j_common_ptr info) {
    auto* e = reinterpret_cast<JpegError*>(info->err);
    (*info->err->format_message)(info, e->message);
    std::longjmp(e->jump, 1);
  };
  RgbImage out;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::kFormat, "jpeg " + path.string() + ": " + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  if (header_only) {
    out = RgbImage(static_cast<int>(cinfo.image_width), static_cast<int>(cinfo.image_height), 0);
    jpeg_destroy_decompress(&cinfo);
    return out;
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out = RgbImage(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height), 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = &out.at(0, static_cast<int>(cinfo.output_scanline), 0);
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

}  // namespace

RgbImage read_rgb_image(const std::filesystem::path& path) {
  if (!is_png(path)) return read_jpeg(path, false);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorCode::kFormat, "png " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height), 3);
  if (!png_image_finish_read(&img, nullptr, out.data().data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::kFormat, "png " + path.string() + ": " + img.message);
  }
  return out;
}

std::pair<int, int> read_image_size(const std::filesystem::path& path) {
  if (!is_png(path)) {
    const RgbImage hdr = read_jpeg(path, true);
    return {hdr.width(), hdr.height()};
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorCode::kFormat, "png " + path.string() + ": " + img.message);
  }
  const std::pair<int, int> size{static_cast<int>(img.width), static_cast<int>(img.height)};
  png_image_free(&img);
  return size;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.data().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, "png write " + path.string() + ": " + img.message);
  }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.data().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png encode: ") + img.message);
  }
  std::vector<std::uint8_t> buffer(size);
  if (!png_image_write_to_memory(&img, buffer.data(), &size, 0, image.data().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png encode: ") + img.message);
  }
  buffer.resize(size);
  return buffer;
}

void write_png16(const std::filesystem::path& path, const Gray16Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  // Linear 16-bit gray: the simplified API stores these values verbatim.
  img.format = PNG_FORMAT_LINEAR_Y;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.data().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, "png write " + path.string() + ": " + img.message);
  }
}

Gray16Image read_png16(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorCode::kFormat, "png " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_LINEAR_Y;
  Gray16Image out(static_cast<int>(img.width), static_cast<int>(img.height), 1);
  if (!png_image_finish_read(&img, nullptr, out.data().data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::kFormat, "png " + path.string() + ": " + img.message);
  }
  return out;
}

}  // namespace sg3d
