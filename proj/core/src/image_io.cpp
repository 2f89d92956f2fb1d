#include "hdm/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>

namespace hdm {

RawImage load_image(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw InputError("load_image: cannot read " + path.string());
  if (mat.depth() != CV_8U) throw InputError("load_image: only 8-bit images are supported");
  const int channels = mat.channels();
  if (channels != 1 && channels != 3 && channels != 4)
    throw InputError("load_image: unsupported channel count " + std::to_string(channels));

  RawImage out;
  out.pixels = Image(mat.rows, mat.cols, channels == 1 ? 1 : 3);
  for (int r = 0; r < mat.rows; ++r) {
    const uchar* row = mat.ptr<uchar>(r);
    for (int c = 0; c < mat.cols; ++c) {
      if (channels == 1) {
        out.pixels.at(r, c, 0) = row[c] / 255.0;
      } else {
        // OpenCV stores BGR(A); alpha is dropped
        out.pixels.at(r, c, 0) = row[c * channels + 2] / 255.0;
        out.pixels.at(r, c, 1) = row[c * channels + 1] / 255.0;
        out.pixels.at(r, c, 2) = row[c * channels + 0] / 255.0;
      }
    }
  }
  return out;
}

namespace {

uchar to_byte(double v) {
  return static_cast<uchar>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.c != 1 && img.c != 3)
    throw InputError("write_png: unsupported channel count " + std::to_string(img.c));
  cv::Mat mat(img.h, img.w, img.c == 1 ? CV_8UC1 : CV_8UC3);
  for (int r = 0; r < img.h; ++r) {
    uchar* row = mat.ptr<uchar>(r);
    for (int c = 0; c < img.w; ++c) {
      if (img.c == 1) {
        row[c] = to_byte(img.at(r, c, 0));
      } else {
        row[c * 3 + 0] = to_byte(img.at(r, c, 2));
        row[c * 3 + 1] = to_byte(img.at(r, c, 1));
        row[c * 3 + 2] = to_byte(img.at(r, c, 0));
      }
    }
  }
  if (!cv::imwrite(path.string(), mat))
    throw InputError("write_png: cannot write " + path.string());
}

void write_png(const std::filesystem::path& path, const MaskGrid& map) {
  Image img(map.h, map.w, 1);
  for (std::size_t i = 0; i < map.v.size(); ++i) img.v[i] = map.v[i];
  write_png(path, img);
}

}  // namespace hdm
