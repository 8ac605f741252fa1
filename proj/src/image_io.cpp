#include "scar/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "scar/errors.hpp"

namespace scar {

Image load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw LoadError("cannot read image: " + path.string());
  Image img(bgr.rows, bgr.cols);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img.at(y, x, 0) = row[x][2];
      img.at(y, x, 1) = row[x][1];
      img.at(y, x, 2) = row[x][0];
    }
  }
  return img;
}

void save_image(const std::filesystem::path& path, const Image& img) {
  cv::Mat bgr(img.h, img.w, CV_8UC3);
  for (int y = 0; y < img.h; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.w; ++x) {
      row[x][2] = img.at(y, x, 0);
      row[x][1] = img.at(y, x, 1);
      row[x][0] = img.at(y, x, 2);
    }
  }
  if (!cv::imwrite(path.string(), bgr)) throw LoadError("cannot write image: " + path.string());
}

void save_gray_image(const std::filesystem::path& path, int h, int w,
                     const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(h) * w)
    throw ValidationError("gray image buffer size mismatch");
  cv::Mat gray(h, w, CV_8UC1, const_cast<std::uint8_t*>(pixels.data()));
  if (!cv::imwrite(path.string(), gray)) throw LoadError("cannot write image: " + path.string());
}

}  // namespace scar
