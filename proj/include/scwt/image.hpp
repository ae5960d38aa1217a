#pragma once

#include <cstddef>
#include <vector>

namespace scwt {

/// Dense height x width x channels image stored as channel planes
/// (all of channel 0, then channel 1, ...), row-major within a plane.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  static Image zeros(int height, int width, int channels) {
    Image img;
    img.height = height;
    img.width = width;
    img.channels = channels;
    img.data.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
    return img;
  }

  std::size_t offset(int h, int w, int c) const noexcept {
    return (static_cast<std::size_t>(c) * height + h) * width + w;
  }
  double& at(int h, int w, int c) noexcept { return data[offset(h, w, c)]; }
  double at(int h, int w, int c) const noexcept { return data[offset(h, w, c)]; }

  std::size_t size() const noexcept { return data.size(); }
  bool operator==(const Image&) const = default;
};

}  // namespace scwt
