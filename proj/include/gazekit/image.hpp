#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace gazekit {

// Grayscale raster, intensities in [0, 255]; rows = y, cols = x.
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Bilinear sample at continuous coordinates; integer coordinates address
// pixel centres. Samples outside the image return fill.
inline double sample_bilinear(const Image& img, double x, double y, double fill = 0.0) {
    if (!(x >= 0.0) || !(y >= 0.0) || !(x <= double(img.cols() - 1)) ||
        !(y <= double(img.rows() - 1)))
        return fill;
    const int x0 = int(std::floor(x));
    const int y0 = int(std::floor(y));
    const int x1 = std::min(x0 + 1, int(img.cols() - 1));
    const int y1 = std::min(y0 + 1, int(img.rows() - 1));
    const double fx = x - x0;
    const double fy = y - y0;
    return (1.0 - fy) * ((1.0 - fx) * img(y0, x0) + fx * img(y0, x1)) +
           fy * ((1.0 - fx) * img(y1, x0) + fx * img(y1, x1));
}

// Binary (P5) PGM, 8 bits, values clamped and rounded.
void write_pgm(const Image& img, const std::string& path);

}  // namespace gazekit
