#pragma once

#include <cfloat>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tbd/errors.hpp"
#include "tbd/rfs_core.hpp"

namespace tbd {

/// Marker returned by cell_index for points outside the grid.
inline constexpr std::size_t kOutsideCell = std::numeric_limits<std::size_t>::max();

/// Square-cell raster covering the region of interest.
struct GridGeometry {
    int width = 64;
    int height = 64;
    double cell_size = 1.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    [[nodiscard]] std::size_t num_cells() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    [[nodiscard]] double max_x() const { return origin_x + width * cell_size; }
    [[nodiscard]] double max_y() const { return origin_y + height * cell_size; }
    [[nodiscard]] bool contains(double p1, double p2) const {
        return p1 >= origin_x && p1 < max_x() && p2 >= origin_y && p2 < max_y();
    }

    friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

struct NoiseModel {
    double sigma_n = 1.0;
};

/// Raw intensity frame, row-major (row = p2 axis, column = p1 axis).
struct IntensityImage {
    GridGeometry geometry;
    std::vector<double> cells;
    int k = 0;

    [[nodiscard]] double operator[](std::size_t m) const { return cells[m]; }
};

/// Row-major index of the half-open cell containing (p1, p2).
inline std::size_t cell_index(const GridGeometry& geom, double p1, double p2) {
    const double cx = (p1 - geom.origin_x) / geom.cell_size;
    const double cy = (p2 - geom.origin_y) / geom.cell_size;
    if (!(cx >= 0.0) || !(cy >= 0.0) || cx >= geom.width || cy >= geom.height) return kOutsideCell;
    const auto col = static_cast<std::size_t>(cx);
    const auto row = static_cast<std::size_t>(cy);
    return row * static_cast<std::size_t>(geom.width) + col;
}

inline std::size_t cell_index(const GridGeometry& geom, const ObjectState& x) {
    return cell_index(geom, x.p1, x.p2);
}

/// Single-cell point spread function: the clamped intensity on the occupied cell.
inline double psf_value(const ObjectState& x, std::size_t m, const GridGeometry& geom) {
    return cell_index(geom, x) == m ? x.clamped_gamma() : 0.0;
}

namespace detail {

inline double rayleigh_pdf(double z, double scale2) {
    if (z < 0.0) throw DomainError("Rayleigh density evaluated at negative intensity");
    if (z == 0.0) return 0.0;
    const double v = z / scale2 * std::exp(-z * z / (2.0 * scale2));
    return v < DBL_MIN ? DBL_MIN : v;
}

}  // namespace detail

/// Noise-only cell density R(z; sigma_n).
inline double f0_likelihood(double z, const NoiseModel& noise) {
    return detail::rayleigh_pdf(z, noise.sigma_n * noise.sigma_n);
}

/// Cell density given PSF contribution `d`: R(z; sqrt(d + sigma_n^2)).
inline double f1_likelihood_psf(double z, double d, const NoiseModel& noise) {
    return detail::rayleigh_pdf(z, d + noise.sigma_n * noise.sigma_n);
}

inline double f1_likelihood(double z, const ObjectState& x, std::size_t m, const GridGeometry& geom,
                            const NoiseModel& noise) {
    return f1_likelihood_psf(z, psf_value(x, m, geom), noise);
}

/// f1/f0 in closed form; never underflows for finite z.
inline double likelihood_ratio(double z, double d, const NoiseModel& noise) {
    if (z < 0.0) throw DomainError("likelihood ratio evaluated at negative intensity");
    const double s0 = noise.sigma_n * noise.sigma_n;
    const double s1 = d + s0;
    return s0 / s1 * std::exp(0.5 * z * z * (1.0 / s0 - 1.0 / s1));
}

/// Writes `height` lines of `width` comma-separated values at full precision.
inline void write_image_csv(const std::filesystem::path& path, const IntensityImage& image) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open image file for writing: " + path.string());
    const auto& g = image.geometry;
    char buf[32];
    for (int row = 0; row < g.height; ++row) {
        for (int col = 0; col < g.width; ++col) {
            std::snprintf(buf, sizeof buf, "%.17g", image.cells[row * g.width + col]);
            if (col) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing image file: " + path.string());
}

inline IntensityImage read_image_csv(const std::filesystem::path& path, const GridGeometry& geom, int k) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open image file: " + path.string());
    IntensityImage image{geom, {}, k};
    image.cells.reserve(geom.num_cells());
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            if (field.empty()) continue;
            double v = 0.0;
            try {
                v = std::stod(field);
            } catch (const std::exception&) {
                throw ShapeError("non-numeric cell value in " + path.string());
            }
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ShapeError("negative or non-finite cell value in " + path.string());
            }
            image.cells.push_back(v);
        }
    }
    if (image.cells.size() != geom.num_cells()) {
        throw ShapeError("image " + path.string() + " has " + std::to_string(image.cells.size()) +
                         " cells, expected " + std::to_string(geom.num_cells()));
    }
    return image;
}

inline std::string frame_filename(int k) { return "frame_" + std::to_string(k) + ".csv"; }

}  // namespace tbd
