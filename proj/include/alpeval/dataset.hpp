#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "alpeval/errors.hpp"
#include "alpeval/io.hpp"
#include "alpeval/network.hpp"
#include "alpeval/rng.hpp"
#include "alpeval/tensor.hpp"

namespace alpeval {

struct Dataset {
    std::vector<Example> examples;
    std::size_t num_classes = 0;
    std::string name;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_classes < 2) throw ValidationError("dataset: num_classes must be >= 2");
        for (const Example& ex : examples) {
            if (ex.label >= num_classes)
                throw ValidationError("dataset: label out of range");
            if (!in_unit_box(ex.x))
                throw ValidationError("dataset: input outside [0,1]");
        }
    }

    std::size_t dim() const { return examples.empty() ? 0 : examples[0].x.size(); }
};

/// Deterministic class centers: evenly spread on a circle of radius 0.3 about
/// (0.5, 0.5) in the first two coordinates, 0.5 elsewhere, so every center
/// stays inside [0.2, 0.8]^dim. One-dimensional data uses an even spacing of
/// [0.2, 0.8] instead.
inline Tensor blob_center(std::size_t cls, std::size_t dim, std::size_t num_classes) {
    Tensor c = Tensor::zeros({dim});
    for (double& v : c.data) v = 0.5;
    if (dim == 1) {
        c[0] = 0.2 + 0.6 * static_cast<double>(cls) /
                         static_cast<double>(num_classes - 1);
        return c;
    }
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(cls) /
                         static_cast<double>(num_classes);
    c[0] = 0.5 + 0.3 * std::cos(angle);
    c[1] = 0.5 + 0.3 * std::sin(angle);
    return c;
}

inline Dataset gen_gaussian_blobs(std::size_t n_per_class, std::size_t dim,
                                  std::size_t num_classes, double spread,
                                  std::uint64_t seed) {
    if (n_per_class < 1) throw ValidationError("blobs: n_per_class must be >= 1");
    if (dim < 1) throw ValidationError("blobs: dim must be >= 1");
    if (num_classes < 2) throw ValidationError("blobs: num_classes must be >= 2");
    if (!(spread > 0.0)) throw ValidationError("blobs: spread must be > 0");

    Dataset ds;
    ds.num_classes = num_classes;
    ds.name = "blobs";
    ds.seed = seed;
    Rng rng(derive_seed(seed, Stream::blob_noise));
    for (std::size_t cls = 0; cls < num_classes; ++cls) {
        const Tensor center = blob_center(cls, dim, num_classes);
        for (std::size_t i = 0; i < n_per_class; ++i) {
            Example ex;
            ex.label = cls;
            ex.x = Tensor::zeros({dim});
            for (std::size_t d = 0; d < dim; ++d)
                ex.x[d] = std::clamp(center[d] + spread * rng.normal(), 0.0, 1.0);
            ds.examples.push_back(std::move(ex));
        }
    }
    return ds;
}

/// Two interleaved Archimedean spirals (class 1 is class 0 rotated by pi),
/// one and a quarter turns each, radius growing from 0.08 to 0.45 about the
/// center so clean points stay inside [0.05, 0.95]^2 before noise. The inner
/// radius keeps the two classes apart near the center; the quarter-gap
/// between opposing arms is about 0.15.
inline Dataset gen_two_spirals(std::size_t n_per_class, double noise,
                               std::uint64_t seed) {
    if (n_per_class < 1) throw ValidationError("spirals: n_per_class must be >= 1");
    if (noise < 0.0) throw ValidationError("spirals: noise must be >= 0");

    Dataset ds;
    ds.num_classes = 2;
    ds.name = "spirals";
    ds.seed = seed;
    Rng rng(derive_seed(seed, Stream::spiral_noise));
    for (std::size_t cls = 0; cls < 2; ++cls) {
        const double flip = cls == 0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n_per_class; ++i) {
            // t in (0, 1], so n_per_class == 1 places the point at the
            // outer end of the arm.
            const double t = static_cast<double>(i + 1) /
                             static_cast<double>(n_per_class);
            const double angle = t * 2.5 * std::numbers::pi;
            Example ex;
            ex.label = cls;
            ex.x = Tensor::row({0.5 + flip * (0.08 + 0.37 * t) * std::cos(angle),
                                0.5 + flip * (0.08 + 0.37 * t) * std::sin(angle)});
            for (std::size_t d = 0; d < 2; ++d)
                ex.x[d] = std::clamp(ex.x[d] + noise * rng.normal(), 0.0, 1.0);
            ds.examples.push_back(std::move(ex));
        }
    }
    return ds;
}

namespace detail {

inline std::uint32_t read_u32_be(std::ifstream& in, const std::string& what,
                                 const std::filesystem::path& path) {
    char b[4];
    in.read(b, 4);
    if (in.gcount() != 4)
        throw IoError("truncated IDX file (" + what + "): " + path.string());
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
}

}  // namespace detail

/// Reads the standard big-endian IDX pair (0x00000803 image file and
/// 0x00000801 label file); pixel bytes are scaled to [0,1] by division by
/// 255. Bad magic, truncated payload, and image/label count mismatch are
/// reported as distinct errors.
inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw IoError("cannot open IDX image file: " + images_path.string());
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw IoError("cannot open IDX label file: " + labels_path.string());

    if (detail::read_u32_be(imgs, "image magic", images_path) != 0x00000803u)
        throw IoError("bad magic in IDX image file: " + images_path.string());
    const std::uint32_t n_images = detail::read_u32_be(imgs, "image count", images_path);
    const std::uint32_t rows = detail::read_u32_be(imgs, "row count", images_path);
    const std::uint32_t cols = detail::read_u32_be(imgs, "column count", images_path);

    if (detail::read_u32_be(labs, "label magic", labels_path) != 0x00000801u)
        throw IoError("bad magic in IDX label file: " + labels_path.string());
    const std::uint32_t n_labels = detail::read_u32_be(labs, "label count", labels_path);

    if (n_images != n_labels)
        throw IoError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                      std::to_string(n_labels) + " labels");

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    std::vector<char> img_buf(static_cast<std::size_t>(n_images) * pixels);
    imgs.read(img_buf.data(), static_cast<std::streamsize>(img_buf.size()));
    if (static_cast<std::size_t>(imgs.gcount()) != img_buf.size())
        throw IoError("truncated IDX file (pixel payload): " + images_path.string());
    std::vector<char> lab_buf(n_labels);
    labs.read(lab_buf.data(), static_cast<std::streamsize>(lab_buf.size()));
    if (static_cast<std::size_t>(labs.gcount()) != lab_buf.size())
        throw IoError("truncated IDX file (label payload): " + labels_path.string());

    Dataset ds;
    ds.name = "idx";
    std::size_t max_label = 0;
    for (std::uint32_t i = 0; i < n_images; ++i) {
        Example ex;
        ex.x = Tensor::zeros({pixels});
        for (std::size_t p = 0; p < pixels; ++p)
            ex.x[p] = static_cast<unsigned char>(img_buf[i * pixels + p]) / 255.0;
        ex.label = static_cast<unsigned char>(lab_buf[i]);
        max_label = std::max(max_label, ex.label);
        ds.examples.push_back(std::move(ex));
    }
    ds.num_classes = std::max<std::size_t>(max_label + 1, 2);
    return ds;
}

/// Deterministic shuffled split into (train, test); partitions are disjoint
/// and together contain exactly the input examples.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                         std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("split: train_fraction must be in (0,1)");
    std::vector<std::size_t> order(ds.examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, Stream::split_shuffle));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(ds.examples.size())));
    Dataset train{{}, ds.num_classes, ds.name + "/train", ds.seed};
    Dataset test{{}, ds.num_classes, ds.name + "/test", ds.seed};
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? train : test).examples.push_back(ds.examples[order[i]]);
    return {std::move(train), std::move(test)};
}

/// CSV export with header "label,x0,x1,..."; coordinates keep full precision.
inline void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << "label";
    for (std::size_t d = 0; d < ds.dim(); ++d) out << ",x" << d;
    out << "\n";
    for (const Example& ex : ds.examples) {
        out << ex.label;
        for (std::size_t d = 0; d < ex.x.size(); ++d) out << ',' << fmt_g17(ex.x[d]);
        out << "\n";
    }
    finish_output(out, path);
}

}  // namespace alpeval
