#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "alpeval/errors.hpp"
#include "alpeval/io.hpp"
#include "alpeval/network.hpp"
#include "alpeval/rng.hpp"
#include "alpeval/tensor.hpp"

namespace alpeval {

// Loss surface over the plane spanned by the input-gradient sign direction r1
// and a random Rademacher direction r2, around a base example.

/// Independent ±1 entries with probability one half each.
inline Tensor rademacher(std::size_t dim, std::uint64_t seed) {
    if (dim < 1) throw ValidationError("rademacher: dim must be >= 1");
    Tensor r = Tensor::zeros({dim});
    Rng rng(derive_seed(seed, Stream::rademacher));
    for (double& v : r.data) v = rng.below(2) == 0 ? -1.0 : 1.0;
    return r;
}

/// sign(d loss_xent / d x) at the example, with sign(0) = 0.
inline Tensor grad_sign_dir(const Parameters& params, const Example& ex) {
    Tensor g = grad_input(params, ex, ex.label);
    for (double& v : g.data) v = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    return g;
}

struct LandscapeGrid {
    std::vector<double> u_values;  // offsets along r1
    std::vector<double> v_values;  // offsets along r2
    Tensor z;                      // shape {len(u), len(v)}, z[i*len(v)+j]
    Tensor r1;
    Tensor r2;
    Example origin;
    double radius = 0.0;
    bool clipped = true;
    std::uint64_t seed = 0;
    double clean_loss = 0.0;
};

/// z[i][j] = loss_xent at x + u_i * r1 + v_j * r2, clipped to [0,1] unless
/// disabled. Offsets are computed as (index - mid) * step so (0,0) is an
/// exact grid point and z there reproduces the clean loss bit-for-bit.
inline LandscapeGrid landscape_grid(const Parameters& params, const Example& ex,
                                    double radius, std::size_t resolution,
                                    std::uint64_t seed, bool clip = true) {
    check_input(params.spec, ex.x);
    if (ex.label >= params.spec.num_classes)
        throw ValidationError("landscape: example label out of range");
    if (!(radius > 0.0)) throw ValidationError("landscape: radius must be > 0");
    if (resolution < 3 || resolution % 2 == 0)
        throw ValidationError("landscape: resolution must be odd and >= 3");

    LandscapeGrid grid;
    grid.r1 = grad_sign_dir(params, ex);
    grid.r2 = rademacher(ex.x.size(), seed);
    grid.origin = ex;
    grid.radius = radius;
    grid.clipped = clip;
    grid.seed = seed;

    const std::size_t mid = (resolution - 1) / 2;
    const double step = radius / static_cast<double>(mid);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double off =
            (static_cast<double>(i) - static_cast<double>(mid)) * step;
        grid.u_values.push_back(off);
        grid.v_values.push_back(off);
    }

    grid.z = Tensor::zeros({resolution, resolution});
    Tensor p = Tensor::zeros({ex.x.size()});
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            for (std::size_t d = 0; d < p.size(); ++d) {
                double v = ex.x[d] + grid.u_values[i] * grid.r1[d] +
                           grid.v_values[j] * grid.r2[d];
                if (clip) v = std::clamp(v, 0.0, 1.0);
                p[d] = v;
            }
            grid.z[i * resolution + j] = loss_xent(forward_logits(params, p), ex.label);
        }
    }
    grid.clean_loss = grid.z[mid * resolution + mid];
    return grid;
}

/// Landscape CSV: header "u,v,loss", rows in row-major (u, v) order.
inline void write_landscape_csv(const LandscapeGrid& grid,
                                const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << "u,v,loss\n";
    const std::size_t nv = grid.v_values.size();
    for (std::size_t i = 0; i < grid.u_values.size(); ++i)
        for (std::size_t j = 0; j < nv; ++j)
            out << fmt_g17(grid.u_values[i]) << ',' << fmt_g17(grid.v_values[j]) << ','
                << fmt_g17(grid.z[i * nv + j]) << "\n";
    finish_output(out, path);
}

/// Sidecar JSON describing how the grid was generated.
inline void write_landscape_meta(const LandscapeGrid& grid, std::size_t example_index,
                                 const std::filesystem::path& path) {
    const nlohmann::json meta = {
        {"seed", grid.seed},
        {"radius", grid.radius},
        {"resolution", grid.u_values.size()},
        {"clip", grid.clipped},
        {"example_index", example_index},
        {"clean_loss", grid.clean_loss},
    };
    std::ofstream out = open_output(path);
    out << meta.dump(2) << "\n";
    finish_output(out, path);
}

}  // namespace alpeval
