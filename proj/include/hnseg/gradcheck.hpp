#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "hnseg/errors.hpp"
#include "hnseg/rng.hpp"

namespace hnseg {

using ScalarFn = std::function<double(const std::vector<double>&)>;

// Compares an analytic gradient against central finite differences on up to
// `probes` randomly chosen coordinates. Returns the maximum relative error
//   |analytic - numeric| / max(1, |analytic|).
inline double finite_diff_check(const ScalarFn& f, const std::vector<double>& params,
                                const std::vector<double>& analytic_grad, double eps,
                                std::size_t probes, Rng& rng) {
    require(eps > 0.0, "finite_diff_check: eps must be positive");
    require(params.size() == analytic_grad.size(),
            "finite_diff_check: gradient size does not match parameter size");
    require(!params.empty(), "finite_diff_check: empty parameter vector");

    // Choose distinct probe coordinates; all of them if probes >= size.
    std::vector<std::size_t> coords;
    if (probes >= params.size()) {
        coords.resize(params.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
        std::vector<std::size_t> pool(params.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        for (std::size_t i = 0; i < probes; ++i) {
            std::size_t j = i + rng.uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        coords.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(probes));
    }

    std::vector<double> p = params;
    double max_rel = 0.0;
    for (std::size_t i : coords) {
        const double saved = p[i];
        p[i] = saved + eps;
        const double fp = f(p);
        p[i] = saved - eps;
        const double fm = f(p);
        p[i] = saved;
        require(std::isfinite(fp) && std::isfinite(fm),
                "finite_diff_check: non-finite function value at coordinate " +
                    std::to_string(i));
        const double numeric = (fp - fm) / (2.0 * eps);
        const double analytic = analytic_grad[i];
        const double rel =
            std::fabs(analytic - numeric) / std::max(1.0, std::fabs(analytic));
        if (rel > max_rel) max_rel = rel;
    }
    return max_rel;
}

}  // namespace hnseg
