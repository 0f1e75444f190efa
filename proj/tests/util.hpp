#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "laeo/approx.hpp"

namespace laeo::testutil {

// Central finite differences on a flat parameter vector against analytic
// gradients, over a random coordinate subset. Returns the relative error
// ||g_fd - g_an|| / max(||g_fd||, ||g_an||) on that subset. `loss` must be a
// pure function of `params` (reseed any internal sampling per call).
inline double fd_rel_error(MlpParams& params, const std::function<double()>& loss,
                           const MlpParams& analytic, int n_coords, Rng& rng, double h = 1e-5) {
  Vec flat = params.to_flat();
  const Vec an_flat = analytic.to_flat();
  const long n = flat.size();

  std::vector<long> idx(n);
  for (long i = 0; i < n; ++i) idx[i] = i;
  for (long i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.uniform_int(n - i)]);
  const long m = std::min<long>(n, n_coords);

  Vec fd(m), an(m);
  for (long j = 0; j < m; ++j) {
    const long i = idx[j];
    const double x0 = flat(i);
    flat(i) = x0 + h;
    params.from_flat(flat);
    const double lp = loss();
    flat(i) = x0 - h;
    params.from_flat(flat);
    const double lm = loss();
    flat(i) = x0;
    fd(j) = (lp - lm) / (2.0 * h);
    an(j) = an_flat(i);
  }
  params.from_flat(flat);
  const double scale = std::max({fd.norm(), an.norm(), 1e-10});
  return (fd - an).norm() / scale;
}

}  // namespace laeo::testutil
