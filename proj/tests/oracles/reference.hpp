#pragma once

// Test-only reference implementations. Nothing here calls into the library
// code paths they are compared against.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace spikebci::reference {

// Plain scalar temporal-contrast recurrence.
inline std::vector<int> tc_encode(const std::vector<double>& f, double theta) {
  std::vector<int> out(f.size(), 0);
  double u = 0.0;
  for (std::size_t k = 1; k < f.size(); ++k) {
    const double du = f[k] - f[k - 1] + u;
    if (std::fabs(du) >= theta) {
      out[k] = du > 0 ? 1 : -1;
      u = 0.0;
    } else {
      u = du;
    }
  }
  return out;
}

// Naive convolutional SNN over one cluster-ordered channel list. `raster` is
// raster[channel][time]; `windows` lists the 3 raster rows of each kernel.
// Weight update sizes are written out from the rule directly.
inline std::vector<double> conv_snn(const std::vector<std::vector<int>>& raster,
                                    const std::vector<std::array<std::size_t, 3>>& windows,
                                    const std::array<double, 9>& w0, double tau_r, double theta,
                                    std::size_t stride) {
  std::vector<double> features;
  const std::size_t T = raster.empty() ? 0 : raster[0].size();
  for (const auto& win : windows) {
    double w[3][3];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) w[r][c] = w0[r * 3 + c];
    double v = 0.0;
    for (std::size_t t0 = 0; t0 + 3 <= T; t0 += stride) {
      double sum = 0.0;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) sum += w[r][c] * raster[win[r]][t0 + c];
      v += sum;
      int out = 0;
      if (v >= theta) {
        out = 1;
        v = 0.0;
      } else if (v <= -theta) {
        out = -1;
        v = 0.0;
      }
      if (out == 0) continue;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          const int s = raster[win[r]][t0 + c];
          if (s == 0) continue;
          const double lag = 2.0 - c;  // t - tau
          const double e = -lag - tau_r;  // tau - t - tau_r
          const double mag = s > 0 ? std::exp(e) : std::exp(-e * e);
          w[r][c] += out > 0 ? mag : -mag;
        }
      }
    }
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) features.push_back(w[r][c]);
  }
  return features;
}

struct Point {
  double x, y, z;
};

// Minimum WCSS over every partition of `pts` into exactly k non-empty groups.
inline double exhaustive_wcss(const std::vector<Point>& pts, std::size_t k) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> label(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<double> sx(k, 0), sy(k, 0), sz(k, 0), cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sx[label[i]] += pts[i].x;
      sy[label[i]] += pts[i].y;
      sz[label[i]] += pts[i].z;
      cnt[label[i]] += 1;
    }
    bool all_used = true;
    for (std::size_t c = 0; c < k; ++c) all_used = all_used && cnt[c] > 0;
    if (all_used) {
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = label[i];
        const double dx = pts[i].x - sx[c] / cnt[c];
        const double dy = pts[i].y - sy[c] / cnt[c];
        const double dz = pts[i].z - sz[c] / cnt[c];
        w += dx * dx + dy * dy + dz * dz;
      }
      if (w < best) best = w;
    }
    std::size_t i = 0;
    while (i < n && ++label[i] == k) label[i++] = 0;
    if (i == n) break;
  }
  return best;
}

}  // namespace spikebci::reference
