#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "gramforge/error.hpp"

namespace gramforge {

struct OpticsParams {
  std::size_t min_samples = 2;       // neighbourhood size, the point itself included
  double xi = 0.05;                  // minimum relative steepness of a cluster boundary
  std::size_t min_cluster_size = 2;  // smallest cluster that is reported
  bool predecessor_correction = true;
};

struct OpticsResult {
  std::vector<std::size_t> ordering;
  std::vector<double> reachability;     // per point; +inf where undefined
  std::vector<double> core_distance;    // per point
  std::vector<long> predecessor;        // per point; -1 where undefined
  std::vector<int> labels;              // per point; -1 is noise
};

namespace detail {

// Grows a steep region from `start` while it keeps going in the same
// direction, allowing at most min_samples consecutive non-steep points.
inline std::size_t extend_region(const std::vector<bool>& steep, const std::vector<bool>& xward,
                                 std::size_t start, std::size_t min_samples) {
  std::size_t non_xward = 0, end = start;
  for (std::size_t index = start; index < steep.size(); ++index) {
    if (steep[index]) {
      non_xward = 0;
      end = index;
    } else if (!xward[index]) {
      if (++non_xward > min_samples) break;
    } else {
      return end;
    }
  }
  return end;
}

struct SteepDownArea {
  std::size_t start, end;
  double mib;
};

inline void update_filter_sdas(std::vector<SteepDownArea>& sdas, double mib, double xi_complement,
                               const std::vector<double>& reach) {
  if (std::isinf(mib)) {
    sdas.clear();
    return;
  }
  std::erase_if(sdas, [&](const SteepDownArea& d) { return mib > reach[d.start] * xi_complement; });
  for (auto& d : sdas) d.mib = std::max(d.mib, mib);
}

inline bool correct_predecessor(const std::vector<double>& reach, const std::vector<long>& pred_plot,
                                const std::vector<std::size_t>& ordering, std::size_t& s,
                                std::size_t& e) {
  while (s < e) {
    if (reach[s] > reach[e]) return true;
    const long p_e = pred_plot[e];
    for (std::size_t i = s; i < e; ++i)
      if (static_cast<long>(ordering[i]) == p_e) return true;
    --e;
  }
  return false;
}

// Xi-steep cluster extraction over the reachability plot (values in
// ordering order). Returns [start, end] index pairs into the ordering.
inline std::vector<std::pair<std::size_t, std::size_t>> xi_clusters(
    std::vector<double> reach, const std::vector<long>& pred_plot,
    const std::vector<std::size_t>& ordering, const OpticsParams& p) {
  const std::size_t n = reach.size();
  reach.push_back(std::numeric_limits<double>::infinity());
  const double xi_complement = 1.0 - p.xi;
  std::vector<bool> steep_up(n), steep_down(n), down(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = reach[i] / reach[i + 1];  // NaN for inf/inf: all comparisons false
    steep_up[i] = ratio <= xi_complement;
    steep_down[i] = ratio >= 1.0 / xi_complement;
    down[i] = ratio > 1.0;
    up[i] = ratio < 1.0;
  }
  std::vector<SteepDownArea> sdas;
  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep_index = 0; steep_index < n; ++steep_index) {
    if (!(steep_up[steep_index] || steep_down[steep_index])) continue;
    if (steep_index < index) continue;
    for (std::size_t i = index; i <= steep_index; ++i) mib = std::max(mib, reach[i]);

    if (steep_down[steep_index]) {
      update_filter_sdas(sdas, mib, xi_complement, reach);
      const std::size_t d_end = extend_region(steep_down, up, steep_index, p.min_samples);
      sdas.push_back({steep_index, d_end, 0.0});
      index = d_end + 1;
      mib = reach[index];
    } else {
      update_filter_sdas(sdas, mib, xi_complement, reach);
      const std::size_t u_start = steep_index;
      const std::size_t u_end = extend_region(steep_up, down, u_start, p.min_samples);
      index = u_end + 1;
      mib = reach[index];

      std::vector<std::pair<std::size_t, std::size_t>> found;
      for (const auto& d : sdas) {
        std::size_t c_start = d.start, c_end = u_end;
        if (reach[c_end + 1] * xi_complement < d.mib) continue;
        const double d_max = reach[d.start];
        if (d_max * xi_complement >= reach[c_end + 1]) {
          while (reach[c_start + 1] > reach[c_end + 1] && c_start < d.end) ++c_start;
        } else if (reach[c_end + 1] * xi_complement >= d_max) {
          while (reach[c_end - 1] > d_max && c_end > u_start) --c_end;
        }
        if (p.predecessor_correction &&
            !correct_predecessor(reach, pred_plot, ordering, c_start, c_end))
          continue;
        if (c_end - c_start + 1 < p.min_cluster_size) continue;
        if (c_start > d.end) continue;
        if (c_end < u_start) continue;
        found.emplace_back(c_start, c_end);
      }
      std::reverse(found.begin(), found.end());
      clusters.insert(clusters.end(), found.begin(), found.end());
    }
  }
  return clusters;
}

}  // namespace detail

// OPTICS ordering over a precomputed symmetric distance matrix, followed by
// xi-steep cluster extraction. Labels are assigned smallest-cluster-first;
// a point inside no cluster is noise (-1).
inline OpticsResult optics(const std::vector<std::vector<double>>& distance, const OpticsParams& p) {
  const std::size_t n = distance.size();
  if (n == 0) throw DataError("optics: no points");
  if (p.min_samples < 1) throw ConfigError("optics: min_samples must be >= 1");
  if (!(p.xi > 0.0 && p.xi < 1.0)) throw ConfigError("optics: xi must be in (0, 1)");
  const double inf = std::numeric_limits<double>::infinity();

  OpticsResult r;
  r.core_distance.assign(n, inf);
  for (std::size_t i = 0; i < n; ++i) {
    if (p.min_samples > n) continue;
    auto row = distance[i];
    std::nth_element(row.begin(), row.begin() + static_cast<long>(p.min_samples - 1), row.end());
    r.core_distance[i] = row[p.min_samples - 1];
  }
  r.reachability.assign(n, inf);
  r.predecessor.assign(n, -1);
  std::vector<bool> processed(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t point = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (processed[i]) continue;
      if (point == n || r.reachability[i] < r.reachability[point]) point = i;
    }
    processed[point] = true;
    r.ordering.push_back(point);
    if (std::isinf(r.core_distance[point])) continue;
    for (std::size_t q = 0; q < n; ++q) {
      if (processed[q]) continue;
      const double reach = std::max(distance[point][q], r.core_distance[point]);
      if (reach < r.reachability[q]) {
        r.reachability[q] = reach;
        r.predecessor[q] = static_cast<long>(point);
      }
    }
  }

  std::vector<double> reach_plot(n);
  std::vector<long> pred_plot(n);
  for (std::size_t i = 0; i < n; ++i) {
    reach_plot[i] = r.reachability[r.ordering[i]];
    pred_plot[i] = r.predecessor[r.ordering[i]];
  }
  const auto clusters = detail::xi_clusters(reach_plot, pred_plot, r.ordering, p);

  std::vector<int> ordered(n, -1);
  int next = 0;
  for (const auto& [s, e] : clusters) {
    bool free = true;
    for (std::size_t i = s; i <= e; ++i)
      if (ordered[i] != -1) free = false;
    if (!free) continue;
    for (std::size_t i = s; i <= e; ++i) ordered[i] = next;
    ++next;
  }
  r.labels.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) r.labels[r.ordering[i]] = ordered[i];
  return r;
}

}  // namespace gramforge
