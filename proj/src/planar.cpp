#include "keptop/planar.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace keptop {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double polyline_winding_raw(const Mat& poly, const Vec2& x, double* min_dist) {
  double total = 0.0;
  double dmin = std::numeric_limits<double>::infinity();
  const int M = static_cast<int>(poly.cols());
  for (int j = 0; j < M; ++j) {
    const Vec2 a = poly.col(j).head<2>() - x;
    const Vec2 b = poly.col((j + 1) % M).head<2>() - x;
    total += std::atan2(cross2(a, b), a.dot(b));
    dmin = std::min(dmin, a.norm());
  }
  if (min_dist) *min_dist = dmin;
  return total / kTwoPi;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * d)).norm();
}

double polyline_distance(const Mat& poly, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  const int M = static_cast<int>(poly.cols());
  for (int j = 0; j < M; ++j)
    best = std::min(best, point_segment_distance(p, poly.col(j).head<2>(),
                                                 poly.col((j + 1) % M).head<2>()));
  return best;
}

}  // namespace

int winding_number(const PeriodicCurve& H, const Vec2& x, int samples) {
  if (H.dimension() != 2) throw ValidationError("winding_number expects a planar curve");
  for (; samples <= (1 << 16); samples *= 2) {
    const Mat poly = H.sample(samples);
    double dmin = 0.0;
    const double raw = polyline_winding_raw(poly, x, &dmin);
    double max_seg = 0.0;
    for (int j = 0; j < samples; ++j)
      max_seg = std::max(max_seg,
                         (poly.col((j + 1) % samples) - poly.col(j)).norm());
    // The polyline must stay well inside the disk around x it avoids, and
    // the rounded angle sum must be unambiguous.
    if (max_seg < 0.5 * dmin && std::abs(raw - std::round(raw)) < 0.25)
      return static_cast<int>(std::lround(raw));
  }
  throw ProximityError("winding number is unreliable: point too close to the curve");
}

// ---------------------------------------------------------------------------
// Complement analysis
// ---------------------------------------------------------------------------

int ComplementMap::r() const {
  int count = 0;
  for (const auto& c : components) count += c.bounded ? 1 : 0;
  return count;
}

int ComplementMap::s() const {
  std::set<int> values;
  for (const auto& c : components)
    if (c.bounded) values.insert(c.winding);
  return static_cast<int>(values.size());
}

std::vector<int> ComplementMap::winding_multiset() const {
  std::vector<int> v;
  for (const auto& c : components)
    if (c.bounded) v.push_back(c.winding);
  std::sort(v.rbegin(), v.rend());
  return v;
}

const ComponentInfo* ComplementMap::component(int id) const {
  for (const auto& c : components)
    if (c.id == id) return &c;
  return nullptr;
}

ComplementMap analyze_complement(const PeriodicCurve& H, int resolution) {
  if (H.dimension() != 2) throw ValidationError("analyze_complement expects a planar curve");
  if (resolution < 128) throw ValidationError("resolution must be at least 128");

  ComplementMap map;
  map.resolution = resolution;
  map.polyline = H.sample(1024);

  // Square box around the curve, margin twice the curve radius per side.
  Vec2 lo = map.polyline.rowwise().minCoeff();
  Vec2 hi = map.polyline.rowwise().maxCoeff();
  const double radius = H.radius();
  lo.array() -= 2.0 * radius;
  hi.array() += 2.0 * radius;
  const Vec2 mid = 0.5 * (lo + hi);
  const double half = 0.5 * std::max(hi[0] - lo[0], hi[1] - lo[1]);
  map.box_lo = mid.array() - half;
  map.box_hi = mid.array() + half;

  const double cell = map.cell_size();
  const int R = resolution;
  std::vector<std::int32_t>& labels = map.labels;
  labels.assign(static_cast<size_t>(R) * R, -2);  // -2 = unvisited

  auto cell_of = [&](const Vec2& p, int& i, int& j) {
    i = static_cast<int>((p[0] - map.box_lo[0]) / cell);
    j = static_cast<int>((p[1] - map.box_lo[1]) / cell);
    i = std::clamp(i, 0, R - 1);
    j = std::clamp(j, 0, R - 1);
  };
  auto idx = [&](int i, int j) { return static_cast<size_t>(j) * R + i; };

  // Rasterize: march each polyline segment in sub-cell steps.
  const int M = static_cast<int>(map.polyline.cols());
  for (int seg = 0; seg < M; ++seg) {
    const Vec2 a = map.polyline.col(seg);
    const Vec2 b = map.polyline.col((seg + 1) % M);
    const double len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.4 * cell))));
    for (int s = 0; s <= steps; ++s) {
      int i, j;
      cell_of(a + (b - a) * (static_cast<double>(s) / steps), i, j);
      labels[idx(i, j)] = -1;
    }
  }
  // Thicken by one cell for flood-fill robustness.
  std::vector<std::pair<int, int>> thick;
  for (int j = 0; j < R; ++j)
    for (int i = 0; i < R; ++i)
      if (labels[idx(i, j)] == -1)
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            const int ii = i + di, jj = j + dj;
            if (ii >= 0 && ii < R && jj >= 0 && jj < R && labels[idx(ii, jj)] == -2)
              thick.emplace_back(ii, jj);
          }
  for (const auto& [i, j] : thick) labels[idx(i, j)] = -1;
  map.curve_cells = std::count(labels.begin(), labels.end(), -1);

  // Flood fill the complement, 4-connectivity.
  std::int32_t next_id = 0;
  std::vector<ComponentInfo> comps;
  std::deque<std::pair<int, int>> queue;
  for (int j0 = 0; j0 < R; ++j0) {
    for (int i0 = 0; i0 < R; ++i0) {
      if (labels[idx(i0, j0)] != -2) continue;
      const std::int32_t id = next_id++;
      ComponentInfo info;
      info.id = id;
      info.bounded = true;
      labels[idx(i0, j0)] = id;
      queue.push_back({i0, j0});
      while (!queue.empty()) {
        auto [i, j] = queue.front();
        queue.pop_front();
        ++info.cell_count;
        if (i == 0 || i == R - 1 || j == 0 || j == R - 1) info.bounded = false;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int ii = i + di[k], jj = j + dj[k];
          if (ii < 0 || ii >= R || jj < 0 || jj >= R) continue;
          if (labels[idx(ii, jj)] == -2) {
            labels[idx(ii, jj)] = id;
            queue.push_back({ii, jj});
          }
        }
      }
      comps.push_back(info);
    }
  }

  // Sub-resolution specks are raster noise, not components.
  std::vector<bool> keep(comps.size(), true);
  for (size_t c = 0; c < comps.size(); ++c) {
    if (comps[c].cell_count < 4) {
      keep[c] = false;
      ++map.discarded_components;
      map.discarded_cells += comps[c].cell_count;
    }
  }
  std::vector<std::int32_t> remap(comps.size(), -1);
  std::int32_t new_id = 0;
  for (size_t c = 0; c < comps.size(); ++c)
    if (keep[c]) remap[c] = new_id++;
  for (auto& l : labels)
    if (l >= 0) l = remap[l];  // discarded specks become curve cells
  map.curve_cells += map.discarded_cells;

  // Representatives: cell of maximal BFS distance from the curve cells.
  std::vector<int> dist(labels.size(), -1);
  std::deque<size_t> dq;
  for (size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == -1) {
      dist[k] = 0;
      dq.push_back(k);
    }
  while (!dq.empty()) {
    const size_t k = dq.front();
    dq.pop_front();
    const int i = static_cast<int>(k % R), j = static_cast<int>(k / R);
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int t = 0; t < 4; ++t) {
      const int ii = i + di[t], jj = j + dj[t];
      if (ii < 0 || ii >= R || jj < 0 || jj >= R) continue;
      const size_t kk = idx(ii, jj);
      if (dist[kk] < 0) {
        dist[kk] = dist[k] + 1;
        dq.push_back(kk);
      }
    }
  }

  std::vector<ComponentInfo> final_comps(new_id);
  std::vector<int> best(new_id, -1);
  for (size_t c = 0, cc = 0; c < comps.size(); ++c) {
    if (!keep[c]) continue;
    final_comps[cc] = comps[c];
    final_comps[cc].id = static_cast<std::int32_t>(cc);
    ++cc;
  }
  for (size_t k = 0; k < labels.size(); ++k) {
    const std::int32_t l = labels[k];
    if (l < 0) continue;
    if (dist[k] > best[l]) {
      best[l] = dist[k];
      const int i = static_cast<int>(k % R), j = static_cast<int>(k / R);
      final_comps[l].representative = map.cell_center(i, j);
    }
  }

  // Winding at representatives, consistency probes at 5 extra cells.
  int unbounded_count = 0;
  UniformRng rng(0x5eedULL);
  std::vector<std::vector<size_t>> cells_by_comp(new_id);
  for (size_t k = 0; k < labels.size(); ++k)
    if (labels[k] >= 0) cells_by_comp[labels[k]].push_back(k);
  for (auto& info : final_comps) {
    info.representative_distance = polyline_distance(map.polyline, info.representative);
    info.winding = winding_number(H, info.representative);
    const auto& cells = cells_by_comp[info.id];
    for (int probe = 0; probe < 5 && !cells.empty(); ++probe) {
      const size_t k = cells[rng.next_u64() % cells.size()];
      if (dist[k] < 3) continue;  // skip probes hugging the rasterized curve
      const int i = static_cast<int>(k % R), j = static_cast<int>(k / R);
      if (winding_number(H, map.cell_center(i, j)) != info.winding)
        info.winding_consistent = false;
    }
    if (!info.bounded) {
      ++unbounded_count;
      if (info.winding != 0)
        throw ValidationError("unbounded component with nonzero winding");
    }
  }
  if (unbounded_count != 1)
    throw ValidationError("expected exactly one unbounded component, got " +
                          std::to_string(unbounded_count));

  map.components = std::move(final_comps);
  return map;
}

MultiplicityBounds multiplicity_bounds(const ComplementMap& map) {
  MultiplicityBounds b;
  b.r = map.r();
  b.s = map.s();
  if (b.r == 0) {
    b.condition_met = false;
    b.attractive_bound = 0;
    b.repulsive_bound = 0;
  } else {
    b.condition_met = true;
    b.attractive_bound = b.r;
    b.repulsive_bound = std::max(b.r + 1, b.r + b.s);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Erosion + boundary extraction
// ---------------------------------------------------------------------------

Region erode_component(const ComplementMap& map, int id, double delta_erode) {
  const ComponentInfo* info = map.component(id);
  if (!info) throw ValidationError("no such component id");
  if (!info->bounded) throw ValidationError("erosion applies to bounded components");

  const int R = map.resolution;
  const double cell = map.cell_size();
  auto idx = [&](int i, int j) { return static_cast<size_t>(j) * R + i; };

  std::vector<bool> kept(static_cast<size_t>(R) * R, false);
  long kept_count = 0;
  // Whole cells must clear delta, so centers need the extra half-diagonal.
  const double threshold = delta_erode + cell * M_SQRT1_2;
  for (int j = 0; j < R; ++j) {
    for (int i = 0; i < R; ++i) {
      if (map.label_at(i, j) != id) continue;
      if (polyline_distance(map.polyline, map.cell_center(i, j)) > threshold) {
        kept[idx(i, j)] = true;
        ++kept_count;
      }
    }
  }
  if (kept_count == 0)
    throw ValidationError("erosion emptied component " + std::to_string(id) +
                          "; retry with a smaller delta_erode");

  Region region;
  region.component_id = id;
  region.delta = delta_erode;
  region.cell_count = kept_count;

  // Directed boundary edges with the kept region on the left:
  // bottom -> +x, right -> +y, top -> -x, left -> -y. Corners are lattice
  // points of the cell grid.
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> out_edges;
  auto is_kept = [&](int i, int j) {
    return i >= 0 && i < R && j >= 0 && j < R && kept[idx(i, j)];
  };
  for (int j = 0; j < R; ++j) {
    for (int i = 0; i < R; ++i) {
      if (!kept[idx(i, j)]) continue;
      if (!is_kept(i, j - 1)) out_edges[{i, j}].push_back({i + 1, j});
      if (!is_kept(i + 1, j)) out_edges[{i + 1, j}].push_back({i + 1, j + 1});
      if (!is_kept(i, j + 1)) out_edges[{i + 1, j + 1}].push_back({i, j + 1});
      if (!is_kept(i - 1, j)) out_edges[{i, j + 1}].push_back({i, j});
    }
  }
  auto corner_point = [&](const std::pair<int, int>& c) {
    return Vec2(map.box_lo[0] + c.first * cell, map.box_lo[1] + c.second * cell);
  };

  while (!out_edges.empty()) {
    const auto start = out_edges.begin()->first;
    std::vector<Vec2> loop;
    std::pair<int, int> here = start;
    std::pair<int, int> incoming{0, 0};
    while (true) {
      auto it = out_edges.find(here);
      if (it == out_edges.end() || it->second.empty())
        throw ValidationError("boundary tracing failed on a broken edge chain");
      // At pinch corners prefer the sharpest left turn so loops stay simple.
      size_t pick = 0;
      if (it->second.size() > 1) {
        double best_turn = -10.0;
        for (size_t e = 0; e < it->second.size(); ++e) {
          const Vec2 dir(it->second[e].first - here.first,
                         it->second[e].second - here.second);
          const Vec2 in(incoming.first, incoming.second);
          const double turn = std::atan2(cross2(in, dir), in.dot(dir));
          if (turn > best_turn) {
            best_turn = turn;
            pick = e;
          }
        }
      }
      const auto next = it->second[pick];
      it->second.erase(it->second.begin() + pick);
      if (it->second.empty()) out_edges.erase(it);
      loop.push_back(corner_point(here));
      incoming = {next.first - here.first, next.second - here.second};
      here = next;
      if (here == start) break;
    }
    // Straight runs of collinear lattice steps collapse to their endpoints.
    std::vector<Vec2> simplified;
    const size_t L = loop.size();
    for (size_t k = 0; k < L; ++k) {
      const Vec2& prev = loop[(k + L - 1) % L];
      const Vec2& cur = loop[k];
      const Vec2& next = loop[(k + 1) % L];
      if (std::abs(cross2(cur - prev, next - cur)) > 1e-12) simplified.push_back(cur);
    }
    region.boundary.push_back(std::move(simplified));
  }
  return region;
}

}  // namespace keptop
