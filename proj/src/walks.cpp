#include "ri2d/walks.hpp"

#include <algorithm>
#include <cmath>

namespace ri2d {
namespace {

// A trajectory that exceeds this many conditioned-walk steps indicates a
// broken renewal loop, not a long excursion.
constexpr std::int64_t kTraceStepCap = 100'000'000;

Point rounded_centroid(const std::vector<Point>& pts) {
  double sx = 0, sy = 0;
  for (const Point p : pts) {
    sx += p.x;
    sy += p.y;
  }
  return {std::int32_t(std::lround(sx / double(pts.size()))),
          std::int32_t(std::lround(sy / double(pts.size())))};
}

}  // namespace

Point hat_step(Point p, const PotentialTable& table, Rng& rng) {
  if (p == Point{0, 0})
    throw ConfigError("hat step: the conditioned walk never stands at the origin");
  const auto nb = neighbors4(p);
  double w[4];
  double total = 0;
  for (int i = 0; i < 4; ++i) {
    w[i] = table.a(nb[i]);
    total += w[i];
  }
  double u = rng.u01() * total;
  for (int i = 0; i < 3; ++i) {
    if (u < w[i]) return nb[i];
    u -= w[i];
  }
  return nb[3];
}

double hat_step_tv(Point p, const PotentialTable& table) {
  if (p == Point{0, 0})
    throw ConfigError("hat step: the conditioned walk never stands at the origin");
  const auto nb = neighbors4(p);
  double w[4];
  double total = 0;
  for (int i = 0; i < 4; ++i) {
    w[i] = table.a(nb[i]);
    total += w[i];
  }
  double tv = 0;
  for (int i = 0; i < 4; ++i) tv += std::abs(w[i] / total - 0.25);
  return 0.5 * tv;
}

TorusExcursionResult torus_excursions(const Torus& torus,
                                      const std::vector<Point>& inner,
                                      const std::vector<Point>& outer_bd,
                                      std::int64_t horizon, Point start,
                                      Rng& rng) {
  if (inner.empty() || outer_bd.empty())
    throw ConfigError("torus excursions: empty inner set or outer boundary");
  if (horizon < 0) throw ConfigError("torus excursions: negative horizon");
  for (const Point p : inner)
    if (sorted_contains(outer_bd, p))
      throw ConfigError("torus excursions: inner set meets the outer boundary");
  for (const Point p : {inner.front(), inner.back(), outer_bd.front(),
                        outer_bd.back(), start})
    if (torus.wrap(p) != p)
      throw ConfigError("torus excursions: point outside the fundamental domain");

  TorusExcursionResult out;
  out.horizon = horizon;
  Point p = start;
  Excursion cur;
  bool open = false;
  if (sorted_contains(inner, p)) {
    cur.entry = p;
    cur.entry_time = 0;
    open = true;
  }
  for (std::int64_t t = 1; t <= horizon; ++t) {
    p = torus.neighbors(p)[rng.below(4)];
    if (!open) {
      if (sorted_contains(inner, p)) {
        cur.entry = p;
        cur.entry_time = t;
        open = true;
      }
    } else if (sorted_contains(outer_bd, p)) {
      cur.exit = p;
      cur.exit_time = t;
      out.completed.push_back(cur);
      open = false;
    }
  }
  out.final_position = p;
  return out;
}

HatTraceSampler::HatTraceSampler(std::vector<Point> window,
                                 const PotentialTable& table)
    : window_([&window] {
        std::sort(window.begin(), window.end());
        window.erase(std::unique(window.begin(), window.end()), window.end());
        return std::move(window);
      }()),
      table_(&table),
      hit_(window_, table),
      eq_(hat_equilibrium(window_, table)),
      entry_alias_(eq_.hm.weight) {
  const Point center = rounded_centroid(window_);
  std::int64_t best = 0;
  for (const Point p : window_) best = std::max(best, dist2(p, center));
  guard_ = Ball::of(center, 2.0 * std::sqrt(double(best)) + 16.0);
}

Point HatTraceSampler::sample_entry(Rng& rng) const {
  return eq_.hm.support[entry_alias_.sample(rng)];
}

void HatTraceSampler::trace(Point start, Rng& rng,
                            std::vector<Point>& out) const {
  if (start == Point{0, 0})
    throw ConfigError("trace: the conditioned walk never stands at the origin");
  Point p = start;
  for (std::int64_t steps = 0;; ++steps) {
    if (steps > kTraceStepCap)
      throw ResourceError("trace: step cap exceeded, renewal loop suspect");
    if (sorted_contains(window_, p)) out.push_back(p);
    if (!guard_.contains(p)) {
      const double h = hit_.hit_prob(p);
      if (rng.u01() >= h) return;  // flies off, never touches the window again
      const auto sub = hit_.entrance_sub_law(p);
      double u = rng.u01() * h;
      std::size_t j = sub.size() - 1;
      for (std::size_t i = 0; i < sub.size(); ++i) {
        if (u < sub[i]) {
          j = i;
          break;
        }
        u -= sub[i];
      }
      if (sub[j] == 0.0)  // float-edge leftover: take the modal point instead
        j = std::size_t(std::max_element(sub.begin(), sub.end()) - sub.begin());
      p = hit_.kernel().boundary()[j];
      continue;
    }
    p = hat_step(p, *table_, rng);
  }
}

}  // namespace ri2d
