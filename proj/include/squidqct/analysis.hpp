#pragma once

// Poincare sections from quantum expectation series, unit conversion to flux
// quanta, and histogram overlap between sections.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/errors.hpp"
#include "squidqct/section.hpp"
#include "squidqct/unravel.hpp"

namespace squidqct {

/// (<x>, <p>) once per drive period for periods n > transient_periods.
inline PoincareSection quantum_poincare(const TrajectorySeries& series) {
  PoincareSection sec;
  sec.source = series.unravelling == Unravelling::qsd ? SectionSource::qsd : SectionSource::jumps;
  sec.units = SectionUnits::dimensionless;
  const std::uint64_t spp = series.steps_per_period;
  for (const auto& s : series.samples)
    if (spp && s.step % spp == 0 && s.step / spp > series.transient_periods) sec.points.push_back({s.ex_x, s.ex_p});
  if (sec.points.empty()) throw SectionError("empty Poincare section: no samples after the transient");
  return sec;
}

/// Dimensionless (x, p) to flux quanta: both axes divided by 2pi / Omega.
inline PoincareSection to_flux_quanta(const PoincareSection& s, const DerivedParams& d) {
  if (s.units == SectionUnits::flux_quanta) return s;
  PoincareSection out = s;
  out.units = SectionUnits::flux_quanta;
  out.axis_scale = d.x_per_phi0;
  out.u_offset = 0.0;
  for (auto& p : out.points) {
    p.u /= d.x_per_phi0;
    p.v /= d.x_per_phi0;
  }
  return out;
}

/// Classical (phi, phi') to absolute flux (phi + phi_x, phi') so that it
/// shares axes with to_flux_quanta of a quantum section.
inline PoincareSection classical_to_flux_quanta(const PoincareSection& s, const DerivedParams& d) {
  if (s.units == SectionUnits::flux_quanta) return s;
  PoincareSection out = s;
  out.units = SectionUnits::flux_quanta;
  out.axis_scale = 1.0;
  out.u_offset = d.phi_x;
  for (auto& p : out.points) p.u += d.phi_x;
  return out;
}

/// Undo either flux-quanta conversion using the recorded metadata.
inline PoincareSection from_flux_quanta(const PoincareSection& s) {
  if (s.units == SectionUnits::dimensionless) return s;
  PoincareSection out = s;
  out.units = SectionUnits::dimensionless;
  for (auto& p : out.points) {
    p.u = (p.u - s.u_offset) * s.axis_scale;
    p.v *= s.axis_scale;
  }
  out.axis_scale = 1.0;
  out.u_offset = 0.0;
  return out;
}

struct SectionBounds {
  double u_min = 0.0, u_max = 0.0, v_min = 0.0, v_max = 0.0;
};

struct HistogramBins {
  std::size_t nu = 128;
  std::size_t nv = 128;
};

struct SectionHistogram {
  SectionBounds bounds;
  HistogramBins bins;
  std::vector<double> mass;  // row-major, nu * nv, sums to 1

  double at(std::size_t iu, std::size_t iv) const { return mass[iu * bins.nv + iv]; }
};

inline SectionBounds raw_bounds(const PoincareSection& s) {
  if (s.points.empty()) throw SectionError("empty Poincare section");
  SectionBounds b{s.points[0].u, s.points[0].u, s.points[0].v, s.points[0].v};
  for (const auto& p : s.points) {
    if (!std::isfinite(p.u) || !std::isfinite(p.v)) throw SectionError("non-finite section point");
    b.u_min = std::min(b.u_min, p.u);
    b.u_max = std::max(b.u_max, p.u);
    b.v_min = std::min(b.v_min, p.v);
    b.v_max = std::max(b.v_max, p.v);
  }
  return b;
}

/// Union bounding box, padded by 5% of its span on every side. A flat axis
/// borrows its padding from the other axis.
inline SectionBounds union_bounds(const PoincareSection& a, const PoincareSection& b) {
  const SectionBounds ba = raw_bounds(a), bb = raw_bounds(b);
  SectionBounds u{std::min(ba.u_min, bb.u_min), std::max(ba.u_max, bb.u_max), std::min(ba.v_min, bb.v_min),
                  std::max(ba.v_max, bb.v_max)};
  const double su = u.u_max - u.u_min, sv = u.v_max - u.v_min;
  if (su <= 0.0 && sv <= 0.0) throw SectionError("degenerate bounds: all section points coincide");
  const double pu = 0.05 * (su > 0.0 ? su : sv);
  const double pv = 0.05 * (sv > 0.0 ? sv : su);
  return {u.u_min - pu, u.u_max + pu, u.v_min - pv, u.v_max + pv};
}

inline SectionHistogram make_histogram(const PoincareSection& s, const SectionBounds& b, HistogramBins bins) {
  if (bins.nu == 0 || bins.nv == 0) throw SectionError("histogram needs at least one bin per axis");
  if (s.points.empty()) throw SectionError("empty Poincare section");
  SectionHistogram h{b, bins, std::vector<double>(bins.nu * bins.nv, 0.0)};
  auto index = [](double x, double lo, double hi, std::size_t n) {
    const double f = (x - lo) / (hi - lo) * static_cast<double>(n);
    if (!(f >= 0.0)) return std::size_t{0};
    return std::min(static_cast<std::size_t>(f), n - 1);
  };
  const double w = 1.0 / static_cast<double>(s.points.size());
  for (const auto& p : s.points)
    h.mass[index(p.u, b.u_min, b.u_max, bins.nu) * bins.nv + index(p.v, b.v_min, b.v_max, bins.nv)] += w;
  return h;
}

struct OverlapResult {
  double coefficient = 0.0;
  SectionBounds bounds;
  HistogramBins bins;
};

/// Bhattacharyya coefficient sum sqrt(m1 m2) of the two normalized histograms
/// on a shared grid over the padded union bounding box.
inline OverlapResult section_overlap(const PoincareSection& s1, const PoincareSection& s2,
                                     HistogramBins bins = {}) {
  const SectionBounds b = union_bounds(s1, s2);
  const auto h1 = make_histogram(s1, b, bins);
  const auto h2 = make_histogram(s2, b, bins);
  double bc = 0.0;
  for (std::size_t i = 0; i < h1.mass.size(); ++i) bc += std::sqrt(h1.mass[i] * h2.mass[i]);
  return {std::clamp(bc, 0.0, 1.0), b, bins};
}

/// Number of distinct points after snapping both coordinates to `resolution`.
inline std::size_t distinct_points(const PoincareSection& s, double resolution) {
  std::set<std::pair<long long, long long>> seen;
  for (const auto& p : s.points)
    seen.emplace(std::llround(p.u / resolution), std::llround(p.v / resolution));
  return seen.size();
}

}  // namespace squidqct
