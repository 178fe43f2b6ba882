#pragma once

#include <string>
#include <vector>

namespace squidqct {

enum class SectionSource { classical, qsd, jumps };
enum class SectionUnits { dimensionless, flux_quanta };

inline const char* to_string(SectionSource s) {
  switch (s) {
    case SectionSource::classical: return "classical";
    case SectionSource::qsd: return "qsd";
    case SectionSource::jumps: return "jumps";
  }
  return "unknown";
}

inline const char* to_string(SectionUnits u) {
  return u == SectionUnits::dimensionless ? "dimensionless" : "flux_quanta";
}

struct SectionPoint {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const SectionPoint&, const SectionPoint&) = default;
};

/// Stroboscopic phase-space samples, one per drive period.
struct PoincareSection {
  std::vector<SectionPoint> points;
  SectionSource source = SectionSource::classical;
  SectionUnits units = SectionUnits::dimensionless;
  std::string params_digest;
  std::string drive_phase = "sin_zero_rising";
  // Divisor applied to both axes by to_flux_quanta (1 when never converted).
  double axis_scale = 1.0;
  // Offset added to u after scaling (classical sections add phi_x).
  double u_offset = 0.0;
};

}  // namespace squidqct
