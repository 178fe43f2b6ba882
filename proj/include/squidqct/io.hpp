#pragma once

// CSV and key=value writers. Numbers use a fixed "%.17g" rendering so that
// identical runs produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "squidqct/analysis.hpp"
#include "squidqct/circuit.hpp"
#include "squidqct/config.hpp"
#include "squidqct/errors.hpp"
#include "squidqct/rsj.hpp"
#include "squidqct/section.hpp"
#include "squidqct/spectrum.hpp"
#include "squidqct/unravel.hpp"

namespace squidqct {

inline std::string fmt_num(double x, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

inline void check_written(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

/// FNV-1a over the full-precision rendering of the circuit.
inline std::string params_digest(const CircuitParams& p) {
  std::string text;
  for (double v : {p.C, p.L, p.R, p.I_c, p.I_d, p.omega_d, p.Phi_x}) text += fmt_num(v) + ";";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void write_classical_series(const std::string& path, const ClassicalSeries& s) {
  auto out = open_out(path);
  out << "tau,phi,phidot\n";
  for (const auto& st : s.states) out << fmt_num(st.tau) << ',' << fmt_num(st.phi) << ',' << fmt_num(st.phidot) << '\n';
  check_written(out, path);
}

inline void write_trajectory(const std::string& path, const TrajectorySeries& s) {
  auto out = open_out(path);
  out << "tau,ex_x,ex_p,ex_n,norm_drift,cum_jumps\n";
  for (const auto& r : s.samples)
    out << fmt_num(r.tau) << ',' << fmt_num(r.ex_x) << ',' << fmt_num(r.ex_p) << ',' << fmt_num(r.ex_n) << ','
        << fmt_num(r.norm_drift) << ',' << r.cum_jumps << '\n';
  check_written(out, path);
}

inline void write_ensemble_summary(const std::string& path, const std::vector<EnsembleRow>& rows) {
  auto out = open_out(path);
  out << "tau,mean_x,se_x,mean_p,se_p,mean_n,se_n\n";
  for (const auto& r : rows)
    out << fmt_num(r.tau) << ',' << fmt_num(r.mean_x) << ',' << fmt_num(r.se_x) << ',' << fmt_num(r.mean_p) << ','
        << fmt_num(r.se_p) << ',' << fmt_num(r.mean_n) << ',' << fmt_num(r.se_n) << '\n';
  check_written(out, path);
}

/// Section file: "# key=value" metadata lines, a column header, then u,v rows.
inline void write_section(const std::string& path, const PoincareSection& s) {
  auto out = open_out(path);
  out << "# source=" << to_string(s.source) << '\n'
      << "# units=" << to_string(s.units) << '\n'
      << "# params_digest=" << s.params_digest << '\n'
      << "# drive_phase=" << s.drive_phase << '\n'
      << "# axis_scale=" << fmt_num(s.axis_scale) << '\n'
      << "# u_offset=" << fmt_num(s.u_offset) << '\n';
  if (s.source == SectionSource::classical && s.units == SectionUnits::dimensionless)
    out << "phi,phidot\n";
  else
    out << "u,v\n";
  for (const auto& p : s.points) out << fmt_num(p.u) << ',' << fmt_num(p.v) << '\n';
  check_written(out, path);
}

inline PoincareSection read_section(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read section '" + path + "'");
  PoincareSection s;
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  auto bad = [&](const std::string& why) {
    return ConfigError("malformed section file '" + path + "' line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = detail::trim(line.substr(1, eq - 1));
      const std::string val = detail::trim(line.substr(eq + 1));
      auto number = [&](double& slot) {
        if (!detail::parse_double(val, slot)) throw bad("bad number for '" + key + "'");
      };
      if (key == "source") {
        if (val == "classical") s.source = SectionSource::classical;
        else if (val == "qsd") s.source = SectionSource::qsd;
        else if (val == "jumps") s.source = SectionSource::jumps;
        else throw bad("unknown source '" + val + "'");
      } else if (key == "units") {
        if (val == "dimensionless") s.units = SectionUnits::dimensionless;
        else if (val == "flux_quanta") s.units = SectionUnits::flux_quanta;
        else throw bad("unknown units '" + val + "'");
      } else if (key == "params_digest") {
        s.params_digest = val;
      } else if (key == "drive_phase") {
        s.drive_phase = val;
      } else if (key == "axis_scale") {
        number(s.axis_scale);
      } else if (key == "u_offset") {
        number(s.u_offset);
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw bad("expected two columns");
    double u = 0.0, v = 0.0;
    if (!detail::parse_double(line.substr(0, comma), u) || !detail::parse_double(line.substr(comma + 1), v))
      throw bad("expected numbers");
    if (!std::isfinite(u) || !std::isfinite(v)) throw bad("non-finite point");
    s.points.push_back({u, v});
  }
  if (s.points.empty()) throw ConfigError("section file '" + path + "' has no points");
  return s;
}

inline void write_spectrum_frame(const std::string& path, const SpectrumFrame& f) {
  auto out = open_out(path);
  out << "x,V\n";
  for (std::size_t i = 0; i < f.grid.size(); ++i) out << fmt_num(f.grid[i]) << ',' << fmt_num(f.potential[i]) << '\n';
  check_written(out, path);
}

inline void append_eigenvalues(std::ostream& out, const SpectrumFrame& f) {
  for (std::size_t l = 0; l < f.energies.size(); ++l)
    out << fmt_num(f.hbar_scale) << ',' << l << ',' << fmt_num(f.energies[l]) << ','
        << fmt_num(f.extents[l].x_lo) << ',' << fmt_num(f.extents[l].x_hi) << '\n';
}

}  // namespace squidqct
