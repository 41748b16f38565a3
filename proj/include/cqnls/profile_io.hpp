#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cqnls/field_io.hpp"
#include "cqnls/groundstate.hpp"

namespace cqnls::io {

inline json profile_json(const SolitonProfile& p) {
  const auto [r1, r2] = pohozaev_residuals(p);
  return {{"omega", p.omega},
          {"dim", p.dim},
          {"quintic", p.quintic},
          {"cubic_reference", p.quintic == 0.0},
          {"r_max", p.grid.r_max()},
          {"n", p.grid.size()},
          {"mass", p.mass},
          {"energy", p.energy},
          {"action", p.action},
          {"sup_norm", p.sup_norm},
          {"decay_rate", p.decay_rate},
          {"l4", p.l4},
          {"l6", p.l6},
          {"grad_sq", p.grad_sq},
          {"residuals", {r1, r2}}};
}

/// `r,phi` rows.
inline std::string profile_csv(const SolitonProfile& p) {
  std::string s = "r,phi\n";
  for (int j = 0; j < p.grid.size(); ++j) s += fmt(p.grid.node(j)) + "," + fmt(p.values[j]) + "\n";
  return s;
}

inline void write_profile(const fs::path& stem, const SolitonProfile& p) {
  fs::path csv = stem, meta = stem;
  csv += ".csv";
  meta += ".json";
  write_text(csv, profile_csv(p));
  write_text(meta, profile_json(p).dump(2) + "\n");
}

}  // namespace cqnls::io
