#pragma once

#include <array>
#include <map>
#include <string>

#include "hiersample/errors.hpp"
#include "hiersample/graph.hpp"

namespace hiersample {

/// Per-code mass lookup keyed on the position-0 node attribute.
class MassTable {
 public:
  MassTable() = default;
  explicit MassTable(std::map<AttrCode, double> masses) : masses_(std::move(masses)) {
    for (const auto& [code, mass] : masses_) {
      if (!(mass >= 0.0)) throw DataError("negative mass for code " + std::to_string(code));
    }
  }

  double at(AttrCode code) const {
    auto it = masses_.find(code);
    if (it == masses_.end()) throw DataError("no mass entry for node attribute code " + std::to_string(code));
    return it->second;
  }
  bool contains(AttrCode code) const { return masses_.contains(code); }
  const std::map<AttrCode, double>& entries() const noexcept { return masses_; }

 private:
  std::map<AttrCode, double> masses_;
};

// IUPAC standard atomic weights (abridged), indexed by atomic number - 1.
inline constexpr std::array<double, 118> kStandardAtomicWeights = {
    1.008, 4.002602, 6.94, 9.0121831, 10.81, 12.011,
    14.007, 15.999, 18.998403162, 20.1797, 22.98976928, 24.305,
    26.9815384, 28.085, 30.973761998, 32.06, 35.45, 39.95,
    39.0983, 40.078, 44.955907, 47.867, 50.9415, 51.9961,
    54.938043, 55.845, 58.933194, 58.6934, 63.546, 65.38,
    69.723, 72.63, 74.921595, 78.971, 79.904, 83.798,
    85.4678, 87.62, 88.905838, 91.224, 92.90637, 95.95,
    98.0, 101.07, 102.90549, 106.42, 107.8682, 112.414,
    114.818, 118.71, 121.76, 127.6, 126.90447, 131.293,
    132.90545196, 137.327, 138.90547, 140.116, 140.90766, 144.242,
    145.0, 150.36, 151.964, 157.25, 158.925354, 162.5,
    164.930329, 167.259, 168.934219, 173.045, 174.9668, 178.486,
    180.94788, 183.84, 186.207, 190.23, 192.217, 195.084,
    196.96657, 200.592, 204.38, 207.2, 208.9804, 209.0,
    210.0, 222.0, 223.0, 226.0, 227.0, 232.0377,
    231.03588, 238.02891, 237.0, 244.0, 243.0, 247.0,
    247.0, 251.0, 252.0, 257.0, 258.0, 259.0,
    262.0, 261.0, 262.0, 266.0, 264.0, 277.0,
    268.0, 281.0, 272.0, 285.0, 286.0, 289.0,
    289.0, 293.0, 294.0, 294.0,
};

inline MassTable default_mass_table() {
  std::map<AttrCode, double> m;
  for (std::size_t z = 0; z < kStandardAtomicWeights.size(); ++z) m[static_cast<AttrCode>(z)] = kStandardAtomicWeights[z];
  return MassTable(std::move(m));
}

// Sum of explicit node masses; hydrogens are only counted when present as nodes.
inline double graph_weight(const AttributedGraph& g, const MassTable& masses) {
  if (g.node_count() > 0 && !g.attributed()) {
    throw DataError("graph '" + g.id() + "' has no node attributes to weigh");
  }
  double total = 0.0;
  for (NodeIndex v = 0; v < g.node_count(); ++v) total += masses.at(g.primary_type(v));
  return total;
}

}  // namespace hiersample
