// Writes a small valence-legal molecule-like corpus: families of analogs, each
// analog derived from an earlier family member by one or two local edits.
//
//   make_desk_corpus [--families 25] [--analogs 9] [--seed 7] --out data/desk_molecules.jsonl

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hiersample/augment.hpp"
#include "hiersample/dataset_io.hpp"
#include "hiersample/graph.hpp"
#include "hiersample/random.hpp"

namespace {

using hiersample::AttrCode;
using hiersample::Rng;

constexpr AttrCode kC = 5, kN = 6, kO = 7, kF = 8, kS = 15, kCl = 16;
constexpr std::size_t kMinAtoms = 12, kMaxAtoms = 35;

int valence(AttrCode a) {
  switch (a) {
    case kC: return 4;
    case kN: return 3;
    case kO: return 2;
    case kS: return 2;
    default: return 1;
  }
}

struct Bond {
  std::uint32_t u, v;
  int order;
};

struct Molecule {
  std::vector<AttrCode> atoms;
  std::vector<Bond> bonds;

  int used(std::uint32_t a) const {
    int s = 0;
    for (const auto& b : bonds) {
      if (b.u == a || b.v == a) s += b.order;
    }
    return s;
  }
  int free(std::uint32_t a) const { return valence(atoms[a]) - used(a); }
  int degree(std::uint32_t a) const {
    int d = 0;
    for (const auto& b : bonds) d += (b.u == a || b.v == a);
    return d;
  }
  bool bonded(std::uint32_t a, std::uint32_t b) const {
    for (const auto& x : bonds) {
      if ((x.u == a && x.v == b) || (x.u == b && x.v == a)) return true;
    }
    return false;
  }
};

AttrCode draw_element(Rng& rng) {
  static const std::vector<double> w = {0.62, 0.12, 0.12, 0.04, 0.05, 0.05};
  static const std::vector<AttrCode> e = {kC, kN, kO, kS, kF, kCl};
  return e[rng.weighted_index(w)];
}

std::vector<std::uint32_t> with_free_valence(const Molecule& m, int at_least) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t a = 0; a < m.atoms.size(); ++a) {
    if (m.free(a) >= at_least) out.push_back(a);
  }
  return out;
}

bool attach(Molecule& m, Rng& rng) {
  auto open = with_free_valence(m, 1);
  if (open.empty()) return false;
  auto host = open[rng.below(open.size())];
  auto elem = draw_element(rng);
  int order = 1;
  if (valence(elem) >= 2 && m.free(host) >= 2 && rng.uniform() < 0.15) order = 2;
  m.atoms.push_back(elem);
  m.bonds.push_back({host, static_cast<std::uint32_t>(m.atoms.size() - 1), order});
  return true;
}

// Hop distances from `s` over the bond graph.
std::vector<int> distances(const Molecule& m, std::uint32_t s) {
  std::vector<int> d(m.atoms.size(), -1);
  std::vector<std::uint32_t> queue{s};
  d[s] = 0;
  for (std::size_t k = 0; k < queue.size(); ++k) {
    auto a = queue[k];
    for (const auto& b : m.bonds) {
      std::uint32_t x = b.u == a ? b.v : (b.v == a ? b.u : a);
      if (x != a && d[x] < 0) {
        d[x] = d[a] + 1;
        queue.push_back(x);
      }
    }
  }
  return d;
}

// Closes a 5- or 6-membered ring between two carbons with spare valence.
bool close_ring(Molecule& m, Rng& rng) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t a = 0; a < m.atoms.size(); ++a) {
    if (m.atoms[a] != kC || m.free(a) < 1) continue;
    auto d = distances(m, a);
    for (std::uint32_t b = a + 1; b < m.atoms.size(); ++b) {
      if (m.atoms[b] == kC && m.free(b) >= 1 && (d[b] == 4 || d[b] == 5)) pairs.emplace_back(a, b);
    }
  }
  if (pairs.empty()) return false;
  auto [a, b] = pairs[rng.below(pairs.size())];
  m.bonds.push_back({a, b, 1});
  return true;
}

Molecule scaffold(Rng& rng) {
  Molecule m;
  const std::size_t ring = rng.uniform() < 0.6 ? 6 : 5;
  for (std::size_t k = 0; k < ring; ++k) m.atoms.push_back(kC);
  if (rng.uniform() < 0.4) m.atoms[rng.below(ring)] = rng.uniform() < 0.5 ? kN : kO;
  for (std::uint32_t k = 0; k < ring; ++k) {
    const auto next = static_cast<std::uint32_t>((k + 1) % ring);
    const bool aromatic_like = ring == 6 && k % 2 == 0 && m.atoms[k] == kC && m.atoms[next] == kC;
    m.bonds.push_back({k, next, aromatic_like ? 2 : 1});
  }
  const std::size_t target = kMinAtoms + rng.below(13);  // 12..24
  while (m.atoms.size() < target) {
    if (!attach(m, rng)) break;
  }
  if (rng.uniform() < 0.5) close_ring(m, rng);
  return m;
}

bool mutate_element(Molecule& m, Rng& rng) {
  std::uint32_t a = static_cast<std::uint32_t>(rng.below(m.atoms.size()));
  auto elem = draw_element(rng);
  if (elem == m.atoms[a] || valence(elem) < m.used(a)) return false;
  m.atoms[a] = elem;
  return true;
}

bool remove_terminal(Molecule& m, Rng& rng) {
  if (m.atoms.size() <= kMinAtoms) return false;
  std::vector<std::uint32_t> leaves;
  for (std::uint32_t a = 0; a < m.atoms.size(); ++a) {
    if (m.degree(a) == 1) leaves.push_back(a);
  }
  if (leaves.empty()) return false;
  auto leaf = leaves[rng.below(leaves.size())];
  std::erase_if(m.bonds, [&](const Bond& b) { return b.u == leaf || b.v == leaf; });
  m.atoms.erase(m.atoms.begin() + leaf);
  for (auto& b : m.bonds) {
    if (b.u > leaf) --b.u;
    if (b.v > leaf) --b.v;
  }
  return true;
}

bool change_bond(Molecule& m, Rng& rng) {
  auto& b = m.bonds[rng.below(m.bonds.size())];
  if (b.order >= 2) {
    b.order = 1;
    return true;
  }
  if (m.free(b.u) >= 1 && m.free(b.v) >= 1) {
    b.order = 2;
    return true;
  }
  return false;
}

void edit(Molecule& m, Rng& rng) {
  for (int tries = 0; tries < 50; ++tries) {
    bool ok = false;
    switch (rng.below(4)) {
      case 0: ok = m.atoms.size() < kMaxAtoms && attach(m, rng); break;
      case 1: ok = mutate_element(m, rng); break;
      case 2: ok = remove_terminal(m, rng); break;
      default: ok = change_bond(m, rng); break;
    }
    if (ok) return;
  }
}

hiersample::AttributedGraph to_graph(const Molecule& m, std::string id) {
  std::vector<hiersample::Edge> edges;
  std::vector<std::vector<AttrCode>> node_attrs, edge_attrs;
  for (auto a : m.atoms) node_attrs.push_back({a});
  for (const auto& b : m.bonds) {
    edges.push_back({std::min(b.u, b.v), std::max(b.u, b.v)});
    edge_attrs.push_back({b.order});
  }
  return {std::move(id), m.atoms.size(), std::move(edges), std::move(node_attrs), std::move(edge_attrs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the desk molecule corpus"};
  std::size_t families = 25, analogs = 9;
  std::uint64_t seed = 7;
  std::string out;
  app.add_option("--families", families);
  app.add_option("--analogs", analogs, "graphs per family, scaffold included");
  app.add_option("--seed", seed);
  app.add_option("--out", out)->required();
  CLI11_PARSE(app, argc, argv);

  const auto valences = hiersample::default_valence_table();
  std::vector<hiersample::AttributedGraph> graphs;
  for (std::size_t f = 0; f < families; ++f) {
    auto rng = Rng::substream(seed, {f});
    std::vector<Molecule> members{scaffold(rng)};
    while (members.size() < analogs) {
      Molecule m = members[rng.below(members.size())];
      const int edits = 1 + static_cast<int>(rng.below(2));
      for (int e = 0; e < edits; ++e) edit(m, rng);
      members.push_back(std::move(m));
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      char id[32];
      std::snprintf(id, sizeof id, "mol_f%02zu_%02zu", f, k);
      auto g = to_graph(members[k], id);
      auto check = hiersample::legality_check(g, valences);
      if (!check.legal) {
        std::cerr << "generated an illegal molecule " << id << ": " << check.reason << '\n';
        return 1;
      }
      graphs.push_back(std::move(g));
    }
  }
  auto ds = hiersample::make_dataset(std::move(graphs), "desk");
  std::ofstream os(out, std::ios::binary);
  os << hiersample::serialize_dataset(ds);
  return os ? 0 : 1;
}
