#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hiersample/errors.hpp"
#include "hiersample/graph.hpp"
#include "hiersample/masses.hpp"

namespace hiersample {

enum class DatasetFormat { GraphJsonl, EdgeListDir };

inline DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "graph-jsonl") return DatasetFormat::GraphJsonl;
  if (s == "edge-list-dir") return DatasetFormat::EdgeListDir;
  throw PreconditionError("unknown dataset format '" + std::string(s) + "'");
}

namespace detail {

inline std::vector<std::vector<AttrCode>> attr_rows(const nlohmann::json& j, const char* key) {
  std::vector<std::vector<AttrCode>> rows;
  if (!j.contains(key)) return rows;
  for (const auto& row : j.at(key)) rows.push_back(row.get<std::vector<AttrCode>>());
  return rows;
}

inline AttributedGraph parse_graph_record(std::string_view line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) throw ParseError(line_no, "record is not a JSON object");
    auto id = j.at("id").get<std::string>();
    auto n = j.at("n").get<std::int64_t>();
    if (n < 0) throw ParseError(line_no, "negative node count");
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError(line_no, "edge must be a pair [u, v]");
      auto u = e[0].get<std::int64_t>();
      auto v = e[1].get<std::int64_t>();
      if (u < 0 || v < 0 || u >= n || v >= n) {
        throw ParseError(line_no, "node index out of range in edge [" + std::to_string(u) + "," +
                                      std::to_string(v) + "] for n=" + std::to_string(n));
      }
      edges.push_back({static_cast<NodeIndex>(u), static_cast<NodeIndex>(v)});
    }
    return AttributedGraph(std::move(id), static_cast<std::size_t>(n), std::move(edges),
                           attr_rows(j, "node_attrs"), attr_rows(j, "edge_attrs"));
  } catch (const ParseError&) {
    throw;
  } catch (const DataError& e) {
    throw ParseError(line_no, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("bad record: ") + e.what());
  }
}

}  // namespace detail

inline GraphDataset parse_graph_jsonl(std::istream& in, std::string name = {}, std::string source = {}) {
  std::vector<AttributedGraph> graphs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    graphs.push_back(detail::parse_graph_record(line, line_no));
  }
  return make_dataset(std::move(graphs), std::move(name), std::move(source));
}

inline GraphDataset load_edge_list_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<AttributedGraph> graphs;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::vector<Edge> edges;
    std::int64_t max_index = -1;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream fields(line);
      std::int64_t u, v;
      if (!(fields >> u >> v) || u < 0 || v < 0) {
        throw ParseError(line_no, file.filename().string() + ": expected 'u v' with nonnegative indices");
      }
      max_index = std::max({max_index, u, v});
      edges.push_back({static_cast<NodeIndex>(u), static_cast<NodeIndex>(v)});
    }
    graphs.emplace_back(file.filename().string(), static_cast<std::size_t>(max_index + 1), std::move(edges));
  }
  return make_dataset(std::move(graphs), dir.filename().string(), dir.string());
}

inline GraphDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  if (format == DatasetFormat::EdgeListDir) return load_edge_list_dir(path);
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  return parse_graph_jsonl(in, path.stem().string(), path.string());
}

/// Canonical graph-jsonl form: edges with u < v, sorted; attribute arrays only when arity > 0.
inline std::string serialize_graph(const AttributedGraph& g) {
  nlohmann::ordered_json j;
  j["id"] = g.id();
  j["n"] = g.node_count();
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : g.edges()) edges.push_back({e.u, e.v});
  j["edges"] = std::move(edges);
  if (g.node_arity() > 0) j["node_attrs"] = g.node_attr_rows();
  if (g.edge_arity() > 0) j["edge_attrs"] = g.edge_attr_rows();
  return j.dump();
}

inline std::string serialize_dataset(const GraphDataset& ds) {
  std::string out;
  for (const auto& g : ds.graphs) {
    out += serialize_graph(g);
    out += '\n';
  }
  return out;
}

inline MassTable parse_mass_table(std::string_view text) {
  std::map<AttrCode, double> m;
  try {
    auto j = nlohmann::json::parse(text);
    for (const auto& [key, value] : j.items()) m[static_cast<AttrCode>(std::stoi(key))] = value.get<double>();
  } catch (const std::exception& e) {
    throw DataError(std::string("bad mass table: ") + e.what());
  }
  return MassTable(std::move(m));
}

inline MassTable load_mass_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mass table " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_mass_table(buf.str());
}

}  // namespace hiersample
