#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "continuum.hpp"
#include "exact.hpp"
#include "stochastic.hpp"

namespace sirbass::csv {

// A table with a "# key: value" comment block, one header row and string cells.
struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw std::runtime_error("csv has no column '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& c : columns)
      if (c == name) return true;
    return false;
  }
  std::string meta_value(const std::string& key, const std::string& fallback = "") const {
    for (const auto& [k, v] : meta)
      if (k == key) return v;
    return fallback;
  }
  double number(std::size_t row, const std::string& name) const { return std::stod(rows[row][column(name)]); }
};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write(std::ostream& out, const Table& t) {
  for (const auto& [k, v] : t.meta) out << "# " << k << ": " << v << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  }
}

inline Table read(std::istream& in) {
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      const auto colon = body.find(": ");
      if (colon == std::string::npos)
        t.meta.emplace_back(body, "");
      else
        t.meta.emplace_back(body.substr(0, colon), body.substr(colon + 2));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (t.columns.empty())
      t.columns = std::move(cells);
    else if (cells.size() != t.columns.size())
      throw std::runtime_error("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(t.columns.size()));
    else
      t.rows.push_back(std::move(cells));
  }
  if (t.columns.empty()) throw std::runtime_error("csv has no header row");
  return t;
}

inline void write_file(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  write(out, t);
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return read(in);
}

inline const char* state_name(std::size_t s) { return s == 0 ? "S" : (s == 1 ? "I" : "R"); }

// ---- emitters -------------------------------------------------------------------

inline Table estimate_table(const EnsembleEstimate& e) {
  Table t;
  t.meta = {{"schema", "estimate"},
            {"units", "t in model time; mean and stderr are probabilities"},
            {"replications", std::to_string(e.replications)},
            {"seed", std::to_string(e.seed)}};
  t.columns = {"t", "k", "state", "mean", "stderr"};
  for (std::size_t j = 0; j < e.times.size(); ++j)
    for (std::size_t o = 0; o < e.mean.size(); ++o)
      for (std::size_t s = 0; s < 3; ++s)
        t.rows.push_back({num(e.times[j]), std::to_string(e.first_node + static_cast<int>(o)), state_name(s),
                          num(e.mean[o][j][s]), num(e.stderr_[o][j][s])});
  return t;
}

inline Table front_table(const FrontStat& f) {
  Table t;
  t.meta = {{"schema", "front"},
            {"units", "t in model time; front_k is a node index, -1 when no node is infected"},
            {"replications", std::to_string(f.replications)},
            {"seed", std::to_string(f.seed)}};
  t.columns = {"t", "replication", "front_k"};
  for (std::size_t j = 0; j < f.times.size(); ++j)
    for (std::size_t m = 0; m < f.front[j].size(); ++m)
      t.rows.push_back({num(f.times[j]), std::to_string(m), std::to_string(f.front[j][m])});
  return t;
}

inline Table solution_table(const Solution& sol) {
  const auto& m = sol.marginals;
  const bool pairs = !sol.pairs.ss.empty();
  const bool sr = pairs && !sol.pairs.sr.empty();
  Table t;
  t.meta = {{"schema", "solver"},
            {"units", "t in model time; columns are probabilities"},
            {"step", num(sol.h)},
            {"pairs", "row k holds the pair (k-1, k)"}};
  t.columns = {"t", "k", "S", "I", "R"};
  if (pairs) t.columns.push_back("pair_SS");
  if (sr) t.columns.push_back("pair_SR");
  for (std::size_t j = 0; j < m.times.size(); ++j)
    for (int k = m.first_node; k <= m.last_node(); ++k) {
      std::vector<std::string> row{num(m.times[j]), std::to_string(k), num(m.s(k, j)), num(m.i(k, j)), num(m.r(k, j))};
      const int pk = k - sol.pairs.first_node;
      const bool have = pairs && pk >= 0 && pk < static_cast<int>(sol.pairs.ss.size());
      if (pairs) row.push_back(have ? num(sol.pairs.ss[static_cast<std::size_t>(pk)][j]) : "nan");
      if (sr) row.push_back(have ? num(sol.pairs.sr[static_cast<std::size_t>(pk)][j]) : "nan");
      t.rows.push_back(std::move(row));
    }
  return t;
}

inline Table field_table(const ContinuumField& f) {
  Table t;
  t.meta = {{"schema", "continuum"},
            {"units", "t in model time; x in space units; S is a probability"},
            {"scheme", f.scheme},
            {"dx", num(f.dx)},
            {"dt", num(f.dt)}};
  t.columns = {"t", "x", "S"};
  for (std::size_t j = 0; j < f.times.size(); ++j)
    for (std::size_t i = 0; i < f.x.size(); ++i) t.rows.push_back({num(f.times[j]), num(f.x[i]), num(f.S[j][i])});
  return t;
}

inline Table error_table(const std::vector<ErrorRow>& rows) {
  Table t;
  t.meta = {{"schema", "error"}, {"units", "dx in space units; sup_error is a probability difference"}};
  t.columns = {"dx", "sup_error", "t_snapshot"};
  for (const auto& r : rows) t.rows.push_back({num(r.dx), num(r.sup_error), num(r.t_snapshot)});
  return t;
}

}  // namespace sirbass::csv
