#pragma once

#include <Eigen/Core>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "blockcorr/block_corr.hpp"
#include "blockcorr/error.hpp"
#include "blockcorr/inference.hpp"
#include "blockcorr/logmap.hpp"

// File formats.
//
//   dense CSV   one matrix row per line, comma separated, no header
//   block JSON  {"sizes":[n_1,...], "rho":[[...],...]}, null on singleton diagonals
//   eta JSON    {"sizes":[...], "eta":[...], "order":"wg"|"paper"}
//   data CSV    header row of group labels, then one observation per line
//
// Numbers are written in shortest round-trip form, so every finite double
// survives a write/read cycle unchanged.

namespace blockcorr::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, 0, "cannot open file for writing");
  out << text;
}

namespace detail {

struct CsvField {
  std::string_view text;
  std::size_t column;  // 1-based
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<CsvField> split_csv_line(std::string_view line) {
  std::vector<CsvField> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    const std::string_view raw = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    std::size_t lead = 0;
    while (lead < raw.size() && (raw[lead] == ' ' || raw[lead] == '\t')) ++lead;
    out.push_back({trim(raw), start + lead + 1});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_number(const CsvField& f, const std::string& source, std::size_t line) {
  std::string_view s = f.text;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(source, line, f.column, "expected a number, got '" + std::string(f.text) + "'");
  }
  if (!std::isfinite(v)) throw ParseError(source, line, f.column, "value is not finite");
  return v;
}

/// Non-empty lines with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t pos = 0, no = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
    ++no;
    if (!trim(line).empty()) out.emplace_back(no, line);
    if (nl == text.npos) break;
    pos = nl + 1;
  }
  return out;
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(source, line, col, "invalid JSON");
  }
}

inline std::vector<Index> parse_sizes(const json& j, const std::string& source) {
  if (!j.contains("sizes") || !j["sizes"].is_array()) throw ParseError(source, 0, 0, "missing array 'sizes'");
  std::vector<Index> sizes;
  for (const auto& s : j["sizes"]) {
    if (!s.is_number_integer()) throw ParseError(source, 0, 0, "'sizes' must hold integers");
    sizes.push_back(s.get<Index>());
  }
  return sizes;
}

inline json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

// ---- dense CSV -------------------------------------------------------------

inline Eigen::MatrixXd parse_matrix_csv(std::string_view text, const std::string& source = "<csv>") {
  const auto lines = detail::lines_of(text);
  if (lines.empty()) throw ParseError(source, 1, 1, "empty matrix");
  const Index n = static_cast<Index>(lines.size());
  Eigen::MatrixXd m(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto& [no, line] = lines[static_cast<std::size_t>(i)];
    const auto fields = detail::split_csv_line(line);
    if (static_cast<Index>(fields.size()) != n) {
      throw ParseError(source, no, 1,
                       "expected " + std::to_string(n) + " values, found " + std::to_string(fields.size()));
    }
    for (Index j = 0; j < n; ++j) m(i, j) = detail::parse_number(fields[static_cast<std::size_t>(j)], source, no);
  }
  return m;
}

inline DenseCorr parse_dense(std::string_view text, const std::string& source = "<csv>") {
  return DenseCorr(parse_matrix_csv(text, source));
}

inline DenseCorr read_dense(const std::string& path) { return parse_dense(read_file(path), path); }

inline std::string format_matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_dense(const std::string& path, const DenseCorr& d) { write_file(path, format_matrix_csv(d.matrix())); }

// ---- block JSON ------------------------------------------------------------

inline json to_json(const BlockCorr& b) {
  json rho = json::array();
  for (Index k = 0; k < b.K(); ++k) {
    json row = json::array();
    for (Index l = 0; l < b.K(); ++l) row.push_back(k == l ? detail::number_or_null(b.within(k)) : json(b.cross(k, l)));
    rho.push_back(std::move(row));
  }
  return json{{"sizes", b.spec().sizes()}, {"rho", std::move(rho)}};
}

inline BlockCorr block_from_json(const json& j, const std::string& source = "<json>") {
  if (!j.is_object()) throw ParseError(source, 0, 0, "expected a JSON object");
  const BlockSpec spec(detail::parse_sizes(j, source));
  const Index K = spec.K();
  if (!j.contains("rho") || !j["rho"].is_array()) throw ParseError(source, 0, 0, "missing array 'rho'");
  const auto& rho = j["rho"];
  if (static_cast<Index>(rho.size()) != K) {
    throw DimensionMismatch(source + ": 'rho' has " + std::to_string(rho.size()) + " rows, expected " +
                            std::to_string(K));
  }
  WithinValues within(static_cast<std::size_t>(K));
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(K, K);
  for (Index k = 0; k < K; ++k) {
    const auto& row = rho[static_cast<std::size_t>(k)];
    if (!row.is_array() || static_cast<Index>(row.size()) != K) {
      throw DimensionMismatch(source + ": 'rho' row " + std::to_string(k) + " must have " + std::to_string(K) +
                              " entries");
    }
    for (Index l = 0; l < K; ++l) {
      const auto& v = row[static_cast<std::size_t>(l)];
      const std::string where = "rho[" + std::to_string(k) + "][" + std::to_string(l) + "]";
      if (k == l && spec.is_singleton(k)) {
        if (!v.is_null()) throw ParseError(source, 0, 0, where + " must be null for a singleton group");
        continue;
      }
      if (!v.is_number()) throw ParseError(source, 0, 0, where + " must be a number");
      if (k == l) {
        within[static_cast<std::size_t>(k)] = v.get<double>();
      } else {
        cross(k, l) = v.get<double>();
      }
    }
  }
  return BlockCorr(spec, std::move(within), std::move(cross));
}

inline BlockCorr parse_block(std::string_view text, const std::string& source = "<json>") {
  return block_from_json(detail::parse_json(text, source), source);
}

inline BlockCorr read_block(const std::string& path) { return parse_block(read_file(path), path); }

inline void write_block(const std::string& path, const BlockCorr& b) { write_file(path, to_json(b).dump() + "\n"); }

// ---- eta JSON --------------------------------------------------------------

inline json to_json(const EtaVector& e) {
  return json{{"sizes", e.spec.sizes()},
              {"eta", std::vector<double>(e.values.data(), e.values.data() + e.values.size())},
              {"order", to_string(e.order)}};
}

inline EtaVector eta_from_json(const json& j, const std::string& source = "<json>") {
  if (!j.is_object()) throw ParseError(source, 0, 0, "expected a JSON object");
  EtaVector e;
  e.spec = BlockSpec(detail::parse_sizes(j, source));
  if (!j.contains("eta") || !j["eta"].is_array()) throw ParseError(source, 0, 0, "missing array 'eta'");
  const auto& vals = j["eta"];
  if (static_cast<Index>(vals.size()) != eta_length(e.spec)) {
    throw DimensionMismatch(source + ": 'eta' has " + std::to_string(vals.size()) + " entries, expected " +
                            std::to_string(eta_length(e.spec)));
  }
  e.values.resize(static_cast<Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (!vals[i].is_number()) throw ParseError(source, 0, 0, "eta[" + std::to_string(i) + "] must be a number");
    e.values(static_cast<Index>(i)) = vals[i].get<double>();
  }
  if (j.contains("order")) {
    if (!j["order"].is_string()) throw ParseError(source, 0, 0, "'order' must be a string");
    e.order = parse_eta_order(j["order"].get<std::string>());
  }
  return e;
}

inline EtaVector parse_eta(std::string_view text, const std::string& source = "<json>") {
  return eta_from_json(detail::parse_json(text, source), source);
}

inline EtaVector read_eta(const std::string& path) { return parse_eta(read_file(path), path); }

inline void write_eta(const std::string& path, const EtaVector& e) { write_file(path, to_json(e).dump() + "\n"); }

// ---- data CSV --------------------------------------------------------------

inline DataMatrix parse_data(std::string_view text, const std::string& source = "<csv>") {
  const auto lines = detail::lines_of(text);
  if (lines.empty()) throw ParseError(source, 1, 1, "missing header row");
  DataMatrix d;
  for (const auto& f : detail::split_csv_line(lines.front().second)) {
    if (f.text.empty()) throw ParseError(source, lines.front().first, f.column, "empty group label");
    d.labels.emplace_back(f.text);
  }
  const Index n = static_cast<Index>(d.labels.size());
  d.values.resize(static_cast<Index>(lines.size()) - 1, n);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [no, line] = lines[i];
    const auto fields = detail::split_csv_line(line);
    if (static_cast<Index>(fields.size()) != n) {
      throw ParseError(source, no, 1,
                       "expected " + std::to_string(n) + " values, found " + std::to_string(fields.size()));
    }
    for (Index j = 0; j < n; ++j) {
      d.values(static_cast<Index>(i) - 1, j) = detail::parse_number(fields[static_cast<std::size_t>(j)], source, no);
    }
  }
  return d;
}

inline DataMatrix read_data(const std::string& path) { return parse_data(read_file(path), path); }

inline std::string format_data_csv(const DataMatrix& d) {
  std::string out;
  for (std::size_t j = 0; j < d.labels.size(); ++j) {
    if (j) out += ',';
    out += d.labels[j];
  }
  out += '\n';
  return out + format_matrix_csv(d.values);
}

}  // namespace blockcorr::io
