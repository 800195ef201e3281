#include "tensortopo/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tensortopo {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_rows(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

Matrix square_from_sized_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  while (std::getline(in, line) && trim(line).empty()) {
  }
  double n_value = 0.0;
  if (!parse_number(trim(line), n_value) || n_value < 0 || n_value != static_cast<Index>(n_value))
    throw IoError(path.string() + ": first line must hold the node count");
  const CsvTable t = parse_csv(in);
  const auto n = static_cast<Index>(n_value);
  if (!t.header.empty() || t.values.rows() != n || t.values.cols() != (n == 0 ? 0 : n))
    throw IoError(path.string() + ": expected an " + std::to_string(n) + " x " +
                  std::to_string(n) + " matrix");
  return t.values;
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (!first && cells.size() != width)
      throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                    " cells, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!parse_number(cells[c], row[c])) numeric = false;
    if (first) {
      width = cells.size();
      first = false;
      if (!numeric) {
        t.header = cells;
        continue;
      }
    }
    if (!numeric)
      throw IoError("line " + std::to_string(line_no) + ": non-numeric cell");
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      t.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return t;
}

CsvTable read_csv(const fs::path& path) {
  auto in = open_in(path);
  try {
    return parse_csv(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Matrix read_matrix_csv(const fs::path& path) {
  CsvTable t = read_csv(path);
  if (!t.header.empty()) throw IoError(path.string() + ": unexpected header row");
  return std::move(t.values);
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  auto out = open_out(path);
  write_rows(out, m);
}

NodalSeries read_series_csv(const fs::path& path) {
  CsvTable t = read_csv(path);
  if (t.values.rows() == 0) throw IoError(path.string() + ": no samples");
  return NodalSeries(std::move(t.values), std::move(t.header));
}

void write_series_csv(const fs::path& path, const NodalSeries& y) {
  auto out = open_out(path);
  if (!y.names().empty()) {
    for (std::size_t i = 0; i < y.names().size(); ++i) out << (i ? "," : "") << y.names()[i];
    out << '\n';
  }
  write_rows(out, y.values());
}

void write_adjacency_csv(const fs::path& path, const AdjacencyMatrix& a) {
  auto out = open_out(path);
  out << a.n() << '\n';
  write_rows(out, a.matrix());
}

AdjacencyMatrix read_adjacency_csv(const fs::path& path) {
  return AdjacencyMatrix(square_from_sized_csv(path));
}

void write_indicator_csv(const fs::path& path, const EdgeIndicator& s) {
  auto out = open_out(path);
  out << s.n() << '\n';
  write_rows(out, s.matrix().cast<double>());
}

EdgeIndicator read_indicator_csv(const fs::path& path) {
  const Matrix m = square_from_sized_csv(path);
  if ((m.array() != m.array().round()).any())
    throw IoError(path.string() + ": indicator entries must be 0 or 1");
  return EdgeIndicator(m.cast<int>());
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw IoError("matrix must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j.front().size()) : 0;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw IoError("matrix rows must have equal length");
    for (Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw IoError("matrix entries must be numbers");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

Json adjacency_to_json(const AdjacencyMatrix& a) {
  return Json{{"n", a.n()}, {"a", matrix_to_json(a.matrix())}};
}

AdjacencyMatrix adjacency_from_json(const Json& j) {
  Matrix m = matrix_from_json(j.at("a"));
  if (j.at("n").get<Index>() != m.rows()) throw IoError("adjacency: n does not match the matrix");
  return AdjacencyMatrix(std::move(m));
}

Json indicator_to_json(const EdgeIndicator& s) {
  return Json{{"n", s.n()}, {"s", matrix_to_json(s.matrix().cast<double>())}};
}

EdgeIndicator indicator_from_json(const Json& j) {
  const Matrix m = matrix_from_json(j.at("s"));
  if (j.at("n").get<Index>() != m.rows()) throw IoError("indicator: n does not match the matrix");
  return EdgeIndicator(m.cast<int>());
}

Json report_to_json(const IdentifiabilityReport& r) {
  Json pairs = Json::array();
  for (const auto& [i, j] : r.failing_pairs) pairs.push_back({i, j});
  return Json{{"kruskal_rank_rx", r.kruskal_rank_rx},
              {"kruskal_rank_capped", r.kruskal_rank_capped},
              {"fully_known", r.fully_known},
              {"full_condition_met", r.full_condition_met},
              {"partial_condition_met", r.partial_condition_met},
              {"failing_pairs", pairs}};
}

Json consensus_to_json(const Consensus& c) {
  Json table = Json::array();
  for (const auto& [s, count] : c.table)
    table.push_back({{"count", count}, {"support", matrix_to_json(s.matrix().cast<double>())}});
  return Json{{"votes", c.votes}, {"total", c.total}, {"tie", c.tie},
              {"modal", c.total ? indicator_to_json(c.modal) : Json()}, {"table", table}};
}

Json estimate_to_json(const TopologyEstimate& e) {
  Json j{{"adjacency", adjacency_to_json(e.a_hat)},
         {"support", indicator_to_json(e.s_hat)},
         {"fit", e.fit},
         {"converged", e.converged},
         {"eta", e.eta},
         {"use_abs", e.use_abs},
         {"report", report_to_json(e.report)},
         {"warnings", e.warnings}};
  if (!e.restart_supports.empty()) j["consensus"] = consensus_to_json(e.consensus);
  return j;
}

Json tracked_window_to_json(const TrackedWindow& w) {
  Json cols = Json::array();
  for (const auto& c : w.extraction.columns)
    cols.push_back({{"eigenvalue", c.eigenvalue}, {"residual", c.residual}, {"rank_one", c.rank_one}});
  Json j{{"window", w.window}, {"recovered", w.recovered}, {"columns", cols}};
  if (w.recovered) {
    j["adjacency"] = adjacency_to_json(w.estimate.a_hat);
    j["support"] = indicator_to_json(w.estimate.s_hat);
    j["eta"] = w.estimate.eta;
  } else {
    j["error"] = w.error;
  }
  if (!w.estimate.warnings.empty()) j["warnings"] = w.estimate.warnings;
  return j;
}

void write_tensor_dir(const fs::path& dir, const CorrelationTensor& t,
                      const std::vector<Index>& boundaries) {
  fs::create_directories(dir);
  for (Index m = 0; m < t.m(); ++m) {
    char name[32];
    std::snprintf(name, sizeof name, "slice_%03ld.csv", static_cast<long>(m));
    write_matrix_csv(dir / name, t.slice(m));
  }
  write_json(dir / "manifest.json", Json{{"n", t.n()}, {"m", t.m()}, {"boundaries", boundaries}});
}

TensorBundle read_tensor_dir(const fs::path& dir) {
  const Json manifest = read_json(dir / "manifest.json");
  const auto n = manifest.at("n").get<Index>();
  const auto m = manifest.at("m").get<Index>();
  std::vector<Matrix> slices;
  for (Index l = 0; l < m; ++l) {
    char name[32];
    std::snprintf(name, sizeof name, "slice_%03ld.csv", static_cast<long>(l));
    Matrix s = read_matrix_csv(dir / name);
    if (s.rows() != n || s.cols() != n) throw IoError(std::string(name) + ": expected n x n");
    slices.push_back(std::move(s));
  }
  TensorBundle b;
  try {
    b.tensor = build_tensor(std::move(slices));
  } catch (const std::invalid_argument& e) {
    throw IoError(dir.string() + ": " + e.what());
  }
  if (manifest.contains("boundaries")) b.boundaries = manifest["boundaries"].get<std::vector<Index>>();
  return b;
}

Json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace tensortopo
