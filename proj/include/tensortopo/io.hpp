#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "tensortopo/cptensor.hpp"
#include "tensortopo/semsim.hpp"
#include "tensortopo/topology.hpp"
#include "tensortopo/tracker.hpp"
#include "tensortopo/types.hpp"

namespace tensortopo {

using Json = nlohmann::json;

/// Malformed or unreadable input files.
class IoError : public Error {
 public:
  using Error::Error;
};

struct CsvTable {
  std::vector<std::string> header;  // empty when the first row is numeric
  Matrix values;
};

/// Comma-separated numeric table. A first row with any non-numeric cell is taken as a
/// header. Throws IoError on ragged rows or non-numeric cells (with the line number).
CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

/// Plain numeric CSV without a header.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// One row per sample; the header row (if any) names the nodes.
NodalSeries read_series_csv(const std::filesystem::path& path);
void write_series_csv(const std::filesystem::path& path, const NodalSeries& y);

/// Square matrices as CSV: a first line holding n, then n rows.
void write_adjacency_csv(const std::filesystem::path& path, const AdjacencyMatrix& a);
AdjacencyMatrix read_adjacency_csv(const std::filesystem::path& path);
void write_indicator_csv(const std::filesystem::path& path, const EdgeIndicator& s);
EdgeIndicator read_indicator_csv(const std::filesystem::path& path);

Json matrix_to_json(const Matrix& m);  // array of rows
Matrix matrix_from_json(const Json& j);
Json adjacency_to_json(const AdjacencyMatrix& a);  // {"n", "a"}
AdjacencyMatrix adjacency_from_json(const Json& j);
Json indicator_to_json(const EdgeIndicator& s);  // {"n", "s"}
EdgeIndicator indicator_from_json(const Json& j);
Json report_to_json(const IdentifiabilityReport& r);
Json consensus_to_json(const Consensus& c);
Json estimate_to_json(const TopologyEstimate& e);
Json tracked_window_to_json(const TrackedWindow& w);

struct TensorBundle {
  CorrelationTensor tensor;
  std::vector<Index> boundaries;  // may be empty
};

/// Directory holding slice_000.csv ... plus manifest.json {n, m, boundaries}.
void write_tensor_dir(const std::filesystem::path& dir, const CorrelationTensor& t,
                      const std::vector<Index>& boundaries = {});
TensorBundle read_tensor_dir(const std::filesystem::path& dir);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace tensortopo
