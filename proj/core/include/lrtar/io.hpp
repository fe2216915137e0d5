#pragma once

#include "lrtar/model.hpp"

#include <string>
#include <string_view>

namespace lrtar {

/// Shortest decimal representation that round-trips the exact double.
std::string format_double(double v);
double parse_double(std::string_view s);  // throws std::invalid_argument

/// Series file format ("TSR1"): one UTF-8 header line
///   TSR1 d=<d> dims=<p1,...,pd> T=<T>
/// followed by T records of prod(p_i) doubles in canonical vec order
/// (first index fastest). The text body is one whitespace-separated line per
/// record; the binary variant appends a "binary" token to the header and
/// stores the body as little-endian IEEE-754 doubles.
void write_series(const TensorSeries& series, const std::string& path,
                  bool binary = false);
TensorSeries read_series(const std::string& path);

/// A single tensor is stored as a length-1 series over its own dims.
void write_tensor(const DenseTensor& t, const std::string& path,
                  bool binary = false);
DenseTensor read_tensor(const std::string& path);

void write_model_json(const LrtarModel& model, const std::string& path);
LrtarModel read_model_json(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);
void write_csv(const CsvTable& table, const std::string& path);

}  // namespace lrtar
