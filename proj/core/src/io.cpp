#include "lrtar/io.hpp"

#include "lrtar/tucker.hpp"

#include <json.hpp>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "binary series files assume a little-endian host");

namespace lrtar {

namespace {

using nlohmann::json;

[[noreturn]] void io_fail(const std::string& what, const std::string& path) {
  throw std::runtime_error(what + ": " + path);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream iss(line);
  std::vector<std::string> out;
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

Dims parse_dims_list(std::string_view s) {
  Dims dims;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    std::string_view item =
        s.substr(pos, comma == std::string_view::npos ? s.size() - pos : comma - pos);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || v < 1)
      throw std::invalid_argument("bad dimension list: " + std::string(s));
    dims.push_back(static_cast<Index>(v));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return dims;
}

struct SeriesHeader {
  Dims dims;
  Index t_count = 0;
  bool binary = false;
};

SeriesHeader parse_header(const std::string& line, const std::string& path) {
  auto toks = split_ws(line);
  if (toks.size() < 4 || toks[0] != "TSR1") io_fail("not a TSR1 file", path);
  SeriesHeader h;
  long long d = -1;
  for (size_t i = 1; i < toks.size(); ++i) {
    const std::string& t = toks[i];
    if (t.rfind("d=", 0) == 0) {
      d = std::stoll(t.substr(2));
    } else if (t.rfind("dims=", 0) == 0) {
      h.dims = parse_dims_list(t.substr(5));
    } else if (t.rfind("T=", 0) == 0) {
      h.t_count = static_cast<Index>(std::stoll(t.substr(2)));
    } else if (t == "binary") {
      h.binary = true;
    } else {
      io_fail("unknown header token '" + t + "'", path);
    }
  }
  if (d < 1 || h.dims.empty() || static_cast<long long>(h.dims.size()) != d ||
      h.t_count < 1)
    io_fail("malformed TSR1 header", path);
  return h;
}

std::string header_line(const Dims& dims, Index t_count, bool binary) {
  std::string line = "TSR1 d=" + std::to_string(dims.size()) + " dims=";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) line += ',';
    line += std::to_string(dims[i]);
  }
  line += " T=" + std::to_string(t_count);
  if (binary) line += " binary";
  line += '\n';
  return line;
}

json matrix_to_json(const Matrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(m.data(), m.data() + m.size());  // column-major
  j["data"] = data;
  return j;
}

Matrix matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols)
    throw std::invalid_argument("model JSON: matrix size mismatch");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad number: " + std::string(s));
  return v;
}

void write_series(const TensorSeries& series, const std::string& path,
                  bool binary) {
  if (series.length() < 1)
    throw std::invalid_argument("write_series: empty series");
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail("cannot open for writing", path);
  out << header_line(series.dims, series.length(), binary);
  for (const DenseTensor& obs : series.observations) {
    if (binary) {
      out.write(reinterpret_cast<const char*>(obs.data().data()),
                static_cast<std::streamsize>(sizeof(double)) * obs.size());
    } else {
      for (Index i = 0; i < obs.size(); ++i) {
        if (i) out << ' ';
        out << format_double(obs[i]);
      }
      out << '\n';
    }
  }
  if (!out) io_fail("write failed", path);
}

TensorSeries read_series(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail("cannot open", path);
  std::string line;
  if (!std::getline(in, line)) io_fail("empty file", path);
  SeriesHeader h = parse_header(line, path);
  const Index p = dims_product(h.dims);

  TensorSeries series;
  series.dims = h.dims;
  series.observations.reserve(static_cast<size_t>(h.t_count));
  for (Index t = 0; t < h.t_count; ++t) {
    Vector v(p);
    if (h.binary) {
      in.read(reinterpret_cast<char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double)) * p);
      if (!in) io_fail("truncated binary body", path);
    } else {
      if (!std::getline(in, line)) io_fail("truncated body", path);
      auto toks = split_ws(line);
      if (static_cast<Index>(toks.size()) != p)
        io_fail("record " + std::to_string(t) + " has wrong length", path);
      for (Index i = 0; i < p; ++i) v[i] = parse_double(toks[static_cast<size_t>(i)]);
    }
    series.observations.emplace_back(h.dims, std::move(v));
  }
  return series;
}

void write_tensor(const DenseTensor& t, const std::string& path, bool binary) {
  TensorSeries s;
  s.dims = t.dims();
  s.observations.push_back(t);
  write_series(s, path, binary);
}

DenseTensor read_tensor(const std::string& path) {
  TensorSeries s = read_series(path);
  if (s.length() != 1) io_fail("expected a single-record tensor file", path);
  return s.observations[0];
}

void write_model_json(const LrtarModel& model, const std::string& path) {
  json j;
  j["format"] = "lrtar-model-v1";
  j["dims"] = model.obs_dims();
  j["transition"] = {{"dims", model.transition().dims()},
                     {"data", std::vector<double>(
                                  model.transition().data().data(),
                                  model.transition().data().data() +
                                      model.transition().size())}};
  j["noise_cov"] = matrix_to_json(model.noise_cov());
  if (model.tucker()) {
    const auto& td = *model.tucker();
    json tj;
    tj["ranks"] = td.ranks;
    tj["core"] = std::vector<double>(td.core.data().data(),
                                     td.core.data().data() + td.core.size());
    tj["factors"] = json::array();
    for (const Matrix& f : td.factors) tj["factors"].push_back(matrix_to_json(f));
    j["tucker"] = std::move(tj);
  }
  std::ofstream out(path);
  if (!out) io_fail("cannot open for writing", path);
  out << j.dump(2) << '\n';
  if (!out) io_fail("write failed", path);
}

LrtarModel read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_fail("cannot open", path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    io_fail(std::string("bad model JSON (") + e.what() + ")", path);
  }
  if (j.value("format", "") != "lrtar-model-v1")
    io_fail("unsupported model format", path);

  const auto tdims = j.at("transition").at("dims").get<Dims>();
  const auto tdata = j.at("transition").at("data").get<std::vector<double>>();
  if (static_cast<Index>(tdata.size()) != dims_product(tdims))
    io_fail("transition size mismatch", path);
  DenseTensor transition(
      tdims, Eigen::Map<const Vector>(tdata.data(),
                                      static_cast<Index>(tdata.size())));
  Matrix noise = matrix_from_json(j.at("noise_cov"));

  std::optional<TuckerDecomposition> tucker;
  if (j.contains("tucker")) {
    const json& tj = j.at("tucker");
    TuckerDecomposition td;
    td.ranks = tj.at("ranks").get<Dims>();
    const auto cdata = tj.at("core").get<std::vector<double>>();
    if (static_cast<Index>(cdata.size()) != dims_product(td.ranks))
      io_fail("tucker core size mismatch", path);
    td.core = DenseTensor(td.ranks,
                          Eigen::Map<const Vector>(
                              cdata.data(), static_cast<Index>(cdata.size())));
    for (const json& fj : tj.at("factors")) td.factors.push_back(matrix_from_json(fj));
    tucker = std::move(td);
  }
  return LrtarModel(std::move(transition), std::move(noise), std::move(tucker));
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_fail("cannot open", path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t pos = 0;
    while (true) {
      size_t comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma == std::string::npos
                                            ? std::string::npos
                                            : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

void write_csv(const CsvTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) io_fail("cannot open for writing", path);
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
  if (!out) io_fail("write failed", path);
}

}  // namespace lrtar
