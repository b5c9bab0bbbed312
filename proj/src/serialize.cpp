#include "mimocal/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "mimocal/errors.hpp"

namespace mimocal {
namespace {

// Reads one line, tracking the 1-based line number for error messages.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  if (!std::getline(in, line)) return false;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

[[noreturn]] void parse_fail(const std::string& what, std::size_t line_no) {
  throw IoError(what + " (line " + std::to_string(line_no) + ")");
}

double parse_double_token(const std::string& token, std::size_t line_no) {
  if (token.empty()) parse_fail("empty numeric field", line_no);
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + token.size()) {
    parse_fail("bad numeric value '" + token + "'", line_no);
  }
  return v;
}

std::size_t parse_size_token(const std::string& token, std::size_t line_no) {
  if (token.empty()) parse_fail("empty integer field", line_no);
  const char* begin = token.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end != begin + token.size()) {
    parse_fail("bad integer value '" + token + "'", line_no);
  }
  return static_cast<std::size_t>(v);
}

// Splits "key=value" fields of a header line that starts with `magic`.
std::vector<std::pair<std::string, std::string>> parse_header(
    const std::string& line, const std::string& magic, std::size_t line_no) {
  if (line.rfind(magic, 0) != 0) {
    parse_fail("expected header '" + magic + "'", line_no);
  }
  std::vector<std::pair<std::string, std::string>> fields;
  std::istringstream rest(line.substr(magic.size()));
  std::string token;
  while (rest >> token) {
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos || eq == 0) {
      parse_fail("bad header field '" + token + "'", line_no);
    }
    fields.emplace_back(token.substr(0, eq), token.substr(eq + 1));
  }
  return fields;
}

std::string header_value(
    const std::vector<std::pair<std::string, std::string>>& fields,
    const std::string& key, std::size_t line_no) {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  parse_fail("header is missing field '" + key + "'", line_no);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

void write_entry(std::ostream& out, const cxd& z) {
  out << format_g17(z.real()) << ' ' << format_g17(z.imag()) << '\n';
}

cxd read_entry(std::istream& in, std::string& line, std::size_t& line_no) {
  if (!next_line(in, line, line_no)) {
    parse_fail("unexpected end of file while reading entries", line_no + 1);
  }
  std::istringstream fields(line);
  std::string re_tok, im_tok, extra;
  if (!(fields >> re_tok >> im_tok) || (fields >> extra)) {
    parse_fail("expected 're im' entry", line_no);
  }
  return {parse_double_token(re_tok, line_no),
          parse_double_token(im_tok, line_no)};
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_dataset(std::ostream& out, const CalibrationDataset& dataset) {
  if (dataset.pairs.empty()) {
    throw IoError("save_dataset: dataset has no pairs");
  }
  const Snr snr = dataset.pairs.front().snr;
  for (const ChannelPair& pair : dataset.pairs) {
    if (!(pair.snr == snr)) {
      throw IoError("save_dataset: pairs disagree on SNR; mixed-SNR sets "
                    "have no file form");
    }
    if (pair.h_ul.rows() != dataset.M || pair.h_ul.cols() != dataset.N ||
        pair.h_dl.rows() != dataset.N || pair.h_dl.cols() != dataset.M) {
      throw IoError("save_dataset: pair shapes disagree with M/N");
    }
  }
  out << "# calib-dataset M=" << dataset.M << " N=" << dataset.N
      << " P=" << dataset.pairs.size()
      << " scenario=" << to_string(dataset.scenario.kind) << " snr_db="
      << (snr.is_noiseless() ? std::string("inf") : format_g17(snr.value_db()))
      << '\n';
  for (const ChannelPair& pair : dataset.pairs) {
    for (std::size_t c = 0; c < dataset.N; ++c) {
      for (std::size_t r = 0; r < dataset.M; ++r) {
        write_entry(out, pair.h_ul(r, c));
      }
    }
    for (std::size_t r = 0; r < dataset.N; ++r) {
      for (std::size_t c = 0; c < dataset.M; ++c) {
        write_entry(out, pair.h_dl(r, c));
      }
    }
  }
  if (!out) throw IoError("save_dataset: write failed");
}

void save_dataset(const std::string& path, const CalibrationDataset& dataset) {
  std::ofstream out = open_out(path);
  save_dataset(out, dataset);
}

CalibrationDataset load_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) parse_fail("empty dataset file", 1);
  const auto fields = parse_header(line, "# calib-dataset", line_no);
  CalibrationDataset dataset;
  dataset.M = parse_size_token(header_value(fields, "M", line_no), line_no);
  dataset.N = parse_size_token(header_value(fields, "N", line_no), line_no);
  const std::size_t P =
      parse_size_token(header_value(fields, "P", line_no), line_no);
  dataset.scenario.kind =
      scenario_kind_from_string(header_value(fields, "scenario", line_no));
  dataset.scenario.M = dataset.M;
  dataset.scenario.N = dataset.N;
  const std::string snr_token = header_value(fields, "snr_db", line_no);
  const Snr snr = snr_token == "inf"
                      ? Snr::noiseless()
                      : Snr::db(parse_double_token(snr_token, line_no));
  if (dataset.M == 0 || dataset.N == 0 || P == 0) {
    parse_fail("dataset header must have M, N, P >= 1", line_no);
  }
  dataset.pairs.resize(P);
  for (ChannelPair& pair : dataset.pairs) {
    pair.snr = snr;
    pair.h_ul = ComplexMatrix(dataset.M, dataset.N);
    pair.h_dl = ComplexMatrix(dataset.N, dataset.M);
    for (std::size_t c = 0; c < dataset.N; ++c) {
      for (std::size_t r = 0; r < dataset.M; ++r) {
        pair.h_ul(r, c) = read_entry(in, line, line_no);
      }
    }
    for (std::size_t r = 0; r < dataset.N; ++r) {
      for (std::size_t c = 0; c < dataset.M; ++c) {
        pair.h_dl(r, c) = read_entry(in, line, line_no);
      }
    }
    if (!pair.h_ul.all_finite() || !pair.h_dl.all_finite()) {
      parse_fail("dataset contains non-finite entries", line_no);
    }
  }
  if (next_line(in, line, line_no) && !line.empty()) {
    parse_fail("trailing content after the last pair", line_no);
  }
  return dataset;
}

CalibrationDataset load_dataset(const std::string& path) {
  std::ifstream in = open_in(path);
  return load_dataset(in);
}

void save_network(std::ostream& out, const NetworkParams& params) {
  if (params.layers.empty()) {
    throw IoError("save_network: network has no layers");
  }
  out << "# calinet L=" << params.layers.size() << " dims=" << params.input_dim;
  for (const LayerParams& layer : params.layers) out << ',' << layer.W.rows;
  out << " activation_out="
      << (params.layers.back().activation == Activation::kTanh ? "tanh"
                                                               : "linear")
      << '\n';
  for (const LayerParams& layer : params.layers) {
    for (std::size_t r = 0; r < layer.W.rows; ++r) {
      for (std::size_t c = 0; c < layer.W.cols; ++c) {
        if (c) out << ' ';
        out << format_g17(layer.W(r, c));
      }
      out << '\n';
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
      if (i) out << ' ';
      out << format_g17(layer.b[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("save_network: write failed");
}

void save_network(const std::string& path, const NetworkParams& params) {
  std::ofstream out = open_out(path);
  save_network(out, params);
}

namespace {

RealVector read_real_row(std::istream& in, std::size_t expect,
                         std::string& line, std::size_t& line_no) {
  if (!next_line(in, line, line_no)) {
    parse_fail("unexpected end of file in network block", line_no + 1);
  }
  std::istringstream fields(line);
  RealVector row;
  row.reserve(expect);
  std::string token;
  while (fields >> token) row.push_back(parse_double_token(token, line_no));
  if (row.size() != expect) {
    parse_fail("expected " + std::to_string(expect) + " values, found " +
               std::to_string(row.size()), line_no);
  }
  for (double v : row) {
    if (!std::isfinite(v)) {
      parse_fail("network parameters must be finite", line_no);
    }
  }
  return row;
}

NetworkParams load_network_block(std::istream& in, std::string& line,
                                 std::size_t& line_no) {
  if (!next_line(in, line, line_no)) {
    parse_fail("missing network header", line_no + 1);
  }
  const auto fields = parse_header(line, "# calinet", line_no);
  const std::size_t L =
      parse_size_token(header_value(fields, "L", line_no), line_no);
  const std::string dims_token = header_value(fields, "dims", line_no);
  const std::string act_token =
      header_value(fields, "activation_out", line_no);
  if (act_token != "tanh" && act_token != "linear") {
    parse_fail("activation_out must be tanh or linear", line_no);
  }
  std::vector<std::size_t> dims;
  std::istringstream dims_in(dims_token);
  std::string piece;
  while (std::getline(dims_in, piece, ',')) {
    dims.push_back(parse_size_token(piece, line_no));
  }
  if (dims.size() != L + 1 || L == 0) {
    parse_fail("dims list must have L+1 entries", line_no);
  }
  NetworkParams params;
  params.input_dim = dims.front();
  params.output_dim = dims.back();
  for (std::size_t l = 0; l < L; ++l) {
    LayerParams layer;
    layer.W = RealMatrix(dims[l + 1], dims[l]);
    for (std::size_t r = 0; r < dims[l + 1]; ++r) {
      const RealVector row = read_real_row(in, dims[l], line, line_no);
      for (std::size_t c = 0; c < dims[l]; ++c) layer.W(r, c) = row[c];
    }
    layer.b = read_real_row(in, dims[l + 1], line, line_no);
    layer.activation = (l + 1 == L && act_token == "linear")
                           ? Activation::kLinear
                           : Activation::kTanh;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

}  // namespace

NetworkParams load_network(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  NetworkParams params = load_network_block(in, line, line_no);
  if (next_line(in, line, line_no) && !line.empty()) {
    parse_fail("trailing content after the network block", line_no);
  }
  return params;
}

NetworkParams load_network(const std::string& path) {
  std::ifstream in = open_in(path);
  return load_network(in);
}

void save_model(std::ostream& out, const CalibrationModel& model) {
  if (model.nets.empty()) throw IoError("save_model: model has no networks");
  out << "# calinet-model mode="
      << (model.mode == NetworkMode::kPerUser ? "per_user" : "joint")
      << " M=" << model.M << " N=" << model.N << " nets=" << model.nets.size()
      << " target_scale=" << format_g17(model.target_scale) << '\n';
  for (const NetworkParams& net : model.nets) save_network(out, net);
}

void save_model(const std::string& path, const CalibrationModel& model) {
  std::ofstream out = open_out(path);
  save_model(out, model);
}

CalibrationModel load_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) parse_fail("empty model file", 1);
  const auto fields = parse_header(line, "# calinet-model", line_no);
  CalibrationModel model;
  const std::string mode_token = header_value(fields, "mode", line_no);
  if (mode_token == "per_user") {
    model.mode = NetworkMode::kPerUser;
  } else if (mode_token == "joint") {
    model.mode = NetworkMode::kJoint;
  } else {
    parse_fail("mode must be per_user or joint", line_no);
  }
  model.M = parse_size_token(header_value(fields, "M", line_no), line_no);
  model.N = parse_size_token(header_value(fields, "N", line_no), line_no);
  model.target_scale = parse_double_token(
      header_value(fields, "target_scale", line_no), line_no);
  const std::size_t nets =
      parse_size_token(header_value(fields, "nets", line_no), line_no);
  const std::size_t expect = model.mode == NetworkMode::kPerUser ? model.N : 1;
  if (nets != expect) {
    parse_fail("model declares " + std::to_string(nets) +
               " networks, expected " + std::to_string(expect), line_no);
  }
  if (!(model.target_scale > 0.0) || !std::isfinite(model.target_scale)) {
    parse_fail("target_scale must be positive and finite", line_no);
  }
  for (std::size_t k = 0; k < nets; ++k) {
    model.nets.push_back(load_network_block(in, line, line_no));
  }
  if (next_line(in, line, line_no) && !line.empty()) {
    parse_fail("trailing content after the last network", line_no);
  }
  return model;
}

CalibrationModel load_model(const std::string& path) {
  std::ifstream in = open_in(path);
  return load_model(in);
}

}  // namespace mimocal
