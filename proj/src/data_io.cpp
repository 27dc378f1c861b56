#include "ssperm/data_io.hpp"

#include <fstream>
#include <sstream>

#include "ssperm/wire.hpp"

namespace ssperm {

static std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
      cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DecodeError("csv: missing header");
  auto header = split_csv_line(line);
  std::vector<bool> is_label(header.size(), false);
  size_t labels = 0;
  for (size_t i = 0; i < header.size(); i++) {
    if (header[i].rfind("label", 0) == 0) {
      is_label[i] = true;
      labels++;
    }
  }
  if (labels == 0) throw DecodeError("csv: no label column");
  Dataset ds;
  ds.d = header.size() - labels;
  ds.out_dim = labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DecodeError("csv: ragged row in " + path);
    for (size_t i = 0; i < cells.size(); i++) {
      double v = std::stod(cells[i]);
      (is_label[i] ? ds.y : ds.x).push_back(v);
    }
    ds.n++;
  }
  return ds;
}

void save_double_tensor(const std::string& path, const std::vector<u64>& shape,
                        const std::vector<double>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write tensor: " + path);
  u8 ndim = static_cast<u8>(shape.size());
  out.write(reinterpret_cast<const char*>(&ndim), 1);
  std::vector<u8> buf;
  for (u64 d : shape) put_u64_le(buf, d);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  for (double v : data) {
    u64 bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 8);
    u8 b[8];
    for (int i = 0; i < 8; i++) b[i] = static_cast<u8>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
}

std::pair<std::vector<u64>, std::vector<double>> load_double_tensor(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open tensor: " + path);
  u8 ndim = 0;
  in.read(reinterpret_cast<char*>(&ndim), 1);
  if (!in) throw DecodeError("tensor: truncated header");
  std::vector<u64> shape(ndim);
  u64 count = 1;
  for (int i = 0; i < ndim; i++) {
    u8 b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw DecodeError("tensor: truncated dims");
    shape[i] = get_u64_le(b);
    count *= shape[i];
  }
  std::vector<double> data(count);
  for (u64 i = 0; i < count; i++) {
    u8 b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw DecodeError("tensor: truncated elements");
    u64 bits = get_u64_le(b);
    std::memcpy(&data[i], &bits, 8);
  }
  return {std::move(shape), std::move(data)};
}

SampleMatrix sample_matrix_from_csv(const std::string& path) {
  Dataset ds = load_csv_dataset(path);
  SampleMatrix m(ds.n, ds.d);
  m.rows = ds.x;
  return m;
}

SampleMatrix sample_matrix_from_tensor(const std::string& path) {
  auto [shape, data] = load_double_tensor(path);
  if (shape.size() != 2) throw DecodeError("sample matrix must be 2-d");
  SampleMatrix m(shape[0], shape[1]);
  m.rows = std::move(data);
  return m;
}

void save_checkpoint(const std::string& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  std::vector<u8> buf;
  for (const auto& layer : net.layers) {
    append_tensor_block(buf, layer.weight.shape, layer.weight.vals());
    append_tensor_block(buf, layer.bias.shape, layer.bias.vals());
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
}

std::vector<std::pair<std::vector<u64>, std::vector<u64>>> load_checkpoint(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  std::vector<u8> buf((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  std::vector<std::pair<std::vector<u64>, std::vector<u64>>> out;
  size_t pos = 0;
  while (pos < buf.size()) {
    TensorBlock tb = read_tensor_block(buf, pos);
    out.emplace_back(std::move(tb.shape), std::move(tb.elems));
  }
  return out;
}

}  // namespace ssperm
