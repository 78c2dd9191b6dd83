#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include "kflow/generators.hpp"
#include "kflow/io.hpp"

namespace kflow {

namespace {

constexpr const char* kMagic = "kflow-checkpoint 1";

void put_le(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(bytes, 8);
}

double get_le(std::istream& is) {
  unsigned char bytes[8];
  is.read(reinterpret_cast<char*>(bytes), 8);
  if (!is) throw NumericError("read_checkpoint: truncated parameter block");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Generator& g) {
  std::ostringstream body(std::ios::binary);
  body << kMagic << "\n";
  if (g.is_linear()) {
    body << "kind linear\n";
  } else {
    body << "kind mlp " << std::get<MlpGenerator>(g.net()).slope << "\n";
  }
  body << g.layout().describe() << "end\n";
  const Vector theta = g.params();
  for (Eigen::Index i = 0; i < theta.size(); ++i) put_le(body, theta(i));

  write_file_atomic(path, body.str());
}

Generator read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericError("read_checkpoint: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw NumericError("read_checkpoint: bad header");
  if (!std::getline(in, line)) throw NumericError("read_checkpoint: missing kind line");
  std::istringstream kind_line(line);
  std::string tag, kind;
  double slope = 0.2;
  kind_line >> tag >> kind;
  if (tag != "kind" || (kind != "linear" && kind != "mlp")) throw NumericError("read_checkpoint: bad kind line");
  if (kind == "mlp" && !(kind_line >> slope)) throw NumericError("read_checkpoint: missing slope");

  std::vector<ParamSlice> slices;
  while (std::getline(in, line) && line != "end") {
    std::istringstream ls(line);
    ParamSlice s;
    if (!(ls >> s.name >> s.rows >> s.cols >> s.offset)) throw NumericError("read_checkpoint: bad layout line");
    slices.push_back(s);
  }
  if (line != "end") throw NumericError("read_checkpoint: missing end marker");
  if (slices.empty() || slices.size() % 2 != 0) throw NumericError("read_checkpoint: bad layout");

  std::optional<Generator> g;
  if (kind == "linear") {
    if (slices.size() != 2) throw NumericError("read_checkpoint: linear layout must have 2 blocks");
    g.emplace(LinearGenerator{Matrix::Zero(slices[0].rows, slices[0].cols), Vector::Zero(slices[1].rows)});
  } else {
    MlpGenerator m;
    m.slope = slope;
    for (std::size_t l = 0; l < slices.size(); l += 2) {
      m.weights.push_back(Matrix::Zero(slices[l].rows, slices[l].cols));
      m.biases.push_back(Vector::Zero(slices[l + 1].rows));
    }
    g.emplace(std::move(m));
  }
  const ParamLayout lay = g->layout();
  if (lay.slices.size() != slices.size()) throw NumericError("read_checkpoint: layout mismatch");
  for (std::size_t i = 0; i < slices.size(); ++i)
    if (lay.slices[i].rows != slices[i].rows || lay.slices[i].cols != slices[i].cols ||
        lay.slices[i].offset != slices[i].offset)
      throw NumericError("read_checkpoint: layout mismatch in block " + slices[i].name);
  Vector theta(lay.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = get_le(in);
  g->set_params(theta);
  return std::move(*g);
}

}  // namespace kflow
