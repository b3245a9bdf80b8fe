#include "netdemix/dataset_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "netdemix/errors.hpp"

namespace netdemix {

using nlohmann::json;

namespace {

constexpr std::array<char, 16> kMagic = {'N', 'E', 'T', 'D', 'E', 'M', 'I', 'X',
                                         '-', 'D', 'S', 0,   0,   0,   0,   0};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                     char((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = char((bits >> (8 * k)) & 0xff);
  out.write(b, 8);
}

void read_exact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, std::streamsize(n));
  if (std::size_t(in.gcount()) != n) throw IoError("dataset container truncated");
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= std::uint64_t(b[k]) << (8 * k);
  return std::bit_cast<double>(bits);
}

void check_uniform_shape(std::span<const Sample> samples, std::size_t& n, std::size_t& T) {
  if (samples.empty()) throw InvalidArgument("dataset is empty");
  n = samples.front().traj.num_nodes();
  T = samples.front().traj.T;
  for (const auto& s : samples)
    if (s.traj.num_nodes() != n || s.traj.T != T || std::size_t(s.obs.x.size()) != n)
      throw DimensionError("all samples of a container must share N and T");
}

}  // namespace

void write_dataset_jsonl(std::span<const Sample> samples, std::ostream& out) {
  for (const auto& s : samples) {
    json j;
    j["graph_id"] = s.traj.graph_id;
    j["T"] = s.traj.T;
    j["x"] = std::vector<double>(s.obs.x.data(), s.obs.x.data() + s.obs.x.size());
    json rows = json::array();
    for (Index i = 0; i < s.traj.Y.rows(); ++i) {
      std::vector<int> row(std::size_t(s.traj.Y.cols()));
      for (Index t = 0; t < s.traj.Y.cols(); ++t) row[std::size_t(t)] = s.traj.Y(i, t) != 0.0;
      rows.push_back(std::move(row));
    }
    j["Y"] = std::move(rows);
    j["source"] = s.source;
    j["seed"] = s.seed;
    out << j.dump() << '\n';
  }
}

std::vector<Sample> read_dataset_jsonl(std::istream& in) {
  std::vector<Sample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      const json j = json::parse(line);
      Sample s;
      s.traj.graph_id = j.at("graph_id").get<std::string>();
      s.traj.T = j.at("T").get<std::size_t>();
      const auto x = j.at("x").get<std::vector<double>>();
      const auto rows = j.at("Y").get<std::vector<std::vector<int>>>();
      if (rows.size() != x.size()) throw ParseError("x and Y disagree on N", lineno);
      s.traj.Y = Matrix::Zero(Index(rows.size()), Index(s.traj.T));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != s.traj.T) throw ParseError("Y row length differs from T", lineno);
        for (std::size_t t = 0; t < s.traj.T; ++t) {
          if (rows[i][t] != 0 && rows[i][t] != 1) throw ParseError("Y entries must be 0/1", lineno);
          s.traj.Y(Index(i), Index(t)) = rows[i][t];
        }
      }
      s.obs.x = Eigen::Map<const Vector>(x.data(), Index(x.size()));
      s.obs.T = s.traj.T;
      s.source = j.at("source").get<std::vector<NodeId>>();
      s.seed = j.at("seed").get<std::uint64_t>();
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

void write_dataset_binary(std::span<const Sample> samples, std::ostream& out) {
  std::size_t n = 0, T = 0;
  check_uniform_shape(samples, n, T);
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, std::uint32_t(n));
  put_u32(out, std::uint32_t(T));
  put_u32(out, std::uint32_t(samples.size()));
  std::vector<char> bits((n * T + 7) / 8);
  for (const auto& s : samples) {
    for (Index i = 0; i < Index(n); ++i) put_f64(out, s.obs.x(i));
    std::fill(bits.begin(), bits.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < T; ++t)
        if (s.traj.Y(Index(i), Index(t)) != 0.0) {
          const std::size_t k = i * T + t;
          bits[k / 8] = char(bits[k / 8] | (1 << (k % 8)));
        }
    out.write(bits.data(), std::streamsize(bits.size()));
    put_u32(out, std::uint32_t(s.source.size()));
    for (NodeId v : s.source) put_u32(out, std::uint32_t(v));
  }
}

std::vector<Sample> read_dataset_binary(std::istream& in) {
  std::array<char, 16> magic{};
  read_exact(in, magic.data(), magic.size());
  if (magic != kMagic) throw IoError("not a NETDEMIX-DS container");
  const std::size_t n = get_u32(in);
  const std::size_t T = get_u32(in);
  const std::size_t M = get_u32(in);
  std::vector<Sample> out;
  out.reserve(M);
  std::vector<char> bits((n * T + 7) / 8);
  for (std::size_t m = 0; m < M; ++m) {
    Sample s;
    s.obs.T = s.traj.T = T;
    s.obs.x.resize(Index(n));
    for (Index i = 0; i < Index(n); ++i) s.obs.x(i) = get_f64(in);
    read_exact(in, bits.data(), bits.size());
    s.traj.Y = Matrix::Zero(Index(n), Index(T));
    for (std::size_t k = 0; k < n * T; ++k)
      if ((bits[k / 8] >> (k % 8)) & 1) s.traj.Y(Index(k / T), Index(k % T)) = 1.0;
    const std::size_t len = get_u32(in);
    for (std::size_t k = 0; k < len; ++k) s.source.push_back(get_u32(in));
    out.push_back(std::move(s));
  }
  return out;
}

void save_dataset(std::span<const Sample> samples, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (path.extension() == ".bin")
    write_dataset_binary(samples, out);
  else
    write_dataset_jsonl(samples, out);
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return path.extension() == ".bin" ? read_dataset_binary(in) : read_dataset_jsonl(in);
}

}  // namespace netdemix
