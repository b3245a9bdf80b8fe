#include "netdemix/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "netdemix/baselines.hpp"
#include "netdemix/errors.hpp"

namespace netdemix {

namespace {

constexpr char kMagic[8] = {'N', 'D', 'M', 'X', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                     char((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw IoError("checkpoint truncated");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

void write_array(std::ostream& out, const std::string& name, const Matrix& m) {
  put_u32(out, std::uint32_t(name.size()));
  out.write(name.data(), std::streamsize(name.size()));
  put_u32(out, std::uint32_t(m.rows()));
  put_u32(out, std::uint32_t(m.cols()));
  for (Index k = 0; k < m.size(); ++k) put_u32(out, std::bit_cast<std::uint32_t>(float(m(k))));
}

}  // namespace

nlohmann::json save_checkpoint(const Model& model, const std::filesystem::path& dir,
                               const nlohmann::json& extra) {
  std::filesystem::create_directories(dir);
  const auto& store = model.params();
  {
    std::ofstream out(dir / "params.bin", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "params.bin").string());
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, kCheckpointFormatVersion);
    const auto names = store.names();
    const auto buffers = store.buffer_names();
    put_u32(out, std::uint32_t(names.size() + buffers.size()));
    for (const auto& n : names) write_array(out, n, store.value(n));
    for (const auto& n : buffers) write_array(out, n, store.buffer(n));
  }
  nlohmann::json manifest = model.describe();
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["parameters"] = store.names();
  manifest["buffers"] = store.buffer_names();
  manifest["num_scalars"] = store.num_scalars();
  manifest["params_digest"] = file_digest(dir / "params.bin");
  for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
  std::ofstream m(dir / "manifest.json");
  if (!m) throw IoError("cannot write " + (dir / "manifest.json").string());
  m << manifest.dump(2) << '\n';
  return manifest;
}

std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw IoError("cannot read " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad checkpoint manifest: ") + e.what());
  }
  if (manifest.value("format_version", 0) != kCheckpointFormatVersion)
    throw IoError("unsupported checkpoint format version");

  ModelConfig cfg;
  cfg.kind = parse_model_kind(manifest.at("model_type").get<std::string>());
  cfg.T = manifest.at("T").get<std::size_t>();
  cfg.num_nodes = manifest.at("num_nodes").get<std::size_t>();
  cfg.seed = manifest.at("seed").get<std::uint64_t>();
  if (manifest.contains("loss_weights")) {
    const auto& w = manifest["loss_weights"];
    cfg.weights = {w.at("eta1"), w.at("eta2"), w.at("eta3"), w.at("sigma_y_sq")};
  }
  if (manifest.contains("pool_connectivity"))
    cfg.pool = parse_pool_connectivity(manifest["pool_connectivity"].get<std::string>());

  std::unique_ptr<Model> model;
  if (cfg.kind == ModelKind::CNNTime && manifest.contains("plan")) {
    std::vector<TransposedBlockSpec> plan;
    for (const auto& b : manifest["plan"])
      plan.push_back({b.at("in_channels"), b.at("out_channels"), b.at("kernel_size"), b.at("stride"),
                      b.at("padding")});
    model = std::make_unique<CNNTimeBaseline>(cfg, std::move(plan));
  } else {
    model = make_model(cfg);
  }

  std::ifstream in(dir / "params.bin", std::ios::binary);
  if (!in) throw IoError("cannot read " + (dir / "params.bin").string());
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) throw IoError("not a checkpoint container");
  if (get_u32(in) != std::uint32_t(kCheckpointFormatVersion))
    throw IoError("unsupported checkpoint container version");
  const std::uint32_t count = get_u32(in);
  auto& store = model->params();
  std::size_t loaded = 0;
  for (std::uint32_t e = 0; e < count; ++e) {
    std::string name(get_u32(in), '\0');
    in.read(name.data(), std::streamsize(name.size()));
    const Index rows = get_u32(in), cols = get_u32(in);
    Matrix& target = store.contains(name) ? store.value(name) : store.buffer(name);
    if (target.rows() != rows || target.cols() != cols)
      throw IoError("checkpoint array '" + name + "' has unexpected shape");
    for (Index k = 0; k < target.size(); ++k) target(k) = double(std::bit_cast<float>(get_u32(in)));
    ++loaded;
  }
  if (loaded != store.names().size() + store.buffer_names().size())
    throw IoError("checkpoint does not cover every model array");
  return model;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) h = (h ^ std::uint8_t(buf[k])) * 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace netdemix
