#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "netdemix/checkpoint.hpp"
#include "netdemix/dataset_io.hpp"
#include "netdemix/errors.hpp"
#include "netdemix/graph_io.hpp"

using namespace netdemix;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("netdemix_test_io_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(GraphIo, EdgeListFormat) {
  Graph g(3, {{2, 1}, {0, 1}});
  std::ostringstream out;
  write_edge_list(g, out);
  EXPECT_EQ(out.str(), "i,j\n0,1\n1,2\n");
}

TEST(GraphIo, RoundTripWithCoordinates) {
  Graph g = random_geometric_graph({30, 0.4, 3, 5});
  const fs::path dir = scratch("rgg");
  save_graph(g, dir);
  Graph back = load_graph(dir);
  EXPECT_EQ(back.num_nodes(), g.num_nodes());
  EXPECT_EQ(back.edges(), g.edges());
  ASSERT_TRUE(back.coordinates());
  EXPECT_EQ(*back.coordinates(), *g.coordinates());
}

TEST(GraphIo, RoundTripWithClasses) {
  GraphAttributes attrs;
  attrs.node_classes = std::vector<std::string>{"1A", "1A", "2B", "5"};
  Graph g(4, {{0, 1}, {2, 3}}, attrs);
  std::ostringstream edges, nodes;
  write_edge_list(g, edges);
  write_node_metadata(g, nodes);
  EXPECT_EQ(nodes.str(), "node,class,x,y,z\n0,1A,,,\n1,1A,,,\n2,2B,,,\n3,5,,,\n");
  std::istringstream ein(edges.str()), nin(nodes.str());
  Graph back = read_graph(ein, nin, "x");
  EXPECT_EQ(back.edges(), g.edges());
  EXPECT_EQ(*back.node_classes(), *g.node_classes());
  EXPECT_FALSE(back.coordinates());
}

TEST(GraphIo, MalformedEdgeLine) {
  std::istringstream edges("i,j\n0,1\n1;2\n"), nodes("node,class,x,y,z\n0,,,,\n1,,,,\n2,,,,\n");
  EXPECT_THROW(read_graph(edges, nodes), ParseError);
}

TEST(GraphIo, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 0.25, 123456.789}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(0.25), "0.25");
}

class DatasetIo : public ::testing::Test {
 protected:
  void SetUp() override {
    Graph g = random_geometric_graph({23, 0.4, 3, 3});
    SourceRule rule;
    rule.count = 2;
    data = generate_dataset(g, {}, 13, 9, rule, 17);
  }
  void expect_same(const std::vector<Sample>& back) const {
    ASSERT_EQ(back.size(), data.size());
    for (std::size_t m = 0; m < data.size(); ++m) {
      EXPECT_EQ(back[m].obs.x, data[m].obs.x);
      EXPECT_EQ(back[m].obs.T, data[m].obs.T);
      EXPECT_EQ(back[m].traj.Y, data[m].traj.Y);
      EXPECT_EQ(back[m].source, data[m].source);
    }
  }
  std::vector<Sample> data;
};

TEST_F(DatasetIo, JsonLinesRoundTrip) {
  std::stringstream buf;
  write_dataset_jsonl(data, buf);
  auto back = read_dataset_jsonl(buf);
  expect_same(back);
  for (std::size_t m = 0; m < data.size(); ++m) {
    EXPECT_EQ(back[m].seed, data[m].seed);
    EXPECT_EQ(back[m].traj.graph_id, data[m].traj.graph_id);
  }
}

TEST_F(DatasetIo, BinaryRoundTrip) {
  std::stringstream buf;
  write_dataset_binary(data, buf);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 16), std::string("NETDEMIX-DS\0\0\0\0\0", 16));
  auto back = read_dataset_binary(buf);
  expect_same(back);
}

TEST_F(DatasetIo, FileDispatch) {
  const fs::path dir = scratch("ds");
  fs::create_directories(dir);
  save_dataset(data, dir / "d.bin");
  save_dataset(data, dir / "d.jsonl");
  expect_same(load_dataset(dir / "d.bin"));
  expect_same(load_dataset(dir / "d.jsonl"));
}

TEST(DatasetIoErrors, BadMagicAndBadJson) {
  std::stringstream bin("NOT-A-DATASET...........");
  EXPECT_THROW(read_dataset_binary(bin), IoError);
  std::stringstream js("{\"x\": [0.5]}\nnot json\n");
  EXPECT_THROW(read_dataset_jsonl(js), ParseError);
}

TEST(Checkpoint, RoundTripsEveryModel) {
  for (ModelKind kind : {ModelKind::DDmix, ModelKind::MLP, ModelKind::CNNNodes, ModelKind::CNNTime}) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.num_nodes = 12;
    cfg.T = 8;
    cfg.seed = 4;
    auto model = make_model(cfg);
    const fs::path dir = scratch("ckpt_" + to_string(kind));
    const auto manifest = save_checkpoint(*model, dir, {{"note", "test"}});
    EXPECT_EQ(manifest["model_type"], model_type_name(kind));
    EXPECT_EQ(manifest["T"], 8);
    EXPECT_EQ(manifest["format_version"], kCheckpointFormatVersion);
    EXPECT_EQ(manifest["note"], "test");

    auto back = load_checkpoint(dir);
    EXPECT_EQ(back->kind(), kind);
    EXPECT_EQ(back->horizon(), 8u);
    for (const auto& name : model->params().names()) {
      const Matrix expected = model->params().value(name).cast<float>().cast<double>();
      ASSERT_EQ(back->params().value(name), expected) << name;
    }
    EXPECT_EQ(file_digest(dir / "params.bin"), manifest["params_digest"]);
  }
}

TEST(Checkpoint, MissingDirectoryIsAnIoError) {
  EXPECT_THROW(load_checkpoint(scratch("missing")), IoError);
}
