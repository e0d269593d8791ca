#include <doctest.h>

#include <string>
#include <vector>

#include "naas/workload.hpp"

using namespace naas;

namespace {

std::string data_path(const std::string& rel) { return std::string(NAAS_DATA_DIR) + "/" + rel; }

}  // namespace

TEST_CASE("dim names round-trip and accept prime spellings") {
  for (Dim d : kAllDims) CHECK(dim_from_name(dim_name(d)) == d);
  CHECK(dim_from_name("X'") == Dim::XP);
  CHECK(dim_from_name("Y'") == Dim::YP);
  CHECK_THROWS_AS(dim_from_name("Q"), ConfigError);
}

TEST_CASE("input sizes derive from output size, stride, and kernel") {
  ConvLayer l{"t", make_extents(4, 8, 3, 3, 8, 8), 2, 1};
  // (8-1)*2 + 3 = 17 on both axes.
  CHECK(l.in_w() == 17);
  CHECK(l.in_h() == 17);
  l.stride = 1;
  CHECK(l.in_w() == 10);
}

TEST_CASE("total_macs multiplies all extents and groups") {
  ConvLayer l{"t", make_extents(3, 64, 7, 7, 112, 112), 2, 1};
  CHECK(total_macs(l) == 118013952);  // ResNet-50 stem, worked by hand
  l.groups = 4;
  CHECK(total_macs(l) == 4 * 118013952ull);
}

TEST_CASE("shape_key ignores the name and captures everything else") {
  ConvLayer a{"alpha", make_extents(4, 8, 3, 3, 8, 8), 2, 1};
  ConvLayer b{"beta", make_extents(4, 8, 3, 3, 8, 8), 2, 1};
  CHECK(a.shape_key() == b.shape_key());
  b.stride = 1;
  CHECK(a.shape_key() != b.shape_key());
  b.stride = 2;
  b.groups = 2;
  CHECK(a.shape_key() != b.shape_key());
}

TEST_CASE("parse_network reads totals and divides channels by groups") {
  const char* text = R"({
    "name": "tiny",
    "layers": [
      {"name": "conv", "type": "conv", "C": 8, "K": 16, "R": 3, "S": 3, "Xp": 4, "Yp": 4},
      {"name": "dw", "type": "dwconv", "C": 8, "K": 8, "R": 3, "S": 3, "Xp": 4, "Yp": 4},
      {"name": "grp", "type": "conv", "C": 8, "K": 8, "R": 1, "S": 1, "Xp": 4, "Yp": 4,
       "groups": 2},
      {"name": "pool", "type": "maxpool", "C": 8, "K": 8}
    ]
  })";
  std::vector<std::string> warnings;
  Network net = parse_network(text, "inline", &warnings);
  REQUIRE(net.layers.size() == 3);

  CHECK(net.layers[0].extent[Dim::C] == 8);
  CHECK(net.layers[0].extent[Dim::K] == 16);
  CHECK(net.layers[0].groups == 1);
  CHECK(net.layers[0].stride == 1);  // default

  // Depthwise: groups default to the channel count, one channel per group.
  CHECK(net.layers[1].groups == 8);
  CHECK(net.layers[1].extent[Dim::C] == 1);
  CHECK(net.layers[1].extent[Dim::K] == 1);

  CHECK(net.layers[2].groups == 2);
  CHECK(net.layers[2].extent[Dim::C] == 4);
  CHECK(net.layers[2].extent[Dim::K] == 4);

  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("pool") != std::string::npos);
  CHECK(warnings[0].find("maxpool") != std::string::npos);
}

TEST_CASE("parse_network rejects malformed inputs with the offending locus") {
  CHECK_THROWS_AS(parse_network("not json", "f", nullptr), ConfigError);
  CHECK_THROWS_AS(parse_network(R"({"layers": []})", "f", nullptr), ConfigError);
  // All layers skipped -> empty network is an error, not a silent success.
  CHECK_THROWS_AS(
      parse_network(R"({"name": "x", "layers": [{"name": "p", "type": "pool"}]})", "f", nullptr),
      ConfigError);
  // Missing extent field names the layer.
  try {
    parse_network(R"({"name": "x", "layers": [{"name": "bad", "C": 4}]})", "f", nullptr);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
  // Channels not divisible by groups.
  CHECK_THROWS_AS(parse_network(R"({"name": "x", "layers": [
      {"name": "g", "C": 6, "K": 8, "R": 1, "S": 1, "Xp": 2, "Yp": 2, "groups": 4}]})",
                                "f", nullptr),
                  ConfigError);
}

TEST_CASE("serialize/parse round-trips a network exactly") {
  const char* text = R"({
    "name": "rt",
    "layers": [
      {"name": "a", "C": 16, "K": 32, "R": 3, "S": 3, "Xp": 7, "Yp": 7, "stride": 2},
      {"name": "b", "C": 32, "K": 32, "R": 3, "S": 3, "Xp": 7, "Yp": 7, "groups": 32}
    ]
  })";
  Network net = parse_network(text, "inline", nullptr);
  Network again = parse_network(serialize_network(net), "serialized", nullptr);
  CHECK(again == net);
}

TEST_CASE("bundled transcriptions load and match their published shapes") {
  Network resnet = load_network(data_path("networks/resnet50.json"));
  CHECK(resnet.layers.size() == 53);  // 49 convs + 4 projection shortcuts
  CHECK(resnet.layers[0].name == "conv1");
  CHECK(total_macs(resnet.layers[0]) == 118013952);

  u64 total = 0;
  for (const ConvLayer& l : resnet.layers) total += total_macs(l);
  CHECK(total > 4'000'000'000ull);  // ~4.09 GMACs
  CHECK(total < 4'200'000'000ull);

  CHECK(load_network(data_path("networks/vgg16.json")).layers.size() == 13);
  CHECK(load_network(data_path("networks/squeezenet.json")).layers.size() == 26);
  CHECK(load_network(data_path("networks/mobilenetv2.json")).layers.size() == 52);
  CHECK(load_network(data_path("networks/mnasnet.json")).layers.size() == 52);
  CHECK(load_network(data_path("networks/unet.json")).layers.size() == 23);

  // The smoke net is the test workload: three small layers, cheap to search.
  Network smoke = load_network(data_path("networks/smoke.json"));
  CHECK(smoke.layers.size() == 3);
  for (const ConvLayer& l : smoke.layers) CHECK(total_macs(l) < 10'000'000ull);
}

TEST_CASE("missing network file raises ConfigError naming the path") {
  try {
    load_network("/nonexistent/net.json");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/net.json") != std::string::npos);
  }
}
