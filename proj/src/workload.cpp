#include "naas/workload.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace naas {

using nlohmann::json;

const char* dim_name(Dim d) {
  switch (d) {
    case Dim::C:  return "C";
    case Dim::K:  return "K";
    case Dim::R:  return "R";
    case Dim::S:  return "S";
    case Dim::XP: return "Xp";
    case Dim::YP: return "Yp";
  }
  return "?";
}

Dim dim_from_name(const std::string& name) {
  for (Dim d : kAllDims)
    if (name == dim_name(d)) return d;
  // Accept the prime spellings used in prose.
  if (name == "X'") return Dim::XP;
  if (name == "Y'") return Dim::YP;
  throw ConfigError("unknown dimension name '" + name + "'");
}

std::string ConvLayer::shape_key() const {
  std::ostringstream os;
  for (Dim d : kAllDims) os << extent[d] << 'x';
  os << 's' << stride << 'g' << groups;
  return os.str();
}

u64 total_macs(const ConvLayer& layer) {
  u64 p = layer.groups;
  for (Dim d : kAllDims) p *= layer.extent[d];
  return p;
}

void validate_network(const Network& net, const std::string& origin) {
  if (net.layers.empty())
    throw ConfigError(origin + ": network '" + net.name + "' has no convolution layers");
  for (const ConvLayer& l : net.layers) {
    for (Dim d : kAllDims) {
      if (l.extent[d] < 1)
        throw ConfigError(origin + ": layer '" + l.name + "' field " + dim_name(d) +
                          " must be >= 1");
    }
    if (l.stride < 1)
      throw ConfigError(origin + ": layer '" + l.name + "' field stride must be >= 1");
    if (l.groups < 1)
      throw ConfigError(origin + ": layer '" + l.name + "' field groups must be >= 1");
  }
}

namespace {

u64 get_count(const json& j, const std::string& layer, const char* field,
              const std::string& origin) {
  if (!j.contains(field))
    throw ConfigError(origin + ": layer '" + layer + "' missing field " + field);
  const json& v = j.at(field);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw ConfigError(origin + ": layer '" + layer + "' field " + std::string(field) +
                      " must be a non-negative integer");
  return v.get<u64>();
}

}  // namespace

Network parse_network(const std::string& text, const std::string& origin,
                      std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": parse error: " + e.what());
  }
  Network net;
  if (!doc.contains("name") || !doc["name"].is_string())
    throw ConfigError(origin + ": missing string field 'name'");
  net.name = doc["name"].get<std::string>();
  if (!doc.contains("layers") || !doc["layers"].is_array())
    throw ConfigError(origin + ": missing array field 'layers'");

  for (const json& jl : doc["layers"]) {
    std::string lname = jl.value("name", std::string("<unnamed>"));
    std::string type = jl.value("type", std::string("conv"));
    if (type != "conv" && type != "dwconv") {
      if (warnings)
        warnings->push_back(origin + ": skipping non-convolution layer '" + lname +
                            "' of type '" + type + "'");
      continue;
    }
    ConvLayer l;
    l.name = lname;
    u64 c = get_count(jl, lname, "C", origin);
    u64 k = get_count(jl, lname, "K", origin);
    l.extent[Dim::R] = get_count(jl, lname, "R", origin);
    l.extent[Dim::S] = get_count(jl, lname, "S", origin);
    l.extent[Dim::XP] = get_count(jl, lname, "Xp", origin);
    l.extent[Dim::YP] = get_count(jl, lname, "Yp", origin);
    l.stride = jl.contains("stride") ? get_count(jl, lname, "stride", origin) : 1;
    u64 groups = jl.contains("groups") ? get_count(jl, lname, "groups", origin)
                 : (type == "dwconv" ? c : 1);
    if (groups < 1)
      throw ConfigError(origin + ": layer '" + lname + "' field groups must be >= 1");
    if (c % groups != 0 || k % groups != 0)
      throw ConfigError(origin + ": layer '" + lname +
                        "' channels C/K must be divisible by groups");
    l.groups = groups;
    l.extent[Dim::C] = c / groups;
    l.extent[Dim::K] = k / groups;
    net.layers.push_back(std::move(l));
  }
  validate_network(net, origin);
  return net;
}

Network load_network(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open network file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str(), path, warnings);
}

std::string serialize_network(const Network& net) {
  json doc;
  doc["name"] = net.name;
  json layers = json::array();
  for (const ConvLayer& l : net.layers) {
    json jl;
    jl["name"] = l.name;
    jl["type"] = "conv";
    jl["C"] = l.extent[Dim::C] * l.groups;
    jl["K"] = l.extent[Dim::K] * l.groups;
    jl["R"] = l.extent[Dim::R];
    jl["S"] = l.extent[Dim::S];
    jl["Xp"] = l.extent[Dim::XP];
    jl["Yp"] = l.extent[Dim::YP];
    jl["stride"] = l.stride;
    jl["groups"] = l.groups;
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

}  // namespace naas
