#include "compsnn/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "compsnn/error.hpp"
#include "compsnn/io.hpp"

namespace compsnn {

using nlohmann::json;

namespace {

json encode(std::span<const double> values) {
  json arr = json::array();
  for (double v : values) arr.push_back(format_double(v));
  return arr;
}

std::vector<double> decode(const json& arr) {
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) out.push_back(parse_double(v.get<std::string>()));
  return out;
}

template <std::size_t N>
std::array<double, N> decode_array(const json& arr) {
  const auto v = decode(arr);
  if (v.size() != N) throw Error(ErrorCode::ParseError, "normalization array has the wrong length");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

json config_to_json(const CompSnnConfig& c) {
  return json{{"node_count", c.node_count},
              {"mlp_hidden", c.mlp_hidden},
              {"module_out", c.module_out},
              {"cnn_channels", c.cnn_channels},
              {"cnn_kernel", c.cnn_kernel},
              {"gcnn_filters", c.gcnn_filters},
              {"gcnn_degree", c.gcnn_degree},
              {"filter_hidden", c.filter_hidden},
              {"aggregator_hidden", c.aggregator_hidden},
              {"demographic_dim", c.demographic_dim},
              {"epsilon", encode(c.epsilon)}};
}

CompSnnConfig config_from_json(const json& doc) {
  CompSnnConfig c;
  c.node_count = doc.at("node_count").get<std::size_t>();
  c.mlp_hidden = doc.at("mlp_hidden").get<std::size_t>();
  c.module_out = doc.at("module_out").get<std::size_t>();
  c.cnn_channels = doc.at("cnn_channels").get<std::size_t>();
  c.cnn_kernel = doc.at("cnn_kernel").get<std::size_t>();
  c.gcnn_filters = doc.at("gcnn_filters").get<std::size_t>();
  c.gcnn_degree = doc.at("gcnn_degree").get<std::size_t>();
  c.filter_hidden = doc.at("filter_hidden").get<std::size_t>();
  c.aggregator_hidden = doc.at("aggregator_hidden").get<std::size_t>();
  c.demographic_dim = doc.at("demographic_dim").get<std::size_t>();
  c.epsilon = decode(doc.at("epsilon"));
  return c;
}

json checkpoint_to_json(const ModelParams& model) {
  json params = json::object();
  for (const auto& [name, p] : model.params) {
    params[name] = json{{"shape", p.value.shape()}, {"values", encode(p.value.values())}};
  }
  const InputNormalization& n = model.normalization;
  return json{{"kind", std::string(to_string(model.kind))},
              {"config", config_to_json(model.config)},
              {"seed", model.seed},
              {"epoch", model.epoch},
              {"normalization",
               {{"feature_mean", encode(n.feature_mean)},
                {"feature_scale", encode(n.feature_scale)},
                {"node_scale", encode(n.node_scale)},
                {"visit_scale", format_double(n.visit_scale)}}},
              {"params", std::move(params)}};
}

ModelParams checkpoint_from_json(const json& doc) {
  try {
    ModelParams m;
    m.kind = parse_model_kind(doc.at("kind").get<std::string>());
    m.config = config_from_json(doc.at("config"));
    m.config.validate();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.epoch = doc.at("epoch").get<std::size_t>();
    const json& n = doc.at("normalization");
    m.normalization.feature_mean = decode_array<kFeatureChannels>(n.at("feature_mean"));
    m.normalization.feature_scale = decode_array<kFeatureChannels>(n.at("feature_scale"));
    m.normalization.node_scale = decode_array<kNodeChannels>(n.at("node_scale"));
    m.normalization.visit_scale = parse_double(n.at("visit_scale").get<std::string>());

    // Shapes must agree with a freshly initialised model of the same kind.
    const ModelParams reference = init_model(m.kind, m.config, m.seed);
    const json& params = doc.at("params");
    if (params.size() != reference.params.size()) {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint parameter set does not match the model kind");
    }
    for (const auto& [name, ref] : reference.params) {
      const json& entry = params.at(name);
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape != ref.value.shape()) throw Error(ErrorCode::ShapeMismatch, "checkpoint shape mismatch for " + name);
      m.params.add(name, nn::Tensor(shape, decode(entry.at("values"))));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << checkpoint_to_json(model).dump(1) << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace compsnn
