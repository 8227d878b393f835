#include "rararl/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace rararl {

namespace {

using nlohmann::json;

json doubles_to_json(const std::vector<double>& xs) {
  json arr = json::array();
  for (double x : xs) arr.push_back(hex_double(x));
  return arr;
}

std::vector<double> doubles_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw CheckpointError(std::string(what) + ": expected an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& item : arr) {
    if (!item.is_string()) throw CheckpointError(std::string(what) + ": expected hex-float strings");
    const double v = parse_hex_double(item.get<std::string>());
    if (!std::isfinite(v)) throw CheckpointError(std::string(what) + ": non-finite value");
    out.push_back(v);
  }
  return out;
}

json nested_to_json(const std::vector<std::vector<double>>& xss) {
  json arr = json::array();
  for (const auto& xs : xss) arr.push_back(doubles_to_json(xs));
  return arr;
}

std::vector<std::vector<double>> nested_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw CheckpointError(std::string(what) + ": expected an array");
  std::vector<std::vector<double>> out;
  out.reserve(arr.size());
  for (const auto& item : arr) out.push_back(doubles_from_json(item, what));
  return out;
}

json net_to_json(const DenseNet& net) {
  json j;
  j["layer_dims"] = net.layer_dims;
  j["weights"] = nested_to_json(net.weights);
  j["biases"] = nested_to_json(net.biases);
  return j;
}

DenseNet net_from_json(const json& j, const char* what) {
  DenseNet net;
  if (!j.contains("layer_dims") || !j.contains("weights") || !j.contains("biases"))
    throw CheckpointError(std::string(what) + ": missing layer_dims/weights/biases");
  net.layer_dims = j.at("layer_dims").get<std::vector<int>>();
  net.weights = nested_from_json(j.at("weights"), what);
  net.biases = nested_from_json(j.at("biases"), what);
  if (net.layer_dims.size() < 2)
    throw CheckpointError(std::string(what) + ": needs at least two layer dims");
  const std::size_t layers = net.layer_dims.size() - 1;
  if (net.weights.size() != layers || net.biases.size() != layers)
    throw CheckpointError(std::string(what) + ": layer count mismatch");
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = static_cast<std::size_t>(net.layer_dims[l + 1]);
    const std::size_t cols = static_cast<std::size_t>(net.layer_dims[l]);
    if (net.weights[l].size() != rows * cols || net.biases[l].size() != rows)
      throw CheckpointError(std::string(what) + ": shape mismatch in layer " + std::to_string(l));
  }
  return net;
}

json adam_to_json(const AdamState& st) {
  json j;
  j["step"] = st.step;
  j["beta1"] = hex_double(st.beta1);
  j["beta2"] = hex_double(st.beta2);
  j["epsilon"] = hex_double(st.epsilon);
  j["m_weights"] = nested_to_json(st.m_weights);
  j["v_weights"] = nested_to_json(st.v_weights);
  j["m_biases"] = nested_to_json(st.m_biases);
  j["v_biases"] = nested_to_json(st.v_biases);
  return j;
}

AdamState adam_from_json(const json& j, const DenseNet& net, const char* what) {
  AdamState st;
  st.step = j.at("step").get<long>();
  st.beta1 = parse_hex_double(j.at("beta1").get<std::string>());
  st.beta2 = parse_hex_double(j.at("beta2").get<std::string>());
  st.epsilon = parse_hex_double(j.at("epsilon").get<std::string>());
  st.m_weights = nested_from_json(j.at("m_weights"), what);
  st.v_weights = nested_from_json(j.at("v_weights"), what);
  st.m_biases = nested_from_json(j.at("m_biases"), what);
  st.v_biases = nested_from_json(j.at("v_biases"), what);
  const std::size_t layers = net.layer_dims.size() - 1;
  if (st.m_weights.size() != layers || st.v_weights.size() != layers ||
      st.m_biases.size() != layers || st.v_biases.size() != layers)
    throw CheckpointError(std::string(what) + ": optimizer layer count mismatch");
  for (std::size_t l = 0; l < layers; ++l) {
    if (st.m_weights[l].size() != net.weights[l].size() ||
        st.v_weights[l].size() != net.weights[l].size() ||
        st.m_biases[l].size() != net.biases[l].size() ||
        st.v_biases[l].size() != net.biases[l].size())
      throw CheckpointError(std::string(what) + ": optimizer shape mismatch in layer " +
                            std::to_string(l));
  }
  return st;
}

json ensemble_to_json(const EnsembleQNetwork& net) {
  json j;
  j["k"] = net.head_count();
  j["trunk"] = net_to_json(net.trunk);
  json heads = json::array();
  for (const auto& h : net.heads) heads.push_back(net_to_json(h));
  j["heads"] = heads;
  return j;
}

EnsembleQNetwork ensemble_from_json(const json& j, const char* what) {
  EnsembleQNetwork net;
  net.trunk = net_from_json(j.at("trunk"), what);
  const json& heads = j.at("heads");
  if (!heads.is_array() || heads.empty())
    throw CheckpointError(std::string(what) + ": needs at least one head");
  for (const auto& h : heads) net.heads.push_back(net_from_json(h, what));
  const int k = j.at("k").get<int>();
  if (k != net.head_count())
    throw CheckpointError(std::string(what) + ": declared k does not match head array");
  for (const auto& h : net.heads) {
    if (h.input_dim() != net.trunk.output_dim())
      throw CheckpointError(std::string(what) + ": head input does not match trunk output");
    if (h.output_dim() != net.heads.front().output_dim())
      throw CheckpointError(std::string(what) + ": heads disagree on action count");
  }
  return net;
}

json bundle_to_json(const AgentBundle& b) {
  json j;
  j["k"] = b.online.head_count();
  j["online"] = ensemble_to_json(b.online);
  j["target"] = ensemble_to_json(b.target);
  json adam;
  adam["trunk"] = adam_to_json(b.opt.trunk);
  json heads = json::array();
  for (const auto& h : b.opt.heads) heads.push_back(adam_to_json(h));
  adam["heads"] = heads;
  j["adam"] = adam;
  return j;
}

AgentBundle bundle_from_json(const json& j, const char* what) {
  AgentBundle b;
  b.online = ensemble_from_json(j.at("online"), what);
  b.target = ensemble_from_json(j.at("target"), what);
  if (b.target.head_count() != b.online.head_count() ||
      b.target.parameter_count() != b.online.parameter_count())
    throw CheckpointError(std::string(what) + ": online/target shape mismatch");
  const json& adam = j.at("adam");
  b.opt.trunk = adam_from_json(adam.at("trunk"), b.online.trunk, what);
  const json& heads = adam.at("heads");
  if (!heads.is_array() || heads.size() != b.online.heads.size())
    throw CheckpointError(std::string(what) + ": optimizer head count mismatch");
  for (std::size_t i = 0; i < heads.size(); ++i)
    b.opt.heads.push_back(adam_from_json(heads[i], b.online.heads[i], what));
  return b;
}

}  // namespace

std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return std::string(buf);
}

double parse_hex_double(const std::string& s) {
  if (s.empty()) throw CheckpointError("empty hex-float string");
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size())
    throw CheckpointError("malformed hex-float string: '" + s + "'");
  return v;
}

std::string checkpoint_to_json(const Checkpoint& ck) {
  json j;
  j["format_version"] = ck.format_version;
  j["variant"] = ck.variant;
  j["config_digest"] = ck.config_digest;
  j["step"] = ck.step;
  j["lambda_p"] = hex_double(ck.lambda_p);
  j["lambda_a"] = hex_double(ck.lambda_a);
  j["protagonist"] = bundle_to_json(ck.protagonist);
  if (ck.adversary) j["adversary"] = bundle_to_json(*ck.adversary);
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("not valid JSON: ") + e.what());
  }
  Checkpoint ck;
  try {
    ck.format_version = j.at("format_version").get<int>();
    if (ck.format_version != 1)
      throw CheckpointError("unsupported checkpoint format_version " +
                            std::to_string(ck.format_version) + " (this build reads version 1)");
    ck.variant = j.at("variant").get<std::string>();
    ck.config_digest = j.at("config_digest").get<std::string>();
    ck.step = j.at("step").get<long>();
    ck.lambda_p = parse_hex_double(j.at("lambda_p").get<std::string>());
    ck.lambda_a = parse_hex_double(j.at("lambda_a").get<std::string>());
    ck.protagonist = bundle_from_json(j.at("protagonist"), "protagonist");
    if (j.contains("adversary")) ck.adversary = bundle_from_json(j.at("adversary"), "adversary");
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out << checkpoint_to_json(ck);
  if (!out) throw CheckpointError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path, const std::string& expect_digest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Checkpoint ck = checkpoint_from_json(text);
  if (!expect_digest.empty() && ck.config_digest != expect_digest) {
    std::cerr << "warning: checkpoint " << path << " was written under config digest "
              << ck.config_digest << ", current config digest is " << expect_digest << "\n";
  }
  return ck;
}

}  // namespace rararl
