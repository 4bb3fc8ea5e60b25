#include "mzl/net.hpp"

#include <cmath>
#include <fstream>
#include <cstdio>
#include <sstream>

namespace mzl {

void NetworkParams::validate() const {
  if (d < 1 || n_mem < 0) throw ContractError("network requires d >= 1 and n_mem >= 0");
  if (hidden.empty()) throw ContractError("network requires at least one hidden layer");
  if (layers.size() != hidden.size() + 1) throw ContractError("layer count mismatch");
  Index fan_in = input_width();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Index fan_out = l < hidden.size() ? hidden[l] : d;
    const auto& layer = layers[l];
    if (layer.weight.rows() != fan_out || layer.weight.cols() != fan_in ||
        layer.bias.size() != fan_out) {
      throw ContractError("layer " + std::to_string(l) + " has shape " +
                          std::to_string(layer.weight.rows()) + "x" +
                          std::to_string(layer.weight.cols()) + ", expected " +
                          std::to_string(fan_out) + "x" + std::to_string(fan_in));
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw ContractError("layer " + std::to_string(l) + " has non-finite values");
    }
    fan_in = fan_out;
  }
}

GradientSet GradientSet::zeros_like(const NetworkParams& params) {
  GradientSet g;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    g.layers.push_back({Mat::Zero(layer.weight.rows(), layer.weight.cols()),
                        Vec::Zero(layer.bias.size())});
  }
  return g;
}

void GradientSet::set_zero() {
  for (auto& layer : layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += other.layers[l].weight;
    layers[l].bias += other.layers[l].bias;
  }
  return *this;
}

NetworkParams init_params(int d, int n_mem, const std::vector<int>& hidden, std::uint64_t seed) {
  if (hidden.empty()) throw ContractError("init_params: hidden widths must be non-empty");
  for (const int w : hidden) {
    if (w < 1) throw ContractError("init_params: hidden widths must be >= 1");
  }
  NetworkParams p;
  p.d = d;
  p.n_mem = n_mem;
  p.hidden = hidden;
  auto rng = make_stream(seed, "init");
  Index fan_in = p.input_width();
  for (std::size_t l = 0; l <= hidden.size(); ++l) {
    const Index fan_out = l < hidden.size() ? hidden[l] : d;
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Layer layer{Mat(fan_out, fan_in), Vec::Zero(fan_out)};
    for (Index r = 0; r < fan_out; ++r) {
      for (Index c = 0; c < fan_in; ++c) layer.weight(r, c) = scale * standard_normal(rng);
    }
    p.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  p.validate();
  return p;
}

namespace {

void check_stack(const NetworkParams& params, const Vec& z_stack) {
  if (z_stack.size() != params.input_width()) {
    throw ContractError("network input has length " + std::to_string(z_stack.size()) +
                        ", expected d*(n_mem+1) = " + std::to_string(params.input_width()));
  }
}

// Hidden activations a_0 = input, a_l = tanh(W_l a_{l-1} + b_l); returns them all plus
// the affine output.
std::vector<Vec> activations(const NetworkParams& params, const Vec& z_stack) {
  std::vector<Vec> acts;
  acts.reserve(params.layers.size() + 1);
  acts.push_back(z_stack);
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Vec pre = params.layers[l].weight * acts.back() + params.layers[l].bias;
    if (l < last) pre = pre.array().tanh().matrix();
    acts.push_back(std::move(pre));
  }
  return acts;
}

}  // namespace

Vec network_output(const NetworkParams& params, const Vec& z_stack) {
  check_stack(params, z_stack);
  return activations(params, z_stack).back();
}

Vec forward(const NetworkParams& params, const Vec& z_stack) {
  check_stack(params, z_stack);
  return z_stack.head(params.d) + activations(params, z_stack).back();
}

std::pair<GradientSet, Vec> backward(const NetworkParams& params, const Vec& z_stack,
                                     const Vec& output_grad) {
  check_stack(params, z_stack);
  if (output_grad.size() != params.d) throw ContractError("output_grad must have length d");
  const auto acts = activations(params, z_stack);
  GradientSet grads = GradientSet::zeros_like(params);

  Vec delta = output_grad;  // gradient w.r.t. the pre-activation of the current layer
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    grads.layers[l].weight.noalias() = delta * acts[l].transpose();
    grads.layers[l].bias = delta;
    Vec upstream = params.layers[l].weight.transpose() * delta;
    if (l > 0) {
      // acts[l] = tanh(pre), so d tanh = 1 - acts[l]^2
      upstream.array() *= 1.0 - acts[l].array().square();
    }
    delta = std::move(upstream);
  }
  Vec input_grad = std::move(delta);
  input_grad.head(params.d) += output_grad;
  return {std::move(grads), std::move(input_grad)};
}

std::size_t count_params(const NetworkParams& params) {
  std::size_t total = 0;
  for (const auto& layer : params.layers) {
    total += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return total;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

void save_model(const NetworkParams& params, const std::filesystem::path& path) {
  params.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << "d=" << params.d << " n_mem=" << params.n_mem << " layers=";
  for (std::size_t i = 0; i < params.hidden.size(); ++i) {
    out << (i ? "," : "") << params.hidden[i];
  }
  out << '\n';
  for (const auto& layer : params.layers) {
    out << "W\n";
    for (Index r = 0; r < layer.weight.rows(); ++r) {
      for (Index c = 0; c < layer.weight.cols(); ++c) {
        out << (c ? " " : "") << format_double(layer.weight(r, c));
      }
      out << '\n';
    }
    out << "B";
    for (Index r = 0; r < layer.bias.size(); ++r) out << ' ' << format_double(layer.bias(r));
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing model file " + path.string());
}

NetworkParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model file " + path.string());
  std::string line;
  int line_no = 1;
  auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
  if (!std::getline(in, line)) throw FormatError(where() + ": empty model file");

  NetworkParams p;
  {
    int d = 0, n_mem = -1;
    char layers_buf[4096] = {0};
    if (std::sscanf(line.c_str(), "d=%d n_mem=%d layers=%4095s", &d, &n_mem, layers_buf) != 3) {
      throw FormatError(where() + ": expected header 'd=<d> n_mem=<n> layers=<w1,...>'");
    }
    p.d = d;
    p.n_mem = n_mem;
    std::stringstream widths(layers_buf);
    std::string w;
    while (std::getline(widths, w, ',')) {
      try {
        p.hidden.push_back(std::stoi(w));
      } catch (const std::exception&) {
        throw FormatError(where() + ": bad layer width '" + w + "'");
      }
    }
    if (p.d < 1 || p.n_mem < 0 || p.hidden.empty()) {
      throw FormatError(where() + ": invalid header values");
    }
  }

  Index fan_in = p.input_width();
  for (std::size_t l = 0; l <= p.hidden.size(); ++l) {
    const Index fan_out = l < p.hidden.size() ? p.hidden[l] : p.d;
    ++line_no;
    if (!std::getline(in, line) || line != "W") throw FormatError(where() + ": expected 'W'");
    Layer layer{Mat(fan_out, fan_in), Vec(fan_out)};
    for (Index r = 0; r < fan_out; ++r) {
      ++line_no;
      if (!std::getline(in, line)) throw FormatError(where() + ": truncated weight block");
      const auto row = parse_doubles(line, where());
      if (static_cast<Index>(row.size()) != fan_in) {
        throw FormatError(where() + ": weight row has " + std::to_string(row.size()) +
                          " values, expected " + std::to_string(fan_in));
      }
      for (Index c = 0; c < fan_in; ++c) layer.weight(r, c) = row[static_cast<std::size_t>(c)];
    }
    ++line_no;
    if (!std::getline(in, line) || line.rfind("B", 0) != 0) {
      throw FormatError(where() + ": expected 'B' line");
    }
    const auto bias = parse_doubles(line.substr(1), where());
    if (static_cast<Index>(bias.size()) != fan_out) {
      throw FormatError(where() + ": bias has " + std::to_string(bias.size()) +
                        " values, expected " + std::to_string(fan_out));
    }
    for (Index r = 0; r < fan_out; ++r) layer.bias(r) = bias[static_cast<std::size_t>(r)];
    p.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw FormatError(where() + ": trailing content after last layer");
    }
  }
  try {
    p.validate();
  } catch (const ContractError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return p;
}

}  // namespace mzl
