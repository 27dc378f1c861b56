#include "ssperm/nn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ssperm/programs.hpp"

namespace ssperm {

// Pattern: in_dim (-width-activation)+, e.g. "20-16-relu-1-sigmoid".
NetArch NetArch::parse(const std::string& s) {
  NetArch arch;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, '-')) {
    if (tok.empty()) throw ConfigError("bad arch token in " + s);
    if (std::isdigit(static_cast<unsigned char>(tok[0]))) {
      // every layer before this one must already have its activation
      if (!arch.dims.empty() &&
          arch.activations.size() != arch.dims.size() - 1)
        throw ConfigError("missing activation in arch " + s);
      arch.dims.push_back(std::stoul(tok));
    } else {
      if (arch.dims.size() < 2 ||
          arch.activations.size() != arch.dims.size() - 2)
        throw ConfigError("activation without a layer width in " + s);
      ElementwiseFn f;
      if (tok == "relu") f = ElementwiseFn::Relu;
      else if (tok == "sigmoid") f = ElementwiseFn::Sigmoid;
      else if (tok == "tanh") f = ElementwiseFn::Tanh;
      else if (tok == "identity" || tok == "linear") f = ElementwiseFn::Identity;
      else throw ConfigError("unknown activation: " + tok);
      arch.activations.push_back(f);
    }
  }
  if (arch.dims.size() < 2 || arch.activations.size() != arch.dims.size() - 1)
    throw ConfigError("arch needs dims and one activation per layer: " + s);
  return arch;
}

std::string NetArch::to_string() const {
  std::string out = std::to_string(dims[0]);
  for (size_t i = 1; i < dims.size(); i++) {
    out += "-" + std::to_string(dims[i]) + "-" + fn_name(activations[i - 1]);
  }
  return out;
}

FloatNet init_float_net(const NetArch& arch, u64 seed) {
  GaussianSampler g(seed);
  FloatNet net;
  for (size_t i = 0; i + 1 < arch.dims.size(); i++) {
    FloatNet::Layer layer;
    layer.fan_in = arch.dims[i];
    layer.fan_out = arch.dims[i + 1];
    layer.activation = arch.activations[i];
    double stddev = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
    layer.w.resize(layer.fan_in * layer.fan_out);
    for (auto& v : layer.w) v = g.next(0.0, stddev);
    layer.b.assign(layer.fan_out, 0.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Network share_network(PartyEngine& eng, const FloatNet& fnet) {
  Network net;
  for (const auto& fl : fnet.layers) {
    LayerParams lp;
    lp.weight = install_shared(eng, {fl.fan_in, fl.fan_out}, fl.w);
    lp.bias = install_shared(eng, {fl.fan_out}, fl.b);
    lp.activation = fl.activation;
    net.layers.push_back(std::move(lp));
  }
  return net;
}

// Row-broadcast bias add; local on both share holders.
static SharedTensor add_bias(PartyEngine& eng, const SharedTensor& z,
                             const SharedTensor& b) {
  if (z.shape.size() != 2 || b.shape.size() != 1 || z.shape[1] != b.shape[0])
    throw ShapeMismatchError("bias shape");
  eng.materialize(z);
  eng.materialize(b);
  u64 tid = eng.alloc_tensor_id();
  if (eng.is(PartyId::P2)) {
    SharedTensor t;
    t.shape = z.shape;
    t.owner = eng.role();
    t.tensor_id = tid;
    return t;
  }
  size_t rows = z.shape[0], cols = z.shape[1];
  std::vector<u64> out(z.vals());
  for (size_t i = 0; i < rows; i++)
    for (size_t j = 0; j < cols; j++)
      out[i * cols + j] = ring_add(out[i * cols + j], b.vals()[j]);
  SharedTensor t(z.shape, std::move(out), eng.role(), tid);
  eng.note_final(t);
  return t;
}

SharedTensor nn_infer(PartyEngine& eng, const SharedTensor& x, Network& net,
                      ForwardTrace* trace) {
  if (net.layers.empty()) throw ConfigError("network needs >= 1 layer");
  if (x.shape.size() != 2 || x.shape[1] != net.layers[0].weight.shape[0])
    throw ShapeMismatchError("input width vs first layer fan_in");
  if (trace) {
    trace->pre_act.clear();
    trace->post_act.clear();
    trace->post_act.push_back(x);
  }
  SharedTensor a = x;
  for (size_t i = 0; i < net.layers.size(); i++) {
    auto& layer = net.layers[i];
    SharedTensor z = matmul_shared(eng, a, layer.weight);
    z = add_bias(eng, z, layer.bias);
    bool last = (i + 1 == net.layers.size());
    bool flipping = last && flip_compatible(layer.activation);
    if (layer.activation == ElementwiseFn::Identity) {
      eng.materialize(z);
      a = z;
    } else {
      a = cap(eng, z, layer.activation, flipping);
    }
    if (trace) {
      trace->pre_act.push_back(z);
      trace->post_act.push_back(a);
    }
  }
  return a;
}

// Derivative of the activation evaluated from the forward trace; Identity
// yields no extra factor.
static SharedTensor activation_deriv(PartyEngine& eng, ElementwiseFn f,
                                     const SharedTensor& z,
                                     const SharedTensor& a) {
  switch (f) {
    case ElementwiseFn::Relu:
      return cap(eng, z, ElementwiseFn::ReluDeriv, false);
    case ElementwiseFn::Sigmoid: {
      SharedTensor one_minus = sub_from_public(eng, 1.0, a);
      return mul_shared(eng, a, one_minus);
    }
    case ElementwiseFn::Tanh: {
      SharedTensor sq = mul_shared(eng, a, a);
      return sub_from_public(eng, 1.0, sq);
    }
    default:
      throw ProtocolError("no derivative path for this activation");
  }
}

void nn_backprop(PartyEngine& eng, const SharedTensor& x,
                 const SharedTensor& y, Network& net, const TrainConfig& cfg) {
  if (y.shape.size() != 2 || y.shape[0] != x.shape[0])
    throw ShapeMismatchError("label batch size");
  ForwardTrace trace;
  SharedTensor yhat = nn_infer(eng, x, net, &trace);
  size_t batch = x.shape[0];
  // squared-error gradient, batch-mean scaled
  SharedTensor g = sub_shared(eng, yhat, y);
  g = mul_public(eng, g, 2.0 / static_cast<double>(batch));
  for (size_t li = net.layers.size(); li-- > 0;) {
    auto& layer = net.layers[li];
    if (layer.activation != ElementwiseFn::Identity) {
      SharedTensor d = activation_deriv(eng, layer.activation,
                                        trace.pre_act[li],
                                        trace.post_act[li + 1]);
      g = mul_shared(eng, g, d);
    }
    SharedTensor g_prev;
    if (li > 0) {
      SharedTensor wt = transpose_local(eng, layer.weight);
      g_prev = matmul_shared(eng, g, wt);
    }
    SharedTensor at = transpose_local(eng, trace.post_act[li]);
    SharedTensor grad_w = matmul_shared(eng, at, g);
    SharedTensor grad_b = sum_axis(eng, g, 0);
    SharedTensor step_w = mul_public(eng, grad_w, cfg.lr);
    SharedTensor step_b = mul_public(eng, grad_b, cfg.lr);
    layer.weight = sub_shared(eng, layer.weight, step_w);
    layer.bias = sub_shared(eng, layer.bias, step_b);
    if (li > 0) g = g_prev;
  }
}

std::vector<PlainFixedTensor> open_params(PartyEngine& eng, Network& net) {
  std::vector<PlainFixedTensor> out;
  for (auto& layer : net.layers) {
    out.push_back(open_mutual(eng, layer.weight));
    out.push_back(open_mutual(eng, layer.bias));
  }
  return out;
}

// --- float reference ---------------------------------------------------------

std::vector<double> FloatNet::infer(const std::vector<double>& x_batch,
                                    size_t batch, size_t in_dim) const {
  if (in_dim != layers[0].fan_in) throw ShapeMismatchError("float infer dims");
  std::vector<double> a = x_batch;
  size_t cur = in_dim;
  for (const auto& layer : layers) {
    std::vector<double> z(batch * layer.fan_out, 0.0);
    for (size_t i = 0; i < batch; i++)
      for (size_t k = 0; k < cur; k++) {
        double aik = a[i * cur + k];
        for (size_t j = 0; j < layer.fan_out; j++)
          z[i * layer.fan_out + j] += aik * layer.w[k * layer.fan_out + j];
      }
    for (size_t i = 0; i < batch; i++)
      for (size_t j = 0; j < layer.fan_out; j++) {
        double v = z[i * layer.fan_out + j] + layer.b[j];
        z[i * layer.fan_out + j] = eval_elementwise(layer.activation, v);
      }
    a = std::move(z);
    cur = layer.fan_out;
  }
  return a;
}

void FloatNet::backprop(const std::vector<double>& x_batch,
                        const std::vector<double>& y_batch, size_t batch,
                        double lr) {
  size_t nl = layers.size();
  std::vector<std::vector<double>> acts(nl + 1);
  acts[0] = x_batch;
  size_t cur = layers[0].fan_in;
  for (size_t li = 0; li < nl; li++) {
    const auto& layer = layers[li];
    std::vector<double> z(batch * layer.fan_out, 0.0);
    for (size_t i = 0; i < batch; i++)
      for (size_t k = 0; k < cur; k++) {
        double aik = acts[li][i * cur + k];
        for (size_t j = 0; j < layer.fan_out; j++)
          z[i * layer.fan_out + j] += aik * layer.w[k * layer.fan_out + j];
      }
    for (size_t i = 0; i < batch; i++)
      for (size_t j = 0; j < layer.fan_out; j++)
        z[i * layer.fan_out + j] = eval_elementwise(
            layer.activation, z[i * layer.fan_out + j] + layer.b[j]);
    acts[li + 1] = std::move(z);
    cur = layer.fan_out;
  }

  size_t out_dim = layers.back().fan_out;
  std::vector<double> g(batch * out_dim);
  for (size_t i = 0; i < g.size(); i++)
    g[i] = 2.0 * (acts[nl][i] - y_batch[i]) / static_cast<double>(batch);

  for (size_t li = nl; li-- > 0;) {
    auto& layer = layers[li];
    size_t fi = layer.fan_in, fo = layer.fan_out;
    // multiply by activation derivative expressed from the activation value
    for (size_t i = 0; i < batch; i++)
      for (size_t j = 0; j < fo; j++) {
        double a = acts[li + 1][i * fo + j];
        double d = 1.0;
        switch (layer.activation) {
          case ElementwiseFn::Relu: d = a > 0 ? 1.0 : 0.0; break;
          case ElementwiseFn::Sigmoid: d = a * (1.0 - a); break;
          case ElementwiseFn::Tanh: d = 1.0 - a * a; break;
          case ElementwiseFn::Identity: d = 1.0; break;
          default: throw ProtocolError("bad activation");
        }
        g[i * fo + j] *= d;
      }
    std::vector<double> g_prev;
    if (li > 0) {
      g_prev.assign(batch * fi, 0.0);
      for (size_t i = 0; i < batch; i++)
        for (size_t j = 0; j < fo; j++) {
          double gij = g[i * fo + j];
          for (size_t k = 0; k < fi; k++)
            g_prev[i * fi + k] += gij * layer.w[k * fo + j];
        }
    }
    for (size_t k = 0; k < fi; k++)
      for (size_t j = 0; j < fo; j++) {
        double grad = 0.0;
        for (size_t i = 0; i < batch; i++)
          grad += acts[li][i * fi + k] * g[i * fo + j];
        layer.w[k * fo + j] -= lr * grad;
      }
    for (size_t j = 0; j < fo; j++) {
      double grad = 0.0;
      for (size_t i = 0; i < batch; i++) grad += g[i * fo + j];
      layer.b[j] -= lr * grad;
    }
    if (li > 0) g = std::move(g_prev);
  }
}

double FloatNet::loss(const std::vector<double>& x_batch,
                      const std::vector<double>& y_batch,
                      size_t batch) const {
  auto pred = infer(x_batch, batch, layers[0].fan_in);
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); i++) {
    double d = pred[i] - y_batch[i];
    s += d * d;
  }
  return s / static_cast<double>(batch);
}

// --- datasets -----------------------------------------------------------------

Dataset make_two_gaussians(size_t n, size_t d, double separation, u64 seed) {
  GaussianSampler g(seed);
  Dataset ds;
  ds.n = n;
  ds.d = d;
  ds.out_dim = 1;
  ds.x.resize(n * d);
  ds.y.resize(n);
  double shift = separation / std::sqrt(static_cast<double>(d));
  for (size_t i = 0; i < n; i++) {
    bool cls = g.prg().next_bit();
    ds.y[i] = cls ? 1.0 : 0.0;
    double mu = cls ? shift : -shift;
    for (size_t j = 0; j < d; j++) ds.x[i * d + j] = mu + g.next();
  }
  return ds;
}

double binary_accuracy(const std::vector<double>& pred,
                       const std::vector<double>& label) {
  if (pred.size() != label.size() || pred.empty())
    throw ShapeMismatchError("accuracy inputs");
  size_t hit = 0;
  for (size_t i = 0; i < pred.size(); i++)
    if ((pred[i] > 0.5) == (label[i] > 0.5)) hit++;
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace ssperm
