#pragma once

#include <string>
#include <vector>

#include "ssperm/protocols.hpp"

namespace ssperm {

struct LayerParams {
  SharedTensor weight;  // fan_in x fan_out
  SharedTensor bias;    // fan_out
  ElementwiseFn activation = ElementwiseFn::Relu;
};

struct Network {
  std::vector<LayerParams> layers;
  size_t num_layers() const { return layers.size(); }
};

struct TrainConfig {
  double lr = 0.1;
  int epochs = 1;
  size_t batch_size = 64;
  u64 seed = 1;
};

// Architecture spec: layer sizes plus activation per layer, e.g.
// {20,16,1} with {Relu, Sigmoid}.
struct NetArch {
  std::vector<size_t> dims;
  std::vector<ElementwiseFn> activations;

  size_t in_dim() const { return dims.front(); }
  size_t out_dim() const { return dims.back(); }
  static NetArch parse(const std::string& s);  // "20-16-relu-1-sigmoid"
  std::string to_string() const;
};

// Plain float reference network; mirrors the shared implementation step for
// step (same init, same batch order, same update rule).
struct FloatNet {
  struct Layer {
    std::vector<double> w;  // fan_in x fan_out, row-major
    std::vector<double> b;
    size_t fan_in = 0, fan_out = 0;
    ElementwiseFn activation = ElementwiseFn::Relu;
  };
  std::vector<Layer> layers;

  std::vector<double> infer(const std::vector<double>& x_batch, size_t batch,
                            size_t in_dim) const;
  // One SGD step on mean squared error with gradient 2*(pred-y)/B.
  void backprop(const std::vector<double>& x_batch,
                const std::vector<double>& y_batch, size_t batch, double lr);
  double loss(const std::vector<double>& x_batch,
              const std::vector<double>& y_batch, size_t batch) const;
};

// Gaussian N(0, 1/fan_in) initialization, identical floats on every caller
// with the same seed.
FloatNet init_float_net(const NetArch& arch, u64 seed);

// Shares the float parameters between P0/P1 (deterministically from the
// engine's data stream); returns shape-only handles on P2.
Network share_network(PartyEngine& eng, const FloatNet& net);

// Forward pass (stores per-layer inputs/outputs for backprop).
struct ForwardTrace {
  std::vector<SharedTensor> pre_act;   // Z_i, one per layer
  std::vector<SharedTensor> post_act;  // A_i, input at index 0
};

SharedTensor nn_infer(PartyEngine& eng, const SharedTensor& x, Network& net,
                      ForwardTrace* trace = nullptr);

// One SGD step on squared error; updates net in place.
void nn_backprop(PartyEngine& eng, const SharedTensor& x,
                 const SharedTensor& y, Network& net, const TrainConfig& cfg);

// Reconstructed parameter snapshot (P0/P1); for parity tests.
std::vector<PlainFixedTensor> open_params(PartyEngine& eng, Network& net);

// --- datasets -------------------------------------------------------------

struct Dataset {
  size_t n = 0, d = 0;
  std::vector<double> x;  // n x d row-major
  std::vector<double> y;  // n x out_dim
  size_t out_dim = 1;
};

// Two-Gaussian binary classification data.
Dataset make_two_gaussians(size_t n, size_t d, double separation, u64 seed);

double binary_accuracy(const std::vector<double>& pred,
                       const std::vector<double>& label);

}  // namespace ssperm
