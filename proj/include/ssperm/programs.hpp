#pragma once

#include <functional>
#include <string>

#include "ssperm/engine.hpp"
#include "ssperm/nn.hpp"

namespace ssperm {

using SessionProgram = std::function<void(PartyEngine&)>;

// Installs identical shares on P0/P1 from the engine's data stream (both
// sides derive the same split); shape-only handle on P2. Values must be
// known to both data holders (synthetic/bench data).
SharedTensor install_shared(PartyEngine& eng, const std::vector<u64>& shape,
                            const std::vector<double>& values);

struct BenchSpec {
  NetArch arch;
  size_t batch = 64;
  bool train = false;
  int steps = 1;  // forward passes or SGD steps
  double lr = 0.01;
};

// Named presets: "lr" (dim-1-sigmoid logistic layer), "dnn1"
// (100-50-relu-1-sigmoid), "dnn2" (1000-500-relu-1-sigmoid).
BenchSpec make_bench_spec(const std::string& model, size_t dim, size_t hidden,
                          size_t batch, bool train);

// Random-data inference/training benchmark. The opened output lands in
// engine.outputs["result"] on P0.
SessionProgram bench_program(const BenchSpec& spec);

struct TrainSpec {
  NetArch arch;
  TrainConfig train;
  Dataset train_data;
  Dataset val_data;
};

// Full training run; per-epoch validation accuracy lands in
// engine.metrics["acc_epoch_<i>"] on P0, final params opened on P0.
SessionProgram train_program(const TrainSpec& spec);

// Program from a parsed session config (used by the tcp party runner).
SessionProgram program_from_config(const SessionConfig& cfg);

}  // namespace ssperm
