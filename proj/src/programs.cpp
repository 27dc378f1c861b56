#include "ssperm/programs.hpp"

#include <algorithm>
#include <cmath>

namespace ssperm {

SharedTensor install_shared(PartyEngine& eng, const std::vector<u64>& shape,
                            const std::vector<double>& values) {
  u64 tid = eng.alloc_tensor_id();
  u64 n = PlainFixedTensor::numel_of(shape);
  if (eng.is(PartyId::P2)) {
    SharedTensor t;
    t.shape = shape;
    t.owner = eng.role();
    t.tensor_id = tid;
    return t;
  }
  if (values.size() != n) throw ShapeMismatchError("install: value count");
  // both holders derive the same split off the shared data stream
  std::vector<u64> r = eng.data_rng().next_u64s(n);
  std::vector<u64> share(n);
  for (u64 i = 0; i < n; i++) {
    share[i] = eng.is(PartyId::P0)
                   ? r[i]
                   : ring_sub(encode(values[i], eng.fx()), r[i]);
  }
  SharedTensor t(shape, std::move(share), eng.role(), tid);
  eng.note_final(t);
  return t;
}

BenchSpec make_bench_spec(const std::string& model, size_t dim, size_t hidden,
                          size_t batch, bool train) {
  if (batch == 0) throw ConfigError("batch must be >= 1");
  BenchSpec spec;
  spec.batch = batch;
  spec.train = train;
  if (model == "lr") {
    spec.arch = NetArch{{dim, 1}, {ElementwiseFn::Sigmoid}};
  } else if (model == "dnn1") {
    spec.arch =
        NetArch{{100, 50, 1}, {ElementwiseFn::Relu, ElementwiseFn::Sigmoid}};
  } else if (model == "dnn2") {
    spec.arch =
        NetArch{{1000, 500, 1}, {ElementwiseFn::Relu, ElementwiseFn::Sigmoid}};
  } else if (model == "custom") {
    spec.arch = NetArch{{dim, hidden, 1},
                        {ElementwiseFn::Relu, ElementwiseFn::Sigmoid}};
  } else {
    throw ConfigError("unknown model: " + model);
  }
  return spec;
}

// Random inputs in a modest range; traffic/time benchmarks only care about
// shapes.
static std::vector<double> random_values(PartyEngine& eng, size_t n,
                                         double scale) {
  std::vector<double> out(n);
  if (eng.is(PartyId::P2)) return out;
  for (auto& v : out) v = (eng.data_rng().next_double() * 2.0 - 1.0) * scale;
  return out;
}

SessionProgram bench_program(const BenchSpec& spec) {
  return [spec](PartyEngine& eng) {
    FloatNet fnet = init_float_net(spec.arch, eng.config().data_seed);
    Network net = share_network(eng, fnet);
    size_t in_dim = spec.arch.in_dim();
    size_t out_dim = spec.arch.out_dim();
    for (int step = 0; step < spec.steps; step++) {
      auto xv = random_values(eng, spec.batch * in_dim, 1.0);
      SharedTensor x = install_shared(eng, {spec.batch, in_dim}, xv);
      if (spec.train) {
        std::vector<double> yv(spec.batch * out_dim, 0.0);
        if (!eng.is(PartyId::P2))
          for (auto& v : yv) v = eng.data_rng().next_bit() ? 1.0 : 0.0;
        SharedTensor y = install_shared(eng, {spec.batch, out_dim}, yv);
        TrainConfig tc;
        tc.lr = spec.lr;
        tc.batch_size = spec.batch;
        nn_backprop(eng, x, y, net, tc);
      } else {
        SharedTensor yhat = nn_infer(eng, x, net);
        PlainFixedTensor opened = open_to(eng, yhat, PartyId::P0);
        if (eng.is(PartyId::P0)) eng.outputs["result"] = opened;
      }
    }
    if (spec.train) {
      PlainFixedTensor w0 = open_to(eng, net.layers[0].weight, PartyId::P0);
      if (eng.is(PartyId::P0)) eng.outputs["result"] = w0;
    }
  };
}

SessionProgram train_program(const TrainSpec& spec) {
  return [spec](PartyEngine& eng) {
    FloatNet fnet = init_float_net(spec.arch, spec.train.seed);
    Network net = share_network(eng, fnet);
    const Dataset& tr = spec.train_data;
    size_t in_dim = spec.arch.in_dim();
    size_t out_dim = spec.arch.out_dim();
    size_t B = spec.train.batch_size;

    auto run_validation = [&](int epoch) {
      const Dataset& va = spec.val_data;
      if (va.n == 0) return;
      std::vector<double> preds;
      preds.reserve(va.n * out_dim);
      for (size_t start = 0; start < va.n; start += B) {
        size_t rows = std::min(B, va.n - start);
        std::vector<double> xv(va.x.begin() + start * in_dim,
                               va.x.begin() + (start + rows) * in_dim);
        SharedTensor x = install_shared(eng, {rows, in_dim}, xv);
        SharedTensor yhat = nn_infer(eng, x, net);
        PlainFixedTensor opened = open_to(eng, yhat, PartyId::P0);
        if (eng.is(PartyId::P0)) {
          auto vals = decode_tensor(opened, eng.fx());
          preds.insert(preds.end(), vals.begin(), vals.end());
        }
      }
      if (eng.is(PartyId::P0)) {
        double acc = binary_accuracy(preds, va.y);
        eng.metrics["acc_epoch_" + std::to_string(epoch)] = acc;
      }
    };

    run_validation(0);
    for (int epoch = 1; epoch <= spec.train.epochs; epoch++) {
      for (size_t start = 0; start < tr.n; start += B) {
        size_t rows = std::min(B, tr.n - start);
        std::vector<double> xv(tr.x.begin() + start * in_dim,
                               tr.x.begin() + (start + rows) * in_dim);
        std::vector<double> yv(tr.y.begin() + start * out_dim,
                               tr.y.begin() + (start + rows) * out_dim);
        SharedTensor x = install_shared(eng, {rows, in_dim}, xv);
        SharedTensor y = install_shared(eng, {rows, out_dim}, yv);
        TrainConfig tc = spec.train;
        nn_backprop(eng, x, y, net, tc);
      }
      run_validation(epoch);
    }
    // final parameters, opened for parity checks / checkpointing
    auto params = open_params(eng, net);
    if (eng.is(PartyId::P0)) {
      for (size_t i = 0; i < params.size(); i++)
        eng.outputs["param_" + std::to_string(i)] = params[i];
    }
  };
}

SessionProgram program_from_config(const SessionConfig& cfg) {
  auto get = [&](const std::string& key, const std::string& dflt) {
    auto it = cfg.program.find(key);
    return it == cfg.program.end() ? dflt : it->second;
  };
  std::string kind = get("name", "bench");
  if (kind == "bench") {
    BenchSpec spec = make_bench_spec(
        get("model", "lr"), std::stoul(get("dim", "100")),
        std::stoul(get("hidden", "50")), std::stoul(get("batch", "64")),
        get("train", "0") == "1");
    spec.steps = std::stoi(get("steps", "1"));
    spec.lr = std::stod(get("lr", "0.01"));
    return bench_program(spec);
  }
  if (kind == "train") {
    TrainSpec spec;
    spec.arch = NetArch::parse(get("arch", "20-16-relu-1-sigmoid"));
    spec.train.lr = std::stod(get("lr", "0.1"));
    spec.train.epochs = std::stoi(get("epochs", "5"));
    spec.train.batch_size = std::stoul(get("batch", "64"));
    spec.train.seed = cfg.data_seed;
    size_t n = std::stoul(get("n", "1000"));
    size_t nval = std::stoul(get("nval", "500"));
    double sep = std::stod(get("separation", "2.5"));
    spec.train_data =
        make_two_gaussians(n, spec.arch.in_dim(), sep, cfg.data_seed + 17);
    spec.val_data =
        make_two_gaussians(nval, spec.arch.in_dim(), sep, cfg.data_seed + 31);
    return train_program(spec);
  }
  throw ConfigError("unknown program name: " + kind);
}

}  // namespace ssperm
