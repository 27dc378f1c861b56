#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssperm/data_io.hpp"
#include "ssperm/nn.hpp"
#include "ssperm/privacy.hpp"
#include "ssperm/programs.hpp"
#include "ssperm/protocols.hpp"

using json = nlohmann::json;
using namespace ssperm;

static json links_json(const TrafficAccounting& acct) {
  json out = json::array();
  auto totals = acct.link_totals();
  for (int i = 0; i < 6; i++) {
    auto [from, to] = link_parties(i);
    out.push_back({{"from", party_name(from)},
                   {"to", party_name(to)},
                   {"payload_bits", totals[i].payload_bits},
                   {"raw_bytes", totals[i].raw_bytes},
                   {"flights", totals[i].flights},
                   {"offline_payload_bits", totals[i].offline_payload_bits}});
  }
  return out;
}

static json ops_json(const TrafficAccounting& acct) {
  std::map<std::string, std::pair<u64, OpRecord>> agg;
  for (const auto& rec : acct.op_records()) {
    auto& slot = agg[rec.name];
    slot.first++;
    for (int i = 0; i < 6; i++) slot.second.links[i] += rec.links[i];
    slot.second.rounds = std::max(slot.second.rounds, rec.rounds);
  }
  json out = json::array();
  for (const auto& [name, slot] : agg) {
    u64 bits = 0, flights = 0;
    for (const auto& l : slot.second.links) {
      bits += l.payload_bits;
      flights += l.flights;
    }
    out.push_back({{"op", name},
                   {"count", slot.first},
                   {"rounds_max", slot.second.rounds},
                   {"payload_bits", bits},
                   {"flights", flights}});
  }
  return out;
}

static json reference_table_json() {
  json out = json::array();
  for (const auto& row : reference_cost_table())
    out.push_back({{"protocol", row.protocol},
                   {"rounds", row.rounds},
                   {"bits_per_relu", row.bits}});
  return out;
}

static void write_out(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << "\n";
}

static SessionConfig default_config(u64 seed, int p) {
  SessionConfig cfg;
  cfg.p = p;
  cfg.data_seed = seed;
  cfg.seed_p0p1 = derive_seed(seed_from_u64(seed), 0x01);
  cfg.seed_p1p2 = derive_seed(seed_from_u64(seed), 0x12);
  return cfg;
}

static int cmd_party(const std::string& role_s, const std::string& config_path) {
  SessionConfig cfg = load_session_config(config_path);
  PartyId role;
  if (role_s == "p0") role = PartyId::P0;
  else if (role_s == "p1") role = PartyId::P1;
  else if (role_s == "p2") role = PartyId::P2;
  else throw CLI::ValidationError("--role must be p0|p1|p2");
  auto transport = std::make_shared<TcpTransport>(role, cfg.addresses);
  auto acct = std::make_shared<TrafficAccounting>();
  PartyEngine eng(role, cfg, transport, acct);
  auto program = program_from_config(cfg);
  program(eng);
  json report = {{"role", party_name(role)},
                 {"links", links_json(*acct)},
                 {"ops", ops_json(*acct)}};
  for (const auto& [name, t] : eng.outputs) {
    auto vals = decode_tensor(t, eng.fx());
    if (vals.size() > 16) vals.resize(16);
    report["outputs"][name] = vals;
  }
  std::cout << report.dump(2) << "\n";
  transport->shutdown();
  return 0;
}

static int cmd_bench(const std::string& model, size_t dim, size_t hidden,
                     size_t batch, bool train, int steps, u64 seed, int p,
                     const std::string& out_path) {
  BenchSpec spec = make_bench_spec(model, dim, hidden, batch, train);
  spec.steps = steps;
  SessionConfig cfg = default_config(seed, p);
  LocalSession session(cfg);
  auto t0 = std::chrono::steady_clock::now();
  session.run(bench_program(spec));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
  json op_times = json::object();
  for (const auto& [name, s] : session.engine(PartyId::P0).op_seconds())
    op_times[name] = s;
  json report = {{"model", model},
                 {"arch", spec.arch.to_string()},
                 {"batch", batch},
                 {"train", train},
                 {"steps", steps},
                 {"seed", seed},
                 {"seconds", secs},
                 {"op_seconds_p0", op_times},
                 {"links", links_json(session.accounting())},
                 {"ops", ops_json(session.accounting())},
                 {"reference_roundtrip_costs", reference_table_json()}};
  write_out(report, out_path);
  return 0;
}

static int cmd_train(const std::string& data_path, const std::string& arch_s,
                     int epochs, double lr, size_t batch, u64 seed,
                     bool compare_plain, const std::string& out_prefix) {
  TrainSpec spec;
  spec.arch = NetArch::parse(arch_s);
  spec.train.lr = lr;
  spec.train.epochs = epochs;
  spec.train.batch_size = batch;
  spec.train.seed = seed;
  if (!data_path.empty()) {
    Dataset all = load_csv_dataset(data_path);
    size_t val = all.n / 5;
    size_t trn = all.n - val;
    spec.train_data.n = trn;
    spec.train_data.d = all.d;
    spec.train_data.out_dim = all.out_dim;
    spec.train_data.x.assign(all.x.begin(), all.x.begin() + trn * all.d);
    spec.train_data.y.assign(all.y.begin(), all.y.begin() + trn * all.out_dim);
    spec.val_data.n = val;
    spec.val_data.d = all.d;
    spec.val_data.out_dim = all.out_dim;
    spec.val_data.x.assign(all.x.begin() + trn * all.d, all.x.end());
    spec.val_data.y.assign(all.y.begin() + trn * all.out_dim, all.y.end());
  } else {
    spec.train_data = make_two_gaussians(1000, spec.arch.in_dim(), 2.5,
                                         seed + 17);
    spec.val_data = make_two_gaussians(500, spec.arch.in_dim(), 2.5,
                                       seed + 31);
  }
  if (spec.train_data.d != spec.arch.in_dim())
    throw ConfigError("arch input dim does not match data");

  SessionConfig cfg = default_config(seed, 23);
  LocalSession session(cfg);
  auto t0 = std::chrono::steady_clock::now();
  session.run(train_program(spec));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
  auto& metrics = session.engine(PartyId::P0).metrics;

  // optional plaintext run with identical seed and batch order
  std::map<int, double> float_acc;
  if (compare_plain) {
    FloatNet fnet = init_float_net(spec.arch, seed);
    auto validate = [&](int epoch) {
      auto pred = fnet.infer(spec.val_data.x, spec.val_data.n, spec.arch.in_dim());
      float_acc[epoch] = binary_accuracy(pred, spec.val_data.y);
    };
    validate(0);
    size_t in_dim = spec.arch.in_dim(), out_dim = spec.arch.out_dim();
    for (int epoch = 1; epoch <= epochs; epoch++) {
      for (size_t start = 0; start < spec.train_data.n; start += batch) {
        size_t rows = std::min(batch, spec.train_data.n - start);
        std::vector<double> xv(spec.train_data.x.begin() + start * in_dim,
                               spec.train_data.x.begin() + (start + rows) * in_dim);
        std::vector<double> yv(spec.train_data.y.begin() + start * out_dim,
                               spec.train_data.y.begin() + (start + rows) * out_dim);
        fnet.backprop(xv, yv, rows, lr);
      }
      validate(epoch);
    }
  }

  std::string csv_path = out_prefix.empty() ? "" : out_prefix + "_accuracy.csv";
  std::ostringstream csv;
  csv << "epoch,shared_acc" << (compare_plain ? ",plain_acc" : "") << "\n";
  for (int e = 0; e <= epochs; e++) {
    auto it = metrics.find("acc_epoch_" + std::to_string(e));
    csv << e << "," << (it == metrics.end() ? -1.0 : it->second);
    if (compare_plain) csv << "," << float_acc[e];
    csv << "\n";
  }
  if (csv_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(csv_path);
    f << csv.str();
  }

  json report = {{"arch", arch_s}, {"epochs", epochs},       {"lr", lr},
                 {"batch", batch}, {"seed", seed},           {"seconds", secs},
                 {"links", links_json(session.accounting())},
                 {"ops", ops_json(session.accounting())}};
  if (!metrics.empty()) {
    auto last = metrics.find("acc_epoch_" + std::to_string(epochs));
    if (last != metrics.end()) report["final_shared_acc"] = last->second;
  }
  if (compare_plain) report["final_plain_acc"] = float_acc[epochs];
  write_out(report, out_prefix.empty() ? "" : out_prefix + "_report.json");
  return 0;
}

static int cmd_privacy_dcor_sim(size_t n, size_t d, size_t h, size_t repeats,
                                u64 seed, bool unbiased,
                                const std::string& out_path) {
  CommonPrg prg(seed_from_u64(seed));
  std::ostringstream csv;
  csv << "distribution,method,dcor,ci_low,ci_high\n";
  for (SimKind kind : {SimKind::Normal, SimKind::Uniform, SimKind::Sparse,
                       SimKind::Subspace}) {
    SampleMatrix x = simulate_distribution(kind, n, d, prg);
    DcorStats permuted =
        dcor_sim(x, h, 1.0, repeats, /*permute=*/true, prg, unbiased);
    DcorStats onedim =
        dcor_sim(x, 1, 1.0, repeats, /*permute=*/false, prg, unbiased);
    DcorStats projected =
        dcor_sim(x, h, 1.0, repeats, /*permute=*/false, prg, unbiased);
    auto row = [&](const char* method, const DcorStats& st) {
      csv << sim_kind_name(kind) << "," << method << "," << st.mean << ","
          << st.ci_low << "," << st.ci_high << "\n";
    };
    row("permuted", permuted);
    row("projected_1d", onedim);
    row("projected", projected);
  }
  if (out_path.empty()) std::cout << csv.str();
  else std::ofstream(out_path) << csv.str();
  return 0;
}

static int cmd_privacy_attack(size_t n, size_t d, size_t h,
                              const std::string& batches_s, size_t bins,
                              size_t k, u64 seed, const std::string& out_path) {
  CommonPrg prg(seed_from_u64(seed));
  // two well-separated clusters of unequal size
  std::vector<int> cluster;
  SampleMatrix x = two_cluster_data(n, d, 0.7, 2.0, prg, &cluster);
  SampleMatrix hidden = project_gaussian(x, h, 1.0, prg);

  std::ostringstream csv;
  csv << "batch,topk_same_cluster_rate\n";
  std::stringstream bs(batches_s);
  std::string tok;
  while (std::getline(bs, tok, ',')) {
    size_t batch = std::stoul(tok);
    SampleMatrix leaked =
        batch == 0 ? hidden : permute_in_batches(hidden, batch, prg);
    auto res = histogram_attack(leaked, x, bins, k);
    double same = 0.0;
    for (size_t t = 0; t < n; t++)
      for (size_t j = 0; j < k; j++)
        if (cluster[res.topk[t][j]] == cluster[t]) same += 1.0;
    same /= static_cast<double>(n * k);
    csv << batch << "," << same << "\n";
  }
  if (out_path.empty()) std::cout << csv.str();
  else std::ofstream(out_path) << csv.str();
  return 0;
}

static int cmd_privacy_perm_stats(size_t n, bool enumerate, size_t samples,
                                  u64 seed, const std::string& out_path) {
  CommonPrg prg(seed_from_u64(seed));
  GaussianSampler g(prg);
  std::vector<double> x(n), y(n);
  for (auto& v : x) v = g.next();
  double ymean = 0.0;
  for (auto& v : y) {
    v = g.next();
    ymean += v;
  }
  ymean /= static_cast<double>(n);
  double ynorm = 0.0;
  for (auto& v : y) {
    v -= ymean;  // project onto the 1-orthogonal hyperplane
    ynorm += v * v;
  }
  ynorm = std::sqrt(ynorm);
  for (auto& v : y) v /= ynorm;
  PermErrorStats st = enumerate ? perm_error_stats_enumerate(x, y)
                                : perm_error_stats_sample(x, y, samples, prg);
  json report = {{"n", n},
                 {"mode", enumerate ? "enumerate" : "sample"},
                 {"count", st.count},
                 {"mean", st.mean},
                 {"variance", st.variance},
                 {"err_norm_sq", st.err_norm_sq},
                 {"approx_variance_over_n", st.err_norm_sq / static_cast<double>(n)},
                 {"exact_variance_over_n_minus_1",
                  st.err_norm_sq / static_cast<double>(n - 1)}};
  write_out(report, out_path);
  return 0;
}

static int cmd_privacy_flip_test(size_t samples, u64 seed,
                                 const std::string& out_path) {
  CommonPrg prg(seed_from_u64(seed));
  GaussianSampler g(prg);
  std::vector<double> values(1024);
  for (auto& v : values) v = std::fabs(g.next()) + 0.01;  // all positive
  double rate = flipping_negative_rate(values, samples, prg);
  json report = {{"samples", samples}, {"negative_rate", rate}};
  write_out(report, out_path);
  return 0;
}

int main(int argc, char** argv) {
  CLI::App app{"three-party secret-sharing ML framework"};
  app.require_subcommand(1);

  // party
  auto* party = app.add_subcommand("party", "run one networked party");
  std::string role_s, config_path;
  party->add_option("--role", role_s, "p0|p1|p2")->required();
  party->add_option("--config", config_path, "session config file")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "local-sim benchmark");
  std::string model = "lr", bench_out;
  size_t dim = 100, hidden = 50, batch = 64;
  bool train_flag = false, infer_flag = false;
  int steps = 1;
  u64 seed = 1;
  int pbits = 23;
  bench->add_option("--model", model, "lr|dnn1|dnn2|custom");
  bench->add_option("--dim", dim, "input dimension (lr/custom)");
  bench->add_option("--hidden", hidden, "hidden width (custom)");
  bench->add_option("--batch", batch, "batch size");
  bench->add_flag("--train", train_flag, "benchmark training");
  bench->add_flag("--infer", infer_flag, "benchmark inference (default)");
  bench->add_option("--steps", steps, "number of passes");
  bench->add_option("--seed", seed, "data seed");
  bench->add_option("--p", pbits, "fractional bits");
  bench->add_option("--out", bench_out, "report path (json)");

  // train
  auto* train = app.add_subcommand("train", "train a shared model");
  std::string data_path, arch_s = "20-16-relu-1-sigmoid", train_out;
  int epochs = 5;
  double lr = 0.1;
  bool compare_plain = false;
  train->add_option("--data", data_path, "csv dataset (default: synthetic)");
  train->add_option("--arch", arch_s, "e.g. 20-16-relu-1-sigmoid");
  train->add_option("--epochs", epochs, "epochs");
  train->add_option("--lr", lr, "learning rate");
  train->add_option("--batch", batch, "batch size");
  train->add_option("--seed", seed, "seed");
  train->add_flag("--compare-plaintext", compare_plain,
                  "also train the float reference");
  train->add_option("--out", train_out, "output prefix");

  // privacy
  auto* privacy = app.add_subcommand("privacy", "leakage analysis tools");
  privacy->require_subcommand(1);
  auto* dcor_sim_cmd = privacy->add_subcommand("dcor-sim",
                                               "simulated distributions");
  size_t pn = 1000, pd = 100, ph = 100, repeats = 50, samples = 100000;
  std::string priv_out;
  dcor_sim_cmd->add_option("--n", pn, "samples");
  dcor_sim_cmd->add_option("--d", pd, "dimension");
  dcor_sim_cmd->add_option("--hdim", ph, "hidden dimension");
  dcor_sim_cmd->add_option("--repeats", repeats, "monte carlo repeats");
  bool unbiased = false;
  dcor_sim_cmd->add_flag("--unbiased", unbiased, "bias-corrected estimator");
  dcor_sim_cmd->add_option("--seed", seed, "seed");
  dcor_sim_cmd->add_option("--out", priv_out, "csv path");

  auto* attack = privacy->add_subcommand("attack", "histogram attack demo");
  std::string batches_s = "0,1,2,10";
  size_t bins = 50, topk = 10;
  size_t an = 400, ad = 50, ah = 16;
  attack->add_option("--n", an, "samples");
  attack->add_option("--d", ad, "dimension");
  attack->add_option("--hdim", ah, "hidden dimension");
  attack->add_option("--batches", batches_s, "comma list; 0 = no permutation");
  attack->add_option("--bins", bins, "histogram bins");
  attack->add_option("--k", topk, "top-k");
  attack->add_option("--seed", seed, "seed");
  attack->add_option("--out", priv_out, "csv path");

  auto* perm_stats = privacy->add_subcommand("perm-stats",
                                             "permutation error statistics");
  size_t perm_n = 6;
  bool enumerate = false;
  perm_stats->add_option("--n", perm_n, "vector length");
  perm_stats->add_flag("--enumerate", enumerate, "exact enumeration (n <= 8)");
  perm_stats->add_option("--samples", samples, "sampled permutations");
  perm_stats->add_option("--seed", seed, "seed");
  perm_stats->add_option("--out", priv_out, "json path");

  auto* flip = privacy->add_subcommand("flip-test", "random flipping sign test");
  flip->add_option("--samples", samples, "flip count");
  flip->add_option("--seed", seed, "seed");
  flip->add_option("--out", priv_out, "json path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*party) return cmd_party(role_s, config_path);
    if (*bench) {
      if (train_flag && infer_flag)
        throw ConfigError("pick one of --train / --infer");
      return cmd_bench(model, dim, hidden, batch, train_flag, steps, seed,
                       pbits, bench_out);
    }
    if (*train)
      return cmd_train(data_path, arch_s, epochs, lr, batch, seed,
                       compare_plain, train_out);
    if (*privacy) {
      if (*dcor_sim_cmd)
        return cmd_privacy_dcor_sim(pn, pd, ph, repeats, seed, unbiased,
                                    priv_out);
      if (*attack)
        return cmd_privacy_attack(an, ad, ah, batches_s, bins, topk, seed,
                                  priv_out);
      if (*perm_stats)
        return cmd_privacy_perm_stats(perm_n, enumerate, samples, seed,
                                      priv_out);
      if (*flip) return cmd_privacy_flip_test(samples, seed, priv_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
