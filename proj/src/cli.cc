/*
 * Copyright 2026 The nodedp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nodedp/cli.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "nodedp/accountant.h"
#include "nodedp/audit.h"
#include "nodedp/common.h"
#include "nodedp/gnn.h"
#include "nodedp/graph.h"
#include "nodedp/trainer.h"

#ifndef NODEDP_VERSION
#define NODEDP_VERSION "unknown"
#endif

namespace nodedp {

std::string FileDigest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

struct GraphArgs {
  std::string nodes;
  std::string edges;
  bool symmetrize = false;
  double train_fraction = 0.8;
};

struct TrainArgs {
  TrainConfig cfg;
  std::string arch = "gcn";
  std::string noise = "sml";
  std::string null_policy = "detach";
  std::string alphas;
  bool no_overlap_enforce = false;
  bool freeze_lambda = false;

  // Copies the string-valued flags into cfg.
  void Resolve() {
    cfg.arch = ParseArch(arch);
    cfg.noise = ParseNoiseKind(noise);
    if (null_policy == "detach") {
      cfg.null_policy = NullPolicy::kDetach;
    } else if (null_policy == "zero") {
      cfg.null_policy = NullPolicy::kZeroFeatures;
    } else {
      throw ConfigError("unknown null policy '" + null_policy + "' (expected detach or zero)");
    }
    cfg.enforce_no_overlap = !no_overlap_enforce;
    cfg.train_gin_lambda = !freeze_lambda;
  }
};

std::vector<double> ParseList(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in --" + what);
    }
  }
  if (out.empty()) throw ConfigError("--" + what + " is empty");
  return out;
}

void AddGraphOptions(CLI::App* sub, GraphArgs& a) {
  sub->add_option("--nodes", a.nodes, "Node CSV: id,label,f_1..f_d")->required();
  sub->add_option("--edges", a.edges, "Edge list: one 'src dst' per line")->required();
  sub->add_flag("--symmetrize", a.symmetrize, "Add reverse edges and drop duplicates");
  sub->add_option("--train-fraction", a.train_fraction, "Share of nodes in the train split")
      ->check(CLI::Range(0.0, 1.0));
}

void AddTrainOptions(CLI::App* sub, TrainArgs& a) {
  TrainConfig& c = a.cfg;
  sub->add_option("--t", c.iterations, "Training iterations T")->check(CLI::PositiveNumber);
  sub->add_option("--lr", c.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--qb", c.base_rate, "Central sampling rate q_b")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--m", c.multiplier, "Neighbor multiplier M")->check(CLI::NonNegativeNumber);
  sub->add_option("--sigma", c.sigma, "Noise scale (ignored when --eps is set; 0 = non-private)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--eps", c.eps_target, "Target epsilon; calibrates sigma");
  sub->add_option("--delta", c.delta, "Target delta")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--max-dout", c.max_dout, "Accountant out-degree range (default |G| - 1)");
  sub->add_option("--alphas", a.alphas, "Comma-separated Renyi orders (default 1.1..10)");
  sub->add_option("--arch", a.arch, "gcn, gin or sage");
  sub->add_option("--hidden", c.hidden_dim, "Hidden width")->check(CLI::PositiveNumber);
  sub->add_flag("--freeze-lambda", a.freeze_lambda, "Keep the GIN lambda at 0");
  sub->add_option("--n-test", c.n_test, "Neighbors per test node at inference")->check(CLI::NonNegativeNumber);
  sub->add_flag("--no-overlap-enforce", a.no_overlap_enforce, "Keep peripherals that are also centrals");
  sub->add_option("--null-policy", a.null_policy, "detach or zero");
  sub->add_option("--noise", a.noise, "sml or gaussian");
  sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

// Every option of `sub` with its effective value (explicit or default).
Json ResolvedConfig(const CLI::App& sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    if (opt->get_expected_min() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      j[name] = opt->results().back();
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

// Turns a JSON config (flat, or a manifest with a "config" member) into
// command-line tokens.
std::vector<std::string> ConfigTokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  if (j.contains("config") && j["config"].is_object()) j = j["config"];
  if (!j.is_object()) throw ConfigError("config " + path + " must be a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_string()) {
      tokens.push_back(flag);
      tokens.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      tokens.push_back(flag);
      tokens.push_back(value.dump());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      tokens.push_back(flag);
      tokens.push_back(joined);
    } else if (!value.is_null()) {
      throw ConfigError("config key '" + key + "' has an unsupported type");
    }
  }
  return tokens;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void WriteJson(const fs::path& path, const Json& j) { WriteText(path, j.dump(2) + "\n"); }

Json EpsilonJson(double eps) { return std::isinf(eps) ? Json("inf") : Json(eps); }

class Context {
 public:
  Context(std::string out_dir, const CLI::App* sub) : out_dir_(std::move(out_dir)), sub_(sub) {}

  fs::path Prepare() {
    if (out_dir_.empty()) throw ConfigError("--out is required");
    fs::create_directories(out_dir_);
    return out_dir_;
  }

  void AddInput(const std::string& path) { inputs_[path] = FileDigest(path); }

  void WriteManifest(std::uint64_t seed) const {
    Json m;
    m["subcommand"] = sub_->get_name();
    m["config"] = ResolvedConfig(*sub_);
    m["seed"] = seed;
    m["version"] = NODEDP_VERSION;
    m["inputs"] = inputs_;
    WriteJson(fs::path(out_dir_) / "manifest.json", m);
  }

 private:
  std::string out_dir_;
  const CLI::App* sub_;
  std::map<std::string, std::string> inputs_;
};

Graph LoadInputGraph(const GraphArgs& a, Context& ctx) {
  ctx.AddInput(a.nodes);
  ctx.AddInput(a.edges);
  return LoadGraph(a.nodes, a.edges, BuildOptions{a.symmetrize});
}

Json SplitJson(const NodeSplit& split) {
  Json j;
  j["train_ids"] = split.train_ids;
  j["test_ids"] = split.test_ids;
  return j;
}

Json EvalJson(const EvalResult& r) {
  Json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["mean_precision"] = r.mean_precision;
  j["evaluated"] = r.evaluated;
  return j;
}

}  // namespace

int RunCli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Node-level differentially private GNN toolkit", "nodedp"};
  app.set_version_flag("--version", NODEDP_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string out_dir;
  std::string config_path;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool needs_out) {
    auto* o = sub->add_option("--out", out_dir, "Output directory");
    if (needs_out) o->required();
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--config", config_path, "JSON config; explicit flags win");
  };

  // gen
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic graph");
  std::string gen_model = "er";
  PlantedClassesOptions planted;
  double gen_p = 0.1;
  add_common(gen, true);
  gen->add_option("--model", gen_model, "er or planted")->check(CLI::IsMember({"er", "planted"}));
  gen->add_option("--n", planted.n, "Node count")->check(CLI::PositiveNumber);
  gen->add_option("--p", gen_p, "Edge probability (er)")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--d", planted.d, "Feature dimension")->check(CLI::PositiveNumber);
  gen->add_option("--classes", planted.num_classes, "Number of classes")->check(CLI::PositiveNumber);
  gen->add_option("--p-intra", planted.p_intra, "Same-class edge probability (planted)")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--p-inter", planted.p_inter, "Cross-class edge probability (planted)")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--separation", planted.class_separation, "Distance between class means (planted)")
      ->check(CLI::NonNegativeNumber);

  // calibrate
  CLI::App* cal = app.add_subcommand("calibrate", "Calibrate sigma for a privacy budget");
  AccountantConfig acct;
  acct.base_rate = 0.01;
  std::optional<double> cal_eps;
  std::optional<double> cal_sigma;
  std::string cal_alphas;
  std::string cal_noise = "sml";
  bool cal_no_overlap = false;
  add_common(cal, false);
  cal->add_option("--eps", cal_eps, "Target epsilon");
  cal->add_option("--sigma", cal_sigma, "Report epsilon for this sigma instead of calibrating");
  cal->add_option("--delta", acct.delta, "Target delta")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--qb", acct.base_rate, "Central sampling rate q_b")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--m", acct.multiplier, "Neighbor multiplier M")->check(CLI::NonNegativeNumber);
  cal->add_option("--t", acct.iterations, "Iterations T")->check(CLI::PositiveNumber);
  cal->add_option("--max-dout", acct.max_dout, "Largest out-degree to account for")->required();
  cal->add_option("--alphas", cal_alphas, "Comma-separated Renyi orders (default 1.1..10)");
  cal->add_option("--noise", cal_noise, "sml or gaussian");
  cal->add_flag("--no-overlap-enforce", cal_no_overlap, "Account for the no-overlap-enforcement variant");

  // train
  CLI::App* train = app.add_subcommand("train", "Train a node-level private GNN");
  GraphArgs train_graph;
  TrainArgs train_args;
  add_common(train, true);
  AddGraphOptions(train, train_graph);
  AddTrainOptions(train, train_args);

  // eval
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a trained model");
  GraphArgs eval_graph;
  std::string model_dir;
  bool inductive = false;
  int eval_n_test = 13;
  add_common(eval, true);
  AddGraphOptions(eval, eval_graph);
  eval->add_option("--model", model_dir, "Directory holding model.bin and model.json")->required();
  eval->add_option("--n-test", eval_n_test, "Neighbors per test node")->check(CLI::NonNegativeNumber);
  eval->add_flag("--inductive", inductive, "Treat every node of the graph as a test node");

  // audit
  CLI::App* audit = app.add_subcommand("audit", "White-box canary audit");
  GraphArgs audit_graph;
  TrainArgs audit_args;
  std::size_t trials = 10000;
  std::optional<int> audited_dout;
  double confidence = 0.95;
  add_common(audit, true);
  AddGraphOptions(audit, audit_graph);
  AddTrainOptions(audit, audit_args);
  audit->add_option("--trials", trials, "Canary trials")->check(CLI::PositiveNumber);
  audit->add_option("--audited-dout", audited_dout, "Out-degree for the canary norm law (default: max)");
  audit->add_option("--confidence", confidence, "Clopper-Pearson confidence")->check(CLI::Range(0.0, 1.0));

  // impact
  CLI::App* impact = app.add_subcommand("impact", "Gradient change vs. new node out-degree");
  ImpactConfig icfg;
  std::string chi = "0,0.1,0.3,0.5,0.7,0.9";
  std::string impact_arch = "gcn";
  add_common(impact, true);
  impact->add_option("--n", icfg.n, "Base graph size")->check(CLI::PositiveNumber);
  impact->add_option("--p", icfg.p, "Edge probability")->check(CLI::Range(0.0, 1.0));
  impact->add_option("--d", icfg.d, "Feature dimension")->check(CLI::PositiveNumber);
  impact->add_option("--classes", icfg.num_classes, "Number of classes")->check(CLI::PositiveNumber);
  impact->add_option("--chi", chi, "Comma-separated out-degree fractions");
  impact->add_option("--repeats", icfg.repeats, "Repeats per fraction")->check(CLI::PositiveNumber);
  impact->add_option("--arch", impact_arch, "gcn, gin or sage");
  impact->add_option("--hidden", icfg.hidden_dim, "Hidden width")->check(CLI::PositiveNumber);

  std::vector<std::string> args = raw_args;
  try {
    for (std::size_t i = 2; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
      } else {
        continue;
      }
      const std::vector<std::string> tokens = ConfigTokens(path);
      args.insert(args.begin() + 2, tokens.begin(), tokens.end());
      break;
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      Context ctx(out_dir, gen);
      const fs::path dir = ctx.Prepare();
      const Graph g = gen_model == "er"
                          ? GenErdosRenyi(planted.n, gen_p, planted.d, planted.num_classes, seed)
                          : GenPlantedClasses(planted, seed);
      SaveGraph(g, (dir / "nodes.csv").string(), (dir / "edges.txt").string());
      WriteJson(dir / "graph.json", GraphToJson(g));
      ctx.WriteManifest(seed);
      const Json summary = {{"nodes", g.node_count()},
                            {"edges", g.edge_count()},
                            {"dim", g.dim()},
                            {"num_classes", g.num_classes()},
                            {"max_out_degree", g.max_out_degree()}};
      out << summary.dump(2) << "\n";
    } else if (cal->parsed()) {
      if (!cal_alphas.empty()) acct.alpha_grid = ParseList(cal_alphas, "alphas");
      acct.noise = ParseNoiseKind(cal_noise);
      acct.enforce_no_overlap = !cal_no_overlap;
      if (cal_eps.has_value() == cal_sigma.has_value()) throw ConfigError("give exactly one of --eps and --sigma");
      Json j;
      PrivacyGuarantee guarantee;
      if (cal_eps) {
        if (!(*cal_eps > 0.0)) throw CalibrationError("epsilon must be > 0 to calibrate");
        const Calibration c = CalibrateSigma(*cal_eps, acct);
        j["sigma"] = c.sigma;
        guarantee = c.guarantee;
      } else {
        if (!(*cal_sigma > 0.0)) throw ConfigError("--sigma must be > 0");
        guarantee = ComputeEpsilon(acct, *cal_sigma);
        j["sigma"] = *cal_sigma;
      }
      j["alpha"] = guarantee.alpha;
      j["gamma"] = guarantee.gamma;
      j["epsilon"] = guarantee.epsilon;
      j["delta"] = guarantee.delta;
      j["argmax_dout"] = guarantee.argmax_dout;
      j["pmf_checksum"] =
          RhoPmfFor(acct.enforce_no_overlap, guarantee.argmax_dout, acct.base_rate, acct.multiplier).TotalMass();
      j["noise"] = ToString(acct.noise);
      if (!out_dir.empty()) {
        Context ctx(out_dir, cal);
        const fs::path dir = ctx.Prepare();
        WriteJson(dir / "calibration.json", j);
        ctx.WriteManifest(seed);
      }
      out << j.dump(2) << "\n";
    } else if (train->parsed()) {
      Context ctx(out_dir, train);
      const fs::path dir = ctx.Prepare();
      train_args.Resolve();
      TrainConfig cfg = train_args.cfg;
      cfg.seed = seed;
      if (!train_args.alphas.empty()) cfg.alpha_grid = ParseList(train_args.alphas, "alphas");
      cfg.Validate();
      const Graph g = LoadInputGraph(train_graph, ctx);
      const NodeSplit split = SplitTrainTest(g.node_count(), train_graph.train_fraction, seed);
      const TrainResult r = Train(g, split, cfg);
      SaveCheckpoint(r.params, (dir / "model.bin").string(), (dir / "model.json").string());
      Json report = ToJson(r.report);
      WriteJson(dir / "report.json", report);
      std::ostringstream loss;
      loss.precision(17);
      loss << "iteration,loss\n";
      for (std::size_t t = 0; t < r.report.losses.size(); ++t) loss << t + 1 << ',' << r.report.losses[t] << '\n';
      WriteText(dir / "loss.csv", loss.str());
      WriteJson(dir / "split.json", SplitJson(split));
      ctx.WriteManifest(seed);
      report.erase("losses");
      out << report.dump(2) << "\n";
    } else if (eval->parsed()) {
      Context ctx(out_dir, eval);
      const fs::path dir = ctx.Prepare();
      const std::string blob = (fs::path(model_dir) / "model.bin").string();
      const std::string header = (fs::path(model_dir) / "model.json").string();
      ctx.AddInput(blob);
      ctx.AddInput(header);
      const ModelParams params = LoadCheckpoint(blob, header);
      const Graph g = LoadInputGraph(eval_graph, ctx);
      if (g.dim() != params.layout.d_in || g.num_classes() > params.layout.num_classes) {
        throw IntegrityError("graph does not match the model's input dimension or class count");
      }
      TrainConfig cfg;
      cfg.seed = seed;
      cfg.n_test = eval_n_test;
      Json j;
      if (inductive) {
        j = EvalJson(EvaluateInductive(params, g, cfg));
        j["mode"] = "inductive";
      } else {
        const NodeSplit split = SplitTrainTest(g.node_count(), eval_graph.train_fraction, seed);
        j = EvalJson(Evaluate(params, g, split, cfg));
        j["mode"] = "transductive";
      }
      WriteJson(dir / "eval.json", j);
      ctx.WriteManifest(seed);
      out << j.dump(2) << "\n";
    } else if (audit->parsed()) {
      Context ctx(out_dir, audit);
      const fs::path dir = ctx.Prepare();
      audit_args.Resolve();
      TrainConfig cfg = audit_args.cfg;
      cfg.seed = seed;
      if (!audit_args.alphas.empty()) cfg.alpha_grid = ParseList(audit_args.alphas, "alphas");
      const Graph g = LoadInputGraph(audit_graph, ctx);
      const NodeSplit split = SplitTrainTest(g.node_count(), audit_graph.train_fraction, seed);
      const AuditObservations obs = RunAudit(g, split, cfg, trials, audited_dout);
      const AuditResult result = EmpiricalEpsilon(obs, cfg.delta, confidence);
      Json j = ToJson(result);
      j["sigma"] = obs.sigma;
      j["audited_dout"] = obs.audited_dout;
      j["delta"] = cfg.delta;
      j["theoretical_eps"] = EpsilonJson(obs.guarantee.epsilon);
      std::ostringstream csv;
      WriteAuditCsv(obs, csv);
      WriteText(dir / "audit.csv", csv.str());
      WriteJson(dir / "audit.json", j);
      ctx.WriteManifest(seed);
      out << j.dump(2) << "\n";
    } else if (impact->parsed()) {
      Context ctx(out_dir, impact);
      const fs::path dir = ctx.Prepare();
      icfg.chi_grid = ParseList(chi, "chi");
      icfg.arch = ParseArch(impact_arch);
      icfg.seed = seed;
      const std::vector<ImpactRow> rows = ImpactExperiment(icfg);
      std::ostringstream csv;
      csv.precision(17);
      csv << "chi,mean_delta,sd_delta\n";
      Json j = Json::array();
      for (const ImpactRow& r : rows) {
        csv << r.chi << ',' << r.mean_delta << ',' << r.sd_delta << '\n';
        j.push_back({{"chi", r.chi}, {"mean_delta", r.mean_delta}, {"sd_delta", r.sd_delta}});
      }
      WriteText(dir / "impact.csv", csv.str());
      WriteJson(dir / "impact.json", j);
      ctx.WriteManifest(seed);
      out << j.dump(2) << "\n";
    }
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const CalibrationError& e) {
    err << "calibration error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

}  // namespace nodedp
