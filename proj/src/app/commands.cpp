#include "safer/app/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "safer/errors.hpp"
#include "safer/eval.hpp"

#ifndef SAFER_VERSION_STRING
#define SAFER_VERSION_STRING "0.0.0"
#endif

namespace safer::app {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string version_string() { return SAFER_VERSION_STRING; }

namespace {

/// Compact label for a tail level, e.g. "0.3".
std::string alpha_label(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path sidecar_of(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  return p.replace_extension(".json");
}

void write_checkpoint(const ModelState& state, const InteractionSet& train, const RunConfig& config, int epoch,
                      const fs::path& path) {
  save_checkpoint(state, path);
  ojson side;
  side["version"] = version_string();
  side["config_hash"] = hex64(config_hash(config));
  side["solver"] = to_string(config.solver.solver);
  side["epoch"] = epoch;
  side["num_users"] = state.num_users();
  side["num_items"] = state.num_items();
  side["dim"] = state.dim();
  side["item_labels"] = train.item_labels();
  write_text(sidecar_of(path), side.dump(2) + "\n");
}

std::vector<FoldInUser> remap_items(const std::vector<FoldInUser>& users, const std::vector<std::string>& from,
                                    const std::vector<std::string>& to, std::size_t& dropped) {
  std::unordered_map<std::string, Index> ids;
  for (std::size_t j = 0; j < to.size(); ++j) ids.emplace(to[j], static_cast<Index>(j));
  std::vector<FoldInUser> out;
  for (const auto& u : users) {
    FoldInUser m{u.user_id, u.label, {}, {}};
    for (const Index j : u.input_items)
      if (auto it = ids.find(from[j]); it != ids.end()) m.input_items.push_back(it->second);
    for (const Index j : u.holdout_items)
      if (auto it = ids.find(from[j]); it != ids.end()) m.holdout_items.push_back(it->second);
    if (m.input_items.empty() || m.holdout_items.empty()) {
      ++dropped;
      continue;
    }
    out.push_back(std::move(m));
  }
  return out;
}

void print_report(const MetricReport& report, std::ostream& os) {
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %10s", "metric", "mean");
  os << line;
  for (const double a : report.alphas) {
    std::snprintf(line, sizeof line, " %10s", ("tail@" + alpha_label(a)).c_str());
    os << line;
  }
  os << '\n';
  for (const char* metric : {"recall", "ndcg"}) {
    for (const auto k : report.ks) {
      std::snprintf(line, sizeof line, "%-12s %10.5f", (std::string(metric) + "@" + std::to_string(k)).c_str(),
                    report.mean(metric, k));
      os << line;
      for (const double a : report.alphas) {
        std::snprintf(line, sizeof line, " %10.5f", report.tail(metric, k, a));
        os << line;
      }
      os << '\n';
    }
  }
  os << "users " << report.per_user.size() << ", dropped " << report.dropped_users << '\n';
}

std::pair<std::string, std::size_t> parse_metric(const std::string& spec) {
  const auto at = spec.find('@');
  return {spec.substr(0, at), static_cast<std::size_t>(std::stoul(spec.substr(at + 1)))};
}

}  // namespace

SplitBundle load_split(const RunConfig& config) {
  if (!config.split_dir.empty()) {
    SplitBundle b;
    b.train = load_interactions(config.split_dir / "train.tsv", TripletFormat::tsv, std::nullopt);
    std::size_t du = 0, di = 0;
    b.validation = read_foldin_file(config.split_dir / "validation.tsv", b.train.item_labels(), &du, &di);
    b.counters.dropped_validation_users = du;
    b.counters.dropped_unseen_interactions = di;
    du = di = 0;
    b.test = read_foldin_file(config.split_dir / "test.tsv", b.train.item_labels(), &du, &di);
    b.counters.dropped_test_users = du;
    b.counters.dropped_unseen_interactions += di;
    b.seed = config.split_seed;
    b.foldin_fraction = config.foldin_fraction;
    return b;
  }
  const auto set = load_interactions(config.interactions, parse_triplet_format(config.format), config.min_rating);
  return split_strong_generalization(set, config.holdout_users, config.foldin_fraction, config.split_seed);
}

ojson to_json(const EpochDiagnostics& d) {
  ojson j;
  j["epoch"] = d.epoch;
  j["objective"] = d.objective;
  j["xi"] = d.xi;
  j["sum_z"] = d.sum_z;
  j["xi_iters"] = d.xi_iters;
  j["xi_grad"] = d.xi_grad;
  j["xi_halvings"] = d.xi_halvings;
  j["residual_users"] = d.residual_users;
  j["residual_items"] = d.residual_items;
  j["residual_xi"] = d.residual_xi;
  j["residual_dual"] = d.residual_dual;
  j["active_users"] = d.active_users;
  j["wall_time"] = d.wall_time;
  return j;
}

Trainer train_model(const RunConfig& config, const InteractionSet& train,
                    const std::function<void(const EpochDiagnostics&, const ModelState&)>& on_epoch) {
  SolverConfig solver = config.solver;
  solver.seed = config.seed;
  Trainer trainer(train, solver);
  for (int t = 0; t < solver.epochs; ++t) {
    const auto diag = trainer.step();
    if (on_epoch) on_epoch(diag, trainer.state());
  }
  return trainer;
}

int cmd_split(const RunConfig& config) {
  if (config.interactions.empty()) throw ConfigError("split needs data.interactions");
  if (!fs::exists(config.interactions)) throw ConfigError("interaction file not found: " + config.interactions.string());
  const auto set = load_interactions(config.interactions, parse_triplet_format(config.format), config.min_rating);
  const auto bundle = split_strong_generalization(set, config.holdout_users, config.foldin_fraction, config.split_seed);
  fs::create_directories(config.out);
  write_split_bundle(bundle, config.out);
  std::cout << "train users " << bundle.train.num_users() << ", items " << bundle.train.num_items()
            << ", validation users " << bundle.validation.size() << ", test users " << bundle.test.size() << '\n'
            << "dropped: validation users " << bundle.counters.dropped_validation_users << ", test users "
            << bundle.counters.dropped_test_users << ", unseen interactions "
            << bundle.counters.dropped_unseen_interactions << '\n';
  return kOk;
}

int cmd_train(const RunConfig& config) {
  config.validate();
  const auto bundle = load_split(config);
  fs::create_directories(config.out);
  write_text(config.out / "config.ini", serialize_config(config));

  std::ofstream log(config.out / "train_log.jsonl");
  if (!log) throw DataError("cannot write " + (config.out / "train_log.jsonl").string());
  std::optional<Trainer> trainer;
  try {
    trainer.emplace(train_model(config, bundle.train, [&](const EpochDiagnostics& d, const ModelState& state) {
      log << to_json(d).dump() << '\n';
      log.flush();
      std::cerr << "epoch " << d.epoch << " objective " << d.objective << " xi " << d.xi << '\n';
      if (config.checkpoint_every > 0 && d.epoch % config.checkpoint_every == 0) {
        write_checkpoint(state, bundle.train, config, d.epoch,
                         config.out / ("checkpoint_epoch_" + std::to_string(d.epoch) + ".bin"));
      }
    }));
  } catch (const DivergenceError& e) {
    const fs::path diag = config.out / "divergence.json";
    ojson j;
    j["error"] = e.what();
    j["epoch"] = e.epoch();
    j["objective"] = std::isfinite(e.objective()) ? ojson(e.objective()) : ojson(std::to_string(e.objective()));
    j["config_hash"] = hex64(config_hash(config));
    write_text(diag, j.dump(2) + "\n");
    std::cerr << "error: training diverged at epoch " << e.epoch() << " (" << e.what() << "); diagnostics in "
              << diag.string() << '\n';
    return kDiverged;
  }

  const fs::path ckpt = config.out / "model.bin";
  write_checkpoint(trainer->state(), bundle.train, config, config.solver.epochs, ckpt);
  ojson manifest;
  manifest["version"] = version_string();
  manifest["config_hash"] = hex64(config_hash(config));
  manifest["seed"] = config.seed;
  manifest["split_seed"] = config.split_seed;
  manifest["solver"] = to_string(config.solver.solver);
  manifest["epochs"] = config.solver.epochs;
  manifest["deterministic"] = config.deterministic;
  manifest["checkpoint"] = ckpt.filename().string();
  manifest["checkpoint_hash"] = hex64(fnv1a64(read_file(ckpt)));
  manifest["train_users"] = bundle.train.num_users();
  manifest["train_items"] = bundle.train.num_items();
  manifest["config"] = serialize_config(config);
  write_text(config.out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << ckpt.string() << " (" << config.solver.epochs << " epochs)\n";
  return kOk;
}

int cmd_evaluate(const RunConfig& config, const fs::path& checkpoint, const std::string& which) {
  if (which != "test" && which != "validation") throw ConfigError("--set must be test or validation");
  config.validate();
  if (!fs::exists(checkpoint)) throw ConfigError("checkpoint not found: " + checkpoint.string());
  const ModelState state = load_checkpoint(checkpoint);
  const auto bundle = load_split(config);

  std::vector<std::string> labels = bundle.train.item_labels();
  if (fs::exists(sidecar_of(checkpoint))) {
    const auto side = ojson::parse(read_file(sidecar_of(checkpoint)));
    labels = side.at("item_labels").get<std::vector<std::string>>();
  }
  if (state.num_items() != labels.size() || state.dim() != config.solver.dim) {
    throw ConfigError("dimension mismatch: checkpoint has " + std::to_string(state.num_items()) + " items and d=" +
                      std::to_string(state.dim()) + ", config expects " + std::to_string(labels.size()) +
                      " items and d=" + std::to_string(config.solver.dim));
  }
  std::size_t dropped = 0;
  const auto& source = which == "test" ? bundle.test : bundle.validation;
  const auto users = labels == bundle.train.item_labels()
                         ? source
                         : remap_items(source, bundle.train.item_labels(), labels, dropped);

  auto report = evaluate(state.items(), users, FoldInConstants::from(config.solver), config.ks, config.tail_alphas);
  report.dropped_users += dropped;
  fs::create_directories(config.out);
  ojson j = to_json(report);
  j["set"] = which;
  j["checkpoint"] = checkpoint.string();
  j["split_dropped_users"] = which == "test" ? bundle.counters.dropped_test_users
                                             : bundle.counters.dropped_validation_users;
  write_text(config.out / ("report_" + which + ".json"), j.dump(2) + "\n");
  write_per_user_csv(report, config.out / ("per_user_" + which + ".csv"));
  print_report(report, std::cout);
  return kOk;
}

int cmd_sweep(const RunConfig& config, const fs::path& grid_path) {
  config.validate();
  const auto entries = parse_key_values(read_file(grid_path));
  std::vector<std::string> keys;
  std::map<std::string, std::vector<std::string>> values;
  for (const auto& [k, v] : entries) {
    if (!values.contains(k)) keys.push_back(k);
    auto& list = values[k];
    for (const auto& x : split_list(v)) list.push_back(x);
  }
  if (keys.empty()) throw ConfigError("grid file " + grid_path.string() + " defines no parameters");
  for (const auto& k : keys) {
    if (values[k].empty()) throw ConfigError("grid parameter " + k + " has no values");
    // Validate key names up front so a typo fails the sweep instead of every point.
    RunConfig probe = config;
    try {
      apply_setting(probe, k, values[k].front());
    } catch (const ConfigError& e) {
      if (std::string(e.what()).starts_with("unknown config key")) throw;
    }
  }

  std::vector<std::vector<std::string>> points{{}};
  for (const auto& k : keys) {
    std::vector<std::vector<std::string>> next;
    for (const auto& p : points) {
      for (const auto& v : values[k]) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  std::set<std::vector<std::string>> seen;
  std::vector<std::vector<std::string>> unique;
  for (auto& p : points) {
    if (seen.insert(p).second) {
      unique.push_back(std::move(p));
    } else {
      std::string desc;
      for (std::size_t q = 0; q < keys.size(); ++q) desc += (q ? ", " : "") + keys[q] + "=" + p[q];
      std::cerr << "warning: duplicate grid point skipped (" << desc << ")\n";
    }
  }

  const auto bundle = load_split(config);
  const auto [metric, metric_k] = parse_metric(config.validation_metric);
  std::vector<std::size_t> ks = config.ks;
  if (std::find(ks.begin(), ks.end(), metric_k) == ks.end()) ks.push_back(metric_k);
  std::sort(ks.begin(), ks.end());
  std::vector<double> alphas = config.tail_alphas;
  if (std::find(alphas.begin(), alphas.end(), config.validation_alpha) == alphas.end()) {
    alphas.push_back(config.validation_alpha);
  }

  struct Row {
    std::vector<std::string> point;
    std::string status;
    std::string error;
    double score = 0.0;
    std::optional<MetricReport> report;
  };
  std::vector<Row> rows;
  for (const auto& p : unique) {
    Row row{p, "ok", {}, 0.0, std::nullopt};
    try {
      RunConfig c = config;
      for (std::size_t q = 0; q < keys.size(); ++q) apply_setting(c, keys[q], p[q]);
      c.validate(false);
      const auto trainer = train_model(c, bundle.train);
      row.report = evaluate(trainer.state().items(), bundle.validation, FoldInConstants::from(c.solver), ks, alphas);
      row.score = config.validation_alpha == 1.0 ? row.report->mean(metric, metric_k)
                                                 : row.report->tail(metric, metric_k, config.validation_alpha);
    } catch (const std::exception& e) {
      row.status = dynamic_cast<const DivergenceError*>(&e) ? "diverged" : "failed";
      row.error = e.what();
      std::cerr << "warning: grid point " << rows.size() << " " << row.status << ": " << e.what() << '\n';
    }
    rows.push_back(std::move(row));
  }

  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].status == "ok" && (!best || rows[r].score > rows[*best].score)) best = r;
  }

  fs::create_directories(config.out);
  std::ofstream csv(config.out / "sweep.csv");
  if (!csv) throw DataError("cannot write " + (config.out / "sweep.csv").string());
  csv.precision(17);
  csv << "point";
  for (const auto& k : keys) csv << ',' << k;
  csv << ",status,selection_score";
  for (const auto k : ks) csv << ",recall@" << k << ",ndcg@" << k;
  for (const double a : alphas)
    for (const auto k : ks) csv << ",tail" << alpha_label(a) << "_recall@" << k;
  csv << ",best,error\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    csv << r;
    for (const auto& v : row.point) csv << ',' << v;
    csv << ',' << row.status << ',';
    if (row.report) csv << row.score;
    for (const auto k : ks) {
      csv << ',';
      if (row.report) csv << row.report->mean("recall", k);
      csv << ',';
      if (row.report) csv << row.report->mean("ndcg", k);
    }
    for (const double a : alphas) {
      for (const auto k : ks) {
        csv << ',';
        if (row.report) csv << row.report->tail("recall", k, a);
      }
    }
    std::string err = row.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    csv << ',' << (best && *best == r ? 1 : 0) << ',' << err << '\n';
  }
  std::cout << rows.size() << " grid points, "
            << std::count_if(rows.begin(), rows.end(), [](const Row& r) { return r.status != "ok"; })
            << " failed";
  if (best) std::cout << "; best point " << *best << " (" << config.validation_metric << " = " << rows[*best].score << ")";
  std::cout << '\n';
  return kOk;
}

int cmd_synth(const SyntheticConfig& config, const fs::path& out) {
  const auto data = generate_two_population(config);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_pairs_tsv(data.interactions, out);
  std::cout << "wrote " << data.interactions.nnz() << " interactions for " << data.interactions.num_users()
            << " users to " << out.string() << '\n';
  return kOk;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace safer::app
