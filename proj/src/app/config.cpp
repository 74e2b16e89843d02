#include "safer/app/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "safer/errors.hpp"

namespace safer::app {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  if (v.empty()) return {};
  std::filesystem::path p(v);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (const auto hash = line.find(" #"); hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "missing key");
    out.emplace_back(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
  }
  return out;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& v, const std::filesystem::path& base) {
  auto& s = c.solver;
  if (key == "schema") {
    if (to_int(key, v) != kConfigSchema) throw ConfigError("unsupported config schema " + v);
  } else if (key == "data.interactions") {
    c.interactions = resolve(base, v);
  } else if (key == "data.format") {
    parse_triplet_format(v);
    c.format = v;
  } else if (key == "data.min_rating") {
    if (v.empty()) c.min_rating.reset();
    else c.min_rating = to_double(key, v);
  } else if (key == "data.split_dir") {
    c.split_dir = resolve(base, v);
  } else if (key == "split.holdout_users") {
    c.holdout_users = to_u64(key, v);
  } else if (key == "split.foldin_fraction") {
    c.foldin_fraction = to_double(key, v);
  } else if (key == "split.seed") {
    c.split_seed = to_u64(key, v);
  } else if (key == "solver.name") {
    s.solver = parse_solver_kind(v);
  } else if (key == "solver.alpha") {
    s.alpha = to_double(key, v);
  } else if (key == "solver.beta0") {
    s.beta0 = to_double(key, v);
  } else if (key == "solver.lambda") {
    s.lambda = to_double(key, v);
  } else if (key == "solver.kernel") {
    s.kernel = Kernel(parse_kernel_family(v), s.kernel.bandwidth());
  } else if (key == "solver.bandwidth") {
    s.kernel = Kernel(s.kernel.family(), to_double(key, v));
  } else if (key == "solver.dim") {
    s.dim = to_u64(key, v);
  } else if (key == "solver.epochs") {
    s.epochs = to_int(key, v);
  } else if (key == "solver.xi_iters") {
    s.xi.max_iters = to_int(key, v);
  } else if (key == "solver.subsample") {
    s.xi.subsample_size = to_u64(key, v);
  } else if (key == "solver.armijo_c") {
    s.xi.armijo_c = to_double(key, v);
  } else if (key == "solver.grad_tol") {
    s.xi.grad_tol = to_double(key, v);
  } else if (key == "solver.block_size") {
    s.block_size = to_u64(key, v);
  } else if (key == "solver.learning_rate") {
    s.learning_rate = to_double(key, v);
  } else if (key == "solver.adam") {
    s.adam = to_bool(key, v);
  } else if (key == "solver.ials_exponent") {
    s.ials_exponent = to_double(key, v);
  } else if (key == "solver.init_sigma") {
    s.init_sigma = to_double(key, v);
  } else if (key == "solver.divergence_threshold") {
    s.divergence_threshold = to_double(key, v);
  } else if (key == "eval.ks") {
    c.ks.clear();
    for (const auto& x : split_list(v)) c.ks.push_back(to_u64(key, x));
  } else if (key == "eval.alphas") {
    c.tail_alphas.clear();
    for (const auto& x : split_list(v)) c.tail_alphas.push_back(to_double(key, x));
  } else if (key == "eval.validation_metric") {
    c.validation_metric = v;
  } else if (key == "eval.validation_alpha") {
    c.validation_alpha = to_double(key, v);
  } else if (key == "run.seed") {
    c.seed = to_u64(key, v);
  } else if (key == "run.threads") {
    c.threads = to_int(key, v);
  } else if (key == "run.deterministic") {
    c.deterministic = to_bool(key, v);
  } else if (key == "run.out") {
    c.out = resolve(base, v);
  } else if (key == "run.checkpoint_every") {
    c.checkpoint_every = to_int(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
  s.seed = c.seed;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  for (const auto& [k, v] : parse_key_values(text)) apply_setting(c, k, v, base_dir);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string serialize_config(const RunConfig& c) {
  const auto& s = c.solver;
  std::ostringstream o;
  o << "schema = " << kConfigSchema << "\n\n[data]\n";
  if (!c.interactions.empty()) o << "interactions = " << c.interactions.string() << '\n';
  o << "format = " << c.format << '\n';
  if (c.min_rating) o << "min_rating = " << fmt(*c.min_rating) << '\n';
  if (!c.split_dir.empty()) o << "split_dir = " << c.split_dir.string() << '\n';
  o << "\n[split]\nholdout_users = " << c.holdout_users << "\nfoldin_fraction = " << fmt(c.foldin_fraction)
    << "\nseed = " << c.split_seed << '\n';
  o << "\n[solver]\nname = " << to_string(s.solver) << "\nalpha = " << fmt(s.alpha) << "\nbeta0 = " << fmt(s.beta0)
    << "\nlambda = " << fmt(s.lambda) << "\nkernel = " << to_string(s.kernel.family())
    << "\nbandwidth = " << fmt(s.kernel.bandwidth()) << "\ndim = " << s.dim << "\nepochs = " << s.epochs
    << "\nxi_iters = " << s.xi.max_iters << "\nsubsample = " << s.xi.subsample_size
    << "\narmijo_c = " << fmt(s.xi.armijo_c) << "\ngrad_tol = " << fmt(s.xi.grad_tol)
    << "\nblock_size = " << s.block_size << "\nlearning_rate = " << fmt(s.learning_rate)
    << "\nadam = " << (s.adam ? "true" : "false") << "\nials_exponent = " << fmt(s.ials_exponent)
    << "\ninit_sigma = " << fmt(s.init_sigma) << "\ndivergence_threshold = " << fmt(s.divergence_threshold)
    << '\n';
  o << "\n[eval]\nks = ";
  for (std::size_t p = 0; p < c.ks.size(); ++p) o << (p ? ", " : "") << c.ks[p];
  o << "\nalphas = ";
  for (std::size_t p = 0; p < c.tail_alphas.size(); ++p) o << (p ? ", " : "") << fmt(c.tail_alphas[p]);
  o << "\nvalidation_metric = " << c.validation_metric << "\nvalidation_alpha = " << fmt(c.validation_alpha)
    << '\n';
  o << "\n[run]\nseed = " << c.seed << "\nthreads = " << c.threads
    << "\ndeterministic = " << (c.deterministic ? "true" : "false") << "\nout = " << c.out.string()
    << "\ncheckpoint_every = " << c.checkpoint_every << '\n';
  return o.str();
}

void RunConfig::validate(bool check_paths) const {
  solver.validate();
  if (interactions.empty() && split_dir.empty()) throw ConfigError("set data.interactions or data.split_dir");
  if (check_paths) {
    if (!split_dir.empty()) {
      for (const char* f : {"train.tsv", "validation.tsv", "test.tsv"}) {
        if (!std::filesystem::exists(split_dir / f)) throw ConfigError("missing " + (split_dir / f).string());
      }
    } else if (!std::filesystem::exists(interactions)) {
      throw ConfigError("interaction file not found: " + interactions.string());
    }
  }
  if (!(foldin_fraction > 0.0 && foldin_fraction < 1.0)) throw ConfigError("split.foldin_fraction must lie in (0, 1)");
  if (ks.empty()) throw ConfigError("eval.ks must not be empty");
  for (const auto k : ks)
    if (k < 1) throw ConfigError("eval.ks entries must be at least 1");
  for (const double a : tail_alphas)
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("eval.alphas entries must lie in (0, 1]");
  if (!(validation_alpha > 0.0 && validation_alpha <= 1.0)) throw ConfigError("eval.validation_alpha must lie in (0, 1]");
  const auto at = validation_metric.find('@');
  const std::string name = validation_metric.substr(0, at);
  if (at == std::string::npos || (name != "recall" && name != "ndcg")) {
    throw ConfigError("eval.validation_metric must look like recall@K or ndcg@K");
  }
  const std::string kstr = validation_metric.substr(at + 1);
  std::size_t k = 0;
  const auto [ptr, ec] = std::from_chars(kstr.data(), kstr.data() + kstr.size(), k);
  if (ec != std::errc() || ptr != kstr.data() + kstr.size() || k < 1) {
    throw ConfigError("eval.validation_metric has an invalid K");
  }
  if (threads < 0) throw ConfigError("run.threads must be nonnegative");
  if (checkpoint_every < 0) throw ConfigError("run.checkpoint_every must be nonnegative");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& config) { return fnv1a64(serialize_config(config)); }

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace safer::app
