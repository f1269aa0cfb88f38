#include "csqbm/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <type_traits>

#include "csqbm/errors.hpp"

namespace csqbm {

namespace {

std::string where(const std::string& source, const YAML::Mark& mark) {
  if (mark.line < 0) return source + " (override)";
  return source + ":" + std::to_string(mark.line + 1);
}

/// A mapping node whose keys are consumed one by one; finish() rejects the rest.
class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string* source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, "must be a mapping");
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    throw ConfigError(where(*source_, at.Mark()) + ": " + path_ + ": " + what);
  }

  bool is_map() const { return node_ && node_.IsMap(); }
  bool has(const std::string& key) const {
    if (!is_map()) return false;
    const YAML::Node& n = node_;
    return static_cast<bool>(n[key]);
  }

  YAML::Node take(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return YAML::Node(YAML::NodeType::Undefined);
    const YAML::Node& n = node_;
    return n[key];
  }

  template <class T>
  void read(const std::string& key, T& out) {
    YAML::Node v = take(key);
    if (!v) return;
    out = convert<T>(v, key);
  }

  template <class T>
  void read_list(const std::string& key, std::vector<T>& out) {
    YAML::Node v = take(key);
    if (!v) return;
    if (!v.IsSequence()) fail(v, key + " must be a list");
    out.clear();
    for (const auto& item : v) out.push_back(convert<T>(item, key));
  }

  Section child(const std::string& key) { return Section(take(key), path_ + "." + key, source_); }

  void finish() const {
    if (!is_map()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(kv.first, "unknown key '" + key + "'");
    }
  }

  const YAML::Node& node() const { return node_; }
  const std::string& path() const { return path_; }
  const std::string* source() const { return source_; }

 private:
  template <class T>
  T convert(const YAML::Node& v, const std::string& key) const {
    if (!v.IsScalar()) fail(v, key + " must be a scalar");
    const std::string text = v.Scalar();
    if constexpr (std::is_same_v<T, bool>) {
      if (text == "true") return true;
      if (text == "false") return false;
      fail(v, key + " must be true or false, got '" + text + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, char>) {
      if (text.size() != 1) fail(v, key + " must be a single character");
      return text[0];
    } else if constexpr (std::is_floating_point_v<T>) {
      T x{};
      const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(x)) {
        fail(v, key + " must be a finite number, got '" + text + "'");
      }
      return x;
    } else {
      static_assert(std::is_integral_v<T>);
      T x{};
      const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        fail(v, key + " must be a non-negative integer, got '" + text + "'");
      }
      return x;
    }
  }

  YAML::Node node_;
  std::string path_;
  const std::string* source_;
  std::set<std::string> used_;
};

void read_schedule(Section& parent, const std::string& key, ScheduleConfig& out) {
  const bool present = parent.has(key);
  Section s = parent.child(key);
  if (!present) return;
  s.read("start", out.start);
  s.read("end", out.end);
  s.read("episodes", out.episodes);
  s.finish();
}

ModelConfig read_model(Section s) {
  ModelConfig c;
  s.read("n", c.n);
  s.read("m", c.m);
  s.read("family", c.family);
  s.read("coupling_basis", c.coupling_basis);
  s.read("beta", c.beta);
  s.read_list("prior_mu", c.prior_mu);
  s.read_list("prior_sigma", c.prior_sigma);
  s.read("w_init_scale", c.w_init_scale);
  s.read("strict_sampler", c.strict_sampler);
  s.read("quadratic_coupling", c.quadratic_coupling);
  s.read("theta_trainable", c.theta_trainable);
  s.read("offset_trainable", c.offset_trainable);

  Section hidden = s.child("hidden");
  if (hidden.has("terms") && hidden.has("random")) {
    hidden.fail(hidden.node(), "give either terms or random, not both");
  }
  YAML::Node terms = hidden.take("terms");
  if (terms) {
    if (!terms.IsSequence() || terms.size() == 0) hidden.fail(terms, "terms must be a non-empty list");
    for (std::size_t k = 0; k < terms.size(); ++k) {
      Section t(terms[k], hidden.path() + ".terms[" + std::to_string(k) + "]", hidden.source());
      HiddenTermConfig term;
      if (!t.has("coefficient") || !t.has("qubits") || !t.has("paulis")) {
        t.fail(terms[k], "needs coefficient, qubits and paulis");
      }
      t.read("coefficient", term.coefficient);
      t.read_list("qubits", term.qubits);
      t.read("paulis", term.paulis);
      t.finish();
      c.hidden_terms.push_back(std::move(term));
    }
  }
  if (hidden.has("random")) {
    Section r = hidden.child("random");
    r.read("fields", c.hidden_random.fields);
    r.read("pairs", c.hidden_random.pairs);
    r.read("scale", c.hidden_random.scale);
    r.finish();
  } else {
    hidden.take("random");
  }
  hidden.finish();
  s.finish();
  return c;
}

AgentSection read_agent(Section s) {
  AgentSection c;
  s.read("alpha", c.alpha);
  s.read("gamma", c.gamma);
  s.read("sweeps", c.sweeps);
  s.read("candidates", c.candidates);
  s.read("explore_mode", c.explore_mode);
  read_schedule(s, "epsilon", c.epsilon);
  read_schedule(s, "explore_beta", c.explore_beta);
  s.read("batch_size", c.batch_size);
  s.read("replay_capacity", c.replay_capacity);
  s.read("warmup", c.warmup);
  s.read("target_sync", c.target_sync);
  s.read("divergence_ceiling", c.divergence_ceiling);
  s.read("divergence_patience", c.divergence_patience);
  s.finish();
  return c;
}

EnvConfig read_env(Section s) {
  EnvConfig c;
  YAML::Node name = s.take("name");
  if (!name) s.fail(s.node(), "name is required (bandit or steerline)");
  c.name = name.Scalar();
  if (c.name == "bandit") {
    s.read("slope", c.slope);
  } else if (c.name == "steerline") {
    s.read("n_segments", c.n_segments);
    s.read("kick_gain", c.kick_gain);
    s.read("horizon", c.horizon);
    s.read("done_threshold", c.done_threshold);
  } else {
    s.fail(name, "unknown environment '" + c.name + "' (expected bandit or steerline)");
  }
  s.read("noise_sigma", c.noise_sigma);
  s.read("action_limit", c.action_limit);
  s.finish();
  return c;
}

RunConfig read_run(Section s) {
  RunConfig c;
  s.read("episodes", c.episodes);
  s.read("eval_interval", c.eval_interval);
  s.read("eval_episodes", c.eval_episodes);
  s.read("out_dir", c.out_dir);
  s.read("root_seed", c.root_seed);
  s.read("checkpoint_interval", c.checkpoint_interval);
  s.read("record_wall_time", c.record_wall_time);
  s.finish();
  return c;
}

void apply_override(YAML::Node& root, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + text + "' must look like section.key=value");
  }
  const std::string path = text.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(text.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError("override '" + text + "': " + e.msg);
  }
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("override '" + text + "' has an empty key");
    parts.push_back(part);
  }
  YAML::Node cur = root;
  for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
    if (cur[parts[k]] && !cur[parts[k]].IsMap()) {
      throw ConfigError("override '" + text + "': " + parts[k] + " is not a section");
    }
    YAML::Node next = cur[parts[k]];
    cur.reset(next);
  }
  cur[parts.back()] = value;
}

std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, res.ptr);
  // Keep a decimal point so the value reads back as a float in other tools.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source,
                              const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(source, e.mark) + ": " + e.msg);
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError(where(source, root.Mark()) + ": top level must be a mapping");
  for (const auto& o : overrides) apply_override(root, o);

  Section top(root, "config", &source);
  ExperimentConfig c;
  YAML::Node version = top.take("version");
  if (!version) throw ConfigError(source + ": missing required key 'version'");
  top.read("version", c.version);
  if (c.version != kConfigVersion) {
    top.fail(version, "unsupported version " + std::to_string(c.version) + " (expected " +
                          std::to_string(kConfigVersion) + ")");
  }
  c.model = read_model(top.child("model"));
  c.agent = read_agent(top.child("agent"));
  if (!top.has("env")) throw ConfigError(source + ": missing required section 'env'");
  c.env = read_env(top.child("env"));
  c.run = read_run(top.child("run"));
  top.finish();

  try {
    validate_config(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), overrides);
}

std::string config_to_yaml(const ExperimentConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "version" << YAML::Value << c.version;

  const ModelConfig& m = c.model;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n" << YAML::Value << m.n;
  out << YAML::Key << "m" << YAML::Value << m.m;
  out << YAML::Key << "family" << YAML::Value << m.family;
  out << YAML::Key << "coupling_basis" << YAML::Value << std::string(1, m.coupling_basis);
  out << YAML::Key << "beta" << YAML::Value << fmt(m.beta);
  out << YAML::Key << "prior_mu" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double x : m.prior_mu) out << fmt(x);
  out << YAML::EndSeq;
  out << YAML::Key << "prior_sigma" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double x : m.prior_sigma) out << fmt(x);
  out << YAML::EndSeq;
  out << YAML::Key << "w_init_scale" << YAML::Value << fmt(m.w_init_scale);
  out << YAML::Key << "hidden" << YAML::Value << YAML::BeginMap;
  if (!m.hidden_terms.empty()) {
    out << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : m.hidden_terms) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "coefficient" << YAML::Value << fmt(t.coefficient);
      out << YAML::Key << "qubits" << YAML::Value << YAML::Flow << t.qubits;
      out << YAML::Key << "paulis" << YAML::Value << t.paulis;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  } else {
    out << YAML::Key << "random" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "fields" << YAML::Value << m.hidden_random.fields;
    out << YAML::Key << "pairs" << YAML::Value << m.hidden_random.pairs;
    out << YAML::Key << "scale" << YAML::Value << fmt(m.hidden_random.scale);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::Key << "strict_sampler" << YAML::Value << m.strict_sampler;
  out << YAML::Key << "quadratic_coupling" << YAML::Value << m.quadratic_coupling;
  out << YAML::Key << "theta_trainable" << YAML::Value << m.theta_trainable;
  out << YAML::Key << "offset_trainable" << YAML::Value << m.offset_trainable;
  out << YAML::EndMap;

  const AgentSection& a = c.agent;
  auto schedule = [&](const char* key, const ScheduleConfig& s) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "start" << YAML::Value << fmt(s.start);
    out << YAML::Key << "end" << YAML::Value << fmt(s.end);
    out << YAML::Key << "episodes" << YAML::Value << s.episodes;
    out << YAML::EndMap;
  };
  out << YAML::Key << "agent" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "alpha" << YAML::Value << fmt(a.alpha);
  out << YAML::Key << "gamma" << YAML::Value << fmt(a.gamma);
  out << YAML::Key << "sweeps" << YAML::Value << a.sweeps;
  out << YAML::Key << "candidates" << YAML::Value << a.candidates;
  out << YAML::Key << "explore_mode" << YAML::Value << a.explore_mode;
  schedule("epsilon", a.epsilon);
  schedule("explore_beta", a.explore_beta);
  out << YAML::Key << "batch_size" << YAML::Value << a.batch_size;
  out << YAML::Key << "replay_capacity" << YAML::Value << a.replay_capacity;
  out << YAML::Key << "warmup" << YAML::Value << a.warmup;
  out << YAML::Key << "target_sync" << YAML::Value << a.target_sync;
  out << YAML::Key << "divergence_ceiling" << YAML::Value << fmt(a.divergence_ceiling);
  out << YAML::Key << "divergence_patience" << YAML::Value << a.divergence_patience;
  out << YAML::EndMap;

  const EnvConfig& e = c.env;
  out << YAML::Key << "env" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << e.name;
  if (e.name == "bandit") {
    out << YAML::Key << "slope" << YAML::Value << fmt(e.slope);
  } else {
    out << YAML::Key << "n_segments" << YAML::Value << e.n_segments;
    out << YAML::Key << "kick_gain" << YAML::Value << fmt(e.kick_gain);
    out << YAML::Key << "horizon" << YAML::Value << e.horizon;
    out << YAML::Key << "done_threshold" << YAML::Value << fmt(e.done_threshold);
  }
  out << YAML::Key << "noise_sigma" << YAML::Value << fmt(e.noise_sigma);
  out << YAML::Key << "action_limit" << YAML::Value << fmt(e.action_limit);
  out << YAML::EndMap;

  const RunConfig& r = c.run;
  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "episodes" << YAML::Value << r.episodes;
  out << YAML::Key << "eval_interval" << YAML::Value << r.eval_interval;
  out << YAML::Key << "eval_episodes" << YAML::Value << r.eval_episodes;
  out << YAML::Key << "out_dir" << YAML::Value << YAML::DoubleQuoted << r.out_dir;
  out << YAML::Key << "root_seed" << YAML::Value << r.root_seed;
  out << YAML::Key << "checkpoint_interval" << YAML::Value << r.checkpoint_interval;
  out << YAML::Key << "record_wall_time" << YAML::Value << r.record_wall_time;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void validate_config(const ExperimentConfig& c) {
  const ModelConfig& m = c.model;
  if (m.family != "gaussian") throw InvalidArgument("model.family: only 'gaussian' is available");
  if (m.n == 0) throw InvalidArgument("model.n must be positive");
  if (m.m == 0 || m.m > 16) throw InvalidArgument("model.m must be in 1..16");
  parse_pauli(m.coupling_basis);
  if (!(m.beta > 0.0)) throw InvalidArgument("model.beta must be positive");
  if (m.prior_mu.size() != m.n || m.prior_sigma.size() != m.n) {
    throw InvalidArgument("model.prior_mu and model.prior_sigma need n = " + std::to_string(m.n) +
                          " entries each");
  }
  for (double s : m.prior_sigma) {
    if (!(s > 0.0)) throw InvalidArgument("model.prior_sigma entries must be positive");
  }
  if (!(m.w_init_scale >= 0.0)) throw InvalidArgument("model.w_init_scale must be non-negative");
  if (m.hidden_terms.empty() && !(m.hidden_random.scale >= 0.0)) {
    throw InvalidArgument("model.hidden.random.scale must be non-negative");
  }

  make_agent_config(c.agent).validate();

  const EnvConfig& e = c.env;
  if (!(e.noise_sigma >= 0.0)) throw InvalidArgument("env.noise_sigma must be non-negative");
  if (!(e.action_limit > 0.0)) throw InvalidArgument("env.action_limit must be positive");
  std::size_t state_dim = 1;
  std::size_t action_dim = 1;
  if (e.name == "steerline") {
    if (e.n_segments == 0) throw InvalidArgument("env.n_segments must be at least 1");
    if (e.horizon == 0) throw InvalidArgument("env.horizon must be positive");
    if (e.kick_gain == 0.0) throw InvalidArgument("env.kick_gain must be nonzero");
    state_dim = action_dim = e.n_segments;
  } else if (e.name != "bandit") {
    throw InvalidArgument("env.name must be bandit or steerline");
  }
  if (m.n != state_dim + action_dim) {
    throw InvalidArgument("model.n = " + std::to_string(m.n) + " but env '" + e.name + "' needs " +
                          std::to_string(state_dim + action_dim) + " visible units");
  }
  if (c.run.out_dir.empty()) throw InvalidArgument("run.out_dir must not be empty");

  // Builds the model once with a fixed seed so hidden-term and flag errors
  // surface at load time rather than mid-run.
  build_model(m, 0);
}

AgentConfig make_agent_config(const AgentSection& s) {
  AgentConfig a;
  a.alpha = s.alpha;
  a.gamma = s.gamma;
  a.sweeps = s.sweeps;
  a.candidates = s.candidates;
  a.explore_mode = parse_explore_mode(s.explore_mode);
  a.epsilon = LinearSchedule{s.epsilon.start, s.epsilon.end, s.epsilon.episodes};
  a.explore_beta = LinearSchedule{s.explore_beta.start, s.explore_beta.end, s.explore_beta.episodes};
  a.batch_size = s.batch_size;
  a.replay_capacity = s.replay_capacity;
  a.warmup = s.warmup;
  a.target_sync = s.target_sync;
  a.divergence_ceiling = s.divergence_ceiling;
  a.divergence_patience = s.divergence_patience;
  return a;
}

CsqbmModel build_model(const ModelConfig& c, std::uint64_t root_seed) {
  Rng rng = split_rng(root_seed, Stream::kInit);
  auto uniform = [&](double scale) { return scale * (2.0 * uniform01(rng) - 1.0); };
  const PauliOp basis = parse_pauli(c.coupling_basis);

  std::vector<PauliTerm> terms;
  if (!c.hidden_terms.empty()) {
    for (const auto& t : c.hidden_terms) {
      if (t.qubits.size() != t.paulis.size()) {
        throw InvalidArgument("hidden term qubits and paulis differ in length");
      }
      PauliTerm term{t.coefficient, {}};
      for (std::size_t k = 0; k < t.qubits.size(); ++k) {
        term.factors.push_back(PauliFactor{t.qubits[k], parse_pauli(t.paulis[k])});
      }
      terms.push_back(std::move(term));
    }
  } else {
    const HiddenRandomConfig& r = c.hidden_random;
    if (r.fields) {
      for (std::size_t j = 0; j < c.m; ++j) terms.push_back(PauliTerm::single(uniform(r.scale), basis, j));
    }
    if (r.pairs) {
      for (std::size_t i = 0; i < c.m; ++i) {
        for (std::size_t j = i + 1; j < c.m; ++j) {
          terms.push_back(PauliTerm::pair(uniform(r.scale), basis, i, basis, j));
        }
      }
    }
  }

  ExpFamilyPrior prior = ExpFamilyPrior::gaussian(c.prior_mu, c.prior_sigma);
  CsqbmModel model = make_model(std::move(prior), c.m, std::move(terms), basis, c.beta);
  model.strict_sampler = c.strict_sampler;
  model.quadratic_coupling = c.quadratic_coupling;
  model.theta_trainable = c.theta_trainable;
  model.offset_trainable = c.offset_trainable;
  const RealVector mask = model.trainable_mask();
  RealVector w = model.flat_weights();
  for (Eigen::Index i = 0; i < model.coupling.size(); ++i) {
    if (mask(i) != 0.0) w(i) = uniform(c.w_init_scale);
  }
  model = model.with_flat_weights(w);
  model.validate();
  return model;
}

std::unique_ptr<Environment> build_env(const EnvConfig& c, std::uint64_t root_seed,
                                       std::uint32_t worker) {
  Rng seeder = split_rng(root_seed, Stream::kEnvironment, worker + 1);
  const std::uint64_t noise_seed = seeder();
  if (c.name == "bandit") {
    return std::make_unique<ContinuousBandit>(c.slope, c.noise_sigma, c.action_limit, noise_seed);
  }
  if (c.name == "steerline") {
    return std::make_unique<SteerLine>(c.n_segments, c.kick_gain, c.noise_sigma, c.horizon,
                                       c.action_limit, c.done_threshold, noise_seed);
  }
  throw InvalidArgument("unknown environment '" + c.name + "'");
}

}  // namespace csqbm
