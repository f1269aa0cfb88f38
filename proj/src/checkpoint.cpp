#include "csqbm/checkpoint.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "csqbm/errors.hpp"

namespace csqbm {

using nlohmann::json;

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  const CsqbmModel& m = ckpt.model;
  m.validate();
  json doc;
  doc["format"] = "csqbm-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["family"] = m.prior.family().tag();
  doc["n"] = m.num_visible();
  doc["m"] = m.num_hidden();
  doc["coupling_basis"] = std::string(1, pauli_char(m.coupling_basis));
  doc["beta"] = m.beta;
  doc["strict_sampler"] = m.strict_sampler;
  doc["quadratic_coupling"] = m.quadratic_coupling;
  doc["theta_trainable"] = m.theta_trainable;
  doc["offset_trainable"] = m.offset_trainable;
  doc["theta"] = std::vector<double>(m.prior.params().theta.data(),
                                     m.prior.params().theta.data() + m.prior.params().dim());
  doc["log_base_offset"] = m.prior.log_base_offset();
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(m.coupling.size()));
  for (Eigen::Index i = 0; i < m.coupling.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.coupling.cols(); ++j) w.push_back(m.coupling(i, j));
  }
  doc["W"] = w;
  json terms = json::array();
  for (const auto& t : m.hidden.terms) {
    std::vector<std::size_t> qubits;
    std::string paulis;
    for (const auto& f : t.factors) {
      qubits.push_back(f.qubit);
      paulis.push_back(pauli_char(f.op));
    }
    terms.push_back({{"coefficient", t.coefficient}, {"qubits", qubits}, {"paulis", paulis}});
  }
  doc["hidden_terms"] = terms;
  doc["rng_label"] = ckpt.rng_label;
  doc["optimizer"] = {{"kind", ckpt.optimizer.kind}, {"steps", ckpt.optimizer.steps}};
  return doc.dump(2) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "csqbm-checkpoint") {
      throw ConfigError("not a csqbm checkpoint");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ConfigError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto n = doc.at("n").get<std::size_t>();
    const auto m = doc.at("m").get<std::size_t>();
    const auto basis = doc.at("coupling_basis").get<std::string>();
    if (basis.size() != 1) throw ConfigError("coupling_basis must be one of X, Y, Z");

    const auto theta = doc.at("theta").get<std::vector<double>>();
    NaturalParams params{Eigen::Map<const RealVector>(theta.data(),
                                                      static_cast<Eigen::Index>(theta.size()))};
    ExpFamilyPrior prior(family_from_tag(doc.at("family").get<std::string>()), std::move(params),
                         doc.at("log_base_offset").get<double>());
    if (prior.num_units() != n) throw ConfigError("theta length does not match n");

    std::vector<PauliTerm> terms;
    for (const auto& jt : doc.at("hidden_terms")) {
      const auto qubits = jt.at("qubits").get<std::vector<std::size_t>>();
      const auto paulis = jt.at("paulis").get<std::string>();
      if (qubits.size() != paulis.size()) {
        throw ConfigError("hidden term qubits and paulis differ in length");
      }
      PauliTerm t{jt.at("coefficient").get<double>(), {}};
      for (std::size_t k = 0; k < qubits.size(); ++k) {
        t.factors.push_back(PauliFactor{qubits[k], parse_pauli(paulis[k])});
      }
      terms.push_back(std::move(t));
    }

    const auto d = static_cast<Eigen::Index>(prior.stat_dim());
    const auto w = doc.at("W").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != d * static_cast<Eigen::Index>(m)) {
      throw ConfigError("W has " + std::to_string(w.size()) + " entries, expected " +
                        std::to_string(d * static_cast<Eigen::Index>(m)));
    }
    RealMatrix coupling(d, static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < coupling.cols(); ++j) {
        coupling(i, j) = w[static_cast<std::size_t>(i * coupling.cols() + j)];
      }
    }

    CsqbmModel model{std::move(prior), std::move(coupling),
                     PauliHamiltonianSpec{m, std::move(terms)}, parse_pauli(basis[0]),
                     doc.at("beta").get<double>()};
    model.strict_sampler = doc.at("strict_sampler").get<bool>();
    model.quadratic_coupling = doc.at("quadratic_coupling").get<bool>();
    model.theta_trainable = doc.at("theta_trainable").get<bool>();
    model.offset_trainable = doc.at("offset_trainable").get<bool>();
    model.validate();

    Checkpoint ckpt{std::move(model), doc.at("rng_label").get<std::string>(), {}};
    ckpt.optimizer.kind = doc.at("optimizer").at("kind").get<std::string>();
    ckpt.optimizer.steps = doc.at("optimizer").at("steps").get<std::uint64_t>();
    return ckpt;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string text = checkpoint_to_string(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << text;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

std::string checkpoint_hash(const Checkpoint& ckpt) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : checkpoint_to_string(ckpt)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace csqbm
