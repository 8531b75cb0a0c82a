// pdist: key rates, thresholds, small-n distillation simulations and PGM
// experiments for noisy-processed QKD, with machine-readable output.
//
// Exit codes: 0 success, 2 spec/validation error, 3 dimension-budget error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pdist/config.hpp"
#include "pdist/pdist.hpp"

namespace {

using pdist::json;

struct Common {
  std::string format = "json";
  std::string output;
  std::string config_path;
};

// Resolved spec = config file (if any) overlaid with explicitly set flags.
class SpecBuilder {
 public:
  explicit SpecBuilder(const Common& common) {
    if (!common.config_path.empty()) spec_ = pdist::cfg::load_file(common.config_path);
  }

  void set(const std::string& key, const json& value, bool flag_given) {
    if (flag_given || !spec_.contains(key)) spec_[key] = value;
  }

  json take(const std::string& command) {
    json ordered;
    ordered["command"] = command;
    for (auto& [k, v] : spec_.items())
      if (k != "command") ordered[k] = v;
    return ordered;
  }

 private:
  json spec_;
};

void emit(const json& report, const Common& common) {
  std::string text;
  if (common.format == "json") {
    text = report.dump(2);
    text.push_back('\n');
  } else if (common.format == "csv") {
    // one line per row for tabular results, a single header/value pair of
    // lines otherwise; non-scalar fields are skipped
    std::ostringstream out;
    const json& result = report.at("result");
    auto write_row = [&out](const json& row, bool header) {
      bool first = true;
      for (auto& [k, v] : row.items()) {
        if (!v.is_primitive()) continue;
        if (!first) out << ",";
        if (header)
          out << k;
        else
          out << v.dump();
        first = false;
      }
      out << "\n";
    };
    if (result.is_array() && !result.empty()) {
      write_row(result.front(), true);
      for (const auto& row : result) write_row(row, false);
    } else if (!result.is_array()) {
      write_row(result, true);
      write_row(result, false);
    }
    text = out.str();
  } else {
    throw pdist::spec_error("unknown format '" + common.format + "' (expected json or csv)");
  }

  if (common.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(common.output, std::ios::binary);
    if (!out) throw pdist::spec_error("cannot open output file '" + common.output + "'");
    out << text;
  }
}

json report_frame(const json& spec) {
  json report;
  report["spec"] = spec;
  return report;
}

// ---------------------------------------------------------------------------

int cmd_rate(const json& spec, const Common& common) {
  const auto model = pdist::cfg::protocol(spec);
  const auto d = pdist::model_to_distribution(model);
  const bool optimize = spec.value("optimize_q", false);

  json report = report_frame(spec);
  json row = pdist::cfg::describe_protocol(model);
  if (optimize) {
    const auto opt = pdist::optimize_q(d);
    row["q"] = opt.q_star;
    row["optimized"] = true;
    row.update(pdist::cfg::rate_to_json(pdist::key_rate(pdist::RateInput(d, opt.q_star))));
  } else {
    const double q = pdist::cfg::number_or(spec, "q", 0.0);
    if (q < 0 || q > 0.5) throw pdist::spec_error("q must lie in [0, 1/2]");
    row["q"] = q;
    row["optimized"] = false;
    row.update(pdist::cfg::rate_to_json(pdist::key_rate(pdist::RateInput(d, q))));
  }
  report["result"] = row;
  emit(report, common);
  return 0;
}

pdist::ProtocolKind named_kind(const json& spec, const char* cmd) {
  const std::string kind = pdist::cfg::text_or(spec, "protocol", "bb84");
  if (kind == "bb84") return pdist::ProtocolKind::BB84;
  if (kind == "six-state" || kind == "sixstate") return pdist::ProtocolKind::SixState;
  throw pdist::spec_error(std::string(cmd) + " supports bb84 and six-state only");
}

int cmd_threshold(const json& spec, const Common& common) {
  const auto pk = named_kind(spec, "threshold");
  json report = report_frame(spec);
  json row;
  row["protocol"] = (pk == pdist::ProtocolKind::BB84) ? "bb84" : "six-state";
  const auto start = std::chrono::steady_clock::now();
  if (spec.contains("fixed_q")) {
    const double q = pdist::cfg::number(spec, "fixed_q");
    row["q_policy"] = "fixed";
    row["q"] = q;
    row["threshold"] = pdist::threshold(pk, pdist::QPolicy::Fixed, q);
  } else {
    row["q_policy"] = "optimized";
    row["threshold"] = pdist::threshold(pk);
  }
  row["tolerance"] = 1e-5;
  row["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report["result"] = row;
  emit(report, common);
  return 0;
}

int cmd_curve(const json& spec, const Common& common) {
  const auto pk = named_kind(spec, "curve");
  const double q_start = pdist::cfg::number_or(spec, "Q_start", 0.0);
  const double q_stop = pdist::cfg::number_or(spec, "Q_stop", 0.14);
  const double q_step = pdist::cfg::number_or(spec, "Q_step", 0.01);
  if (q_step <= 0 || q_stop < q_start) throw pdist::spec_error("bad Q grid");
  std::vector<double> grid;
  for (double v = q_start; v <= q_stop + 1e-12; v += q_step) grid.push_back(v);

  const bool fixed = spec.contains("q") && !spec.value("optimize_q", false);
  const double fixed_q = fixed ? pdist::cfg::number(spec, "q") : 0.0;

  json report = report_frame(spec);
  json rows = json::array();
  try {
    const auto curve = pdist::rate_curve(
        pk, grid, fixed ? pdist::QPolicy::Fixed : pdist::QPolicy::Optimized, fixed_q);
    for (const auto& row : curve) {
      json r;
      r["Q"] = row.Q;
      r["q"] = row.q;
      r.update(pdist::cfg::rate_to_json(row.rate));
      rows.push_back(r);
    }
  } catch (const std::invalid_argument& e) {
    throw pdist::spec_error(e.what());
  }
  report["result"] = rows;
  emit(report, common);
  return 0;
}

int cmd_simulate(const json& spec, const Common& common) {
  const auto model = pdist::cfg::protocol(spec);
  const int n = pdist::cfg::integer(spec, "n");
  const double q = pdist::cfg::number_or(spec, "q", 0.0);
  const auto bit_code = pdist::cfg::code(spec, "bit_code", "full");
  const auto phase_code = pdist::cfg::code(spec, "phase_code", "empty");
  const int trials = spec.contains("trials") ? pdist::cfg::integer(spec, "trials") : 1;
  if (trials < 1) throw pdist::spec_error("trials must be positive");
  const bool stochastic = bit_code.kind == pdist::CodeSpec::Kind::Random ||
                          phase_code.kind == pdist::CodeSpec::Kind::Random;
  const std::uint64_t seed = (stochastic || trials > 1)
                                 ? pdist::cfg::seed(spec)
                                 : (spec.contains("seed") ? pdist::cfg::seed(spec) : 0);

  auto run_one = [&](std::uint64_t trial_seed) {
    const auto result = pdist::end_to_end(n, model, q, bit_code, phase_code, trial_seed);
    json row = pdist::cfg::describe_protocol(model);
    row["n"] = n;
    row["q"] = q;
    row["seed"] = trial_seed;
    row["fidelity"] = result.outcome.fidelity;
    row["epsilon"] = result.outcome.epsilon;
    row["epsilon_bound"] = result.epsilon_bound;  // 2 sqrt(1 - F^2)
    if (result.key_security.has_value())
      row["key_security_distance"] = *result.key_security;
    else
      row["key_security_distance"] = nullptr;
    row["disagreement"] = result.disagreement;
    row["bit_code_rank"] = result.outcome.bit_code_rank;
    row["phase_code_rank"] = result.outcome.phase_code_rank;
    json sectors = json::array();
    for (const auto& s : result.outcome.sectors) {
      json sj;
      sj["syndrome"] = s.syndrome.str();
      sj["probability"] = s.probability;
      sj["coset_size"] = s.coset_size;
      sj["fidelity"] = s.fidelity;
      sectors.push_back(sj);
    }
    row["sectors"] = sectors;
    return row;
  };

  json report = report_frame(spec);
  if (trials == 1) {
    report["result"] = run_one(seed);
  } else {
    json rows = json::array();
    for (int t = 0; t < trials; ++t)
      rows.push_back(run_one(pdist::derive_seed(seed, static_cast<std::uint64_t>(t))));
    report["result"] = rows;
  }
  emit(report, common);
  return 0;
}

int cmd_pgm(const json& spec, const Common& common) {
  const int n = pdist::cfg::integer(spec, "n");
  const double q = pdist::cfg::number(spec, "q");
  const double exponent = pdist::cfg::number(spec, "set_exponent");
  const int trials = pdist::cfg::integer(spec, "trials");
  const auto seed = pdist::cfg::seed(spec);
  const auto method = pdist::cfg::subset_method(spec);
  // priors default to the uniform Pauli distribution (p_z = 1/2)
  pdist::PauliDistribution d(0.25, 0.25, 0.25, 0.25);
  if (spec.contains("protocol") || spec.contains("kind") || spec.contains("p00"))
    d = pdist::model_to_distribution(pdist::cfg::protocol(spec));

  const auto stats = pdist::random_coset_error(n, q, d, exponent, trials, seed, method);

  json report = report_frame(spec);
  json row;
  row["n"] = stats.n;
  row["q"] = stats.q;
  row["set_exponent"] = stats.set_exponent;
  row["method"] = (method == pdist::SubsetMethod::RandomCoset) ? "coset" : "uniform";
  row["set_size"] = stats.set_size;
  row["trials"] = stats.trials;
  row["seed"] = stats.seed;
  row["mean"] = stats.mean;
  row["max"] = stats.max;
  row["q25"] = stats.q25;
  row["median"] = stats.median;
  row["q75"] = stats.q75;
  row["errors"] = stats.errors;
  report["result"] = row;
  emit(report, common);
  return 0;
}

int cmd_verify_pdit(const json& spec, const Common& common) {
  const int d = pdist::cfg::integer(spec, "d");
  const int shield_qubits = pdist::cfg::integer(spec, "shield_qubits");
  const int trials = pdist::cfg::integer(spec, "trials");
  const auto seed = pdist::cfg::seed(spec);
  if (d != 2 && d != 4) throw pdist::spec_error("d must be 2 or 4");
  if (shield_qubits < 1 || shield_qubits > 3)
    throw pdist::spec_error("shield_qubits must be 1..3");
  const int sdim = 1 << shield_qubits;

  auto haar_unitary = [&](pdist::Rng& rng) {
    pdist::Mat g(sdim, sdim);
    for (int r = 0; r < sdim; ++r)
      for (int c = 0; c < sdim; ++c) g(r, c) = pdist::cxd(rng.normal(), rng.normal());
    Eigen::HouseholderQR<pdist::Mat> qr(g);
    pdist::Mat qmat = qr.householderQ();
    const pdist::Mat rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < sdim; ++c) {
      const auto piv = rmat(c, c);
      qmat.col(c) *= (std::abs(piv) > 0 ? piv / std::abs(piv) : pdist::cxd(1, 0));
    }
    return qmat;
  };

  json rows = json::array();
  double worst = 0;
  for (int trial = 0; trial < trials; ++trial) {
    pdist::Rng rng(pdist::derive_seed(seed, static_cast<std::uint64_t>(trial)));
    std::vector<pdist::Mat> us;
    for (int j = 0; j < d; ++j) us.push_back(haar_unitary(rng));
    pdist::Mat g(sdim, sdim);
    for (int r = 0; r < sdim; ++r)
      for (int c = 0; c < sdim; ++c) g(r, c) = pdist::cxd(rng.normal(), rng.normal());
    pdist::Mat shield = g * g.adjoint();
    shield /= shield.trace().real();

    const pdist::TwistingOperator twist_op(d, std::move(us));
    const auto gamma = pdist::twist(
        pdist::max_entangled(d).to_density(),
        pdist::DensityOperator(shield, pdist::RegisterList{{"S", shield_qubits}}), twist_op);
    const double dist = pdist::key_security_distance(gamma.gamma);
    worst = std::max(worst, dist);
    json r;
    r["trial"] = trial;
    r["key_security_distance"] = dist;
    rows.push_back(r);
  }

  json report = report_frame(spec);
  json row;
  row["d"] = d;
  row["shield_qubits"] = shield_qubits;
  row["trials"] = trials;
  row["seed"] = seed;
  row["max_distance"] = worst;
  row["pass"] = worst <= 1e-9;
  row["trial_results"] = rows;
  report["result"] = row;
  emit(report, common);
  return row["pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"private-state distillation toolkit for noisy-processed QKD"};
  app.require_subcommand(1);

  Common common;
  app.add_option("--format", common.format, "output format: json or csv")->capture_default_str();
  app.add_option("--output", common.output, "write the report to a file instead of stdout");
  app.add_option("--config", common.config_path, "JSON config file; flags override its keys");

  struct FlagSet {
    std::string protocol;
    double Q = 0, q = 0, p00 = 0, p01 = 0, p10 = 0, p11 = 0;
    double fixed_q = 0, q_start = 0, q_stop = 0.14, q_step = 0.01, exponent = 0;
    std::uint64_t seed = 0;
    int n = 0, trials = 0, d = 2, shield_qubits = 1;
    bool optimize = false;
    std::string bit_code, phase_code, method;
  } f;

  auto add_protocol = [&](CLI::App* cmd) {
    cmd->add_option("--protocol", f.protocol, "bb84 | six-state | custom");
    cmd->add_option("--Q", f.Q, "observed bit error rate");
    cmd->add_option("--p00", f.p00, "custom: rate of I");
    cmd->add_option("--p01", f.p01, "custom: rate of Z");
    cmd->add_option("--p10", f.p10, "custom: rate of X");
    cmd->add_option("--p11", f.p11, "custom: rate of XZ");
  };

  auto* rate = app.add_subcommand("rate", "asymptotic key rate for one working point");
  add_protocol(rate);
  rate->add_option("--q", f.q, "Alice's added-noise rate");
  rate->add_flag("--optimize-q", f.optimize, "maximize the rate over q");

  auto* thresh = app.add_subcommand("threshold", "largest Q with a positive optimized rate");
  thresh->add_option("--protocol", f.protocol, "bb84 | six-state");
  thresh->add_option("--fixed-q", f.fixed_q, "pin q instead of optimizing");

  auto* curve = app.add_subcommand("curve", "rate vs Q table for external plotting");
  add_protocol(curve);
  curve->add_option("--Q-start", f.q_start, "grid start")->capture_default_str();
  curve->add_option("--Q-stop", f.q_stop, "grid stop")->capture_default_str();
  curve->add_option("--Q-step", f.q_step, "grid step")->capture_default_str();
  curve->add_option("--q", f.q, "fixed q (omit to optimize per point)");
  curve->add_flag("--optimize-q", f.optimize, "optimize q per point (default)");

  auto* sim = app.add_subcommand("simulate", "small-n distillation pipeline with certificates");
  add_protocol(sim);
  sim->add_option("--n", f.n, "block length");
  sim->add_option("--q", f.q, "Alice's added-noise rate");
  sim->add_option("--bit-code", f.bit_code, "full | empty | rank:<k>");
  sim->add_option("--phase-code", f.phase_code, "full | empty | rank:<k>");
  sim->add_option("--seed", f.seed, "random seed (required for rank:<k> codes)");
  sim->add_option("--trials", f.trials, "repeat with per-trial derived seeds");

  auto* pgm = app.add_subcommand("pgm", "PGM decoding error over random phase cosets");
  add_protocol(pgm);
  pgm->add_option("--n", f.n, "block length");
  pgm->add_option("--q", f.q, "ancilla bias");
  pgm->add_option("--set-exponent", f.exponent, "subset size = 2^(n * exponent)");
  pgm->add_option("--trials", f.trials, "number of random subsets");
  pgm->add_option("--seed", f.seed, "random seed");
  pgm->add_option("--method", f.method, "coset (default) | uniform");

  auto* verify = app.add_subcommand("verify-pdit", "random twisted states score ~0 distance");
  verify->add_option("--d", f.d, "key dimension (2 or 4)");
  verify->add_option("--shield-qubits", f.shield_qubits, "shield size");
  verify->add_option("--trials", f.trials, "number of random twists");
  verify->add_option("--seed", f.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    SpecBuilder spec(common);
    auto overlay_protocol = [&](CLI::App* cmd) {
      spec.set("protocol", f.protocol.empty() ? "bb84" : f.protocol, cmd->count("--protocol") > 0);
      spec.set("Q", f.Q, cmd->count("--Q") > 0);
      if (cmd->count("--p00") || cmd->count("--p01") || cmd->count("--p10") ||
          cmd->count("--p11")) {
        spec.set("p00", f.p00, true);
        spec.set("p01", f.p01, true);
        spec.set("p10", f.p10, true);
        spec.set("p11", f.p11, true);
      }
    };

    if (rate->parsed()) {
      overlay_protocol(rate);
      spec.set("q", f.q, rate->count("--q") > 0);
      spec.set("optimize_q", f.optimize, rate->count("--optimize-q") > 0);
      return cmd_rate(spec.take("rate"), common);
    }
    if (thresh->parsed()) {
      spec.set("protocol", f.protocol.empty() ? "bb84" : f.protocol,
               thresh->count("--protocol") > 0);
      if (thresh->count("--fixed-q")) spec.set("fixed_q", f.fixed_q, true);
      return cmd_threshold(spec.take("threshold"), common);
    }
    if (curve->parsed()) {
      overlay_protocol(curve);
      spec.set("Q_start", f.q_start, curve->count("--Q-start") > 0);
      spec.set("Q_stop", f.q_stop, curve->count("--Q-stop") > 0);
      spec.set("Q_step", f.q_step, curve->count("--Q-step") > 0);
      if (curve->count("--q")) spec.set("q", f.q, true);
      spec.set("optimize_q", f.optimize, curve->count("--optimize-q") > 0);
      return cmd_curve(spec.take("curve"), common);
    }
    if (sim->parsed()) {
      overlay_protocol(sim);
      spec.set("n", f.n, sim->count("--n") > 0);
      spec.set("q", f.q, sim->count("--q") > 0);
      spec.set("bit_code", f.bit_code.empty() ? "full" : f.bit_code, sim->count("--bit-code") > 0);
      spec.set("phase_code", f.phase_code.empty() ? "empty" : f.phase_code,
               sim->count("--phase-code") > 0);
      if (sim->count("--seed")) spec.set("seed", f.seed, true);
      if (sim->count("--trials")) spec.set("trials", f.trials, true);
      return cmd_simulate(spec.take("simulate"), common);
    }
    if (pgm->parsed()) {
      if (pgm->count("--protocol") || pgm->count("--Q") || pgm->count("--p00"))
        overlay_protocol(pgm);
      spec.set("n", f.n, pgm->count("--n") > 0);
      spec.set("q", f.q, pgm->count("--q") > 0);
      spec.set("set_exponent", f.exponent, pgm->count("--set-exponent") > 0);
      spec.set("trials", f.trials, pgm->count("--trials") > 0);
      if (pgm->count("--seed")) spec.set("seed", f.seed, true);
      spec.set("method", f.method.empty() ? "coset" : f.method, pgm->count("--method") > 0);
      return cmd_pgm(spec.take("pgm"), common);
    }
    if (verify->parsed()) {
      spec.set("d", f.d, verify->count("--d") > 0);
      spec.set("shield_qubits", f.shield_qubits, verify->count("--shield-qubits") > 0);
      spec.set("trials", f.trials, verify->count("--trials") > 0);
      if (verify->count("--seed")) spec.set("seed", f.seed, true);
      return cmd_verify_pdit(spec.take("verify-pdit"), common);
    }
    return 2;
  } catch (const pdist::budget_error& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return 3;
  } catch (const pdist::spec_error& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
