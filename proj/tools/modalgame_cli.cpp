#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "modalgame/modalgame.hpp"

using namespace modalgame;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNoConvergence = 3;

struct Options {
  std::string scenario;
  std::string out;
  std::string format = "json";
  std::string state;
  std::size_t state_index = 0;
  std::size_t threads = 0;
  double sigma = 1e-3;
  std::size_t max_iter = 50;
  std::string partition = "pairwise";
  std::string axis;
  std::string values;
  std::uint64_t seed = 1;
};

PartitionStrategy parse_partition(const std::string& s) {
  if (s == "pairwise") return PartitionStrategy::pairwise;
  if (s == "singleton") return PartitionStrategy::singleton;
  if (s == "whole") return PartitionStrategy::whole;
  throw Error(Errc::config, "unknown partition '" + s + "'", "--partition");
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "inf" || tok == "none") {
      v.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(Errc::config, "bad sweep value '" + tok + "'", "--values");
    }
  }
  if (v.empty()) throw Error(Errc::config, "no sweep values given", "--values");
  return v;
}

SweepConfig sweep_config(const Options& o) {
  SweepConfig c;
  c.equilibrium.sigma = o.sigma;
  c.equilibrium.max_iter = o.max_iter;
  c.equilibrium.threads = o.threads ? o.threads : default_thread_count();
  c.partition = parse_partition(o.partition);
  return c;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error(Errc::io, "cannot write " + out);
  f << text;
}

void emit_json(const nlohmann::json& j, const std::string& out) { emit(j.dump(1) + "\n", out); }

int sweep_exit(const SweepResults& r) {
  for (const auto& x : r.records)
    if (!x.ok()) return kExitRuntime;
  for (const auto& x : r.records)
    if (!x.converged) return kExitNoConvergence;
  return kExitOk;
}

int run_solve(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const auto r = run_sweep(sc, SweepAxis::c_av, {sc.c_av}, sweep_config(o));
  emit(render_results(r, parse_format(o.format)), o.out);
  return sweep_exit(r);
}

int run_sweep_cmd(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const auto r = run_sweep(sc, parse_axis(o.axis), parse_values(o.values), sweep_config(o));
  emit(render_results(r, parse_format(o.format)), o.out);
  return sweep_exit(r);
}

int run_synth(const Options& o) {
  emit(scenario_dump(synthesize_sf_scenario(o.seed)), o.out);
  return kExitOk;
}

// Strategies come from a solve/sweep JSON output, or the default starting point.
void load_state(const Options& o, const Scenario& sc, TncStrategy& tnc, TransitStrategy& transit) {
  if (o.state.empty()) {
    tnc = default_tnc(sc);
    transit = default_transit(sc);
    return;
  }
  const auto r = load_results(o.state);
  if (o.state_index >= r.records.size()) throw Error(Errc::config, "state index out of range", "--index");
  const auto& x = r.records[o.state_index];
  if (!x.ok()) throw Error(Errc::config, "state record failed: " + x.error, "--state");
  if (x.tnc.rate.size() != sc.zone_count() || x.transit.frequency.size() != sc.line_count())
    throw Error(Errc::dimension_mismatch, "state does not match the scenario", "--state");
  tnc = x.tnc;
  transit = x.transit;
}

int run_certify(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  TncStrategy tnc;
  TransitStrategy transit;
  load_state(o, sc, tnc, transit);
  const std::size_t threads = o.threads ? o.threads : default_thread_count();
  const auto c = certify_concavity(sc, tnc, default_fare_grid(sc), threads);
  emit_json({{"holds", c.holds},
             {"threshold_per_hour", c.threshold},
             {"min_margin_per_hour", c.min_margin},
             {"nbar_per_hour", c.nbar}},
            o.out);
  return kExitOk;
}

int run_theil(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  TncStrategy tnc;
  TransitStrategy transit;
  load_state(o, sc, tnc, transit);
  const auto t = theil_report(sc, tnc, transit);
  const auto d = compute_demand(sc, tnc, transit);
  const auto ag = aggregate_accessibility(d, accessibility_tensor(sc, tnc, transit), t.shift);
  emit_json({{"T", t.T},
             {"within", t.within},
             {"between", t.between},
             {"shift", t.shift},
             {"class_accessibility", ag.A_k},
             {"zone_class_accessibility", ag.A_ik}},
            o.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Game-theoretic AMoD / transit equilibrium and equity toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output path ('-' for stdout)");
    c->add_option("--threads", o.threads, "Worker threads (default: MODALGAME_THREADS or 1)");
  };
  auto solver = [&](CLI::App* c) {
    c->add_option("--scenario", o.scenario, "Scenario JSON")->required();
    c->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    c->add_option("--sigma", o.sigma, "Best-response stopping tolerance");
    c->add_option("--max-iter", o.max_iter, "Best-response iteration cap");
    c->add_option("--partition", o.partition, "Zone partition for the ex-post bound")
        ->check(CLI::IsMember({"pairwise", "singleton", "whole"}));
    common(c);
  };

  auto* solve = app.add_subcommand("solve", "Solve one equilibrium and report its quality");
  solver(solve);
  auto* sweep = app.add_subcommand("sweep", "Solve along a parameter axis");
  solver(sweep);
  sweep->add_option("--axis", o.axis, "c_av, amod_wait_max (minutes) or subsidy")->required();
  sweep->add_option("--values", o.values, "Comma separated values; 'inf' disables a wait cap")->required();
  auto* synth = app.add_subcommand("synth-sf", "Write the synthetic San Francisco scenario");
  synth->add_option("--seed", o.seed, "Generator seed");
  common(synth);
  auto* certify = app.add_subcommand("certify", "Transit concavity certificate");
  auto* theil = app.add_subcommand("theil", "Accessibility and Theil decomposition");
  for (auto* c : {certify, theil}) {
    c->add_option("--scenario", o.scenario, "Scenario JSON")->required();
    c->add_option("--state", o.state, "Solve or sweep JSON output holding the strategies");
    c->add_option("--index", o.state_index, "Record index within --state");
    common(c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*solve) return run_solve(o);
    if (*sweep) return run_sweep_cmd(o);
    if (*synth) return run_synth(o);
    if (*certify) return run_certify(o);
    if (*theil) return run_theil(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what();
    if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
    std::cerr << "\n";
    switch (e.code()) {
      case Errc::validation:
      case Errc::dimension_mismatch:
      case Errc::parse:
      case Errc::schema_version:
      case Errc::config:
      case Errc::io:
      case Errc::unreachable_od:
        return kExitValidation;
      default:
        return kExitRuntime;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
