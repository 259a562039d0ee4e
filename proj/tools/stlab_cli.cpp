#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stlab/analysis.hpp"
#include "stlab/extension.hpp"
#include "stlab/frostman.hpp"
#include "stlab/grid.hpp"
#include "stlab/harness.hpp"

namespace {

using namespace stlab;

void add_config(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--n", cfg.n, "Dimension")->capture_default_str();
  cmd->add_option("--K", cfg.K, "Leaf level")->capture_default_str();
  cmd->add_option("--Kf", cfg.Kf, "Field sampling level")->capture_default_str();
  cmd->add_option("--set", cfg.set, "Generator spec or DSET file")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  cmd->add_option("--dstar", cfg.dstar, "Trace dimension d*")->capture_default_str();
  cmd->add_option("--d", cfg.d, "Measure exponent d")->capture_default_str();
  cmd->add_option("--lambda-frac", cfg.lambda_frac, "lambda as a fraction of H^{d*}(S)")->capture_default_str();
  cmd->add_option("--lambda", cfg.lambda, "Absolute lambda; overrides --lambda-frac when positive");
  cmd->add_option("--p", cfg.p, "Sobolev exponent p")->capture_default_str();
  cmd->add_option("--eps", cfg.eps, "Exponent loss eps")->capture_default_str();
  cmd->add_option("--c", cfg.c, "Dilation factor (odd)")->capture_default_str();
  cmd->add_option("--kappa", cfg.kappa, "Cavity depth")->capture_default_str();
  cmd->add_option("--budget", cfg.budget, "Leaf pairs summed directly per Phi evaluation")->capture_default_str();
}

// Writes to the path, or to stdout when it is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path);
  out << text;
}

std::string csv(const std::vector<AuditRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dyadic trace and extension laboratory"};
  app.require_subcommand(1);
  ExperimentConfig cfg;
  std::string out;
  std::string source = "random-lipschitz";
  std::string field = "trig:0";
  std::string audit_path;
  int instances = 10;
  std::vector<std::string> inputs;

  auto* gen = app.add_subcommand("gen-set", "Generate a set and write it as DSET");
  auto* content = app.add_subcommand("content", "Contents and thick-cube counts");
  auto* keystone_cmd = app.add_subcommand("keystone", "Canonical decomposition summary");
  auto* frostman = app.add_subcommand("frostman", "Build the measure sequence");
  auto* extend_cmd = app.add_subcommand("extend", "Sample the extension on a grid");
  auto* maximal = app.add_subcommand("maximal", "Sample the sharp maximal function");
  auto* reverse = app.add_subcommand("verify-reverse", "Extension norm against the trace functional");
  auto* direct = app.add_subcommand("verify-direct", "Trace functional against the field norm");
  auto* roundtrip = app.add_subcommand("roundtrip", "Trace of the extension and sandwich ratios");
  auto* packing = app.add_subcommand("packing-audit", "Packing, multiplicity and cavity bounds");
  auto* report = app.add_subcommand("report", "Aggregate CSV files into a JSON summary");

  for (auto* cmd : {gen, content, keystone_cmd, frostman, extend_cmd, maximal, reverse, direct, roundtrip, packing}) {
    add_config(cmd, cfg);
    cmd->add_option("--out", out, "Output path (default stdout)");
  }
  for (auto* cmd : {extend_cmd, maximal, reverse, roundtrip})
    cmd->add_option("--f", source, "Function source")->capture_default_str();
  direct->add_option("--field", field, "Smooth field")->capture_default_str();
  for (auto* cmd : {reverse, direct, roundtrip})
    cmd->add_option("--instances", instances, "Number of instances")->capture_default_str()->check(CLI::PositiveNumber);
  frostman->add_option("--audit", audit_path, "Also write the axiom audit as CSV");
  report->add_option("paths", inputs, "CSV files");
  report->add_option("--out", out, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      std::ostringstream os;
      write_set(os, resolve_set(cfg));
      emit(out, os.str());
    } else if (content->parsed()) {
      emit(out, csv(run_content(cfg)));
    } else if (keystone_cmd->parsed()) {
      emit(out, csv(run_keystone(cfg)));
    } else if (frostman->parsed()) {
      const DyadicSet s = resolve_set(cfg);
      std::ostringstream os;
      write_sequence(os, build_sequence(s, cfg.d));
      emit(out, os.str());
      if (!audit_path.empty()) emit(audit_path, csv(run_frostman_audit(cfg)));
    } else if (extend_cmd->parsed() || maximal->parsed()) {
      cfg.validate();
      const Instance inst = checked_instance(cfg, resolve_set(cfg));
      const auto f = leaf_function(FunctionSource::parse(source, cfg.seed), inst.set, cfg.Kf);
      std::ostringstream os;
      if (extend_cmd->parsed()) {
        const ApproxContext ctx(inst.set, inst.keystone, inst.sequence, f);
        write_field(os, extend(ctx, cfg.Kf, 4));
      } else {
        write_field(os, sharp_field(f, inst.keystone, inst.sequence, cfg.c, cfg.budget).field);
      }
      emit(out, os.str());
    } else if (reverse->parsed()) {
      emit(out, csv(run_verify_reverse(cfg, FunctionSource::parse(source, cfg.seed), instances)));
    } else if (direct->parsed()) {
      emit(out, csv(run_verify_direct(cfg, FieldSpec::parse(field), instances)));
    } else if (roundtrip->parsed()) {
      emit(out, csv(run_roundtrip(cfg, FunctionSource::parse(source, cfg.seed), instances)));
    } else if (packing->parsed()) {
      emit(out, csv(run_packing_audit(cfg)));
    } else if (report->parsed()) {
      std::vector<std::pair<std::string, std::vector<AuditRow>>> data;
      for (const auto& path : inputs) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("missing input: " + path);
        data.emplace_back(path, read_csv(in));
      }
      emit(out, summarize(data));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
