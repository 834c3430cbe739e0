#include "maskcheck/corpus.hpp"
#include "maskcheck/errors.hpp"
#include "maskcheck/obligations.hpp"
#include "maskcheck/pipeline.hpp"
#include "maskcheck/report.hpp"
#include "maskcheck/selfcheck.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw maskcheck::Error(maskcheck::Errc::usage, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw maskcheck::Error(maskcheck::Errc::usage, "cannot write " + path);
  out << data;
}

} // namespace

int main(int argc, char** argv) {
  using namespace maskcheck;
  CLI::App app{"gate-level masking verification toolkit"};
  app.require_subcommand(1);

  // verify
  auto* verify = app.add_subcommand("verify", "run the verification hierarchy on a netlist");
  std::string netlist_path, labels_path, stages_csv = "d1,mc,fm,bsadc,asadc";
  std::string solver_cmd, dump_dir, out_path;
  QueryLimits limits;
  verify->add_option("netlist", netlist_path, "synthesis-tool JSON netlist")->required();
  verify->add_option("--label,-l", labels_path, "label config JSON")->required();
  verify->add_option("--stages", stages_csv, "comma list of d1,mc,fm,bsadc,asadc");
  verify->add_option("--budget", limits.exhaustive_bit_budget,
                     "exhaustive enumeration bit budget (default 24)");
  verify->add_option("--solver", solver_cmd,
                     "external SMT solver command (SMT-LIB2 on stdin; {rlimit} substituted); "
                     "default from MASKCHECK_SOLVER");
  verify->add_option("--rlimit", limits.smt_resource_limit, "solver resource limit knob");
  verify->add_option("--seed", limits.seed, "run seed (recorded in the manifest)");
  verify->add_option("--timeout-s", limits.wall_timeout_s,
                     "wall-clock fallback per solver call; 0 disables (deterministic mode)");
  verify->add_option("--smt-dump", dump_dir, "dump every emitted SMT-LIB2 script here");
  verify->add_option("-o,--output", out_path,
                     "write report.json (repro_manifest.json lands beside it)");

  // selfcheck
  auto* selfcheck = app.add_subcommand("selfcheck", "run the known-answer suite and T2-T6");
  bool with_t1 = false;
  selfcheck->add_flag("--with-t1", with_t1, "include the long-running T1 obligation");

  // corpus gen
  auto* corpus = app.add_subcommand("corpus", "reference gadget corpus");
  auto* gen = corpus->add_subcommand("gen", "emit netlist.json, labels.json, expected.json");
  std::string kind_name, out_dir;
  std::uint64_t gen_q = 17;
  std::uint32_t gen_width = 0;
  gen->add_option("kind", kind_name, "gadget kind (e.g. dom_and_secure, toy_barrett)")
      ->required();
  gen->add_option("--q", gen_q, "modulus for toy_barrett (default 17)");
  gen->add_option("--width", gen_width, "share width (toy_barrett) or lane count");
  gen->add_option("-o,--output", out_dir, "output directory")->required();

  // report summarize
  auto* report = app.add_subcommand("report", "report utilities");
  auto* summarize = report->add_subcommand("summarize", "human-readable summary of a report");
  std::string report_path;
  summarize->add_option("report", report_path, "report.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) {
      if (solver_cmd.empty()) {
        const char* env = std::getenv("MASKCHECK_SOLVER");
        if (env) solver_cmd = env;
      }
      BackendConfig be;
      be.limits = limits;
      be.solver_cmd = solver_cmd;
      be.dump_dir = dump_dir;
      be.cross_check = !solver_cmd.empty();

      const std::string netlist_text = read_file(netlist_path);
      const std::string labels_text = read_file(labels_path);
      Netlist n = parse_netlist(netlist_text);
      LabelConfig cfg = LabelConfig::parse(labels_text, n);
      StageSet stages = StageSet::parse(stages_csv);

      PipelineResult pr = run_pipeline(n, cfg, be, stages);
      const std::string report_json = build_report_json(n, cfg, pr);
      if (!out_path.empty()) {
        write_file(out_path, report_json);
        std::filesystem::path manifest =
            std::filesystem::path(out_path).parent_path() / "repro_manifest.json";
        write_file(manifest.string(),
                   build_manifest_json(n, cfg, pr, be, netlist_path, labels_path));
      } else {
        std::cout << report_json;
      }
      std::cerr << n.module_name << ": " << classification_name(pr.classification) << " ("
                << pr.counts.residual << " residual, " << pr.counts.indeterminate
                << " indeterminate)\n";
      if (pr.classification == Classification::Timeout) return 2;
      return pr.exit_code();
    }

    if (*selfcheck) {
      bool ok = true;
      auto checks = run_selfchecks();
      for (std::size_t i = 0; i < checks.size(); ++i) {
        const auto& c = checks[i];
        ok = ok && c.pass;
        std::cout << (c.pass ? "PASS" : "FAIL") << " check " << (i + 1) << "/" << checks.size()
                  << " " << c.name << " (expected " << c.expected << ", got " << c.got << ")\n";
      }
      for (const auto& ob : run_proof_obligations(with_t1)) {
        ok = ok && ob.pass;
        std::cout << (ob.pass ? "PASS" : "FAIL") << " " << ob.id << " " << ob.detail << "\n";
      }
      return ok ? 0 : 2;
    }

    if (*gen) {
      auto kind = gadget_kind_from_name(kind_name);
      if (!kind) throw Error(Errc::usage, "unknown gadget kind \"" + kind_name + "\"");
      GadgetSpec spec;
      spec.kind = *kind;
      spec.q = gen_q;
      spec.width = gen_width;
      GadgetOutput out = generate(spec);
      std::filesystem::create_directories(out_dir);
      write_file(out_dir + "/netlist.json", out.netlist_json);
      write_file(out_dir + "/labels.json", out.labels_json);
      write_file(out_dir + "/expected.json", out.expected_json);
      std::cerr << "wrote " << out_dir << "/{netlist,labels,expected}.json\n";
      return 0;
    }

    if (*summarize) {
      std::cout << summarize_report(read_file(report_path));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
