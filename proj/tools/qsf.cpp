// qsf: verify, decompose, unitarize, and generate algebra instances.
//
// Exit codes: 0 all checks pass, 1 a property fails or no splitting
// exists, 2 unreadable input or bad arguments, 3 the numeric search
// failed to converge.  The JSON report goes to stdout, a one-line
// summary to stderr.  Set QSF_LOG=1 for progress logging.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qsf/digest.hpp"
#include "qsf/io.hpp"
#include "qsf/unitarize.hpp"

namespace {

using namespace qsf;
using Clock = std::chrono::steady_clock;

bool log_enabled() {
  const char* v = std::getenv("QSF_LOG");
  return v && *v && std::string(v) != "0";
}

void logline(const std::string& s) {
  if (log_enabled()) std::cerr << "[qsf] " << s << "\n";
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string instance_hash(const InstanceFile& f) {
  return sha256_hex(instance_to_json(f));
}

void append(RunReport& r, const std::string& prefix, const Report& rep) {
  for (const auto& c : rep.checks)
    r.checks.push_back({prefix + "." + c.name, c.residual});
}

// pass = every recorded residual within tolerance
int finish(RunReport& r, Clock::time_point t0) {
  bool pass = true;
  for (const auto& c : r.checks) pass = pass && c.residual <= r.tolerance;
  r.pass = pass;
  r.wall_time_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  std::cout << report_to_json(r);
  std::cerr << (r.pass ? "pass" : "FAIL") << ": " << r.command << " "
            << r.input << " (" << r.checks.size() << " checks)\n";
  if (!r.pass)
    for (const auto& c : r.checks)
      if (c.residual > r.tolerance)
        std::cerr << "  " << c.name << " residual " << fmt(c.residual) << "\n";
  return r.pass ? 0 : 1;
}

bool has_witness(const Algebra& a) {
  try {
    separability_witness(a);
    return true;
  } catch (const Error& e) {
    if (e.kind == Error::Kind::NoSolution) return false;
    throw;
  }
}

int cmd_verify(const std::string& path, double tol) {
  const auto t0 = Clock::now();
  const InstanceFile f = load_instance(path);
  RunReport r;
  r.command = "verify";
  r.input = path;
  r.input_hash = instance_hash(f);
  r.tolerance = tol;
  r.seed = f.metadata.seed;

  for (const auto& na : f.algebras) {
    logline("checking algebra " + na.name);
    append(r, na.name, verify_algebra(na.algebra, tol));
    const Report sp = is_special(na.algebra, tol);
    const Report cf = verify_cstar_frobenius(na.algebra, tol);
    r.notes.push_back(na.name + ": coisometry residual " +
                      fmt(sp.max_residual()) + ", adjoint-splitting residual " +
                      fmt(cf.max_residual()));
    for (const auto& [key, expected] : f.metadata.labels) {
      bool observed;
      if (key == "special")
        observed = sp.pass;
      else if (key == "cstar_frobenius")
        observed = cf.pass;
      else if (key == "connected")
        observed = is_connected(na.algebra).connected;
      else if (key == "separable")
        observed = has_witness(na.algebra);
      else
        continue;
      r.checks.push_back(
          {na.name + ".label_" + key, observed == expected ? 0.0 : 1.0});
    }
  }
  for (const auto& nm : f.modules) {
    const Algebra* acting = nullptr;
    for (const auto& na : f.algebras)
      if (na.name == nm.algebra) acting = &na.algebra;
    if (!acting) {
      r.checks.push_back({nm.name + ".algebra_known", 1.0});
      continue;
    }
    logline("checking module " + nm.name);
    append(r, nm.name, verify_action(*acting, nm.module, tol));
  }
  return finish(r, t0);
}

int cmd_decompose(const std::string& path) {
  const auto t0 = Clock::now();
  const InstanceFile f = load_instance(path);
  const double tol = Tolerance{}.verify_eps;
  RunReport r;
  r.command = "decompose";
  r.input = path;
  r.input_hash = instance_hash(f);
  r.tolerance = tol;
  r.seed = f.metadata.seed;
  if (f.algebras.empty()) {
    r.checks.push_back({"has_algebra", 1.0});
    r.notes.push_back("the file contains no algebras");
    return finish(r, t0);
  }
  const Algebra& a = f.algebras[0].algebra;
  if (f.algebras.size() > 1)
    r.notes.push_back("decomposing the first algebra only");
  try {
    const auto parts = decompose_algebra(a, f.metadata.seed);
    r.checks.push_back({"separable", 0.0});
    Mor resolution = parts[0].w * parts[0].v;
    for (size_t k = 1; k < parts.size(); ++k)
      resolution = resolution + parts[k].w * parts[k].v;
    r.checks.push_back(
        {"resolution_of_identity",
         (resolution.mat() - Mat::Identity(a.carrier.dim(), a.carrier.dim()))
             .cwiseAbs()
             .maxCoeff()});
    for (size_t k = 0; k < parts.size(); ++k) {
      const std::string name = "summand" + std::to_string(k);
      append(r, name, verify_algebra(parts[k].algebra, tol));
      const auto conn = is_connected(parts[k].algebra);
      r.notes.push_back(name + ": dim " +
                        std::to_string(parts[k].algebra.carrier.dim()) +
                        (conn.connected ? ", connected" : ", not connected"));
    }
  } catch (const Error& e) {
    if (e.kind != Error::Kind::NoSolution) throw;
    r.checks.push_back({"separable", 1.0});
    r.notes.push_back(e.what());
  }
  return finish(r, t0);
}

int cmd_unitarize(const std::string& path, double tol,
                  std::optional<uint64_t> seed_opt, int max_iterations,
                  int restarts, const std::string& out_path) {
  const auto t0 = Clock::now();
  const InstanceFile f = load_instance(path);
  const uint64_t seed = seed_opt ? *seed_opt : f.metadata.seed;
  RunReport r;
  r.command = "unitarize";
  r.input = path;
  r.input_hash = instance_hash(f);
  r.tolerance = tol;
  r.seed = seed;
  if (f.algebras.empty()) {
    r.checks.push_back({"has_algebra", 1.0});
    r.notes.push_back("the file contains no algebras");
    return finish(r, t0);
  }
  const Algebra& a = f.algebras[0].algebra;
  if (f.algebras.size() > 1)
    r.notes.push_back("unitarizing the first algebra only");
  try {
    logline("running unitarize with seed " + std::to_string(seed));
    const UnitarizationCertificate cert =
        unitarize(a, seed, max_iterations, restarts);
    const Report vc = verify_certificate(cert, a, tol);
    for (const auto& c : vc.checks) r.checks.push_back({c.name, c.residual});
    r.notes.push_back("method: " + cert.method);
    r.notes.push_back("summands: " + std::to_string(cert.summands.size()));
    r.notes.push_back("residuals: coisometry " + fmt(cert.residuals.special) +
                      ", adjoint splitting " + fmt(cert.residuals.frobenius) +
                      ", structure map " + fmt(cert.residuals.iso));
    if (!out_path.empty()) {
      save_certificate(cert, out_path);
      r.notes.push_back("certificate written to " + out_path);
    }
  } catch (const Error& e) {
    if (e.kind != Error::Kind::NoSolution) throw;
    r.checks.push_back({"separable", 1.0});
    r.notes.push_back(e.what());
  }
  return finish(r, t0);
}

int cmd_gen(const std::string& kind, const GenerateParams& p, uint64_t seed,
            const std::string& out_path) {
  const auto t0 = Clock::now();
  const InstanceFile f = generate_instance(kind, p, seed);
  save_instance(f, out_path);
  RunReport r;
  r.command = "gen";
  r.input = out_path;
  r.input_hash = instance_hash(f);
  r.tolerance = Tolerance{}.verify_eps;
  r.seed = seed;
  r.notes.push_back(f.metadata.provenance);
  for (const auto& [key, value] : f.metadata.labels)
    r.notes.push_back("label " + key + ": " + (value ? "true" : "false"));
  return finish(r, t0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-dimensional algebra toolkit"};
  app.require_subcommand(1);

  std::string path, out_path, kind, group = "s3";
  double tol_verify = Tolerance{}.verify_eps;
  double tol_solve = Tolerance{}.solver_eps;
  std::optional<uint64_t> seed_opt;
  uint64_t gen_seed = 0;
  int max_iterations = 200, restarts = 10, subgroup_gen = 2;
  std::vector<int> blocks = {1, 2};

  auto* verify = app.add_subcommand("verify", "check algebra and module laws");
  verify->add_option("file", path, "instance file")->required();
  verify->add_option("--tol", tol_verify, "residual tolerance");

  auto* decompose =
      app.add_subcommand("decompose", "split into indecomposable summands");
  decompose->add_option("file", path, "instance file")->required();

  auto* unitarize =
      app.add_subcommand("unitarize", "produce a coisometric form");
  unitarize->add_option("file", path, "instance file")->required();
  unitarize->add_option("--tol", tol_solve, "certificate tolerance");
  unitarize->add_option("--seed", seed_opt, "search seed (default: metadata)");
  unitarize->add_option("--max-iterations", max_iterations,
                        "iteration budget per restart");
  unitarize->add_option("--restarts", restarts, "restart budget");
  unitarize->add_option("--out", out_path, "write the certificate here");

  auto* gen = app.add_subcommand("gen", "generate a labeled instance");
  gen->add_option("kind", kind,
                  "scrambled-semisimple | group-algebra | coset-algebra | "
                  "dual-numbers | frobenius-nonspecial")
      ->required();
  gen->add_option("--blocks", blocks, "matrix block sizes");
  gen->add_option("--group", group, "group name: trivial, s3, s4, z<n>");
  gen->add_option("--subgroup-gen", subgroup_gen,
                  "generator of the subgroup for coset-algebra");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", out_path, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (verify->parsed()) return cmd_verify(path, tol_verify);
    if (decompose->parsed()) return cmd_decompose(path);
    if (unitarize->parsed())
      return cmd_unitarize(path, tol_solve, seed_opt, max_iterations, restarts,
                           out_path);
    if (gen->parsed()) {
      GenerateParams p;
      p.blocks = blocks;
      p.group = group;
      p.subgroup_gen = subgroup_gen;
      return cmd_gen(kind, p, gen_seed, out_path);
    }
  } catch (const qsf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind) {
      case qsf::Error::Kind::Parse:
        return 2;
      case qsf::Error::Kind::Solver:
        return 3;
      default:
        return 1;
    }
  }
  return 2;
}
