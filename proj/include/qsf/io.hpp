#pragma once

#include "qsf/algebra.hpp"
#include "qsf/unitarize.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qsf {

// On-disk instance bundle: one category, named objects, and algebras /
// modules over them, plus generator metadata.  Files written by
// save_instance are canonical JSON (keys sorted, floats at 17
// significant digits, -0 collapsed) and round-trip byte-identically
// through load_instance.
struct NamedObject {
  std::string name;
  Obj object;
};

struct NamedAlgebra {
  std::string name;
  std::string carrier;  // name of the carrier object
  Algebra algebra;
};

struct NamedModule {
  std::string name;
  std::string algebra;  // name of the acting algebra
  std::string carrier;  // name of the carrier object
  ActionModule module;
};

struct InstanceMetadata {
  uint64_t seed = 0;
  std::string provenance;
  std::vector<int> blocks;             // generator block sizes, if any
  std::map<std::string, bool> labels;  // ground truth: separable, ...
};

struct InstanceFile {
  std::string format = "qsf-instance/1";
  Category category = Category::rep_group(GroupTable::trivial());
  std::vector<NamedObject> objects;
  std::vector<NamedAlgebra> algebras;
  std::vector<NamedModule> modules;
  InstanceMetadata metadata;
};

// Errors carry Error::Kind::Parse with a field path, e.g.
// "algebras[0].mult: data length 12, expected rows*cols = 16".
InstanceFile instance_from_json(const std::string& text);
std::string instance_to_json(const InstanceFile& f);
InstanceFile load_instance(const std::string& path);
void save_instance(const InstanceFile& f, const std::string& path);

// Certificate files embed the backend and the full output algebra, so
// they can be re-checked against any copy of the input instance.  The
// input carrier is needed to rebuild the isomorphism's endpoints.
std::string certificate_to_json(const UnitarizationCertificate& c);
UnitarizationCertificate certificate_from_json(const std::string& text,
                                               const Obj& input_carrier);
void save_certificate(const UnitarizationCertificate& c,
                      const std::string& path);
UnitarizationCertificate load_certificate(const std::string& path,
                                          const Obj& input_carrier);

// Command run report; wall_time_ms is the only field allowed to differ
// between identical runs.
struct RunReport {
  std::string command;
  std::string input;
  std::string input_hash;
  std::string tool = "qsf 1.0.0";
  double tolerance = 0.0;
  uint64_t seed = 0;
  bool pass = false;
  double wall_time_ms = 0.0;
  std::vector<CheckItem> checks;
  std::vector<std::string> notes;
};

std::string report_to_json(const RunReport& r);

// Deterministic instance generators; the ground-truth labels the
// construction guarantees are embedded in the metadata.
struct GenerateParams {
  std::vector<int> blocks = {1, 2};  // scrambled-semisimple, frobenius-nonspecial
  std::string group = "s3";          // group-algebra, coset-algebra
  int subgroup_gen = 2;              // coset-algebra: subgroup <g> for this g
};

// kinds: scrambled-semisimple, group-algebra, coset-algebra,
// dual-numbers, frobenius-nonspecial
InstanceFile generate_instance(const std::string& kind,
                               const GenerateParams& p, uint64_t seed);

}  // namespace qsf
