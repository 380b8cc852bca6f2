#include "qsf/io.hpp"

#include "qsf/digest.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace qsf {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  throw Error(Error::Kind::Parse, field + ": " + msg);
}

std::string jesc(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if ((unsigned char)ch < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out + "\"";
}

void put_mat(std::string& out, const Mat& m) {
  out += "{\"cols\":" + std::to_string(m.cols()) + ",\"data\":[";
  bool first = true;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!first) out += ',';
      first = false;
      out += '[';
      out += canonical_number(m(i, j).real());
      out += ',';
      out += canonical_number(m(i, j).imag());
      out += ']';
    }
  out += "],\"rows\":" + std::to_string(m.rows()) + "}";
}

void put_backend(std::string& out, const Category& c) {
  if (c.backend() == Backend::GridHilb) {
    out += "{\"kind\":\"grid\",\"size\":" + std::to_string(c.grid_size()) + "}";
    return;
  }
  out += "{\"kind\":\"group\",\"mult\":[";
  const GroupTable& g = c.group();
  for (size_t i = 0; i < g.mult.size(); ++i) {
    out += i ? ",[" : "[";
    for (size_t j = 0; j < g.mult[i].size(); ++j) {
      if (j) out += ',';
      out += std::to_string(g.mult[i][j]);
    }
    out += ']';
  }
  out += "]}";
}

// object record; "name" sorts last in both layouts, so it is appended
void put_object(std::string& out, const Obj& x, const std::string* name) {
  std::string body;
  if (x.backend() == Backend::GridHilb) {
    body += "{\"dims\":[";
    const Eigen::MatrixXi dims = x.dims_grid();
    for (int i = 0; i < dims.rows(); ++i) {
      body += i ? ",[" : "[";
      for (int j = 0; j < dims.cols(); ++j) {
        if (j) body += ',';
        body += std::to_string(dims(i, j));
      }
      body += ']';
    }
    body += "],\"kind\":\"grid\"}";
  } else {
    body += "{\"kind\":\"rep\",\"matrices\":[";
    const int order = x.category().group().order();
    for (int g = 0; g < order; ++g) {
      if (g) body += ',';
      put_mat(body, x.rep_matrix(g));
    }
    body += "]}";
  }
  if (name) {
    body.pop_back();
    body += ",\"name\":" + jesc(*name) + "}";
  }
  out += body;
}

void put_stats(std::string& out, const SolverStats& s) {
  out += "{\"iterations\":" + std::to_string(s.iterations) +
         ",\"residual\":" + canonical_number(s.residual) +
         ",\"restarts\":" + std::to_string(s.restarts) +
         ",\"seed\":" + std::to_string(s.seed) + "}";
}

template <class F>
void put_array(std::string& out, const char* key, size_t n, F item) {
  out += "  \"";
  out += key;
  out += "\": [";
  for (size_t i = 0; i < n; ++i) {
    out += i ? ",\n    " : "\n    ";
    item(i);
  }
  out += n ? "\n  ]" : "]";
}

// ------------------------------------------------------------- parsing

const json& need(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object()) bad(ctx, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(ctx, std::string("missing key '") + key + "'");
  return *it;
}

long need_nat(const json& j, const std::string& ctx, long lo, long hi) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    bad(ctx, "expected an integer");
  const long v = j.get<long>();
  if (v < lo || v > hi)
    bad(ctx, "value " + std::to_string(v) + " outside [" + std::to_string(lo) +
                 ", " + std::to_string(hi) + "]");
  return v;
}

uint64_t need_u64(const json& j, const std::string& ctx) {
  if (!(j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0)))
    bad(ctx, "expected a non-negative integer");
  return j.get<uint64_t>();
}

std::string need_str(const json& j, const std::string& ctx) {
  if (!j.is_string()) bad(ctx, "expected a string");
  return j.get<std::string>();
}

bool need_bool(const json& j, const std::string& ctx) {
  if (!j.is_boolean()) bad(ctx, "expected a boolean");
  return j.get<bool>();
}

double need_num(const json& j, const std::string& ctx) {
  if (!j.is_number()) bad(ctx, "expected a number");
  return j.get<double>();
}

Mat parse_mat(const json& j, const std::string& ctx) {
  const long rows = need_nat(need(j, "rows", ctx), ctx + ".rows", 0, 1 << 16);
  const long cols = need_nat(need(j, "cols", ctx), ctx + ".cols", 0, 1 << 16);
  const json& data = need(j, "data", ctx);
  if (!data.is_array()) bad(ctx + ".data", "expected an array");
  if ((long)data.size() != rows * cols)
    bad(ctx + ".data", "length " + std::to_string(data.size()) +
                           ", expected rows*cols = " +
                           std::to_string(rows * cols));
  Mat m(rows, cols);
  for (long idx = 0; idx < rows * cols; ++idx) {
    const json& e = data[(size_t)idx];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
        !e[1].is_number())
      bad(ctx + ".data[" + std::to_string(idx) + "]",
          "expected a [re, im] pair");
    m(idx / cols, idx % cols) = cplx(e[0].get<double>(), e[1].get<double>());
  }
  return m;
}

Category parse_backend(const json& j) {
  const std::string kind = need_str(need(j, "kind", "backend"), "backend.kind");
  if (kind == "grid") {
    const long size = need_nat(need(j, "size", "backend"), "backend.size", 1, 64);
    return Category::grid_hilb((int)size);
  }
  if (kind != "group") bad("backend.kind", "unknown kind '" + kind + "'");
  const json& mult = need(j, "mult", "backend");
  if (!mult.is_array() || mult.empty()) bad("backend.mult", "expected a non-empty array");
  std::vector<std::vector<int>> table;
  for (size_t i = 0; i < mult.size(); ++i) {
    const json& row = mult[i];
    if (!row.is_array()) bad("backend.mult", "row " + std::to_string(i) + " is not an array");
    std::vector<int> r;
    for (size_t k = 0; k < row.size(); ++k)
      r.push_back((int)need_nat(row[k],
                                "backend.mult[" + std::to_string(i) + "][" +
                                    std::to_string(k) + "]",
                                0, (long)mult.size() - 1));
    table.push_back(std::move(r));
  }
  try {
    return Category::rep_group(GroupTable::from_table(table));
  } catch (const Error& e) {
    bad("backend.mult", e.what());
  }
}

Obj parse_object_body(const Category& cat, const json& j,
                      const std::string& ctx) {
  const std::string kind = need_str(need(j, "kind", ctx), ctx + ".kind");
  if (kind == "grid") {
    const json& dims = need(j, "dims", ctx);
    if (!dims.is_array()) bad(ctx + ".dims", "expected an array");
    const long n = (long)dims.size();
    Eigen::MatrixXi g((int)n, (int)n);
    for (long i = 0; i < n; ++i) {
      const json& row = dims[(size_t)i];
      if (!row.is_array() || (long)row.size() != n)
        bad(ctx + ".dims", "expected a square array of arrays");
      for (long k = 0; k < n; ++k)
        g(i, k) = (int)need_nat(row[(size_t)k],
                                ctx + ".dims[" + std::to_string(i) + "][" +
                                    std::to_string(k) + "]",
                                0, 1 << 16);
    }
    try {
      return cat.grid_object(g);
    } catch (const Error& e) {
      bad(ctx + ".dims", e.what());
    }
  }
  if (kind != "rep") bad(ctx + ".kind", "unknown kind '" + kind + "'");
  const json& mats = need(j, "matrices", ctx);
  if (!mats.is_array()) bad(ctx + ".matrices", "expected an array");
  std::vector<Mat> rep;
  for (size_t g = 0; g < mats.size(); ++g)
    rep.push_back(
        parse_mat(mats[g], ctx + ".matrices[" + std::to_string(g) + "]"));
  try {
    return cat.rep_object(rep);
  } catch (const Error& e) {
    bad(ctx + ".matrices", e.what());
  }
}

json parse_root(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    bad("json", e.what());
  }
}

Mor checked_piece(const Obj& dom, const Obj& cod, const Mat& m,
                  const std::string& ctx) {
  if (m.rows() != cod.dim() || m.cols() != dom.dim())
    bad(ctx, "shape " + std::to_string(m.rows()) + " x " +
                 std::to_string(m.cols()) + ", expected " +
                 std::to_string(cod.dim()) + " x " + std::to_string(dom.dim()));
  try {
    return Mor::checked(dom, cod, m);
  } catch (const Error& e) {
    bad(ctx, std::string("not a morphism: ") + e.what());
  }
}

}  // namespace

std::string instance_to_json(const InstanceFile& f) {
  std::string out = "{\n";
  put_array(out, "algebras", f.algebras.size(), [&](size_t i) {
    const NamedAlgebra& a = f.algebras[i];
    out += "{\"carrier\":" + jesc(a.carrier) + ",\"mult\":";
    put_mat(out, a.algebra.mult.mat());
    out += ",\"name\":" + jesc(a.name) + ",\"unit\":";
    put_mat(out, a.algebra.unit.mat());
    out += "}";
  });
  out += ",\n  \"backend\": ";
  put_backend(out, f.category);
  out += ",\n  \"format\": " + jesc(f.format) + ",\n  \"metadata\": ";
  {
    out += "{\"blocks\":[";
    for (size_t i = 0; i < f.metadata.blocks.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(f.metadata.blocks[i]);
    }
    out += "],\"labels\":{";
    bool first = true;
    for (const auto& [k, v] : f.metadata.labels) {
      if (!first) out += ',';
      first = false;
      out += jesc(k) + ":" + (v ? "true" : "false");
    }
    out += "},\"provenance\":" + jesc(f.metadata.provenance) +
           ",\"seed\":" + std::to_string(f.metadata.seed) + "}";
  }
  out += ",\n";
  put_array(out, "modules", f.modules.size(), [&](size_t i) {
    const NamedModule& m = f.modules[i];
    out += "{\"algebra\":" + jesc(m.algebra) + ",\"carrier\":" +
           jesc(m.carrier) + ",\"left\":";
    if (m.module.left)
      put_mat(out, m.module.left->mat());
    else
      out += "null";
    out += ",\"name\":" + jesc(m.name) + ",\"right\":";
    if (m.module.right)
      put_mat(out, m.module.right->mat());
    else
      out += "null";
    out += "}";
  });
  out += ",\n";
  put_array(out, "objects", f.objects.size(), [&](size_t i) {
    put_object(out, f.objects[i].object, &f.objects[i].name);
  });
  out += "\n}\n";
  return out;
}

InstanceFile instance_from_json(const std::string& text) {
  const json root = parse_root(text);
  InstanceFile f;
  f.format = need_str(need(root, "format", "instance"), "format");
  if (f.format != "qsf-instance/1")
    bad("format", "unsupported '" + f.format + "'");
  f.category = parse_backend(need(root, "backend", "instance"));

  const json& objs = need(root, "objects", "instance");
  if (!objs.is_array()) bad("objects", "expected an array");
  for (size_t i = 0; i < objs.size(); ++i) {
    const std::string ctx = "objects[" + std::to_string(i) + "]";
    NamedObject o;
    o.name = need_str(need(objs[i], "name", ctx), ctx + ".name");
    for (const auto& prev : f.objects)
      if (prev.name == o.name) bad(ctx + ".name", "duplicate '" + o.name + "'");
    o.object = parse_object_body(f.category, objs[i], ctx);
    f.objects.push_back(std::move(o));
  }
  auto find_object = [&](const std::string& name,
                         const std::string& ctx) -> const Obj& {
    for (const auto& o : f.objects)
      if (o.name == name) return o.object;
    bad(ctx, "unknown object '" + name + "'");
  };

  const json& algs = need(root, "algebras", "instance");
  if (!algs.is_array()) bad("algebras", "expected an array");
  const Obj unit_obj = f.category.unit();
  for (size_t i = 0; i < algs.size(); ++i) {
    const std::string ctx = "algebras[" + std::to_string(i) + "]";
    NamedAlgebra a;
    a.name = need_str(need(algs[i], "name", ctx), ctx + ".name");
    a.carrier = need_str(need(algs[i], "carrier", ctx), ctx + ".carrier");
    const Obj& x = find_object(a.carrier, ctx + ".carrier");
    a.algebra.carrier = x;
    a.algebra.mult =
        checked_piece(x.tensor(x), x,
                      parse_mat(need(algs[i], "mult", ctx), ctx + ".mult"),
                      ctx + ".mult");
    a.algebra.unit =
        checked_piece(unit_obj, x,
                      parse_mat(need(algs[i], "unit", ctx), ctx + ".unit"),
                      ctx + ".unit");
    f.algebras.push_back(std::move(a));
  }

  const json& mods = need(root, "modules", "instance");
  if (!mods.is_array()) bad("modules", "expected an array");
  for (size_t i = 0; i < mods.size(); ++i) {
    const std::string ctx = "modules[" + std::to_string(i) + "]";
    NamedModule m;
    m.name = need_str(need(mods[i], "name", ctx), ctx + ".name");
    m.algebra = need_str(need(mods[i], "algebra", ctx), ctx + ".algebra");
    m.carrier = need_str(need(mods[i], "carrier", ctx), ctx + ".carrier");
    const Algebra* acting = nullptr;
    for (const auto& a : f.algebras)
      if (a.name == m.algebra) acting = &a.algebra;
    if (!acting) bad(ctx + ".algebra", "unknown algebra '" + m.algebra + "'");
    const Obj& x = find_object(m.carrier, ctx + ".carrier");
    m.module.carrier = x;
    const json& left = need(mods[i], "left", ctx);
    if (!left.is_null())
      m.module.left =
          checked_piece(acting->carrier.tensor(x), x,
                        parse_mat(left, ctx + ".left"), ctx + ".left");
    const json& right = need(mods[i], "right", ctx);
    if (!right.is_null())
      m.module.right =
          checked_piece(x.tensor(acting->carrier), x,
                        parse_mat(right, ctx + ".right"), ctx + ".right");
    f.modules.push_back(std::move(m));
  }

  const json& meta = need(root, "metadata", "instance");
  f.metadata.seed = need_u64(need(meta, "seed", "metadata"), "metadata.seed");
  f.metadata.provenance =
      need_str(need(meta, "provenance", "metadata"), "metadata.provenance");
  const json& blocks = need(meta, "blocks", "metadata");
  if (!blocks.is_array()) bad("metadata.blocks", "expected an array");
  for (size_t i = 0; i < blocks.size(); ++i)
    f.metadata.blocks.push_back(
        (int)need_nat(blocks[i], "metadata.blocks[" + std::to_string(i) + "]",
                      0, 1 << 16));
  const json& labels = need(meta, "labels", "metadata");
  if (!labels.is_object()) bad("metadata.labels", "expected an object");
  for (auto it = labels.begin(); it != labels.end(); ++it)
    f.metadata.labels[it.key()] =
        need_bool(it.value(), "metadata.labels." + it.key());
  return f;
}

InstanceFile load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad(path, "cannot read file");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return instance_from_json(buf.str());
  } catch (const Error& e) {
    if (e.kind == Error::Kind::Parse)
      throw Error(Error::Kind::Parse, path + ": " + e.what());
    throw;
  }
}

void save_instance(const InstanceFile& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) bad(path, "cannot write file");
  out << instance_to_json(f);
  if (!out) bad(path, "write failed");
}

std::string certificate_to_json(const UnitarizationCertificate& c) {
  std::string out = "{\n  \"backend\": ";
  put_backend(out, c.output.carrier.category());
  out += ",\n  \"format\": \"qsf-certificate/1\"";
  out += ",\n  \"input_hash\": " + jesc(c.input_hash);
  out += ",\n  \"iso\": ";
  put_mat(out, c.iso.mat());
  out += ",\n  \"method\": " + jesc(c.method);
  out += ",\n  \"output\": {\"carrier\":";
  put_object(out, c.output.carrier, nullptr);
  out += ",\"mult\":";
  put_mat(out, c.output.mult.mat());
  out += ",\"unit\":";
  put_mat(out, c.output.unit.mat());
  out += "}";
  out += ",\n  \"residuals\": {\"frobenius\":" +
         canonical_number(c.residuals.frobenius) +
         ",\"iso\":" + canonical_number(c.residuals.iso) +
         ",\"special\":" + canonical_number(c.residuals.special) + "}";
  out += ",\n  \"stats\": ";
  put_stats(out, c.stats);
  out += ",\n";
  put_array(out, "summands", c.summands.size(), [&](size_t i) {
    const SummandTrace& t = c.summands[i];
    out += "{\"connected\":";
    out += t.connected ? "true" : "false";
    out += ",\"dim\":" + std::to_string(t.dim);
    out += ",\"method\":" + jesc(t.method);
    out += ",\"residual\":" + canonical_number(t.residual);
    out += ",\"stats\":";
    put_stats(out, t.stats);
    out += "}";
  });
  out += "\n}\n";
  return out;
}

namespace {

SolverStats parse_stats(const json& j, const std::string& ctx) {
  SolverStats s;
  s.iterations =
      (int)need_nat(need(j, "iterations", ctx), ctx + ".iterations", 0,
                    1L << 40);
  s.residual = need_num(need(j, "residual", ctx), ctx + ".residual");
  s.restarts =
      (int)need_nat(need(j, "restarts", ctx), ctx + ".restarts", 0, 1 << 20);
  s.seed = need_u64(need(j, "seed", ctx), ctx + ".seed");
  return s;
}

}  // namespace

UnitarizationCertificate certificate_from_json(const std::string& text,
                                               const Obj& input_carrier) {
  const json root = parse_root(text);
  const std::string format =
      need_str(need(root, "format", "certificate"), "format");
  if (format != "qsf-certificate/1")
    bad("format", "unsupported '" + format + "'");
  const Category cat = parse_backend(need(root, "backend", "certificate"));
  if (!(cat == input_carrier.category()))
    bad("backend", "certificate backend differs from the instance");

  UnitarizationCertificate c;
  c.input_hash =
      need_str(need(root, "input_hash", "certificate"), "input_hash");
  c.method = need_str(need(root, "method", "certificate"), "method");
  c.stats = parse_stats(need(root, "stats", "certificate"), "stats");

  const json& res = need(root, "residuals", "certificate");
  c.residuals.frobenius =
      need_num(need(res, "frobenius", "residuals"), "residuals.frobenius");
  c.residuals.iso = need_num(need(res, "iso", "residuals"), "residuals.iso");
  c.residuals.special =
      need_num(need(res, "special", "residuals"), "residuals.special");

  const json& outj = need(root, "output", "certificate");
  const Obj carrier =
      parse_object_body(cat, need(outj, "carrier", "output"), "output.carrier");
  c.output.carrier = carrier;
  // tampered records must still load, so the parts are taken at face
  // value after shape checks; verify_certificate recomputes everything
  const Mat multm = parse_mat(need(outj, "mult", "output"), "output.mult");
  if (multm.rows() != carrier.dim() ||
      multm.cols() != carrier.tensor(carrier).dim())
    bad("output.mult", "shape does not match the carrier");
  c.output.mult = Mor(carrier.tensor(carrier), carrier, multm);
  const Mat unitm = parse_mat(need(outj, "unit", "output"), "output.unit");
  if (unitm.rows() != carrier.dim() || unitm.cols() != cat.unit().dim())
    bad("output.unit", "shape does not match the carrier");
  c.output.unit = Mor(cat.unit(), carrier, unitm);

  const Mat isom = parse_mat(need(root, "iso", "certificate"), "iso");
  if (isom.rows() != carrier.dim() || isom.cols() != input_carrier.dim())
    bad("iso", "shape " + std::to_string(isom.rows()) + " x " +
                   std::to_string(isom.cols()) + ", expected " +
                   std::to_string(carrier.dim()) + " x " +
                   std::to_string(input_carrier.dim()));
  c.iso = Mor(input_carrier, carrier, isom);

  const json& sums = need(root, "summands", "certificate");
  if (!sums.is_array()) bad("summands", "expected an array");
  for (size_t i = 0; i < sums.size(); ++i) {
    const std::string ctx = "summands[" + std::to_string(i) + "]";
    SummandTrace t;
    t.connected = need_bool(need(sums[i], "connected", ctx), ctx + ".connected");
    t.dim = (int)need_nat(need(sums[i], "dim", ctx), ctx + ".dim", 0, 1 << 16);
    t.method = need_str(need(sums[i], "method", ctx), ctx + ".method");
    t.residual = need_num(need(sums[i], "residual", ctx), ctx + ".residual");
    t.stats = parse_stats(need(sums[i], "stats", ctx), ctx + ".stats");
    c.summands.push_back(std::move(t));
  }
  return c;
}

void save_certificate(const UnitarizationCertificate& c,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) bad(path, "cannot write file");
  out << certificate_to_json(c);
  if (!out) bad(path, "write failed");
}

UnitarizationCertificate load_certificate(const std::string& path,
                                          const Obj& input_carrier) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad(path, "cannot read file");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return certificate_from_json(buf.str(), input_carrier);
  } catch (const Error& e) {
    if (e.kind == Error::Kind::Parse)
      throw Error(Error::Kind::Parse, path + ": " + e.what());
    throw;
  }
}

std::string report_to_json(const RunReport& r) {
  std::string out = "{\n";
  put_array(out, "checks", r.checks.size(), [&](size_t i) {
    out += "{\"name\":" + jesc(r.checks[i].name) +
           ",\"residual\":" + canonical_number(r.checks[i].residual) + "}";
  });
  out += ",\n  \"command\": " + jesc(r.command);
  out += ",\n  \"input\": " + jesc(r.input);
  out += ",\n  \"input_hash\": " + jesc(r.input_hash);
  out += ",\n";
  put_array(out, "notes", r.notes.size(),
            [&](size_t i) { out += jesc(r.notes[i]); });
  out += ",\n  \"pass\": ";
  out += r.pass ? "true" : "false";
  out += ",\n  \"seed\": " + std::to_string(r.seed);
  out += ",\n  \"tolerance\": " + canonical_number(r.tolerance);
  out += ",\n  \"tool\": " + jesc(r.tool);
  out += ",\n  \"wall_time_ms\": " + canonical_number(r.wall_time_ms);
  out += "\n}\n";
  return out;
}

// ---------------------------------------------------------- generators

namespace {

Obj plain_space(const Category& cat, int d) {
  return cat.rep_object({Mat::Identity(d, d)});
}

Mat gaussian_mat(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

GroupTable group_by_name(const std::string& s) {
  if (s == "trivial") return GroupTable::trivial();
  if (s == "s3") return GroupTable::symmetric(3);
  if (s == "s4") return GroupTable::symmetric(4);
  if (s.size() >= 2 && s[0] == 'z') {
    int n = 0;
    for (size_t i = 1; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') { n = 0; break; }
      n = n * 10 + (s[i] - '0');
    }
    if (n >= 1 && n <= 24) return GroupTable::cyclic(n);
  }
  bad("group", "unknown group '" + s + "'");
}

Obj conjugation_object(const Category& cat, const GroupTable& g) {
  std::vector<Mat> rep;
  for (int a = 0; a < g.order(); ++a) {
    Mat m = Mat::Zero(g.order(), g.order());
    for (int h = 0; h < g.order(); ++h)
      m(g.mult[g.mult[a][h]][g.inverse[a]], h) = 1.0;
    rep.push_back(m);
  }
  return cat.rep_object(rep);
}

Obj coset_object(const Category& cat, const GroupTable& g, int gen) {
  std::vector<int> subgroup = {g.identity};
  int cur = gen;
  while (cur != g.identity) {
    subgroup.push_back(cur);
    cur = g.mult[cur][gen];
  }
  std::vector<int> coset_of(g.order(), -1);
  std::vector<int> reps;
  for (int e = 0; e < g.order(); ++e) {
    if (coset_of[e] >= 0) continue;
    const int idx = (int)reps.size();
    reps.push_back(e);
    for (int h : subgroup) coset_of[g.mult[e][h]] = idx;
  }
  const int k = (int)reps.size();
  std::vector<Mat> rep;
  for (int a = 0; a < g.order(); ++a) {
    Mat m = Mat::Zero(k, k);
    for (int j = 0; j < k; ++j) m(coset_of[g.mult[a][reps[j]]], j) = 1.0;
    rep.push_back(m);
  }
  return cat.rep_object(rep);
}

Mor random_invertible(const Obj& x, std::mt19937_64& rng) {
  const int d = x.dim();
  for (int attempt = 0; attempt < 32; ++attempt) {
    Mat s = Mat::Identity(d, d) + 0.35 * gaussian_mat(d, d, rng);
    Eigen::JacobiSVD<Mat> svd(s);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) > 0.05 * sv(0)) return Mor(x, x, s);
  }
  throw Error(Error::Kind::Internal, "generator: no invertible scramble");
}

void observed_labels(InstanceFile& f, const Algebra& a) {
  f.metadata.labels["connected"] = is_connected(a).connected;
  f.metadata.labels["cstar_frobenius"] = verify_cstar_frobenius(a).pass;
  f.metadata.labels["special"] = is_special(a).pass;
}

std::string blocks_string(const std::vector<int>& blocks) {
  std::string out;
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(blocks[i]);
  }
  return out;
}

}  // namespace

InstanceFile generate_instance(const std::string& kind,
                               const GenerateParams& p, uint64_t seed) {
  InstanceFile f;
  f.metadata.seed = seed;
  std::mt19937_64 rng(seed);

  if (kind == "scrambled-semisimple" || kind == "frobenius-nonspecial") {
    if (p.blocks.empty()) bad("blocks", "need at least one block size");
    long total = 0;
    for (int n : p.blocks) {
      if (n < 1 || n > 6) bad("blocks", "block sizes must be in [1, 6]");
      total += (long)n * n;
    }
    if (total > 144) bad("blocks", "total dimension above 144");

    f.category = Category::rep_group(GroupTable::trivial());
    const bool nonspecial = kind == "frobenius-nonspecial";
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Algebra a;
    for (size_t k = 0; k < p.blocks.size(); ++k) {
      const int n = p.blocks[k];
      double scale = 1.0;
      if (nonspecial) {
        // keep every block visibly away from the coisometric scale
        do {
          scale = 0.6 + 1.2 * u(rng);
        } while (std::abs(scale - 1.0 / std::sqrt(double(n))) < 0.05);
      }
      Algebra part = matrix_algebra(plain_space(f.category, n * n), n, scale);
      a = k == 0 ? part : algebra_direct_sum(a, part);
    }
    Mor s = nonspecial
                ? Mor(a.carrier, a.carrier,
                      Mat(Eigen::HouseholderQR<Mat>(
                              gaussian_mat((int)total, (int)total, rng))
                              .householderQ()))
                : random_invertible(a.carrier, rng);
    Algebra scrambled = transport_algebra(a, s).algebra;

    f.objects.push_back({"A", scrambled.carrier});
    f.algebras.push_back({kind, "A", scrambled});
    f.metadata.blocks = p.blocks;
    f.metadata.provenance =
        kind + " blocks=" + blocks_string(p.blocks) + " seed=" +
        std::to_string(seed);
    f.metadata.labels["separable"] = true;
    observed_labels(f, scrambled);
    if (nonspecial &&
        (f.metadata.labels["special"] || !f.metadata.labels["cstar_frobenius"]))
      throw Error(Error::Kind::Internal,
                  "generator: scale selection failed to avoid coisometry");
    return f;
  }

  if (kind == "group-algebra") {
    const GroupTable g = group_by_name(p.group);
    f.category = Category::rep_group(g);
    Algebra a = group_algebra(conjugation_object(f.category, g), g);
    f.objects.push_back({"A", a.carrier});
    f.algebras.push_back({kind, "A", a});
    f.metadata.provenance =
        "group-algebra group=" + p.group + " action=conjugation seed=" +
        std::to_string(seed);
    f.metadata.labels["separable"] = true;
    observed_labels(f, a);
    return f;
  }

  if (kind == "coset-algebra") {
    const GroupTable g = group_by_name(p.group);
    if (p.subgroup_gen < 0 || p.subgroup_gen >= g.order())
      bad("subgroup", "generator index outside the group");
    f.category = Category::rep_group(g);
    Algebra a = pointwise_algebra(coset_object(f.category, g, p.subgroup_gen));
    f.objects.push_back({"A", a.carrier});
    f.algebras.push_back({kind, "A", a});
    f.metadata.provenance = "coset-algebra group=" + p.group + " subgroup=<" +
                            std::to_string(p.subgroup_gen) + "> seed=" +
                            std::to_string(seed);
    f.metadata.labels["separable"] = true;
    observed_labels(f, a);
    return f;
  }

  if (kind == "dual-numbers") {
    f.category = Category::rep_group(GroupTable::trivial());
    Algebra a = dual_numbers_algebra(plain_space(f.category, 2));
    f.objects.push_back({"A", a.carrier});
    f.algebras.push_back({kind, "A", a});
    f.metadata.provenance = "dual-numbers seed=" + std::to_string(seed);
    f.metadata.labels["separable"] = false;
    observed_labels(f, a);
    return f;
  }

  bad("kind", "unknown kind '" + kind + "'");
}

}  // namespace qsf
