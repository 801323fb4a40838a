#include "ymmb/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace ymmb {

namespace {

void check_schema(const Json& j, const char* what) {
  if (!j.is_object()) throw IoError(std::string(what) + ": expected an object");
  if (j.value("schema", "") != kSchema)
    throw IoError(std::string(what) + ": schema is not " + kSchema);
}

template <class T>
T field(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw IoError(std::string(what) + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string(what) + ": bad '" + key + "': " + e.what());
  }
}

Json quaternion(const GroupElement& q) { return Json::array({q.w(), q.x(), q.y(), q.z()}); }

GroupElement quaternion_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw IoError("quaternion needs 4 components");
  GroupElement q(v[0], v[1], v[2], v[3]);
  if (std::abs(q.norm() - 1.0) > 1e-9) throw IoError("quaternion is not a unit");
  return q;
}

Json vector(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json line_json(const CertifiedLine& l, double delta) {
  Json j;
  j["kind"] = l.kind;
  j["parameters"] = l.parameters;
  j["distance"] = checked(l.distance, delta, l.distance < delta);
  j["cascades"] = l.cascades;
  return j;
}

}  // namespace

std::string hash_string(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

Json checked(double value, double tolerance, bool pass) {
  Json j;
  j["value"] = value;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  return j;
}

// ---------------------------------------------------------------- complex

Json complex_to_json(const OrientedCellComplex& c) {
  Json j;
  j["schema"] = kSchema;
  j["vertices"] = c.vertex_count;
  Json edges = Json::array();
  for (const Edge& e : c.edges) edges.push_back({e.source, e.target});
  j["edges"] = edges;
  Json faces = Json::array();
  for (const Face& f : c.faces) {
    Json word = Json::array();
    for (const SignedEdge& s : f.word) word.push_back(s.sign * (s.edge + 1));
    faces.push_back({{"base", f.base}, {"word", word}});
  }
  j["faces"] = faces;
  j["weights"] = c.face_weights;
  j["edge_weights"] = c.edge_weights;
  j["genus"] = c.genus;
  j["base_vertex"] = c.base_vertex;
  j["hash"] = hash_string(complex_hash(c));
  return j;
}

OrientedCellComplex complex_from_json(const Json& j) {
  constexpr const char* what = "complex";
  check_schema(j, what);
  OrientedCellComplex c;
  c.vertex_count = field<int>(j, "vertices", what);
  for (const auto& e : field<std::vector<std::vector<int>>>(j, "edges", what)) {
    if (e.size() != 2) throw IoError("complex: edge needs [source, target]");
    c.edges.push_back({e[0], e[1]});
  }
  if (!j.contains("faces") || !j.at("faces").is_array()) throw IoError("complex: missing 'faces'");
  for (const Json& fj : j.at("faces")) {
    Face f;
    f.base = field<int>(fj, "base", "face");
    for (int s : field<std::vector<int>>(fj, "word", "face")) {
      if (s == 0) throw IoError("complex: face word entry 0");
      f.word.push_back({std::abs(s) - 1, s > 0 ? 1 : -1});
    }
    c.faces.push_back(std::move(f));
  }
  c.face_weights = field<std::vector<double>>(j, "weights", what);
  c.edge_weights = j.contains("edge_weights") ? field<std::vector<double>>(j, "edge_weights", what)
                                              : std::vector<double>(c.edges.size(), 1.0);
  c.genus = field<int>(j, "genus", what);
  c.base_vertex = j.value("base_vertex", 0);
  const ValidationReport v = validate(c);
  if (!v.ok()) {
    std::string msg = "complex: invalid:";
    for (const auto& ch : v.checks)
      if (!ch.passed) msg += " " + ch.name + " (" + ch.detail + ")";
    throw IoError(msg);
  }
  if (j.contains("hash") && j.at("hash") != hash_string(complex_hash(c)))
    throw IoError("complex: stored hash does not match contents");
  return c;
}

// ---------------------------------------------------------------- connection

Json connection_to_json(const Connection& a) {
  Json j;
  j["schema"] = kSchema;
  j["group"] = to_string(a.group.kind());
  j["complex_hash"] = a.complex ? hash_string(complex_hash(*a.complex)) : "";
  Json edges = Json::array();
  for (const GroupElement& u : a.edges) edges.push_back(quaternion(u));
  j["edges"] = edges;
  return j;
}

Connection connection_from_json(const Json& j, std::shared_ptr<const OrientedCellComplex> complex) {
  constexpr const char* what = "connection";
  check_schema(j, what);
  if (!complex) throw IoError("connection: no complex");
  const std::string expected = hash_string(complex_hash(*complex));
  if (field<std::string>(j, "complex_hash", what) != expected)
    throw IoError("connection: complex hash mismatch (stored " + j.at("complex_hash").get<std::string>() +
                  ", expected " + expected + ")");
  GroupKind kind;
  try {
    kind = group_kind_from_string(field<std::string>(j, "group", what));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("connection: ") + e.what());
  }
  Connection a = Connection::trivial(complex, LieGroup(kind));
  const Json& edges = j.at("edges");
  if (!edges.is_array() || edges.size() != a.edges.size()) throw IoError("connection: edge count mismatch");
  for (std::size_t e = 0; e < a.edges.size(); ++e) {
    try {
      a.edges[e] = quaternion_from(edges[e]);
    } catch (const nlohmann::json::exception& ex) {
      throw IoError(std::string("connection: ") + ex.what());
    }
  }
  return a;
}

// ---------------------------------------------------------------- bank

Json bank_to_json(const PerturbationBank& bank) {
  Json j;
  j["schema"] = kSchema;
  std::string hash;
  Json entries = Json::array();
  for (const auto& en : bank.entries()) {
    const ModelPerturbation& t = en.term;
    if (hash.empty() && t.reference.complex) hash = hash_string(complex_hash(*t.reference.complex));
    Json e;
    e["reference"] = connection_to_json(t.reference);
    Json eta = Json::array();
    for (const AlgebraElement& x : t.eta.values) eta.push_back({x[0], x[1], x[2]});
    e["eta"] = eta;
    e["k"] = t.k;
    e["lambda"] = en.lambda;
    e["C"] = t.constant;
    entries.push_back(e);
  }
  j["complex_hash"] = hash;
  j["norm"] = bank.norm();
  j["entries"] = entries;
  return j;
}

PerturbationBank bank_from_json(const Json& j, std::shared_ptr<const OrientedCellComplex> complex) {
  constexpr const char* what = "bank";
  check_schema(j, what);
  if (!complex) throw IoError("bank: no complex");
  const SpanningTree tree = spanning_tree(*complex);
  PerturbationBank bank(tree);
  if (!j.contains("entries") || !j.at("entries").is_array()) throw IoError("bank: missing 'entries'");
  std::vector<bool> active(complex->edges.size(), true);
  for (int e : tree.tree_edges) active[e] = false;
  for (const Json& e : j.at("entries")) {
    ModelPerturbation t;
    t.reference = connection_from_json(field<Json>(e, "reference", what), complex);
    const auto eta = field<std::vector<std::vector<double>>>(e, "eta", what);
    if (eta.size() != complex->edges.size()) throw IoError("bank: eta edge count mismatch");
    t.eta = TangentField::zeros(eta.size());
    t.eta.active = active;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      if (eta[i].size() != 3) throw IoError("bank: eta needs 3 components per edge");
      t.eta.values[i] = AlgebraElement(eta[i][0], eta[i][1], eta[i][2]);
    }
    t.k = field<int>(e, "k", what);
    if (t.k < 1) throw IoError("bank: k must be positive");
    t.constant = field<double>(e, "C", what);
    bank.add(std::move(t), field<double>(e, "lambda", what));
  }
  return bank;
}

// ---------------------------------------------------------------- trajectories

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << "s,E,gradnorm\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < t.s.size(); ++i) out << t.s[i] << ',' << t.energy[i] << ',' << t.grad_norm[i] << '\n';
  out.precision(old);
}

Json trajectory_to_json(const Trajectory& t, double tol_g) {
  Json j;
  j["schema"] = kSchema;
  j["status"] = to_string(t.status);
  j["samples"] = t.s.size();
  j["rejected_steps"] = t.rejected_steps;
  if (!t.s.empty()) {
    j["s_end"] = t.s.back();
    j["energy_start"] = t.energy.front();
    j["energy_end"] = t.energy.back();
    const double g = t.grad_norm.back();
    j["grad_norm_end"] = checked(g, tol_g, g <= tol_g);
  }
  if (!t.points.empty()) {
    j["start"] = vector(t.points.front());
    j["end"] = vector(t.points.back());
  }
  if (t.limit_id) j["limit_id"] = *t.limit_id;
  return j;
}

// ---------------------------------------------------------------- reports

Json survey_to_json(const SurveyResult& s) {
  Json j;
  j["schema"] = kSchema;
  j["flows"] = s.flows;
  j["saddle_searches"] = s.saddle_searches;
  j["outliers"] = s.outliers.size();
  Json ms = Json::array();
  for (const CriticalManifold& c : s.manifolds) {
    Json m;
    m["id"] = c.id;
    m["energy"] = c.energy;
    m["ind_ym"] = c.index;
    m["dimension"] = c.dimension;
    m["pca_dimension"] = c.pca_dimension;
    m["orbit_dimension"] = c.orbit_dimension;
    m["representatives"] = c.representatives.size();
    m["point_hash"] = c.representatives.empty() ? "" : hash_string(point_hash(c.representatives[0]));
    m["fingerprint"] = vector(c.fingerprint);
    m["spectrum"] = vector(c.spectrum);
    const MorseBottReport& mb = c.morse_bott;
    m["morse_bott"] = {{"pass", mb.passed},
                       {"kernel_dimension", mb.kernel_dimension},
                       {"pca_dimension", mb.pca_dimension},
                       {"orbit_dimension", mb.orbit_dimension},
                       {"orbit_type", mb.orbit_type},
                       {"kernel_constant", mb.kernel_constant},
                       {"orbit_constant", mb.orbit_constant},
                       {"representative_kernels", mb.representative_kernels},
                       {"representative_orbits", mb.representative_orbits},
                       {"detail", mb.detail}};
    ms.push_back(m);
  }
  j["manifolds"] = ms;
  return j;
}

Json homology_to_json(const HomologyReport& r, const HomologyOptions& o) {
  const CascadeChainComplex& cc = r.complex;
  const double delta = o.cascade.delta_match;
  Json j;
  j["schema"] = kSchema;
  j["seed"] = o.seed;
  j["partial"] = r.partial;

  Json gens = Json::array();
  for (std::size_t i = 0; i < cc.generators.size(); ++i) {
    const Generator& g = cc.generators[i];
    Json gj;
    gj["manifold"] = g.manifold;
    gj["point_hash"] = hash_string(g.point_hash);
    gj["ind_ym"] = g.ind_f;
    gj["ind_h"] = g.ind_h;
    gj["Ind"] = g.Ind;
    if (i < r.points.size()) {
      const HCriticalPoint& p = r.points[i];
      gj["h_value"] = p.h_value;
      gj["h_grad_norm"] = checked(p.grad_norm, o.h.grad_tol, p.grad_norm <= o.h.grad_tol);
      for (const CriticalManifold& m : r.survey.manifolds)
        if (m.id == p.manifold) gj["energy"] = m.energy;
    }
    gens.push_back(gj);
  }
  j["generators"] = gens;

  Json bounds = Json::object();
  for (const auto& [k, m] : cc.boundaries) bounds[std::to_string(k)] = m;
  j["boundaries"] = bounds;
  j["d_squared_zero"] = {{"pass", verify_chain(cc)}};
  j["betti"] = r.betti;

  Json prov = Json::array();
  for (const auto& [key, lines] : cc.provenance) {
    const auto& [k, row, col] = key;
    Json e;
    e["k"] = k;
    e["row"] = row;
    e["col"] = col;
    e["from"] = cc.by_degree.at(k).at(col);
    e["to"] = cc.by_degree.at(k - 1).at(row);
    Json ls = Json::array();
    bool pass = true;
    for (const CertifiedLine& l : lines) {
      ls.push_back(line_json(l, delta));
      pass = pass && l.distance < delta;
    }
    const auto& rows = cc.boundaries.at(k);
    e["entry"] = rows.at(row).at(col);
    e["lines"] = ls;
    e["pass"] = pass && static_cast<int>(lines.size() % 2) == rows.at(row).at(col);
    prov.push_back(e);
  }
  j["provenance"] = prov;

  j["tolerances"] = {{"eps_shoot", o.cascade.eps_shoot},
                     {"delta_match", delta},
                     {"eps_h", o.cascade.eps_h},
                     {"param_tol", o.cascade.param_tol},
                     {"tol_g", o.cascade.flow.tol_g},
                     {"h_grad_tol", o.h.grad_tol}};
  j["notes"] = r.notes;
  return j;
}

}  // namespace ymmb
