#ifndef GSBP_IO_HPP_
#define GSBP_IO_HPP_

// JSON documents for operators and tableaus. All reals are written as
// decimal strings with 17 significant digits; readers also accept plain
// JSON numbers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gsbp/operator.hpp"
#include "gsbp/tableau.hpp"

namespace gsbp::io {

using json = nlohmann::ordered_json;

template <class Scalar = double>
Scalar read_real(const json& j, const std::string& where) {
  Scalar v;
  if (j.is_string()) {
    v = parse_scalar<Scalar>(j.get<std::string>());
  } else if (j.is_number()) {
    v = static_cast<Scalar>(j.get<double>());
  } else {
    throw InputError(where + ": expected a real");
  }
  if (!std::isfinite(to_double(v))) throw InputError(where + ": non-finite entry");
  return v;
}

template <class Scalar = double>
Vec<Scalar> read_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array");
  Vec<Scalar> v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v(i) = read_real<Scalar>(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

template <class Scalar = double>
Mat<Scalar> read_matrix(const json& j, const std::string& where, Eigen::Index rows,
                        Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw InputError(where + ": expected " + std::to_string(rows) + " rows");
  Mat<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(where + ": row " + std::to_string(i) + " does not have " +
                       std::to_string(cols) + " entries");
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = read_real<Scalar>(row[k], where + "[" + std::to_string(i) + "][" +
                                              std::to_string(k) + "]");
  }
  return m;
}

inline json write_vector(const VecD& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(format_double(v(i)));
  return out;
}

inline json write_matrix(const MatD& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(write_vector(VecD(m.row(i).transpose())));
  return out;
}

// ---------------------------------------------------------------- operator

inline json operator_to_json(const GsbpOperator<double>& op) {
  json doc;
  doc["name"] = op.name;
  doc["family"] = std::string(to_string(op.family));
  doc["interval"] = json::array({format_double(op.t0), format_double(op.tf)});
  doc["nodes"] = write_vector(op.t);
  if (op.norm_kind == NormKind::Diagonal) {
    doc["H"] = write_vector(op.H.diagonal());
  } else {
    doc["H"] = write_matrix(op.H);
  }
  doc["Theta"] = write_matrix(op.theta);
  doc["chi0"] = write_vector(op.proj.chi0);
  doc["chif"] = write_vector(op.proj.chif);
  doc["declared"] = {{"q", op.q}, {"tau", op.tau}, {"r", op.proj.r}};
  return doc;
}

/// Parse and verify an operator document. Theta may be replaced by D
/// (then Theta = H D). The declared orders are informational only.
template <class Scalar = double>
GsbpOperator<Scalar> operator_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("operator document must be an object");
  for (const char* key : {"nodes", "H", "chi0", "chif"})
    if (!doc.contains(key)) throw InputError(std::string("operator document missing '") + key + "'");
  if (!doc.contains("Theta") && !doc.contains("D"))
    throw InputError("operator document needs 'Theta' or 'D'");

  const Vec<Scalar> t = read_vector<Scalar>(doc["nodes"], "nodes");
  const Eigen::Index n = t.size();
  Scalar t0(0), tf(1);
  if (doc.contains("interval")) {
    const Vec<Scalar> iv = read_vector<Scalar>(doc["interval"], "interval");
    if (iv.size() != 2) throw InputError("interval must have two entries");
    t0 = iv(0);
    tf = iv(1);
  }
  Mat<Scalar> H;
  const json& hj = doc["H"];
  if (hj.is_array() && !hj.empty() && hj[0].is_array()) {
    H = read_matrix<Scalar>(hj, "H", n, n);
  } else {
    const Vec<Scalar> d = read_vector<Scalar>(hj, "H");
    if (d.size() != n) throw InputError("H diagonal length differs from node count");
    H = d.asDiagonal();
  }
  Mat<Scalar> theta = doc.contains("Theta") ? read_matrix<Scalar>(doc["Theta"], "Theta", n, n)
                                            : Mat<Scalar>(H * read_matrix<Scalar>(doc["D"], "D", n, n));
  const Vec<Scalar> chi0 = read_vector<Scalar>(doc["chi0"], "chi0");
  const Vec<Scalar> chif = read_vector<Scalar>(doc["chif"], "chif");
  const NodeFamily family =
      doc.contains("family") ? parse_family(doc["family"].get<std::string>()) : NodeFamily::Custom;
  const std::string name = doc.value("name", std::string("imported"));

  GsbpOperator<Scalar> op = assemble_operator<Scalar>(name, family, t, t0, tf, H, theta, chi0, chif);
  return op;
}

// ----------------------------------------------------------------- tableau

inline json tableau_to_json(const ButcherTableau<double>& tab) {
  json doc;
  doc["name"] = tab.name;
  doc["n"] = tab.stages();
  doc["A"] = write_matrix(tab.A);
  doc["b"] = write_vector(tab.b);
  doc["c"] = write_vector(tab.c);
  doc["structure"] = std::string(to_string(tab.structure));
  doc["provenance"] = tab.provenance.label();
  return doc;
}

struct ImportedTableau {
  ButcherTableau<double> tableau;
  double stage_consistency_defect = 0.0;
};

/// Imported tableaus skip GSBP invariants; structure is detected from A
/// and the stage-consistency defect max|A1 - c| is recorded.
inline ImportedTableau tableau_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("tableau document must be an object");
  for (const char* key : {"A", "b", "c"})
    if (!doc.contains(key)) throw InputError(std::string("tableau document missing '") + key + "'");
  ImportedTableau out;
  auto& tab = out.tableau;
  tab.b = read_vector<double>(doc["b"], "b");
  const Eigen::Index n = tab.b.size();
  if (n < 1) throw InputError("tableau needs at least one stage");
  if (doc.contains("n") && doc["n"].get<Eigen::Index>() != n)
    throw InputError("tableau 'n' disagrees with length of b");
  tab.c = read_vector<double>(doc["c"], "c");
  if (tab.c.size() != n) throw InputError("length of c differs from n");
  tab.A = read_matrix<double>(doc["A"], "A", n, n);
  tab.name = doc.value("name", std::string("imported"));
  tab.structure = detect_structure(tab.A);
  const std::string prov = doc.value("provenance", std::string("imported"));
  if (prov.rfind("gsbp:", 0) == 0) {
    tab.provenance = {true, prov.substr(5)};
  } else {
    tab.provenance = {false, {}};
  }
  out.stage_consistency_defect = stage_consistency_defect(tab);
  return out;
}

// ------------------------------------------------------------------- files

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
}

/// Write via a temporary sibling and rename, so readers never see a
/// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw InputError("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace gsbp::io

#endif  // GSBP_IO_HPP_
