#ifndef GSBP_REGISTRY_HPP_
#define GSBP_REGISTRY_HPP_

// Named schemes. Family schemes are built from nodes; the two
// diagonally-implicit schemes are stored as operators (nodes, norm, D and
// projections to 16 digits) and run through the same verification as any
// imported operator.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsbp/io.hpp"
#include "gsbp/operator.hpp"
#include "gsbp/tableau.hpp"

namespace gsbp {

template <class Scalar = double>
struct Scheme {
  std::string name;
  std::optional<GsbpOperator<Scalar>> op;  ///< empty for non-GSBP tableaus
  ButcherTableau<Scalar> tableau;
};

namespace detail {

inline const char* const kDirk3 = R"({
  "name": "dirk3",
  "family": "custom",
  "interval": ["0", "1"],
  "nodes": ["0.0585104413419415", "0.8064574322792799", "0.2834542075672883"],
  "H": ["0.1008717264855379", "0.4574278841698629", "0.4417003893445992"],
  "D": [["-12.3737796851209214", "-3.4099304182988046", "15.7837101034197260"],
        ["-1.6186577488308495", "1.2158491567586837", "0.4028085920721658"],
        ["-0.9626808228023090", "1.4979849320764039", "-0.5353041092740949"]],
  "chi0": ["1.7239953104443755", "0.1995165337199744", "-0.9235118441643498"],
  "chif": ["-0.6898048930346554", "1.0733748002069487", "0.6164300928277068"]
})";

inline const char* const kDirk4 = R"({
  "name": "dirk4",
  "family": "custom",
  "interval": ["0", "1"],
  "nodes": ["0.5975501145870646", "0.1236947892666459", "0.9813648784844768", "0.2188347157850838"],
  "H": ["0.5263633266867775", "0.3002573924935185", "0.1447678514141155", "0.0286114294055885"],
  "D": [["0.1993658318073258", "-1.654157580888287", "1.006020084619771", "0.4487716644611903"],
        ["-1.648792506689303", "-1.212963928918776", "1.978966716941006", "0.8827897186670728"],
        ["3.217338082860363", "-1.615712813301921", "-0.4880781006041668", "-1.113547168954275"],
        ["1.271022350640990", "-0.6382938457303877", "0.6005231745715582", "-1.233251679482160"]],
  "chi0": ["0.8808689243587871", "0.9884420520048577", "-0.6011474168414327", "-0.2681635595222120"],
  "chif": ["0.9928785357819795", "-0.4986129934126102", "0.4691078563418350", "0.03662660128879568"]
})";

struct FamilyEntry {
  const char* prefix;
  NodeFamily family;
  int nmin, nmax;
};

inline constexpr FamilyEntry kFamilies[] = {
    {"lobatto-iiic-", NodeFamily::LobattoLegendre, 2, 6},
    {"radau-ia-", NodeFamily::RadauLeft, 2, 5},
    {"radau-iia-", NodeFamily::RadauRight, 2, 5},
    {"gauss-gsbp-", NodeFamily::Gauss, 2, 5},
};

}  // namespace detail

/// Stored operator document for "dirk3"/"dirk4".
inline io::json stored_operator_document(const std::string& name) {
  if (name == "dirk3") return io::json::parse(detail::kDirk3);
  if (name == "dirk4") return io::json::parse(detail::kDirk4);
  throw InputError("no stored operator named '" + name + "'");
}

inline std::vector<std::string> registry_names() {
  std::vector<std::string> out;
  for (const auto& f : detail::kFamilies)
    for (int n = f.nmin; n <= f.nmax; ++n) out.push_back(f.prefix + std::to_string(n));
  out.push_back("dirk3");
  out.push_back("dirk4");
  for (int n = 1; n <= 4; ++n) out.push_back("gauss-collocation-" + std::to_string(n));
  return out;
}

template <class Scalar = double>
Scheme<Scalar> lookup_scheme(const std::string& name) {
  Scheme<Scalar> s;
  s.name = name;
  if (name == "dirk3" || name == "dirk4") {
    s.op = io::operator_from_json<Scalar>(stored_operator_document(name));
    s.tableau = to_tableau(*s.op);
    s.tableau.name = name;
    return s;
  }
  for (const auto& f : detail::kFamilies) {
    const std::string prefix = f.prefix;
    if (name.rfind(prefix, 0) != 0) continue;
    int n = 0;
    try {
      n = std::stoi(name.substr(prefix.size()));
    } catch (const std::exception&) {
      break;
    }
    if (n < f.nmin || n > f.nmax) break;
    s.op = build_family_operator<Scalar>(f.family, n);
    s.op->name = name;
    s.tableau = to_tableau(*s.op);
    s.tableau.name = name;
    return s;
  }
  const std::string grk = "gauss-collocation-";
  if (name.rfind(grk, 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(name.substr(grk.size()));
    } catch (const std::exception&) {
    }
    if (n >= 1 && n <= 4) {
      Vec<Scalar> c(1);
      c(0) = Scalar(1) / Scalar(2);
      if (n > 1) c = build_nodes<Scalar>(NodeFamily::Gauss, n).nodes.nodes;
      s.tableau = collocation_tableau<Scalar>(c, name);
      return s;
    }
  }
  throw InputError("unknown scheme '" + name + "'");
}

/// A scheme from a JSON document: a tableau document (has "A") is taken
/// as an imported Runge-Kutta scheme, anything else as a GSBP operator.
inline Scheme<double> scheme_from_document(const io::json& doc, const std::string& fallback_name) {
  Scheme<double> s;
  if (doc.is_object() && doc.contains("A")) {
    s.tableau = io::tableau_from_json(doc).tableau;
    if (!doc.contains("name")) s.tableau.name = fallback_name;
    s.name = s.tableau.name;
    return s;
  }
  s.op = io::operator_from_json<double>(doc);
  if (!doc.contains("name")) s.op->name = fallback_name;
  s.tableau = to_tableau(*s.op);
  s.name = s.op->name;
  s.tableau.name = s.name;
  return s;
}

/// Registry name, or "file:<path>" for a stored operator or tableau.
inline Scheme<double> resolve_scheme(const std::string& spec) {
  if (spec.rfind("file:", 0) == 0) {
    const std::filesystem::path path = spec.substr(5);
    return scheme_from_document(io::read_json_file(path), path.stem().string());
  }
  return lookup_scheme<double>(spec);
}

}  // namespace gsbp

#endif  // GSBP_REGISTRY_HPP_
