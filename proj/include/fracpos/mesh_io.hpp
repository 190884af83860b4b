#ifndef FRACPOS_MESH_IO_HPP
#define FRACPOS_MESH_IO_HPP

// Reader and writer for the Triangle .node/.ele text layout.
//
//   .node:  <#nodes> 2 <#attributes> <#boundary markers (0 or 1)>
//           <index> <x> <y> [attributes...] [marker]
//   .ele:   <#triangles> 3 <#attributes>
//           <index> <n1> <n2> <n3> [attributes...]
//
// '#' starts a comment. Indices may be 0- or 1-based; the base is taken
// from the first node index and must be used consistently by the .ele file.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fracpos/errors.hpp"
#include "fracpos/mesh.hpp"

namespace fracpos {

namespace detail {

/// Next non-empty, comment-stripped line split into tokens.
inline bool next_record(std::istream& in, std::vector<std::string>& tokens,
                        int& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    tokens.clear();
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    if (!tokens.empty()) return true;
  }
  return false;
}

inline double to_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(where + ": expected a number, got '" + s + "'");
  }
  if (used != s.size()) {
    throw ParseError(where + ": expected a number, got '" + s + "'");
  }
  return v;
}

inline long to_long(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    throw ParseError(where + ": expected an integer, got '" + s + "'");
  }
  if (used != s.size()) {
    throw ParseError(where + ": expected an integer, got '" + s + "'");
  }
  return v;
}

}  // namespace detail

/// Parse .node and .ele streams. `node_name`/`ele_name` label error messages.
inline TriMesh read_triangle_format(std::istream& node_in, std::istream& ele_in,
                                    const std::string& node_name = "<node>",
                                    const std::string& ele_name = "<ele>") {
  std::vector<std::string> tok;
  int line = 0;
  auto where = [&](const std::string& file) {
    return file + ":" + std::to_string(line);
  };

  if (!detail::next_record(node_in, tok, line)) {
    throw ParseError(node_name + ": empty file");
  }
  if (tok.size() < 2) throw ParseError(where(node_name) + ": bad header");
  const long n = detail::to_long(tok[0], where(node_name));
  const long dim = detail::to_long(tok[1], where(node_name));
  const long n_attr = tok.size() > 2 ? detail::to_long(tok[2], where(node_name)) : 0;
  const long n_mark = tok.size() > 3 ? detail::to_long(tok[3], where(node_name)) : 0;
  if (n <= 0 || dim != 2 || n_attr < 0 || n_mark < 0 || n_mark > 1) {
    throw ParseError(where(node_name) + ": bad header");
  }

  std::vector<Point> nodes(static_cast<std::size_t>(n));
  std::vector<bool> flags(static_cast<std::size_t>(n), false);
  long base = 0;
  for (long k = 0; k < n; ++k) {
    if (!detail::next_record(node_in, tok, line)) {
      throw ParseError(node_name + ": expected " + std::to_string(n) +
                       " nodes, found " + std::to_string(k));
    }
    if (static_cast<long>(tok.size()) < 3 + n_attr + n_mark) {
      throw ParseError(where(node_name) + ": too few fields");
    }
    const long idx = detail::to_long(tok[0], where(node_name));
    if (k == 0) {
      if (idx != 0 && idx != 1) {
        throw ParseError(where(node_name) + ": first index must be 0 or 1");
      }
      base = idx;
    }
    if (idx != k + base) {
      throw ParseError(where(node_name) + ": node index " + std::to_string(idx) +
                       " out of sequence");
    }
    nodes[k] = {detail::to_double(tok[1], where(node_name)),
                detail::to_double(tok[2], where(node_name))};
    if (n_mark == 1) {
      flags[k] = detail::to_long(tok[3 + n_attr], where(node_name)) != 0;
    }
  }

  line = 0;
  if (!detail::next_record(ele_in, tok, line)) {
    throw ParseError(ele_name + ": empty file");
  }
  if (tok.size() < 2) throw ParseError(where(ele_name) + ": bad header");
  const long t = detail::to_long(tok[0], where(ele_name));
  const long corners = detail::to_long(tok[1], where(ele_name));
  if (t <= 0 || corners != 3) throw ParseError(where(ele_name) + ": bad header");

  std::vector<Triangle> tris(static_cast<std::size_t>(t));
  for (long k = 0; k < t; ++k) {
    if (!detail::next_record(ele_in, tok, line)) {
      throw ParseError(ele_name + ": expected " + std::to_string(t) +
                       " triangles, found " + std::to_string(k));
    }
    if (tok.size() < 4) throw ParseError(where(ele_name) + ": too few fields");
    for (int c = 0; c < 3; ++c) {
      const long v = detail::to_long(tok[1 + c], where(ele_name)) - base;
      if (v < 0 || v >= n) {
        throw ParseError(where(ele_name) + ": node " +
                         std::to_string(v + base) + " out of range (" +
                         std::to_string(n) + " nodes)");
      }
      tris[k][c] = static_cast<int>(v);
    }
  }

  try {
    if (n_mark == 1) return make_mesh(std::move(nodes), std::move(tris), flags);
    return make_mesh(std::move(nodes), std::move(tris));
  } catch (const InvalidParameter& e) {
    throw ParseError(node_name + ": " + e.what());
  }
}

inline TriMesh load_triangle_format(const std::filesystem::path& node_file,
                                    const std::filesystem::path& ele_file) {
  std::ifstream node_in(node_file);
  if (!node_in) throw ParseError("cannot open " + node_file.string());
  std::ifstream ele_in(ele_file);
  if (!ele_in) throw ParseError("cannot open " + ele_file.string());
  return read_triangle_format(node_in, ele_in, node_file.string(),
                              ele_file.string());
}

/// Write 1-based files with boundary markers, full round-trip precision.
inline void write_triangle_format(const TriMesh& mesh, std::ostream& node_out,
                                  std::ostream& ele_out) {
  node_out << mesh.node_count() << " 2 0 1\n";
  node_out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < mesh.node_count(); ++i) {
    node_out << i + 1 << ' ' << mesh.nodes[i].x << ' ' << mesh.nodes[i].y << ' '
             << (mesh.boundary[i] ? 1 : 0) << '\n';
  }
  ele_out << mesh.triangle_count() << " 3 0\n";
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const auto& t = mesh.triangles[k];
    ele_out << k + 1 << ' ' << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1
            << '\n';
  }
}

inline void save_triangle_format(const TriMesh& mesh,
                                 const std::filesystem::path& node_file,
                                 const std::filesystem::path& ele_file) {
  std::ofstream node_out(node_file);
  std::ofstream ele_out(ele_file);
  if (!node_out || !ele_out) {
    throw ParseError("cannot write " + node_file.string() + " / " +
                     ele_file.string());
  }
  write_triangle_format(mesh, node_out, ele_out);
}

}  // namespace fracpos

#endif  // FRACPOS_MESH_IO_HPP
