#include "zipr/obj_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace zipr {

namespace {

int parse_index(const std::string& token, int num_vertices, int line_no) {
  const std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    size_t used = 0;
    idx = std::stoi(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw Error("parse_error", "line " + std::to_string(line_no) + ": bad face index '" + token + "'");
  }
  if (idx < 0) idx = num_vertices + idx + 1;
  if (idx < 1 || idx > num_vertices)
    throw Error("parse_error", "line " + std::to_string(line_no) + ": face index out of range");
  return idx - 1;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

SurfaceMesh parse_obj(std::istream& in) {
  std::vector<Vec3> positions;
  std::vector<Tri> faces;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z()))
        throw Error("parse_error", "line " + std::to_string(line_no) + ": malformed vertex");
      positions.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) idx.push_back(parse_index(tok, static_cast<int>(positions.size()), line_no));
      if (idx.size() != 3)
        throw Error("non_triangular_face", "line " + std::to_string(line_no) + ": non-triangular face");
      faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  if (faces.empty()) throw Error("parse_error", "no faces in OBJ input");
  return SurfaceMesh(std::move(positions), std::move(faces));
}

SurfaceMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path);
  return parse_obj(in);
}

void write_obj(std::ostream& out, const std::vector<Vec3>& positions, const std::vector<Tri>& faces) {
  for (const Vec3& p : positions)
    out << "v " << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  for (const Tri& t : faces) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void write_obj(const std::string& path, const std::vector<Vec3>& positions, const std::vector<Tri>& faces) {
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write " + path);
  write_obj(out, positions, faces);
}

void write_obj(const std::string& path, const SurfaceMesh& mesh) { write_obj(path, mesh.positions(), mesh.faces()); }

void write_polyline_obj(const std::string& path, const std::vector<Vec3>& points) {
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write " + path);
  for (const Vec3& p : points)
    out << "v " << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  if (points.size() >= 2) {
    out << 'l';
    for (size_t i = 0; i < points.size(); ++i) out << ' ' << i + 1;
    out << '\n';
  }
}

}  // namespace zipr
